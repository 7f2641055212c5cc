//! Cross-modal retrieval engine.
//!
//! Text-to-image and image-to-text search over precomputed global + local
//! representations, re-ranking of web image results, and conversation about
//! images grounded by retrieved descriptions. Every neural model sits behind
//! a provider trait with a deterministic mock.

pub mod center;
pub mod eval;
pub mod npy;
pub mod providers;
pub mod repr;
pub mod similarity;
pub mod store;
pub mod synth;

pub use repr::{Dims, ReprView, Representation};
pub use similarity::{
    cosine, fused_score, local_score, rank, CandidateList, Candidates, RankedResult,
    ReferenceScorer, Scorer, ScorerConfig, SimilarityError,
};
pub use store::{
    ingest_item, AlbumGallery, AlbumItem, AlbumSnapshot, DescriptionEntry, GalleryInfo,
    GalleryMode, GalleryRef, ImageEntry, ItemKind, ReprStore, StoreError, StoreManifest,
    StoreWriter, DEFAULT_ALBUM_CAPACITY,
};
