use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{AlbumGallery, ReprStore, StoreError};
use crate::repr::Representation;

/// Gallery scoping for retrieval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GalleryMode {
    /// A user's private uploads.
    Album,
    /// The shared precomputed corpus.
    Boon,
    /// Live web-search results, re-ranked per query.
    Google,
}

impl GalleryMode {
    pub const ALL: [GalleryMode; 3] = [Self::Album, Self::Boon, Self::Google];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Album => "album",
            Self::Boon => "boon",
            Self::Google => "google",
        }
    }
}

impl fmt::Display for GalleryMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GalleryMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown gallery mode {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GalleryInfo {
    pub mode: GalleryMode,
    pub owner: Option<String>,
    pub item_count: usize,
    pub capacity: Option<usize>,
}

/// A gallery as a write target.
#[derive(Debug, Clone, Copy)]
pub enum GalleryRef<'a> {
    Album(&'a AlbumGallery),
    Boon(&'a ReprStore),
    Google,
}

impl GalleryRef<'_> {
    pub fn mode(&self) -> GalleryMode {
        match self {
            Self::Album(_) => GalleryMode::Album,
            Self::Boon(_) => GalleryMode::Boon,
            Self::Google => GalleryMode::Google,
        }
    }

    pub fn info(&self) -> GalleryInfo {
        match self {
            Self::Album(album) => album.info(),
            Self::Boon(store) => GalleryInfo {
                mode: GalleryMode::Boon,
                owner: None,
                item_count: store.image_count(),
                capacity: None,
            },
            Self::Google => GalleryInfo {
                mode: GalleryMode::Google,
                owner: None,
                item_count: 0,
                capacity: None,
            },
        }
    }
}

/// Add one item to a writable gallery and return its fresh id.
///
/// Only Album galleries accept writes; the shared corpus is read-only and
/// web results are never persisted.
pub fn ingest_item(
    gallery: GalleryRef<'_>,
    payload_uri: &str,
    representation: Representation,
    links: Vec<String>,
) -> Result<String, StoreError> {
    match gallery {
        GalleryRef::Album(album) => album.ingest(payload_uri, representation, links),
        other => Err(StoreError::ReadOnlyGallery(other.mode())),
    }
}
