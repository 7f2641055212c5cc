//! Seeded synthetic representations and stores.
//!
//! Every row is derived from `(seed, kind, index)` alone, so a store can be
//! streamed to disk without holding it in memory and any row can be
//! regenerated later to check what was written.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::repr::{Dims, Representation};
use crate::store::{
    write_store, DescriptionEntry, Dtype, ImageEntry, ItemKind, StoreError, StoreManifest,
};

/// Uniform components in [-1, 1); never the zero vector in practice.
pub fn random_representation<R: Rng + ?Sized>(rng: &mut R, dims: Dims) -> Representation {
    let global = (0..dims.global).map(|_| rng.random_range(-1.0f32..1.0)).collect();
    let locals = (0..dims.local_len())
        .map(|_| rng.random_range(-1.0f32..1.0))
        .collect();
    Representation::new(global, locals, dims.local)
}

/// RNG for one row of a synthetic store.
pub fn row_rng(seed: u64, kind: ItemKind, index: usize) -> ChaCha8Rng {
    let tag = match kind {
        ItemKind::Image => 0x1111_u64,
        ItemKind::Description => 0x2222_u64,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ tag.rotate_left(48));
    rng.set_stream(index as u64);
    rng
}

/// The representation a synthetic store holds at `(kind, index)`.
pub fn synth_representation(seed: u64, kind: ItemKind, index: usize, dims: Dims) -> Representation {
    random_representation(&mut row_rng(seed, kind, index), dims)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub images: usize,
    pub descriptions_per_image: usize,
    pub dims: Dims,
    pub dtype: Dtype,
    pub seed: u64,
}

impl SynthSpec {
    pub fn new(images: usize, dims: Dims, seed: u64) -> Self {
        Self {
            images,
            descriptions_per_image: 1,
            dims,
            dtype: Dtype::Float32,
            seed,
        }
    }

    pub fn image_id(index: usize) -> String {
        format!("i{index:06}")
    }

    pub fn description_id(index: usize) -> String {
        format!("d{index:07}")
    }

    pub fn manifest(&self) -> StoreManifest {
        let images = (0..self.images)
            .map(|i| ImageEntry {
                id: Self::image_id(i),
                uri: Some(format!("images/{}.jpg", Self::image_id(i))),
            })
            .collect();
        let descriptions = (0..self.images * self.descriptions_per_image)
            .map(|d| DescriptionEntry {
                id: Self::description_id(d),
                text: format!("synthetic description {d}"),
                image: Self::image_id(d / self.descriptions_per_image.max(1)),
            })
            .collect();
        StoreManifest {
            dims: self.dims,
            dtype: self.dtype,
            files: Default::default(),
            images,
            descriptions,
        }
    }

    /// Write the store to `dir` and return the manifest path.
    pub fn write(&self, dir: &Path) -> Result<PathBuf, StoreError> {
        write_store(dir, &self.manifest(), |kind, i| {
            synth_representation(self.seed, kind, i, self.dims)
        })
    }
}
