//! Precomputed representation store.
//!
//! A store is a JSON manifest plus four NPY tensors: image globals
//! `(images, d_g)`, image locals `(images, n_l, d_l)`, description globals
//! `(descriptions, d_g)` and description locals `(descriptions, n_l, d_l)`.
//! Row `i` of each tensor belongs to the `i`-th entry of the matching manifest
//! list. Tensors are memory-mapped and never copied wholesale.

mod album;
mod builder;
mod gallery;
mod tensor;

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use album::{AlbumGallery, AlbumItem, AlbumSnapshot, DEFAULT_ALBUM_CAPACITY};
pub use builder::{write_store, StoreWriter};
pub use gallery::{ingest_item, GalleryInfo, GalleryMode, GalleryRef};

use crate::npy::{ElementType, NpyError};
use crate::repr::{Dims, ReprView, Representation};
use crate::similarity::{Candidates, RowScratch};
use tensor::MappedTensor;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("missing file {0}")]
    MissingFile(PathBuf),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Npy {
        path: PathBuf,
        #[source]
        source: NpyError,
    },
    #[error("{file}: shape {found:?} does not match manifest {expected:?}")]
    ShapeMismatch {
        file: PathBuf,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    #[error("{file}: dtype {found} does not match manifest {expected}")]
    DtypeMismatch {
        file: PathBuf,
        expected: String,
        found: String,
    },
    #[error("{0}: fortran-order tensors are not supported")]
    FortranOrder(PathBuf),
    #[error("duplicate item id {0:?}")]
    DuplicateId(String),
    #[error("description {description:?} links to unknown image {image:?}")]
    DanglingLink { description: String, image: String },
    #[error("unknown item {0:?}")]
    UnknownItem(String),
    #[error("representation of {0:?} contains non-finite values")]
    NonFinite(String),
    #[error("gallery is full ({capacity} items)")]
    CapacityExceeded { capacity: usize },
    #[error("{0} gallery is read-only")]
    ReadOnlyGallery(GalleryMode),
    #[error("representation dims {found:?} do not match gallery dims {expected:?}")]
    DimMismatch { expected: Dims, found: Dims },
}

impl StoreError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn npy(path: &Path, source: NpyError) -> Self {
        Self::Npy {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Which side of the store an item lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemKind {
    Image,
    Description,
}

/// Element type as spelled in the manifest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    Float16,
    #[default]
    Float32,
}

impl From<Dtype> for ElementType {
    fn from(d: Dtype) -> Self {
        match d {
            Dtype::Float16 => ElementType::F16,
            Dtype::Float32 => ElementType::F32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorFiles {
    pub image_global: PathBuf,
    pub image_local: PathBuf,
    pub description_global: PathBuf,
    pub description_local: PathBuf,
}

impl Default for TensorFiles {
    fn default() -> Self {
        Self {
            image_global: "imGloRp.npy".into(),
            image_local: "imLocRp.npy".into(),
            description_global: "deGloRp.npy".into(),
            description_local: "deLocRp.npy".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageEntry {
    pub id: String,
    /// Where the image payload can be fetched for display.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uri: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DescriptionEntry {
    pub id: String,
    pub text: String,
    /// Id of the image this description annotates.
    pub image: String,
}

/// Sidecar document mapping ids to tensor rows. Paths are relative to the manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreManifest {
    pub dims: Dims,
    #[serde(default)]
    pub dtype: Dtype,
    #[serde(default)]
    pub files: TensorFiles,
    pub images: Vec<ImageEntry>,
    pub descriptions: Vec<DescriptionEntry>,
}

impl StoreManifest {
    pub fn load(path: &Path) -> Result<Self, StoreError> {
        let text = fs::read_to_string(path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                StoreError::MissingFile(path.to_path_buf())
            } else {
                StoreError::io(path, e)
            }
        })?;
        serde_json::from_str(&text).map_err(|e| StoreError::Manifest {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

#[derive(Debug)]
struct Side {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    global: MappedTensor,
    local: MappedTensor,
}

/// Read-only handle over an opened store. Cheap to share behind an `Arc`.
#[derive(Debug)]
pub struct ReprStore {
    root: PathBuf,
    manifest: StoreManifest,
    images: Side,
    descriptions: Side,
    links: HashMap<String, String>,
}

fn index_ids<'a>(ids: impl Iterator<Item = &'a str>) -> Result<HashMap<String, usize>, StoreError> {
    let mut index = HashMap::new();
    for (row, id) in ids.enumerate() {
        if index.insert(id.to_string(), row).is_some() {
            return Err(StoreError::DuplicateId(id.to_string()));
        }
    }
    Ok(index)
}

impl ReprStore {
    /// Open the store described by the manifest at `manifest_path`.
    pub fn open(manifest_path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let manifest_path = manifest_path.as_ref();
        let manifest = StoreManifest::load(manifest_path)?;
        let root = manifest_path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default();

        let image_index = index_ids(manifest.images.iter().map(|e| e.id.as_str()))?;
        let description_index = index_ids(manifest.descriptions.iter().map(|e| e.id.as_str()))?;
        let mut links = HashMap::new();
        for d in &manifest.descriptions {
            if !image_index.contains_key(&d.image) {
                return Err(StoreError::DanglingLink {
                    description: d.id.clone(),
                    image: d.image.clone(),
                });
            }
            links.insert(d.id.clone(), d.image.clone());
        }

        let Dims {
            global,
            local,
            locals_per_item,
        } = manifest.dims;
        let element = ElementType::from(manifest.dtype);
        let open = |file: &Path, shape: &[usize]| MappedTensor::open(&root.join(file), element, shape);
        let (ni, nd) = (manifest.images.len(), manifest.descriptions.len());

        let images = Side {
            ids: manifest.images.iter().map(|e| e.id.clone()).collect(),
            index: image_index,
            global: open(&manifest.files.image_global, &[ni, global])?,
            local: open(&manifest.files.image_local, &[ni, locals_per_item, local])?,
        };
        let descriptions = Side {
            ids: manifest.descriptions.iter().map(|e| e.id.clone()).collect(),
            index: description_index,
            global: open(&manifest.files.description_global, &[nd, global])?,
            local: open(&manifest.files.description_local, &[nd, locals_per_item, local])?,
        };

        Ok(Self {
            root,
            manifest,
            images,
            descriptions,
            links,
        })
    }

    pub fn dims(&self) -> Dims {
        self.manifest.dims
    }

    pub fn manifest(&self) -> &StoreManifest {
        &self.manifest
    }

    /// Directory the manifest lives in; relative payload uris resolve against it.
    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn image_count(&self) -> usize {
        self.images.ids.len()
    }

    pub fn description_count(&self) -> usize {
        self.descriptions.ids.len()
    }

    fn side(&self, kind: ItemKind) -> &Side {
        match kind {
            ItemKind::Image => &self.images,
            ItemKind::Description => &self.descriptions,
        }
    }

    /// Row index of `id`, if present.
    pub fn row_of(&self, id: &str, kind: ItemKind) -> Option<usize> {
        self.side(kind).index.get(id).copied()
    }

    /// Copy out the representation stored for `id`.
    pub fn get_representation(
        &self,
        id: &str,
        kind: ItemKind,
    ) -> Result<Representation, StoreError> {
        let row = self
            .row_of(id, kind)
            .ok_or_else(|| StoreError::UnknownItem(id.to_string()))?;
        let mut scratch = RowScratch::default();
        let repr = self.candidates(kind).view(row, &mut scratch).to_owned();
        if !repr.is_finite() {
            return Err(StoreError::NonFinite(id.to_string()));
        }
        Ok(repr)
    }

    /// Image annotated by `description_id`.
    pub fn resolve_links(&self, description_id: &str) -> Result<&str, StoreError> {
        self.links
            .get(description_id)
            .map(String::as_str)
            .ok_or_else(|| StoreError::UnknownItem(description_id.to_string()))
    }

    pub fn image(&self, id: &str) -> Option<&ImageEntry> {
        self.row_of(id, ItemKind::Image)
            .map(|row| &self.manifest.images[row])
    }

    pub fn description(&self, id: &str) -> Option<&DescriptionEntry> {
        self.row_of(id, ItemKind::Description)
            .map(|row| &self.manifest.descriptions[row])
    }

    /// Ranking view over one side of the store.
    pub fn candidates(&self, kind: ItemKind) -> StoreCandidates<'_> {
        StoreCandidates {
            side: self.side(kind),
        }
    }

    /// Paths of the mapped tensors, for diagnostics.
    pub fn tensor_paths(&self) -> [&Path; 4] {
        [
            self.images.global.path(),
            self.images.local.path(),
            self.descriptions.global.path(),
            self.descriptions.local.path(),
        ]
    }
}

/// One side of a [`ReprStore`] exposed as a candidate set.
#[derive(Debug, Clone, Copy)]
pub struct StoreCandidates<'a> {
    side: &'a Side,
}

impl Candidates for StoreCandidates<'_> {
    fn len(&self) -> usize {
        self.side.ids.len()
    }

    fn id(&self, index: usize) -> &str {
        &self.side.ids[index]
    }

    fn view<'s>(&'s self, index: usize, scratch: &'s mut RowScratch) -> ReprView<'s> {
        let RowScratch { global, locals } = scratch;
        ReprView {
            global: self.side.global.row(index, global),
            locals: self.side.local.row(index, locals),
            local_dim: self.side.local.last_dim(),
        }
    }
}
