use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};

use super::{GalleryInfo, GalleryMode, StoreError};
use crate::npy;
use crate::repr::{Dims, ReprView, Representation};
use crate::similarity::{Candidates, RowScratch};

pub const DEFAULT_ALBUM_CAPACITY: usize = 500;

const INDEX_FILE: &str = "index.json";
const ITEMS_DIR: &str = "items";

#[derive(Debug, Clone)]
pub struct AlbumItem {
    pub id: String,
    pub uri: String,
    pub links: Vec<String>,
    pub representation: Arc<Representation>,
}

/// Point-in-time view of an album. Never changes once handed out.
#[derive(Debug, Clone, Default)]
pub struct AlbumSnapshot {
    items: Vec<AlbumItem>,
}

impl AlbumSnapshot {
    pub fn items(&self) -> &[AlbumItem] {
        &self.items
    }

    pub fn get(&self, id: &str) -> Option<&AlbumItem> {
        // ids are issued in increasing order
        self.items
            .binary_search_by(|item| item.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.items[i])
    }
}

impl Candidates for AlbumSnapshot {
    fn len(&self) -> usize {
        self.items.len()
    }

    fn id(&self, index: usize) -> &str {
        &self.items[index].id
    }

    fn view<'s>(&'s self, index: usize, _scratch: &'s mut RowScratch) -> ReprView<'s> {
        self.items[index].representation.view()
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct IndexEntry {
    id: String,
    uri: String,
    #[serde(default)]
    links: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct AlbumIndex {
    dims: Dims,
    capacity: usize,
    owner: Option<String>,
    next_seq: u64,
    items: Vec<IndexEntry>,
}

/// A user's private, capacity-limited gallery persisted under one directory.
///
/// Writes are serialized through a single writer lock; the on-disk index is
/// replaced atomically and only then is the in-memory snapshot swapped, so
/// readers never see a partially written item.
#[derive(Debug)]
pub struct AlbumGallery {
    dir: PathBuf,
    dims: Dims,
    capacity: usize,
    owner: Option<String>,
    next_seq: Mutex<u64>,
    snapshot: RwLock<Arc<AlbumSnapshot>>,
}

impl AlbumGallery {
    /// Open the album in `dir`, creating an empty one if none exists.
    pub fn open_or_create(
        dir: impl Into<PathBuf>,
        dims: Dims,
        capacity: usize,
        owner: Option<String>,
    ) -> Result<Self, StoreError> {
        let dir = dir.into();
        let index_path = dir.join(INDEX_FILE);
        if !index_path.exists() {
            fs::create_dir_all(dir.join(ITEMS_DIR)).map_err(|e| StoreError::io(&dir, e))?;
            let album = Self {
                dir,
                dims,
                capacity,
                owner,
                next_seq: Mutex::new(1),
                snapshot: RwLock::new(Arc::default()),
            };
            album.write_index(1, &[])?;
            return Ok(album);
        }

        let text = fs::read_to_string(&index_path).map_err(|e| StoreError::io(&index_path, e))?;
        let index: AlbumIndex = serde_json::from_str(&text).map_err(|e| StoreError::Manifest {
            path: index_path.clone(),
            message: e.to_string(),
        })?;
        if index.dims != dims {
            return Err(StoreError::DimMismatch {
                expected: dims,
                found: index.dims,
            });
        }
        let items = index
            .items
            .into_iter()
            .map(|entry| {
                let representation = Arc::new(read_item(&dir, &entry.id, dims)?);
                Ok(AlbumItem {
                    id: entry.id,
                    uri: entry.uri,
                    links: entry.links,
                    representation,
                })
            })
            .collect::<Result<Vec<_>, StoreError>>()?;

        Ok(Self {
            dir,
            dims,
            capacity,
            owner: index.owner,
            next_seq: Mutex::new(index.next_seq),
            snapshot: RwLock::new(Arc::new(AlbumSnapshot { items })),
        })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn snapshot(&self) -> Arc<AlbumSnapshot> {
        self.snapshot.read().expect("album lock poisoned").clone()
    }

    pub fn len(&self) -> usize {
        self.snapshot().items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn info(&self) -> GalleryInfo {
        GalleryInfo {
            mode: GalleryMode::Album,
            owner: self.owner.clone(),
            item_count: self.len(),
            capacity: Some(self.capacity),
        }
    }

    /// Persist one item. See [`super::ingest_item`].
    pub fn ingest(
        &self,
        payload_uri: &str,
        representation: Representation,
        links: Vec<String>,
    ) -> Result<String, StoreError> {
        if representation.dims() != self.dims {
            return Err(StoreError::DimMismatch {
                expected: self.dims,
                found: representation.dims(),
            });
        }
        let mut seq = self.next_seq.lock().expect("album lock poisoned");
        let current = self.snapshot();
        if current.items.len() >= self.capacity {
            return Err(StoreError::CapacityExceeded {
                capacity: self.capacity,
            });
        }
        let id = format!("a{:08}", *seq);
        write_item(&self.dir, &id, &representation)?;

        let mut items = current.items.clone();
        items.push(AlbumItem {
            id: id.clone(),
            uri: payload_uri.to_string(),
            links,
            representation: Arc::new(representation),
        });
        self.write_index(*seq + 1, &items)?;

        *seq += 1;
        *self.snapshot.write().expect("album lock poisoned") = Arc::new(AlbumSnapshot { items });
        Ok(id)
    }

    fn write_index(&self, next_seq: u64, items: &[AlbumItem]) -> Result<(), StoreError> {
        let index = AlbumIndex {
            dims: self.dims,
            capacity: self.capacity,
            owner: self.owner.clone(),
            next_seq,
            items: items
                .iter()
                .map(|item| IndexEntry {
                    id: item.id.clone(),
                    uri: item.uri.clone(),
                    links: item.links.clone(),
                })
                .collect(),
        };
        let bytes = serde_json::to_vec_pretty(&index).expect("index serializes");
        replace_file(&self.dir.join(INDEX_FILE), |w| w.write_all(&bytes))
    }
}

fn item_paths(dir: &Path, id: &str) -> (PathBuf, PathBuf) {
    let items = dir.join(ITEMS_DIR);
    (
        items.join(format!("{id}.global.npy")),
        items.join(format!("{id}.local.npy")),
    )
}

fn write_item(dir: &Path, id: &str, repr: &Representation) -> Result<(), StoreError> {
    let (global, local) = item_paths(dir, id);
    replace_file(&global, |w| {
        npy::write_npy_f32(w, &[repr.global.len()], &repr.global)
    })?;
    replace_file(&local, |w| {
        npy::write_npy_f32(w, &[repr.local_rows(), repr.local_dim], &repr.locals)
    })
}

fn read_item(dir: &Path, id: &str, dims: Dims) -> Result<Representation, StoreError> {
    let (global_path, local_path) = item_paths(dir, id);
    let read = |path: &Path, shape: &[usize]| -> Result<Vec<f32>, StoreError> {
        let bytes = fs::read(path).map_err(|e| StoreError::io(path, e))?;
        let arr = npy::read_npy(&bytes).map_err(|e| StoreError::npy(path, e))?;
        if arr.header.shape != shape {
            return Err(StoreError::ShapeMismatch {
                file: path.to_path_buf(),
                expected: shape.to_vec(),
                found: arr.header.shape,
            });
        }
        Ok(arr.data.to_f32())
    };
    let global = read(&global_path, &[dims.global])?;
    let locals = read(&local_path, &[dims.locals_per_item, dims.local])?;
    Ok(Representation::new(global, locals, dims.local))
}

/// Write to a sibling temp file and rename over `path`.
fn replace_file(
    path: &Path,
    fill: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<(), StoreError> {
    let tmp = path.with_extension("tmp");
    let result = (|| {
        let mut w = BufWriter::new(File::create(&tmp)?);
        fill(&mut w)?;
        w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        fs::rename(&tmp, path)
    })();
    result.map_err(|e| StoreError::io(path, e))
}
