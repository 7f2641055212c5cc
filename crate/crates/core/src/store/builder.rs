use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use half::f16;

use super::{DescriptionEntry, Dtype, ImageEntry, ItemKind, StoreError, StoreManifest};
use crate::npy::{self, ElementType};
use crate::repr::{Dims, Representation};

/// Stream a store to `dir`: the manifest plus its four tensors.
///
/// `row` is called once per item, images first, and must return a
/// representation with the manifest's dims. Memory use is one row at a time.
pub fn write_store(
    dir: &Path,
    manifest: &StoreManifest,
    mut row: impl FnMut(ItemKind, usize) -> Representation,
) -> Result<PathBuf, StoreError> {
    fs::create_dir_all(dir).map_err(|e| StoreError::io(dir, e))?;
    let dims = manifest.dims;
    let element = ElementType::from(manifest.dtype);
    let files = &manifest.files;
    let sides = [
        (
            ItemKind::Image,
            manifest.images.len(),
            &files.image_global,
            &files.image_local,
        ),
        (
            ItemKind::Description,
            manifest.descriptions.len(),
            &files.description_global,
            &files.description_local,
        ),
    ];
    for (kind, count, global_file, local_file) in sides {
        let global_path = dir.join(global_file);
        let local_path = dir.join(local_file);
        let mut global = TensorSink::create(&global_path, element, &[count, dims.global])?;
        let mut local = TensorSink::create(
            &local_path,
            element,
            &[count, dims.locals_per_item, dims.local],
        )?;
        for i in 0..count {
            let repr = row(kind, i);
            if repr.dims() != dims {
                return Err(StoreError::DimMismatch {
                    expected: dims,
                    found: repr.dims(),
                });
            }
            global.push(&repr.global)?;
            local.push(&repr.locals)?;
        }
        global.finish()?;
        local.finish()?;
    }

    let manifest_path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    fs::write(&manifest_path, text).map_err(|e| StoreError::io(&manifest_path, e))?;
    Ok(manifest_path)
}

struct TensorSink {
    path: PathBuf,
    element: ElementType,
    out: BufWriter<File>,
}

impl TensorSink {
    fn create(path: &Path, element: ElementType, shape: &[usize]) -> Result<Self, StoreError> {
        let file = File::create(path).map_err(|e| StoreError::io(path, e))?;
        let mut out = BufWriter::with_capacity(1 << 20, file);
        out.write_all(&npy::encode_header(element, shape))
            .map_err(|e| StoreError::io(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            element,
            out,
        })
    }

    fn push(&mut self, values: &[f32]) -> Result<(), StoreError> {
        let res = match self.element {
            ElementType::F32 => values
                .iter()
                .try_for_each(|v| self.out.write_all(&v.to_le_bytes())),
            ElementType::F16 => values
                .iter()
                .try_for_each(|v| self.out.write_all(&f16::from_f32(*v).to_bits().to_le_bytes())),
        };
        res.map_err(|e| StoreError::io(&self.path, e))
    }

    fn finish(mut self) -> Result<(), StoreError> {
        self.out.flush().map_err(|e| StoreError::io(&self.path, e))
    }
}

/// Collects items in memory and writes them as a store.
#[derive(Debug, Clone)]
pub struct StoreWriter {
    dims: Dims,
    dtype: Dtype,
    images: Vec<(ImageEntry, Representation)>,
    descriptions: Vec<(DescriptionEntry, Representation)>,
}

impl StoreWriter {
    pub fn new(dims: Dims) -> Self {
        Self {
            dims,
            dtype: Dtype::Float32,
            images: Vec::new(),
            descriptions: Vec::new(),
        }
    }

    pub fn dtype(mut self, dtype: Dtype) -> Self {
        self.dtype = dtype;
        self
    }

    fn check(&self, repr: &Representation) -> Result<(), StoreError> {
        if repr.dims() == self.dims {
            Ok(())
        } else {
            Err(StoreError::DimMismatch {
                expected: self.dims,
                found: repr.dims(),
            })
        }
    }

    pub fn add_image(
        &mut self,
        id: impl Into<String>,
        uri: Option<String>,
        repr: Representation,
    ) -> Result<&mut Self, StoreError> {
        self.check(&repr)?;
        self.images.push((ImageEntry { id: id.into(), uri }, repr));
        Ok(self)
    }

    pub fn add_description(
        &mut self,
        id: impl Into<String>,
        text: impl Into<String>,
        image: impl Into<String>,
        repr: Representation,
    ) -> Result<&mut Self, StoreError> {
        self.check(&repr)?;
        self.descriptions.push((
            DescriptionEntry {
                id: id.into(),
                text: text.into(),
                image: image.into(),
            },
            repr,
        ));
        Ok(self)
    }

    pub fn manifest(&self) -> StoreManifest {
        StoreManifest {
            dims: self.dims,
            dtype: self.dtype,
            files: Default::default(),
            images: self.images.iter().map(|(e, _)| e.clone()).collect(),
            descriptions: self.descriptions.iter().map(|(e, _)| e.clone()).collect(),
        }
    }

    /// Write to `dir` and return the manifest path.
    pub fn write(&self, dir: &Path) -> Result<PathBuf, StoreError> {
        write_store(dir, &self.manifest(), |kind, i| match kind {
            ItemKind::Image => self.images[i].1.clone(),
            ItemKind::Description => self.descriptions[i].1.clone(),
        })
    }
}
