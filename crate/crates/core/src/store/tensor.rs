use std::fs::File;
use std::path::{Path, PathBuf};

use half::f16;
use memmap2::Mmap;

use super::StoreError;
use crate::npy::{self, ElementType, TensorFileHeader};

/// A memory-mapped NPY tensor whose leading axis indexes items.
#[derive(Debug)]
pub(crate) struct MappedTensor {
    path: PathBuf,
    map: Mmap,
    header: TensorFileHeader,
    element: ElementType,
    row_len: usize,
}

impl MappedTensor {
    /// Map `path` and check it is a C-order tensor of shape `expected` with element type `element`.
    pub(crate) fn open(
        path: &Path,
        element: ElementType,
        expected: &[usize],
    ) -> Result<Self, StoreError> {
        let file = File::open(path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                StoreError::MissingFile(path.to_path_buf())
            } else {
                StoreError::io(path, e)
            }
        })?;
        // SAFETY: the store treats its tensor files as immutable while open.
        let map = unsafe { Mmap::map(&file) }.map_err(|e| StoreError::io(path, e))?;
        let header = npy::parse_npy_header(&map).map_err(|e| StoreError::npy(path, e))?;

        if header.fortran_order {
            return Err(StoreError::FortranOrder(path.to_path_buf()));
        }
        if header.element_type() != Some(element) {
            return Err(StoreError::DtypeMismatch {
                file: path.to_path_buf(),
                expected: element.descr().to_string(),
                found: header.dtype_code.clone(),
            });
        }
        if header.shape != expected {
            return Err(StoreError::ShapeMismatch {
                file: path.to_path_buf(),
                expected: expected.to_vec(),
                found: header.shape.clone(),
            });
        }
        npy::payload(&header, &map).map_err(|e| StoreError::npy(path, e))?;

        let row_len = expected[1..].iter().product();
        Ok(Self {
            path: path.to_path_buf(),
            map,
            header,
            element,
            row_len,
        })
    }

    /// Width of the innermost axis.
    pub(crate) fn last_dim(&self) -> usize {
        self.header.shape.last().copied().unwrap_or(1)
    }

    pub(crate) fn path(&self) -> &Path {
        &self.path
    }

    fn payload(&self) -> &[u8] {
        &self.map[self.header.data_offset..]
    }

    fn range(&self, row: usize) -> std::ops::Range<usize> {
        row * self.row_len..(row + 1) * self.row_len
    }

    /// Borrow row `row` as `f32`, widening into `scratch` when the file holds `f16`.
    pub(crate) fn row<'s>(&'s self, row: usize, scratch: &'s mut Vec<f32>) -> &'s [f32] {
        let range = self.range(row);
        match self.element {
            ElementType::F32 => &self.f32_elements()[range],
            ElementType::F16 => {
                scratch.clear();
                scratch.extend(self.f16_elements()[range].iter().map(|v| v.to_f32()));
                scratch
            }
        }
    }

    fn f32_elements(&self) -> &[f32] {
        if cfg!(target_endian = "little") {
            bytemuck::cast_slice(self.payload())
        } else {
            unimplemented!("big-endian hosts are not supported")
        }
    }

    fn f16_elements(&self) -> &[f16] {
        bytemuck::cast_slice(self.payload())
    }
}
