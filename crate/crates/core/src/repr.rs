//! Global + local representations of a single item.

use serde::{Deserialize, Serialize};

/// Dimensions every representation in a store shares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims {
    /// Length of the global vector.
    pub global: usize,
    /// Width of each local vector.
    pub local: usize,
    /// Number of local vectors per item.
    pub locals_per_item: usize,
}

impl Dims {
    pub const fn new(global: usize, local: usize, locals_per_item: usize) -> Self {
        Self {
            global,
            local,
            locals_per_item,
        }
    }

    /// Number of scalars in the flattened local matrix.
    pub const fn local_len(&self) -> usize {
        self.local * self.locals_per_item
    }
}

impl Default for Dims {
    /// 768-wide globals and 200 locals of width 256.
    fn default() -> Self {
        Self::new(768, 256, 200)
    }
}

/// An owned representation: one global vector plus a row-major local matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Representation {
    pub global: Vec<f32>,
    /// Row-major `rows x local_dim`.
    pub locals: Vec<f32>,
    pub local_dim: usize,
}

impl Representation {
    pub fn new(global: Vec<f32>, locals: Vec<f32>, local_dim: usize) -> Self {
        Self {
            global,
            locals,
            local_dim,
        }
    }

    /// Build from a list of local rows. Returns `None` when rows have uneven widths.
    pub fn from_rows(global: Vec<f32>, rows: &[Vec<f32>]) -> Option<Self> {
        let local_dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != local_dim) {
            return None;
        }
        let locals = rows.iter().flatten().copied().collect();
        Some(Self::new(global, locals, local_dim))
    }

    pub fn local_rows(&self) -> usize {
        self.locals.len().checked_div(self.local_dim).unwrap_or(0)
    }

    pub fn dims(&self) -> Dims {
        Dims::new(self.global.len(), self.local_dim, self.local_rows())
    }

    pub fn is_finite(&self) -> bool {
        self.global.iter().chain(&self.locals).all(|v| v.is_finite())
    }

    pub fn view(&self) -> ReprView<'_> {
        ReprView {
            global: &self.global,
            locals: &self.locals,
            local_dim: self.local_dim,
        }
    }

    /// Multiply every component by `factor`.
    pub fn scaled(&self, factor: f32) -> Self {
        Self {
            global: self.global.iter().map(|v| v * factor).collect(),
            locals: self.locals.iter().map(|v| v * factor).collect(),
            local_dim: self.local_dim,
        }
    }
}

/// Borrowed representation, either from an owned [`Representation`] or a store row.
#[derive(Debug, Clone, Copy)]
pub struct ReprView<'a> {
    pub global: &'a [f32],
    pub locals: &'a [f32],
    pub local_dim: usize,
}

impl<'a> ReprView<'a> {
    pub fn local_rows(&self) -> usize {
        self.locals.len().checked_div(self.local_dim).unwrap_or(0)
    }

    pub fn local_row(&self, row: usize) -> &'a [f32] {
        &self.locals[row * self.local_dim..(row + 1) * self.local_dim]
    }

    pub fn to_owned(&self) -> Representation {
        Representation::new(self.global.to_vec(), self.locals.to_vec(), self.local_dim)
    }
}
