//! One-dimensional meshes with affine element maps onto `[-1, 1]`.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MeshError {
    #[error("a mesh needs at least one element")]
    NoElements,
    #[error("interval ({a}, {b}) is empty or reversed")]
    BadInterval { a: f64, b: f64 },
    #[error("vertices must be finite and strictly increasing (violated at index {0})")]
    NotIncreasing(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    vertices: Vec<f64>,
}

impl Mesh1D {
    pub fn uniform(a: f64, b: f64, n: usize) -> Result<Self, MeshError> {
        if n == 0 {
            return Err(MeshError::NoElements);
        }
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(MeshError::BadInterval { a, b });
        }
        let h = (b - a) / n as f64;
        let mut vertices: Vec<f64> = (0..=n).map(|i| a + i as f64 * h).collect();
        vertices[n] = b;
        Ok(Self { vertices })
    }

    pub fn from_vertices(vertices: Vec<f64>) -> Result<Self, MeshError> {
        if vertices.len() < 2 {
            return Err(MeshError::NoElements);
        }
        for (i, w) in vertices.windows(2).enumerate() {
            if !(w[0] < w[1]) || !w[0].is_finite() || !w[1].is_finite() {
                return Err(MeshError::NotIncreasing(i + 1));
            }
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[f64] {
        &self.vertices
    }

    pub fn n_elements(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn left(&self) -> f64 {
        self.vertices[0]
    }

    pub fn right(&self) -> f64 {
        self.vertices[self.vertices.len() - 1]
    }

    /// Endpoints of element `j` (zero-based).
    pub fn element(&self, j: usize) -> (f64, f64) {
        (self.vertices[j], self.vertices[j + 1])
    }

    pub fn width(&self, j: usize) -> f64 {
        self.vertices[j + 1] - self.vertices[j]
    }

    pub fn h_max(&self) -> f64 {
        (0..self.n_elements())
            .map(|j| self.width(j))
            .fold(0.0, f64::max)
    }

    pub fn h_min(&self) -> f64 {
        (0..self.n_elements())
            .map(|j| self.width(j))
            .fold(f64::INFINITY, f64::min)
    }

    /// `h / min_j h_j`.
    pub fn regularity_ratio(&self) -> f64 {
        self.h_max() / self.h_min()
    }

    /// Reference coordinate of `x` in element `j` and the derivative scale
    /// `dξ/dx = 2 / h_j`.
    pub fn to_reference(&self, j: usize, x: f64) -> (f64, f64) {
        let (xl, xr) = self.element(j);
        let h = xr - xl;
        (2.0 * (x - xl) / h - 1.0, 2.0 / h)
    }

    pub fn to_physical(&self, j: usize, xi: f64) -> f64 {
        let (xl, xr) = self.element(j);
        xl + 0.5 * (xi + 1.0) * (xr - xl)
    }

    /// Index of the element containing `x`; points on an interior vertex
    /// belong to the element on their right, `b` to the last element.
    pub fn locate(&self, x: f64) -> Option<usize> {
        if x < self.left() || x > self.right() {
            return None;
        }
        let idx = self.vertices.partition_point(|&v| v <= x);
        Some(idx.saturating_sub(1).min(self.n_elements() - 1))
    }
}
