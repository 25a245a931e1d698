//! Grid-sampled complex scalar fields.

use crate::prelude::*;

/// Complex scalar sampled on every node of a [`Grid`].
///
/// Storage is row-major over t then x: the sample at `(x_i, t_j)` lives at
/// `values[j * nx + i]`, so an x-line at fixed t is contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: Grid,
    values: Vec<Cpx>,
}

/// Finiteness summary of a field; non-finite samples are reported, never
/// silently carried into norms or classifications.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldStatus {
    Finite,
    Singular { count: usize },
}

impl ComplexField {
    pub fn zeros(grid: Grid) -> ComplexField {
        ComplexField {
            grid,
            values: vec![Cpx::new(0.0, 0.0); grid.nx() * grid.nt()],
        }
    }

    pub fn constant(grid: Grid, c: Cpx) -> ComplexField {
        ComplexField {
            grid,
            values: vec![c; grid.nx() * grid.nt()],
        }
    }

    /// Sample `f(x, t)` at every node.
    pub fn from_fn(grid: Grid, mut f: impl FnMut(f64, f64) -> Cpx) -> ComplexField {
        let mut values = Vec::with_capacity(grid.nx() * grid.nt());
        for j in 0..grid.nt() {
            let t = grid.t(j);
            for i in 0..grid.nx() {
                values.push(f(grid.x(i), t));
            }
        }
        ComplexField { grid, values }
    }

    pub fn from_values(grid: Grid, values: Vec<Cpx>) -> Result<ComplexField> {
        if values.len() != grid.nx() * grid.nt() {
            return Err(AbError::Dimension(format!(
                "value buffer has {} samples, grid needs {}",
                values.len(),
                grid.nx() * grid.nt()
            )));
        }
        Ok(ComplexField { grid, values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Cpx] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Cpx] {
        &mut self.values
    }

    #[inline]
    pub fn idx(&self, ix: usize, jt: usize) -> usize {
        debug_assert!(ix < self.grid.nx() && jt < self.grid.nt());
        jt * self.grid.nx() + ix
    }

    #[inline]
    pub fn at(&self, ix: usize, jt: usize) -> Cpx {
        self.values[self.idx(ix, jt)]
    }

    #[inline]
    pub fn set(&mut self, ix: usize, jt: usize, v: Cpx) {
        let k = self.idx(ix, jt);
        self.values[k] = v;
    }

    /// Contiguous x-line at fixed t.
    pub fn t_slice(&self, jt: usize) -> &[Cpx] {
        let nx = self.grid.nx();
        &self.values[jt * nx..(jt + 1) * nx]
    }

    pub fn map(&self, mut f: impl FnMut(Cpx) -> Cpx) -> ComplexField {
        ComplexField {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &ComplexField, mut f: impl FnMut(Cpx, Cpx) -> Cpx) -> ComplexField {
        assert_eq!(self.grid, other.grid, "field grids must match");
        ComplexField {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn status(&self) -> FieldStatus {
        let count = self.values.iter().filter(|v| !v.is_finite()).count();
        if count == 0 {
            FieldStatus::Finite
        } else {
            FieldStatus::Singular { count }
        }
    }

    /// Max modulus over the whole grid (non-finite samples skipped).
    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .filter(|v| v.is_finite())
            .fold(0.0, |m, v| m.max(v.norm()))
    }

    /// Max modulus over the interior, excluding `band` nodes at each edge.
    pub fn max_abs_interior(&self, band: usize) -> f64 {
        let (nx, nt) = (self.grid.nx(), self.grid.nt());
        let mut m = 0.0f64;
        for j in band..nt - band {
            for i in band..nx - band {
                let v = self.at(i, j);
                if v.is_finite() {
                    m = m.max(v.norm());
                }
            }
        }
        m
    }

    /// Discrete L2 norm `sqrt(sum |f|^2 hx ht)`.
    pub fn l2_norm(&self) -> f64 {
        let w = self.grid.hx() * self.grid.ht();
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * w).sqrt()
    }

    /// Root-mean-square modulus over the interior, excluding `band` edge nodes.
    pub fn rms_interior(&self, band: usize) -> f64 {
        let (nx, nt) = (self.grid.nx(), self.grid.nt());
        let mut sum = 0.0;
        let mut n = 0usize;
        for j in band..nt - band {
            for i in band..nx - band {
                sum += self.at(i, j).norm_sqr();
                n += 1;
            }
        }
        (sum / n as f64).sqrt()
    }

    pub fn conj(&self) -> ComplexField {
        self.map(|v| v.conj())
    }

    pub fn scale(&self, s: Cpx) -> ComplexField {
        self.map(|v| s * v)
    }

    pub fn add(&self, other: &ComplexField) -> ComplexField {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ComplexField) -> ComplexField {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &ComplexField) -> ComplexField {
        self.zip_with(other, |a, b| a * b)
    }

    /// `|f|^2` as a (real-valued) field.
    pub fn norm_sqr_field(&self) -> ComplexField {
        self.map(|v| Cpx::new(v.norm_sqr(), 0.0))
    }

    /// Largest |Im f| over the grid; a cheap real-valuedness check.
    pub fn max_abs_imag(&self) -> f64 {
        self.values
            .iter()
            .filter(|v| v.is_finite())
            .fold(0.0, |m, v| m.max(v.im.abs()))
    }
}
