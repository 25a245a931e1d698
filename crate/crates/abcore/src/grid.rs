//! Uniform symmetric space-time lattice.

use crate::prelude::*;

/// Uniform grid on `[-X, X] x [-T, T]` with odd node counts, so that the
/// origin `(0, 0)` is exactly a node and every node has a mirror partner
/// under `(x, t) -> (-x, -t)`. Parity splitting relies on both properties.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    x_half_width: f64,
    t_half_width: f64,
    nx: usize,
    nt: usize,
    hx: f64,
    ht: f64,
}

impl Grid {
    /// Default grid used by the verification suites: `X=10, T=5, 2001x1001`
    /// (`hx = ht = 0.01`).
    pub fn default_acceptance() -> Grid {
        Grid::new(10.0, 5.0, 2001, 1001).expect("default grid parameters are valid")
    }

    pub fn new(x_half_width: f64, t_half_width: f64, nx: usize, nt: usize) -> Result<Grid> {
        if !(x_half_width > 0.0) || !(t_half_width > 0.0) {
            return Err(AbError::Parameter(format!(
                "half-widths must be positive, got X={x_half_width}, T={t_half_width}"
            )));
        }
        for (name, n) in [("nx", nx), ("nt", nt)] {
            if n < 5 || n % 2 == 0 {
                return Err(AbError::Parameter(format!(
                    "{name} must be an odd integer >= 5, got {n}"
                )));
            }
        }
        Ok(Grid {
            x_half_width,
            t_half_width,
            nx,
            nt,
            hx: 2.0 * x_half_width / (nx - 1) as f64,
            ht: 2.0 * t_half_width / (nt - 1) as f64,
        })
    }

    pub fn x_half_width(&self) -> f64 {
        self.x_half_width
    }

    pub fn t_half_width(&self) -> f64 {
        self.t_half_width
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn hx(&self) -> f64 {
        self.hx
    }

    pub fn ht(&self) -> f64 {
        self.ht
    }

    /// Node index of x = 0 (and of t = 0 along the other axis).
    pub fn x_center(&self) -> usize {
        (self.nx - 1) / 2
    }

    pub fn t_center(&self) -> usize {
        (self.nt - 1) / 2
    }

    /// `x_i`, computed as a signed multiple of `hx` so the lattice is exactly
    /// symmetric: `x(nx-1-i) == -x(i)` bit for bit.
    pub fn x(&self, i: usize) -> f64 {
        (i as isize - self.x_center() as isize) as f64 * self.hx
    }

    pub fn t(&self, j: usize) -> f64 {
        (j as isize - self.t_center() as isize) as f64 * self.ht
    }

    pub fn x_nodes(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }

    pub fn t_nodes(&self) -> Vec<f64> {
        (0..self.nt).map(|j| self.t(j)).collect()
    }

    /// Grid refined by halving both spacings (node counts `2n - 1`).
    pub fn refined(&self) -> Grid {
        Grid::new(
            self.x_half_width,
            self.t_half_width,
            2 * self.nx - 1,
            2 * self.nt - 1,
        )
        .expect("refinement preserves validity")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_coordinates_are_symmetric() {
        let g = Grid::new(10.0, 5.0, 41, 21).unwrap();
        assert_eq!(g.x(g.x_center()), 0.0);
        assert_eq!(g.t(g.t_center()), 0.0);
        for i in 0..g.nx() {
            assert_eq!(g.x(g.nx() - 1 - i), -g.x(i));
        }
        assert!((g.hx() - 0.5).abs() < 1e-15);
        assert!((g.x(0) + 10.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Grid::new(10.0, 5.0, 40, 21).is_err());
        assert!(Grid::new(10.0, 5.0, 3, 21).is_err());
        assert!(Grid::new(-1.0, 5.0, 41, 21).is_err());
        assert!(Grid::new(10.0, 0.0, 41, 21).is_err());
    }
}
