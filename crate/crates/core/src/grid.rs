use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Uniform grid symmetric about the origin, `x_j = -x_max + j*dx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpatialGrid {
    pub x_max: f64,
    pub n_points: usize,
}

impl Default for SpatialGrid {
    fn default() -> Self {
        Self {
            x_max: 400.0,
            n_points: 4096,
        }
    }
}

impl SpatialGrid {
    pub fn new(x_max: f64, n_points: usize) -> Result<Self> {
        let grid = Self { x_max, n_points };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_points < 2 || !self.n_points.is_power_of_two() {
            return Err(Error::Structural(format!(
                "grid size {} is not a power of two >= 2",
                self.n_points
            )));
        }
        if !(self.x_max.is_finite() && self.x_max > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "grid half-width must be positive, got {}",
                self.x_max
            )));
        }
        Ok(())
    }

    pub fn x_min(&self) -> f64 {
        -self.x_max
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.x_max / (self.n_points - 1) as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_min() + j as f64 * self.dx()
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.x(j)).collect()
    }

    /// Momentum lattice spacing `2π / (n dx)`.
    pub fn dk(&self) -> f64 {
        2.0 * PI / (self.n_points as f64 * self.dx())
    }

    /// Momenta in FFT order: `0, dk, ..., -dk`.
    pub fn momenta(&self) -> Vec<f64> {
        let n = self.n_points;
        let dk = self.dk();
        (0..n)
            .map(|j| {
                let m = if j < n / 2 { j as f64 } else { j as f64 - n as f64 };
                m * dk
            })
            .collect()
    }

    /// Index of the grid point closest to `x`.
    pub fn nearest_index(&self, x: f64) -> usize {
        let j = ((x - self.x_min()) / self.dx()).round();
        j.clamp(0.0, (self.n_points - 1) as f64) as usize
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.n_points).map(|j| f(self.x(j))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_spacing() {
        let g = SpatialGrid::default();
        g.validate().unwrap();
        assert!((g.dx() - 800.0 / 4095.0).abs() < 1e-15);
        assert_eq!(g.x(0), -400.0);
        assert!((g.x(4095) - 400.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(matches!(
            SpatialGrid::new(10.0, 1000),
            Err(Error::Structural(_))
        ));
        assert!(SpatialGrid::new(10.0, 1).is_err());
        assert!(SpatialGrid::new(-1.0, 64).is_err());
    }

    #[test]
    fn momenta_are_fft_ordered() {
        let g = SpatialGrid::new(5.0, 8).unwrap();
        let k = g.momenta();
        assert_eq!(k[0], 0.0);
        assert!(k[3] > 0.0 && k[4] < 0.0);
        assert!((k[1] - g.dk()).abs() < 1e-15);
        assert!((k[7] + g.dk()).abs() < 1e-15);
    }
}
