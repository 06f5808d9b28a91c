use rustfft::{num_complex::Complex64, Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::SpatialGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Position,
    Momentum,
}

/// Complex amplitudes sampled on a [`SpatialGrid`], either in position
/// space or on the matching momentum lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    pub grid: SpatialGrid,
    pub amplitudes: Vec<Complex64>,
    pub representation: Representation,
}

impl WaveFunction {
    pub fn new(grid: SpatialGrid, amplitudes: Vec<Complex64>) -> Result<Self> {
        grid.validate()?;
        if amplitudes.len() != grid.n_points {
            return Err(Error::Structural(format!(
                "{} amplitudes for a grid of {} points",
                amplitudes.len(),
                grid.n_points
            )));
        }
        Ok(Self {
            grid,
            amplitudes,
            representation: Representation::Position,
        })
    }

    pub fn from_fn(grid: SpatialGrid, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let amps = (0..grid.n_points).map(|j| f(grid.x(j))).collect();
        Self::new(grid, amps)
    }

    pub fn from_real(grid: SpatialGrid, values: &[f64]) -> Result<Self> {
        Self::new(grid, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    /// Integration weight of the current representation (`dx` or `dk`).
    pub fn measure(&self) -> f64 {
        match self.representation {
            Representation::Position => self.grid.dx(),
            Representation::Momentum => self.grid.dk(),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.measure()
    }

    pub fn normalize(&mut self) -> f64 {
        let n = self.norm_sqr().sqrt();
        if n > 0.0 {
            let s = 1.0 / n;
            self.amplitudes.iter_mut().for_each(|a| *a *= s);
        }
        n
    }

    pub fn normalized(mut self) -> Self {
        self.normalize();
        self
    }

    pub fn density(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn scale(&mut self, factor: Complex64) {
        self.amplitudes.iter_mut().for_each(|a| *a *= factor);
    }

    pub fn to_momentum(&self) -> Result<WaveFunction> {
        Transformer::new(&self.grid)?.to_momentum(self)
    }

    pub fn to_position(&self) -> Result<WaveFunction> {
        Transformer::new(&self.grid)?.to_position(self)
    }

    pub fn is_finite(&self) -> bool {
        self.amplitudes
            .iter()
            .all(|a| a.re.is_finite() && a.im.is_finite())
    }
}

/// `Σ conj(a_i) b_i · measure`.
pub fn inner_product(a: &WaveFunction, b: &WaveFunction) -> Result<Complex64> {
    if a.grid != b.grid {
        return Err(Error::Structural("inner product across different grids".into()));
    }
    if a.representation != b.representation {
        return Err(Error::Structural(
            "inner product across different representations".into(),
        ));
    }
    let s: Complex64 = a
        .amplitudes
        .iter()
        .zip(&b.amplitudes)
        .map(|(x, y)| x.conj() * y)
        .sum();
    Ok(s * a.measure())
}

/// Unitary position ↔ momentum transform for one grid.
///
/// `ψ̃(k) = dx/√(2π) Σ_j ψ(x_j) e^{-ik(x_j - x_min)}`, so that
/// `Σ|ψ̃|² dk = Σ|ψ|² dx`.
#[derive(Clone)]
pub struct Transformer {
    grid: SpatialGrid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Transformer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Transformer").field("grid", &self.grid).finish()
    }
}

impl Transformer {
    pub fn new(grid: &SpatialGrid) -> Result<Self> {
        grid.validate()?;
        let mut planner = FftPlanner::new();
        Ok(Self {
            grid: *grid,
            forward: planner.plan_fft_forward(grid.n_points),
            inverse: planner.plan_fft_inverse(grid.n_points),
        })
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn scratch_len(&self) -> usize {
        self.forward
            .get_inplace_scratch_len()
            .max(self.inverse.get_inplace_scratch_len())
    }

    /// Unnormalized in-place forward FFT.
    pub fn forward_raw(&self, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        self.forward.process_with_scratch(buf, scratch);
    }

    /// Unnormalized in-place inverse FFT.
    pub fn inverse_raw(&self, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        self.inverse.process_with_scratch(buf, scratch);
    }

    fn check(&self, psi: &WaveFunction, expected: Representation) -> Result<()> {
        if psi.grid != self.grid {
            return Err(Error::Structural("transform planned for a different grid".into()));
        }
        if psi.representation != expected {
            return Err(Error::Structural(format!(
                "expected a {expected:?}-space state, got {:?}",
                psi.representation
            )));
        }
        Ok(())
    }

    pub fn to_momentum(&self, psi: &WaveFunction) -> Result<WaveFunction> {
        self.check(psi, Representation::Position)?;
        let mut buf = psi.amplitudes.clone();
        let mut scratch = vec![Complex64::default(); self.scratch_len()];
        self.forward_raw(&mut buf, &mut scratch);
        let c = self.grid.dx() / (2.0 * PI).sqrt();
        buf.iter_mut().for_each(|a| *a *= c);
        Ok(WaveFunction {
            grid: self.grid,
            amplitudes: buf,
            representation: Representation::Momentum,
        })
    }

    pub fn to_position(&self, psi: &WaveFunction) -> Result<WaveFunction> {
        self.check(psi, Representation::Momentum)?;
        let mut buf = psi.amplitudes.clone();
        let mut scratch = vec![Complex64::default(); self.scratch_len()];
        self.inverse_raw(&mut buf, &mut scratch);
        let c = (2.0 * PI).sqrt() / (self.grid.dx() * self.grid.n_points as f64);
        buf.iter_mut().for_each(|a| *a *= c);
        Ok(WaveFunction {
            grid: self.grid,
            amplitudes: buf,
            representation: Representation::Position,
        })
    }

    /// `-½ ∂²ψ + V ψ` with the kinetic term applied on the momentum lattice.
    pub fn apply_hamiltonian(&self, psi: &WaveFunction, potential: &[f64]) -> Result<WaveFunction> {
        self.check(psi, Representation::Position)?;
        let n = self.grid.n_points;
        let mut buf = psi.amplitudes.clone();
        let mut scratch = vec![Complex64::default(); self.scratch_len()];
        self.forward_raw(&mut buf, &mut scratch);
        for (a, k) in buf.iter_mut().zip(self.grid.momenta()) {
            *a *= 0.5 * k * k / n as f64;
        }
        self.inverse_raw(&mut buf, &mut scratch);
        for ((h, p), v) in buf.iter_mut().zip(&psi.amplitudes).zip(potential) {
            *h += p * v;
        }
        Ok(WaveFunction {
            grid: self.grid,
            amplitudes: buf,
            representation: Representation::Position,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(grid: SpatialGrid, seed: u64) -> WaveFunction {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let amps = (0..grid.n_points)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        WaveFunction::new(grid, amps).unwrap().normalized()
    }

    #[test]
    fn normalized_inner_is_one() {
        let g = SpatialGrid::new(20.0, 256).unwrap();
        let psi = random_state(g, 1);
        let ip = inner_product(&psi, &psi).unwrap();
        assert!((ip.re - 1.0).abs() < 1e-12 && ip.im.abs() < 1e-14);
    }

    #[test]
    fn inner_is_conjugate_symmetric() {
        let g = SpatialGrid::new(20.0, 256).unwrap();
        let a = random_state(g, 2);
        let b = random_state(g, 3);
        let ab = inner_product(&a, &b).unwrap();
        let ba = inner_product(&b, &a).unwrap();
        assert!((ab - ba.conj()).norm() < 1e-15);
    }

    #[test]
    fn inner_rejects_grid_mismatch() {
        let a = random_state(SpatialGrid::new(20.0, 256).unwrap(), 4);
        let b = random_state(SpatialGrid::new(10.0, 256).unwrap(), 4);
        assert!(matches!(inner_product(&a, &b), Err(Error::Structural(_))));
        let c = a.to_momentum().unwrap();
        assert!(inner_product(&a, &c).is_err());
    }

    #[test]
    fn transform_round_trip_and_norm() {
        let g = SpatialGrid::new(30.0, 512).unwrap();
        let psi = random_state(g, 5);
        let mom = psi.to_momentum().unwrap();
        assert!((mom.norm_sqr() - 1.0).abs() < 1e-12);
        let back = mom.to_position().unwrap();
        let err = psi
            .amplitudes
            .iter()
            .zip(&back.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "round trip error {err}");
    }

    #[test]
    fn plane_wave_occupies_one_bin() {
        let g = SpatialGrid::new(30.0, 256).unwrap();
        let k = g.momenta()[7];
        let psi = WaveFunction::from_fn(g, |x| Complex64::from_polar(1.0, k * x)).unwrap();
        let mom = psi.to_momentum().unwrap();
        let big: Vec<usize> = mom
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm() > 1e-9)
            .map(|(i, _)| i)
            .collect();
        assert_eq!(big, vec![7]);
    }

    #[test]
    fn wrong_representation_is_rejected() {
        let g = SpatialGrid::new(30.0, 64).unwrap();
        let psi = random_state(g, 6);
        assert!(psi.to_position().is_err());
        assert!(psi.to_momentum().unwrap().to_momentum().is_err());
    }

    #[test]
    fn wrong_length_is_rejected() {
        let g = SpatialGrid::new(30.0, 64).unwrap();
        assert!(WaveFunction::new(g, vec![Complex64::default(); 63]).is_err());
    }
}
