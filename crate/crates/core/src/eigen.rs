//! Bound states of `H₀ = p²/2 + V(x)` from the three-point finite-difference
//! Hamiltonian, which is a symmetric tridiagonal matrix.
//!
//! Eigenvalues come from Sturm-sequence bisection, eigenvectors from inverse
//! iteration. The ground state can afterwards be swapped for an
//! imaginary-time relaxed state of the spectral Hamiltonian used by the
//! propagator (see [`EigenBasis::with_ground_state`]).

use rustfft::num_complex::Complex64;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::SpatialGrid;
use crate::wavefunction::{inner_product, WaveFunction};

#[derive(Debug, Clone)]
pub struct EigenBasis {
    pub grid: SpatialGrid,
    pub energies: Vec<f64>,
    pub states: Vec<WaveFunction>,
}

/// Symmetric tridiagonal matrix with constant off-diagonal.
struct Tridiagonal {
    diag: Vec<f64>,
    off: f64,
}

impl Tridiagonal {
    fn finite_difference(grid: &SpatialGrid, potential: &[f64]) -> Self {
        let h2 = grid.dx() * grid.dx();
        Self {
            diag: potential.iter().map(|v| 1.0 / h2 + v).collect(),
            off: -0.5 / h2,
        }
    }

    /// Number of eigenvalues strictly below `lambda`.
    fn count_below(&self, lambda: f64) -> usize {
        let off2 = self.off * self.off;
        let mut count = 0;
        let mut q = 1.0;
        for (i, d) in self.diag.iter().enumerate() {
            q = if i == 0 { d - lambda } else { d - lambda - off2 / q };
            if q == 0.0 {
                q = -f64::EPSILON * (d.abs() + self.off.abs());
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn bounds(&self) -> (f64, f64) {
        let r = 2.0 * self.off.abs();
        let lo = self.diag.iter().cloned().fold(f64::INFINITY, f64::min) - r;
        let hi = self.diag.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + r;
        (lo, hi)
    }

    /// k-th smallest eigenvalue (0-based) by bisection.
    fn eigenvalue(&self, k: usize) -> f64 {
        let (mut lo, mut hi) = self.bounds();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Solves `(T - shift) x = b` by Gaussian elimination with partial pivoting.
    fn solve_shifted(&self, shift: f64, b: &[f64]) -> Vec<f64> {
        let n = self.diag.len();
        // Row i after pivoting holds up to three nonzeros: u0 (diag), u1, u2.
        let mut u0 = vec![0.0; n];
        let mut u1 = vec![0.0; n];
        let mut u2 = vec![0.0; n];
        let mut rhs = b.to_vec();
        let e = self.off;
        let tiny = 1e-300;

        // Current working row: [a, c] at columns (i, i+1), with rhs r.
        let mut a = self.diag[0] - shift;
        let mut c = if n > 1 { e } else { 0.0 };
        let mut r = rhs[0];
        for i in 0..n - 1 {
            let below_a = e;
            let below_c = self.diag[i + 1] - shift;
            let below_d = if i + 2 < n { e } else { 0.0 };
            let below_r = rhs[i + 1];
            if a.abs() >= below_a.abs() {
                let piv = if a == 0.0 { tiny } else { a };
                let m = below_a / piv;
                u0[i] = piv;
                u1[i] = c;
                u2[i] = 0.0;
                rhs[i] = r;
                let na = below_c - m * c;
                c = below_d;
                r = below_r - m * r;
                a = na;
            } else {
                let m = a / below_a;
                u0[i] = below_a;
                u1[i] = below_c;
                u2[i] = below_d;
                rhs[i] = below_r;
                let na = c - m * below_c;
                let nc = -m * below_d;
                r -= m * below_r;
                a = na;
                c = nc;
            }
        }
        u0[n - 1] = if a == 0.0 { tiny } else { a };
        rhs[n - 1] = r;

        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = rhs[i];
            if i + 1 < n {
                s -= u1[i] * x[i + 1];
            }
            if i + 2 < n {
                s -= u2[i] * x[i + 2];
            }
            x[i] = s / u0[i];
        }
        x
    }

    fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = v.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * v[i];
                if i > 0 {
                    s += self.off * v[i - 1];
                }
                if i + 1 < n {
                    s += self.off * v[i + 1];
                }
                s
            })
            .collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// The `m` lowest eigenpairs of the finite-difference `H₀` on `grid`.
///
/// States are real, normalized with the grid measure, and sign-fixed so the
/// largest-magnitude component is positive.
pub fn solve_bound_states(
    grid: &SpatialGrid,
    potential: impl Fn(f64) -> f64,
    m: usize,
) -> Result<EigenBasis> {
    grid.validate()?;
    if m == 0 {
        return Err(Error::InvalidParameter("need at least one bound state".into()));
    }
    let v = grid.sample(potential);
    let t = Tridiagonal::finite_difference(grid, &v);
    let n = grid.n_points;

    let found = t.count_below(0.0);
    if found < m {
        return Err(Error::Capacity { requested: m, found });
    }

    let dx = grid.dx();
    let mut energies = Vec::with_capacity(m);
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(m);
    for k in 0..m {
        let lambda = t.eigenvalue(k);
        // Deterministic, non-symmetric start so both parities are reached.
        let mut x: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.5 * ((i as f64) * 0.7548776662466927).fract())
            .collect();
        let shift = lambda + 1e-13 * (1.0 + lambda.abs());
        for _ in 0..4 {
            x = t.solve_shifted(shift, &x);
            for prev in &vectors {
                let p = dot(prev, &x);
                x.iter_mut().zip(prev).for_each(|(xi, pi)| *xi -= p * pi);
            }
            let nrm = dot(&x, &x).sqrt();
            x.iter_mut().for_each(|xi| *xi /= nrm);
        }
        // Rayleigh quotient is the more accurate energy once x has converged.
        let tx = t.apply(&x);
        energies.push(dot(&x, &tx));
        vectors.push(x);
    }

    let states = vectors
        .into_iter()
        .map(|mut x| {
            let big = x
                .iter()
                .cloned()
                .fold(0.0_f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
            let s = big.signum() / dx.sqrt();
            x.iter_mut().for_each(|xi| *xi *= s);
            WaveFunction::from_real(*grid, &x)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(EigenBasis {
        grid: *grid,
        energies,
        states,
    })
}

impl EigenBasis {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn ground_energy(&self) -> f64 {
        self.energies[0]
    }

    /// First transition frequency `E₁ - E₀`, if at least two levels are known.
    pub fn first_transition(&self) -> Option<f64> {
        (self.len() >= 2).then(|| self.energies[1] - self.energies[0])
    }

    /// Replaces the ground state (and its energy) and re-orthogonalizes the
    /// remaining states against it with Gram-Schmidt.
    pub fn with_ground_state(mut self, ground: WaveFunction, energy: f64) -> Result<Self> {
        if ground.grid != self.grid {
            return Err(Error::Structural("ground state on a different grid".into()));
        }
        let mut ground = ground.normalized();
        // Fix the global phase against the original ground state.
        let ov = inner_product(&self.states[0], &ground)?;
        if ov.norm() > 0.0 {
            ground.scale(ov.conj() / ov.norm());
        }
        self.states[0] = ground;
        self.energies[0] = energy;
        for k in 1..self.len() {
            let mut s = self.states[k].clone();
            for j in 0..k {
                let p = inner_product(&self.states[j], &s)?;
                for (a, b) in s.amplitudes.iter_mut().zip(&self.states[j].amplitudes) {
                    *a -= p * b;
                }
            }
            self.states[k] = s.normalized();
        }
        Ok(self)
    }

    /// Maximum deviation of the overlap matrix from the identity.
    pub fn orthonormality_error(&self) -> Result<f64> {
        let mut worst = 0.0_f64;
        for i in 0..self.len() {
            for j in i..self.len() {
                let ov = inner_product(&self.states[i], &self.states[j])?;
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((ov - target).norm());
            }
        }
        Ok(worst)
    }

    /// `‖H φ_k - E_k φ_k‖` in grid norm for the finite-difference `H₀`.
    pub fn residuals(&self, potential: impl Fn(f64) -> f64) -> Vec<f64> {
        let v = self.grid.sample(potential);
        let t = Tridiagonal::finite_difference(&self.grid, &v);
        self.states
            .iter()
            .zip(&self.energies)
            .map(|(s, e)| {
                let re: Vec<f64> = s.amplitudes.iter().map(|a| a.re).collect();
                let im: Vec<f64> = s.amplitudes.iter().map(|a| a.im).collect();
                let hr = t.apply(&re);
                let hi = t.apply(&im);
                let r2: f64 = (0..re.len())
                    .map(|i| (hr[i] - e * re[i]).powi(2) + (hi[i] - e * im[i]).powi(2))
                    .sum();
                (r2 * self.grid.dx()).sqrt()
            })
            .collect()
    }

    /// CSV: `#` header lines with grid metadata, then one row per eigenpair:
    /// `index,energy,re_0,im_0,re_1,im_1,...`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)
            .map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
        let mut w = std::io::BufWriter::new(f);
        let mut out = String::new();
        writeln!(out, "# eigenbasis").unwrap();
        writeln!(
            out,
            "# x_min={} x_max={} n_points={} count={}",
            self.grid.x_min(),
            self.grid.x_max,
            self.grid.n_points,
            self.len()
        )
        .unwrap();
        writeln!(out, "index,energy,amplitudes(re,im)...").unwrap();
        for (k, (e, s)) in self.energies.iter().zip(&self.states).enumerate() {
            write!(out, "{k},{e}").unwrap();
            for a in &s.amplitudes {
                write!(out, ",{},{}", a.re, a.im).unwrap();
            }
            out.push('\n');
        }
        w.write_all(out.as_bytes())
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)
            .map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
        let mut grid = None;
        let mut energies = Vec::new();
        let mut rows = Vec::new();
        for line in BufReader::new(f).lines() {
            let line = line.map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
            if let Some(meta) = line.strip_prefix("# x_min=") {
                let mut x_max = None;
                let mut n = None;
                for part in meta.split_whitespace() {
                    if let Some(v) = part.strip_prefix("x_max=") {
                        x_max = v.parse::<f64>().ok();
                    } else if let Some(v) = part.strip_prefix("n_points=") {
                        n = v.parse::<usize>().ok();
                    }
                }
                match (x_max, n) {
                    (Some(x), Some(n)) => grid = Some(SpatialGrid::new(x, n)?),
                    _ => return Err(Error::Structural("malformed eigenbasis header".into())),
                }
                continue;
            }
            if line.starts_with('#') || line.starts_with("index") || line.trim().is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Structural(format!("bad eigenbasis row: {e}")))?;
            if vals.len() < 2 || !vals.len().is_multiple_of(2) {
                return Err(Error::Structural("eigenbasis row has wrong length".into()));
            }
            energies.push(vals[1]);
            rows.push(
                vals[2..]
                    .chunks(2)
                    .map(|c| Complex64::new(c[0], c[1]))
                    .collect::<Vec<_>>(),
            );
        }
        let grid = grid.ok_or_else(|| Error::Structural("eigenbasis header missing".into()))?;
        let states = rows
            .into_iter()
            .map(|amps| WaveFunction::new(grid, amps))
            .collect::<Result<Vec<_>>>()?;
        Ok(EigenBasis {
            grid,
            energies,
            states,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::SoftCorePotential;

    #[test]
    fn harmonic_oscillator_levels() {
        let g = SpatialGrid::new(20.0, 1024).unwrap();
        let basis = solve_bound_states(&g, |x| 0.5 * x * x - 10.0, 3).unwrap();
        for (k, e) in basis.energies.iter().enumerate() {
            let exact = k as f64 + 0.5 - 10.0;
            assert!((e - exact).abs() < 1e-3, "level {k}: {e} vs {exact}");
        }
    }

    #[test]
    fn harmonic_oscillator_shifted_back() {
        // Unshifted x²/2 has no negative levels.
        let g = SpatialGrid::new(20.0, 1024).unwrap();
        let err = solve_bound_states(&g, |x| 0.5 * x * x, 3).unwrap_err();
        assert!(matches!(err, Error::Capacity { requested: 3, found: 0 }));
    }

    #[test]
    fn soft_core_ground_and_first_transition() {
        let g = SpatialGrid::default();
        let v = SoftCorePotential::default();
        let basis = solve_bound_states(&g, |x| v.evaluate(x), 2).unwrap();
        assert!((basis.energies[0] + 0.5).abs() < 0.005);
        let w12 = basis.first_transition().unwrap();
        assert!((w12 - 0.267).abs() < 0.005, "w12 = {w12}");
    }

    #[test]
    fn fifteen_levels_orthonormal_with_small_residual() {
        let g = SpatialGrid::default();
        let v = SoftCorePotential::default();
        let basis = solve_bound_states(&g, |x| v.evaluate(x), 15).unwrap();
        assert!(basis.energies.windows(2).all(|w| w[0] < w[1]));
        assert!(basis.energies.iter().all(|&e| e < 0.0));
        assert!(basis.orthonormality_error().unwrap() < 1e-8);
        for r in basis.residuals(|x| v.evaluate(x)) {
            assert!(r < 1e-6, "residual {r}");
        }
    }

    #[test]
    fn capacity_error_counts_existing_states() {
        let g = SpatialGrid::new(10.0, 256).unwrap();
        let well = |x: f64| if x.abs() < 1.0 { -0.5 } else { 0.0 };
        let err = solve_bound_states(&g, well, 50).unwrap_err();
        match err {
            Error::Capacity { requested, found } => {
                assert_eq!(requested, 50);
                assert!((1..50).contains(&found));
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn csv_round_trip() {
        let g = SpatialGrid::new(30.0, 256).unwrap();
        let v = SoftCorePotential::default();
        let basis = solve_bound_states(&g, |x| v.evaluate(x), 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("basis.csv");
        basis.write_csv(&p).unwrap();
        let back = EigenBasis::read_csv(&p).unwrap();
        assert_eq!(back.grid, basis.grid);
        assert_eq!(back.energies, basis.energies);
        assert_eq!(back.states, basis.states);
    }
}
