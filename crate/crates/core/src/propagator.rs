//! Split-operator propagation of `H = p²/2 + V(x) + x·F_tot(t)` with an
//! edge mask and probability-current monitors at `±x_R`.
//!
//! Each step applies `e^{-iTdt/2} · M e^{-i(V + xF)dt} · e^{-iTdt/2}`, with
//! the field taken at the step midpoint. Consecutive half kinetic factors
//! are fused, so a step costs two FFTs; the state is brought back to a full
//! step only when a snapshot is requested.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{FieldWaveform, TimeLattice};
use crate::grid::SpatialGrid;
use crate::wavefunction::{Representation, Transformer, WaveFunction};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PropagationConfig {
    pub dt: f64,
    /// Fraction of the half-width covered by the mask at each edge.
    pub absorber_fraction: f64,
    pub absorber_exponent: f64,
    pub absorber_enabled: bool,
    /// Flux monitor position as a fraction of `x_max`.
    pub monitor_fraction: f64,
    /// Steps between density snapshots; 0 disables the density map.
    pub record_stride: usize,
    /// Keep every n-th grid point in density snapshots.
    pub density_decimation: usize,
    /// Run length in units of the pulse duration.
    pub duration_factor: f64,
    /// Interior-norm change per step below which the flux record counts as
    /// converged.
    pub convergence_tol: f64,
    /// Alternative stopping rule: the run also counts as converged once the
    /// projected undrained remainder, `rate × elapsed steps`, falls below this
    /// fraction of the norm already lost. The projection is exact for slow
    /// electrons arriving with a flat momentum density. 0 disables it.
    pub tail_tolerance: f64,
    /// Extra field-free drift allowed after the lattice, in units of the
    /// pulse duration, while waiting for convergence.
    pub max_extra_drift: f64,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        Self {
            dt: 0.05,
            absorber_fraction: 0.1,
            absorber_exponent: 0.125,
            absorber_enabled: true,
            monitor_fraction: 0.9,
            record_stride: 0,
            density_decimation: 8,
            duration_factor: 1.5,
            convergence_tol: 1e-10,
            tail_tolerance: 0.02,
            max_extra_drift: 6.0,
        }
    }
}

/// Steps per window used to estimate the interior-norm drain rate.
const RATE_WINDOW: usize = 200;

impl PropagationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter("dt must be positive".into()));
        }
        if !(self.absorber_fraction > 0.0 && self.absorber_fraction < 0.5) {
            return Err(Error::InvalidParameter(
                "absorber fraction must lie in (0, 0.5)".into(),
            ));
        }
        if !(self.absorber_exponent > 0.0) {
            return Err(Error::InvalidParameter("absorber exponent must be positive".into()));
        }
        let edge = 1.0 - self.absorber_fraction;
        if !(self.monitor_fraction > 0.0 && self.monitor_fraction <= edge + 1e-9) {
            return Err(Error::InvalidParameter(format!(
                "monitor at {} x_max lies inside the absorber (starts at {edge} x_max)",
                self.monitor_fraction
            )));
        }
        if self.density_decimation == 0 {
            return Err(Error::InvalidParameter("density decimation must be >= 1".into()));
        }
        if !(self.duration_factor >= 1.0) {
            return Err(Error::InvalidParameter("duration factor must be >= 1".into()));
        }
        if !(self.convergence_tol > 0.0)
            || !(self.max_extra_drift >= 0.0)
            || !(self.tail_tolerance >= 0.0)
        {
            return Err(Error::InvalidParameter("invalid convergence settings".into()));
        }
        Ok(())
    }

    pub fn monitor_position(&self, grid: &SpatialGrid) -> f64 {
        self.monitor_fraction * grid.x_max
    }

    pub fn lattice(&self, pulse_duration: f64) -> Result<TimeLattice> {
        TimeLattice::new(self.dt, pulse_duration, self.duration_factor)
    }
}

/// `cos^{p}(π s/2)` of the scaled penetration depth `s` into each edge
/// region; exactly 1 in the interior and 0 at the endpoints.
pub fn absorber_mask(cfg: &PropagationConfig, grid: &SpatialGrid) -> Vec<f64> {
    let inner = (1.0 - cfg.absorber_fraction) * grid.x_max;
    let width = grid.x_max - inner;
    grid.sample(|x| {
        let s = (x.abs() - inner) / width;
        if s <= 0.0 {
            1.0
        } else if s >= 1.0 - 1e-12 {
            0.0
        } else {
            (0.5 * std::f64::consts::PI * s).cos().powf(cfg.absorber_exponent)
        }
    })
}

/// Probability current at the two monitors, oriented outward, per step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FluxRecord {
    /// Sample times (step midpoints).
    pub times: Vec<f64>,
    pub j_plus: Vec<f64>,
    pub j_minus: Vec<f64>,
    pub dt: f64,
    /// Cumulative norm removed by the mask.
    pub absorbed_norm: f64,
    pub initial_norm: f64,
}

impl FluxRecord {
    /// `∫ (j₊ + j₋) dt` by the midpoint rule.
    pub fn integrated(&self) -> f64 {
        self.j_plus
            .iter()
            .zip(&self.j_minus)
            .map(|(a, b)| a + b)
            .sum::<f64>()
            * self.dt
    }

    pub fn total(&self) -> Vec<f64> {
        self.j_plus.iter().zip(&self.j_minus).map(|(a, b)| a + b).collect()
    }
}

/// `|Ψ|²` snapshots, one row per recorded time.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMap {
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
    /// Row-major `times.len() × positions.len()`.
    pub values: Vec<f64>,
}

impl DensityMap {
    pub fn rows(&self) -> usize {
        self.times.len()
    }

    pub fn cols(&self) -> usize {
        self.positions.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols()..(i + 1) * self.cols()]
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub final_state: WaveFunction,
    /// State at `t = T_p` (end of the pulse), before the field-free drift.
    pub pulse_end_state: WaveFunction,
    pub flux: FluxRecord,
    pub density_map: Option<DensityMap>,
    pub steps: usize,
    pub final_time: f64,
    /// Whether the interior norm had stopped draining at the end of the run.
    pub converged: bool,
    /// Last measured interior-norm change per step.
    pub drain_rate: f64,
    pub provenance: String,
}

impl RunResult {
    pub fn final_norm(&self) -> f64 {
        self.final_state.norm_sqr()
    }

    /// Norm lost from the grid over the run.
    pub fn norm_loss(&self) -> f64 {
        self.flux.initial_norm - self.final_norm()
    }
}

/// Central 8th-order first-derivative weights for offsets 1..=4.
const STENCIL: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];

struct Monitor {
    index: usize,
    /// +1 at `+x_R`, -1 at `-x_R`.
    orientation: f64,
}

impl Monitor {
    fn new(grid: &SpatialGrid, x: f64, orientation: f64) -> Self {
        let mut index = grid.nearest_index(x);
        // Keep the monitor on the unmasked side of x.
        if grid.x(index).abs() > x.abs() {
            index = if x > 0.0 { index - 1 } else { index + 1 };
        }
        Self { index, orientation }
    }

    /// Outward current `Im(ψ* ∂ψ)` with a local finite-difference derivative.
    fn current(&self, psi: &[Complex64], inv_dx: f64) -> f64 {
        let i = self.index;
        let d: Complex64 = STENCIL
            .iter()
            .enumerate()
            .map(|(m, w)| (psi[i + m + 1] - psi[i - m - 1]) * *w)
            .sum();
        self.orientation * (psi[i].conj() * d * inv_dx).im
    }
}

/// Precomputed operators for one grid, potential, and time step.
pub struct Propagator {
    grid: SpatialGrid,
    cfg: PropagationConfig,
    dt: f64,
    transformer: Transformer,
    potential: Vec<f64>,
    x: Vec<f64>,
    mask: Vec<f64>,
    /// Mask indices with value < 1.
    absorber_indices: Vec<usize>,
    /// `e^{-iVdt} · mask`.
    static_phase: Vec<Complex64>,
    kinetic_half: Vec<Complex64>,
    kinetic_full: Vec<Complex64>,
    monitors: [Monitor; 2],
    interior: (usize, usize),
}

/// Points per block of the `e^{-ixFdt}` recurrence before re-anchoring.
const PHASE_BLOCK: usize = 64;

impl Propagator {
    /// `potential` holds `V(x_j)` on the grid; `dt` must equal the lattice step.
    pub fn new(grid: &SpatialGrid, potential: Vec<f64>, cfg: &PropagationConfig, dt: f64) -> Result<Self> {
        grid.validate()?;
        cfg.validate()?;
        if potential.len() != grid.n_points {
            return Err(Error::Structural("potential length differs from grid".into()));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter("dt must be positive".into()));
        }
        let n = grid.n_points;
        let mask = if cfg.absorber_enabled {
            absorber_mask(cfg, grid)
        } else {
            vec![1.0; n]
        };
        let absorber_indices = (0..n).filter(|&i| mask[i] < 1.0).collect();
        let static_phase = potential
            .iter()
            .zip(&mask)
            .map(|(v, m)| Complex64::from_polar(*m, -v * dt))
            .collect();
        let inv_n = 1.0 / n as f64;
        let momenta = grid.momenta();
        let kinetic_half = momenta
            .iter()
            .map(|k| Complex64::from_polar(inv_n, -0.25 * k * k * dt))
            .collect();
        let kinetic_full = momenta
            .iter()
            .map(|k| Complex64::from_polar(inv_n, -0.5 * k * k * dt))
            .collect();
        let xr = cfg.monitor_position(grid);
        let monitors = [Monitor::new(grid, xr, 1.0), Monitor::new(grid, -xr, -1.0)];
        let interior = (monitors[1].index, monitors[0].index);
        Ok(Self {
            grid: *grid,
            cfg: *cfg,
            dt,
            transformer: Transformer::new(grid)?,
            x: grid.positions(),
            potential,
            mask,
            absorber_indices,
            static_phase,
            kinetic_half,
            kinetic_full,
            monitors,
            interior,
        })
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn mask(&self) -> &[f64] {
        &self.mask
    }

    pub fn transformer(&self) -> &Transformer {
        &self.transformer
    }

    /// Propagates `psi0` across `lattice` under the summed `fields`, then
    /// drifts field-free until the interior norm stops draining (or the
    /// extra-drift budget runs out).
    pub fn propagate(
        &self,
        psi0: &WaveFunction,
        lattice: &TimeLattice,
        fields: &[&FieldWaveform],
    ) -> Result<RunResult> {
        if psi0.grid != self.grid || psi0.representation != Representation::Position {
            return Err(Error::Structural(
                "initial state must be a position-space state on the propagator grid".into(),
            ));
        }
        if (lattice.dt - self.dt).abs() > 1e-12 * self.dt {
            return Err(Error::Structural(format!(
                "lattice step {} differs from propagator step {}",
                lattice.dt, self.dt
            )));
        }
        for f in fields {
            if f.lattice != *lattice {
                return Err(Error::Structural(format!(
                    "waveform '{}' is sampled on a different lattice",
                    f.provenance
                )));
            }
        }
        let total_field: Vec<f64> = (0..lattice.n_steps)
            .map(|s| fields.iter().map(|f| f.at_step_midpoint(s)).sum())
            .collect();

        let dx = self.grid.dx();
        let extra_steps = (self.cfg.max_extra_drift * lattice.pulse_duration() / self.dt).ceil() as usize;
        let extra_steps = extra_steps.div_ceil(RATE_WINDOW) * RATE_WINDOW;
        let max_steps = lattice.n_steps + extra_steps;

        let mut run = RunState::new(self, psi0);
        let initial_norm = psi0.norm_sqr();
        let mut flux = FluxRecord {
            times: Vec::with_capacity(lattice.n_steps),
            j_plus: Vec::with_capacity(lattice.n_steps),
            j_minus: Vec::with_capacity(lattice.n_steps),
            dt: self.dt,
            absorbed_norm: 0.0,
            initial_norm,
        };
        let mut density = (self.cfg.record_stride > 0).then(|| DensityMap {
            times: Vec::new(),
            positions: self
                .x
                .iter()
                .step_by(self.cfg.density_decimation)
                .copied()
                .collect(),
            values: Vec::new(),
        });
        if let Some(map) = density.as_mut() {
            self.record_density(map, 0.0, &psi0.amplitudes);
        }

        let mut pulse_end_state = None;
        let mut last_interior = self.interior_norm(&run.psi);
        let mut drain_rate = f64::INFINITY;
        let mut converged = false;
        let mut step = 0;
        while step < max_steps {
            let field = total_field.get(step).copied().unwrap_or(0.0);
            let t_mid = (step as f64 + 0.5) * self.dt;
            let (jp, jm, absorbed) = run.step(self, field)?;
            flux.times.push(t_mid);
            flux.j_plus.push(jp);
            flux.j_minus.push(jm);
            flux.absorbed_norm += absorbed * dx;
            step += 1;

            if !(jp.is_finite() && jm.is_finite()) || (step % 256 == 0 && !run.is_finite()) {
                return Err(Error::NumericalInstability { step });
            }

            let want_pulse_end = step == lattice.pulse_steps;
            // Snapshots stop at the end of the lattice so maps from runs with
            // different drift lengths share one time axis.
            let want_density = self.cfg.record_stride > 0
                && step % self.cfg.record_stride == 0
                && step <= lattice.n_steps;
            if want_pulse_end || want_density {
                let synced = run.synced(self);
                if want_pulse_end {
                    pulse_end_state = Some(WaveFunction::new(self.grid, synced.clone())?);
                }
                if let Some(map) = density.as_mut().filter(|_| want_density) {
                    self.record_density(map, step as f64 * self.dt, &synced);
                }
            }

            if step % RATE_WINDOW == 0 {
                let now = self.interior_norm(&run.psi);
                drain_rate = (last_interior - now).abs() / RATE_WINDOW as f64;
                last_interior = now;
                if step >= lattice.n_steps && self.drained(drain_rate, step, initial_norm - now) {
                    converged = true;
                    break;
                }
            }
        }

        let final_amps = run.synced(self);
        if final_amps.iter().any(|a| !(a.re.is_finite() && a.im.is_finite())) {
            return Err(Error::NumericalInstability { step });
        }
        let final_state = WaveFunction::new(self.grid, final_amps)?;
        let pulse_end_state = match pulse_end_state {
            Some(s) => s,
            None => final_state.clone(),
        };
        let provenance = fields
            .iter()
            .map(|f| f.provenance.as_str())
            .collect::<Vec<_>>()
            .join(" + ");
        Ok(RunResult {
            final_state,
            pulse_end_state,
            flux,
            density_map: density,
            steps: step,
            final_time: step as f64 * self.dt,
            converged,
            drain_rate,
            provenance,
        })
    }

    fn drained(&self, rate: f64, step: usize, lost: f64) -> bool {
        rate < self.cfg.convergence_tol
            || (self.cfg.tail_tolerance > 0.0 && rate * (step as f64) < self.cfg.tail_tolerance * lost)
    }

    fn interior_norm(&self, psi: &[Complex64]) -> f64 {
        let (a, b) = self.interior;
        psi[a..=b].iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    fn record_density(&self, map: &mut DensityMap, t: f64, psi: &[Complex64]) {
        map.times.push(t);
        map.values.extend(
            psi.iter()
                .step_by(self.cfg.density_decimation)
                .map(|z| z.norm_sqr()),
        );
    }
}

/// Mutable per-run buffers. `psi` is kept half a kinetic step ahead of the
/// physical state so consecutive half kicks can be fused.
struct RunState {
    psi: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl RunState {
    fn new(p: &Propagator, psi0: &WaveFunction) -> Self {
        let mut s = Self {
            psi: psi0.amplitudes.clone(),
            scratch: vec![Complex64::default(); p.transformer.scratch_len()],
        };
        s.kinetic(p, &p.kinetic_half);
        s
    }

    fn kinetic(&mut self, p: &Propagator, factor: &[Complex64]) {
        p.transformer.forward_raw(&mut self.psi, &mut self.scratch);
        self.psi.iter_mut().zip(factor).for_each(|(a, k)| *a *= k);
        p.transformer.inverse_raw(&mut self.psi, &mut self.scratch);
    }

    /// Potential + mask, current measurement, then a full kinetic step.
    /// Returns (j₊, j₋, absorbed weight / dx).
    fn step(&mut self, p: &Propagator, field: f64) -> Result<(f64, f64, f64)> {
        let mut absorbed = 0.0;
        for &i in &p.absorber_indices {
            let m = p.mask[i];
            absorbed += self.psi[i].norm_sqr() * (1.0 - m * m);
        }

        let theta = -field * p.dt;
        let (s, c) = (theta * p.grid.dx()).sin_cos();
        let rot = Complex64::new(c, s);
        for (block, chunk) in self.psi.chunks_mut(PHASE_BLOCK).enumerate() {
            let start = block * PHASE_BLOCK;
            let (s0, c0) = (theta * p.x[start]).sin_cos();
            let mut z = Complex64::new(c0, s0);
            for (a, w) in chunk.iter_mut().zip(&p.static_phase[start..]) {
                *a *= w * z;
                z *= rot;
            }
        }

        let inv_dx = 1.0 / p.grid.dx();
        let jp = p.monitors[0].current(&self.psi, inv_dx);
        let jm = p.monitors[1].current(&self.psi, inv_dx);
        p.transformer.forward_raw(&mut self.psi, &mut self.scratch);
        self.psi
            .iter_mut()
            .zip(&p.kinetic_full)
            .for_each(|(a, k)| *a *= k);
        p.transformer.inverse_raw(&mut self.psi, &mut self.scratch);
        Ok((jp, jm, absorbed))
    }

    /// Physical state at the current step boundary (undoes the pending half kick).
    fn synced(&mut self, p: &Propagator) -> Vec<Complex64> {
        let mut buf = self.psi.clone();
        p.transformer.forward_raw(&mut buf, &mut self.scratch);
        // conj of the half kick is its inverse up to the same 1/n factor.
        for (a, k) in buf.iter_mut().zip(&p.kinetic_half) {
            *a *= k.conj();
        }
        p.transformer.inverse_raw(&mut buf, &mut self.scratch);
        buf
    }

    fn is_finite(&self) -> bool {
        self.psi.iter().all(|a| a.re.is_finite() && a.im.is_finite())
    }
}

/// Settings for imaginary-time relaxation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RelaxConfig {
    pub dtau: f64,
    pub tol: f64,
    pub max_steps: usize,
}

impl Default for RelaxConfig {
    fn default() -> Self {
        Self {
            dtau: 0.05,
            tol: 1e-10,
            max_steps: 200_000,
        }
    }
}

/// Ground state by imaginary-time split-operator iteration from a symmetric
/// Gaussian seed, renormalized every step. Returns the state and its
/// Rayleigh-quotient energy under the spectral Hamiltonian.
pub fn relax_to_ground(
    grid: &SpatialGrid,
    potential: impl Fn(f64) -> f64,
    cfg: &RelaxConfig,
) -> Result<(WaveFunction, f64)> {
    grid.validate()?;
    if !(cfg.dtau > 0.0) {
        return Err(Error::InvalidParameter("dtau must be positive".into()));
    }
    let v = grid.sample(potential);
    let tr = Transformer::new(grid)?;
    let n = grid.n_points;
    let dx = grid.dx();
    let inv_n = 1.0 / n as f64;
    let k_half: Vec<f64> = grid
        .momenta()
        .iter()
        .map(|k| (-0.25 * k * k * cfg.dtau).exp() * inv_n)
        .collect();
    let k_full: Vec<f64> = grid
        .momenta()
        .iter()
        .map(|k| (-0.5 * k * k * cfg.dtau).exp() * inv_n)
        .collect();
    let v_factor: Vec<f64> = v.iter().map(|v| (-v * cfg.dtau).exp()).collect();

    let mut psi: Vec<Complex64> = grid
        .positions()
        .iter()
        .map(|x| Complex64::new((-0.5 * x * x / 4.0).exp(), 0.0))
        .collect();
    let mut scratch = vec![Complex64::default(); tr.scratch_len()];
    let norm = |p: &[Complex64]| (p.iter().map(|a| a.norm_sqr()).sum::<f64>() * dx).sqrt();

    let apply = |p: &mut Vec<Complex64>, f: &[f64], s: &mut Vec<Complex64>| {
        tr.forward_raw(p, s);
        p.iter_mut().zip(f).for_each(|(a, k)| *a *= k);
        tr.inverse_raw(p, s);
    };

    let nrm = norm(&psi);
    psi.iter_mut().for_each(|a| *a /= nrm);
    apply(&mut psi, &k_half, &mut scratch);
    let mut last_e = f64::INFINITY;
    let mut delta = f64::INFINITY;
    for _ in 0..cfg.max_steps {
        let before = norm(&psi);
        psi.iter_mut().zip(&v_factor).for_each(|(a, f)| *a *= f);
        apply(&mut psi, &k_full, &mut scratch);
        let after = norm(&psi);
        let e = -(after / before).ln() / cfg.dtau;
        psi.iter_mut().for_each(|a| *a /= after);
        delta = (e - last_e).abs();
        last_e = e;
        if delta < cfg.tol {
            // psi holds e^{-Tdτ/2}φ; one more potential factor and half
            // kinetic factor return φ itself (up to scale).
            psi.iter_mut().zip(&v_factor).for_each(|(a, f)| *a *= f);
            apply(&mut psi, &k_half, &mut scratch);
            let mut state = WaveFunction::new(*grid, psi)?;
            state.normalize();
            let h = tr.apply_hamiltonian(&state, &v)?;
            let energy = crate::wavefunction::inner_product(&state, &h)?.re;
            return Ok((state, energy));
        }
    }
    Err(Error::Convergence {
        steps: cfg.max_steps,
        last_delta: delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask_shape() {
        let cfg = PropagationConfig::default();
        let g = SpatialGrid::default();
        let m = absorber_mask(&cfg, &g);
        assert_eq!(m[g.n_points / 2], 1.0);
        assert_eq!(m[0], 0.0);
        assert_eq!(m[g.n_points - 1], 0.0);
        for i in 0..g.n_points {
            assert!((0.0..=1.0).contains(&m[i]));
            assert!((m[i] - m[g.n_points - 1 - i]).abs() < 1e-12);
        }
        // Interior edge sits at (1 - fraction) x_max.
        assert_eq!(m[g.nearest_index(359.0)], 1.0);
        assert!(m[g.nearest_index(380.0)] < 1.0);
    }

    #[test]
    fn config_rejects_monitor_in_absorber() {
        let cfg = PropagationConfig {
            monitor_fraction: 0.95,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        assert!(PropagationConfig::default().validate().is_ok());
        let bad = PropagationConfig {
            absorber_fraction: 0.6,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn relax_harmonic() {
        let g = SpatialGrid::new(20.0, 512).unwrap();
        let (_, e) = relax_to_ground(&g, |x| 0.5 * x * x, &RelaxConfig::default()).unwrap();
        assert!((e - 0.5).abs() < 1e-3, "{e}");
    }

    #[test]
    fn relax_reports_non_convergence() {
        let g = SpatialGrid::new(20.0, 256).unwrap();
        let cfg = RelaxConfig {
            max_steps: 3,
            ..Default::default()
        };
        assert!(matches!(
            relax_to_ground(&g, |x| 0.5 * x * x, &cfg),
            Err(Error::Convergence { steps: 3, .. })
        ));
    }

    #[test]
    fn lattice_mismatch_is_structural() {
        let g = SpatialGrid::new(50.0, 512).unwrap();
        let cfg = PropagationConfig::default();
        let p = Propagator::new(&g, vec![0.0; 512], &cfg, 0.05).unwrap();
        let psi = WaveFunction::from_fn(g, |x| Complex64::new((-x * x).exp(), 0.0)).unwrap();
        let other = TimeLattice::uniform(0.1, 10).unwrap();
        assert!(matches!(p.propagate(&psi, &other, &[]), Err(Error::Structural(_))));
        let lat = TimeLattice::uniform(0.05, 10).unwrap();
        let w = FieldWaveform::zeros(TimeLattice::uniform(0.05, 11).unwrap());
        assert!(p.propagate(&psi, &lat, &[&w]).is_err());
    }

    #[test]
    fn blow_up_is_reported() {
        let g = SpatialGrid::new(50.0, 512).unwrap();
        let cfg = PropagationConfig::default();
        let p = Propagator::new(&g, vec![0.0; 512], &cfg, 0.05).unwrap();
        let mut psi = WaveFunction::from_fn(g, |x| Complex64::new((-x * x).exp(), 0.0)).unwrap();
        psi.amplitudes[256] = Complex64::new(f64::NAN, 0.0);
        let lat = TimeLattice::uniform(0.05, 10).unwrap();
        assert!(matches!(
            p.propagate(&psi, &lat, &[]),
            Err(Error::NumericalInstability { .. })
        ));
    }
}
