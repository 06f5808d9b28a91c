//! Driving fields: the sin²-envelope laser pulse, phase-randomized chaotic
//! light built from N oscillator modes, and the weak FRAG probe.
//!
//! Every waveform is sampled on a [`TimeLattice`] at half-step resolution so
//! the propagator can read the field at step midpoints.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{num_complex::Complex64, FftPlanner};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Uniform time lattice `t_j = j·dt/2`, `j = 0..=2·n_steps`.
///
/// `dt` is adjusted downward from the nominal step so the pulse end `T_p`
/// falls exactly on a step boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeLattice {
    pub dt: f64,
    pub n_steps: usize,
    pub pulse_steps: usize,
}

impl TimeLattice {
    /// Lattice covering `duration_factor · pulse_duration`.
    pub fn new(nominal_dt: f64, pulse_duration: f64, duration_factor: f64) -> Result<Self> {
        if !(nominal_dt > 0.0 && nominal_dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {nominal_dt}")));
        }
        if !(pulse_duration > 0.0 && pulse_duration.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "pulse duration must be positive, got {pulse_duration}"
            )));
        }
        if !(duration_factor >= 1.0) {
            return Err(Error::InvalidParameter(
                "run must last at least one pulse duration".into(),
            ));
        }
        let pulse_steps = (pulse_duration / nominal_dt).ceil() as usize;
        let dt = pulse_duration / pulse_steps as f64;
        let n_steps = ((duration_factor * pulse_duration / dt) - 1e-9).ceil() as usize;
        Ok(Self {
            dt,
            n_steps: n_steps.max(pulse_steps),
            pulse_steps,
        })
    }

    /// Lattice with no pulse reference: `n_steps` steps of exactly `dt`.
    pub fn uniform(dt: f64, n_steps: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) || n_steps == 0 {
            return Err(Error::InvalidParameter("empty or invalid lattice".into()));
        }
        Ok(Self {
            dt,
            n_steps,
            pulse_steps: n_steps,
        })
    }

    pub fn pulse_duration(&self) -> f64 {
        self.pulse_steps as f64 * self.dt
    }

    pub fn total_duration(&self) -> f64 {
        self.n_steps as f64 * self.dt
    }

    pub fn sample_spacing(&self) -> f64 {
        0.5 * self.dt
    }

    pub fn n_samples(&self) -> usize {
        2 * self.n_steps + 1
    }

    pub fn time(&self, j: usize) -> f64 {
        j as f64 * self.sample_spacing()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_samples()).map(|j| self.time(j)).collect()
    }

    /// Index of the last sample inside `[0, t_end]`.
    fn last_index_within(&self, t_end: f64) -> usize {
        let j = (t_end / self.sample_spacing() + 1e-9).floor() as usize;
        j.min(self.n_samples() - 1)
    }

    fn check_covers(&self, t_end: f64) -> Result<()> {
        if self.total_duration() + 1e-9 * t_end < t_end {
            return Err(Error::Structural(format!(
                "lattice ends at {} but the field lasts until {}",
                self.total_duration(),
                t_end
            )));
        }
        Ok(())
    }
}

/// `F(t) = sin²(πt/T_p) F₀ sin(ω₀t + δ)` on `[0, T_p]`, zero afterwards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LaserPulseSpec {
    pub f0: f64,
    pub omega0: f64,
    pub delta: f64,
    pub n_cycles: f64,
}

impl Default for LaserPulseSpec {
    fn default() -> Self {
        Self {
            f0: 0.02,
            omega0: 0.057,
            delta: 0.0,
            n_cycles: 10.0,
        }
    }
}

impl LaserPulseSpec {
    pub fn pulse_duration(&self) -> f64 {
        self.n_cycles * 2.0 * PI / self.omega0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f0 >= 0.0 && self.f0.is_finite()) {
            return Err(Error::InvalidParameter(format!("F0 must be >= 0, got {}", self.f0)));
        }
        if !(self.omega0 > 0.0 && self.omega0.is_finite()) {
            return Err(Error::InvalidParameter("omega0 must be positive".into()));
        }
        if !(self.n_cycles > 0.0 && self.n_cycles.is_finite()) {
            return Err(Error::InvalidParameter("n_cycles must be positive".into()));
        }
        Ok(())
    }

    pub fn value(&self, t: f64) -> f64 {
        sin2_pulse(t, self.pulse_duration(), self.f0, self.omega0, self.delta)
    }
}

fn sin2_pulse(t: f64, tp: f64, amplitude: f64, omega: f64, phase: f64) -> f64 {
    if t <= 0.0 || t >= tp {
        return 0.0;
    }
    let env = (PI * t / tp).sin();
    env * env * amplitude * (omega * t + phase).sin()
}

/// Weak probe sharing the pump envelope: `F_p(t) = f(t) F_p sin(ω_p t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeSpec {
    pub f_p: f64,
    pub omega_p: f64,
}

impl Default for ProbeSpec {
    fn default() -> Self {
        Self {
            f_p: 0.0005,
            omega_p: 0.267,
        }
    }
}

impl ProbeSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.f_p > 0.0 && self.f_p.is_finite()) {
            return Err(Error::InvalidParameter("probe amplitude must be positive".into()));
        }
        if !(self.omega_p > 0.0 && self.omega_p.is_finite()) {
            return Err(Error::InvalidParameter("probe frequency must be positive".into()));
        }
        Ok(())
    }
}

/// Spectral layout of the chaotic modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpectrumKind {
    /// `N` modes at band-interior midpoints of `[omega_min, omega_max]`.
    FlatBand {
        omega_min: f64,
        omega_max: f64,
        n_modes: usize,
    },
    /// `N` modes spread over `center ± width/2`.
    CenteredBand {
        center: f64,
        width: f64,
        n_modes: usize,
    },
    /// One mode per listed frequency.
    HarmonicComb { frequencies: Vec<f64> },
}

/// `Z(t) = √(2/N) Σ_n g(t) F_rms sin(ω_n t + φ_n)` with a rectangular
/// window `g` on `[0, T_p]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChaoticSpectrumSpec {
    pub spectrum: SpectrumKind,
    pub f_rms: f64,
}

impl Default for ChaoticSpectrumSpec {
    fn default() -> Self {
        Self {
            spectrum: SpectrumKind::FlatBand {
                omega_min: 0.0,
                omega_max: 0.75,
                n_modes: 512,
            },
            f_rms: 0.0015,
        }
    }
}

impl ChaoticSpectrumSpec {
    pub fn flat_band(omega_min: f64, omega_max: f64, n_modes: usize, f_rms: f64) -> Self {
        Self {
            spectrum: SpectrumKind::FlatBand {
                omega_min,
                omega_max,
                n_modes,
            },
            f_rms,
        }
    }

    pub fn centered_band(center: f64, width: f64, n_modes: usize, f_rms: f64) -> Self {
        Self {
            spectrum: SpectrumKind::CenteredBand {
                center,
                width,
                n_modes,
            },
            f_rms,
        }
    }

    pub fn n_modes(&self) -> usize {
        match &self.spectrum {
            SpectrumKind::FlatBand { n_modes, .. } | SpectrumKind::CenteredBand { n_modes, .. } => {
                *n_modes
            }
            SpectrumKind::HarmonicComb { frequencies } => frequencies.len(),
        }
    }

    /// Mode frequencies `ω_n`, validated.
    pub fn mode_frequencies(&self) -> Result<Vec<f64>> {
        if !(self.f_rms >= 0.0 && self.f_rms.is_finite()) {
            return Err(Error::InvalidParameter("F_rms must be >= 0".into()));
        }
        let freqs = match &self.spectrum {
            SpectrumKind::FlatBand {
                omega_min,
                omega_max,
                n_modes,
            } => {
                if *n_modes == 0 {
                    return Err(Error::Structural("chaotic field needs at least one mode".into()));
                }
                if !(*omega_min >= 0.0 && omega_max > omega_min) {
                    return Err(Error::Structural(format!(
                        "band [{omega_min}, {omega_max}] has non-positive width"
                    )));
                }
                let dw = (omega_max - omega_min) / *n_modes as f64;
                (1..=*n_modes)
                    .map(|n| omega_min + (n as f64 - 0.5) * dw)
                    .collect::<Vec<_>>()
            }
            SpectrumKind::CenteredBand {
                center,
                width,
                n_modes,
            } => {
                if *n_modes == 0 {
                    return Err(Error::Structural("chaotic field needs at least one mode".into()));
                }
                if !(*width > 0.0) {
                    return Err(Error::Structural(format!("band width {width} is not positive")));
                }
                let dw = width / *n_modes as f64;
                let lo = center - 0.5 * width;
                (1..=*n_modes)
                    .map(|n| lo + (n as f64 - 0.5) * dw)
                    .collect()
            }
            SpectrumKind::HarmonicComb { frequencies } => {
                if frequencies.is_empty() {
                    return Err(Error::Structural("empty harmonic comb".into()));
                }
                frequencies.clone()
            }
        };
        if freqs.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::Structural("all mode frequencies must be positive".into()));
        }
        Ok(freqs)
    }

    /// Draws the phases for one realization.
    pub fn realize(&self, seed: u64, realization: u64) -> Result<ChaoticRealization> {
        let frequencies = self.mode_frequencies()?;
        let phases = draw_phases(seed, realization, frequencies.len());
        Ok(ChaoticRealization {
            amplitude: (2.0 / frequencies.len() as f64).sqrt() * self.f_rms,
            frequencies,
            phases,
        })
    }
}

/// Uniform phases on `[0, 2π)` from the ChaCha stream `(seed, realization)`.
///
/// The stream depends only on its key, so realizations can be generated in any
/// order or in parallel.
pub fn draw_phases(seed: u64, realization: u64, count: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(realization);
    (0..count).map(|_| rng.random_range(0.0..2.0 * PI)).collect()
}

/// One concrete draw of the chaotic field.
#[derive(Debug, Clone, PartialEq)]
pub struct ChaoticRealization {
    pub frequencies: Vec<f64>,
    pub phases: Vec<f64>,
    /// Per-mode amplitude `√(2/N) F_rms`.
    pub amplitude: f64,
}

impl ChaoticRealization {
    /// Direct evaluation of the mode sum (no window).
    pub fn value(&self, t: f64) -> f64 {
        self.amplitude
            * self
                .frequencies
                .iter()
                .zip(&self.phases)
                .map(|(w, p)| (w * t + p).sin())
                .sum::<f64>()
    }
}

/// Sampled field on a lattice plus a human-readable provenance string.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldWaveform {
    pub lattice: TimeLattice,
    pub values: Vec<f64>,
    pub provenance: String,
}

impl FieldWaveform {
    pub fn zeros(lattice: TimeLattice) -> Self {
        Self {
            lattice,
            values: vec![0.0; lattice.n_samples()],
            provenance: "zero".into(),
        }
    }

    pub fn times(&self) -> Vec<f64> {
        self.lattice.times()
    }

    /// Field at the midpoint of propagation step `step`.
    pub fn at_step_midpoint(&self, step: usize) -> f64 {
        self.values[2 * step + 1]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Pointwise sum of waveforms on the same lattice.
    pub fn sum(parts: &[&FieldWaveform]) -> Result<FieldWaveform> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Structural("sum of no waveforms".into()))?;
        let mut out = FieldWaveform {
            lattice: first.lattice,
            values: first.values.clone(),
            provenance: first.provenance.clone(),
        };
        for p in &parts[1..] {
            if p.lattice != out.lattice {
                return Err(Error::Structural("summing waveforms on different lattices".into()));
            }
            out.values.iter_mut().zip(&p.values).for_each(|(a, b)| *a += b);
            out.provenance.push_str(" + ");
            out.provenance.push_str(&p.provenance);
        }
        Ok(out)
    }

    /// Two-column CSV `t,value`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut s = String::new();
        writeln!(s, "# {}", self.provenance).unwrap();
        writeln!(s, "t,value").unwrap();
        for (t, v) in self.times().iter().zip(&self.values) {
            writeln!(s, "{t},{v}").unwrap();
        }
        std::fs::write(path, s).map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }
}

pub fn sample_laser(spec: &LaserPulseSpec, lattice: &TimeLattice) -> Result<FieldWaveform> {
    spec.validate()?;
    let tp = spec.pulse_duration();
    lattice.check_covers(tp)?;
    let values = lattice
        .times()
        .into_iter()
        .map(|t| sin2_pulse(t, tp, spec.f0, spec.omega0, spec.delta))
        .collect();
    Ok(FieldWaveform {
        lattice: *lattice,
        values,
        provenance: format!(
            "laser f0={} omega0={} delta={} n_cycles={}",
            spec.f0, spec.omega0, spec.delta, spec.n_cycles
        ),
    })
}

/// The probe uses the lattice's pulse duration as its envelope length.
pub fn sample_probe(spec: &ProbeSpec, lattice: &TimeLattice) -> Result<FieldWaveform> {
    spec.validate()?;
    let tp = lattice.pulse_duration();
    let values = lattice
        .times()
        .into_iter()
        .map(|t| sin2_pulse(t, tp, spec.f_p, spec.omega_p, 0.0))
        .collect();
    Ok(FieldWaveform {
        lattice: *lattice,
        values,
        provenance: format!("probe f_p={} omega_p={}", spec.f_p, spec.omega_p),
    })
}

/// Samples per block before a mode's phasor is re-anchored with an exact
/// `sin_cos`; bounds the drift of the rotation recurrence.
const REANCHOR: usize = 256;

/// Chaotic field on `[0, T_p]` of the lattice, zero afterwards.
pub fn sample_chaotic(
    spec: &ChaoticSpectrumSpec,
    lattice: &TimeLattice,
    seed: u64,
    realization: u64,
) -> Result<FieldWaveform> {
    let r = spec.realize(seed, realization)?;
    let h = lattice.sample_spacing();
    let last = lattice.last_index_within(lattice.pulse_duration());
    let mut values = vec![0.0; lattice.n_samples()];
    for (w, p) in r.frequencies.iter().zip(&r.phases) {
        let (rs, rc) = (w * h).sin_cos();
        let rot = Complex64::new(rc, rs);
        let mut start = 0;
        while start <= last {
            let end = (start + REANCHOR).min(last + 1);
            let (s, c) = (w * lattice.time(start) + p).sin_cos();
            let mut z = Complex64::new(c, s);
            for v in &mut values[start..end] {
                *v += z.im;
                z *= rot;
            }
            start = end;
        }
    }
    values[..=last].iter_mut().for_each(|v| *v *= r.amplitude);
    Ok(FieldWaveform {
        lattice: *lattice,
        values,
        provenance: format!("chaotic {:?} f_rms={} seed={seed} realization={realization}", spec.spectrum, spec.f_rms),
    })
}

/// `{3,5,7,...}·ω₀` (spacing 2ω₀), `count` lines from harmonic `start`.
pub fn make_odd_harmonic_comb(omega0: f64, count: usize, start: usize, f_rms: f64) -> ChaoticSpectrumSpec {
    ChaoticSpectrumSpec {
        spectrum: SpectrumKind::HarmonicComb {
            frequencies: (0..count).map(|i| (start + 2 * i) as f64 * omega0).collect(),
        },
        f_rms,
    }
}

/// `{3,4,5,...}·ω₀` (spacing ω₀), `count` lines from harmonic `start`.
pub fn make_all_harmonic_comb(omega0: f64, count: usize, start: usize, f_rms: f64) -> ChaoticSpectrumSpec {
    ChaoticSpectrumSpec {
        spectrum: SpectrumKind::HarmonicComb {
            frequencies: (0..count).map(|i| (start + i) as f64 * omega0).collect(),
        },
        f_rms,
    }
}

/// One-sided power spectral density.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub omegas: Vec<f64>,
    pub power: Vec<f64>,
}

impl Spectrum {
    pub fn mean_power_in(&self, lo: f64, hi: f64) -> f64 {
        let (sum, n) = self
            .omegas
            .iter()
            .zip(&self.power)
            .filter(|(w, _)| **w >= lo && **w <= hi)
            .fold((0.0, 0usize), |(s, n), (_, p)| (s + p, n + 1));
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    }

    /// Bin spacing in angular frequency.
    pub fn resolution(&self) -> f64 {
        self.omegas.get(1).copied().unwrap_or(0.0)
    }

    /// Indices of local maxima, strongest first.
    pub fn peaks(&self) -> Vec<usize> {
        let p = &self.power;
        let mut idx: Vec<usize> = (1..p.len().saturating_sub(1))
            .filter(|&i| p[i] > p[i - 1] && p[i] >= p[i + 1])
            .collect();
        idx.sort_by(|&a, &b| p[b].total_cmp(&p[a]));
        idx
    }

    /// CSV `omega,power`.
    pub fn write_csv(&self, path: &Path, header: &str) -> Result<()> {
        let mut s = String::new();
        for line in header.lines() {
            writeln!(s, "# {line}").unwrap();
        }
        writeln!(s, "omega,power").unwrap();
        for (w, p) in self.omegas.iter().zip(&self.power) {
            writeln!(s, "{w},{p}").unwrap();
        }
        std::fs::write(path, s).map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }
}

/// Ensemble-averaged periodogram over the pulse window `[0, T_p]`.
///
/// Normalized so that `Σ S(ω) dω` equals the time-averaged `Z²` over the
/// window.
pub fn psd(ensemble: &[FieldWaveform]) -> Result<Spectrum> {
    let first = ensemble
        .first()
        .ok_or_else(|| Error::Structural("PSD of an empty ensemble".into()))?;
    if ensemble.iter().any(|w| w.lattice != first.lattice) {
        return Err(Error::Structural("PSD ensemble mixes lattices".into()));
    }
    let lat = first.lattice;
    let n = lat.last_index_within(lat.pulse_duration()) + 1;
    let h = lat.sample_spacing();
    let window = n as f64 * h;
    let fft = FftPlanner::new().plan_fft_forward(n);
    let n_pos = n / 2 + 1;
    let mut acc = vec![0.0; n_pos];
    let mut buf = vec![Complex64::default(); n];
    for w in ensemble {
        for (b, v) in buf.iter_mut().zip(&w.values[..n]) {
            *b = Complex64::new(*v, 0.0);
        }
        fft.process(&mut buf);
        for (k, a) in acc.iter_mut().enumerate() {
            let x = buf[k] * h;
            let one_sided = if k == 0 || (n % 2 == 0 && k == n / 2) { 1.0 } else { 2.0 };
            *a += one_sided * x.norm_sqr() / (2.0 * PI * window);
        }
    }
    let dw = 2.0 * PI / window;
    let m = ensemble.len() as f64;
    Ok(Spectrum {
        omegas: (0..n_pos).map(|k| k as f64 * dw).collect(),
        power: acc.into_iter().map(|a| a / m).collect(),
    })
}
