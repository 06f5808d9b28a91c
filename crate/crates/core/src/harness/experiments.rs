//! Experiment runners. Each one expands its config into independent
//! (sweep point, realization) tasks, evaluates them on the rayon pool, and
//! reduces the results in task order.

use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;

use super::analysis::{bootstrap_peak, fit_peak, offset, onset};
use super::config::{ExperimentConfig, ExperimentKind};
use super::output::{OutputWriter, Provenance};
use crate::eigen::{solve_bound_states, EigenBasis};
use crate::error::{Error, Result};
use crate::fields::{
    make_all_harmonic_comb, make_odd_harmonic_comb, sample_chaotic, sample_laser,
    ChaoticSpectrumSpec, FieldWaveform, SpectrumKind, TimeLattice,
};
use crate::grid::SpatialGrid;
use crate::observables::{
    enhancement_from_samples, frag_scan, ionization_probability, ionization_probability_unchecked,
    level_populations, mean, stderr, FragSetup, IonizationProbability,
};
use crate::propagator::{relax_to_ground, DensityMap, PropagationConfig, Propagator, RunResult};
use crate::wavefunction::WaveFunction;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub mean: f64,
    pub stderr: f64,
}

impl Stat {
    pub fn exact(v: f64) -> Self {
        Self { mean: v, stderr: 0.0 }
    }

    pub fn of(samples: &[f64]) -> Self {
        Self {
            mean: mean(samples),
            stderr: stderr(samples),
        }
    }
}

/// One axis value on one curve.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub curve: String,
    pub x: f64,
    pub stats: Vec<(&'static str, Stat)>,
    /// Per-realization samples, in realization order.
    pub raw: Vec<(&'static str, Vec<f64>)>,
}

impl SweepPoint {
    pub fn stat(&self, name: &str) -> Option<Stat> {
        self.stats.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
    }

    pub fn raw(&self, name: &str) -> Option<&[f64]> {
        self.raw.iter().find(|(n, _)| *n == name).map(|(_, v)| v.as_slice())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub kind: ExperimentKind,
    pub axis: &'static str,
    pub n_realizations: usize,
    pub points: Vec<SweepPoint>,
    /// Derived scalars (peaks, onsets, leaked fractions, ...).
    pub summary: Vec<(String, f64)>,
    pub density: Vec<(String, DensityMap)>,
}

impl SweepResult {
    fn new(kind: ExperimentKind, axis: &'static str, n_realizations: usize) -> Self {
        Self {
            kind,
            axis,
            n_realizations,
            points: Vec::new(),
            summary: Vec::new(),
            density: Vec::new(),
        }
    }

    /// Curve labels in first-appearance order.
    pub fn curves(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for p in &self.points {
            if !out.contains(&p.curve) {
                out.push(p.curve.clone());
            }
        }
        out
    }

    /// Axis values and one statistic along a curve.
    pub fn series(&self, curve: &str, stat: &str) -> (Vec<f64>, Vec<Stat>) {
        self.points
            .iter()
            .filter(|p| p.curve == curve)
            .filter_map(|p| p.stat(stat).map(|s| (p.x, s)))
            .unzip()
    }

    pub fn summary_value(&self, key: &str) -> Option<f64> {
        self.summary.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    fn note(&mut self, key: impl Into<String>, value: f64) {
        self.summary.push((key.into(), value));
    }
}

/// Grid, relaxed ground state and propagator shared by every task.
pub struct Setup {
    pub grid: SpatialGrid,
    pub lattice: TimeLattice,
    pub propagator: Propagator,
    pub ground: WaveFunction,
    pub ground_energy: f64,
    unconverged: AtomicUsize,
}

impl Setup {
    pub fn new(cfg: &ExperimentConfig, propagation: &PropagationConfig) -> Result<Self> {
        let grid = cfg.grid;
        let v = cfg.potential;
        let (ground, ground_energy) = relax_to_ground(&grid, |x| v.evaluate(x), &cfg.relax)?;
        let lattice = propagation.lattice(cfg.laser.pulse_duration())?;
        let propagator = Propagator::new(&grid, grid.sample(|x| v.evaluate(x)), propagation, lattice.dt)?;
        Ok(Self {
            grid,
            lattice,
            propagator,
            ground,
            ground_energy,
            unconverged: AtomicUsize::new(0),
        })
    }

    pub fn run(&self, fields: &[&FieldWaveform]) -> Result<RunResult> {
        self.propagator.propagate(&self.ground, &self.lattice, fields)
    }

    /// Flux-integral ionization probability of one run.
    pub fn ionize(&self, fields: &[&FieldWaveform]) -> Result<f64> {
        Ok(self.probability(&self.run(fields)?)?.value)
    }

    /// Like [`ionization_probability`], except that a run which used up its
    /// drift budget is kept with the flux collected so far and counted in
    /// [`Setup::unconverged`] instead of failing the whole ensemble.
    pub fn probability(&self, run: &RunResult) -> Result<IonizationProbability> {
        if run.converged {
            ionization_probability(run)
        } else {
            self.unconverged.fetch_add(1, Ordering::Relaxed);
            Ok(ionization_probability_unchecked(run))
        }
    }

    /// Runs so far that ended before their flux record converged.
    pub fn unconverged(&self) -> usize {
        self.unconverged.load(Ordering::Relaxed)
    }

    pub fn chaotic(&self, spec: &ChaoticSpectrumSpec, seed: u64, realization: usize) -> Result<FieldWaveform> {
        sample_chaotic(spec, &self.lattice, seed, realization as u64)
    }
}

fn stage<T>(name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.in_stage(name))
}

/// Runs the experiment described by `cfg`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<SweepResult> {
    stage("config", cfg.validate())?;
    match cfg.kind {
        ExperimentKind::AmplitudeSweep => run_amplitude_sweep(cfg),
        ExperimentKind::EnhancementCurve => run_enhancement_curve(cfg),
        ExperimentKind::DensityMap => run_density_map(cfg),
        ExperimentKind::Populations => run_populations(cfg),
        ExperimentKind::Frag => run_frag(cfg),
        ExperimentKind::BandwidthSweep => run_bandwidth_sweep(cfg),
        ExperimentKind::NarrowbandCurve => run_narrowband_curve(cfg),
        ExperimentKind::HarmonicCurve => run_harmonic_curve(cfg),
    }
}

/// Ionization probability of the laser pulse alone against its peak field.
pub fn run_amplitude_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let setup = stage("setup", Setup::new(cfg, &cfg.propagation))?;
    let values = cfg.sweep_values()?;
    let probs = stage(
        "propagation",
        values
            .par_iter()
            .map(|&f0| {
                let spec = crate::fields::LaserPulseSpec { f0, ..cfg.laser };
                let w = sample_laser(&spec, &setup.lattice)?;
                let run = setup.run(&[&w])?;
                let ion = setup.probability(&run)?;
                Ok((ion.value, ion.norm_loss))
            })
            .collect::<Result<Vec<_>>>(),
    )?;
    let mut out = SweepResult::new(cfg.kind, "f0", 1);
    for (&f0, &(p, loss)) in values.iter().zip(&probs) {
        out.points.push(SweepPoint {
            curve: "laser".into(),
            x: f0,
            stats: vec![("p_l", Stat::exact(p)), ("norm_loss", Stat::exact(loss))],
            raw: vec![("p_l", vec![p])],
        });
    }
    out.note("unconverged_runs", setup.unconverged() as f64);
    Ok(out)
}

/// Paired `P_n` / `P_ln` samples for each axis value on one curve.
fn enhancement_points(
    setup: &Setup,
    cfg: &ExperimentConfig,
    label: &str,
    xs: &[f64],
    spec_at: impl Fn(f64) -> Result<ChaoticSpectrumSpec> + Sync,
    laser: &FieldWaveform,
    p_l: f64,
) -> Result<Vec<SweepPoint>> {
    let n = cfg.n_realizations;
    let specs = xs.iter().map(|&x| spec_at(x)).collect::<Result<Vec<_>>>()?;
    let tasks: Vec<(usize, usize)> = (0..xs.len())
        .filter(|&i| specs[i].f_rms > 0.0)
        .flat_map(|i| (0..n).map(move |r| (i, r)))
        .collect();
    let samples = stage(
        "propagation",
        tasks
            .par_iter()
            .map(|&(i, r)| {
                let z = setup.chaotic(&specs[i], cfg.master_seed, r)?;
                let p_n = setup.ionize(&[&z])?;
                let p_ln = setup.ionize(&[&z, laser])?;
                Ok((p_n, p_ln))
            })
            .collect::<Result<Vec<_>>>(),
    )?;
    let mut next = samples.into_iter();
    let mut points = Vec::with_capacity(xs.len());
    for (i, &x) in xs.iter().enumerate() {
        // A zero-amplitude chaotic field leaves the laser-only run unchanged.
        let (pn, pln): (Vec<f64>, Vec<f64>) = if specs[i].f_rms > 0.0 {
            next.by_ref().take(n).unzip()
        } else {
            (vec![0.0; n], vec![p_l; n])
        };
        let e = stage(
            "analysis",
            enhancement_from_samples(p_l, &pn, &pln, specs[i].f_rms, cfg.laser.f0),
        )?;
        points.push(SweepPoint {
            curve: label.to_string(),
            x,
            stats: vec![
                ("p_l", Stat::exact(p_l)),
                ("p_n", Stat::of(&pn)),
                ("p_ln", Stat::of(&pln)),
                ("eta", Stat {
                    mean: e.eta,
                    stderr: e.eta_stderr,
                }),
            ],
            raw: vec![("p_n", pn), ("p_ln", pln)],
        });
    }
    Ok(points)
}

/// η from resampled realization indices at every point of one curve.
fn resampled_eta(points: &[SweepPoint], p_l: f64, idx: &[usize]) -> Vec<f64> {
    points
        .iter()
        .map(|p| {
            let pick = |name| {
                let raw = p.raw(name).unwrap_or(&[]);
                idx.iter().map(|&i| raw[i]).sum::<f64>() / idx.len() as f64
            };
            let (pn, pln) = (pick("p_n"), pick("p_ln"));
            (pln - p_l - pn) / (p_l + pn)
        })
        .collect()
}

fn note_peak(out: &mut SweepResult, cfg: &ExperimentConfig, prefix: &str, points: &[SweepPoint], p_l: f64) {
    let xs: Vec<f64> = points.iter().map(|p| p.x).collect();
    let est = bootstrap_peak(
        &xs,
        cfg.n_realizations,
        cfg.analysis.bootstrap_resamples,
        cfg.master_seed ^ 0x9e37_79b9_7f4a_7c15,
        |idx| resampled_eta(points, p_l, idx),
    );
    if let Some(est) = est {
        out.note(format!("{prefix}peak_x"), est.peak.x);
        out.note(format!("{prefix}peak_x_stderr"), est.x_stderr);
        out.note(format!("{prefix}peak_eta"), est.peak.y);
        out.note(format!("{prefix}peak_eta_stderr"), est.y_stderr);
    }
}

fn laser_baseline(setup: &Setup, cfg: &ExperimentConfig) -> Result<(FieldWaveform, f64)> {
    let laser = stage("fields", sample_laser(&cfg.laser, &setup.lattice))?;
    let p_l = stage("propagation", setup.ionize(&[&laser]))?;
    Ok((laser, p_l))
}

/// η against the rms amplitude of the configured chaotic spectrum.
pub fn run_enhancement_curve(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let setup = stage("setup", Setup::new(cfg, &cfg.propagation))?;
    let (laser, p_l) = laser_baseline(&setup, cfg)?;
    let xs = cfg.sweep_values()?;
    let points = enhancement_points(
        &setup,
        cfg,
        "chaotic",
        xs,
        |f_rms| Ok(ChaoticSpectrumSpec { f_rms, ..cfg.chaotic.clone() }),
        &laser,
        p_l,
    )?;
    let mut out = SweepResult::new(cfg.kind, "f_rms", cfg.n_realizations);
    out.note("p_l", p_l);
    note_peak(&mut out, cfg, "", &points, p_l);
    out.points = points;
    out.note("unconverged_runs", setup.unconverged() as f64);
    Ok(out)
}

/// `P_n`, `P_ln` and η against the upper edge of a flat band.
pub fn run_bandwidth_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let SpectrumKind::FlatBand {
        omega_min, n_modes, ..
    } = cfg.chaotic.spectrum
    else {
        return Err(Error::Config("bandwidth sweeps need a flat_band spectrum".into()).in_stage("config"));
    };
    let setup = stage("setup", Setup::new(cfg, &cfg.propagation))?;
    let (laser, p_l) = laser_baseline(&setup, cfg)?;
    let xs = cfg.sweep_values()?;
    let points = enhancement_points(
        &setup,
        cfg,
        "flat_band",
        xs,
        |omega_max| {
            let spec = ChaoticSpectrumSpec::flat_band(omega_min, omega_max, n_modes, cfg.chaotic.f_rms);
            spec.mode_frequencies()?;
            Ok(spec)
        },
        &laser,
        p_l,
    )?;
    let mut out = SweepResult::new(cfg.kind, "omega_max", cfg.n_realizations);
    out.note("p_l", p_l);
    let frac = cfg.analysis.onset_fraction;
    for name in ["eta", "p_n", "p_ln"] {
        let ys: Vec<f64> = points.iter().map(|p| p.stat(name).map_or(f64::NAN, |s| s.mean)).collect();
        if let Some(v) = onset(xs, &ys, frac) {
            out.note(format!("{name}_onset"), v);
        }
        if let Some(v) = offset(xs, &ys, frac) {
            out.note(format!("{name}_offset"), v);
        }
    }
    note_peak(&mut out, cfg, "", &points, p_l);
    out.points = points;
    out.note("unconverged_runs", setup.unconverged() as f64);
    Ok(out)
}

/// One η(F_rms) curve per bandwidth of a band centred on the configured line.
pub fn run_narrowband_curve(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let setup = stage("setup", Setup::new(cfg, &cfg.propagation))?;
    let (laser, p_l) = laser_baseline(&setup, cfg)?;
    let xs = cfg.sweep_values()?;
    let nb = &cfg.narrowband;
    let mut out = SweepResult::new(cfg.kind, "f_rms", cfg.n_realizations);
    out.note("p_l", p_l);
    for &bw in &nb.bandwidths {
        let label = format!("bw={bw}");
        let points = enhancement_points(
            &setup,
            cfg,
            &label,
            xs,
            |f_rms| Ok(ChaoticSpectrumSpec::centered_band(nb.center, bw, nb.n_modes, f_rms)),
            &laser,
            p_l,
        )?;
        note_peak(&mut out, cfg, &format!("{label}."), &points, p_l);
        out.points.extend(points);
    }
    out.note("unconverged_runs", setup.unconverged() as f64);
    Ok(out)
}

/// η(F_rms) for combs of odd harmonics and of all harmonics of the laser.
pub fn run_harmonic_curve(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let setup = stage("setup", Setup::new(cfg, &cfg.propagation))?;
    let (laser, p_l) = laser_baseline(&setup, cfg)?;
    let xs = cfg.sweep_values()?;
    let h = cfg.harmonics;
    let w0 = cfg.laser.omega0;
    let mut out = SweepResult::new(cfg.kind, "f_rms", cfg.n_realizations);
    out.note("p_l", p_l);
    type Comb = fn(f64, usize, usize, f64) -> ChaoticSpectrumSpec;
    let combs: [(&str, Comb); 2] = [("odd", make_odd_harmonic_comb), ("all", make_all_harmonic_comb)];
    for (label, make) in combs {
        let points = enhancement_points(
            &setup,
            cfg,
            label,
            xs,
            |f_rms| Ok(make(w0, h.count, h.start, f_rms)),
            &laser,
            p_l,
        )?;
        note_peak(&mut out, cfg, &format!("{label}."), &points, p_l);
        out.points.extend(points);
    }
    out.note("unconverged_runs", setup.unconverged() as f64);
    Ok(out)
}

/// Largest-to-mean ratio of the monitor flux over the post-pulse part of the
/// lattice.
fn late_flux_ratio(flux: &[f64], from: usize) -> f64 {
    let tail = &flux[from.min(flux.len())..];
    let m = mean(tail);
    tail.iter().cloned().fold(f64::MIN, f64::max) / m
}

/// Density maps for laser only (a), chaotic only (b), both (c), and the
/// ensemble average of (c) over realizations (d).
pub fn run_density_map(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let mut prop = cfg.propagation;
    if prop.record_stride == 0 {
        prop.record_stride = cfg.analysis.density_stride;
    }
    let setup = stage("setup", Setup::new(cfg, &prop))?;
    let lat = setup.lattice;
    let laser = stage("fields", sample_laser(&cfg.laser, &lat))?;
    let n = cfg.n_realizations;

    struct Panel {
        leaked: f64,
        map: DensityMap,
        flux: Vec<f64>,
    }
    let panel = |fields: &[&FieldWaveform]| -> Result<Panel> {
        let run = setup.run(fields)?;
        let leaked = setup.probability(&run)?.value;
        let mut flux = run.flux.total();
        flux.truncate(lat.n_steps);
        let map = run
            .density_map
            .ok_or_else(|| Error::Structural("density map was not recorded".into()))?;
        Ok(Panel { leaked, map, flux })
    };

    let a = stage("propagation", panel(&[&laser]))?;
    let b = stage(
        "propagation",
        setup.chaotic(&cfg.chaotic, cfg.master_seed, 0).and_then(|z| panel(&[&z])),
    )?;
    let combined = stage(
        "propagation",
        (0..n)
            .into_par_iter()
            .map(|r| {
                let z = setup.chaotic(&cfg.chaotic, cfg.master_seed, r)?;
                panel(&[&z, &laser])
            })
            .collect::<Result<Vec<_>>>(),
    )?;

    let c = &combined[0];
    let mut d_map = c.map.clone();
    let mut d_flux = vec![0.0; c.flux.len()];
    d_map.values.iter_mut().for_each(|v| *v = 0.0);
    for p in &combined {
        d_map.values.iter_mut().zip(&p.map.values).for_each(|(s, v)| *s += v);
        d_flux.iter_mut().zip(&p.flux).for_each(|(s, v)| *s += v);
    }
    d_map.values.iter_mut().for_each(|v| *v /= n as f64);
    d_flux.iter_mut().for_each(|v| *v /= n as f64);
    let leaked_d: Vec<f64> = combined.iter().map(|p| p.leaked).collect();

    let from = lat.pulse_steps;
    let mut out = SweepResult::new(cfg.kind, "panel", n);
    let entries = [
        ("a", Stat::exact(a.leaked), late_flux_ratio(&a.flux, from)),
        ("b", Stat::exact(b.leaked), late_flux_ratio(&b.flux, from)),
        ("c", Stat::exact(c.leaked), late_flux_ratio(&c.flux, from)),
        ("d", Stat::of(&leaked_d), late_flux_ratio(&d_flux, from)),
    ];
    for (i, (label, leaked, ratio)) in entries.into_iter().enumerate() {
        out.note(format!("leaked_{label}"), leaked.mean);
        out.note(format!("late_flux_max_to_mean_{label}"), ratio);
        out.points.push(SweepPoint {
            curve: label.into(),
            x: i as f64,
            stats: vec![("leaked", leaked), ("late_flux_max_to_mean", Stat::exact(ratio))],
            raw: vec![("leaked", if label == "d" { leaked_d.clone() } else { vec![leaked.mean] })],
        });
    }
    out.density = vec![
        ("a".into(), a.map),
        ("b".into(), b.map),
        ("c".into(), combined[0].map.clone()),
        ("d".into(), d_map),
    ];
    out.note("unconverged_runs", setup.unconverged() as f64);
    Ok(out)
}

/// Bound states with the ground level replaced by the relaxed state.
pub fn refined_basis(cfg: &ExperimentConfig, setup: &Setup) -> Result<EigenBasis> {
    let v = cfg.potential;
    solve_bound_states(&setup.grid, |x| v.evaluate(x), cfg.analysis.levels)?
        .with_ground_state(setup.ground.clone(), setup.ground_energy)
}

/// Level populations at the end of the pulse for laser only, chaotic only,
/// and both.
pub fn run_populations(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let setup = stage("setup", Setup::new(cfg, &cfg.propagation))?;
    let basis = stage("eigen", refined_basis(cfg, &setup))?;
    let laser = stage("fields", sample_laser(&cfg.laser, &setup.lattice))?;
    let n = cfg.n_realizations;
    let pops = |fields: &[&FieldWaveform]| -> Result<Vec<f64>> {
        level_populations(&setup.run(fields)?, &basis)
    };
    let p_laser = stage("propagation", pops(&[&laser]))?;
    let per_real = stage(
        "propagation",
        (0..n)
            .into_par_iter()
            .map(|r| {
                let z = setup.chaotic(&cfg.chaotic, cfg.master_seed, r)?;
                Ok((pops(&[&z])?, pops(&[&z, &laser])?))
            })
            .collect::<Result<Vec<_>>>(),
    )?;
    let mut out = SweepResult::new(cfg.kind, "level", n);
    for k in 0..basis.len() {
        let chaotic: Vec<f64> = per_real.iter().map(|(c, _)| c[k]).collect();
        let both: Vec<f64> = per_real.iter().map(|(_, b)| b[k]).collect();
        for (label, stat, raw) in [
            ("laser", Stat::exact(p_laser[k]), vec![p_laser[k]]),
            ("chaotic", Stat::of(&chaotic), chaotic),
            ("laser+chaotic", Stat::of(&both), both),
        ] {
            out.points.push(SweepPoint {
                curve: label.into(),
                x: k as f64,
                stats: vec![("population", stat), ("energy", Stat::exact(basis.energies[k]))],
                raw: vec![("population", raw)],
            });
        }
    }
    for label in ["laser", "chaotic", "laser+chaotic"] {
        let (_, s) = out.series(label, "population");
        let total = s.iter().map(|s| s.mean).sum::<f64>();
        out.note(format!("sum_{label}"), total);
    }
    Ok(out)
}

/// Probe-induced ground-state depletion and absorbed energy, bare and driven.
pub fn run_frag(cfg: &ExperimentConfig) -> Result<SweepResult> {
    // The gain profile is read at the end of the pulse; no drift is needed.
    let prop = PropagationConfig {
        duration_factor: 1.0,
        max_extra_drift: 0.0,
        ..cfg.propagation
    };
    let setup = stage("setup", Setup::new(cfg, &prop))?;
    let frag = FragSetup {
        propagator: &setup.propagator,
        lattice: setup.lattice,
        ground: &setup.ground,
        ground_energy: setup.ground_energy,
    };
    let xs = cfg.sweep_values()?;
    let bare = stage("frag", frag_scan(&frag, None, xs, &cfg.probe))?;
    let driven = stage("frag", frag_scan(&frag, Some(&cfg.laser), xs, &cfg.probe))?;
    let mut out = SweepResult::new(cfg.kind, "omega_p", 1);
    for (label, pts) in [("bare", &bare), ("driven", &driven)] {
        for p in pts {
            out.points.push(SweepPoint {
                curve: label.into(),
                x: p.omega_p,
                stats: vec![
                    ("depletion", Stat::exact(p.ground_depletion)),
                    ("induced_depletion", Stat::exact(p.induced_depletion)),
                    ("absorbed_energy", Stat::exact(p.absorbed_energy)),
                    ("induced_energy", Stat::exact(p.induced_energy)),
                ],
                raw: vec![("induced_depletion", vec![p.induced_depletion])],
            });
        }
        let ys: Vec<f64> = pts.iter().map(|p| p.induced_depletion).collect();
        if let Some(i) = (0..ys.len()).max_by(|&a, &b| ys[a].total_cmp(&ys[b])) {
            out.note(format!("{label}_peak_omega"), xs[i]);
        }
        if let Some(p) = fit_peak(xs, &ys) {
            out.note(format!("{label}_fitted_peak_omega"), p.x);
        }
    }
    out.note("ground_energy", setup.ground_energy);
    Ok(out)
}

/// Energies of the refined bound-state basis and the relaxed ground energy.
pub struct EigenReport {
    pub relaxed_energy: f64,
    pub basis: EigenBasis,
}

impl EigenReport {
    pub fn first_transition(&self) -> f64 {
        self.basis.energies[1] - self.basis.energies[0]
    }
}

pub fn run_eigen(cfg: &ExperimentConfig) -> Result<EigenReport> {
    let grid = cfg.grid;
    let v = cfg.potential;
    let (ground, e) = stage("relax", relax_to_ground(&grid, |x| v.evaluate(x), &cfg.relax))?;
    let basis = stage(
        "eigen",
        solve_bound_states(&grid, |x| v.evaluate(x), cfg.analysis.levels)
            .and_then(|b| b.with_ground_state(ground, e)),
    )?;
    Ok(EigenReport {
        relaxed_energy: e,
        basis,
    })
}

/// Writes `<stem>.csv`, `<stem>_raw.csv`, `<stem>_summary.csv`, any density
/// maps, and `manifest.txt` into `dir`.
pub fn write_outputs(cfg: &ExperimentConfig, result: &SweepResult, dir: &std::path::Path) -> Result<std::path::PathBuf> {
    let mut w = OutputWriter::create(dir, Provenance::of(cfg)?)?;
    let stem = cfg.stem();
    let stat_names: Vec<&str> = result
        .points
        .first()
        .map(|p| p.stats.iter().map(|(n, _)| *n).collect())
        .unwrap_or_default();
    let mut columns = vec!["curve", result.axis];
    let labels: Vec<String> = stat_names
        .iter()
        .flat_map(|n| [format!("{n}_mean"), format!("{n}_stderr")])
        .collect();
    columns.extend(labels.iter().map(String::as_str));
    let rows: Vec<Vec<String>> = result
        .points
        .iter()
        .map(|p| {
            let mut row = vec![p.curve.clone(), p.x.to_string()];
            for (_, s) in &p.stats {
                row.push(s.mean.to_string());
                row.push(s.stderr.to_string());
            }
            row
        })
        .collect();
    w.write_csv(&format!("{stem}.csv"), &columns, &rows)?;

    let raw_names: Vec<&str> = result
        .points
        .first()
        .map(|p| p.raw.iter().map(|(n, _)| *n).collect())
        .unwrap_or_default();
    let mut raw_columns = vec!["curve", result.axis, "realization"];
    raw_columns.extend(&raw_names);
    let mut raw_rows = Vec::new();
    for p in &result.points {
        let count = p.raw.first().map_or(0, |(_, v)| v.len());
        for r in 0..count {
            let mut row = vec![p.curve.clone(), p.x.to_string(), r.to_string()];
            row.extend(p.raw.iter().map(|(_, v)| v[r].to_string()));
            raw_rows.push(row);
        }
    }
    w.write_csv(&format!("{stem}_raw.csv"), &raw_columns, &raw_rows)?;

    let summary: Vec<Vec<String>> = result
        .summary
        .iter()
        .map(|(k, v)| vec![k.clone(), v.to_string()])
        .collect();
    w.write_csv(&format!("{stem}_summary.csv"), &["key", "value"], &summary)?;

    for (label, map) in &result.density {
        w.write_density(&format!("{stem}_{label}"), map)?;
    }
    w.finish()
}

/// Eigen report as CSV plus the basis file and a manifest.
pub fn write_eigen_outputs(cfg: &ExperimentConfig, report: &EigenReport, dir: &std::path::Path) -> Result<std::path::PathBuf> {
    let mut w = OutputWriter::create(dir, Provenance::of(cfg)?)?;
    let rows: Vec<Vec<String>> = report
        .basis
        .energies
        .iter()
        .enumerate()
        .map(|(k, e)| vec![k.to_string(), e.to_string()])
        .collect();
    w.write_csv("eigen.csv", &["level", "energy"], &rows)?;
    report.basis.write_csv(&dir.join("eigenbasis.csv"))?;
    w.register("eigenbasis.csv");
    w.finish()
}
