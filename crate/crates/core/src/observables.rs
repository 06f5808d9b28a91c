//! Observables computed from finished runs: ionization probability from the
//! monitor flux, the enhancement factor, level populations at the end of the
//! pulse, and frequency-resolved atomic gain (FRAG) scans.

use rayon::prelude::*;
use serde::Serialize;

use crate::eigen::EigenBasis;
use crate::error::{Error, Result};
use crate::fields::{sample_laser, sample_probe, LaserPulseSpec, ProbeSpec, TimeLattice};
use crate::propagator::{Propagator, RunResult};
use crate::wavefunction::{inner_product, WaveFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IonizationMethod {
    FluxIntegral,
    NormLoss,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IonizationProbability {
    pub value: f64,
    pub method: IonizationMethod,
    /// `1 - final norm`, kept for cross-checking the flux value.
    pub norm_loss: f64,
    /// Unclipped flux integral.
    pub raw_flux: f64,
}

/// `∫(j₊ + j₋)dt`, clipped to `[0, 1]`. The run must have reached flux
/// convergence.
pub fn ionization_probability(run: &RunResult) -> Result<IonizationProbability> {
    if !run.converged {
        return Err(Error::StaleFlux {
            rate: run.drain_rate,
        });
    }
    Ok(ionization_probability_unchecked(run))
}

/// Same as [`ionization_probability`] without the convergence gate.
pub fn ionization_probability_unchecked(run: &RunResult) -> IonizationProbability {
    let raw = run.flux.integrated();
    IonizationProbability {
        value: raw.clamp(0.0, 1.0),
        method: IonizationMethod::FluxIntegral,
        norm_loss: run.norm_loss(),
        raw_flux: raw,
    }
}

/// Ensemble statistics of the paired samples entering an enhancement point.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct EnsembleStats {
    pub n_realizations: usize,
    /// Variance of the ensemble mean of `P_n`.
    pub var_mean_pn: f64,
    /// Variance of the ensemble mean of `P_ln`.
    pub var_mean_pln: f64,
    /// Covariance of the two means (realizations are paired).
    pub cov_mean: f64,
}

impl EnsembleStats {
    pub fn from_samples(pn: &[f64], pln: &[f64]) -> Self {
        let n = pn.len();
        if n < 2 || pln.len() != n {
            return Self {
                n_realizations: n,
                ..Default::default()
            };
        }
        let m_n = mean(pn);
        let m_ln = mean(pln);
        let nf = n as f64;
        let var = |xs: &[f64], m: f64| xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (nf - 1.0);
        let cov = pn
            .iter()
            .zip(pln)
            .map(|(a, b)| (a - m_n) * (b - m_ln))
            .sum::<f64>()
            / (nf - 1.0);
        Self {
            n_realizations: n,
            var_mean_pn: var(pn, m_n) / nf,
            var_mean_pln: var(pln, m_ln) / nf,
            cov_mean: cov / nf,
        }
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Standard error of the mean.
pub fn stderr(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / ((n - 1) as f64 * n as f64)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnhancementPoint {
    pub p_l: f64,
    pub p_n: f64,
    pub p_ln: f64,
    pub eta: f64,
    pub eta_stderr: f64,
    pub f_rms: f64,
    pub f0: f64,
    pub n_realizations: usize,
}

/// `η = (P_ln − (P_l + P_n)) / (P_l + P_n)`; the standard error follows from
/// the ensemble scatter of `P_n` and `P_ln` to first order.
pub fn enhancement(p_l: f64, p_n: f64, p_ln: f64, stats: &EnsembleStats) -> Result<EnhancementPoint> {
    let base = p_l + p_n;
    if !(base > 0.0) {
        return Err(Error::UndefinedBaseline);
    }
    let eta = (p_ln - base) / base;
    // η = A/B - 1 with A = P_ln, B = P_l + P_n.
    let var = stats.var_mean_pln / (base * base) + p_ln * p_ln * stats.var_mean_pn / base.powi(4)
        - 2.0 * p_ln * stats.cov_mean / base.powi(3);
    Ok(EnhancementPoint {
        p_l,
        p_n,
        p_ln,
        eta,
        eta_stderr: var.max(0.0).sqrt(),
        f_rms: f64::NAN,
        f0: f64::NAN,
        n_realizations: stats.n_realizations,
    })
}

/// Enhancement from paired per-realization samples.
pub fn enhancement_from_samples(
    p_l: f64,
    pn: &[f64],
    pln: &[f64],
    f_rms: f64,
    f0: f64,
) -> Result<EnhancementPoint> {
    if pn.len() != pln.len() {
        return Err(Error::Structural("unpaired enhancement samples".into()));
    }
    let stats = EnsembleStats::from_samples(pn, pln);
    let mut pt = enhancement(p_l, mean(pn), mean(pln), &stats)?;
    pt.f_rms = f_rms;
    pt.f0 = f0;
    Ok(pt)
}

/// `p_k = |⟨φ_k|Ψ(T_p)⟩|²` over the basis levels.
pub fn level_populations(run: &RunResult, basis: &EigenBasis) -> Result<Vec<f64>> {
    populations_of(&run.pulse_end_state, basis)
}

pub fn populations_of(state: &WaveFunction, basis: &EigenBasis) -> Result<Vec<f64>> {
    if state.grid != basis.grid {
        return Err(Error::Structural("state and basis live on different grids".into()));
    }
    basis
        .states
        .iter()
        .map(|phi| inner_product(phi, state).map(|c| c.norm_sqr()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FragPoint {
    pub omega_p: f64,
    /// `1 - |⟨φ₀|Ψ(T_p)⟩|²` with pump (if any) and probe.
    pub ground_depletion: f64,
    /// Depletion minus the probe-free baseline.
    pub induced_depletion: f64,
    /// `⟨Ψ|H₀|Ψ⟩ - E₀` over the unnormalized surviving state; equivalently the
    /// surviving-part gain plus `|E₀|` per unit of lost norm.
    pub absorbed_energy: f64,
    pub induced_energy: f64,
    pub driven: bool,
}

/// Everything a FRAG scan needs besides the probe frequencies.
pub struct FragSetup<'a> {
    pub propagator: &'a Propagator,
    /// Lattice ending at `T_p`; its pulse duration sets the probe envelope.
    pub lattice: TimeLattice,
    pub ground: &'a WaveFunction,
    pub ground_energy: f64,
}

impl FragSetup<'_> {
    fn measure(&self, run: &RunResult) -> Result<(f64, f64)> {
        let state = &run.pulse_end_state;
        let overlap = inner_product(self.ground, state)?.norm_sqr();
        let h = self
            .propagator
            .transformer()
            .apply_hamiltonian(state, self.propagator.potential())?;
        let energy = inner_product(state, &h)?.re;
        Ok((1.0 - overlap, energy - self.ground_energy))
    }
}

/// One propagation per probe frequency with field = pump (if given) + probe,
/// plus one probe-free baseline that is subtracted from each point.
pub fn frag_scan(
    setup: &FragSetup<'_>,
    pump: Option<&LaserPulseSpec>,
    probe_freqs: &[f64],
    probe: &ProbeSpec,
) -> Result<Vec<FragPoint>> {
    let lat = &setup.lattice;
    let pump_wave = pump.map(|p| sample_laser(p, lat)).transpose()?;
    let (base_dep, base_energy) = match &pump_wave {
        Some(w) => setup.measure(&setup.propagator.propagate(setup.ground, lat, &[w])?)?,
        None => (0.0, 0.0),
    };
    probe_freqs
        .par_iter()
        .map(|&omega_p| {
            let point = || -> Result<FragPoint> {
                let spec = ProbeSpec { omega_p, ..*probe };
                let probe_wave = sample_probe(&spec, lat)?;
                let mut fields = vec![&probe_wave];
                if let Some(w) = &pump_wave {
                    fields.push(w);
                }
                let run = setup.propagator.propagate(setup.ground, lat, &fields)?;
                let (dep, energy) = setup.measure(&run)?;
                Ok(FragPoint {
                    omega_p,
                    ground_depletion: dep,
                    induced_depletion: dep - base_dep,
                    absorbed_energy: energy,
                    induced_energy: energy - base_energy,
                    driven: pump.is_some(),
                })
            };
            point().map_err(|e| Error::FragPoint {
                omega_p,
                source: Box::new(e),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn linear_response_gives_zero() {
        let pt = enhancement(0.01, 0.02, 0.03, &EnsembleStats::default()).unwrap();
        assert_eq!(pt.eta, 0.0);
    }

    #[test]
    fn arithmetic_example() {
        let pt = enhancement(0.001, 0.001, 0.074, &EnsembleStats::default()).unwrap();
        assert!((pt.eta - 36.0).abs() < 1e-12);
    }

    #[test]
    fn dominant_laser_gives_near_zero() {
        let pt = enhancement(0.5, 1e-6, 0.5, &EnsembleStats::default()).unwrap();
        assert!(pt.eta.abs() < 1e-5);
    }

    #[test]
    fn zero_baseline_is_an_error() {
        assert!(matches!(
            enhancement(0.0, 0.0, 0.1, &EnsembleStats::default()),
            Err(Error::UndefinedBaseline)
        ));
    }

    #[test]
    fn stderr_from_paired_samples() {
        // Perfectly correlated P_ln = 2 P_n: η depends on the samples only
        // through the means, and the delta-method variance is positive.
        let pn = [0.01, 0.02, 0.03, 0.04];
        let pln: Vec<f64> = pn.iter().map(|x| 2.0 * x + 0.01).collect();
        let pt = enhancement_from_samples(0.001, &pn, &pln, 0.001, 0.02).unwrap();
        assert!(pt.eta_stderr > 0.0 && pt.eta_stderr.is_finite());
        assert_eq!(pt.n_realizations, 4);
        let s = stderr(&pn);
        assert!((s - (0.0001666666f64 / 4.0).sqrt()).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn eta_vanishes_for_linear_sum(pl in 1e-9f64..1.0, pn in 0.0f64..1.0) {
            let pt = enhancement(pl, pn, pl + pn, &EnsembleStats::default()).unwrap();
            prop_assert!(pt.eta.abs() < 1e-12);
        }

        #[test]
        fn eta_is_monotone_in_combined(pl in 1e-6f64..0.5, pn in 0.0f64..0.5, a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let s = EnsembleStats::default();
            let lo = enhancement(pl, pn, a.min(b), &s).unwrap().eta;
            let hi = enhancement(pl, pn, a.max(b), &s).unwrap().eta;
            prop_assert!(lo <= hi);
        }
    }
}
