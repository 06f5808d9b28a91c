use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::fields::{ChaoticSpectrumSpec, LaserPulseSpec, ProbeSpec, SpectrumKind};
use crate::grid::SpatialGrid;
use crate::potentials::SoftCorePotential;
use crate::propagator::{PropagationConfig, RelaxConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    AmplitudeSweep,
    EnhancementCurve,
    DensityMap,
    Populations,
    Frag,
    BandwidthSweep,
    NarrowbandCurve,
    HarmonicCurve,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::AmplitudeSweep,
        ExperimentKind::EnhancementCurve,
        ExperimentKind::DensityMap,
        ExperimentKind::Populations,
        ExperimentKind::Frag,
        ExperimentKind::BandwidthSweep,
        ExperimentKind::NarrowbandCurve,
        ExperimentKind::HarmonicCurve,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::AmplitudeSweep => "amplitude_sweep",
            ExperimentKind::EnhancementCurve => "enhancement_curve",
            ExperimentKind::DensityMap => "density_map",
            ExperimentKind::Populations => "populations",
            ExperimentKind::Frag => "frag",
            ExperimentKind::BandwidthSweep => "bandwidth_sweep",
            ExperimentKind::NarrowbandCurve => "narrowband_curve",
            ExperimentKind::HarmonicCurve => "harmonic_curve",
        }
    }

    /// Sweep axis the experiment expects, if any.
    pub fn sweep_parameter(self) -> Option<SweepParameter> {
        match self {
            ExperimentKind::AmplitudeSweep => Some(SweepParameter::F0),
            ExperimentKind::EnhancementCurve
            | ExperimentKind::NarrowbandCurve
            | ExperimentKind::HarmonicCurve => Some(SweepParameter::FRms),
            ExperimentKind::BandwidthSweep => Some(SweepParameter::OmegaMax),
            ExperimentKind::Frag => Some(SweepParameter::OmegaP),
            ExperimentKind::DensityMap | ExperimentKind::Populations => None,
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    F0,
    FRms,
    OmegaMax,
    OmegaP,
}

impl SweepParameter {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParameter::F0 => "f0",
            SweepParameter::FRms => "f_rms",
            SweepParameter::OmegaMax => "omega_max",
            SweepParameter::OmegaP => "omega_p",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NarrowbandSettings {
    pub center: f64,
    pub bandwidths: Vec<f64>,
    pub n_modes: usize,
}

impl Default for NarrowbandSettings {
    fn default() -> Self {
        Self {
            center: 0.267,
            bandwidths: vec![0.001, 0.015, 0.2],
            n_modes: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HarmonicSettings {
    /// Lines per comb.
    pub count: usize,
    /// Lowest harmonic order.
    pub start: usize,
}

impl Default for HarmonicSettings {
    fn default() -> Self {
        Self { count: 6, start: 3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSettings {
    /// Fraction of the plateau used for onset/offset crossings.
    pub onset_fraction: f64,
    pub bootstrap_resamples: usize,
    /// Bound levels used for populations and FRAG.
    pub levels: usize,
    /// Density snapshot spacing in steps when the propagation section leaves
    /// it at 0.
    pub density_stride: usize,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        Self {
            onset_fraction: 0.5,
            bootstrap_resamples: 200,
            levels: 15,
            density_stride: 40,
        }
    }
}

/// One experiment, as read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// File stem for outputs; defaults to the kind.
    #[serde(default)]
    pub name: String,
    #[serde(default = "default_realizations")]
    pub n_realizations: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub grid: SpatialGrid,
    #[serde(default)]
    pub potential: SoftCorePotential,
    #[serde(default)]
    pub propagation: PropagationConfig,
    #[serde(default)]
    pub relax: RelaxConfig,
    #[serde(default)]
    pub laser: LaserPulseSpec,
    #[serde(default)]
    pub chaotic: ChaoticSpectrumSpec,
    #[serde(default)]
    pub probe: ProbeSpec,
    pub sweep: Option<Sweep>,
    #[serde(default)]
    pub narrowband: NarrowbandSettings,
    #[serde(default)]
    pub harmonics: HarmonicSettings,
    #[serde(default)]
    pub analysis: AnalysisSettings,
}

fn default_realizations() -> usize {
    10
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("output")
}

fn range(start: f64, step: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| start + step * i as f64).collect()
}

impl ExperimentConfig {
    /// Bare config of the given kind with every section at its default.
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            name: String::new(),
            n_realizations: default_realizations(),
            master_seed: 0,
            output_dir: default_output_dir(),
            grid: SpatialGrid::default(),
            potential: SoftCorePotential::default(),
            propagation: PropagationConfig::default(),
            relax: RelaxConfig::default(),
            laser: LaserPulseSpec::default(),
            chaotic: ChaoticSpectrumSpec::default(),
            probe: ProbeSpec::default(),
            sweep: None,
            narrowband: NarrowbandSettings::default(),
            harmonics: HarmonicSettings::default(),
            analysis: AnalysisSettings::default(),
        }
    }

    /// Full-size protocol for each experiment kind.
    pub fn preset(kind: ExperimentKind) -> Self {
        let mut cfg = Self::new(kind);
        cfg.n_realizations = 50;
        let sweep = |parameter, values| Some(Sweep { parameter, values });
        match kind {
            ExperimentKind::AmplitudeSweep => {
                cfg.n_realizations = 1;
                cfg.sweep = sweep(SweepParameter::F0, range(0.0, 0.01, 11));
            }
            ExperimentKind::EnhancementCurve => {
                cfg.sweep = sweep(
                    SweepParameter::FRms,
                    vec![
                        0.0, 0.00025, 0.0005, 0.001, 0.0015, 0.002, 0.003, 0.005, 0.008, 0.012,
                        0.016,
                    ],
                );
            }
            ExperimentKind::DensityMap | ExperimentKind::Populations => {
                cfg.chaotic.f_rms = 0.0016;
            }
            ExperimentKind::Frag => {
                cfg.n_realizations = 1;
                cfg.sweep = sweep(SweepParameter::OmegaP, range(0.05, 0.005, 131));
            }
            ExperimentKind::BandwidthSweep => {
                cfg.chaotic.f_rms = 0.0016;
                cfg.sweep = sweep(SweepParameter::OmegaMax, range(0.05, 0.025, 29));
            }
            ExperimentKind::NarrowbandCurve => {
                cfg.sweep = sweep(
                    SweepParameter::FRms,
                    vec![0.0, 0.0005, 0.001, 0.002, 0.004, 0.008, 0.016],
                );
            }
            ExperimentKind::HarmonicCurve => {
                cfg.n_realizations = 10;
                cfg.sweep = sweep(
                    SweepParameter::FRms,
                    vec![0.0, 0.0005, 0.001, 0.002, 0.004, 0.008, 0.016],
                );
            }
        }
        cfg
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Output file stem.
    pub fn stem(&self) -> &str {
        if self.name.is_empty() {
            self.kind.as_str()
        } else {
            &self.name
        }
    }

    /// Values of the sweep axis, checked against the experiment kind.
    pub fn sweep_values(&self) -> Result<&[f64]> {
        match (&self.sweep, self.kind.sweep_parameter()) {
            (Some(s), Some(p)) if s.parameter == p => Ok(&s.values),
            (Some(s), Some(p)) => Err(Error::Config(format!(
                "{} sweeps {}, not {}",
                self.kind,
                p.as_str(),
                s.parameter.as_str()
            ))),
            (None, Some(p)) => Err(Error::Config(format!(
                "{} needs a [sweep] over {}",
                self.kind,
                p.as_str()
            ))),
            (_, None) => Ok(&[]),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.propagation.validate()?;
        self.laser.validate()?;
        self.probe.validate()?;
        self.chaotic.mode_frequencies()?;
        if self.n_realizations == 0 {
            return Err(Error::Config("n_realizations must be at least 1".into()));
        }
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                return Err(Error::Config("sweep values are empty".into()));
            }
            if s.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Config("sweep values must be finite".into()));
            }
            if s.values.iter().any(|v| *v < 0.0) {
                return Err(Error::Config("sweep values must be non-negative".into()));
            }
        }
        self.sweep_values()?;
        if self.kind == ExperimentKind::BandwidthSweep
            && !matches!(self.chaotic.spectrum, SpectrumKind::FlatBand { .. })
        {
            return Err(Error::Config("bandwidth sweeps need a flat_band spectrum".into()));
        }
        if self.kind == ExperimentKind::NarrowbandCurve && self.narrowband.bandwidths.is_empty() {
            return Err(Error::Config("narrowband.bandwidths is empty".into()));
        }
        let a = &self.analysis;
        if !(a.onset_fraction > 0.0 && a.onset_fraction < 1.0) {
            return Err(Error::Config("analysis.onset_fraction must lie in (0, 1)".into()));
        }
        if a.levels < 2 {
            return Err(Error::Config("analysis.levels must be at least 2".into()));
        }
        if a.density_stride == 0 {
            return Err(Error::Config("analysis.density_stride must be positive".into()));
        }
        Ok(())
    }

    /// SHA-256 of the canonical TOML form, ignoring the output directory.
    pub fn hash(&self) -> Result<String> {
        let mut canonical = self.clone();
        canonical.output_dir = PathBuf::new();
        let text = canonical.to_toml_string()?;
        Ok(hex(&Sha256::digest(text.as_bytes())))
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_and_round_trip() {
        for kind in ExperimentKind::ALL {
            let cfg = ExperimentConfig::preset(kind);
            cfg.validate().unwrap();
            let text = cfg.to_toml_string().unwrap();
            let back = ExperimentConfig::from_toml_str(&text).unwrap();
            assert_eq!(back, cfg, "{kind}");
        }
    }

    #[test]
    fn minimal_file_fills_defaults() {
        let cfg = ExperimentConfig::from_toml_str(
            "kind = \"enhancement_curve\"\n[sweep]\nparameter = \"f_rms\"\nvalues = [0.0, 0.001]\n",
        )
        .unwrap();
        assert_eq!(cfg.grid, SpatialGrid::default());
        assert_eq!(cfg.n_realizations, 10);
        assert_eq!(cfg.stem(), "enhancement_curve");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ExperimentConfig::from_toml_str(
            "kind = \"frag\"\n[laser]\nf_0 = 0.02\n[sweep]\nparameter = \"omega_p\"\nvalues = [0.3]\n",
        );
        assert!(matches!(err, Err(Error::Config(_))));
        let err = ExperimentConfig::from_toml_str("kind = \"frag\"\nseed = 3\n");
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn sweep_must_match_kind() {
        let err = ExperimentConfig::from_toml_str(
            "kind = \"amplitude_sweep\"\n[sweep]\nparameter = \"f_rms\"\nvalues = [0.1]\n",
        );
        assert!(err.is_err());
        let err = ExperimentConfig::from_toml_str(
            "kind = \"amplitude_sweep\"\n[sweep]\nparameter = \"f0\"\nvalues = []\n",
        );
        assert!(err.is_err());
        assert!(ExperimentConfig::from_toml_str("kind = \"amplitude_sweep\"\n").is_err());
    }

    #[test]
    fn hash_ignores_output_dir_only() {
        let a = ExperimentConfig::preset(ExperimentKind::Frag);
        let mut b = a.clone();
        b.output_dir = PathBuf::from("/elsewhere");
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
        b.master_seed = 1;
        assert_ne!(a.hash().unwrap(), b.hash().unwrap());
    }

    #[test]
    fn spectrum_table_parses() {
        let cfg = ExperimentConfig::from_toml_str(
            "kind = \"bandwidth_sweep\"\n[chaotic]\nf_rms = 0.016\n[chaotic.spectrum]\nkind = \"flat_band\"\nomega_min = 0.0\nomega_max = 0.75\nn_modes = 256\n[sweep]\nparameter = \"omega_max\"\nvalues = [0.3]\n",
        )
        .unwrap();
        assert_eq!(cfg.chaotic.n_modes(), 256);
    }
}
