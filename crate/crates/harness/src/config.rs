use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use w4_core::circuit::{DeterministicInteraction, RandomUnitarySpec};
use w4_core::linalg::BlochAxis;
use w4_core::protocol::{
    FreeEvolution, InitialTarget, Interaction, ProjectorMode, ProtocolConfig, RotationAxis,
};
use w4_core::seed::{derive_seed, label_hash};

use crate::error::{HarnessError, Result};

/// Output directory used when neither the config nor the environment sets one.
pub const DEFAULT_OUTPUT_DIR: &str = "w4reset-out";
/// Environment variable overriding the default output directory.
pub const OUTPUT_DIR_ENV: &str = "W4RESET_OUTPUT_DIR";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseId {
    Case1a,
    Case1b,
    Case1c,
    Case2Qpt,
    Case3Random,
    Custom,
}

impl CaseId {
    pub const ALL: [CaseId; 6] = [
        CaseId::Case1a,
        CaseId::Case1b,
        CaseId::Case1c,
        CaseId::Case2Qpt,
        CaseId::Case3Random,
        CaseId::Custom,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CaseId::Case1a => "case1a",
            CaseId::Case1b => "case1b",
            CaseId::Case1c => "case1c",
            CaseId::Case2Qpt => "case2_qpt",
            CaseId::Case3Random => "case3_random",
            CaseId::Custom => "custom",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.as_str() == s)
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TomographySettings {
    /// Shots per measurement setting.
    pub shots: u64,
    pub n_bootstrap: usize,
}

impl Default for TomographySettings {
    fn default() -> Self {
        Self {
            shots: 10_000,
            n_bootstrap: 200,
        }
    }
}

/// A declarative experiment. Exactly one of `sweep`, `n_random` and `single`
/// selects the run mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub case_id: CaseId,
    pub protocol: ProtocolConfig,
    /// Free-evolution angles as multiples of π.
    #[serde(default)]
    pub sweep: Option<Vec<f64>>,
    /// Number of random interactions; each run replaces the configured
    /// interaction with one drawn from its own seed.
    #[serde(default)]
    pub n_random: Option<usize>,
    #[serde(default)]
    pub single: bool,
    #[serde(default)]
    pub tomography: Option<TomographySettings>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub master_seed: u64,
}

pub fn default_output_dir() -> PathBuf {
    std::env::var_os(OUTPUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
}

/// Run mode resolved from a validated config.
#[derive(Clone, Debug, PartialEq)]
pub enum RunMode {
    Sweep(Vec<f64>),
    Random(usize),
    Single,
}

/// One run of an experiment: its protocol settings, seed and sweep angle.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSpec {
    pub index: usize,
    pub phi_over_pi: Option<f64>,
    pub seed: u64,
    pub protocol: ProtocolConfig,
}

fn sixteenths(ks: std::ops::RangeInclusive<u32>) -> Vec<f64> {
    ks.map(|k| f64::from(k) / 16.0).collect()
}

fn deterministic(spec: DeterministicInteraction) -> Interaction {
    Interaction::Deterministic { spec }
}

impl ExperimentConfig {
    /// Built-in settings for a named case, noiseless, with the mode the case
    /// was designed for.
    pub fn preset(case_id: CaseId) -> Self {
        let (protocol, sweep, n_random, single, tomography) = match case_id {
            CaseId::Case1a | CaseId::Custom => (
                ProtocolConfig::new(
                    InitialTarget::Pure {
                        axis: BlochAxis::Minus,
                    },
                    FreeEvolution::rotation(RotationAxis::Z, 0.0),
                    deterministic(DeterministicInteraction::XzIyx),
                ),
                Some(sixteenths(1..=8)),
                None,
                false,
                None,
            ),
            CaseId::Case1b => (
                ProtocolConfig::new(
                    InitialTarget::Pure {
                        axis: BlochAxis::One,
                    },
                    FreeEvolution::rotation(RotationAxis::X, 0.0),
                    deterministic(DeterministicInteraction::MzzIyx),
                ),
                Some(sixteenths(5..=8)),
                None,
                false,
                None,
            ),
            CaseId::Case1c => (
                ProtocolConfig::new(
                    InitialTarget::Mixed {
                        axis: BlochAxis::Minus,
                        idle_us: 1.0,
                        t1_us: None,
                        tphi_us: None,
                    },
                    FreeEvolution::rotation(RotationAxis::Z, 0.0),
                    deterministic(DeterministicInteraction::XzIyx),
                ),
                Some(sixteenths(5..=8)),
                None,
                false,
                None,
            ),
            CaseId::Case2Qpt => (
                ProtocolConfig::new(
                    InitialTarget::Pure {
                        axis: BlochAxis::Zero,
                    },
                    FreeEvolution::Identity,
                    deterministic(DeterministicInteraction::XzIyx),
                ),
                None,
                None,
                true,
                Some(TomographySettings::default()),
            ),
            CaseId::Case3Random => (
                ProtocolConfig::new(
                    InitialTarget::Pure {
                        axis: BlochAxis::One,
                    },
                    FreeEvolution::Identity,
                    Interaction::Random {
                        spec: RandomUnitarySpec::zero(),
                    },
                )
                .with_projector(ProjectorMode::Full6),
                None,
                Some(100),
                false,
                None,
            ),
        };
        Self {
            case_id,
            protocol,
            sweep,
            n_random,
            single,
            tomography,
            output_dir: default_output_dir(),
            master_seed: 0,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| HarnessError::config("<document>", e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn mode(&self) -> Result<RunMode> {
        let populated = usize::from(self.sweep.is_some())
            + usize::from(self.n_random.is_some())
            + usize::from(self.single);
        if populated != 1 {
            return Err(HarnessError::config(
                "sweep|n_random|single",
                format!("exactly one run mode must be set, found {populated}"),
            ));
        }
        Ok(match (&self.sweep, self.n_random) {
            (Some(grid), _) => RunMode::Sweep(grid.clone()),
            (_, Some(n)) => RunMode::Random(n),
            _ => RunMode::Single,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let mode = self.mode()?;
        match &mode {
            RunMode::Sweep(grid) => {
                if grid.is_empty() {
                    return Err(HarnessError::config("sweep", "angle grid is empty"));
                }
                if let Some(v) = grid.iter().find(|v| !(0.0..2.0).contains(*v)) {
                    return Err(HarnessError::config(
                        "sweep",
                        format!("phi/pi value {v} outside [0, 2)"),
                    ));
                }
                if !matches!(self.protocol.free_evolution, FreeEvolution::Rotation { .. }) {
                    return Err(HarnessError::config(
                        "protocol.free_evolution",
                        "a sweep needs a rotation free evolution",
                    ));
                }
            }
            RunMode::Random(0) => {
                return Err(HarnessError::config("n_random", "must be at least 1"));
            }
            RunMode::Random(_) | RunMode::Single => {}
        }
        if self.case_id == CaseId::Case2Qpt && mode != RunMode::Single {
            return Err(HarnessError::config(
                "single",
                "case2_qpt runs the six Bloch inputs as a single experiment",
            ));
        }
        if let Some(t) = &self.tomography {
            if t.shots == 0 {
                return Err(HarnessError::config(
                    "tomography.shots",
                    "must be at least 1",
                ));
            }
            if t.n_bootstrap == 0 {
                return Err(HarnessError::config(
                    "tomography.n_bootstrap",
                    "must be at least 1",
                ));
            }
        }
        self.protocol
            .validate()
            .map_err(|e| HarnessError::config("protocol", e.to_string()))?;
        if self.output_dir.as_os_str().is_empty() {
            return Err(HarnessError::config("output_dir", "path is empty"));
        }
        Ok(())
    }

    /// Seed of run `index`, independent of execution order.
    pub fn run_seed(&self, index: usize) -> u64 {
        derive_seed(
            self.master_seed,
            &[label_hash(self.case_id.as_str()), index as u64],
        )
    }

    /// Every run of a validated config, in index order.
    pub fn runs(&self) -> Result<Vec<RunSpec>> {
        self.validate()?;
        let spec = |index: usize, phi_over_pi: Option<f64>, protocol: ProtocolConfig| {
            let seed = self.run_seed(index);
            RunSpec {
                index,
                phi_over_pi,
                seed,
                protocol: ProtocolConfig { seed, ..protocol },
            }
        };
        Ok(match self.mode()? {
            RunMode::Sweep(grid) => grid
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    let mut p = self.protocol.clone();
                    if let FreeEvolution::Rotation { angle, .. } = &mut p.free_evolution {
                        *angle = v * PI;
                    }
                    spec(i, Some(v), p)
                })
                .collect(),
            RunMode::Random(n) => (0..n)
                .map(|i| {
                    let mut p = self.protocol.clone();
                    p.interaction = Interaction::Random {
                        spec: RandomUnitarySpec::from_seed(self.run_seed(i)),
                    };
                    spec(i, None, p)
                })
                .collect(),
            RunMode::Single if self.case_id == CaseId::Case2Qpt => BlochAxis::ALL
                .iter()
                .enumerate()
                .map(|(i, &axis)| {
                    let p = ProtocolConfig {
                        initial_target: InitialTarget::Pure { axis },
                        ..self.protocol.clone()
                    };
                    spec(i, None, p)
                })
                .collect(),
            RunMode::Single => {
                let phi = match self.protocol.free_evolution {
                    FreeEvolution::Rotation { angle, .. } => Some(angle / PI),
                    _ => None,
                };
                vec![spec(0, phi, self.protocol.clone())]
            }
        })
    }
}
