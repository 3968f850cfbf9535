//! Versioned JSON run configuration and the named parameter presets.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::ed::EdConfig;
use crate::gaussian::BogoliubovOptions;
use crate::lab::{from_lab_params, LabConversion, LabParams};
use crate::meanfield::{linspace, MeanFieldOptions};
use crate::model::{Boundary, CoulombScale, CouplingScheme, HopRange, ModelParams};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Geometry,
    Modes,
    Meanfield,
    Fluctuations,
    Ed,
    Sweep,
    Figure2,
    Figure3,
    Figure4,
}

impl Task {
    pub const ALL: [Task; 9] = [
        Task::Geometry,
        Task::Modes,
        Task::Meanfield,
        Task::Fluctuations,
        Task::Ed,
        Task::Sweep,
        Task::Figure2,
        Task::Figure3,
        Task::Figure4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Task::Geometry => "geometry",
            Task::Modes => "modes",
            Task::Meanfield => "meanfield",
            Task::Fluctuations => "fluctuations",
            Task::Ed => "ed",
            Task::Sweep => "sweep",
            Task::Figure2 => "figure2",
            Task::Figure3 => "figure3",
            Task::Figure4 => "figure4",
        }
    }

    pub fn parse(s: &str) -> Option<Task> {
        Task::ALL.into_iter().find(|t| t.name() == s)
    }
}

/// Coupling grid `start, ..., stop` with `points` entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl SweepGrid {
    pub fn values(&self) -> Vec<f64> {
        linspace(self.start, self.stop, self.points)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Overridden by `--out`.
    #[serde(default)]
    pub directory: Option<PathBuf>,
    /// Also dump the ED ground state in the binary vector layout.
    #[serde(default)]
    pub eigenvector: bool,
}

/// A complete, self-describing run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    /// Default task when none is given on the command line.
    #[serde(default)]
    pub task: Option<Task>,
    /// Dimensionless model; mutually exclusive with `lab`.
    #[serde(default)]
    pub model: Option<ModelParams>,
    #[serde(default)]
    pub lab: Option<LabParams>,
    #[serde(default)]
    pub sweep: Option<SweepGrid>,
    /// Chain lengths for the size scan of `figure3`.
    #[serde(default)]
    pub sizes: Vec<usize>,
    /// Coupling at which the size scan is evaluated.
    #[serde(default)]
    pub size_scan_g: Option<f64>,
    /// Couplings at which condensate profiles are written; empty picks three
    /// grid points above the detected transition.
    #[serde(default)]
    pub profile_g: Vec<f64>,
    /// Cutoffs for an ED convergence scan; empty means a single solve at `ed.cutoff`.
    #[serde(default)]
    pub ed_cutoffs: Vec<usize>,
    #[serde(default)]
    pub ed: EdConfig,
    #[serde(default)]
    pub meanfield: MeanFieldOptions,
    #[serde(default)]
    pub bogoliubov: BogoliubovOptions,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Configuration problem with the offending field path.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{path}: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            ConfigError::new(
                if path == "." { "<root>".into() } else { path },
                e.inner().to_string(),
            )
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.version != CONFIG_VERSION {
            return Err(ConfigError::new(
                "version",
                format!(
                    "unsupported version {}, expected {CONFIG_VERSION}",
                    self.version
                ),
            ));
        }
        match (&self.model, &self.lab) {
            (Some(_), Some(_)) => {
                return Err(ConfigError::new(
                    "model",
                    "give either `model` or `lab`, not both",
                ))
            }
            (None, None) => {
                return Err(ConfigError::new("model", "missing; give `model` or `lab`"))
            }
            _ => {}
        }
        self.resolve_model()?;
        if let Some(s) = &self.sweep {
            if s.points < 2 {
                return Err(ConfigError::new("sweep.points", "need at least 2 points"));
            }
            if !(s.start.is_finite() && s.stop.is_finite() && s.stop > s.start) {
                return Err(ConfigError::new(
                    "sweep",
                    "grid must be strictly increasing",
                ));
            }
            if s.start < 0.0 {
                return Err(ConfigError::new(
                    "sweep.start",
                    "couplings must be non-negative",
                ));
            }
        }
        if self.profile_g.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return Err(ConfigError::new(
                "profile_g",
                "couplings must be finite and non-negative",
            ));
        }
        if self.sizes.contains(&0) {
            return Err(ConfigError::new("sizes", "chain lengths must be positive"));
        }
        if self.ed_cutoffs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ConfigError::new("ed_cutoffs", "must be strictly ascending"));
        }
        let mf = &self.meanfield;
        if !(mf.damping >= 0.0 && mf.damping < 1.0) {
            return Err(ConfigError::new("meanfield.damping", "must lie in [0, 1)"));
        }
        if !(mf.tol > 0.0) {
            return Err(ConfigError::new("meanfield.tol", "must be positive"));
        }
        if !(self.bogoliubov.zero_mode_tol >= 0.0) {
            return Err(ConfigError::new(
                "bogoliubov.zero_mode_tol",
                "must be non-negative",
            ));
        }
        if self.ed.n_states == 0 {
            return Err(ConfigError::new("ed.n_states", "must be at least 1"));
        }
        Ok(())
    }

    /// The dimensionless model, converting lab parameters if needed.
    pub fn resolve_model(&self) -> Result<(ModelParams, Option<LabConversion>), ConfigError> {
        if let Some(m) = &self.model {
            m.validate().map_err(|e| prefixed("model", e))?;
            return Ok((m.clone(), None));
        }
        let lab = self
            .lab
            .as_ref()
            .ok_or_else(|| ConfigError::new("model", "missing"))?;
        let conv = from_lab_params(lab).map_err(|e| prefixed("lab", e))?;
        Ok((conv.model.clone(), Some(conv)))
    }

    pub fn sweep_or_default(&self) -> SweepGrid {
        self.sweep.unwrap_or(SweepGrid {
            start: 0.0,
            stop: 0.6,
            points: 121,
        })
    }
}

fn prefixed(root: &str, e: crate::error::CjtError) -> ConfigError {
    match e {
        crate::error::CjtError::InvalidParameter { field, reason } => {
            let path = if field.starts_with(root) {
                field
            } else {
                format!("{root}.{field}")
            };
            ConfigError::new(path, reason)
        }
        other => ConfigError::new(root, other.to_string()),
    }
}

/// Named presets for the reference parameter sets.
pub const PRESETS: [&str; 5] = ["fig2_homogeneous", "fig2_coulomb", "fig3", "fig4", "ca40"];

fn base(model: Option<ModelParams>, task: Task) -> RunConfig {
    RunConfig {
        version: CONFIG_VERSION,
        task: Some(task),
        model,
        lab: None,
        sweep: None,
        sizes: Vec::new(),
        size_scan_g: None,
        profile_g: Vec::new(),
        ed_cutoffs: Vec::new(),
        ed: EdConfig::default(),
        meanfield: MeanFieldOptions::default(),
        bogoliubov: BogoliubovOptions::default(),
        output: OutputConfig::default(),
    }
}

/// Homogeneous 20-ion chain: `Delta = 2.2`, nearest-neighbour `t = 0.5`,
/// local shift on, staggered basis.
pub fn homogeneous_chain(n_sites: usize) -> ModelParams {
    ModelParams {
        n_sites,
        omega_z: 1.0,
        delta_bare: 2.2,
        g: 0.0,
        coupling_scheme: CouplingScheme::Homogeneous {
            t: 0.5,
            range: HopRange::Nearest,
        },
        boundary: Boundary::Open,
        staggered: true,
        include_local_shift: true,
    }
}

/// Trapped Coulomb chain with the centre bond scaled to `0.5`.
pub fn coulomb_chain(n_sites: usize) -> ModelParams {
    ModelParams {
        coupling_scheme: CouplingScheme::Coulomb {
            scale: CoulombScale::CenterHop(0.5),
        },
        ..homogeneous_chain(n_sites)
    }
}

/// Short-range chain `t = 0.2`, `Delta = 2`.
pub fn short_range_chain(n_sites: usize) -> ModelParams {
    ModelParams {
        n_sites,
        omega_z: 1.0,
        delta_bare: 2.0,
        g: 0.0,
        coupling_scheme: CouplingScheme::ShortRange { t: 0.2 },
        boundary: Boundary::Open,
        staggered: false,
        include_local_shift: false,
    }
}

pub fn preset(name: &str) -> Option<RunConfig> {
    let fig2_grid = SweepGrid {
        start: 0.0,
        stop: 0.6,
        points: 241,
    };
    Some(match name {
        "fig2_homogeneous" => RunConfig {
            sweep: Some(fig2_grid),
            ..base(Some(homogeneous_chain(20)), Task::Figure2)
        },
        "fig2_coulomb" => RunConfig {
            sweep: Some(fig2_grid),
            ..base(Some(coulomb_chain(20)), Task::Figure2)
        },
        "fig3" => RunConfig {
            sweep: Some(SweepGrid {
                start: 0.0,
                stop: 0.6,
                points: 241,
            }),
            sizes: vec![10, 20, 40],
            size_scan_g: Some(0.3),
            ..base(Some(homogeneous_chain(20)), Task::Figure3)
        },
        "fig4" => RunConfig {
            sweep: Some(SweepGrid {
                start: 0.0,
                stop: 1.6,
                points: 33,
            }),
            ed: EdConfig {
                cutoff: 8,
                ..EdConfig::default()
            },
            ..base(Some(short_range_chain(2)), Task::Figure4)
        },
        "ca40" => RunConfig {
            lab: Some(LabParams::ca40(10)),
            sweep: Some(SweepGrid {
                start: 0.0,
                stop: 0.6,
                points: 241,
            }),
            ..base(None, Task::Figure3)
        },
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_round_trip() {
        for name in PRESETS {
            let cfg = preset(name).unwrap();
            cfg.validate().unwrap();
            let back = RunConfig::from_json(&cfg.to_json()).unwrap();
            assert_eq!(back, cfg, "{name}");
        }
        assert!(preset("nope").is_none());
    }

    #[test]
    fn errors_carry_field_paths() {
        let mut cfg = preset("fig2_homogeneous").unwrap();
        cfg.sweep = Some(SweepGrid {
            start: 0.0,
            stop: 1.0,
            points: 1,
        });
        assert_eq!(cfg.validate().unwrap_err().path, "sweep.points");

        let bad = r#"{"version": 1, "model": {"n_sites": "x"}}"#;
        let err = RunConfig::from_json(bad).unwrap_err();
        assert_eq!(err.path, "model.n_sites");

        let mut cfg = preset("fig4").unwrap();
        cfg.model.as_mut().unwrap().delta_bare = -1.0;
        assert_eq!(cfg.validate().unwrap_err().path, "model.delta_bare");
    }

    #[test]
    fn model_and_lab_are_exclusive() {
        let mut cfg = preset("ca40").unwrap();
        cfg.model = Some(short_range_chain(2));
        assert!(cfg.validate().is_err());
        cfg.model = None;
        cfg.lab = None;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn task_names() {
        for t in Task::ALL {
            assert_eq!(Task::parse(t.name()), Some(t));
            let json = serde_json::to_string(&t).unwrap();
            assert_eq!(json, format!("\"{}\"", t.name()));
        }
    }
}
