//! Run configuration: a flat TOML file whose keys can all be overridden by
//! command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::Context;
use clap::Args;
use cogap::datasets::DEFAULT_TEST_FRACTION;
use cogap::evaluation::{EvalConfig, Metric, ModelId};
use cogap::fitting::{FitConfig, FitSchedule, LossKind};
use cogap::model::{ActionSet, ControlScheme, InteractionMode, SimConfig};
use serde::{Deserialize, Serialize};

use crate::UsageError;

/// The four binary design choices of the cognitive model, written like
/// `NA12`: mode (I|N), control (A|J), rounds (1|2), loss (1|2).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct CmConfig {
    pub mode: InteractionMode,
    pub scheme: ControlScheme,
    pub schedule: FitSchedule,
    pub loss: LossKind,
}

impl Default for CmConfig {
    fn default() -> Self {
        Self {
            mode: InteractionMode::NonInteractive,
            scheme: ControlScheme::Acceleration,
            schedule: FitSchedule::Single,
            loss: LossKind::L2,
        }
    }
}

const CM_CONFIG_HELP: &str = "expected [CM_]<mode><control><rounds><loss> with mode I (interactive) or N \
     (non-interactive), control A (acceleration) or J (jerk), rounds 1 or 2, loss 1 or 2, e.g. NA12";

impl FromStr for CmConfig {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let code = s.strip_prefix("CM_").unwrap_or(s);
        let bad = || format!("invalid configuration `{s}`: {CM_CONFIG_HELP}");
        let c: Vec<char> = code.chars().collect();
        if c.len() != 4 {
            return Err(bad());
        }
        let mode = match c[0] {
            'I' => InteractionMode::Interactive,
            'N' => InteractionMode::NonInteractive,
            _ => return Err(bad()),
        };
        let scheme = match c[1] {
            'A' => ControlScheme::Acceleration,
            'J' => ControlScheme::Jerk,
            _ => return Err(bad()),
        };
        let schedule = match c[2] {
            '1' => FitSchedule::Single,
            '2' => FitSchedule::TwoStage,
            _ => return Err(bad()),
        };
        let loss = match c[3] {
            '1' => LossKind::L1,
            '2' => LossKind::L2,
            _ => return Err(bad()),
        };
        Ok(Self {
            mode,
            scheme,
            schedule,
            loss,
        })
    }
}

impl fmt::Display for CmConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = match self.mode {
            InteractionMode::Interactive => 'I',
            InteractionMode::NonInteractive => 'N',
        };
        let c = match self.scheme {
            ControlScheme::Acceleration => 'A',
            ControlScheme::Jerk => 'J',
        };
        let r = match self.schedule {
            FitSchedule::Single => '1',
            FitSchedule::TwoStage => '2',
        };
        let l = match self.loss {
            LossKind::L1 => '1',
            LossKind::L2 => '2',
        };
        write!(f, "{m}{c}{r}{l}")
    }
}

impl TryFrom<String> for CmConfig {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<CmConfig> for String {
    fn from(c: CmConfig) -> Self {
        c.to_string()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelId,
    pub cm_config: CmConfig,
    /// Rollouts per prediction.
    pub n_p: usize,
    pub dt: f64,
    pub horizon: f64,
    /// Action magnitudes; the default set of the control scheme when absent.
    pub actions: Option<Vec<f64>>,
    pub n_init: usize,
    pub n_acquisition: usize,
    pub shrink: f64,
    /// Simulation and optimizer seed.
    pub seed: u64,
    pub split_seed: u64,
    pub n_random_splits: usize,
    pub test_fraction: f64,
    pub n_i: usize,
    pub lateral_tolerance: f64,
    pub ade_horizon: f64,
    pub lambda: f64,
    pub gap_cap: f64,
    pub alpha: f64,
    pub metrics: Vec<Metric>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let fit = FitConfig::default();
        let eval = EvalConfig::default();
        let sim = SimConfig::default();
        Self {
            model: ModelId::CM,
            cm_config: CmConfig::default(),
            n_p: fit.n_p,
            dt: sim.dt,
            horizon: sim.horizon,
            actions: None,
            n_init: fit.n_init,
            n_acquisition: fit.n_acquisition,
            shrink: fit.shrink,
            seed: 0,
            split_seed: 0,
            n_random_splits: 10,
            test_fraction: DEFAULT_TEST_FRACTION,
            n_i: eval.n_i,
            lateral_tolerance: eval.lateral_tolerance,
            ade_horizon: eval.ade_horizon,
            lambda: eval.lambda,
            gap_cap: eval.gap_cap,
            alpha: 0.05,
            metrics: Metric::ALL.to_vec(),
        }
    }
}

impl RunConfig {
    pub fn sim(&self) -> SimConfig {
        SimConfig {
            dt: self.dt,
            horizon: self.horizon,
            actions: self.actions.clone().map(|a| ActionSet::new(a).expect("validated")),
            ..SimConfig::with(self.cm_config.mode, self.cm_config.scheme)
        }
    }

    pub fn fit(&self) -> FitConfig {
        FitConfig {
            sim: self.sim(),
            loss: self.cm_config.loss,
            schedule: self.cm_config.schedule,
            n_init: self.n_init,
            n_acquisition: self.n_acquisition,
            shrink: self.shrink,
            n_p: self.n_p,
            seed: self.seed,
            ..FitConfig::default()
        }
    }

    pub fn eval(&self) -> EvalConfig {
        EvalConfig {
            n_i: self.n_i,
            lateral_tolerance: self.lateral_tolerance,
            gap_cap: self.gap_cap,
            lambda: self.lambda,
            ade_horizon: self.ade_horizon,
            n_p: self.n_p,
            seed: self.seed,
            sim: self.sim(),
        }
    }

    /// Label of the evaluated model, e.g. `CM_NA12` or `LR1D`.
    pub fn label(&self) -> String {
        match self.model {
            ModelId::CM => format!("CM_{}", self.cm_config),
            m => m.to_string(),
        }
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        let usage = |m: String| anyhow::Error::new(UsageError(m));
        if let Some(a) = &self.actions {
            ActionSet::new(a.clone()).map_err(|e| usage(e.to_string()))?;
        }
        if self.n_random_splits == 0 {
            return Err(usage("n_random_splits must be at least 1".into()));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(usage(format!("test_fraction must lie in (0, 1), got {}", self.test_fraction)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(usage(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.metrics.is_empty() {
            return Err(usage("at least one metric must be selected".into()));
        }
        self.fit().validate().map_err(|e| usage(e.to_string()))?;
        self.eval().validate().map_err(|e| usage(e.to_string()))?;
        Ok(())
    }
}

fn parse_model(s: &str) -> Result<ModelId, String> {
    s.parse().map_err(|e: cogap::Error| e.to_string())
}

fn parse_metric(s: &str) -> Result<Metric, String> {
    Metric::ALL
        .into_iter()
        .find(|m| m.as_str() == s)
        .ok_or_else(|| {
            let names: Vec<&str> = Metric::ALL.iter().map(|m| m.as_str()).collect();
            format!("unknown metric `{s}`; valid: {}", names.join(", "))
        })
}

/// Settings shared by the modelling commands. Each flag overrides the key
/// of the same name in `--config-file`.
#[derive(Args, Clone, Debug, Default)]
pub struct ConfigArgs {
    /// Flat TOML file with run settings.
    #[arg(long, value_name = "FILE")]
    pub config_file: Option<PathBuf>,
    /// Model: CM, LR1D, LR2D or CV.
    #[arg(long, value_parser = parse_model)]
    pub model: Option<ModelId>,
    /// Cognitive-model configuration such as NA12.
    #[arg(long, value_name = "CODE")]
    pub cm_config: Option<CmConfig>,
    /// Rollouts per prediction.
    #[arg(long)]
    pub n_p: Option<usize>,
    /// Simulation step (s).
    #[arg(long)]
    pub dt: Option<f64>,
    /// Rollout horizon (s).
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Comma-separated action magnitudes.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, num_args = 1..)]
    pub actions: Option<Vec<f64>>,
    /// Latin-hypercube evaluations per fitting stage.
    #[arg(long)]
    pub n_init: Option<usize>,
    /// Acquisition evaluations per fitting stage.
    #[arg(long)]
    pub n_acquisition: Option<usize>,
    /// Stage-2 bound shrink factor.
    #[arg(long)]
    pub shrink: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub split_seed: Option<u64>,
    #[arg(long)]
    pub n_random_splits: Option<usize>,
    #[arg(long)]
    pub test_fraction: Option<f64>,
    /// Observations per input window.
    #[arg(long)]
    pub n_i: Option<usize>,
    /// Largest admissible distance of a track point from its path (m).
    #[arg(long)]
    pub lateral_tolerance: Option<f64>,
    /// Trajectory window for ADE (s).
    #[arg(long)]
    pub ade_horizon: Option<f64>,
    /// Logistic-regression penalty.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Cap on time-gap features (s).
    #[arg(long)]
    pub gap_cap: Option<f64>,
    /// Significance level of the paired t-test.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Comma-separated metrics to report.
    #[arg(long, value_delimiter = ',', value_parser = parse_metric)]
    pub metrics: Option<Vec<Metric>>,
}

pub fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).map_err(|e| anyhow::Error::new(UsageError(format!("{}: {e}", path.display()))))
}

impl ConfigArgs {
    /// The file settings (or defaults) with every given flag applied.
    pub fn resolve(&self) -> anyhow::Result<RunConfig> {
        let mut c: RunConfig = match &self.config_file {
            Some(p) => read_toml(p)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($f:ident),*) => {$(
                if let Some(v) = &self.$f {
                    c.$f = v.clone();
                }
            )*};
        }
        set!(
            model,
            cm_config,
            n_p,
            dt,
            horizon,
            n_init,
            n_acquisition,
            shrink,
            seed,
            split_seed,
            n_random_splits,
            test_fraction,
            n_i,
            lateral_tolerance,
            ade_horizon,
            lambda,
            gap_cap,
            alpha,
            metrics
        );
        if let Some(a) = &self.actions {
            c.actions = Some(a.clone());
        }
        c.validate()?;
        Ok(c)
    }
}
