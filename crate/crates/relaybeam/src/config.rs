//! Experiment configuration: a flat `key: value` text format.
//!
//! Every key is optional except `seed` (which may instead arrive via the
//! command line); unknown keys are rejected with their line number so typos
//! cannot silently fall back to defaults.

use std::fmt;
use std::path::Path;

use crate::liftings::FormulationKind;

/// Defaults applied when a key is absent.
pub const DEFAULT_K: usize = 4;
pub const DEFAULT_P_S_DBW: f64 = 6.0;
pub const DEFAULT_P_J_DBW: f64 = 10.0;
pub const DEFAULT_P_R_MAX_DBW: f64 = 10.0;
pub const DEFAULT_SIGMA2: f64 = 1.0;
pub const DEFAULT_EPSILON: f64 = 0.99;
pub const DEFAULT_N_TRIALS: usize = 1000;
pub const DEFAULT_N_GRID: usize = 21;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(String),
    #[error("line {line}: expected `key: value`, got `{text}`")]
    Malformed { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: key `{key}`: {reason}")]
    BadValue { line: usize, key: String, reason: String },
    #[error("field `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("seed is required (set `seed:` in the config or pass --seed)")]
    SeedRequired,
}

/// Schemes the compare experiment can evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Proposed,
    NoJammer,
    Pmf,
    Zf,
    Dr,
}

impl Scheme {
    pub const ALL: [Scheme; 5] =
        [Scheme::Proposed, Scheme::NoJammer, Scheme::Pmf, Scheme::Zf, Scheme::Dr];

    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::NoJammer => "no_jammer",
            Scheme::Pmf => "pmf",
            Scheme::Zf => "zf",
            Scheme::Dr => "dr",
        }
    }

    pub fn parse(s: &str) -> Option<Scheme> {
        Some(match s {
            "proposed" => Scheme::Proposed,
            "no_jammer" => Scheme::NoJammer,
            "pmf" => Scheme::Pmf,
            "zf" => Scheme::Zf,
            "dr" => Scheme::Dr,
            _ => return None,
        })
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which system parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    PsDbw,
    PjDbw,
    PrMaxDbw,
    QTarget,
}

impl SweepParameter {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepParameter::PsDbw => "p_s_dbw",
            SweepParameter::PjDbw => "p_j_dbw",
            SweepParameter::PrMaxDbw => "p_r_max_dbw",
            SweepParameter::QTarget => "q_target",
        }
    }

    pub fn parse(s: &str) -> Option<SweepParameter> {
        Some(match s {
            "p_s_dbw" => SweepParameter::PsDbw,
            "p_j_dbw" => SweepParameter::PjDbw,
            "p_r_max_dbw" => SweepParameter::PrMaxDbw,
            "q_target" => SweepParameter::QTarget,
            _ => return None,
        })
    }
}

/// A validated sweep specification: `from`, `from + step`, ... up to `to`
/// inclusive (within one part in 10^9 of a step).
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub from: f64,
    pub to: f64,
    pub step: f64,
}

impl SweepSpec {
    pub fn values(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut j = 0u32;
        loop {
            let v = self.from + f64::from(j) * self.step;
            if v > self.to + 1e-9 * self.step {
                break;
            }
            out.push(v);
            j += 1;
        }
        out
    }
}

/// Everything an experiment run needs, after defaults and validation.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub k: usize,
    pub p_s_dbw: f64,
    pub p_j_dbw: f64,
    pub p_r_max_dbw: f64,
    pub sigma_r2: f64,
    pub sigma_d2: f64,
    pub epsilon: f64,
    pub q_target: f64,
    pub n_trials: usize,
    /// Master seed; `None` until supplied by file or flag.
    pub seed: Option<u64>,
    /// `None` selects the dimension-based default per solve.
    pub formulation: Option<FormulationKind>,
    pub schemes: Vec<Scheme>,
    pub sweep: Option<SweepSpec>,
    pub n_grid: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            k: DEFAULT_K,
            p_s_dbw: DEFAULT_P_S_DBW,
            p_j_dbw: DEFAULT_P_J_DBW,
            p_r_max_dbw: DEFAULT_P_R_MAX_DBW,
            sigma_r2: DEFAULT_SIGMA2,
            sigma_d2: DEFAULT_SIGMA2,
            epsilon: DEFAULT_EPSILON,
            q_target: 0.0,
            n_trials: DEFAULT_N_TRIALS,
            seed: None,
            formulation: None,
            schemes: Scheme::ALL.to_vec(),
            sweep: None,
            n_grid: DEFAULT_N_GRID,
        }
    }
}

/// Read and validate a config file. The seed may still be `None` afterwards;
/// callers merge command-line flags and then call [`ExperimentConfig::require_seed`].
pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

/// Parse config text (the file format without the file).
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = ExperimentConfig::default();
    let mut seen: Vec<String> = Vec::new();
    // Sweep keys are gathered first so the quadruple can be validated as one
    // unit.
    let mut sweep_parameter: Option<SweepParameter> = None;
    let mut sweep_from: Option<f64> = None;
    let mut sweep_to: Option<f64> = None;
    let mut sweep_step: Option<f64> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let stripped = raw.split('#').next().unwrap_or("").trim();
        if stripped.is_empty() {
            continue;
        }
        let Some((key, value)) = stripped.split_once(':') else {
            return Err(ConfigError::Malformed { line, text: stripped.to_string() });
        };
        let key = key.trim();
        let value = value.trim();
        if value.is_empty() {
            return Err(ConfigError::Malformed { line, text: stripped.to_string() });
        }
        if seen.iter().any(|k| k == key) {
            return Err(ConfigError::DuplicateKey { line, key: key.to_string() });
        }
        seen.push(key.to_string());

        let bad = |reason: String| ConfigError::BadValue {
            line,
            key: key.to_string(),
            reason,
        };
        match key {
            "k" => cfg.k = parse_num::<usize>(value).map_err(bad)?,
            "p_s_dbw" => cfg.p_s_dbw = parse_num(value).map_err(bad)?,
            "p_j_dbw" => cfg.p_j_dbw = parse_num(value).map_err(bad)?,
            "p_r_max_dbw" => cfg.p_r_max_dbw = parse_num(value).map_err(bad)?,
            "sigma_r2" => cfg.sigma_r2 = parse_num(value).map_err(bad)?,
            "sigma_d2" => cfg.sigma_d2 = parse_num(value).map_err(bad)?,
            "epsilon" => cfg.epsilon = parse_num(value).map_err(bad)?,
            "q_target" => cfg.q_target = parse_num(value).map_err(bad)?,
            "n_trials" => cfg.n_trials = parse_num::<usize>(value).map_err(bad)?,
            "seed" => cfg.seed = Some(parse_num::<u64>(value).map_err(bad)?),
            "n_grid" => cfg.n_grid = parse_num::<usize>(value).map_err(bad)?,
            "formulation" => {
                cfg.formulation = match value {
                    "auto" => None,
                    "direct" => Some(FormulationKind::Direct),
                    "reduced" => Some(FormulationKind::Reduced),
                    "combined" => Some(FormulationKind::Combined),
                    other => {
                        return Err(bad(format!(
                            "expected auto|direct|reduced|combined, got `{other}`"
                        )))
                    }
                }
            }
            "schemes" => {
                let mut parsed = Vec::new();
                for part in value.split(',') {
                    let name = part.trim();
                    let Some(s) = Scheme::parse(name) else {
                        return Err(bad(format!(
                            "unknown scheme `{name}` (expected proposed|no_jammer|pmf|zf|dr)"
                        )));
                    };
                    if parsed.contains(&s) {
                        return Err(bad(format!("scheme `{name}` listed twice")));
                    }
                    parsed.push(s);
                }
                if parsed.is_empty() {
                    return Err(bad("empty scheme list".to_string()));
                }
                cfg.schemes = parsed;
            }
            "sweep_parameter" => {
                sweep_parameter = Some(SweepParameter::parse(value).ok_or_else(|| {
                    bad(format!(
                        "expected p_s_dbw|p_j_dbw|p_r_max_dbw|q_target, got `{value}`"
                    ))
                })?)
            }
            "sweep_from" => sweep_from = Some(parse_num(value).map_err(bad)?),
            "sweep_to" => sweep_to = Some(parse_num(value).map_err(bad)?),
            "sweep_step" => sweep_step = Some(parse_num(value).map_err(bad)?),
            other => {
                return Err(ConfigError::UnknownKey { line, key: other.to_string() });
            }
        }
    }

    let any_sweep = sweep_parameter.is_some()
        || sweep_from.is_some()
        || sweep_to.is_some()
        || sweep_step.is_some();
    if any_sweep {
        let (Some(parameter), Some(from), Some(to), Some(step)) =
            (sweep_parameter, sweep_from, sweep_to, sweep_step)
        else {
            return Err(ConfigError::Invalid {
                field: "sweep",
                reason: "sweep_parameter, sweep_from, sweep_to, sweep_step must all be set"
                    .to_string(),
            });
        };
        cfg.sweep = Some(SweepSpec { parameter, from, to, step });
    }

    validate(&cfg)?;
    Ok(cfg)
}

impl ExperimentConfig {
    /// The merged seed, or the error the CLI turns into exit code 2.
    pub fn require_seed(&self) -> Result<u64, ConfigError> {
        self.seed.ok_or(ConfigError::SeedRequired)
    }
}

fn validate(cfg: &ExperimentConfig) -> Result<(), ConfigError> {
    let field = |field: &'static str, reason: String| ConfigError::Invalid { field, reason };
    if cfg.k < 1 {
        return Err(field("k", "need at least one relay antenna".into()));
    }
    for (name, v) in [
        ("p_s_dbw", cfg.p_s_dbw),
        ("p_j_dbw", cfg.p_j_dbw),
        ("p_r_max_dbw", cfg.p_r_max_dbw),
    ] {
        if !v.is_finite() {
            return Err(field("powers", format!("{name} must be finite, got {v}")));
        }
    }
    for (name, v) in [("sigma_r2", cfg.sigma_r2), ("sigma_d2", cfg.sigma_d2)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(field("noise", format!("{name} must be positive, got {v}")));
        }
    }
    if cfg.epsilon == 1.0 {
        return Err(field(
            "epsilon",
            "the jamming margin must be strictly below 1; at exactly 1 the margin no longer \
             separates signal from jammer and the rate guarantee collapses"
                .into(),
        ));
    }
    if !(cfg.epsilon >= 0.0 && cfg.epsilon < 1.0) {
        return Err(field("epsilon", format!("need 0 <= epsilon < 1, got {}", cfg.epsilon)));
    }
    if !(cfg.q_target >= 0.0 && cfg.q_target.is_finite()) {
        return Err(field("q_target", format!("need a finite target >= 0, got {}", cfg.q_target)));
    }
    if cfg.n_trials < 1 {
        return Err(field("n_trials", "need at least one trial".into()));
    }
    if cfg.n_grid < 2 {
        return Err(field("n_grid", format!("need at least two grid points, got {}", cfg.n_grid)));
    }
    if let Some(sweep) = &cfg.sweep {
        if !(sweep.from.is_finite() && sweep.to.is_finite() && sweep.step.is_finite()) {
            return Err(field("sweep", "bounds and step must be finite".into()));
        }
        if !(sweep.step > 0.0) {
            return Err(field("sweep", format!("step must be positive, got {}", sweep.step)));
        }
        if sweep.to < sweep.from {
            return Err(field(
                "sweep",
                format!("to ({}) must not be below from ({})", sweep.to, sweep.from),
            ));
        }
        if sweep.parameter == SweepParameter::QTarget && sweep.from < 0.0 {
            return Err(field("sweep", "energy targets cannot be negative".into()));
        }
    }
    Ok(())
}

fn parse_num<T: std::str::FromStr>(value: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    value.parse::<T>().map_err(|e| format!("cannot parse `{value}`: {e}"))
}

// ── Tests ────────────────────────────────────────────────────────────────
