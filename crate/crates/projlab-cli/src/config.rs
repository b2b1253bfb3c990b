//! Experiment configuration: a single TOML schema covering every experiment
//! kind, validated before any computation starts.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

/// Errors surfaced by the front end, split by exit code: configuration
/// problems exit 2, numeric failures exit 3.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Numeric(msg) => write!(f, "numeric failure: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

pub fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum ExperimentParams {
    L2Counterexample {
        tiers: usize,
        n_pairs: usize,
    },
    FlatR2 {
        beta: f64,
        r: u32,
        u0: f64,
        n_steps: usize,
    },
    ConifiedR3 {
        beta: f64,
        r: u32,
        a0: f64,
        b0: f64,
        n_pairs: usize,
    },
    PositivePolyhedral {
        seed: Option<u64>,
        dim: usize,
        n_cones: usize,
        rows_per_cone: usize,
        lambda_min: f64,
        n_steps: usize,
    },
    Custom {
        x0: Vec<f64>,
        n_steps: usize,
        sets: Vec<CustomSet>,
        policy: CustomPolicy,
    },
}

impl ExperimentParams {
    pub fn kind_name(&self) -> &'static str {
        match self {
            ExperimentParams::L2Counterexample { .. } => "l2_counterexample",
            ExperimentParams::FlatR2 { .. } => "flat_r2",
            ExperimentParams::ConifiedR3 { .. } => "conified_r3",
            ExperimentParams::PositivePolyhedral { .. } => "positive_polyhedral",
            ExperimentParams::Custom { .. } => "custom",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CustomSet {
    /// Subspace spanned by the given vectors.
    Subspace { vectors: Vec<Vec<f64>> },
    /// Polyhedral cone `{ x : n . x <= 0 }`.
    Cone { normals: Vec<Vec<f64>> },
    /// General H-polyhedron; feasibility certified by `feasible_point`.
    Halfspaces {
        normals: Vec<Vec<f64>>,
        offsets: Vec<f64>,
        feasible_point: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CustomPolicy {
    Cyclic { order: Vec<usize> },
    Random { seed: Option<u64>, lambda_min: f64 },
}

/// A fully parsed experiment configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub experiment: ExperimentParams,
    /// Output file path (created under `--output-dir` when given).
    pub output: PathBuf,
    #[serde(default = "default_format")]
    pub format: OutputFormat,
    /// Step indices at which series values are reported; defaults to decade
    /// boundaries clipped to the run length.
    #[serde(default)]
    pub checkpoints: Option<Vec<usize>>,
    /// Exponents of the step-norm power sums.
    #[serde(default)]
    pub gammas: Option<Vec<f64>>,
}

fn default_format() -> OutputFormat {
    OutputFormat::Csv
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Apply a seed supplied on the command line to the randomized kinds.
    pub fn override_seed(&mut self, seed: u64) {
        match &mut self.experiment {
            ExperimentParams::PositivePolyhedral { seed: s, .. } => *s = Some(seed),
            ExperimentParams::Custom { policy, .. } => {
                if let CustomPolicy::Random { seed: s, .. } = policy {
                    *s = Some(seed);
                }
            }
            _ => {}
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(cps) = &self.checkpoints {
            if cps.windows(2).any(|w| w[1] <= w[0]) {
                return Err(config_err("checkpoints must be strictly ascending"));
            }
        }
        if let Some(gammas) = &self.gammas {
            if gammas.is_empty() || gammas.iter().any(|g| !(*g > 0.0)) {
                return Err(config_err("gammas must be nonempty and strictly positive"));
            }
        }
        match &self.experiment {
            ExperimentParams::L2Counterexample { tiers, n_pairs } => {
                if *tiers == 0 {
                    return Err(config_err("tiers must be positive"));
                }
                if *n_pairs == 0 {
                    return Err(config_err("n_pairs must be positive"));
                }
            }
            ExperimentParams::FlatR2 { beta, r, u0, .. } => {
                let fam = projlab::FlatFamily::new(*beta, *r)
                    .map_err(|e| config_err(e.to_string()))?;
                if !(*u0 > 0.0 && *u0 < fam.delta()) {
                    return Err(config_err(format!(
                        "u0 must lie in ]0, delta[ = ]0, {}[, got {u0}",
                        fam.delta()
                    )));
                }
            }
            ExperimentParams::ConifiedR3 { beta, r, a0, b0, .. } => {
                let fam = projlab::FlatFamily::new(*beta, *r)
                    .map_err(|e| config_err(e.to_string()))?;
                if !(*a0 > 0.0) {
                    return Err(config_err("a0 must be strictly positive"));
                }
                let cap = fam.delta().min(1.0);
                if !(*b0 > 0.0 && *b0 < cap) {
                    return Err(config_err(format!(
                        "b0 must lie in ]0, {cap}[, got {b0}"
                    )));
                }
            }
            ExperimentParams::PositivePolyhedral {
                seed,
                dim,
                n_cones,
                rows_per_cone,
                lambda_min,
                n_steps,
            } => {
                if seed.is_none() {
                    return Err(config_err(
                        "positive_polyhedral requires an explicit seed (config or --seed)",
                    ));
                }
                if *dim == 0 || *dim > 10 {
                    return Err(config_err("dim must lie in 1..=10"));
                }
                if *rows_per_cone == 0 || *rows_per_cone > 8 {
                    return Err(config_err("rows_per_cone must lie in 1..=8"));
                }
                if *n_cones == 0 || *n_steps == 0 {
                    return Err(config_err("n_cones and n_steps must be positive"));
                }
                if !(*lambda_min > 0.0 && *lambda_min <= 1.0) {
                    return Err(config_err("lambda_min must lie in ]0, 1]"));
                }
            }
            ExperimentParams::Custom {
                x0,
                n_steps: _,
                sets,
                policy,
            } => {
                if x0.is_empty() {
                    return Err(config_err("x0 must be nonempty"));
                }
                if sets.is_empty() {
                    return Err(config_err("custom experiments need at least one set"));
                }
                match policy {
                    CustomPolicy::Cyclic { order } => {
                        if order.is_empty() {
                            return Err(config_err("cyclic order must be nonempty"));
                        }
                        if order.iter().any(|i| *i >= sets.len()) {
                            return Err(config_err("cyclic order references a missing set"));
                        }
                    }
                    CustomPolicy::Random { seed, lambda_min } => {
                        if seed.is_none() {
                            return Err(config_err(
                                "random policies require an explicit seed (config or --seed)",
                            ));
                        }
                        if !(*lambda_min > 0.0 && *lambda_min <= 1.0) {
                            return Err(config_err("lambda_min must lie in ]0, 1]"));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// A sweep configuration: a base experiment plus per-parameter value grids.
#[derive(Clone, Debug, Deserialize)]
pub struct SweepConfig {
    #[serde(flatten)]
    pub base: toml::Table,
    pub grid: BTreeMap<String, Vec<toml::Value>>,
}

impl SweepConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let sweep: SweepConfig = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        if sweep.grid.is_empty() {
            return Err(config_err("sweep grid is empty"));
        }
        if sweep.grid.values().any(Vec::is_empty) {
            return Err(config_err("sweep grid contains an empty value list"));
        }
        Ok(sweep)
    }

    /// Cartesian product of the grid, deduplicated; each point is the base
    /// config with the grid values substituted into `params`.
    pub fn points(&self) -> Result<Vec<(String, ExperimentConfig)>, CliError> {
        let keys: Vec<&String> = self.grid.keys().collect();
        let mut combos: Vec<Vec<&toml::Value>> = vec![Vec::new()];
        for key in &keys {
            let values = &self.grid[*key];
            combos = combos
                .into_iter()
                .flat_map(|prefix| {
                    values.iter().map(move |v| {
                        let mut next = prefix.clone();
                        next.push(v);
                        next
                    })
                })
                .collect();
        }
        let mut seen = std::collections::BTreeSet::new();
        let mut out = Vec::new();
        for combo in combos {
            let mut table = self.base.clone();
            table.remove("grid");
            let params = table
                .entry("params".to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            let params_table = params
                .as_table_mut()
                .ok_or_else(|| config_err("params must be a table"))?;
            let mut label_parts = Vec::new();
            for (key, value) in keys.iter().zip(&combo) {
                params_table.insert((*key).clone(), (*value).clone());
                label_parts.push(format!("{key}={}", toml_value_slug(value)));
            }
            let label = label_parts.join("_");
            if !seen.insert(label.clone()) {
                eprintln!("warning: duplicate grid point {label} skipped");
                continue;
            }
            let text = toml::to_string(&table).map_err(|e| config_err(e.to_string()))?;
            let config = ExperimentConfig::parse(&text)?;
            out.push((label, config));
        }
        Ok(out)
    }
}

fn toml_value_slug(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        other => other.to_string().replace([' ', '"'], ""),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FLAT: &str = r#"
kind = "flat_r2"
output = "flat.csv"

[params]
beta = 1.0
r = 2
u0 = 0.5
n_steps = 1000
"#;

    #[test]
    fn parses_flat_config() {
        let config = ExperimentConfig::parse(FLAT).unwrap();
        assert_eq!(config.experiment.kind_name(), "flat_r2");
        assert_eq!(config.format, OutputFormat::Csv);
    }

    #[test]
    fn rejects_u0_outside_domain() {
        let bad = FLAT.replace("u0 = 0.5", "u0 = 0.9");
        let err = ExperimentConfig::parse(&bad).unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
        assert!(err.to_string().contains("u0"));
    }

    #[test]
    fn rejects_unknown_kind() {
        let bad = FLAT.replace("flat_r2", "warp_drive");
        assert!(ExperimentConfig::parse(&bad).is_err());
    }

    #[test]
    fn polyhedral_requires_seed() {
        let text = r#"
kind = "positive_polyhedral"
output = "poly.csv"

[params]
dim = 4
n_cones = 3
rows_per_cone = 4
lambda_min = 0.3
n_steps = 100
"#;
        assert!(ExperimentConfig::parse(text).is_err());
        let mut config: ExperimentConfig = toml::from_str(text).unwrap();
        config.override_seed(7);
        assert!(config.validate().is_ok());
    }

    #[test]
    fn config_round_trips_through_toml() {
        let config = ExperimentConfig::parse(FLAT).unwrap();
        let text = toml::to_string(&config).unwrap();
        let reparsed = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(config, reparsed);
    }

    #[test]
    fn sweep_expands_cartesian_grid() {
        let text = r#"
kind = "flat_r2"
output = "flat.csv"

[params]
beta = 1.0
r = 2
u0 = 0.5
n_steps = 100

[grid]
r = [2, 4]
beta = [1.0, 2.0]
"#;
        let sweep = SweepConfig::parse(text).unwrap();
        let points = sweep.points().unwrap();
        assert_eq!(points.len(), 4);
        assert!(points.iter().any(|(label, _)| label.contains("r=4")));
    }

    #[test]
    fn sweep_rejects_empty_grid() {
        let text = r#"
kind = "flat_r2"
output = "flat.csv"
[params]
beta = 1.0
r = 2
u0 = 0.5
n_steps = 100
[grid]
"#;
        assert!(SweepConfig::parse(text).is_err());
    }

    #[test]
    fn sweep_deduplicates_points() {
        let text = r#"
kind = "flat_r2"
output = "flat.csv"
[params]
beta = 1.0
r = 2
u0 = 0.5
n_steps = 100
[grid]
r = [2, 2]
"#;
        let sweep = SweepConfig::parse(text).unwrap();
        assert_eq!(sweep.points().unwrap().len(), 1);
    }
}
