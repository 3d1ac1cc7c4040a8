use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Identities,
    PsdScan,
    DiagVerify,
    DetSample,
    Search,
    OnedistillScan,
    OracleCrosscheck,
    Continuation,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Identities => "identities",
            CommandKind::PsdScan => "psd-scan",
            CommandKind::DiagVerify => "diag-verify",
            CommandKind::DetSample => "det-sample",
            CommandKind::Search => "search",
            CommandKind::OnedistillScan => "onedistill-scan",
            CommandKind::OracleCrosscheck => "oracle-crosscheck",
            CommandKind::Continuation => "continuation",
        }
    }

    fn uses_restarts(self) -> bool {
        matches!(self, CommandKind::Search | CommandKind::OnedistillScan)
    }

    fn default_count(self) -> usize {
        match self {
            CommandKind::Identities | CommandKind::DiagVerify => 200,
            CommandKind::PsdScan | CommandKind::DetSample | CommandKind::OracleCrosscheck => 1000,
            CommandKind::Search => 100,
            CommandKind::OnedistillScan => 4,
            CommandKind::Continuation => 50,
        }
    }

    /// Tolerance names accepted by the command, with defaults.
    pub fn default_tolerances(self) -> BTreeMap<String, f64> {
        let pairs: &[(&str, f64)] = match self {
            CommandKind::Identities => &[("covariance", 1e-10), ("det", 1e-6), ("phi", 1e-9)],
            CommandKind::PsdScan => &[("psd", 1e-9)],
            CommandKind::DiagVerify => &[("residual", 1e-10)],
            CommandKind::DetSample => &[("zero", 1e-12)],
            CommandKind::Search => &[("candidate", 1e-6), ("convergence", 1e-12)],
            CommandKind::OnedistillScan => &[("convergence", 1e-12), ("psd", 1e-12), ("sign", 1e-8)],
            CommandKind::OracleCrosscheck => &[("phi", 1e-9)],
            CommandKind::Continuation => &[],
        };
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Jsonl,
    Csv,
}

const SCHEMAS: &str = "\
OUTPUT
  JSON-lines: a header record {record: \"header\", timestamp, config}, one
  record per sample, then {record: \"status\", status, records, violations,
  exit_code, summary}. CSV: the header and status records as '# ' comment
  lines around a table with the same fields as the JSON records.

RECORDS
  identities        index, seed, d, phi_spread, unitary_invariance,
                    covariance_ab, covariance_lambda, det_unitary_dev,
                    det_gl_dev, violation
  psd-scan          index, seed, d, lambda_min, norm_h, relative_lambda_min,
                    minor_order, minor_lambda_min, violation
  diag-verify       index, seed, d, generic, residual, norm_h, min_block_eig,
                    lambda_min_h, all_small_pd, big_pd, holds, violation
  det-sample        index, seed, distribution, generic, value, log_abs, sign,
                    relative_log, zero_candidate, confirmed_zero, violation
  search            restart, seed, structured_start, final_value, iterations,
                    converged, monotone, fixed_point_gap, candidate,
                    oracle_value, violation; traces CSV (restart, iter, value)
  onedistill-scan   t, min_value, class, sigma_lambda_min, sigma_psd,
                    sigma_psd_expected, negative, negative_expected,
                    monotone_step, violation
  oracle-crosscheck index, seed, d, phi_vector, phi_matrix, phi_oracle, phi_h,
                    spread, violation
  continuation      index, seed, verdict, t_fail, attempts, refinements,
                    direct_lambda_min, direct_psd, consistent, path, violation

EXIT CODES
  0 all checks passed, 1 violation records present, 2 usage error,
  130 interrupted";

#[derive(Debug, Parser)]
#[command(name = "werner", version, about = "Seeded numerical checks for two-copy distillability of Werner states", after_long_help = SCHEMAS)]
pub struct Cli {
    /// Command to run; may instead come from the config file.
    #[arg(value_enum)]
    pub command: Option<CommandKind>,
    /// JSON config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Local dimension.
    #[arg(long = "d")]
    pub d: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Master seed; required.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Tolerance override, repeatable.
    #[arg(long = "tol", value_name = "NAME=VALUE", value_parser = parse_tol)]
    pub tol: Vec<(String, f64)>,
    /// Record file; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Worker cap; 0 uses every core.
    #[arg(long, env = "WERNER_THREADS")]
    pub threads: Option<usize>,
    /// Path samples per continuation segment.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Alternations per search restart.
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub t_start: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub t_step: Option<f64>,
    /// Search trace CSV; defaults to the output path with `.traces.csv`.
    #[arg(long)]
    pub traces: Option<PathBuf>,
}

fn parse_tol(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s.split_once('=').ok_or_else(|| format!("expected NAME=VALUE, got '{s}'"))?;
    let value: f64 = value.parse().map_err(|e| format!("tolerance '{name}': {e}"))?;
    if !(value > 0.0 && value.is_finite()) {
        return Err(format!("tolerance '{name}' must be positive and finite"));
    }
    Ok((name.to_string(), value))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub command: Option<CommandKind>,
    pub d: Option<usize>,
    pub samples: Option<usize>,
    pub restarts: Option<usize>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
    pub threads: Option<usize>,
    pub steps: Option<usize>,
    pub max_iters: Option<usize>,
    pub t_start: Option<f64>,
    pub t_end: Option<f64>,
    pub t_step: Option<f64>,
    pub traces: Option<PathBuf>,
}

/// Effective configuration, echoed into every output header.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub d: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    pub seed: u64,
    pub tolerances: BTreeMap<String, f64>,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub threads: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub traces: Option<PathBuf>,
}

impl RunConfig {
    /// Samples or restarts, whichever the command uses.
    pub fn count(&self) -> usize {
        self.samples.or(self.restarts).unwrap_or(0)
    }

    pub fn tol(&self, name: &str) -> f64 {
        self.tolerances[name]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn usage<T>(msg: impl Into<String>) -> Result<T, UsageError> {
    Err(UsageError(msg.into()))
}

pub fn read_file_config(path: &Path) -> Result<FileConfig, UsageError> {
    let text = std::fs::read_to_string(path).map_err(|e| UsageError(format!("config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| UsageError(format!("config {}: {e}", path.display())))
}

/// Merges the config file under the flags and validates the result.
pub fn resolve(cli: Cli) -> Result<RunConfig, UsageError> {
    let file = match &cli.config {
        Some(p) => read_file_config(p)?,
        None => FileConfig::default(),
    };
    let Some(command) = cli.command.or(file.command) else {
        return usage("no command given");
    };
    let d = cli.d.or(file.d).unwrap_or(3);
    if d == 0 {
        return usage("--d must be at least 1");
    }
    let Some(seed) = cli.seed.or(file.seed) else {
        return usage(format!("{} is randomized and requires --seed", command.name()));
    };

    let samples = cli.samples.or(file.samples);
    let restarts = cli.restarts.or(file.restarts);
    let (samples, restarts) = if command.uses_restarts() {
        if samples.is_some() {
            return usage(format!("{} takes --restarts, not --samples", command.name()));
        }
        (None, Some(restarts.unwrap_or(command.default_count())))
    } else {
        if restarts.is_some() {
            return usage(format!("{} takes --samples, not --restarts", command.name()));
        }
        (Some(samples.unwrap_or(command.default_count())), None)
    };
    if samples == Some(0) || restarts == Some(0) {
        return usage("sample and restart counts must be at least 1");
    }

    let mut tolerances = command.default_tolerances();
    for (name, value) in file.tolerances.into_iter().chain(cli.tol) {
        match tolerances.get_mut(&name) {
            Some(slot) if value > 0.0 && value.is_finite() => *slot = value,
            Some(_) => return usage(format!("tolerance '{name}' must be positive and finite")),
            None => {
                let known: Vec<_> = tolerances.keys().cloned().collect();
                return usage(format!(
                    "unknown tolerance '{name}' for {} (known: {})",
                    command.name(),
                    if known.is_empty() { "none".into() } else { known.join(", ") }
                ));
            }
        }
    }

    let only = |flag: &str, allowed: bool, present: bool| -> Result<(), UsageError> {
        if present && !allowed {
            return usage(format!("{} does not take {flag}", command.name()));
        }
        Ok(())
    };
    let steps = cli.steps.or(file.steps);
    let max_iters = cli.max_iters.or(file.max_iters);
    let t_start = cli.t_start.or(file.t_start);
    let t_end = cli.t_end.or(file.t_end);
    let t_step = cli.t_step.or(file.t_step);
    let traces = cli.traces.or(file.traces);
    let is_scan = command == CommandKind::OnedistillScan;
    only("--steps", command == CommandKind::Continuation, steps.is_some())?;
    only("--max-iters", command.uses_restarts(), max_iters.is_some())?;
    only("--t-start/--t-end/--t-step", is_scan, t_start.or(t_end).or(t_step).is_some())?;
    only("--traces", command == CommandKind::Search, traces.is_some())?;

    let steps = (command == CommandKind::Continuation).then(|| steps.unwrap_or(64));
    if steps == Some(0) {
        return usage("--steps must be at least 1");
    }
    let max_iters = command.uses_restarts().then(|| max_iters.unwrap_or(500));
    if max_iters == Some(0) {
        return usage("--max-iters must be at least 1");
    }
    let t_grid = if is_scan {
        let g = [t_start.unwrap_or(0.3), t_end.unwrap_or(0.7), t_step.unwrap_or(0.01)];
        if g[2].is_nan() || g[2] <= 0.0 || g[0] > g[1] || g[0] < -1.0 || g[1] > 1.0 {
            return usage("t grid needs -1 <= t-start <= t-end <= 1 and t-step > 0");
        }
        Some(g)
    } else {
        None
    };

    let output = cli.output.or(file.output);
    let traces = if command == CommandKind::Search {
        traces.or_else(|| {
            output.as_ref().map(|o| {
                let mut name = o.file_stem().unwrap_or_default().to_os_string();
                name.push(".traces.csv");
                o.with_file_name(name)
            })
        })
    } else {
        None
    };

    Ok(RunConfig {
        command,
        d,
        samples,
        restarts,
        seed,
        tolerances,
        output,
        format: cli.format.or(file.format).unwrap_or(Format::Jsonl),
        threads: cli.threads.or(file.threads).unwrap_or(0),
        steps,
        max_iters,
        t_grid,
        traces,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<RunConfig, UsageError> {
        let cli = Cli::try_parse_from(std::iter::once("werner").chain(args.iter().copied())).map_err(|e| UsageError(e.to_string()))?;
        resolve(cli)
    }

    #[test]
    fn defaults() {
        let cfg = parse(&["psd-scan", "--seed", "1"]).unwrap();
        assert_eq!(cfg.d, 3);
        assert_eq!(cfg.samples, Some(1000));
        assert_eq!(cfg.restarts, None);
        assert_eq!(cfg.tol("psd"), 1e-9);
        assert_eq!(cfg.format, Format::Jsonl);
    }

    #[test]
    fn seed_required() {
        assert!(parse(&["identities", "--d", "3"]).is_err());
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(parse(&["identities", "--d", "0", "--seed", "1"]).is_err());
    }

    #[test]
    fn tolerance_overrides() {
        let cfg = parse(&["identities", "--seed", "1", "--tol", "phi=1e-8"]).unwrap();
        assert_eq!(cfg.tol("phi"), 1e-8);
        assert!(parse(&["identities", "--seed", "1", "--tol", "bogus=1"]).is_err());
        assert!(parse(&["identities", "--seed", "1", "--tol", "phi=-1"]).is_err());
        assert!(parse(&["identities", "--seed", "1", "--tol", "phi"]).is_err());
    }

    #[test]
    fn count_flag_must_match_command() {
        assert!(parse(&["search", "--seed", "1", "--samples", "3"]).is_err());
        assert!(parse(&["psd-scan", "--seed", "1", "--restarts", "3"]).is_err());
        assert_eq!(parse(&["search", "--seed", "1", "--restarts", "3"]).unwrap().count(), 3);
    }

    #[test]
    fn command_specific_flags() {
        assert!(parse(&["psd-scan", "--seed", "1", "--steps", "3"]).is_err());
        let cfg = parse(&["onedistill-scan", "--seed", "1", "--t-start", "-0.5", "--t-end", "0.6"]).unwrap();
        assert_eq!(cfg.t_grid, Some([-0.5, 0.6, 0.01]));
        assert!(parse(&["onedistill-scan", "--seed", "1", "--t-start", "0.8", "--t-end", "0.6"]).is_err());
    }

    #[test]
    fn traces_path_follows_output() {
        let cfg = parse(&["search", "--seed", "1", "--output", "/tmp/run.jsonl"]).unwrap();
        assert_eq!(cfg.traces, Some(PathBuf::from("/tmp/run.traces.csv")));
    }

    #[test]
    fn unknown_flag_rejected() {
        assert!(parse(&["psd-scan", "--seed", "1", "--frobnicate"]).is_err());
    }

    #[test]
    fn file_config_under_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        std::fs::write(&path, r#"{"command": "psd-scan", "d": 4, "samples": 7, "seed": 3, "tolerances": {"psd": 1e-8}}"#).unwrap();
        let p = path.to_str().unwrap();
        let cfg = parse(&["--config", p, "--samples", "9"]).unwrap();
        assert_eq!((cfg.d, cfg.samples, cfg.seed), (4, Some(9), 3));
        assert_eq!(cfg.tol("psd"), 1e-8);
        std::fs::write(&path, r#"{"command": "psd-scan", "seed": 3, "colour": 1}"#).unwrap();
        assert!(parse(&["--config", p]).is_err());
    }
}
