use std::fmt;
use std::fs;
use std::io::Write;

use clap::ValueEnum;
use densets::{EvaluationBudget, SetError};
use serde::Serialize;

use crate::Common;

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Eval(SetError),
    Io(std::io::Error),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Eval(_) | CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Eval(e) => write!(f, "evaluation failed: {e}"),
            CliError::Io(e) => write!(f, "cannot write output: {e}"),
        }
    }
}

impl From<SetError> for CliError {
    fn from(e: SetError) -> Self {
        match e {
            SetError::Domain(m) => CliError::Usage(m),
            other => CliError::Eval(other),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// The fully resolved settings of a run, embedded in every report.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: &'static str,
    pub budget: EvaluationBudget,
    pub format: Format,
    pub parallel: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expr: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prefix: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_n: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimator: Option<crate::Estimator>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suite: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub real: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<usize>,
}

impl RunConfig {
    pub fn new(command: &'static str, common: &Common) -> CliResult<Self> {
        Ok(RunConfig {
            command,
            budget: resolve_budget(common)?,
            format: common.format,
            parallel: densets::par::is_parallel(),
            expr: None,
            prefix: None,
            max_n: None,
            grid: None,
            estimator: None,
            k: None,
            suite: None,
            trials: None,
            seed: None,
            family: None,
            threshold: None,
            source: None,
            real: None,
            levels: None,
        })
    }

    pub fn json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }

    /// The `# config {...}` line that heads every CSV report.
    pub fn csv_header(&self) -> String {
        format!("# config {}\n", self.json())
    }
}

/// Flags beat `DENSETS_BUDGET`, which beats the library defaults.
fn resolve_budget(common: &Common) -> CliResult<EvaluationBudget> {
    let mut b = EvaluationBudget::default();
    if let Some(env) = &common.budget_env {
        let env = env.trim();
        if !env.is_empty() {
            let (v, i) = env.split_once(',').unwrap_or((env, ""));
            let parse = |s: &str| {
                s.trim()
                    .parse::<u64>()
                    .map_err(|_| CliError::Usage(format!("DENSETS_BUDGET: invalid number `{s}`")))
            };
            b.max_value = parse(v)?;
            if !i.is_empty() {
                b.max_index = parse(i)?;
            }
        }
    }
    if let Some(v) = common.budget_value {
        b.max_value = v;
    }
    if let Some(i) = common.budget_index {
        b.max_index = i;
    }
    Ok(b)
}

/// Writes `body` to `--out` or stdout.
pub fn emit(common: &Common, body: &str) -> CliResult<()> {
    match &common.out {
        Some(path) => fs::write(path, body).map_err(CliError::Io),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(body.as_bytes()).map_err(CliError::Io)
        }
    }
}
