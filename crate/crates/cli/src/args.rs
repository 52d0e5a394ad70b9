use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use staircase::costs::CostFunction;

use crate::CliError;

/// Staircase noise mechanisms for epsilon-differential privacy.
#[derive(Debug, Parser)]
#[command(name = "staircase", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Privacy level epsilon > 0.
    #[arg(long, global = true, default_value_t = 1.0, allow_negative_numbers = true)]
    pub epsilon: f64,

    /// Query sensitivity delta > 0 (an integer for discrete mechanisms).
    #[arg(long, global = true, default_value_t = 1.0, allow_negative_numbers = true)]
    pub delta: f64,

    /// Staircase parameter: a number in [0, 1], `auto` or `heuristic`.
    #[arg(long, global = true, default_value = "auto")]
    pub gamma: String,

    /// Cost function: abs, square, moment:<m> or table:<path>.
    #[arg(long, global = true)]
    pub cost: Option<String>,

    /// Tabulated cost file; shorthand for `--cost table:<path>`.
    #[arg(long, global = true)]
    pub table: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Mechanism::Staircase)]
    pub mech: Mechanism,

    /// Sample count, or sweep resolution for `tradeoff`.
    #[arg(short = 'n', global = true)]
    pub n: Option<usize>,

    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Epsilon sweep `lo:hi:step` for `compare`.
    #[arg(long, global = true)]
    pub eps_range: Option<String>,

    /// Shift between hypotheses for `tradeoff`; defaults to delta.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub shift: Option<f64>,

    /// Evaluation grid `lo:hi:step` for `pdf`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub x_range: Option<String>,

    /// Step index of the discrete staircase; optimized when absent.
    #[arg(long, global = true)]
    pub r: Option<u64>,

    /// Candidate scores, CSV with header `candidate_id,score`.
    #[arg(long, global = true)]
    pub scores: Option<PathBuf>,

    /// Audit a copy of the density with its positive half-line scaled by
    /// this factor (a deliberately broken input).
    #[arg(long, global = true)]
    pub corrupt_half_line: Option<f64>,

    /// Emit the closed-form Laplace curve in `tradeoff`.
    #[arg(long, global = true)]
    pub closed_form: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Draw noise values.
    Sample,
    /// Tabulate the density (or pmf) and distribution function.
    Pdf,
    /// Optimal or heuristic staircase parameter for a cost.
    Gamma,
    /// Expected cost of a mechanism.
    Cost,
    /// Laplace versus optimal staircase over an epsilon sweep.
    Compare,
    /// Privacy audit; exits with status 2 when a check fails.
    Audit,
    /// False-alarm / missed-detection tradeoff curve.
    Tradeoff,
    /// Optimal step index of the discrete staircase.
    DiscreteOpt,
    /// Selection probabilities of the abstract staircase mechanism.
    Abstract,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mechanism {
    Staircase,
    Laplace,
    StaircaseDiscrete,
    Geometric,
    Abstract,
}

impl Mechanism {
    pub fn name(self) -> &'static str {
        match self {
            Self::Staircase => "staircase",
            Self::Laplace => "laplace",
            Self::StaircaseDiscrete => "staircase-discrete",
            Self::Geometric => "geometric",
            Self::Abstract => "abstract",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// How `--gamma` was given.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaSpec {
    Value(f64),
    Auto,
    Heuristic,
}

impl GammaSpec {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s.trim() {
            "auto" => Ok(Self::Auto),
            "heuristic" => Ok(Self::Heuristic),
            other => other.parse::<f64>().map(Self::Value).map_err(|_| {
                CliError::Usage(format!(
                    "--gamma expects a number, `auto` or `heuristic`, got `{other}`"
                ))
            }),
        }
    }
}

impl Cli {
    pub fn cost_function(&self) -> Result<CostFunction, CliError> {
        match (&self.cost, &self.table) {
            (Some(_), Some(_)) => Err(CliError::Usage("give either --cost or --table, not both".into())),
            (None, Some(path)) => Ok(CostFunction::parse_spec(&format!("table:{}", path.display()))?),
            (Some(spec), None) => Ok(CostFunction::parse_spec(spec)?),
            (None, None) => Ok(CostFunction::Abs),
        }
    }
}

/// Expands `lo:hi:step` into `lo, lo + step, ...` up to `hi` inclusive.
pub fn parse_range(flag: &str, spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Usage(format!("{flag} expects lo:hi:step, got `{spec}`"));
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    let [lo, hi, step] = parts[..] else {
        return Err(bad());
    };
    if !(lo.is_finite() && hi.is_finite() && step.is_finite() && step > 0.0 && hi >= lo) {
        return Err(CliError::Usage(format!(
            "{flag} needs finite lo <= hi and step > 0, got `{spec}`"
        )));
    }
    let count = ((hi - lo) / step + 1e-9).floor() + 1.0;
    if count > 10_000_000.0 {
        return Err(CliError::Usage(format!("{flag} expands to more than 10^7 points")));
    }
    Ok((0..count as usize).map(|i| lo + i as f64 * step).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("--eps-range", "1:3:1").unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(parse_range("--eps-range", "0.1:0.3:0.1").unwrap().len(), 3);
        assert!(parse_range("--eps-range", "1:0:1").is_err());
        assert!(parse_range("--eps-range", "1:2").is_err());
        assert!(parse_range("--eps-range", "1:2:0").is_err());
    }

    #[test]
    fn gamma_specs() {
        assert_eq!(GammaSpec::parse("auto").unwrap(), GammaSpec::Auto);
        assert_eq!(GammaSpec::parse("heuristic").unwrap(), GammaSpec::Heuristic);
        assert_eq!(GammaSpec::parse("0.25").unwrap(), GammaSpec::Value(0.25));
        assert!(GammaSpec::parse("half").is_err());
    }
}
