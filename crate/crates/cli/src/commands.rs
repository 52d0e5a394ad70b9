use serde::Serialize;
use staircase::abstract_mech::{abstract_distribution, abstract_sample_many, CandidateScoring};
use staircase::audit::{
    audit_ratio_continuous, audit_ratio_discrete, laplace_tradeoff, numeric_tradeoff, sampler_gof_against,
    sampler_gof_discrete, AuditReport, ScaledHalfLine, TradeoffCurve, TRADEOFF_CSV_HEADER,
};
use staircase::costs::{
    discrete_cost, laplace_cost, laplace_cost_quadrature, staircase_cost, CostFunction, CostMethod, ExpectedCost,
};
use staircase::mechanisms::{ContinuousNoise, DiscreteStaircase, Laplace, NoiseSampler, Staircase};
use staircase::optimizer::{
    compare_mechanisms, discrete_r_opt, gamma_heuristic, gamma_opt, ComparisonRow, Diagnostics, OptimizationMethod,
    OptimizationResult,
};
use staircase::rng::SeedStreams;
use staircase::PrivacyParams;

use crate::args::{parse_range, Cli, Command, Format, GammaSpec, Mechanism};
use crate::output::{emit, json, Csv, Field};
use crate::{CliError, Outcome};

const DEFAULT_SAMPLES: usize = 10;
const DEFAULT_GOF_SAMPLES: usize = 20_000;
const DEFAULT_TRADEOFF_POINTS: usize = 200;
const DEFAULT_EPS_RANGE: &str = "1:20:1";
const AUDIT_X_POINTS: usize = 2001;
const AUDIT_D_POINTS: usize = 401;
/// Discrete audits cover `|i| <= DISCRETE_AUDIT_PERIODS · Δ`.
const DISCRETE_AUDIT_PERIODS: u64 = 50;

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let ctx = Context::new(cli)?;
    let (bytes, outcome) = match cli.command {
        Command::Sample => (ctx.sample()?, Outcome::Success),
        Command::Pdf => (ctx.pdf()?, Outcome::Success),
        Command::Gamma => (ctx.gamma()?, Outcome::Success),
        Command::Cost => (ctx.cost()?, Outcome::Success),
        Command::Compare => (ctx.compare()?, Outcome::Success),
        Command::Audit => ctx.audit()?,
        Command::Tradeoff => (ctx.tradeoff()?, Outcome::Success),
        Command::DiscreteOpt => (ctx.discrete_opt()?, Outcome::Success),
        Command::Abstract => (ctx.abstract_selection()?, Outcome::Success),
    };
    emit(cli, &bytes)?;
    Ok(outcome)
}

/// A continuous mechanism that can be both evaluated and sampled.
enum Continuous {
    Staircase(Staircase),
    Laplace(Laplace),
}

impl Continuous {
    fn noise(&self) -> &dyn ContinuousNoise {
        match self {
            Self::Staircase(m) => m,
            Self::Laplace(m) => m,
        }
    }

    fn sampler(&self) -> &dyn NoiseSampler {
        match self {
            Self::Staircase(m) => m,
            Self::Laplace(m) => m,
        }
    }

    fn gamma(&self) -> Option<f64> {
        match self {
            Self::Staircase(m) => Some(m.gamma()),
            Self::Laplace(_) => None,
        }
    }
}

enum Built {
    Continuous(Continuous),
    Discrete(DiscreteStaircase),
}

struct Context<'a> {
    cli: &'a Cli,
    params: PrivacyParams,
    cost: CostFunction,
    cost_label: String,
    gamma: GammaSpec,
}

#[derive(Serialize)]
struct SampleOutput<V> {
    mechanism: &'static str,
    epsilon: f64,
    delta: f64,
    gamma: Option<f64>,
    r: Option<u64>,
    seed: u64,
    n: usize,
    values: Vec<V>,
}

#[derive(Serialize)]
struct ContinuousPoint {
    x: f64,
    pdf: f64,
    cdf: f64,
}

#[derive(Serialize)]
struct DiscretePoint {
    i: i64,
    pmf: f64,
    cdf: f64,
}

#[derive(Serialize)]
struct DensityOutput<P> {
    mechanism: &'static str,
    epsilon: f64,
    delta: f64,
    gamma: Option<f64>,
    r: Option<u64>,
    points: Vec<P>,
}

#[derive(Serialize)]
struct CostOutput {
    mechanism: &'static str,
    epsilon: f64,
    delta: f64,
    cost_function: String,
    gamma: Option<f64>,
    r: Option<u64>,
    cost: f64,
    cost_error_bound: f64,
    cost_method: CostMethod,
}

const COST_CSV_HEADER: &str = "mechanism,epsilon,delta,cost_function,gamma,r,cost,cost_error_bound";

#[derive(Serialize)]
struct ParameterOutput {
    #[serde(flatten)]
    cost: CostOutput,
    method: OptimizationMethod,
    diagnostics: Diagnostics,
}

#[derive(Serialize)]
struct CompareOutput<'a> {
    delta: f64,
    cost_function: &'a str,
    rows: Vec<ComparisonRow>,
}

#[derive(Serialize)]
struct CandidateRow<'a> {
    candidate_id: &'a str,
    score: f64,
    probability: f64,
}

#[derive(Serialize)]
struct AbstractOutput<'a> {
    epsilon: f64,
    delta: f64,
    gamma: f64,
    candidates: Vec<CandidateRow<'a>>,
}

impl<'a> Context<'a> {
    fn new(cli: &'a Cli) -> Result<Self, CliError> {
        let params = PrivacyParams::new(cli.epsilon, cli.delta)?;
        let cost = cli.cost_function()?;
        let cost_label = match (&cli.cost, &cli.table) {
            (Some(spec), _) => spec.trim().to_string(),
            (None, Some(path)) => format!("table:{}", path.display()),
            (None, None) => "abs".to_string(),
        };
        let gamma = GammaSpec::parse(&cli.gamma)?;
        if cli.corrupt_half_line.is_some() && cli.command != Command::Audit {
            return Err(CliError::Usage("--corrupt-half-line only applies to `audit`".into()));
        }
        if cli.closed_form && cli.command != Command::Tradeoff {
            return Err(CliError::Usage("--closed-form only applies to `tradeoff`".into()));
        }
        Ok(Self {
            cli,
            params,
            cost,
            cost_label,
            gamma,
        })
    }

    fn optimize_gamma(&self) -> Result<OptimizationResult, CliError> {
        match self.gamma {
            GammaSpec::Auto => Ok(gamma_opt(&self.params, &self.cost)?),
            GammaSpec::Heuristic => Ok(gamma_heuristic(&self.params, &self.cost)?),
            GammaSpec::Value(_) => Err(CliError::Usage(
                "this command computes gamma; pass --gamma auto or --gamma heuristic".into(),
            )),
        }
    }

    fn resolve_gamma(&self) -> Result<f64, CliError> {
        match self.gamma {
            GammaSpec::Value(g) => Ok(g),
            _ => Ok(self
                .optimize_gamma()?
                .gamma()
                .expect("continuous optimizer returns gamma")),
        }
    }

    fn resolve_r(&self) -> Result<u64, CliError> {
        match self.cli.r {
            Some(r) => Ok(r),
            None => Ok(discrete_r_opt(&self.params, &self.cost)?
                .step_index()
                .expect("discrete optimizer returns a step index")),
        }
    }

    fn build(&self) -> Result<Built, CliError> {
        if self.cli.r.is_some() && self.cli.mech != Mechanism::StaircaseDiscrete {
            return Err(CliError::Usage("--r only applies to --mech staircase-discrete".into()));
        }
        Ok(match self.cli.mech {
            Mechanism::Staircase => Built::Continuous(Continuous::Staircase(Staircase::new(
                self.params,
                self.resolve_gamma()?,
            )?)),
            Mechanism::Laplace => Built::Continuous(Continuous::Laplace(Laplace::new(self.params))),
            Mechanism::StaircaseDiscrete => {
                self.params.integer_delta()?;
                Built::Discrete(DiscreteStaircase::new(self.params, self.resolve_r()?)?)
            }
            Mechanism::Geometric => Built::Discrete(DiscreteStaircase::geometric(self.params)?),
            Mechanism::Abstract => {
                return Err(CliError::Usage(format!(
                    "--mech abstract is not supported by `{}`; use `abstract` or `sample`",
                    self.command_name()
                )))
            }
        })
    }

    fn command_name(&self) -> &'static str {
        match self.cli.command {
            Command::Sample => "sample",
            Command::Pdf => "pdf",
            Command::Gamma => "gamma",
            Command::Cost => "cost",
            Command::Compare => "compare",
            Command::Audit => "audit",
            Command::Tradeoff => "tradeoff",
            Command::DiscreteOpt => "discrete-opt",
            Command::Abstract => "abstract",
        }
    }

    fn scoring(&self) -> Result<CandidateScoring, CliError> {
        let path = self
            .cli
            .scores
            .as_ref()
            .ok_or_else(|| CliError::Usage("--scores <file> is required for the abstract mechanism".into()))?;
        Ok(CandidateScoring::from_path(path, self.params.delta())?)
    }

    fn sample(&self) -> Result<Vec<u8>, CliError> {
        let n = self.cli.n.unwrap_or(DEFAULT_SAMPLES);
        let seed = self.cli.seed;
        let streams = SeedStreams::new(seed);
        let mechanism = self.cli.mech.name();
        let (epsilon, delta) = (self.params.epsilon(), self.params.delta());

        if self.cli.mech == Mechanism::Abstract {
            let scoring = self.scoring()?;
            let gamma = self.resolve_gamma()?;
            let picks = abstract_sample_many(&scoring, &self.params, gamma, n, seed)?;
            let ids: Vec<&str> = picks.iter().map(|&i| scoring.candidates()[i].as_str()).collect();
            return match self.cli.format {
                Format::Json => json(&SampleOutput {
                    mechanism,
                    epsilon,
                    delta,
                    gamma: Some(gamma),
                    r: None,
                    seed,
                    n,
                    values: ids,
                }),
                Format::Csv => {
                    let mut csv = Csv::bare();
                    for id in ids {
                        csv.row(&[Field::Text(id)]);
                    }
                    Ok(csv.into_bytes())
                }
            };
        }

        match self.build()? {
            Built::Continuous(mech) => {
                let sampler = mech.sampler();
                let values = streams.draw(n, |rng| sampler.sample_value(rng));
                match self.cli.format {
                    Format::Json => json(&SampleOutput {
                        mechanism,
                        epsilon,
                        delta,
                        gamma: mech.gamma(),
                        r: None,
                        seed,
                        n,
                        values,
                    }),
                    Format::Csv => {
                        let mut csv = Csv::bare();
                        for v in values {
                            csv.row(&[Field::Num(v)]);
                        }
                        Ok(csv.into_bytes())
                    }
                }
            }
            Built::Discrete(mech) => {
                let values = streams.draw(n, |rng| mech.sample(rng).value);
                match self.cli.format {
                    Format::Json => json(&SampleOutput {
                        mechanism,
                        epsilon,
                        delta,
                        gamma: None,
                        r: Some(mech.r()),
                        seed,
                        n,
                        values,
                    }),
                    Format::Csv => {
                        let mut csv = Csv::bare();
                        for v in values {
                            csv.row(&[Field::Int(v)]);
                        }
                        Ok(csv.into_bytes())
                    }
                }
            }
        }
    }

    fn pdf(&self) -> Result<Vec<u8>, CliError> {
        let delta = self.params.delta();
        let mechanism = self.cli.mech.name();
        let epsilon = self.params.epsilon();
        match self.build()? {
            Built::Continuous(mech) => {
                let xs = match &self.cli.x_range {
                    Some(spec) => parse_range("--x-range", spec)?,
                    None => (0..=200).map(|i| delta * (i as f64 / 20.0 - 5.0)).collect(),
                };
                let noise = mech.noise();
                let points: Vec<ContinuousPoint> = xs
                    .into_iter()
                    .map(|x| ContinuousPoint {
                        x,
                        pdf: noise.density(x),
                        cdf: noise.distribution(x),
                    })
                    .collect();
                match self.cli.format {
                    Format::Json => json(&DensityOutput {
                        mechanism,
                        epsilon,
                        delta,
                        gamma: mech.gamma(),
                        r: None,
                        points,
                    }),
                    Format::Csv => {
                        let mut csv = Csv::new("x,pdf,cdf");
                        for p in points {
                            csv.row(&[Field::Num(p.x), Field::Num(p.pdf), Field::Num(p.cdf)]);
                        }
                        Ok(csv.into_bytes())
                    }
                }
            }
            Built::Discrete(mech) => {
                let (lo, hi) = match &self.cli.x_range {
                    Some(spec) => {
                        let xs = parse_range("--x-range", spec)?;
                        (xs[0].ceil() as i64, xs[xs.len() - 1].floor() as i64)
                    }
                    None => {
                        let d = mech.delta() as i64;
                        (-10 * d, 10 * d)
                    }
                };
                let points: Vec<DiscretePoint> = (lo..=hi)
                    .map(|i| DiscretePoint {
                        i,
                        pmf: mech.pmf(i),
                        cdf: mech.cdf(i),
                    })
                    .collect();
                match self.cli.format {
                    Format::Json => json(&DensityOutput {
                        mechanism,
                        epsilon,
                        delta,
                        gamma: None,
                        r: Some(mech.r()),
                        points,
                    }),
                    Format::Csv => {
                        let mut csv = Csv::new("i,pmf,cdf");
                        for p in points {
                            csv.row(&[Field::Int(p.i), Field::Num(p.pmf), Field::Num(p.cdf)]);
                        }
                        Ok(csv.into_bytes())
                    }
                }
            }
        }
    }

    fn cost_output(
        &self,
        mechanism: &'static str,
        gamma: Option<f64>,
        r: Option<u64>,
        cost: ExpectedCost,
    ) -> CostOutput {
        CostOutput {
            mechanism,
            epsilon: self.params.epsilon(),
            delta: self.params.delta(),
            cost_function: self.cost_label.clone(),
            gamma,
            r,
            cost: cost.value,
            cost_error_bound: cost.error_bound,
            cost_method: cost.method,
        }
    }

    fn cost_row(out: &CostOutput) -> Vec<Field<'_>> {
        vec![
            Field::Text(out.mechanism),
            Field::Num(out.epsilon),
            Field::Num(out.delta),
            Field::Text(&out.cost_function),
            Field::Opt(out.gamma),
            Field::Opt(out.r.map(|r| r as f64)),
            Field::Num(out.cost),
            Field::Num(out.cost_error_bound),
        ]
    }

    fn parameter_result(&self, mechanism: &'static str, result: OptimizationResult) -> Result<Vec<u8>, CliError> {
        let out = ParameterOutput {
            cost: self.cost_output(mechanism, result.gamma(), result.step_index(), result.cost),
            method: result.method,
            diagnostics: result.diagnostics,
        };
        match self.cli.format {
            Format::Json => json(&out),
            Format::Csv => {
                let mut csv = Csv::new(&format!("{COST_CSV_HEADER},method"));
                let mut row = Self::cost_row(&out.cost);
                let method = serde_json::to_value(out.method)?;
                row.push(Field::Text(method.as_str().unwrap_or_default()));
                csv.row(&row);
                Ok(csv.into_bytes())
            }
        }
    }

    fn gamma(&self) -> Result<Vec<u8>, CliError> {
        if !matches!(self.cli.mech, Mechanism::Staircase | Mechanism::Abstract) {
            return Err(CliError::Usage(
                "`gamma` optimizes the continuous staircase; use `discrete-opt` for the discrete one".into(),
            ));
        }
        self.parameter_result(self.cli.mech.name(), self.optimize_gamma()?)
    }

    fn discrete_opt(&self) -> Result<Vec<u8>, CliError> {
        if !matches!(self.cli.mech, Mechanism::Staircase | Mechanism::StaircaseDiscrete) {
            return Err(CliError::Usage(
                "`discrete-opt` optimizes the discrete staircase".into(),
            ));
        }
        self.params.integer_delta()?;
        self.parameter_result(
            Mechanism::StaircaseDiscrete.name(),
            discrete_r_opt(&self.params, &self.cost)?,
        )
    }

    fn cost(&self) -> Result<Vec<u8>, CliError> {
        let mechanism = self.cli.mech.name();
        let out = match self.build()? {
            Built::Continuous(Continuous::Staircase(m)) => {
                let value = staircase_cost(&self.params, m.gamma(), &self.cost)?;
                self.cost_output(mechanism, Some(m.gamma()), None, value)
            }
            Built::Continuous(Continuous::Laplace(_)) => {
                let value = match self.cost.power() {
                    Some(_) => laplace_cost(&self.params, &self.cost)?,
                    None => laplace_cost_quadrature(&self.params, &self.cost)?,
                };
                self.cost_output(mechanism, None, None, value)
            }
            Built::Discrete(m) => {
                let value = discrete_cost(&self.params, m.r(), &self.cost)?;
                self.cost_output(mechanism, None, Some(m.r()), value)
            }
        };
        match self.cli.format {
            Format::Json => json(&out),
            Format::Csv => {
                let mut csv = Csv::new(COST_CSV_HEADER);
                csv.row(&Self::cost_row(&out));
                Ok(csv.into_bytes())
            }
        }
    }

    fn compare(&self) -> Result<Vec<u8>, CliError> {
        let spec = self.cli.eps_range.as_deref().unwrap_or(DEFAULT_EPS_RANGE);
        let grid = parse_range("--eps-range", spec)?;
        let rows = compare_mechanisms(&self.params, &self.cost, &grid)?;
        match self.cli.format {
            Format::Json => json(&CompareOutput {
                delta: self.params.delta(),
                cost_function: &self.cost_label,
                rows,
            }),
            Format::Csv => {
                let mut csv = Csv::new("epsilon,v_lap,v_opt,gain,gap");
                for r in rows {
                    csv.row(&[
                        Field::Num(r.epsilon),
                        Field::Num(r.v_lap),
                        Field::Num(r.v_opt),
                        Field::Num(r.gain),
                        Field::Num(r.gap),
                    ]);
                }
                Ok(csv.into_bytes())
            }
        }
    }

    fn audit(&self) -> Result<(Vec<u8>, Outcome), CliError> {
        let n = self.cli.n.unwrap_or(DEFAULT_GOF_SAMPLES);
        let report = match self.build()? {
            Built::Continuous(mech) => {
                let scaled = match self.cli.corrupt_half_line {
                    Some(factor) => Some(ScaledHalfLine::new(mech.noise(), factor)?),
                    None => None,
                };
                let noise: &dyn ContinuousNoise = match &scaled {
                    Some(s) => s,
                    None => mech.noise(),
                };
                let mut report = AuditReport::new(noise.label(), &self.params);
                report.add_ratio(&audit_ratio_continuous(noise, AUDIT_X_POINTS, AUDIT_D_POINTS)?);
                let shift = self.cli.shift.unwrap_or(self.params.delta());
                report.add_tradeoff(&numeric_tradeoff(noise, shift, DEFAULT_TRADEOFF_POINTS)?);
                report.add_gof(&sampler_gof_against(mech.sampler(), noise, n, self.cli.seed)?);
                report
            }
            Built::Discrete(mech) => {
                if self.cli.corrupt_half_line.is_some() {
                    return Err(CliError::Usage(
                        "--corrupt-half-line applies to continuous mechanisms only".into(),
                    ));
                }
                let mut report = AuditReport::new(self.cli.mech.name(), &self.params);
                report.add_ratio(&audit_ratio_discrete(&mech, DISCRETE_AUDIT_PERIODS * mech.delta())?);
                report.add_gof(&sampler_gof_discrete(&mech, n, self.cli.seed)?);
                report
            }
        };
        let outcome = if report.passed {
            Outcome::Success
        } else {
            Outcome::CheckFailed
        };
        let bytes = match self.cli.format {
            Format::Json => json(&report)?,
            Format::Csv => {
                let mut csv = Csv::new("check,passed,value,threshold,detail");
                for c in &report.checks {
                    csv.row(&[
                        Field::Text(&c.name),
                        Field::Text(if c.passed { "true" } else { "false" }),
                        Field::Num(c.value),
                        Field::Num(c.threshold),
                        Field::Text(&c.detail),
                    ]);
                }
                csv.into_bytes()
            }
        };
        Ok((bytes, outcome))
    }

    fn tradeoff(&self) -> Result<Vec<u8>, CliError> {
        let curve: TradeoffCurve = if self.cli.closed_form {
            if self.cli.mech != Mechanism::Laplace {
                return Err(CliError::Usage("--closed-form requires --mech laplace".into()));
            }
            if self.cli.shift.is_some_and(|s| s != self.params.delta()) {
                return Err(CliError::Usage("the closed-form curve uses shift = delta".into()));
            }
            laplace_tradeoff(&self.params, self.cli.n.unwrap_or(DEFAULT_TRADEOFF_POINTS + 1))?
        } else {
            let Built::Continuous(mech) = self.build()? else {
                return Err(CliError::Usage("`tradeoff` supports continuous mechanisms only".into()));
            };
            let shift = self.cli.shift.unwrap_or(self.params.delta());
            numeric_tradeoff(mech.noise(), shift, self.cli.n.unwrap_or(DEFAULT_TRADEOFF_POINTS))?
        };
        match self.cli.format {
            Format::Json => json(&curve),
            Format::Csv => {
                let mut buf = Vec::new();
                curve.write_csv(&mut buf, true)?;
                debug_assert!(buf.starts_with(TRADEOFF_CSV_HEADER.as_bytes()));
                Ok(buf)
            }
        }
    }

    fn abstract_selection(&self) -> Result<Vec<u8>, CliError> {
        if !matches!(self.cli.mech, Mechanism::Staircase | Mechanism::Abstract) {
            return Err(CliError::Usage(
                "`abstract` uses the abstract staircase mechanism only".into(),
            ));
        }
        let scoring = self.scoring()?;
        let gamma = self.resolve_gamma()?;
        let probs = abstract_distribution(&scoring, &self.params, gamma)?;
        let rows: Vec<CandidateRow<'_>> = scoring
            .candidates()
            .iter()
            .zip(scoring.scores())
            .zip(&probs)
            .map(|((id, &score), &probability)| CandidateRow {
                candidate_id: id,
                score,
                probability,
            })
            .collect();
        match self.cli.format {
            Format::Json => json(&AbstractOutput {
                epsilon: self.params.epsilon(),
                delta: self.params.delta(),
                gamma,
                candidates: rows,
            }),
            Format::Csv => {
                let mut csv = Csv::new("candidate_id,score,probability");
                for r in rows {
                    csv.row(&[
                        Field::Text(r.candidate_id),
                        Field::Num(r.score),
                        Field::Num(r.probability),
                    ]);
                }
                Ok(csv.into_bytes())
            }
        }
    }
}
