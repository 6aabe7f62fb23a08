//! Command-line front end: argument parsing, solver dispatch and JSON output.
//!
//! Exit codes: 0 repaired or valid, 1 no repair exists, 2 invalid input,
//! 3 the request is outside what the selected solver supports.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use metric_repair::approx::{repair_general, ApproxConfig};
use metric_repair::bounded::{solve_bounded_full_line, solve_bounded_line, LineCell};
use metric_repair::embed::stretch_statistics;
use metric_repair::gen::{
    gen_apx_3sc, gen_random, gen_sat_bounded, gen_x3c_bounded, parse_cnf, ConstraintTemplate,
    RandomSpec,
};
use metric_repair::instance::{Instance, InstanceFile};
use metric_repair::oracle::{brute_force_optimal, search_space, OracleBudget};
use metric_repair::tree_solver::solve_exact;
use metric_repair::validate::validate_instance;
use metric_repair::{check_consistency, repair_cost, MetricKind, Repair, RepairError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NO_REPAIR: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_REFUSED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "metric-repair", version, about = "Minimum-cost repairs of metric databases")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Master seed for randomized solvers and generators.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Failure probability of the approximation; sets the trial count.
    #[arg(long, global = true, default_value_t = 0.01)]
    pub epsilon: f64,

    /// Number of approximation trials, overriding --epsilon.
    #[arg(long, global = true)]
    pub trials: Option<usize>,

    /// Pretty-print the JSON output.
    #[arg(long, global = true)]
    pub pretty: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check an instance file and report metric and constraint diagnostics.
    Validate { file: PathBuf },
    /// Repair an instance with the solver matching its metric.
    Repair(RepairArgs),
    /// Exhaustive optimum for small instances.
    Oracle {
        file: PathBuf,
        /// Largest number of candidate assignments to enumerate.
        #[arg(long, default_value_t = 5_000_000)]
        budget: u128,
    },
    /// Stretch statistics of sampled dominating trees.
    EmbedStats {
        file: PathBuf,
        #[arg(long)]
        samples: usize,
    },
    /// Write a generated instance to standard output.
    Gen(GenArgs),
}

#[derive(Debug, Args)]
pub struct RepairArgs {
    pub file: PathBuf,
    /// With tau on a line metric: allow moves to any real value.
    #[arg(long)]
    pub full_line: bool,
    /// Also report stretch statistics over this many sampled trees.
    #[arg(long)]
    pub stretch_samples: Option<usize>,
    /// Oracle budget for bounded repairs on non-line metrics.
    #[arg(long, default_value_t = 5_000_000)]
    pub budget: u128,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum GenKind {
    Random,
    Apx3sc,
    X3c,
    Sat,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MetricArg {
    Matrix,
    Graph,
    Line,
    Discrete,
    Tree,
}

impl From<MetricArg> for MetricKind {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Matrix => MetricKind::Matrix,
            MetricArg::Graph => MetricKind::Graph,
            MetricArg::Line => MetricKind::Line,
            MetricArg::Discrete => MetricKind::Discrete,
            MetricArg::Tree => MetricKind::Tree,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TemplateArg {
    Any,
    Key,
    Inclusion,
    ForeignKey,
    Closed,
    Mixed,
    Pointwise,
}

impl From<TemplateArg> for ConstraintTemplate {
    fn from(t: TemplateArg) -> Self {
        match t {
            TemplateArg::Any => ConstraintTemplate::Any,
            TemplateArg::Key => ConstraintTemplate::Key,
            TemplateArg::Inclusion => ConstraintTemplate::Inclusion,
            TemplateArg::ForeignKey => ConstraintTemplate::ForeignKey,
            TemplateArg::Closed => ConstraintTemplate::Closed,
            TemplateArg::Mixed => ConstraintTemplate::Mixed,
            TemplateArg::Pointwise => ConstraintTemplate::Pointwise,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    pub kind: GenKind,
    /// random: number of points.
    #[arg(long, default_value_t = 4)]
    pub points: usize,
    /// random: cells per attribute, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [2usize, 2])]
    pub cells: Vec<usize>,
    /// random: metric kind.
    #[arg(long, value_enum, default_value_t = MetricArg::Line)]
    pub metric: MetricArg,
    /// random: constraint template.
    #[arg(long, value_enum, default_value_t = TemplateArg::Mixed)]
    pub template: TemplateArg,
    /// random: 1-based attributes whose cells are locked.
    #[arg(long, value_delimiter = ',')]
    pub locked: Vec<usize>,
    /// random: movement bound.
    #[arg(long)]
    pub tau: Option<f64>,
    /// apx3sc, x3c: number of elements.
    #[arg(long, default_value_t = 0)]
    pub elements: usize,
    /// apx3sc, x3c: a 3-set of 1-based elements, e.g. `1,2,3`; repeatable.
    #[arg(long = "set", value_parser = parse_triple)]
    pub sets: Vec<[usize; 3]>,
    /// sat: number of variables.
    #[arg(long, default_value_t = 0)]
    pub vars: usize,
    /// sat: a clause of signed 1-based literals, e.g. `1,-2,3`; repeatable.
    #[arg(long = "clause", value_parser = parse_clause, allow_hyphen_values = true)]
    pub clauses: Vec<Vec<i64>>,
}

fn parse_triple(s: &str) -> Result<[usize; 3], String> {
    let xs: Vec<usize> = s
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|e| format!("`{t}`: {e}")))
        .collect::<Result<_, _>>()?;
    match xs.as_slice() {
        [a, b, c] if *a >= 1 && *b >= 1 && *c >= 1 => Ok([a - 1, b - 1, c - 1]),
        _ => Err(format!("expected three 1-based elements, got `{s}`")),
    }
}

fn parse_clause(s: &str) -> Result<Vec<i64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<i64>().map_err(|e| format!("`{t}`: {e}")))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Repaired,
    NoRepair,
    Error,
}

/// The JSON document printed by `repair` and `oracle`.
#[derive(Debug, Clone, Serialize)]
pub struct ResultFile {
    pub status: Status,
    pub cost: Option<f64>,
    /// Cell id to point name.
    pub assignment: Option<BTreeMap<String, String>>,
    pub changed_cells: Vec<String>,
    pub solver: String,
    pub seed: u64,
    pub trials: Option<usize>,
    pub elapsed_ms: u64,
    pub diagnostics: Value,
}

/// Exit code and standard output of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
}

/// Rounds every non-integer number to 12 significant digits.
pub fn round_numbers(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap();
            let r: f64 = format!("{x:.11e}").parse().unwrap();
            if let Some(m) = serde_json::Number::from_f64(r) {
                *n = m;
            }
        }
        Value::Array(xs) => xs.iter_mut().for_each(round_numbers),
        Value::Object(m) => m.values_mut().for_each(round_numbers),
        _ => {}
    }
}

fn render(value: impl Serialize, pretty: bool) -> String {
    let mut v = serde_json::to_value(value).expect("outputs serialize");
    round_numbers(&mut v);
    if pretty {
        serde_json::to_string_pretty(&v).unwrap()
    } else {
        serde_json::to_string(&v).unwrap()
    }
}

struct Failure {
    code: i32,
    message: String,
    detail: Value,
}

impl From<RepairError> for Failure {
    fn from(e: RepairError) -> Self {
        let code = match e {
            RepairError::Refused(_) | RepairError::BudgetExceeded { .. } => EXIT_REFUSED,
            RepairError::Internal(_) => 70,
            _ => EXIT_INVALID,
        };
        Failure {
            code,
            message: e.to_string(),
            detail: Value::Null,
        }
    }
}

fn load(path: &Path) -> Result<Instance, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure {
        code: EXIT_INVALID,
        message: format!("cannot read {}: {e}", path.display()),
        detail: Value::Null,
    })?;
    let file = InstanceFile::from_json(&text).map_err(|e| Failure {
        code: EXIT_INVALID,
        message: format!("{}:{}:{}: {e}", path.display(), e.line(), e.column()),
        detail: json!({ "line": e.line(), "column": e.column() }),
    })?;
    Ok(file.resolve()?)
}

pub fn run(cli: &Cli) -> Outcome {
    let started = Instant::now();
    let result = match &cli.command {
        Command::Validate { file } => cmd_validate(cli, file),
        Command::Repair(args) => cmd_repair(cli, args, started),
        Command::Oracle { file, budget } => cmd_oracle(cli, file, *budget, started),
        Command::EmbedStats { file, samples } => cmd_embed_stats(cli, file, *samples),
        Command::Gen(args) => cmd_gen(cli, args),
    };
    match result {
        Ok(o) => o,
        Err(f) => {
            let mut diagnostics = json!({ "message": f.message });
            if let Value::Object(extra) = f.detail {
                diagnostics.as_object_mut().unwrap().extend(extra);
            }
            let out = ResultFile {
                status: Status::Error,
                cost: None,
                assignment: None,
                changed_cells: Vec::new(),
                solver: solver_hint(&cli.command).into(),
                seed: cli.seed,
                trials: None,
                elapsed_ms: started.elapsed().as_millis() as u64,
                diagnostics,
            };
            Outcome {
                code: f.code,
                stdout: render(out, cli.pretty),
            }
        }
    }
}

fn solver_hint(c: &Command) -> &'static str {
    match c {
        Command::Validate { .. } => "validate",
        Command::Repair(_) => "none",
        Command::Oracle { .. } => "oracle",
        Command::EmbedStats { .. } => "embed_stats",
        Command::Gen(_) => "gen",
    }
}

fn cmd_validate(cli: &Cli, file: &Path) -> Result<Outcome, Failure> {
    let inst = load(file)?;
    let report = validate_instance(&inst);
    let valid = report.is_valid();
    Ok(Outcome {
        code: if valid { EXIT_OK } else { EXIT_INVALID },
        stdout: render(
            json!({ "status": if valid { "valid" } else { "invalid" }, "report": report }),
            cli.pretty,
        ),
    })
}

struct Solved {
    solver: &'static str,
    repair: Option<Repair>,
    trials: Option<usize>,
    diagnostics: Value,
}

fn cmd_repair(cli: &Cli, args: &RepairArgs, started: Instant) -> Result<Outcome, Failure> {
    let inst = load(&args.file)?;
    if args.full_line {
        return full_line(cli, &inst, started);
    }
    let kind = inst.metric.kind();
    let solved = match (inst.tau, kind) {
        (Some(tau), MetricKind::Line) => Solved {
            solver: "bounded_line",
            repair: solve_bounded_line(
                &inst.db,
                inst.metric.coords().expect("line metrics keep coordinates"),
                &inst.constraint,
                &inst.weights,
                tau,
            )?,
            trials: None,
            diagnostics: json!({ "tau": tau }),
        },
        (Some(tau), _) => {
            let need = search_space(&inst.db, &inst.metric, &inst.weights, Some(tau));
            if need > args.budget {
                return Err(RepairError::Refused(format!(
                    "bounded repair on a {kind:?} metric is only solved exhaustively; it needs \
                     {need} assignments, over the budget of {}. Run `oracle` with a larger --budget",
                    args.budget
                ))
                .into());
            }
            Solved {
                solver: "bounded_oracle",
                repair: brute_force_optimal(
                    &inst.db,
                    &inst.metric,
                    &inst.constraint,
                    &inst.weights,
                    Some(tau),
                    OracleBudget {
                        max_assignments: args.budget,
                    },
                )?,
                trials: None,
                diagnostics: json!({ "tau": tau, "search_space": need.to_string() }),
            }
        }
        (None, MetricKind::Line | MetricKind::Discrete | MetricKind::Tree) => Solved {
            solver: "tree_exact",
            repair: solve_exact(&inst.db, &inst.metric, &inst.constraint, &inst.weights)?,
            trials: None,
            diagnostics: json!({}),
        },
        (None, MetricKind::Matrix | MetricKind::Graph) => {
            let cfg = ApproxConfig {
                epsilon: cli.epsilon,
                trials: cli.trials,
                seed: cli.seed,
            };
            let out = repair_general(&inst.db, &inst.metric, &inst.constraint, &inst.weights, &cfg)?;
            let mut diagnostics = json!({
                "trial_costs": out.trials.iter().map(|t| t.cost).collect::<Vec<_>>(),
                "tree_costs": out.trials.iter().map(|t| t.tree_cost).collect::<Vec<_>>(),
                "trial_seeds": out.trials.iter().map(|t| t.seed.to_string()).collect::<Vec<_>>(),
                "best_trial": out.best_trial,
            });
            if let Some(n) = args.stretch_samples {
                let s = stretch_statistics(&inst.metric, n.max(1), cli.seed)?;
                diagnostics["stretch"] = json!({
                    "samples": s.samples,
                    "mean": s.mean,
                    "max": s.max,
                    "min": s.min,
                });
            }
            Solved {
                solver: "frt_approx",
                repair: out.repair,
                trials: Some(out.trials.len()),
                diagnostics,
            }
        }
    };
    finish(cli, &inst, solved, started)
}

fn finish(cli: &Cli, inst: &Instance, s: Solved, started: Instant) -> Result<Outcome, Failure> {
    let Some(repair) = s.repair else {
        return Ok(Outcome {
            code: EXIT_NO_REPAIR,
            stdout: render(
                ResultFile {
                    status: Status::NoRepair,
                    cost: None,
                    assignment: None,
                    changed_cells: Vec::new(),
                    solver: s.solver.into(),
                    seed: cli.seed,
                    trials: s.trials,
                    elapsed_ms: started.elapsed().as_millis() as u64,
                    diagnostics: s.diagnostics,
                },
                cli.pretty,
            ),
        });
    };
    // every reported repair is rechecked against the original instance
    let repaired = inst.db.apply(&repair.assignment)?;
    let bad = check_consistency(&repaired, &inst.constraint);
    if !bad.is_empty() {
        return Err(RepairError::Internal(format!("repair leaves {} illegal points", bad.len())).into());
    }
    let cost = repair_cost(&inst.db, &repair.assignment, &inst.metric, &inst.weights)?;
    let changed = repair
        .changed_cells(&inst.db)
        .into_iter()
        .map(|i| inst.db.cells()[i].id.clone())
        .collect();
    Ok(Outcome {
        code: EXIT_OK,
        stdout: render(
            ResultFile {
                status: Status::Repaired,
                cost: Some(cost),
                assignment: Some(inst.assignment_names(&repair.assignment)),
                changed_cells: changed,
                solver: s.solver.into(),
                seed: cli.seed,
                trials: s.trials,
                elapsed_ms: started.elapsed().as_millis() as u64,
                diagnostics: s.diagnostics,
            },
            cli.pretty,
        ),
    })
}

fn full_line(cli: &Cli, inst: &Instance, started: Instant) -> Result<Outcome, Failure> {
    let (Some(tau), Some(coords)) = (inst.tau, inst.metric.coords()) else {
        return Err(RepairError::Refused(
            "--full-line needs a line metric and a tau".into(),
        )
        .into());
    };
    let cells: Vec<LineCell> = inst
        .db
        .cells()
        .iter()
        .map(|c| LineCell {
            id: c.id.clone(),
            attr: c.attr,
            x: coords[c.value],
        })
        .collect();
    let out = solve_bounded_full_line(inst.db.q(), &cells, &inst.constraint, &inst.weights, tau)?;
    let elapsed_ms = started.elapsed().as_millis() as u64;
    let Some(r) = out else {
        return Ok(Outcome {
            code: EXIT_NO_REPAIR,
            stdout: render(
                ResultFile {
                    status: Status::NoRepair,
                    cost: None,
                    assignment: None,
                    changed_cells: Vec::new(),
                    solver: "bounded_full_line".into(),
                    seed: cli.seed,
                    trials: None,
                    elapsed_ms,
                    diagnostics: json!({ "tau": tau }),
                },
                cli.pretty,
            ),
        });
    };
    let coordinates: BTreeMap<&str, f64> =
        cells.iter().zip(&r.coords).map(|(c, &x)| (c.id.as_str(), x)).collect();
    // cells that land on an existing point are reported by name as well
    let assignment: BTreeMap<String, String> = cells
        .iter()
        .zip(&r.coords)
        .map(|(c, &x)| {
            let name = coords
                .iter()
                .position(|&p| p == x)
                .map(|v| inst.metric.name(v).to_string())
                .unwrap_or_else(|| format!("{x}"));
            (c.id.clone(), name)
        })
        .collect();
    let changed = cells
        .iter()
        .zip(&r.coords)
        .filter(|(c, &x)| c.x != x)
        .map(|(c, _)| c.id.clone())
        .collect();
    Ok(Outcome {
        code: EXIT_OK,
        stdout: render(
            ResultFile {
                status: Status::Repaired,
                cost: Some(r.cost),
                assignment: Some(assignment),
                changed_cells: changed,
                solver: "bounded_full_line".into(),
                seed: cli.seed,
                trials: None,
                elapsed_ms,
                diagnostics: json!({ "tau": tau, "coordinates": coordinates }),
            },
            cli.pretty,
        ),
    })
}

fn cmd_oracle(cli: &Cli, file: &Path, budget: u128, started: Instant) -> Result<Outcome, Failure> {
    let inst = load(file)?;
    let repair = brute_force_optimal(
        &inst.db,
        &inst.metric,
        &inst.constraint,
        &inst.weights,
        inst.tau,
        OracleBudget {
            max_assignments: budget,
        },
    )?;
    finish(
        cli,
        &inst,
        Solved {
            solver: "oracle",
            repair,
            trials: None,
            diagnostics: json!({ "tau": inst.tau }),
        },
        started,
    )
}

fn cmd_embed_stats(cli: &Cli, file: &Path, samples: usize) -> Result<Outcome, Failure> {
    let inst = load(file)?;
    let s = stretch_statistics(&inst.metric, samples, cli.seed)?;
    let n = inst.metric.names().len();
    let pairs: Vec<Value> = s
        .pairs
        .iter()
        .zip(s.pair_mean.iter().zip(&s.pair_max))
        .map(|(&(u, v), (mean, max))| {
            json!({
                "u": inst.metric.name(u),
                "v": inst.metric.name(v),
                "mean": mean,
                "max": max,
            })
        })
        .collect();
    Ok(Outcome {
        code: EXIT_OK,
        stdout: render(
            json!({
                "status": "ok",
                "seed": cli.seed,
                "samples": s.samples,
                "points": n,
                "mean": s.mean,
                "max": s.max,
                "min": s.min,
                "log_constant": s.log_constant(n),
                "pairs": pairs,
            }),
            cli.pretty,
        ),
    })
}

fn cmd_gen(cli: &Cli, a: &GenArgs) -> Result<Outcome, Failure> {
    let file = match a.kind {
        GenKind::Random => {
            if a.locked.iter().any(|&j| j == 0) {
                return Err(RepairError::Input("locked attributes are 1-based".into()).into());
            }
            let spec = RandomSpec {
                n_points: a.points,
                cells_per_attr: a.cells.clone(),
                metric: a.metric.into(),
                template: a.template.into(),
                weight_range: (0.5, 2.0),
                locked: a.locked.iter().map(|j| j - 1).collect(),
                tau: a.tau,
                seed: cli.seed,
            };
            gen_random(&spec)?
        }
        GenKind::Apx3sc => gen_apx_3sc(a.elements, &a.sets)?,
        GenKind::X3c => gen_x3c_bounded(a.elements, &a.sets)?,
        GenKind::Sat => {
            let cnf = parse_cnf(&a.clauses)?;
            let n = cnf
                .iter()
                .flatten()
                .map(|l| l.var + 1)
                .max()
                .unwrap_or(0)
                .max(a.vars);
            gen_sat_bounded(n, &cnf)?
        }
    };
    Ok(Outcome {
        code: EXIT_OK,
        stdout: if cli.pretty {
            file.to_json_pretty()
        } else {
            serde_json::to_string(&file).unwrap()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_keeps_twelve_significant_digits() {
        let mut v = json!({ "a": 5.199999999999999, "b": [0.1 + 0.2, 3], "c": 1234.56789012345678 });
        round_numbers(&mut v);
        assert_eq!(v.to_string(), r#"{"a":5.2,"b":[0.3,3],"c":1234.56789012}"#);
    }

    #[test]
    fn set_and_clause_arguments() {
        assert_eq!(parse_triple("1,2,3"), Ok([0, 1, 2]));
        assert!(parse_triple("0,1,2").is_err());
        assert!(parse_triple("1,2").is_err());
        assert_eq!(parse_clause("1,-2,3"), Ok(vec![1, -2, 3]));
    }

    #[test]
    fn global_flags_follow_the_subcommand() {
        let cli = Cli::try_parse_from(["metric-repair", "repair", "x.json", "--seed", "7", "--trials", "3"]).unwrap();
        assert_eq!(cli.seed, 7);
        assert_eq!(cli.trials, Some(3));
        assert_eq!(cli.epsilon, 0.01);
        let cli = Cli::try_parse_from(["metric-repair", "gen", "sat", "--clause", "-1,2"]).unwrap();
        let Command::Gen(g) = cli.command else { panic!() };
        assert_eq!(g.clauses, vec![vec![-1, 2]]);
    }
}
