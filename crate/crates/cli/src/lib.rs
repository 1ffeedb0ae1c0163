//! Command-line sweeps over the crowd-incentives library.
//!
//! Every numeric flag takes either a scalar or a range `start:stop:count`.
//! At most two flags may be ranged; the grid is their Cartesian product,
//! with the first ranged flag (in the order of [`FLAGS`]) as the outer loop.
//! Each grid point produces one or more CSV rows.

use std::fmt;
use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crowd_incentives::basic::{
    equilibrium_consensus, is_sne_consensus_q1, mechanism_cost_accuracy, mechanism_cost_consensus, min_cost_accuracy,
    optimal_action_accuracy, utility_accuracy, AccuracyParams, ConsensusParams,
};
use crowd_incentives::sim::{replicate, simulate, Estimate, Mechanism, SimConfig};
use crowd_incentives::training::{
    cost_upper_bound, design_mechanism, equilibrium_training_quality, mechanism_cost_training, min_training_tasks,
    stationary_working_prob, training_tasks_bound, verify_sne, ActionPair, TrainingParams, WorkingParams,
};
use crowd_incentives::{QuadraticCost, Quality};

/// Upper limit on the number of grid points in one invocation.
const MAX_POINTS: usize = 1_000_000;

#[derive(Debug)]
pub enum CliError {
    /// Malformed invocation; exit status 2.
    Usage(String),
    /// The library rejected a parameter combination; exit status 1.
    Domain(String),
    Io(io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) | CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Domain(m) => write!(f, "error: {m}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<crowd_incentives::Error> for CliError {
    fn from(e: crowd_incentives::Error) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.into())
    }
}

type Result<T> = std::result::Result<T, CliError>;

/// A scalar or an evenly spaced range `start:stop:count`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep(Vec<f64>);

impl Sweep {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    fn is_range(&self) -> bool {
        self.0.len() > 1
    }
}

impl FromStr for Sweep {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("`{t}` is not a finite number"))
        };
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            [v] => Ok(Sweep(vec![num(v)?])),
            [a, b, n] => {
                let (start, stop) = (num(a)?, num(b)?);
                let count: usize = n.trim().parse().map_err(|_| format!("count `{n}` is not a positive integer"))?;
                if count == 0 {
                    return Err("range count must be at least 1".into());
                }
                if start > stop {
                    return Err(format!("range start {start} exceeds stop {stop}"));
                }
                if count == 1 {
                    return Ok(Sweep(vec![start]));
                }
                let step = (stop - start) / (count - 1) as f64;
                let mut values: Vec<f64> = (0..count).map(|i| start + i as f64 * step).collect();
                values[count - 1] = stop;
                Ok(Sweep(values))
            }
            _ => Err(format!("`{s}` is neither a number nor start:stop:count")),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "crowdlab", version, about = "Incentive mechanisms for microtask crowdsourcing: sweeps and simulations as CSV")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Symmetric equilibrium of reward-consensus. Flags: --lambda --k --r | --cost.
    McEquilibrium(Params),
    /// Worker's optimal quality under reward-accuracy. Flags: --lambda --alpha-a --r --eps --d.
    MaOptimal(Params),
    /// Cheapest reward-accuracy parameters that sustain quality 1. Flags: --lambda --eps --d.
    MaMinCost(Params),
    /// Design the training mechanism from its working-state parameters.
    /// Flags: --lambda --beta-w --alpha-w --r --gamma --delta --eps --d --grid.
    MtDesign(Params),
    /// Check whether an action pair is a symmetric equilibrium of the training mechanism.
    /// Flags: --lambda --beta-w --alpha-w --r --alpha-t --n --gamma --delta --eps --d --grid --q-w --q-t --curve.
    MtVerify(Params),
    /// Number of training tasks required for quality 1.
    /// Flags: --lambda --beta-w --alpha-w --r --delta --eps.
    MtNBound(Params),
    /// Long-run share of workers in the working state.
    /// Flags: --lambda --beta-w --alpha-w --r --alpha-t --n --gamma --delta --eps --d --grid --pi0 --q-t.
    MtStationary(Params),
    /// Monte Carlo simulation of a worker population.
    /// Flags: --mechanism --lambda --pop --horizon --reps --seed --q-w and the mechanism's parameters.
    Simulate(Params),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MechanismKind {
    Consensus,
    Accuracy,
    Training,
}

/// Shared flags. Each subcommand accepts only the flags listed in its help
/// and rejects the rest.
#[derive(Debug, Args)]
pub struct Params {
    /// Cost sensitivity λ [default: 1]
    #[arg(long)]
    pub lambda: Option<Sweep>,
    /// Continuation probability δ [default: 0.9]
    #[arg(long)]
    pub delta: Option<Sweep>,
    /// Validator error rate ε [default: 0.01]
    #[arg(long)]
    pub eps: Option<Sweep>,
    /// Cost of validating one task [default: 10]
    #[arg(long)]
    pub d: Option<Sweep>,
    /// Working-state share of spot-checked tasks [default: 0]
    #[arg(long)]
    pub beta_w: Option<Sweep>,
    /// Working-state spot-check probability [default: 0]
    #[arg(long)]
    pub alpha_w: Option<Sweep>,
    /// Training-state sampling probability [default: designed value]
    #[arg(long)]
    pub alpha_t: Option<Sweep>,
    /// Reward per accepted task [default: 1]
    #[arg(long)]
    pub r: Option<Sweep>,
    /// Training-to-working validation budget γ [default: 1]
    #[arg(long)]
    pub gamma: Option<Sweep>,
    /// Training tasks per round [default: designed value]
    #[arg(long)]
    pub n: Option<Sweep>,
    /// Quality grid intervals for best responses [default: 100]
    #[arg(long)]
    pub grid: Option<Sweep>,
    /// Simulated population [default: 10000]
    #[arg(long)]
    pub pop: Option<Sweep>,
    /// Simulated slots [default: 500]
    #[arg(long)]
    pub horizon: Option<Sweep>,
    /// Independent replications [default: 1]
    #[arg(long)]
    pub reps: Option<Sweep>,
    /// Random seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Peers on a reward-consensus panel [default: 2]
    #[arg(long)]
    pub k: Option<Sweep>,
    /// Reward-accuracy spot-check probability [default: 1]
    #[arg(long)]
    pub alpha_a: Option<Sweep>,
    /// Reward-consensus mechanism cost; sets r = cost / (k + 1)
    #[arg(long)]
    pub cost: Option<Sweep>,
    /// Probability a newcomer starts in the working state [default: 1]
    #[arg(long)]
    pub pi0: Option<Sweep>,
    /// Working-state quality [default: 1]
    #[arg(long)]
    pub q_w: Option<Sweep>,
    /// Training-state quality [default: equilibrium value]
    #[arg(long)]
    pub q_t: Option<Sweep>,
    /// Mechanism to simulate [default: training]
    #[arg(long, value_enum)]
    pub mechanism: Option<MechanismKind>,
    /// Emit the utility-loss curve instead of a summary row
    #[arg(long)]
    pub curve: bool,
    /// Output file [default: standard output]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Flag names in grid order, with their defaults. `None` means the value
/// is derived when the flag is omitted.
pub const FLAGS: [(&str, Option<f64>); 21] = [
    ("lambda", Some(1.0)),
    ("k", Some(2.0)),
    ("cost", None),
    ("alpha_a", Some(1.0)),
    ("beta_w", Some(0.0)),
    ("alpha_w", Some(0.0)),
    ("r", Some(1.0)),
    ("alpha_t", None),
    ("n", None),
    ("gamma", Some(1.0)),
    ("delta", Some(0.9)),
    ("eps", Some(0.01)),
    ("d", Some(10.0)),
    ("pi0", Some(1.0)),
    ("q_w", Some(1.0)),
    ("q_t", None),
    ("grid", Some(100.0)),
    ("pop", Some(10_000.0)),
    ("horizon", Some(500.0)),
    ("reps", Some(1.0)),
    ("seed", Some(0.0)),
];

impl Params {
    fn sweeps(&self) -> [Option<Sweep>; 21] {
        [
            self.lambda.clone(),
            self.k.clone(),
            self.cost.clone(),
            self.alpha_a.clone(),
            self.beta_w.clone(),
            self.alpha_w.clone(),
            self.r.clone(),
            self.alpha_t.clone(),
            self.n.clone(),
            self.gamma.clone(),
            self.delta.clone(),
            self.eps.clone(),
            self.d.clone(),
            self.pi0.clone(),
            self.q_w.clone(),
            self.q_t.clone(),
            self.grid.clone(),
            self.pop.clone(),
            self.horizon.clone(),
            self.reps.clone(),
            self.seed.map(|s| Sweep(vec![s as f64])),
        ]
    }
}

fn flag_index(name: &str) -> usize {
    FLAGS.iter().position(|(n, _)| *n == name).expect("known flag")
}

/// One grid point: a value (or `None` for derived flags) per entry of
/// [`FLAGS`].
#[derive(Debug, Clone)]
struct Point {
    values: [Option<f64>; 21],
    seed: u64,
}

impl Point {
    fn get(&self, name: &str) -> f64 {
        self.values[flag_index(name)].expect("flag has a default")
    }

    fn opt(&self, name: &str) -> Option<f64> {
        self.values[flag_index(name)]
    }

    fn count(&self, name: &str) -> Result<usize> {
        let v = self.get(name);
        if v.fract() != 0.0 || v < 0.0 || v > u32::MAX as f64 {
            return Err(CliError::Usage(format!("--{} must be a non-negative integer, got {v}", dash(name))));
        }
        Ok(v as usize)
    }

    fn quality(&self, name: &str) -> Result<Quality> {
        Ok(Quality::new(self.get(name))?)
    }
}

fn dash(name: &str) -> String {
    name.replace('_', "-")
}

/// Builds the grid from the flags a command accepts.
fn grid(params: &Params, allowed: &[&str]) -> Result<Vec<Point>> {
    let sweeps = params.sweeps();
    for (i, s) in sweeps.iter().enumerate() {
        if s.is_some() && !allowed.contains(&FLAGS[i].0) {
            return Err(CliError::Usage(format!("--{} is not used by this command", dash(FLAGS[i].0))));
        }
    }
    let ranged: Vec<usize> = (0..FLAGS.len()).filter(|&i| sweeps[i].as_ref().is_some_and(Sweep::is_range)).collect();
    if ranged.len() > 2 {
        return Err(CliError::Usage("at most two flags may be ranges".into()));
    }
    let total: usize = ranged.iter().map(|&i| sweeps[i].as_ref().unwrap().values().len()).product();
    if total > MAX_POINTS {
        return Err(CliError::Usage(format!("{total} grid points exceed the limit of {MAX_POINTS}")));
    }

    let base: [Option<f64>; 21] =
        std::array::from_fn(|i| sweeps[i].as_ref().map(|s| s.values()[0]).or(FLAGS[i].1));
    let mut points = vec![base];
    for &i in &ranged {
        let values = sweeps[i].as_ref().unwrap().values();
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |&v| {
                    let mut q = p;
                    q[i] = Some(v);
                    q
                })
            })
            .collect();
    }
    let seed = params.seed.unwrap_or(0);
    Ok(points.into_iter().map(|values| Point { values, seed }).collect())
}

/// A command's output: column names and a function from a grid point to
/// its rows.
struct Table {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

fn write_csv<W: Write>(out: W, table: &Table) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(&table.header)?;
    for row in &table.rows {
        if let Some(bad) = row.iter().find(|v| !v.is_finite()) {
            return Err(CliError::Domain(format!("non-finite result {bad} in row {row:?}")));
        }
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

fn flag(b: bool) -> f64 {
    f64::from(u8::from(b))
}

fn cost_model(pt: &Point) -> Result<QuadraticCost> {
    Ok(QuadraticCost::new(pt.get("lambda"))?)
}

/// Training parameters at a grid point, with `n` and `alpha_t` designed
/// when not given.
fn training_params(pt: &Point, c: &QuadraticCost) -> Result<TrainingParams> {
    let working = WorkingParams { beta_w: pt.get("beta_w"), alpha_w: pt.get("alpha_w"), r: pt.get("r") };
    let mut p = design_mechanism(working, pt.get("gamma"), pt.get("delta"), pt.get("eps"), pt.get("d"), c)
        .or_else(|e| {
            // Both design values overridden: the design bound is irrelevant.
            if pt.opt("n").is_some() && pt.opt("alpha_t").is_some() {
                Ok(TrainingParams {
                    beta_w: working.beta_w,
                    alpha_w: working.alpha_w,
                    r: working.r,
                    gamma: pt.get("gamma"),
                    delta: pt.get("delta"),
                    eps: pt.get("eps"),
                    d: pt.get("d"),
                    ..Default::default()
                })
            } else {
                Err(e)
            }
        })?;
    if let Some(n) = pt.opt("n") {
        p.n_tasks = u32::try_from(pt.count("n")?).map_err(|_| CliError::Usage(format!("--n {n} is too large")))?;
    }
    if let Some(a) = pt.opt("alpha_t") {
        p.alpha_t = a;
    }
    p.pi0_w = pt.get("pi0");
    p.validate()?;
    Ok(p)
}

fn q_hat_t(pt: &Point, p: &TrainingParams, c: &QuadraticCost) -> Result<Quality> {
    match pt.opt("q_t") {
        Some(_) => pt.quality("q_t"),
        None => Ok(equilibrium_training_quality(p, c, pt.count("grid")?)?),
    }
}

fn training_columns(p: &TrainingParams) -> Vec<f64> {
    vec![p.n_tasks as f64, p.alpha_t]
}

type RowFn = dyn Fn(&Point) -> Result<Vec<Vec<f64>>> + Sync;

struct Layout {
    inputs: &'static [&'static str],
    outputs: Vec<&'static str>,
    rows: Box<RowFn>,
}

fn mc_equilibrium(params: &Params) -> Result<Layout> {
    if params.cost.is_some() && params.r.is_some() {
        return Err(CliError::Usage("give either --r or --cost, not both".into()));
    }
    Ok(Layout {
        inputs: &["lambda", "k", "r", "cost"],
        outputs: vec!["lambda", "k", "r", "mechanism_cost", "equilibrium", "q1_is_sne"],
        rows: Box::new(|pt| {
            let c = cost_model(pt)?;
            let k = u32::try_from(pt.count("k")?).map_err(|_| CliError::Usage("--k is too large".into()))?;
            let r = pt.opt("cost").map_or(pt.get("r"), |total| total / (k as f64 + 1.0));
            let p = ConsensusParams::new(k, r)?;
            let eq = equilibrium_consensus(r, &c)?;
            Ok(vec![vec![
                pt.get("lambda"),
                k as f64,
                r,
                mechanism_cost_consensus(&p),
                eq.get(),
                flag(is_sne_consensus_q1(&p, &c)),
            ]])
        }),
    })
}

fn ma_optimal() -> Layout {
    Layout {
        inputs: &["lambda", "alpha_a", "r", "eps", "d"],
        outputs: vec!["lambda", "alpha_a", "r", "eps", "d", "q_star", "utility", "mechanism_cost"],
        rows: Box::new(|pt| {
            let c = cost_model(pt)?;
            let p = AccuracyParams::new(pt.get("alpha_a"), pt.get("r"), pt.get("eps"), pt.get("d"))?;
            let q = optimal_action_accuracy(&p, &c);
            Ok(vec![vec![
                pt.get("lambda"),
                p.alpha_a,
                p.r,
                p.eps,
                p.d,
                q.get(),
                utility_accuracy(q, &p, &c),
                mechanism_cost_accuracy(&p),
            ]])
        }),
    }
}

fn ma_min_cost() -> Layout {
    Layout {
        inputs: &["lambda", "eps", "d"],
        outputs: vec!["lambda", "eps", "d", "alpha_star", "r_star", "mechanism_cost"],
        rows: Box::new(|pt| {
            let rep = min_cost_accuracy(pt.get("d"), pt.get("eps"), &cost_model(pt)?)?;
            let p = rep.optimal_params;
            Ok(vec![vec![pt.get("lambda"), p.eps, p.d, p.alpha_a, p.r, rep.mechanism_cost]])
        }),
    }
}

const WORKING: [&str; 8] = ["lambda", "beta_w", "alpha_w", "r", "gamma", "delta", "eps", "d"];

fn mt_n_bound() -> Layout {
    Layout {
        inputs: &["lambda", "beta_w", "alpha_w", "r", "delta", "eps"],
        outputs: vec!["lambda", "beta_w", "alpha_w", "r", "delta", "eps", "bound", "n_bound"],
        rows: Box::new(|pt| {
            let c = cost_model(pt)?;
            let p = TrainingParams {
                beta_w: pt.get("beta_w"),
                alpha_w: pt.get("alpha_w"),
                r: pt.get("r"),
                delta: pt.get("delta"),
                eps: pt.get("eps"),
                ..Default::default()
            };
            let bound = training_tasks_bound(&p, &c)?;
            let n = min_training_tasks(&p, &c)?;
            Ok(vec![vec![pt.get("lambda"), p.beta_w, p.alpha_w, p.r, p.delta, p.eps, bound, n as f64]])
        }),
    }
}

fn working_values(pt: &Point) -> Vec<f64> {
    WORKING.iter().map(|n| pt.get(n)).collect()
}

fn mt_design() -> Layout {
    let mut outputs = WORKING.to_vec();
    outputs.extend([
        "n",
        "alpha_t",
        "q_hat_t",
        "cost_bound",
        "mechanism_cost",
        "stationary_exact",
        "stationary_lower_bound",
    ]);
    Layout {
        inputs: &["lambda", "beta_w", "alpha_w", "r", "gamma", "delta", "eps", "d", "grid"],
        outputs,
        rows: Box::new(|pt| {
            let c = cost_model(pt)?;
            let p = training_params(pt, &c)?;
            let qt = q_hat_t(pt, &p, &c)?;
            let s = stationary_working_prob(&p, qt)?;
            let mut row = working_values(pt);
            row.extend(training_columns(&p));
            row.extend([qt.get(), cost_upper_bound(&p)?, mechanism_cost_training(&p, qt)?, s.exact, s.lower_bound]);
            Ok(vec![row])
        }),
    }
}

fn mt_verify(curve: bool) -> Layout {
    let mut outputs = WORKING.to_vec();
    outputs.extend(["n", "alpha_t", "q_w", "q_t"]);
    if curve {
        outputs.extend(["deviation_q_w", "loss"]);
    } else {
        outputs.extend(["is_sne", "br_q_w", "br_q_t", "u_work", "u_train", "min_loss"]);
    }
    Layout {
        inputs: &["lambda", "beta_w", "alpha_w", "r", "alpha_t", "n", "gamma", "delta", "eps", "d", "grid", "q_w", "q_t"],
        outputs,
        rows: Box::new(move |pt| {
            let c = cost_model(pt)?;
            let p = training_params(pt, &c)?;
            let a = ActionPair::new(pt.quality("q_w")?, q_hat_t(pt, &p, &c)?);
            let rep = verify_sne(a, &p, &c, pt.count("grid")?)?;
            let mut prefix = working_values(pt);
            prefix.extend(training_columns(&p));
            prefix.extend([a.q_w.get(), a.q_t.get()]);
            if curve {
                Ok(rep
                    .utility_loss_curve
                    .iter()
                    .map(|&(q, loss)| {
                        let mut row = prefix.clone();
                        row.extend([q.get(), loss]);
                        row
                    })
                    .collect())
            } else {
                prefix.extend([
                    flag(rep.is_sne),
                    rep.best_response.q_w.get(),
                    rep.best_response.q_t.get(),
                    rep.utilities.u_work,
                    rep.utilities.u_train,
                    rep.min_loss(),
                ]);
                Ok(vec![prefix])
            }
        }),
    }
}

fn mt_stationary() -> Layout {
    let mut outputs = WORKING.to_vec();
    outputs.extend(["n", "alpha_t", "pi0", "q_t", "exact", "lower_bound"]);
    Layout {
        inputs: &["lambda", "beta_w", "alpha_w", "r", "alpha_t", "n", "gamma", "delta", "eps", "d", "grid", "pi0", "q_t"],
        outputs,
        rows: Box::new(|pt| {
            let c = cost_model(pt)?;
            let p = training_params(pt, &c)?;
            let qt = q_hat_t(pt, &p, &c)?;
            let s = stationary_working_prob(&p, qt)?;
            let mut row = working_values(pt);
            row.extend(training_columns(&p));
            row.extend([p.pi0_w, qt.get(), s.exact, s.lower_bound]);
            Ok(vec![row])
        }),
    }
}

fn simulate_layout(kind: MechanismKind) -> Layout {
    const RUN: [&str; 5] = ["pop", "horizon", "reps", "seed", "q_w"];
    let (inputs, params): (&'static [&'static str], Vec<&'static str>) = match kind {
        MechanismKind::Consensus => (&["lambda", "k", "r", "pop", "horizon", "reps", "seed", "q_w"], vec!["lambda", "k", "r"]),
        MechanismKind::Accuracy => (
            &["lambda", "alpha_a", "r", "eps", "d", "pop", "horizon", "reps", "seed", "q_w"],
            vec!["lambda", "alpha_a", "r", "eps", "d"],
        ),
        MechanismKind::Training => (
            &[
                "lambda", "beta_w", "alpha_w", "r", "alpha_t", "n", "gamma", "delta", "eps", "d", "grid", "pi0", "q_w",
                "q_t", "pop", "horizon", "reps", "seed",
            ],
            WORKING.to_vec(),
        ),
    };
    let training = kind == MechanismKind::Training;
    let mut outputs = params.clone();
    if training {
        outputs.extend(["n", "alpha_t", "pi0", "q_t"]);
    }
    outputs.extend(RUN);
    outputs.extend(["accept_rate", "accept_se"]);
    if training {
        outputs.extend(["pass_rate", "pass_se"]);
    }
    outputs.extend(["tail_occupancy", "tail_occupancy_se", "cost_per_task", "cost_per_task_se", "mean_utility", "mean_utility_se"]);
    if training {
        outputs.extend(["discounted_utility", "discounted_utility_se"]);
    }
    Layout {
        inputs,
        outputs,
        rows: Box::new(move |pt| {
            let c = cost_model(pt)?;
            let q_w = pt.quality("q_w")?;
            let (mechanism, policy, extra) = match kind {
                MechanismKind::Consensus => {
                    let k = u32::try_from(pt.count("k")?).map_err(|_| CliError::Usage("--k is too large".into()))?;
                    (Mechanism::Consensus(ConsensusParams::new(k, pt.get("r"))?), ActionPair::new(q_w, Quality::ZERO), vec![])
                }
                MechanismKind::Accuracy => {
                    let p = AccuracyParams::new(pt.get("alpha_a"), pt.get("r"), pt.get("eps"), pt.get("d"))?;
                    (Mechanism::Accuracy(p), ActionPair::new(q_w, Quality::ZERO), vec![])
                }
                MechanismKind::Training => {
                    let p = training_params(pt, &c)?;
                    let qt = q_hat_t(pt, &p, &c)?;
                    let mut extra = training_columns(&p);
                    extra.extend([p.pi0_w, qt.get()]);
                    (Mechanism::Training(p), ActionPair::new(q_w, qt), extra)
                }
            };
            let cfg = SimConfig {
                mechanism,
                policy,
                population: pt.count("pop")?,
                horizon: pt.count("horizon")?,
                seed: pt.seed,
                replications: pt.count("reps")?,
            };
            let res = if cfg.replications > 1 { replicate(&cfg, &c)? } else { simulate(&cfg, &c)? };
            let mut row: Vec<f64> = params.iter().map(|n| pt.get(n)).collect();
            row.extend(extra);
            row.extend([cfg.population as f64, cfg.horizon as f64, cfg.replications as f64, cfg.seed as f64, q_w.get()]);
            let est = |e: Estimate| [e.mean, e.se];
            row.extend(est(res.empirical_work_accept_rate));
            if training {
                // No training rounds at all means nobody was ever demoted.
                row.extend(res.empirical_train_pass_rate.map_or([1.0, 0.0], est));
            }
            row.extend(est(res.tail_occupancy));
            row.extend(est(res.cost_per_task));
            row.extend(est(res.mean_worker_utility));
            if training {
                let du = res
                    .discounted_utility_estimate
                    .ok_or_else(|| CliError::Domain("no worker lifetime finished; raise --horizon or --pop".into()))?;
                row.extend(est(du));
            }
            Ok(vec![row])
        }),
    }
}

/// Runs one command and writes its CSV to `--out` or `stdout`.
pub fn run<W: Write>(cli: Cli, stdout: W) -> Result<()> {
    let (params, layout) = match cli.command {
        Command::McEquilibrium(p) => {
            let s = mc_equilibrium(&p)?;
            (p, s)
        }
        Command::MaOptimal(p) => (p, ma_optimal()),
        Command::MaMinCost(p) => (p, ma_min_cost()),
        Command::MtDesign(p) => (p, mt_design()),
        Command::MtVerify(p) => {
            let s = mt_verify(p.curve);
            (p, s)
        }
        Command::MtNBound(p) => (p, mt_n_bound()),
        Command::MtStationary(p) => (p, mt_stationary()),
        Command::Simulate(p) => {
            let s = simulate_layout(p.mechanism.unwrap_or(MechanismKind::Training));
            (p, s)
        }
    };
    if params.curve && layout.outputs.last() != Some(&"loss") {
        return Err(CliError::Usage("--curve is only used by mt-verify".into()));
    }
    if params.mechanism.is_some() && !layout.outputs.contains(&"accept_rate") {
        return Err(CliError::Usage("--mechanism is only used by simulate".into()));
    }
    let points = grid(&params, layout.inputs)?;
    let per_point: Vec<Result<Vec<Vec<f64>>>> = points.par_iter().map(|pt| (layout.rows)(pt)).collect();
    let mut rows = Vec::new();
    for r in per_point {
        rows.extend(r?);
    }
    let table = Table { header: layout.outputs.iter().map(|s| s.to_string()).collect(), rows };
    match params.out {
        Some(path) => write_csv(File::create(path)?, &table),
        None => write_csv(stdout, &table),
    }
}
