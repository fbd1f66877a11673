//! Seeded comparison runs and the hyperparameter sweep.

use std::io::Write;
use std::path::Path;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::design::{self, EvalSet, ExplorationReport, TrueSystem};
use crate::dynamics::{self, DynamicsModel, Trajectory};
use crate::fisher::ScoreSample;
use crate::objectives::{self, ObjectiveKind};
use crate::{Error, Result};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "QOED_THREADS";

/// One `(method, seed)` outcome, taken from the final round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub method: ObjectiveKind,
    pub seed: u64,
    pub round: usize,
    pub param_rmse_x100: f64,
    pub dyn_rmse_x100: f64,
    pub bonus: f64,
    pub eta: Option<f64>,
    pub beta: Option<f64>,
    pub rho: Option<f64>,
}

/// Mean and sample standard deviation over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: ObjectiveKind,
    pub seeds: usize,
    pub param_rmse_x100_mean: f64,
    pub param_rmse_x100_std: f64,
    pub dyn_rmse_x100_mean: f64,
    pub dyn_rmse_x100_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    /// Sorted by `(method, seed)`.
    pub rows: Vec<ComparisonRow>,
    pub summary: Vec<MethodSummary>,
}

pub const CSV_HEADER: [&str; 9] = [
    "method",
    "seed",
    "round",
    "param_rmse_x100",
    "dyn_rmse_x100",
    "bonus",
    "eta",
    "beta",
    "rho",
];

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl ComparisonTable {
    pub fn from_rows(mut rows: Vec<ComparisonRow>) -> Self {
        rows.sort_by(|a, b| a.method.cmp(&b.method).then(a.seed.cmp(&b.seed)));
        let mut methods: Vec<ObjectiveKind> = rows.iter().map(|r| r.method).collect();
        methods.dedup();
        let summary = methods
            .into_iter()
            .map(|method| {
                let sel: Vec<&ComparisonRow> = rows.iter().filter(|r| r.method == method).collect();
                let p: Vec<f64> = sel.iter().map(|r| r.param_rmse_x100).collect();
                let d: Vec<f64> = sel.iter().map(|r| r.dyn_rmse_x100).collect();
                let (pm, ps) = design::sample_mean_std(&p);
                let (dm, ds) = design::sample_mean_std(&d);
                MethodSummary {
                    method,
                    seeds: sel.len(),
                    param_rmse_x100_mean: pm,
                    param_rmse_x100_std: ps,
                    dyn_rmse_x100_mean: dm,
                    dyn_rmse_x100_std: ds,
                }
            })
            .collect();
        Self { rows, summary }
    }

    pub fn summary_for(&self, method: ObjectiveKind) -> Option<&MethodSummary> {
        self.summary.iter().find(|s| s.method == method)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record([
                r.method.to_string(),
                r.seed.to_string(),
                r.round.to_string(),
                r.param_rmse_x100.to_string(),
                r.dyn_rmse_x100.to_string(),
                r.bonus.to_string(),
                opt(r.eta),
                opt(r.beta),
                opt(r.rho),
            ])
            .map_err(csv_err)?;
        }
        into_string(w)
    }

    /// Plain-text mean ± std per method.
    pub fn render(&self) -> String {
        let mut s = format!("{:<10} {:>6} {:>22} {:>22}\n", "method", "seeds", "param RMSE (x100)", "dyn RMSE (x100)");
        for m in &self.summary {
            s += &format!(
                "{:<10} {:>6} {:>13.3} ± {:<6.3} {:>13.3} ± {:<6.3}\n",
                m.method.to_string(),
                m.seeds,
                m.param_rmse_x100_mean,
                m.param_rmse_x100_std,
                m.dyn_rmse_x100_mean,
                m.dyn_rmse_x100_std
            );
        }
        s
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn into_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

/// Runs `f` on a pool capped by `QOED_THREADS` when it is set.
pub fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?;
        if n == 0 {
            return Err(Error::Config(format!("{THREADS_ENV} must be ≥ 1")));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::Io(e.to_string()))?;
    Ok(pool.install(f))
}

/// Exploration for one `(method, seed)`; every method sees the same seed
/// stream, so runs are paired.
pub fn run_one(cfg: &ExperimentConfig, method: ObjectiveKind, seed: u64) -> Result<ExplorationReport> {
    let model = cfg.build_model()?;
    let prior = cfg.prior(&model)?;
    let eval = eval_set(cfg, &model);
    let truth = TrueSystem {
        model: &model,
        phi: cfg.true_phi(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    design::run_exploration(&truth, &model, &prior, method, &cfg.exploration, &cfg.estimation, &eval, &mut rng)
}

pub fn eval_set<M: DynamicsModel + ?Sized>(cfg: &ExperimentConfig, model: &M) -> EvalSet {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.eval_seed);
    EvalSet::random(model, cfg.exploration.eval_sequences, cfg.exploration.horizon_steps(), &mut rng)
}

fn row_of(method: ObjectiveKind, seed: u64, report: &ExplorationReport) -> ComparisonRow {
    let last = report.last();
    ComparisonRow {
        method,
        seed,
        round: last.round,
        param_rmse_x100: last.param_rmse_x100,
        dyn_rmse_x100: last.rmse_x100,
        bonus: last.bonus,
        eta: last.eta,
        beta: last.beta,
        rho: last.rho,
    }
}

/// Output of [`cmd_bench`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchOutput {
    pub table: ComparisonTable,
    /// Per-run reports, in the table's row order.
    pub reports: Vec<ExplorationReport>,
}

/// Every `(method, seed)` exploration run, in parallel over jobs.
pub fn cmd_bench(cfg: &ExperimentConfig) -> Result<BenchOutput> {
    cfg.validate()?;
    let jobs: Vec<(ObjectiveKind, u64)> = cfg
        .methods
        .iter()
        .flat_map(|&m| cfg.seeds.iter().map(move |&s| (m, s)))
        .collect();
    let results: Vec<(ObjectiveKind, u64, ExplorationReport)> = with_pool(|| {
        jobs.par_iter()
            .map(|&(m, s)| run_one(cfg, m, s).map(|r| (m, s, r)))
            .collect::<Result<Vec<_>>>()
    })??;
    let mut results = results;
    results.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
    let rows = results.iter().map(|(m, s, r)| row_of(*m, *s, r)).collect();
    let out = BenchOutput {
        table: ComparisonTable::from_rows(rows),
        reports: results.into_iter().map(|(_, _, r)| r).collect(),
    };
    if let Some(dir) = &cfg.out {
        write_bench(&out, dir)?;
    }
    Ok(out)
}

/// Writes `bench.csv` and `bench.json` into `dir`.
pub fn write_bench(out: &BenchOutput, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("bench.csv"), out.table.to_csv()?)?;
    let json = serde_json::to_string_pretty(out).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(dir.join("bench.json"), json)?;
    Ok(())
}

/// The robustness grid: δ_eig ∈ {0.05, …, 0.5}, α_eig ∈ {0.005, …, 0.05},
/// δ_cos ∈ {0.90, …, 0.99}.
pub fn sweep_grid() -> Vec<(f64, f64, f64)> {
    let mut cells = Vec::with_capacity(1000);
    for i in 1..=10 {
        for j in 1..=10 {
            for l in 0..10 {
                cells.push((0.05 * i as f64, 0.005 * j as f64, 0.90 + 0.01 * l as f64));
            }
        }
    }
    cells
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub cell: usize,
    pub delta_eig: f64,
    pub alpha_eig: f64,
    pub delta_cos: f64,
    pub method: ObjectiveKind,
    /// Number of seeds averaged into this cell.
    pub seeds: usize,
    pub param_rmse_x100: f64,
    pub dyn_rmse_x100: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    /// Sorted by `(method, cell)`.
    pub rows: Vec<SweepRow>,
    /// Mean and std of the dyn RMSE across cells per method.
    pub summary: Vec<(ObjectiveKind, f64, f64)>,
}

impl SweepTable {
    pub fn dyn_spread(&self, method: ObjectiveKind) -> Option<(f64, f64)> {
        self.summary.iter().find(|s| s.0 == method).map(|s| (s.1, s.2))
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "cell",
            "delta_eig",
            "alpha_eig",
            "delta_cos",
            "method",
            "seeds",
            "param_rmse_x100",
            "dyn_rmse_x100",
        ])
        .map_err(csv_err)?;
        for r in &self.rows {
            w.write_record([
                r.cell.to_string(),
                format!("{:.3}", r.delta_eig),
                format!("{:.3}", r.alpha_eig),
                format!("{:.2}", r.delta_cos),
                r.method.to_string(),
                r.seeds.to_string(),
                r.param_rmse_x100.to_string(),
                r.dyn_rmse_x100.to_string(),
            ])
            .map_err(csv_err)?;
        }
        into_string(w)
    }
}

/// Runs QOED and Agnostic on every grid cell. Every cell runs the same
/// configured seeds and reports their mean, so the spread across cells
/// reflects the thresholds alone. `cells` restricts the grid (all cells when
/// `None`).
pub fn cmd_sweep(cfg: &ExperimentConfig, cells: Option<&[usize]>) -> Result<SweepTable> {
    cfg.validate()?;
    let grid = sweep_grid();
    let picked: Vec<usize> = match cells {
        Some(c) => {
            if let Some(&bad) = c.iter().find(|&&i| i >= grid.len()) {
                return Err(Error::InvalidArgument(format!("sweep cell {bad} out of range")));
            }
            c.to_vec()
        }
        None => (0..grid.len()).collect(),
    };
    let methods = [ObjectiveKind::Agnostic, ObjectiveKind::Qoed];
    let jobs: Vec<(ObjectiveKind, usize, u64)> = methods
        .iter()
        .flat_map(|&m| picked.iter().flat_map(move |&c| cfg.seeds.iter().map(move |&s| (m, c, s))))
        .collect();
    let runs = with_pool(|| {
        jobs.par_iter()
            .map(|&(method, cell, seed)| {
                let (de, ae, dc) = grid[cell];
                let mut c = cfg.clone();
                c.exploration.bonus.delta_eig = de;
                c.exploration.bonus.alpha_eig = ae;
                c.exploration.bonus.delta_cos = dc;
                let r = run_one(&c, method, seed)?;
                let last = r.last();
                Ok((last.param_rmse_x100, last.rmse_x100))
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let n = cfg.seeds.len();
    let mut rows: Vec<SweepRow> = jobs
        .chunks(n)
        .zip(runs.chunks(n))
        .map(|(job, res)| {
            let (method, cell, _) = job[0];
            let (de, ae, dc) = grid[cell];
            SweepRow {
                cell,
                delta_eig: de,
                alpha_eig: ae,
                delta_cos: dc,
                method,
                seeds: n,
                param_rmse_x100: res.iter().map(|r| r.0).sum::<f64>() / n as f64,
                dyn_rmse_x100: res.iter().map(|r| r.1).sum::<f64>() / n as f64,
            }
        })
        .collect();
    rows.sort_by(|a, b| a.method.cmp(&b.method).then(a.cell.cmp(&b.cell)));
    let summary = methods
        .iter()
        .map(|&m| {
            let d: Vec<f64> = rows.iter().filter(|r| r.method == m).map(|r| r.dyn_rmse_x100).collect();
            let (mean, std) = design::sample_mean_std(&d);
            (m, mean, std)
        })
        .collect();
    let table = SweepTable { rows, summary };
    if let Some(dir) = &cfg.out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("sweep.csv"), table.to_csv()?)?;
    }
    Ok(table)
}

/// Printed by the `bonus` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BonusReport {
    pub kind: ObjectiveKind,
    pub bonus: f64,
    /// Selected identifiable coordinates.
    pub k: Vec<usize>,
    /// Indices of the observable eigenvectors.
    pub o: Vec<usize>,
    pub eigenvalues: Vec<f64>,
    pub samples: usize,
}

#[derive(Deserialize)]
struct RawTrajectory {
    states: Vec<Vec<f64>>,
    actions: Vec<Vec<f64>>,
}

/// Score samples from a file: either a JSON trajectory (`{"states": …,
/// "actions": …}`, scored per transition at `phi`) or plain text with one
/// score vector per line.
pub fn load_scores<M: DynamicsModel + ?Sized>(path: &Path, model: &M, phi: &DVector<f64>) -> Result<Vec<ScoreSample>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    if text.trim_start().starts_with('{') {
        let raw: RawTrajectory =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let vecs = |rows: Vec<Vec<f64>>| rows.into_iter().map(DVector::from_vec).collect();
        let traj = Trajectory::new(vecs(raw.states), vecs(raw.actions))?;
        return traj
            .transitions()
            .map(|(s, a, s_next)| dynamics::step_score(model, s, a, phi, s_next))
            .collect();
    }
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let v = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Config(format!("{} line {}: {e}", path.display(), i + 1)))?;
        out.push(ScoreSample::from_slice(&v)?);
    }
    Ok(out)
}

/// Bonus of a score set. Without an input file the scores come from
/// `bonus_samples` trajectories of uniformly random actions at the true
/// parameters, seeded by the first seed.
pub fn cmd_bonus(cfg: &ExperimentConfig, kind: ObjectiveKind, input: Option<&Path>) -> Result<BonusReport> {
    cfg.validate()?;
    let model = cfg.build_model()?;
    let phi = cfg.true_phi();
    let scores = match input {
        Some(p) => load_scores(p, &model, &phi)?,
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seeds[0]);
            let eval = EvalSet::random(&model, cfg.exploration.bonus_samples, cfg.exploration.horizon_steps(), &mut rng);
            eval.sequences
                .iter()
                .map(|(s0, actions)| {
                    let traj = dynamics::simulate_trajectory(&model, &phi, s0, actions, &mut rng)?;
                    dynamics::trajectory_score(&model, &traj, &phi)
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    let n = scores.len();
    let fim = crate::fisher::estimate_fim(&scores)?;
    let out = objectives::bonus_from_fim(fim, kind, &cfg.exploration.bonus)?;
    Ok(BonusReport {
        kind,
        bonus: out.bonus,
        k: out.selected(),
        o: out.split.observable.clone(),
        eigenvalues: out.decomp.eigenvalues.iter().cloned().collect(),
        samples: n,
    })
}

/// Writes `text` to `path`, or to stdout when `path` is `None`.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}
