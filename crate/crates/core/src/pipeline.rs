//! Offline (generate, train) and online (benchmark) pipelines and their
//! on-disk artifacts.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::bnb::{solve_milp, MilpOutcome, MilpStatus, SolveConfig};
use crate::cuts::{build_cutset, contains, estimate_m, ppo, tighten, CutSet};
use crate::decimal;
use crate::error::{Error, Result};
use crate::net::{hamming_loss, train, Ae4bvParams, BinaryDataset, NetConfig, Sample};
use crate::stn::{
    build_instance, nominal_theta, perturb_theta, BinaryIndex, BuildOptions, PerturbSpec, StnData,
};

pub const MANIFEST: &str = "manifest.json";
pub const DATASET: &str = "dataset.json";
pub const TEST_DATASET: &str = "test_dataset.json";
pub const WEIGHTS: &str = "weights.json";
pub const CUTSET: &str = "cutset.json";
pub const METRICS: &str = "metrics.csv";
pub const EVAL: &str = "eval.csv";
pub const BENCH: &str = "bench.csv";
pub const SUMMARY: &str = "summary.md";
pub const TRACES: &str = "traces";

const TOY_LABEL: &str = "toy";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub events: usize,
    #[serde(with = "decimal::real")]
    pub horizon: f64,
    #[serde(with = "decimal::real")]
    pub epsilon: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
    pub literal_a8: bool,
    pub solve: SolveConfig,
    /// `input_dim` is taken from the data.
    pub net: NetConfig,
    /// Fraction of the training set held out for evaluation.
    #[serde(with = "decimal::real")]
    pub holdout: f64,
    /// Multiplier on the estimated big-M.
    #[serde(with = "decimal::real")]
    pub safety: f64,
    /// Generation aborts once more instances than this fail to solve.
    pub max_failures: usize,
    pub jobs: usize,
    pub traces: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            events: 3,
            horizon: 8.0,
            epsilon: 0.05,
            n_train: 200,
            n_test: 50,
            seed: 0,
            literal_a8: false,
            solve: SolveConfig {
                time_limit: 600.0,
                ..SolveConfig::default()
            },
            net: NetConfig::new(0),
            holdout: 0.2,
            safety: 1.0,
            max_failures: 5,
            jobs: 1,
            traces: true,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.events == 0 {
            return bad("events must be positive");
        }
        if !(self.horizon > 0.0) {
            return bad("horizon must be positive");
        }
        if !(0.0..1.0).contains(&self.epsilon) {
            return bad("epsilon must lie in [0, 1)");
        }
        if !(0.0..1.0).contains(&self.holdout) {
            return bad("holdout must lie in [0, 1)");
        }
        if !(self.safety >= 1.0) {
            return bad("safety must be at least 1");
        }
        if self.jobs == 0 {
            return bad("jobs must be positive");
        }
        self.solve.validate()
    }

    pub fn stn(&self) -> StnData {
        StnData::benchmark(self.events, self.horizon)
    }

    fn build_options(&self) -> BuildOptions {
        BuildOptions {
            literal_a8: self.literal_a8,
        }
    }

    fn label(&self) -> String {
        format!("{}", self.epsilon)
    }
}

/// Perturbation seed of instance `k` in a split.
pub fn instance_seed(master: u64, split: Split, k: usize) -> u64 {
    let mut r = ChaCha8Rng::seed_from_u64(master);
    r.set_stream(split as u64);
    r.set_word_pos(2 * k as u128);
    r.next_u64()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Split {
    Train = 0,
    Test = 1,
}

impl Split {
    fn prefix(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub id: String,
    pub seed: u64,
    pub status: MilpStatus,
    #[serde(with = "decimal::real")]
    pub objective: f64,
    pub nodes: u64,
    pub iterations: u64,
}

/// A binary dataset with the instances it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetFile {
    /// Perturbation level as text, or `toy`.
    pub label: String,
    pub split: Split,
    pub layout: Option<BinaryIndex>,
    /// Every attempted instance, including excluded ones.
    pub instances: Vec<InstanceRecord>,
    pub dataset: BinaryDataset,
}

impl DatasetFile {
    /// The three-vertex cube.
    pub fn toy() -> Self {
        DatasetFile {
            label: TOY_LABEL.into(),
            split: Split::Train,
            layout: None,
            instances: Vec::new(),
            dataset: BinaryDataset::from_bits(vec![vec![0, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]),
        }
    }

    pub fn is_toy(&self) -> bool {
        self.label == TOY_LABEL
    }

    fn check(&self) -> Result<()> {
        if self.dataset.is_empty() {
            return Ok(());
        }
        let p = self.dataset.dim()?;
        if let Some(layout) = &self.layout {
            if layout.len() != p {
                return Err(Error::DimensionMismatch {
                    what: "dataset layout",
                    expected: layout.len(),
                    got: p,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightsFile {
    pub config: NetConfig,
    pub params: Ae4bvParams,
    #[serde(with = "decimal::real_vec")]
    pub history: Vec<f64>,
    pub train_ids: Vec<usize>,
    pub holdout_ids: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stamp {
    pub step: String,
    #[serde(with = "decimal::real")]
    pub unix_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: PipelineConfig,
    pub master_seed: u64,
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
    /// Artifact name to path relative to the run directory.
    pub artifacts: BTreeMap<String, String>,
    pub stamps: Vec<Stamp>,
}

impl RunManifest {
    fn new(cfg: &PipelineConfig) -> Self {
        RunManifest {
            config: cfg.clone(),
            master_seed: cfg.seed,
            train_ids: Vec::new(),
            test_ids: Vec::new(),
            artifacts: BTreeMap::new(),
            stamps: Vec::new(),
        }
    }

    fn record(&mut self, step: &str, files: &[&str]) {
        for f in files {
            self.artifacts.insert((*f).to_string(), (*f).to_string());
        }
        let now = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0.0, |d| d.as_secs_f64());
        self.stamps.push(Stamp {
            step: step.to_string(),
            unix_seconds: now,
        });
    }

    /// Every listed artifact exists and parses as its kind.
    pub fn verify(&self, dir: &Path) -> Result<()> {
        for name in self.artifacts.values() {
            let path = dir.join(name);
            match name.as_str() {
                DATASET | TEST_DATASET => drop(read_json::<DatasetFile>(&path)?),
                WEIGHTS => drop(read_json::<WeightsFile>(&path)?),
                CUTSET => read_json::<CutSet>(&path)?.check()?,
                METRICS => drop(read_csv::<MetricsRow>(&path)?),
                EVAL => drop(read_csv::<EvalRow>(&path)?),
                BENCH => {
                    for r in read_csv::<BenchRecord>(&path)? {
                        r.check()?;
                    }
                }
                _ => {
                    fs::metadata(&path).map_err(|e| Error::io(&path, e))?;
                }
            }
        }
        Ok(())
    }
}

fn load_manifest(dir: &Path, cfg: &PipelineConfig) -> Result<RunManifest> {
    let path = dir.join(MANIFEST);
    if path.exists() {
        let mut m: RunManifest = read_json(&path)?;
        m.config = cfg.clone();
        m.master_seed = cfg.seed;
        Ok(m)
    } else {
        Ok(RunManifest::new(cfg))
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::Format(format!("{}: {e}", path.display()))
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    r.deserialize()
        .map(|row| row.map_err(|e| csv_error(path, e)))
        .collect()
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Apply `f` to every item on up to `jobs` threads, keeping input order.
fn parallel_map<T: Sync, R: Send>(items: &[T], jobs: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    if jobs <= 1 || items.len() <= 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..jobs.min(items.len()) {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                if k >= items.len() {
                    break;
                }
                let r = f(&items[k]);
                slots.lock().expect("no panics while holding the lock")[k] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("threads joined")
        .into_iter()
        .map(|r| r.expect("every slot filled"))
        .collect()
}

/// One perturbed instance of the configured scheduling problem.
pub fn instance(
    cfg: &PipelineConfig,
    split: Split,
    k: usize,
) -> Result<(String, u64, crate::MilpModel, BinaryIndex)> {
    let data = cfg.stn();
    let seed = instance_seed(cfg.seed, split, k);
    let theta = perturb_theta(
        &nominal_theta(&data),
        &PerturbSpec {
            level: cfg.epsilon,
            seed,
        },
    );
    let (model, index) = build_instance(&data, &theta, cfg.build_options())?;
    Ok((format!("{}-{k}", split.prefix()), seed, model, index))
}

fn generate_split(cfg: &PipelineConfig, split: Split, n: usize) -> Result<DatasetFile> {
    let ks: Vec<usize> = (0..n).collect();
    let solved = parallel_map(&ks, cfg.jobs, |&k| -> Result<_> {
        let (id, seed, model, index) = instance(cfg, split, k)?;
        let out = solve_milp(&model, &cfg.solve)?;
        Ok((id, seed, index, out))
    });
    let mut layout: Option<BinaryIndex> = None;
    let mut instances = Vec::with_capacity(n);
    let mut samples = Vec::new();
    let mut failures = 0;
    for r in solved {
        let (id, seed, index, out) = r?;
        match &layout {
            None => layout = Some(index.clone()),
            Some(l) if !l.same_layout(&index) => {
                return Err(Error::LayoutMismatch(format!(
                    "{id} has a different binary layout"
                )));
            }
            _ => {}
        }
        instances.push(InstanceRecord {
            id: id.clone(),
            seed,
            status: out.status,
            objective: out.objective,
            nodes: out.nodes,
            iterations: out.iterations,
        });
        if out.status == MilpStatus::Optimal {
            samples.push(Sample {
                bits: index.extract(&out.point),
                theta_ref: Some(id),
                objective: Some(out.objective),
            });
        } else {
            failures += 1;
            log::warn!("{id}: {:?} after {} nodes, excluded", out.status, out.nodes);
            if failures > cfg.max_failures {
                return Err(Error::SolverFailure(format!(
                    "{failures} instances failed to solve to optimality"
                )));
            }
        }
    }
    Ok(DatasetFile {
        label: cfg.label(),
        split,
        layout,
        instances,
        dataset: BinaryDataset { samples },
    })
}

/// Solve `n_train` training and `n_test` test instances and store their
/// optimal binary vectors.
pub fn cmd_generate(cfg: &PipelineConfig, out: &Path) -> Result<(DatasetFile, DatasetFile)> {
    cfg.validate()?;
    ensure_dir(out)?;
    let train_file = generate_split(cfg, Split::Train, cfg.n_train)?;
    let test_file = generate_split(cfg, Split::Test, cfg.n_test)?;
    write_json(&out.join(DATASET), &train_file)?;
    write_json(&out.join(TEST_DATASET), &test_file)?;
    let mut m = load_manifest(out, cfg)?;
    m.train_ids = train_file.instances.iter().map(|r| r.id.clone()).collect();
    m.test_ids = test_file.instances.iter().map(|r| r.id.clone()).collect();
    m.record("generate", &[DATASET, TEST_DATASET]);
    write_json(&out.join(MANIFEST), &m)?;
    Ok((train_file, test_file))
}

/// Write the toy cube dataset.
pub fn cmd_generate_toy(cfg: &PipelineConfig, out: &Path) -> Result<DatasetFile> {
    ensure_dir(out)?;
    let file = DatasetFile::toy();
    write_json(&out.join(DATASET), &file)?;
    let mut m = load_manifest(out, cfg)?;
    m.record("generate", &[DATASET]);
    write_json(&out.join(MANIFEST), &m)?;
    Ok(file)
}

/// Learning metrics for one split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub epsilon: String,
    pub split: String,
    pub samples: usize,
    #[serde(rename = "HL_percent", with = "decimal::real")]
    pub hl_percent: f64,
    #[serde(rename = "PPO_percent", with = "decimal::real")]
    pub ppo_percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub epsilon: String,
    #[serde(rename = "HL_percent", with = "decimal::real")]
    pub hl_percent: f64,
    #[serde(rename = "PPO_percent", with = "decimal::real")]
    pub ppo_percent: f64,
}

pub struct TrainOutput {
    pub weights: WeightsFile,
    pub cutset: CutSet,
    pub metrics: Vec<MetricsRow>,
}

fn subset(data: &BinaryDataset, ids: &[usize]) -> BinaryDataset {
    BinaryDataset {
        samples: ids.iter().map(|&k| data.samples[k].clone()).collect(),
    }
}

/// Seeded split into (train, holdout) positions.
pub fn holdout_split(n: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let held = ((n as f64) * fraction).round() as usize;
    let held = held.min(n.saturating_sub(1));
    let mut holdout = ids.split_off(n - held);
    ids.sort_unstable();
    holdout.sort_unstable();
    (ids, holdout)
}

/// Train the autoencoder on a held-in share of the dataset, derive the cut
/// set, and score both shares.
pub fn cmd_train(cfg: &PipelineConfig, dataset: &Path, out: &Path) -> Result<TrainOutput> {
    let file: DatasetFile = read_json(dataset)?;
    file.check()?;
    let p = file.dataset.dim()?;
    let (net, holdout) = if file.is_toy() {
        (NetConfig::toy(), 0.0)
    } else {
        (
            NetConfig {
                input_dim: p,
                ..cfg.net.clone()
            },
            cfg.holdout,
        )
    };
    net.validate()?;
    let (train_ids, holdout_ids) = holdout_split(file.dataset.len(), holdout, cfg.seed);
    let train_set = subset(&file.dataset, &train_ids);
    let held_set = subset(&file.dataset, &holdout_ids);
    let (params, history) = train(&train_set, &net)?;
    let big_m = estimate_m(&params, &train_set, cfg.safety)?;
    let cutset = build_cutset(&params, big_m)?;

    let mut metrics = Vec::new();
    for (name, set) in [("train", &train_set), ("holdout", &held_set)] {
        if set.is_empty() {
            continue;
        }
        metrics.push(MetricsRow {
            n: file.dataset.len(),
            epsilon: file.label.clone(),
            split: name.into(),
            samples: set.len(),
            hl_percent: 100.0 * hamming_loss(&params, set)?,
            ppo_percent: 100.0 * ppo(&cutset, set)?,
        });
    }
    let weights = WeightsFile {
        config: net,
        params,
        history,
        train_ids,
        holdout_ids,
    };
    ensure_dir(out)?;
    write_json(&out.join(WEIGHTS), &weights)?;
    write_json(&out.join(CUTSET), &cutset)?;
    write_csv(&out.join(METRICS), &metrics)?;
    let mut m = load_manifest(out, cfg)?;
    m.record("train", &[WEIGHTS, CUTSET, METRICS]);
    write_json(&out.join(MANIFEST), &m)?;
    Ok(TrainOutput {
        weights,
        cutset,
        metrics,
    })
}

/// HL and PPO of stored weights on a dataset. Without a cut set file the
/// big-M is re-estimated from the dataset itself.
pub fn cmd_evaluate(weights: &Path, cutset: Option<&Path>, dataset: &Path, out: &Path) -> Result<EvalRow> {
    let w: WeightsFile = read_json(weights)?;
    let file: DatasetFile = read_json(dataset)?;
    file.check()?;
    let p = file.dataset.dim()?;
    if p != w.params.input_dim() {
        return Err(Error::DimensionMismatch {
            what: "dataset width vs weights",
            expected: w.params.input_dim(),
            got: p,
        });
    }
    let cs = match cutset {
        Some(path) => read_json::<CutSet>(path)?,
        None => build_cutset(&w.params, estimate_m(&w.params, &file.dataset, 1.0)?)?,
    };
    let row = EvalRow {
        n: file.dataset.len(),
        epsilon: file.label.clone(),
        hl_percent: 100.0 * hamming_loss(&w.params, &file.dataset)?,
        ppo_percent: 100.0 * ppo(&cs, &file.dataset)?,
    };
    ensure_dir(out)?;
    write_csv(&out.join(EVAL), std::slice::from_ref(&row))?;
    Ok(row)
}

/// Primal against tightened solve of one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub id: String,
    pub primal_status: MilpStatus,
    #[serde(with = "decimal::real")]
    pub primal_objective: f64,
    pub primal_nodes: u64,
    #[serde(with = "decimal::real")]
    pub primal_time: f64,
    #[serde(with = "decimal::real")]
    pub primal_gap: f64,
    pub tight_status: MilpStatus,
    #[serde(with = "decimal::real")]
    pub tight_objective: f64,
    pub tight_nodes: u64,
    #[serde(with = "decimal::real")]
    pub tight_time: f64,
    #[serde(with = "decimal::real")]
    pub tight_gap: f64,
    /// Primal optimum lies inside the cut polytope.
    pub contained: bool,
    /// `1 - t_tight / t_primal`.
    #[serde(with = "decimal::real")]
    pub speedup: f64,
    /// `(primal - tightened) / |primal|`; NaN when either side has no solution.
    #[serde(with = "decimal::real")]
    pub opt_gap: f64,
}

impl BenchRecord {
    pub fn check(&self) -> Result<()> {
        if self.opt_gap < -1e-9 {
            return Err(Error::Format(format!(
                "{}: tightened optimum beats primal",
                self.id
            )));
        }
        if self.contained && !(self.opt_gap.abs() <= 1e-6) {
            return Err(Error::Format(format!("{}: contained optimum was lost", self.id)));
        }
        Ok(())
    }

    /// All fields except wall-clock times.
    pub fn without_times(&self) -> BenchRecord {
        BenchRecord {
            primal_time: 0.0,
            tight_time: 0.0,
            speedup: 0.0,
            ..self.clone()
        }
    }
}

fn write_trace(path: &Path, primal: &MilpOutcome, tight: &MilpOutcome) -> Result<()> {
    #[derive(Serialize)]
    struct Row {
        model: &'static str,
        time: f64,
        lower: f64,
        upper: f64,
    }
    let rows: Vec<Row> = [("primal", primal), ("tightened", tight)]
        .into_iter()
        .flat_map(|(model, out)| {
            out.bound_trace.iter().map(move |b| Row {
                model,
                time: b.time,
                lower: b.lower,
                upper: b.upper,
            })
        })
        .collect();
    write_csv(path, &rows)
}

/// Solve every test instance with and without the cuts.
pub fn cmd_benchmark(
    cfg: &PipelineConfig,
    cutset: &Path,
    test_dataset: &Path,
    out: &Path,
) -> Result<Vec<BenchRecord>> {
    cfg.validate()?;
    let cs: CutSet = read_json(cutset)?;
    cs.check()?;
    let file: DatasetFile = read_json(test_dataset)?;
    let Some(layout) = &file.layout else {
        return Err(Error::LayoutMismatch("test dataset has no binary layout".into()));
    };
    if layout.len() != cs.p {
        return Err(Error::LayoutMismatch(format!(
            "cutset has p = {} but instances have {} binaries",
            cs.p,
            layout.len()
        )));
    }
    // build everything first so a layout problem aborts before any solve
    let mut jobs = Vec::new();
    for (k, rec) in file.instances.iter().enumerate() {
        let (id, seed, model, index) = instance(cfg, file.split, k)?;
        if id != rec.id || seed != rec.seed {
            return Err(Error::LayoutMismatch(format!(
                "{} was generated under a different seed or configuration",
                rec.id
            )));
        }
        if !index.same_layout(layout) {
            return Err(Error::LayoutMismatch(format!(
                "{id} has a different binary layout"
            )));
        }
        let tight = tighten(&model, &index.vars(), &cs)?;
        jobs.push((id, model, index, tight));
    }
    ensure_dir(out)?;
    if cfg.traces {
        ensure_dir(&out.join(TRACES))?;
    }
    let results = parallel_map(
        &jobs,
        cfg.jobs,
        |(id, model, index, tight)| -> Result<BenchRecord> {
            let primal = solve_milp(model, &cfg.solve)?;
            let tightened = solve_milp(tight, &cfg.solve)?;
            let contained = primal.has_solution() && contains(&cs, &index.extract(&primal.point))?.0;
            let opt_gap = if primal.has_solution() && tightened.has_solution() {
                // maximization
                (primal.objective - tightened.objective) / primal.objective.abs().max(1e-9)
            } else {
                f64::NAN
            };
            if cfg.traces {
                write_trace(&out.join(TRACES).join(format!("{id}.csv")), &primal, &tightened)?;
            }
            Ok(BenchRecord {
                id: id.clone(),
                primal_status: primal.status,
                primal_objective: primal.objective,
                primal_nodes: primal.nodes,
                primal_time: primal.wall_time,
                primal_gap: primal.gap,
                tight_status: tightened.status,
                tight_objective: tightened.objective,
                tight_nodes: tightened.nodes,
                tight_time: tightened.wall_time,
                tight_gap: tightened.gap,
                contained,
                speedup: 1.0 - tightened.wall_time / primal.wall_time.max(1e-12),
                opt_gap,
            })
        },
    );
    let records = results.into_iter().collect::<Result<Vec<_>>>()?;
    write_csv(&out.join(BENCH), &records)?;
    let mut m = load_manifest(out, cfg)?;
    m.record("benchmark", &[BENCH]);
    write_json(&out.join(MANIFEST), &m)?;
    cmd_report(out)?;
    Ok(records)
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        f64::NAN
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Nearest-rank percentile of `q` in [0, 100].
pub fn percentile(xs: &[f64], q: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((q / 100.0) * v.len() as f64).ceil().max(1.0) as usize;
    v[rank.min(v.len()) - 1]
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Markdown summary of `bench.csv` and, when present, `metrics.csv`.
pub fn summarize(bench: &[BenchRecord], metrics: &[MetricsRow]) -> String {
    let mut s = String::from("# Run summary\n\n");
    if !metrics.is_empty() {
        s += "## Autoencoder\n\n| N | epsilon | split | samples | HL (%) | PPO (%) |\n|---|---|---|---|---|---|\n";
        for r in metrics {
            s += &format!(
                "| {} | {} | {} | {} | {:.2} | {:.2} |\n",
                r.n, r.epsilon, r.split, r.samples, r.hl_percent, r.ppo_percent
            );
        }
        s += "\n";
    }
    if bench.is_empty() {
        return s;
    }
    let pt: Vec<f64> = bench.iter().map(|r| r.primal_time).collect();
    let tt: Vec<f64> = bench.iter().map(|r| r.tight_time).collect();
    let pn: Vec<f64> = bench.iter().map(|r| r.primal_nodes as f64).collect();
    let tn: Vec<f64> = bench.iter().map(|r| r.tight_nodes as f64).collect();
    let speed: Vec<f64> = bench.iter().map(|r| 100.0 * r.speedup).collect();
    s += &format!("## Solution time ({} instances)\n\n", bench.len());
    s += "| model | t_avg (s) | t_max (s) | t_std (s) | nodes median | nodes mean |\n|---|---|---|---|---|---|\n";
    for (name, t, n) in [("primal", &pt, &pn), ("tightened", &tt, &tn)] {
        s += &format!(
            "| {name} | {:.3} | {:.3} | {:.3} | {:.1} | {:.1} |\n",
            mean(t),
            t.iter().copied().fold(0.0, f64::max),
            std_dev(t),
            median(n),
            mean(n)
        );
    }
    s += &format!(
        "\nSpeedup: mean per instance {:.2}%, median {:.2}%, ratio of mean times {:.2}%.\n\n",
        mean(&speed),
        median(&speed),
        100.0 * (1.0 - mean(&tt) / mean(&pt))
    );
    let gaps: Vec<f64> = bench
        .iter()
        .map(|r| 100.0 * r.opt_gap)
        .filter(|g| g.is_finite())
        .collect();
    let contained = bench.iter().filter(|r| r.contained).count();
    s += "## Optimality gap of the tightened model\n\n| statistic | gap (%) |\n|---|---|\n";
    for (name, v) in [
        ("mean", mean(&gaps)),
        ("std", std_dev(&gaps)),
        ("p50", percentile(&gaps, 50.0)),
        ("p90", percentile(&gaps, 90.0)),
        ("p95", percentile(&gaps, 95.0)),
        ("max", percentile(&gaps, 100.0)),
    ] {
        s += &format!("| {name} | {v:.4} |\n");
    }
    s += &format!(
        "\nPrimal optimum inside the polytope: {contained} of {} ({:.1}%). Tightened model without a solution: {}.\n",
        bench.len(),
        100.0 * contained as f64 / bench.len() as f64,
        bench.len() - gaps.len()
    );
    s
}

/// Rebuild `summary.md` from the CSV files in `out`.
pub fn cmd_report(out: &Path) -> Result<String> {
    let read_if = |name: &str| -> Option<PathBuf> {
        let p = out.join(name);
        p.exists().then_some(p)
    };
    let bench = match read_if(BENCH) {
        Some(p) => read_csv::<BenchRecord>(&p)?,
        None => Vec::new(),
    };
    let metrics = match read_if(METRICS) {
        Some(p) => read_csv::<MetricsRow>(&p)?,
        None => Vec::new(),
    };
    for r in &bench {
        r.check()?;
    }
    let text = summarize(&bench, &metrics);
    let path = out.join(SUMMARY);
    fs::write(&path, &text).map_err(|e| Error::io(&path, e))?;
    Ok(text)
}
