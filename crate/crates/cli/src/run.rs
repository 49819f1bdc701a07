//! Subcommand implementations.

use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use ttc_core::metrics::{psnr, rse};
use ttc_core::planner::{cross_validate, factorize_dims, max_problem_size, CvReport, RankSpec};
use ttc_core::solver::{complete, complete_grouped, grouped_to_dense, CompletionProblem, Diagnostics, InitMode};
use ttc_core::tensor::{linear_index, multi_index};
use ttc_core::{DenseTensor, MultiIndex, ObservationSet};

use crate::config::{Config, InitKind, RankConfig};
use crate::error::{config_err, Result};
use crate::image_io::{load_image, load_video, save_image, save_video, Image};
use crate::mask::{make_mask, read_mask, write_mask, MaskMode};

/// Factorization and ranks chosen for a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Plan {
    pub data_dims: Vec<usize>,
    pub padded_dims: Vec<usize>,
    /// Factor lists of the modes carried by the train (only the two spatial
    /// modes when grouped).
    pub layout: Vec<Vec<usize>>,
    /// Core sizes of the train.
    pub core_dims: Vec<usize>,
    pub ranks: Vec<usize>,
    pub grouped_modes: usize,
    pub max_problem_size: usize,
    pub warnings: Vec<String>,
}

impl Plan {
    pub fn factored_dims(&self) -> Vec<usize> {
        self.layout.iter().flatten().copied().collect()
    }

    pub fn describe(&self) -> String {
        let mut s = format!(
            "dims = {:?}\npadded_dims = {:?}\nlayout = {:?}\ncore_dims = {:?}\nranks = {:?}\ngrouped_modes = {}\nmax_problem_size = {}\n",
            self.data_dims, self.padded_dims, self.layout, self.core_dims, self.ranks, self.grouped_modes, self.max_problem_size
        );
        for w in &self.warnings {
            s += &format!("warning = {w:?}\n");
        }
        s
    }
}

pub fn plan(cfg: &Config, data_dims: &[usize], spec: &RankSpec) -> Result<Plan> {
    let order = data_dims.len();
    if order < 2 {
        return Err(config_err!("data must have at least two modes, got {data_dims:?}"));
    }
    let mut padded = data_dims.to_vec();
    if let Some(p) = cfg.layout.pad_to {
        for k in 0..2 {
            if p[k] < data_dims[k] {
                return Err(config_err!("pad_to {p:?} is smaller than the data {data_dims:?}"));
            }
            padded[k] = p[k];
        }
    }
    let grouped_modes = if cfg.solver.grouped {
        if order < 3 {
            return Err(config_err!("grouped completion needs modes beyond the two spatial ones"));
        }
        order - 2
    } else {
        0
    };
    let modeled = &padded[..order - grouped_modes];
    let mut warnings = Vec::new();
    let layout = match &cfg.layout.factors {
        Some(f) => {
            if f.len() != modeled.len() {
                return Err(config_err!("layout has {} modes, the train carries {}", f.len(), modeled.len()));
            }
            for (fs, &n) in f.iter().zip(modeled) {
                if fs.iter().product::<usize>() != n || fs.is_empty() {
                    return Err(config_err!("factors {fs:?} do not multiply to {n}"));
                }
            }
            f.clone()
        }
        None => {
            let fact = factorize_dims(modeled, cfg.layout.max_factor)?;
            warnings.extend(fact.warnings.iter().cloned());
            fact.layout
        }
    };
    let mut core_dims: Vec<usize> = layout.iter().flatten().copied().collect();
    if grouped_modes > 0 {
        core_dims[0] *= padded[order - grouped_modes..].iter().product::<usize>();
    }
    let ranks = spec.resolve(&core_dims)?;
    let size = max_problem_size(&core_dims, &ranks);
    if size > cfg.layout.problem_cap {
        warnings.push(format!(
            "largest core problem R_k I_k R_(k+1) = {size} exceeds the cap {}",
            cfg.layout.problem_cap
        ));
    }
    Ok(Plan {
        data_dims: data_dims.to_vec(),
        padded_dims: padded,
        layout,
        core_dims,
        ranks,
        grouped_modes,
        max_problem_size: size,
        warnings,
    })
}

/// Input data plus whether it came from a frame directory.
pub struct Input {
    pub data: Image,
    pub video: bool,
}

pub fn load_input(cfg: &Config) -> Result<Input> {
    match (&cfg.input.image, &cfg.input.video) {
        (Some(p), None) => Ok(Input { data: load_image(p)?, video: false }),
        (None, Some(d)) => Ok(Input { data: load_video(d)?, video: true }),
        _ => Err(config_err!("set exactly one of input.image and input.video")),
    }
}

fn load_any(path: &Path) -> Result<Image> {
    if path.is_dir() {
        load_video(path)
    } else {
        load_image(path)
    }
}

/// Observed linear indices over the data dims, and whether they were drawn
/// here rather than read from a file.
pub fn observed_indices(cfg: &Config, dims: &[usize]) -> Result<(Vec<usize>, bool)> {
    match &cfg.mask.file {
        Some(p) => Ok((read_mask(p, dims.iter().product())?, false)),
        None => Ok((make_mask(dims, cfg.mask.fraction, cfg.mask.mode, cfg.mask_seed())?, true)),
    }
}

fn pad_observations(data: &DenseTensor, picks: &[usize], padded: &[usize]) -> Result<ObservationSet> {
    let entries = picks
        .iter()
        .map(|&i| {
            let m = multi_index(i, data.dims())?;
            let v = data.data()[i - 1];
            Ok((m, v))
        })
        .collect::<ttc_core::Result<Vec<(MultiIndex, f64)>>>()?;
    Ok(ObservationSet::new(padded.to_vec(), entries)?)
}

fn crop(t: &DenseTensor, dims: &[usize]) -> Result<DenseTensor> {
    if t.dims() == dims {
        return Ok(t.clone());
    }
    let src = t.dims().to_vec();
    Ok(DenseTensor::from_fn(dims.to_vec(), |m| {
        let idx = MultiIndex(m.to_vec());
        t.data()[linear_index(&idx, &src).unwrap() - 1]
    })?)
}

pub fn build_problem(cfg: &Config, plan: &Plan, obs: ObservationSet) -> Result<CompletionProblem> {
    let s = &cfg.solver;
    let mut problem = CompletionProblem::new(obs, plan.layout.clone(), plan.ranks.clone())
        .with_sweeps(s.sweeps, s.tolerance)
        .with_gamma(s.gamma)
        .with_adaptation(s.adapt_lambda)
        .with_init(match s.init {
            InitKind::Zero => InitMode::Zero,
            InitKind::Interp => InitMode::Interp {
                h: s.box_size,
                resized: vec![1, 2],
            },
        });
    if !s.tv_modes.is_empty() {
        problem.tv_modes = s.tv_modes.clone();
        problem.lambda = s.lambda.expand(s.tv_modes.len())?;
    }
    Ok(problem)
}

/// Metrics record written next to the completed data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub rse: Option<f64>,
    pub psnr: Option<f64>,
    pub observed: usize,
    pub total: usize,
    pub sweeps: usize,
    pub converged: bool,
    pub train_residual: f64,
    pub seconds: f64,
    pub ranks: Vec<usize>,
    pub layout: Vec<Vec<usize>>,
}

pub fn write_diagnostics(path: &Path, diag: &Diagnostics, tv_modes: &[usize]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["sweep", "half", "residual", "rse_train", "lambda_1", "lambda_2", "seconds"])?;
    let lambda_of = |lambda: &[f64], mode: usize| {
        tv_modes
            .iter()
            .position(|&m| m == mode)
            .and_then(|p| lambda.get(p))
            .map_or(String::new(), |l| format!("{l:e}"))
    };
    for r in &diag.records {
        w.write_record([
            r.sweep.to_string(),
            r.half.as_str().to_string(),
            format!("{:e}", r.residual),
            format!("{:e}", r.relative_residual),
            lambda_of(&r.lambda, 1),
            lambda_of(&r.lambda, 2),
            format!("{:.6}", r.seconds),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Outcome of `complete`: the plan, or the plan plus the run record.
pub enum CompleteOutcome {
    DryRun(Plan),
    Done(Plan, RunRecord),
}

pub fn run_complete(cfg: &Config, dry_run: bool) -> Result<CompleteOutcome> {
    let input = load_input(cfg)?;
    let dims = input.data.tensor.dims().to_vec();
    let plan = plan(cfg, &dims, &cfg.ranks.spec())?;
    for w in &plan.warnings {
        warn!("{w}");
    }
    if dry_run {
        return Ok(CompleteOutcome::DryRun(plan));
    }
    if cfg.solver.grouped && cfg.mask.file.is_none() && cfg.mask.mode != MaskMode::Sensor {
        return Err(config_err!("grouped completion requires a sensor mask"));
    }
    let (picks, generated) = observed_indices(cfg, &dims)?;
    let obs = pad_observations(&input.data.tensor, &picks, &plan.padded_dims)?;
    info!("{} of {} entries observed", obs.len(), input.data.tensor.len());
    let problem = build_problem(cfg, &plan, obs)?;

    let start = Instant::now();
    let (estimate, diag) = if plan.grouped_modes > 0 {
        let (tt, diag) = complete_grouped(&problem, plan.grouped_modes)?;
        (grouped_to_dense(&tt, &plan.factored_dims(), &plan.padded_dims)?, diag)
    } else {
        let (tt, diag) = complete(&problem)?;
        (tt.contract_full().into_reshaped(plan.padded_dims.clone())?, diag)
    };
    let seconds = start.elapsed().as_secs_f64();
    // intensities are bounded; metrics describe the saved (clamped) result
    let mut estimate = crop(&estimate, &dims)?;
    estimate.data_mut().iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));

    let truth = match &cfg.input.truth {
        Some(p) => Some(load_any(p)?.tensor),
        None if generated => Some(input.data.tensor.clone()),
        None => None,
    };
    let (rse_v, psnr_v) = match &truth {
        Some(t) => (Some(rse(t, &estimate)?), Some(psnr(t, &estimate, 1.0)?)),
        None => (None, None),
    };
    let record = RunRecord {
        rse: rse_v,
        psnr: psnr_v,
        observed: picks.len(),
        total: estimate.len(),
        sweeps: diag.sweeps,
        converged: diag.converged,
        train_residual: diag.final_residual(),
        seconds,
        ranks: plan.ranks.clone(),
        layout: plan.layout.clone(),
    };

    let out = &cfg.output.dir;
    std::fs::create_dir_all(out)?;
    let completed = Image {
        tensor: estimate,
        max_value: input.data.max_value,
    };
    if input.video {
        save_video(&out.join("completed"), &completed)?;
    } else {
        save_image(&out.join("completed.ppm"), &completed)?;
    }
    write_diagnostics(&out.join("diagnostics.csv"), &diag, &cfg.solver.tv_modes)?;
    std::fs::write(out.join("metrics.toml"), toml::to_string(&record).expect("record serializes"))?;
    Ok(CompleteOutcome::Done(plan, record))
}

fn spec_label(spec: &RankSpec) -> String {
    match spec {
        RankSpec::Explicit(r) => format!("explicit {r:?}"),
        RankSpec::Schedule { r2, rmid, r_dm1, r_d } => {
            let opt = |o: &Option<usize>| o.map_or("-".to_string(), |v| v.to_string());
            format!("r2={r2} rmid={rmid} rdm1={} rd={}", opt(r_dm1), opt(r_d))
        }
    }
}

/// Cross-validates the configured candidates, writes `cv_scores.csv`
/// (best first) and `selected.toml`.
pub fn run_cv(cfg: &Config) -> Result<(CvReport, RankConfig)> {
    if cfg.cv.candidates.is_empty() {
        return Err(config_err!("cv.candidates is empty"));
    }
    if cfg.solver.grouped {
        return Err(config_err!("cross-validation runs the ungrouped solver; unset solver.grouped"));
    }
    let input = load_input(cfg)?;
    let dims = input.data.tensor.dims().to_vec();
    let specs: Vec<RankSpec> = cfg.cv.candidates.iter().map(RankConfig::spec).collect();
    let plan = plan(cfg, &dims, &specs[0])?;
    let (picks, _) = observed_indices(cfg, &dims)?;
    let obs = pad_observations(&input.data.tensor, &picks, &plan.padded_dims)?;
    let template = build_problem(cfg, &plan, obs)?;
    let report = cross_validate(&template, &specs, cfg.cv.trials, cfg.cv.holdout, cfg.seed)?;

    let out = &cfg.output.dir;
    std::fs::create_dir_all(out)?;
    let mut w = csv::Writer::from_path(out.join("cv_scores.csv"))?;
    w.write_record(["candidate", "schedule", "ranks", "params", "mean_rse"])?;
    for i in report.ranking() {
        let s = &report.scores[i];
        let ranks: Vec<String> = s.ranks.iter().map(usize::to_string).collect();
        w.write_record([
            (i + 1).to_string(),
            spec_label(&s.spec),
            ranks.join(" "),
            s.params.to_string(),
            format!("{:e}", s.mean_rse),
        ])?;
    }
    w.flush()?;
    let chosen = cfg.cv.candidates[report.best].clone();
    #[derive(Serialize)]
    struct Selected<'a> {
        ranks: &'a RankConfig,
    }
    std::fs::write(
        out.join("selected.toml"),
        toml::to_string(&Selected { ranks: &chosen }).expect("ranks serialize"),
    )?;
    Ok((report, chosen))
}

/// Seeded smooth colour image: a constant plus `terms` separable cosine
/// products, values within [0, 1].
pub fn synthetic_image(size: usize, terms: usize, seed: u64) -> DenseTensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tau = std::f64::consts::TAU;
    let parts: Vec<(f64, f64, f64, f64, [f64; 3])> = (0..terms)
        .map(|_| {
            (
                rng.gen_range(1..=2) as f64,
                rng.gen_range(1..=3) as f64,
                rng.gen_range(0.0..tau),
                rng.gen_range(0.0..tau),
                [0; 3].map(|_| rng.gen_range(0.05..0.15)),
            )
        })
        .collect();
    let base = [0.5, 0.45, 0.4];
    DenseTensor::from_fn(vec![size, size, 3], |m| {
        let (x, y, c) = ((m[0] - 1) as f64 / size as f64, (m[1] - 1) as f64 / size as f64, m[2] - 1);
        let v: f64 = parts
            .iter()
            .map(|(a, b, px, py, w)| w[c] * (tau * a * x + px).cos() * (tau * b * y + py).cos())
            .sum();
        (base[c] + v).clamp(0.0, 1.0)
    })
    .unwrap()
}

/// Writes `truth.ppm`, `mask.csv` and a ready-to-run `config.toml`.
pub fn run_synth(dir: &Path, size: usize, fraction: f64, seed: u64) -> Result<PathBuf> {
    if size < 2 {
        return Err(config_err!("synthetic image size must be at least 2"));
    }
    std::fs::create_dir_all(dir)?;
    let truth = Image {
        tensor: synthetic_image(size, 3, seed),
        max_value: 255,
    };
    save_image(&dir.join("truth.ppm"), &truth)?;
    let picks = make_mask(truth.tensor.dims(), fraction, MaskMode::Iid, seed)?;
    write_mask(&dir.join("mask.csv"), &picks)?;
    let mut cfg = Config::default();
    cfg.seed = seed;
    cfg.input.image = Some(PathBuf::from("truth.ppm"));
    cfg.input.truth = Some(PathBuf::from("truth.ppm"));
    cfg.mask.file = Some(PathBuf::from("mask.csv"));
    cfg.mask.fraction = fraction;
    cfg.ranks.rmid = 4;
    cfg.ranks.rdm1 = Some(4);
    cfg.solver.tv_modes = vec![1, 2];
    cfg.solver.sweeps = 8;
    cfg.solver.tolerance = 0.0;
    cfg.cv.trials = 3;
    cfg.cv.candidates = [2, 4, 8]
        .map(|r| RankConfig {
            rmid: r,
            rdm1: Some(r),
            ..RankConfig::default()
        })
        .to_vec();
    let path = dir.join("config.toml");
    std::fs::write(&path, cfg.to_toml())?;
    Ok(path)
}

/// RSE and PSNR (peak `peak`) between two images or frame directories.
pub fn run_metrics(truth: &Path, estimate: &Path, peak: f64) -> Result<(f64, f64)> {
    let t = load_any(truth)?;
    let e = load_any(estimate)?;
    Ok((rse(&t.tensor, &e.tensor)?, psnr(&t.tensor, &e.tensor, peak)?))
}
