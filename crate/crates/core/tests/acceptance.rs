//! Acceptance suite: every criterion prints one PASS/FAIL line.
//!
//! Run with `cargo test -p ttc-core --test acceptance -- --nocapture`.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ttc_core::metrics::{psnr, psnr_from_mse, rse};
use ttc_core::planner::rank_schedule;
use ttc_core::regularizers::{build_tv, difference_matrix, gram_term, TVOperator};
use ttc_core::sampling::build_selection;
use ttc_core::solver::{
    build_local_matrix, complete, complete_grouped, dense_to_grouped, grouped_to_dense, solve_core,
    CompletionProblem, InitMode, SweepState,
};
use ttc_core::tensor::{kron, multi_index};
use ttc_core::tt::tt_svd;
use ttc_core::{DenseTensor, MultiIndex, ObservationSet, TTMatrix, TensorTrain};

type Outcome = std::result::Result<String, String>;

fn ensure(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn rel(a: &DenseTensor, b: &DenseTensor) -> f64 {
    rse(a, b).unwrap()
}

fn sample(t: &DenseTensor, count: usize, rng: &mut ChaCha8Rng) -> ObservationSet {
    let mut picks: Vec<usize> = index::sample(rng, t.len(), count).into_iter().map(|i| i + 1).collect();
    picks.sort_unstable();
    ObservationSet::from_tensor(t, &picks).unwrap()
}

fn random_dims(rng: &mut ChaCha8Rng, max_total: usize) -> Vec<usize> {
    loop {
        let order = rng.gen_range(1..=4);
        let dims: Vec<usize> = (0..order).map(|_| rng.gen_range(1..=8)).collect();
        if dims.iter().product::<usize>() <= max_total {
            return dims;
        }
    }
}

fn random_tensor(dims: &[usize], rng: &mut ChaCha8Rng) -> DenseTensor {
    DenseTensor::from_fn(dims.to_vec(), |_| rng.gen_range(-1.0..1.0)).unwrap()
}

fn c1_selection() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let dims = random_dims(&mut rng, 1000);
        let t = random_tensor(&dims, &mut rng);
        let count = rng.gen_range(1..=t.len());
        let obs = sample(&t, count, &mut rng);
        let via_s = build_selection(&obs).apply(t.data()).map_err(|e| e.to_string())?;
        let direct: Vec<f64> = obs.iter().map(|(m, _)| t.get(&m).unwrap()).collect();
        for (a, b) in via_s.iter().zip(&direct) {
            worst = worst.max((a - b).abs());
        }
    }
    ensure(worst <= 1e-12, format!("max abs error {worst:.1e} over 50 instances"))
}

fn c2_tt_svd() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let order = rng.gen_range(1..=4);
        let dims: Vec<usize> = (0..order).map(|_| rng.gen_range(1..=4)).collect();
        let t = random_tensor(&dims, &mut rng);
        // requested ranks far above any feasible value: clamped to full rank
        let ranks = vec![1000; order - 1];
        let tt = tt_svd(&t, &ranks).map_err(|e| e.to_string())?;
        worst = worst.max(rel(&t, &tt.contract_full()));
    }
    ensure(worst <= 1e-10, format!("max relative error {worst:.1e}"))
}

fn c3_canonical() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let mut drift = 0.0f64;
    let mut defect = 0.0f64;
    for _ in 0..5 {
        let dims: Vec<usize> = (0..rng.gen_range(2..=5)).map(|_| rng.gen_range(2..=4)).collect();
        let ranks: Vec<usize> = (0..dims.len() - 1).map(|_| rng.gen_range(1..=3)).collect();
        let mut tt = TensorTrain::random(&dims, &ranks, &mut rng).unwrap();
        let start = tt.contract_full();
        tt.orthogonalize(rng.gen_range(1..=dims.len())).unwrap();
        for _ in 0..20 {
            let site = tt.canonical_site().unwrap();
            let right = if site == 1 {
                true
            } else if site == dims.len() {
                false
            } else {
                rng.gen_bool(0.5)
            };
            if right {
                tt.shift_right().unwrap();
            } else {
                tt.shift_left().unwrap();
            }
            defect = defect.max(tt.canonical_defect().unwrap());
        }
        drift = drift.max(rel(&start, &tt.contract_full()));
    }
    ensure(
        drift <= 1e-11 && defect <= 1e-12,
        format!("drift {drift:.1e}, orthogonality defect {defect:.1e}"),
    )
}

fn c4_local_system() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let dims: Vec<usize> = (0..rng.gen_range(2..=4)).map(|_| rng.gen_range(2..=5)).collect();
        let ranks: Vec<usize> = (0..dims.len() - 1).map(|_| rng.gen_range(1..=3)).collect();
        let tt0 = TensorTrain::random(&dims, &ranks, &mut rng).unwrap();
        let full = tt0.contract_full();
        let count = rng.gen_range(1..=full.len());
        let obs = sample(&full, count, &mut rng);
        for k in 1..=dims.len() {
            let mut tt = tt0.clone();
            tt.orthogonalize(k).unwrap();
            let state = SweepState::new(tt.clone(), &obs).unwrap();
            let b = build_local_matrix(&state, &obs, k).unwrap();
            let pred = b * DVector::from_column_slice(tt.core(k).data());
            for (l, (m, _)) in obs.iter().enumerate() {
                worst = worst.max((pred[l] - tt.entry(&m).unwrap()).abs());
            }
        }
    }
    ensure(worst <= 1e-12, format!("max abs error {worst:.1e}"))
}

/// `d A / d vec(core_k)` as a dense matrix, one column per core entry.
fn core_jacobian(tt: &TensorTrain, k: usize) -> DMatrix<f64> {
    let core = tt.core(k).clone();
    let total: usize = tt.dims().iter().product();
    let mut j = DMatrix::zeros(total, core.len());
    for c in 0..core.len() {
        let mut unit = DenseTensor::zeros(core.dims().to_vec()).unwrap();
        unit.data_mut()[c] = 1.0;
        let mut probe = tt.clone();
        probe.set_core(k, unit).unwrap();
        j.set_column(c, &DVector::from_column_slice(probe.contract_full().data()));
    }
    j
}

/// `I_after (x) D (x) I_before` for mode `p` of `dims`.
fn kron_difference(dims: &[usize], p: usize) -> DMatrix<f64> {
    let before: usize = dims[..p - 1].iter().product();
    let after: usize = dims[p..].iter().product();
    kron(
        &kron(&DMatrix::identity(after, after), &difference_matrix(dims[p - 1])),
        &DMatrix::identity(before, before),
    )
}

fn c5_tv_gram() -> Outcome {
    let cases: Vec<(Vec<usize>, Vec<Vec<usize>>, Vec<usize>)> = vec![
        (vec![8, 8, 8], vec![vec![2, 4], vec![4, 2], vec![8]], vec![2, 3, 3, 2]),
        (vec![6, 5, 4], vec![vec![6], vec![5], vec![2, 2]], vec![3, 3, 2]),
        (vec![16, 4, 2], vec![vec![2, 2, 2, 2], vec![4], vec![2]], vec![2, 2, 3, 3, 2]),
        (vec![3, 3], vec![vec![3], vec![3]], vec![2]),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    let mut worst = 0.0f64;
    for (dims, layout, ranks) in cases {
        let factored: Vec<usize> = layout.iter().flatten().copied().collect();
        let base = TensorTrain::random(&factored, &ranks, &mut rng).unwrap();
        for p in 1..=2 {
            let op = TVOperator::for_mode(&layout, p, 1.0).unwrap();
            let w = kron_difference(&dims, p);
            let wtw = w.transpose() * &w;
            for k in 1..=factored.len() {
                let mut tt = base.clone();
                tt.orthogonalize(k).unwrap();
                let u = core_jacobian(&tt, k);
                let oracle = u.transpose() * &wtw * &u;
                let g = gram_term(&tt, &op, k).map_err(|e| e.to_string())?;
                worst = worst.max((g - &oracle).amax() / oracle.amax().max(1.0));
            }
        }
    }
    ensure(worst <= 1e-8, format!("max scaled error {worst:.1e}"))
}

fn c6_ttm_ranks() -> Outcome {
    let mut found = Vec::new();
    for (n, f) in [(16, vec![2; 4]), (81, vec![3; 4]), (1024, vec![4; 5])] {
        let d = difference_matrix(n);
        let ttm = TTMatrix::from_matrix(&d, &f, &f, 1e-10).map_err(|e| e.to_string())?;
        let r = ttm.ranks();
        found.push((n, r[1..r.len() - 1].to_vec()));
        // the library operator agrees
        if build_tv(n, &f).unwrap().ranks() != r[1..r.len() - 1] {
            return Err(format!("operator ranks differ for I={n}"));
        }
    }
    let ok = found.iter().all(|(_, r)| r.iter().all(|&x| x == 3));
    ensure(ok, format!("internal ranks {found:?}"))
}

fn c7_monotone() -> Outcome {
    let dims = [6, 6, 6];
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    let t = random_tensor(&dims, &mut rng);
    let obs = sample(&t, (0.3 * t.len() as f64).round() as usize, &mut rng);
    let y_norm = obs.values().iter().map(|v| v * v).sum::<f64>().sqrt();
    let layout = vec![vec![6], vec![6], vec![6]];
    let problem = CompletionProblem::new(obs, layout, vec![3, 3]).with_sweeps(10, 0.0);
    let (_, diag) = complete(&problem).map_err(|e| e.to_string())?;
    let r = &diag.update_residuals;
    let mut worst_rise = f64::NEG_INFINITY;
    let mut prev = diag.initial_residual * y_norm;
    for &x in r {
        worst_rise = worst_rise.max(x - prev);
        prev = x;
    }
    ensure(
        diag.sweeps == 10 && worst_rise <= 1e-12 * y_norm,
        format!(
            "{} updates over {} sweeps, largest rise {worst_rise:.1e} (slack {:.1e}), relative residual {:.3e} -> {:.3e}",
            r.len(),
            diag.sweeps,
            1e-12 * y_norm,
            diag.initial_residual,
            diag.final_residual()
        ),
    )
}

/// Seeded band-limited colour image, `n x n x 3`, with values in about [0, 1].
/// A constant plus three separable cosine products sharing one horizontal
/// frequency, so every unfolding of the 6*4*4 x 6*4*4 x 3 layout has rank at
/// most 7.
fn smooth_image(n: usize, seed: u64) -> DenseTensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tau = std::f64::consts::TAU;
    let mut terms = vec![(0.0, 0.0, 0.0, 0.0, [0.5, 0.45, 0.4])];
    for _ in 0..3 {
        terms.push((
            1.0,
            rng.gen_range(1..=3) as f64,
            rng.gen_range(0.0..tau),
            rng.gen_range(0.0..tau),
            [rng.gen_range(0.05..0.2), rng.gen_range(0.05..0.2), rng.gen_range(0.05..0.2)],
        ));
    }
    DenseTensor::from_fn(vec![n, n, 3], |m| {
        let (x, y) = ((m[0] - 1) as f64 / n as f64, (m[1] - 1) as f64 / n as f64);
        terms
            .iter()
            .map(|(a, b, px, py, c)| c[m[2] - 1] * (tau * a * x + px).cos() * (tau * b * y + py).cos())
            .sum()
    })
    .unwrap()
}

/// Pixels sampled without replacement, every channel of a pixel kept.
fn pixel_mask(t: &DenseTensor, fraction: f64, seed: u64) -> ObservationSet {
    let (h, w, c) = (t.dims()[0], t.dims()[1], t.dims()[2]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = (fraction * (h * w) as f64).round() as usize;
    let mut picks: Vec<usize> = index::sample(&mut rng, h * w, count)
        .into_iter()
        .flat_map(|p| (0..c).map(move |ch| p + ch * h * w + 1))
        .collect();
    picks.sort_unstable();
    ObservationSet::from_tensor(t, &picks).unwrap()
}

fn image_layout() -> Vec<Vec<usize>> {
    vec![vec![6, 4, 4], vec![6, 4, 4], vec![3]]
}

fn image_problem(obs: ObservationSet) -> CompletionProblem {
    let layout = image_layout();
    let factored: Vec<usize> = layout.iter().flatten().copied().collect();
    let ranks = rank_schedule(&factored, 4, 8, Some(8), Some(3)).unwrap();
    CompletionProblem::new(obs, layout, ranks)
}

fn interp() -> InitMode {
    InitMode::Interp { h: None, resized: vec![1, 2] }
}

/// First sweep count after which the completed tensor is within `target`
/// RSE of `truth`, or `None` within `max_sweeps`.
fn sweeps_to_reach(problem: &CompletionProblem, truth: &DenseTensor, target: f64, max_sweeps: usize) -> Option<usize> {
    let mut solver = ttc_core::solver::Solver::new(problem).unwrap();
    for s in 1..=max_sweeps {
        solver.sweep().unwrap();
        let est = solver.state().tt.contract_full().into_reshaped(truth.dims().to_vec()).unwrap();
        if rel(truth, &est) <= target {
            return Some(s);
        }
    }
    None
}

fn c8_recovery() -> Outcome {
    let dims = [5, 6, 6, 5];
    let mut rng = ChaCha8Rng::seed_from_u64(108);
    let truth_tt = TensorTrain::random(&dims, &[2, 3, 2], &mut rng).unwrap();
    let truth = truth_tt.contract_full();
    let obs = sample(&truth, (0.4 * truth.len() as f64).round() as usize, &mut rng);
    let layout = dims.iter().map(|&n| vec![n]).collect();
    let problem = CompletionProblem::new(obs, layout, vec![2, 3, 2])
        .with_init(InitMode::Zero)
        .with_sweeps(25, 0.0);
    let exact = sweeps_to_reach(&problem, &truth, 1e-6, 25);

    let image = smooth_image(96, 110);
    let obs = pixel_mask(&image, 0.1, 111);
    let cap = 40;
    // plain ALS at these ranks stalls near 1e-3 off the sampled pixels, so
    // the comparison uses the TV configuration of criterion 10
    let tv = image_problem(obs).with_tv(&[1, 2], 1.0).with_adaptation(true);
    let zero = sweeps_to_reach(&tv.clone().with_init(InitMode::Zero), &image, 1e-4, cap);
    let warm = sweeps_to_reach(&tv.with_init(interp()), &image, 1e-4, cap);
    let fmt = |s: Option<usize>| s.map_or(format!("not within {cap}"), |v| v.to_string());
    let ordered = match (warm, zero) {
        (Some(a), Some(b)) => a <= b,
        (Some(_), None) => true,
        _ => false,
    };
    ensure(
        exact.is_some() && ordered,
        format!(
            "exact instance reaches 1e-6 after {} sweeps; TV image run reaches 1e-4 after {} (interp) vs {} (zero fill)",
            exact.map_or("no".into(), |v: usize| v.to_string()),
            fmt(warm),
            fmt(zero)
        ),
    )
}

fn c9_degeneration() -> Outcome {
    let dims = [6, 4, 5];
    let mut rng = ChaCha8Rng::seed_from_u64(109);
    let t = random_tensor(&dims, &mut rng);
    let obs = sample(&t, 70, &mut rng);
    let layout = vec![vec![6], vec![2, 2], vec![5]];
    let plain = CompletionProblem::new(obs.clone(), layout.clone(), vec![3, 3, 3]).with_sweeps(3, 0.0);
    let (a, _) = complete(&plain).map_err(|e| e.to_string())?;
    let reg = plain.clone().with_tv(&[1, 2, 3], 0.0).with_gamma(0.0);
    let (b, _) = complete(&reg).map_err(|e| e.to_string())?;
    let mut core_diff = 0.0f64;
    for k in 1..=a.order() {
        let (ca, cb) = (a.core(k).data(), b.core(k).data());
        for (x, y) in ca.iter().zip(cb) {
            core_diff = core_diff.max((x - y).abs());
        }
    }

    let mut tt = tt_svd(&t.reshape(vec![6, 2, 2, 5]).unwrap(), &[3, 3, 3]).unwrap();
    tt.orthogonalize(2).unwrap();
    let state = SweepState::new(tt, &obs.reindex(vec![6, 2, 2, 5]).unwrap()).unwrap();
    let bm = build_local_matrix(&state, &obs.reindex(vec![6, 2, 2, 5]).unwrap(), 2).unwrap();
    let y = DVector::from_column_slice(obs.values());
    let free = solve_core(&bm, &y, &[], &[], 0.0).map_err(|e| e.to_string())?;
    let damped = solve_core(&bm, &y, &[], &[], 1e12).map_err(|e| e.to_string())?;
    let ratio = damped.norm() / free.norm();
    ensure(
        core_diff <= 1e-12 && ratio <= 1e-6,
        format!("max core difference {core_diff:.1e}; gamma=1e12 norm ratio {ratio:.1e}"),
    )
}

fn c10_tv_helps() -> Outcome {
    let image = smooth_image(96, 110);
    let obs = pixel_mask(&image, 0.1, 111);
    let base = image_problem(obs).with_init(interp()).with_sweeps(6, 0.0);
    let tv = base.clone().with_tv(&[1, 2], 1.0).with_adaptation(true);
    let (p, _) = complete(&base).map_err(|e| e.to_string())?;
    let (r, _) = complete(&tv).map_err(|e| e.to_string())?;
    let dims = image.dims().to_vec();
    let e_plain = rel(&image, &p.contract_full().into_reshaped(dims.clone()).unwrap());
    let e_tv = rel(&image, &r.contract_full().into_reshaped(dims).unwrap());
    ensure(e_tv < e_plain, format!("RSE TTC-TV {e_tv:.4e} vs TTC {e_plain:.4e}"))
}

fn c11_grouped() -> Outcome {
    // 8 x 8 pixels, 4 frames, 1 channel; spatial layout 2*4 by 2*4
    let (h, w, frames) = (8, 8, 4);
    let truth = DenseTensor::from_fn(vec![h, w, frames, 1], |m| {
        let (x, y, f) = (m[0] as f64, m[1] as f64, m[2] as f64); // 1-based
        (0.3 * x + 0.2 * f).sin() * (0.25 * y).cos() + 0.1 * (x - y) * (1.0 + 0.5 * f)
    })
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(111);
    let mut sensors: Vec<usize> = index::sample(&mut rng, h * w, 40).into_iter().collect();
    sensors.sort_unstable();
    let entries: Vec<(MultiIndex, f64)> = (0..frames)
        .flat_map(|f| sensors.iter().map(move |&p| (p, f)))
        .map(|(p, f)| {
            let m = MultiIndex(vec![p % h + 1, p / h + 1, f + 1, 1]);
            let v = truth.get(&m).unwrap();
            (m, v)
        })
        .collect();
    let obs = ObservationSet::new(vec![h, w, frames, 1], entries).unwrap();
    let spatial = vec![vec![2, 4], vec![2, 4]];
    let ranks = vec![4, 4, 4];
    let sweeps = 8;
    let grouped = CompletionProblem::new(obs.clone(), spatial, ranks.clone()).with_sweeps(sweeps, 0.0);
    let (gt, gdiag) = complete_grouped(&grouped, 2).map_err(|e| e.to_string())?;

    // objective of the returned train evaluated on the ungrouped tensor
    let dense = grouped_to_dense(&gt, &[2, 4, 2, 4], &[h, w, frames, 1]).unwrap();
    let pred = obs.gather(&dense).unwrap();
    let ungrouped_obj: f64 = pred.iter().zip(obs.values()).map(|(p, y)| (p - y).powi(2)).sum();
    let grouped_obj = gdiag.records.last().unwrap().residual.powi(2);
    let obj_gap = (ungrouped_obj - grouped_obj).abs();

    // the same problem posed as plain completion over the reshaped tensor
    let reshaped = dense_to_grouped(&truth, &[2, 4, 2, 4], frames).unwrap();
    let mut picks: Vec<usize> = Vec::new();
    for f in 0..frames {
        for &p in &sensors {
            let s = multi_index(p + 1, &[2, 4, 2, 4]).unwrap();
            let i1 = s.0[0] - 1 + 2 * f;
            let off = i1 + 8 * ((s.0[1] - 1) + 4 * ((s.0[2] - 1) + 2 * (s.0[3] - 1)));
            picks.push(off + 1);
        }
    }
    picks.sort_unstable();
    let flat_obs = ObservationSet::from_tensor(&reshaped, &picks).unwrap();
    let flat = CompletionProblem::new(flat_obs, vec![vec![8], vec![4], vec![2], vec![4]], ranks)
        .with_sweeps(sweeps, 0.0);
    let (_, fdiag) = complete(&flat).map_err(|e| e.to_string())?;

    let target = fdiag.final_residual();
    let reached = gdiag
        .records
        .iter()
        .filter(|r| r.half == ttc_core::solver::Half::Forward)
        .position(|r| r.relative_residual <= target + 1e-6)
        .map(|i| i + 1);
    let res_gap = (gdiag.final_residual() - target).abs();
    ensure(
        obj_gap <= 1e-10 * ungrouped_obj.max(1.0) && res_gap <= 1e-6 && reached.is_some_and(|s| s <= fdiag.sweeps),
        format!(
            "objective gap {obj_gap:.1e}; residual grouped {:.6e} vs ungrouped {target:.6e}; grouped reaches it after {:?} of {} sweeps",
            gdiag.final_residual(),
            reached,
            fdiag.sweeps
        ),
    )
}

fn c12_schedule() -> Outcome {
    let dims = [9, 8, 5, 4, 4, 5, 8, 4, 6, 6, 3];
    let r = rank_schedule(&dims, 5, 5, Some(5), Some(3)).map_err(|e| e.to_string())?;
    // r[j] is R_{j+2}
    let plateau = r[1..=7].iter().all(|&x| x == 5);
    ensure(
        plateau && r[0] == 5 && r[8] == 5 && r[9] == 3,
        format!("R2..R11 = {r:?}"),
    )
}

fn c13_metrics() -> Outcome {
    let v = |x: &[f64]| DenseTensor::new(vec![x.len()], x.to_vec()).unwrap();
    let t = v(&[3.0, 4.0]);
    let examples = rse(&t, &t).unwrap() == 0.0
        && rse(&t, &v(&[0.0, 0.0])).unwrap() == 1.0
        && rse(&t, &v(&[3.0, 0.0])).unwrap() == 0.8
        && (psnr_from_mse(1.0, 255.0) - 48.1308).abs() < 5e-5
        && psnr(&t, &t, 1.0).unwrap() == f64::INFINITY
        && ((psnr_from_mse(1.0, 1.0) - psnr_from_mse(2.0, 1.0)) - 3.0103).abs() < 5e-5;
    let mut rng = ChaCha8Rng::seed_from_u64(113);
    let mut scale_err = 0.0f64;
    let mut monotone = true;
    for _ in 0..100 {
        let n = rng.gen_range(1..=20);
        let a = random_tensor(&[n], &mut rng);
        let b = random_tensor(&[n], &mut rng);
        let c = rng.gen_range(0.1..10.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let sa = DenseTensor::new(vec![n], a.data().iter().map(|x| c * x).collect()).unwrap();
        let sb = DenseTensor::new(vec![n], b.data().iter().map(|x| c * x).collect()).unwrap();
        let base = rse(&a, &b).unwrap();
        scale_err = scale_err.max((rse(&sa, &sb).unwrap() - base).abs() / base.max(1e-300));
        let m1 = rng.gen_range(1e-6..1.0);
        let m2 = m1 * rng.gen_range(1.001..100.0);
        monotone &= psnr_from_mse(m2, 1.0) < psnr_from_mse(m1, 1.0);
    }
    ensure(
        examples && scale_err <= 1e-12 && monotone,
        format!("examples {examples}, scale invariance error {scale_err:.1e}, psnr monotone {monotone}"),
    )
}

/// Runs without the libtest harness so every verdict line is printed.
fn main() {
    let criteria: Vec<(u32, &str, Duration, fn() -> Outcome)> = vec![
        (1, "selection oracle", Duration::from_secs(1), c1_selection),
        (2, "TT-SVD roundtrip", Duration::from_secs(1), c2_tt_svd),
        (3, "canonicalization", Duration::from_secs(1), c3_canonical),
        (4, "local system consistency", Duration::from_secs(1), c4_local_system),
        (5, "TV Gram oracle", Duration::from_secs(5), c5_tv_gram),
        (6, "difference operator TT ranks", Duration::from_secs(5), c6_ttm_ranks),
        (7, "monotone residual", Duration::from_secs(2), c7_monotone),
        (8, "exact recovery", Duration::from_secs(10), c8_recovery),
        (9, "regularizer degeneration", Duration::from_secs(2), c9_degeneration),
        (10, "TV on smooth image", Duration::from_secs(30), c10_tv_helps),
        (11, "grouped formulation", Duration::from_secs(10), c11_grouped),
        (12, "rank schedule", Duration::from_millis(1), c12_schedule),
        (13, "metrics", Duration::from_secs(1), c13_metrics),
    ];
    let mut failed = Vec::new();
    for (id, name, budget, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) => (elapsed <= budget, d),
            Err(d) => (false, d),
        };
        println!(
            "{} criterion {id:>2} ({name}): {detail} [{:.3} s, budget {:.3} s]",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs_f64()
        );
        if !ok {
            failed.push(id);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
