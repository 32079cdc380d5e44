//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness. A substring argument (e.g.
//! `cargo test --test acceptance -- icp`) limits the run to matching
//! criteria.

mod common;

use std::time::{Duration, Instant};

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use duq_core::geometry::scene::{synthetic_pair, PairSetConfig};
use duq_core::geometry::{
    icp_align, percentile_sweep, rotation_error_deg, CloudPair, IcpConfig, RigidTransform,
    UncertainPointCloud, DEFAULT_PERCENTILES,
};
use duq_core::io::{Checkpoint, PlaneKind, RasterBundle};
use duq_core::losses::{laplace_nll, laplace_nll_grad};
use duq_core::metrics::{auce, ause_rmse, depth_metrics, evaluate, Aggregation, MetricSelection};
use duq_core::synth::{depthscene, regress1d, DepthSceneConfig, NoiseKind, Regress1dConfig};
use duq_core::toynet::{
    batch_loss_and_grad, ensemble_sample, forward, init_params, mc_dropout_sample, train,
    train_ensemble, Dataset, DropoutMasks, DropoutPlan, ToyNetConfig, ToyNetParams, TrainSettings,
};
use duq_core::{
    fuse_samples, DepthRaster, GaussianPrediction, PredictiveSampleSet, Raster, SigmaRaster,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(limit: Duration, elapsed: Duration, detail: String) -> Outcome {
    check(
        elapsed <= limit,
        format!(
            "{detail}; {:.2}s (limit {}s)",
            elapsed.as_secs_f64(),
            limit.as_secs()
        ),
    )
}

// 1 ------------------------------------------------------------------------

fn fusion_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let m = rng.random_range(1..=64);
        let (w, h) = (rng.random_range(1..=6), rng.random_range(1..=6));
        let scale: f64 = 10f64.powf(rng.random_range(-1.0..1.5));
        let pairs: Vec<(Raster, SigmaRaster)> = (0..m)
            .map(|_| {
                let mean: Vec<f64> = (0..w * h)
                    .map(|_| scale * rng.random_range(0.5..2.0))
                    .collect();
                let sigma: Vec<f64> = (0..w * h)
                    .map(|_| scale * 10f64.powf(rng.random_range(-3.0..0.0)))
                    .collect();
                (
                    Raster::new(w, h, mean).unwrap(),
                    SigmaRaster::new(Raster::new(w, h, sigma).unwrap()).unwrap(),
                )
            })
            .collect();
        let set = PredictiveSampleSet::from_pairs(pairs).unwrap();
        let fused = fuse_samples(&set);
        for j in 0..w * h {
            let means: Vec<f64> = set.samples().iter().map(|s| s.mean.values()[j]).collect();
            let sigmas: Vec<f64> = set.samples().iter().map(|s| s.sigma.values()[j]).collect();
            let want = common::mixture_variance(&means, &sigmas);
            worst = worst.max(common::rel_err(fused.var_total.values()[j], want, 0.0));
        }
    }
    let elapsed = start.elapsed();
    check(
        worst <= 1e-12,
        format!("max relative error {worst:.2e} (limit 1e-12)"),
    )
    .and_then(|d| within(Duration::from_secs(5), elapsed, d))
}

// 2 ------------------------------------------------------------------------

const FD_STEP: f64 = 1e-5;
const FD_TOL: f64 = 1e-5;
/// Gradients smaller than this are compared on an absolute scale.
const FD_FLOOR: f64 = 1e-5;
/// Residuals closer than this to the loss kink are redrawn.
const KINK_MARGIN: f64 = 1e-3;

fn laplace_gradient_draw(rng: &mut ChaCha8Rng) -> f64 {
    let (w, h) = (rng.random_range(1..=5), rng.random_range(1..=5));
    let n = w * h;
    let gt: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..5.0)).collect();
    let mean: Vec<f64> = gt
        .iter()
        .map(|&d| loop {
            let m = d + rng.random_range(-1.0..1.0);
            if (m - d).abs() > KINK_MARGIN {
                break m;
            }
        })
        .collect();
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..1.0)).collect();
    let valid: Vec<bool> = (0..n).map(|j| j == 0 || rng.random_bool(0.8)).collect();
    let gt = DepthRaster::new(Raster::new(w, h, gt).unwrap(), valid).unwrap();
    let g = laplace_nll_grad(
        &Raster::new(w, h, mean.clone()).unwrap(),
        &Raster::new(w, h, raw.clone()).unwrap(),
        &gt,
    )
    .unwrap();
    // x = [mean..., raw...]
    let loss = |x: &[f64]| {
        let m = Raster::new(w, h, x[..n].to_vec()).unwrap();
        let s =
            SigmaRaster::new(Raster::new(w, h, x[n..].iter().map(|r| r.exp()).collect()).unwrap())
                .unwrap();
        laplace_nll(&m, &s, &gt).unwrap()
    };
    let x: Vec<f64> = mean.iter().chain(&raw).copied().collect();
    let analytic: Vec<f64> = g
        .d_mean
        .values()
        .iter()
        .chain(g.d_raw_sigma.values())
        .copied()
        .collect();
    (0..2 * n)
        .map(|i| {
            common::rel_err(
                analytic[i],
                common::central_diff(loss, &x, i, FD_STEP),
                FD_FLOOR,
            )
        })
        .fold(0.0, f64::max)
}

fn network_gradient_draw(rng: &mut ChaCha8Rng, seed: u64) -> f64 {
    let input = rng.random_range(1..=3);
    let depth = rng.random_range(1..=3);
    let mut sizes = vec![input];
    sizes.extend((0..depth).map(|_| rng.random_range(2..=6)));
    sizes.push(2);
    let plans = [
        DropoutPlan::None,
        DropoutPlan::FirstHalf,
        DropoutPlan::SecondHalf,
        DropoutPlan::All,
        DropoutPlan::FirstLayer,
        DropoutPlan::LastLayer,
    ];
    let plan = plans[rng.random_range(0..plans.len())];
    let config = ToyNetConfig::new(sizes, plan, 0.25).unwrap();
    let params = init_params(&config, seed);
    let batch = rng.random_range(1..=4);
    let inputs: Vec<Vec<f64>> = (0..batch)
        .map(|_| (0..input).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect();
    let masks: Vec<Option<DropoutMasks>> = (0..batch)
        .map(|_| {
            config
                .has_dropout()
                .then(|| DropoutMasks::sample(&config, rng))
        })
        .collect();
    let targets: Vec<f64> = inputs
        .iter()
        .zip(&masks)
        .map(|(x, m)| {
            let (mu, _) = forward(&params, &config, x, m.as_ref()).unwrap();
            loop {
                let t = mu + rng.random_range(-1.0..1.0);
                if (t - mu).abs() > KINK_MARGIN {
                    break t;
                }
            }
        })
        .collect();
    let refs: Vec<&[f64]> = inputs.iter().map(Vec::as_slice).collect();
    let (_, grads) = batch_loss_and_grad(&params, &config, &refs, &targets, &masks).unwrap();
    let loss = |flat: &[f64]| {
        let p = ToyNetParams::from_flat(&config, flat).unwrap();
        batch_loss_and_grad(&p, &config, &refs, &targets, &masks)
            .unwrap()
            .0
    };
    let flat = params.to_flat();
    let analytic = grads.to_flat();
    (0..flat.len())
        .map(|i| {
            common::rel_err(
                analytic[i],
                common::central_diff(loss, &flat, i, FD_STEP),
                FD_FLOOR,
            )
        })
        .fold(0.0, f64::max)
}

fn gradient_suite() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_loss = 0.0f64;
    let mut worst_net = 0.0f64;
    for draw in 0..100 {
        worst_loss = worst_loss.max(laplace_gradient_draw(&mut rng));
        worst_net = worst_net.max(network_gradient_draw(&mut rng, 1000 + draw));
    }
    let elapsed = start.elapsed();
    check(
        worst_loss <= FD_TOL && worst_net <= FD_TOL,
        format!("max relative error: loss {worst_loss:.2e}, network {worst_net:.2e} (limit 1e-5)"),
    )
    .and_then(|d| within(Duration::from_secs(30), elapsed, d))
}

// 3 ------------------------------------------------------------------------

fn calibration_sanity() -> Outcome {
    let cfg = DepthSceneConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut images = Vec::new();
    let mut pixels = 0;
    while pixels < 100_000 {
        let s = depthscene(&cfg, &mut rng).map_err(|e| e.to_string())?;
        pixels += s.ground_truth.valid_count();
        images.push((s.prediction, s.ground_truth));
    }
    let sel = MetricSelection {
        depth: false,
        auce: true,
        ause: false,
    };
    let eval = evaluate(&images, sel, Aggregation::Pooled).map_err(|e| e.to_string())?;
    let calibrated = eval.calibration.expect("auce requested").auce;

    let gt = DepthRaster::dense(
        Raster::row((0..1000).map(|i| 1.0 + i as f64 * 1e-3).collect()).unwrap(),
    )
    .unwrap();
    let mean = Raster::row((0..1000).map(|i| 1.5 + i as f64 * 1e-3).collect()).unwrap();
    let degenerate = |var: f64| {
        let v = Raster::filled(1000, 1, var).unwrap();
        let p = GaussianPrediction::from_parts(
            mean.clone(),
            Raster::filled(1000, 1, 0.0).unwrap(),
            v.clone(),
            v,
        )
        .unwrap();
        auce(&p, &gt).unwrap().auce
    };
    let wide = degenerate(1e300);
    let narrow = degenerate(1e-300);
    check(
        calibrated < 0.02 && (wide - 0.495).abs() < 1e-12 && (narrow - 0.505).abs() < 1e-12,
        format!(
            "self-consistent AUCE {calibrated:.4} over {pixels} px (limit 0.02); sigma->inf {wide}; sigma->0 {narrow}"
        ),
    )
}

// 4 ------------------------------------------------------------------------

fn sparsification_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 500;
    let gt: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..5.0)).collect();
    let pred: Vec<f64> = gt.iter().map(|d| d + rng.random_range(-0.5..0.5)).collect();
    let err: Vec<f64> = gt.iter().zip(&pred).map(|(a, b)| (a - b).abs()).collect();
    let gt_r = DepthRaster::dense(Raster::row(gt).unwrap()).unwrap();
    let perfect = ause_rmse(
        &Raster::row(err).unwrap(),
        &Raster::row(pred).unwrap(),
        &gt_r,
    )
    .map_err(|e| e.to_string())?
    .ause;

    let mut min_err = f64::INFINITY;
    let mut oracle_gap = 0.0f64;
    for _ in 0..1000 {
        let n = rng.random_range(100..400);
        let gt: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..8.0)).collect();
        let pred: Vec<f64> = gt
            .iter()
            .map(|d| d + rng.sample::<f64, _>(StandardNormal) * 0.3)
            .collect();
        // quantized so ties occur
        let unc: Vec<f64> = (0..n)
            .map(|_| (rng.random_range(0.0..1.0f64) * 20.0).round())
            .collect();
        let abs_err: Vec<f64> = gt.iter().zip(&pred).map(|(a, b)| (a - b).abs()).collect();
        let r = ause_rmse(
            &Raster::row(unc.clone()).unwrap(),
            &Raster::row(pred).unwrap(),
            &DepthRaster::dense(Raster::row(gt).unwrap()).unwrap(),
        )
        .map_err(|e| e.to_string())?;
        min_err = r.error_curve.iter().copied().fold(min_err, f64::min);
        let (cu, co) = common::brute_sparsification(&unc, &abs_err);
        for k in 0..100 {
            oracle_gap = oracle_gap
                .max((cu[k] - r.curve_by_uncertainty[k]).abs())
                .max((co[k] - r.curve_oracle[k]).abs());
        }
    }
    check(
        perfect == 0.0 && min_err >= -1e-9 && oracle_gap < 1e-12,
        format!(
            "AUSE with uncertainty = |error|: {perfect}; min error-curve value {min_err:.2e} (limit -1e-9); max gap to direct recomputation {oracle_gap:.1e}"
        ),
    )
}

// 5 ------------------------------------------------------------------------

/// Unit-scale asymmetric object: points on a few surfaces, several
/// thousand points, no symmetry that ICP could slide along.
fn icp_object(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vector3<f64>> {
    (0..n)
        .map(|_| match rng.random_range(0..4) {
            // ellipsoid shell
            0 => {
                let v = Vector3::new(
                    rng.sample::<f64, _>(StandardNormal),
                    rng.sample(StandardNormal),
                    rng.sample(StandardNormal),
                )
                .normalize();
                Vector3::new(0.8 * v.x, 0.5 * v.y, 0.3 * v.z) + Vector3::new(0.2, 0.0, 3.0)
            }
            // tilted ground plane patch
            1 => {
                let (a, b) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.5));
                Vector3::new(a, 0.6 + 0.1 * a, 3.0 + b)
            }
            // back wall with a ridge
            2 => {
                let (a, b): (f64, f64) = (rng.random_range(-1.0..1.2), rng.random_range(-1.0..0.6));
                Vector3::new(a, b, 4.2 + 0.2 * (3.0 * a).sin())
            }
            // box corner
            _ => {
                let (a, b) = (rng.random_range(0.0..0.5), rng.random_range(0.0..0.5));
                match rng.random_range(0..3) {
                    0 => Vector3::new(-0.9 + a, 0.1 + b, 2.4),
                    1 => Vector3::new(-0.9, 0.1 + a, 2.4 + b),
                    _ => Vector3::new(-0.9 + a, 0.1, 2.4 + b),
                }
            }
        })
        .collect()
}

fn icp_recovery() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let truth = RigidTransform::from_axis_angle(
        Vector3::new(0.3, 1.0, -0.2),
        10f64.to_radians(),
        Vector3::new(0.3, 0.0, 0.0).normalize() * 0.3,
    );
    let source_pts = icp_object(&mut rng, 6000);
    let target_pts: Vec<_> = source_pts.iter().map(|p| truth.apply(p)).collect();
    let cloud = |pts: Vec<Vector3<f64>>| {
        let n = pts.len();
        UncertainPointCloud::new(pts, vec![0.01; n]).unwrap()
    };

    let start = Instant::now();
    let clean_cfg = IcpConfig {
        max_corr_dist: Some(1.0),
        ..IcpConfig::default()
    };
    let clean = icp_align(
        &cloud(source_pts.clone()),
        &cloud(target_pts.clone()),
        &clean_cfg,
    )
    .map_err(|e| e.to_string())?;
    let clean_time = start.elapsed();
    let clean_r = rotation_error_deg(&clean.transform, &truth);
    let clean_t = (clean.transform.translation() - truth.translation()).norm();

    // 5% gross outliers in both clouds
    let mut noisy_src = source_pts;
    let mut noisy_tgt = target_pts;
    for cloud in [&mut noisy_src, &mut noisy_tgt] {
        let k = cloud.len() / 19;
        for _ in 0..k {
            cloud.push(Vector3::new(
                rng.random_range(-1.5..1.5),
                rng.random_range(-1.5..1.0),
                rng.random_range(2.0..5.0),
            ));
        }
    }
    // coarse pass with a loose gate, then refine with the adaptive gate
    let start = Instant::now();
    let (src, tgt) = (cloud(noisy_src), cloud(noisy_tgt));
    let coarse = icp_align(&src, &tgt, &clean_cfg).map_err(|e| e.to_string())?;
    let gated_cfg = IcpConfig {
        initial: coarse.transform,
        ..IcpConfig::default()
    };
    let gated = icp_align(&src, &tgt, &gated_cfg).map_err(|e| e.to_string())?;
    let gated_time = start.elapsed();
    let gated_r = rotation_error_deg(&gated.transform, &truth);
    let gated_t = (gated.transform.translation() - truth.translation()).norm();

    let limit = Duration::from_secs(10);
    check(
        clean_r < 0.1 && clean_t < 1e-3 && gated_r < 0.5 && gated_t < 1e-2 && clean_time < limit && gated_time < limit,
        format!(
            "clean {clean_r:.4} deg / {clean_t:.2e} m in {:.2}s; 5% outliers {gated_r:.4} deg / {gated_t:.2e} m in {:.2}s",
            clean_time.as_secs_f64(),
            gated_time.as_secs_f64()
        ),
    )
}

// 6 ------------------------------------------------------------------------

fn sweep_trend() -> Outcome {
    let start = Instant::now();
    let cfg = PairSetConfig::default();
    let pairs: Vec<CloudPair> = (0..64u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(6000 + i);
            synthetic_pair(&cfg, &mut rng).and_then(|p| p.clouds(&cfg))
        })
        .collect::<duq_core::Result<_>>()
        .map_err(|e| e.to_string())?;
    let rows = percentile_sweep(&pairs, &DEFAULT_PERCENTILES, &IcpConfig::default())
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let t: Vec<f64> = rows.iter().map(|r| r.rmse_t()).collect();
    let best = t.iter().copied().fold(f64::INFINITY, f64::min);
    let table = rows
        .iter()
        .map(|r| {
            format!(
                "{:.2}:{:.4}m/{:.3}deg",
                r.percentile,
                r.rmse_t(),
                r.rmse_r()
            )
        })
        .collect::<Vec<_>>()
        .join(" ");
    check(
        (t[3] < t[6] || t[4] < t[6]) && t[0] > best && rows.iter().all(|r| r.n_failed == 0),
        table,
    )
    .and_then(|d| within(Duration::from_secs(120), elapsed, d))
}

// 7 ------------------------------------------------------------------------

fn toy_data(seed: u64, n: usize, noise: NoiseKind) -> (Dataset, Regress1dConfig) {
    let cfg = Regress1dConfig {
        noise,
        ..Default::default()
    };
    let d = regress1d(&cfg, n, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
    (Dataset::from_xy(&d.x, &d.y).unwrap(), cfg)
}

fn grid(a: f64, b: f64, n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| vec![a + (b - a) * i as f64 / (n - 1) as f64])
        .collect()
}

fn mean_epistemic(set: &PredictiveSampleSet) -> f64 {
    let v = fuse_samples(set).var_epistemic;
    v.values().iter().sum::<f64>() / v.len() as f64
}

fn epistemic_ood() -> Outcome {
    let start = Instant::now();
    let settings = TrainSettings {
        epochs: 60,
        learning_rate: 3e-3,
        ..Default::default()
    };
    let inside = grid(-2.0, 2.0, 41);
    let outside: Vec<Vec<f64>> = grid(-6.0, -4.0, 21)
        .into_iter()
        .chain(grid(4.0, 6.0, 21))
        .collect();
    let results: Vec<(bool, bool)> = (0..50u64)
        .into_par_iter()
        .map(|trial| {
            let (data, _) = toy_data(7000 + trial, 512, NoiseKind::Hetero);
            let dropout_cfg = ToyNetConfig::mlp(1, 32, 2, DropoutPlan::All, 0.1).unwrap();
            let m = train(&dropout_cfg, &data, &settings, 7100 + trial).unwrap();
            let mc = |x: &[Vec<f64>]| {
                mean_epistemic(
                    &mc_dropout_sample(&m.params, &dropout_cfg, x, 32, 7200 + trial).unwrap(),
                )
            };
            let mc_ok = mc(&outside) > mc(&inside);

            let plain = dropout_cfg.without_dropout();
            let seeds: Vec<u64> = (0..8).map(|k| 7300 + 8 * trial + k).collect();
            let ens = train_ensemble(&plain, &data, &settings, &seeds).unwrap();
            let es = |x: &[Vec<f64>]| mean_epistemic(&ensemble_sample(&ens, x).unwrap());
            (mc_ok, es(&outside) > es(&inside))
        })
        .collect();
    let mc = results.iter().filter(|r| r.0).count();
    let ens = results.iter().filter(|r| r.1).count();
    check(
        mc >= 45 && ens >= 45,
        format!(
            "OOD epistemic above in-distribution: MC dropout {mc}/50, ensemble {ens}/50 (need 45); {:.1}s",
            start.elapsed().as_secs_f64()
        ),
    )
}

// 8 ------------------------------------------------------------------------

fn aleatoric_recovery() -> Outcome {
    let (data, cfg) = toy_data(8, 4000, NoiseKind::Hetero);
    let settings = TrainSettings {
        epochs: 150,
        learning_rate: 3e-3,
        ..Default::default()
    };
    let config = ToyNetConfig::mlp(1, 32, 2, DropoutPlan::None, 0.0).unwrap();
    let model = train(&config, &data, &settings, 81).map_err(|e| e.to_string())?;
    let xs = grid(-1.95, 1.95, 200);
    let sigma: Vec<f64> = xs
        .iter()
        .map(|x| forward(&model.params, &config, x, None).unwrap().1.exp())
        .collect();
    let b: Vec<f64> = xs.iter().map(|x| cfg.noise_b(x[0])).collect();
    let r = common::pearson(&sigma, &b);
    check(
        r > 0.8,
        format!("Pearson r(sigma, b) = {r:.3} on 200 held-out grid points (need > 0.8)"),
    )
}

// 9 ------------------------------------------------------------------------

fn format_round_trips() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let kinds = [
        PlaneKind::Depth,
        PlaneKind::Sigma,
        PlaneKind::Var,
        PlaneKind::Mask,
    ];
    for i in 0..100 {
        // raster
        let (w, h) = (rng.random_range(1..20), rng.random_range(1..20));
        let mut b = RasterBundle::new(w, h);
        for _ in 0..rng.random_range(1..5) {
            let kind = kinds[rng.random_range(0..4)];
            let values: Vec<f32> = (0..w * h)
                .map(|_| match kind {
                    PlaneKind::Mask => f32::from(u8::from(rng.random_bool(0.5))),
                    PlaneKind::Depth => rng.random_range(-1.0e3..1.0e3),
                    _ => rng.random_range(0.0..50.0),
                })
                .collect();
            b.push_f32(kind, values).unwrap();
        }
        let path = dir.path().join(format!("r{i}.duq"));
        duq_core::io::write_raster(&b, &path).map_err(|e| e.to_string())?;
        let first = std::fs::read(&path).unwrap();
        let back = duq_core::io::read_raster(&path).map_err(|e| e.to_string())?;
        duq_core::io::write_raster(&back, &path).unwrap();
        if std::fs::read(&path).unwrap() != first {
            return Err(format!("raster instance {i} changed on rewrite"));
        }

        // PLY
        let n = rng.random_range(0..60);
        let pts: Vec<Vector3<f64>> = (0..n)
            .map(|_| {
                Vector3::new(
                    rng.random_range(-5.0..5.0),
                    rng.random_range(-5.0..5.0),
                    rng.random_range(0.1..9.0),
                )
            })
            .collect();
        let sig: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0)).collect();
        let cloud = UncertainPointCloud::new(pts, sig.clone()).unwrap();
        let path = dir.path().join(format!("c{i}.ply"));
        let comments = vec![format!("seed {i}")];
        duq_core::io::write_ply(&path, &cloud, &comments).unwrap();
        let first = std::fs::read(&path).unwrap();
        let back = duq_core::io::read_ply(&path).map_err(|e| e.to_string())?;
        duq_core::io::write_ply(&path, &back.cloud, &back.comments).unwrap();
        let f32_ok = back
            .cloud
            .sigma()
            .iter()
            .zip(&sig)
            .all(|(a, b)| *a == f64::from(*b as f32));
        if std::fs::read(&path).unwrap() != first || !f32_ok || back.comments != comments {
            return Err(format!("PLY instance {i} did not round-trip"));
        }

        // checkpoint
        let plan =
            [DropoutPlan::None, DropoutPlan::All, DropoutPlan::FirstHalf][rng.random_range(0..3)];
        let config = ToyNetConfig::mlp(
            rng.random_range(1..4),
            rng.random_range(2..10),
            rng.random_range(1..4),
            plan,
            0.3,
        )
        .unwrap();
        let ck = Checkpoint {
            params: init_params(&config, i),
            config: config.clone(),
            seed: i,
            settings: TrainSettings::default(),
            steps: rng.random_range(0..1000),
        };
        let path = dir.path().join(format!("m{i}.duqm"));
        duq_core::io::write_checkpoint(&ck, &path).unwrap();
        let back = duq_core::io::read_checkpoint(&path).map_err(|e| e.to_string())?;
        for _ in 0..5 {
            let x: Vec<f64> = (0..config.input_dim())
                .map(|_| rng.random_range(-3.0..3.0))
                .collect();
            let a = forward(&ck.params, &ck.config, &x, None).unwrap();
            let b = forward(&back.params, &back.config, &x, None).unwrap();
            if a.0.to_bits() != b.0.to_bits() || a.1.to_bits() != b.1.to_bits() {
                return Err(format!("checkpoint instance {i} changed forward output"));
            }
        }
    }
    Ok("100 raster, PLY and checkpoint instances round-tripped".into())
}

// 10 -----------------------------------------------------------------------

fn m_sweep() -> Outcome {
    let (data, _) = toy_data(10, 2000, NoiseKind::Hetero);
    let settings = TrainSettings {
        epochs: 100,
        learning_rate: 3e-3,
        ..Default::default()
    };
    let config = ToyNetConfig::mlp(1, 64, 2, DropoutPlan::All, 0.2).unwrap();
    let model = train(&config, &data, &settings, 101).map_err(|e| e.to_string())?;
    let test_cfg = Regress1dConfig::default();
    let test = regress1d(&test_cfg, 2000, &mut ChaCha8Rng::seed_from_u64(102)).unwrap();
    let inputs: Vec<Vec<f64>> = test.x.iter().map(|&x| vec![x]).collect();
    let gt = DepthRaster::from_positive(Raster::row(test.y.clone()).unwrap());

    let ms = [1usize, 2, 4, 8, 16, 32];
    let mut rmse = Vec::new();
    let mut ause = Vec::new();
    for &m in &ms {
        let set = mc_dropout_sample(&model.params, &config, &inputs, m, 103)
            .map_err(|e| e.to_string())?;
        let g = fuse_samples(&set);
        rmse.push(depth_metrics(&g.mean, &gt).map_err(|e| e.to_string())?.rmse);
        ause.push(
            ause_rmse(&g.sigma_total(), &g.mean, &gt)
                .map_err(|e| e.to_string())?
                .ause,
        );
    }
    let mf: Vec<f64> = ms.iter().map(|&m| m as f64).collect();
    let (rho_rmse, rho_ause) = (common::spearman(&mf, &rmse), common::spearman(&mf, &ause));
    let fmt = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{x:.4}"))
            .collect::<Vec<_>>()
            .join(",")
    };
    check(
        rho_rmse <= 0.0 && rho_ause <= 0.0,
        format!(
            "M=1..32 rmse [{}] rho {rho_rmse:.2}; ause [{}] rho {rho_ause:.2}",
            fmt(&rmse),
            fmt(&ause)
        ),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("1 fusion matches mixture-moment oracle", fusion_oracle),
        ("2 gradients match central differences", gradient_suite),
        ("3 calibration sanity", calibration_sanity),
        ("4 sparsification properties", sparsification_properties),
        ("5 icp recovery", icp_recovery),
        ("6 certainty-percentile sweep trend", sweep_trend),
        (
            "7 epistemic variance rises out of distribution",
            epistemic_ood,
        ),
        ("8 aleatoric sigma tracks true noise", aleatoric_recovery),
        ("9 format round-trips", format_round_trips),
        ("10 more samples do not hurt", m_sweep),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("[PASS] criterion {name}: {d} [{secs:.1}s]"),
            Err(d) => {
                failed += 1;
                println!("[FAIL] criterion {name}: {d} [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
