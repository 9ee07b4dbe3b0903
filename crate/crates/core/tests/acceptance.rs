//! Acceptance checks, run as a plain binary so every criterion prints its
//! `criterion N ... PASS|FAIL` line even when it passes. Criteria run one
//! after another, which keeps the timing checks free of CPU contention.
//! Denoising runs on the 64x64x40 clips are computed once and shared.

mod common;

use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use common::*;
use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tldenoise::blockmatch::block_match;
use tldenoise::linalg;
use tldenoise::patches::{extract_patch_into, serpentine_order, Parity, PatchGeometry};
use tldenoise::pipeline::{run_multipass, DenoiseConfig, Engine, Mode};
use tldenoise::transform::{
    closed_form_update, hard_threshold, LearnerState, MiniBatch, SparseCodes,
};
use tldenoise::video::{self, add_gaussian_noise, synth, Frame, Video};

const SIGMA: f64 = 20.0;
const NOISE_SEED: u64 = 20;

fn report(id: &str, name: &str, pass: bool, detail: String) -> bool {
    println!("criterion {id} {name}: {} ({detail})", if pass { "PASS" } else { "FAIL" });
    pass
}

struct Clip {
    clean: Video,
    noisy: Video,
}

fn clip(kind: synth::ClipKind) -> &'static Clip {
    static TRANSLATE: OnceLock<Clip> = OnceLock::new();
    static STATIC: OnceLock<Clip> = OnceLock::new();
    let cell = match kind {
        synth::ClipKind::Static => &STATIC,
        _ => &TRANSLATE,
    };
    cell.get_or_init(|| {
        let clean = synth::generate(kind, 64, 64, 40).unwrap();
        let noisy = add_gaussian_noise(&clean, SIGMA, NOISE_SEED).unwrap();
        Clip { clean, noisy }
    })
}

struct Run {
    db: f64,
    elapsed: Duration,
}

fn denoised(kind: synth::ClipKind, mode: Mode) -> &'static Run {
    static RUNS: [OnceLock<Run>; 6] = [const { OnceLock::new() }; 6];
    let k = match kind {
        synth::ClipKind::Static => 0,
        _ => 1,
    };
    let m = match mode {
        Mode::A1 => 0,
        Mode::A2 => 1,
        Mode::Dct3d => 2,
    };
    RUNS[k * 3 + m].get_or_init(|| {
        linalg::use_sequential_kernels();
        let c = clip(kind);
        let start = Instant::now();
        let out = run_multipass(&c.noisy, &DenoiseConfig::new(SIGMA).with_mode(mode)).unwrap();
        let elapsed = start.elapsed();
        let db = video::psnr(&c.clean, &out).unwrap().video_db;
        Run { db, elapsed }
    })
}

fn input_db(kind: synth::ClipKind) -> f64 {
    let c = clip(kind);
    video::psnr(&c.clean, &c.noisy).unwrap().video_db
}

fn criterion_01_sparse_coding_oracle() -> bool {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let w = random(&mut rng, 5, 5);
        let u = random(&mut rng, 5, 1);
        let alpha = rng.gen_range(0.0..1.5);
        let state = LearnerState::new(to_mat(&w), 0.5, 0.1).unwrap();
        let batch = MiniBatch::uniform(to_mat(&u), alpha).unwrap();
        let codes = state.sparse_code(&batch).unwrap();
        let x: Vec<f64> = (0..5).map(|i| codes.columns[(i, 0)]).collect();
        let d: Vec<f64> = mul(&w, &u).iter().map(|r| r[0]).collect();
        let ours = code_objective(&d, &x, alpha);
        worst = worst.max((ours - exhaustive_code_objective(&d, alpha)).abs());
        worst = worst.max((code_objective(&d, &hard_threshold(&d, alpha), alpha) - ours).abs());
    }
    let elapsed = start.elapsed();
    let pass = worst <= 1e-12 && elapsed < Duration::from_secs(10);
    report("1", "sparse coding equals exhaustive support search", pass, format!(
        "1000 instances, max |diff| {worst:.2e} <= 1e-12, {:.2}s < 10s",
        elapsed.as_secs_f64()
    ))
}

fn criterion_02_transform_update_oracle() -> bool {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_rel: f64 = 0.0;
    let mut beaten = 0usize;
    let mut perturbations = 0usize;
    for t in 0..100 {
        let n = 1 + t % 4;
        let (gamma, theta, beta) = random_triple(&mut rng, n);
        let (w, _) = closed_form_update(&to_mat(&gamma), &to_mat(&theta), beta).unwrap();
        let w = from_mat(&w);
        let ours = objective(&w, &gamma, &theta, beta);
        let oracle = numerical_minimum(&gamma, &theta, beta);
        worst_rel = worst_rel.max((ours - oracle) / oracle.abs().max(1e-12));
        for _ in 0..100 {
            let e = random(&mut rng, n, n);
            let scale = 1e-3 / frob2(&e).sqrt();
            perturbations += 1;
            if objective(&add_scaled(&w, scale, &e), &gamma, &theta, beta) <= ours {
                beaten += 1;
            }
        }
    }
    let elapsed = start.elapsed();

    // scalar cases against a grid search
    let grid_min = |g: f64, th: f64, b: f64| {
        (1..=300_000)
            .map(|i| i as f64 * 1e-5)
            .map(|w| (w, g * w * w - 2.0 * th * w + b * (w * w - w.ln())))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap()
            .0
    };
    let scalar = |g: f64, th: f64, b: f64| {
        closed_form_update(&Mat::from_fn(1, 1, |_, _| g), &Mat::from_fn(1, 1, |_, _| th), b)
            .unwrap()
            .0[(0, 0)]
    };
    let w1 = scalar(2.0, 1.0, 0.5);
    let grid_err = (w1 - grid_min(2.0, 1.0, 0.5)).abs();
    let (w_id, _) = closed_form_update(&Mat::identity(3, 3), &Mat::identity(3, 3), 1.0).unwrap();
    let id_err = (0..3)
        .flat_map(|i| (0..3).map(move |j| (i, j)))
        .map(|(i, j)| (w_id[(i, j)] - if i == j { 0.80902 } else { 0.0 }).abs())
        .fold(0.0, f64::max);

    let pass = worst_rel <= 1e-6
        && beaten == 0
        && perturbations >= 10_000
        && elapsed < Duration::from_secs(60)
        && grid_err <= 1e-4
        && id_err <= 1e-5;
    report("2", "closed-form update is the minimizer", pass, format!(
        "100 triples, worst relative gap to BFGS oracle {worst_rel:.2e} <= 1e-6, \
         {beaten}/{perturbations} perturbations not worse, {:.1}s < 60s, \
         scalar vs grid {grid_err:.1e} <= 1e-4, identity case off by {id_err:.1e} from 0.80902",
        elapsed.as_secs_f64()
    ))
}

fn criterion_03_accumulator_recursion() -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (n, rho, lambda0) = (12, 0.83, 0.01);
    let mut state = LearnerState::new(Mat::identity(n, n), rho, lambda0).unwrap();
    let mut batches = Vec::new();
    for _ in 0..50 {
        let u = random(&mut rng, n, 30);
        let x = random(&mut rng, n, 30);
        let batch = MiniBatch::uniform(to_mat(&u), 0.3).unwrap();
        state.accumulate(&batch, &SparseCodes { columns: to_mat(&x) }).unwrap();
        batches.push((u, x));
    }
    // explicit weighted sums, oldest batch weighted rho^49
    let mut gamma = zeros(n, n);
    let mut theta = zeros(n, n);
    let mut beta = 0.0;
    for (j, (u, x)) in batches.iter().enumerate() {
        let weight = rho.powi(49 - j as i32);
        gamma = add_scaled(&gamma, weight, &mul(u, &transpose(u)));
        theta = add_scaled(&theta, weight, &mul(u, &transpose(x)));
        beta += weight * lambda0 * frob2(u);
    }
    let rel = |a: &Dense, b: &Dense| frob2(&add_scaled(a, -1.0, b)).sqrt() / frob2(b).sqrt();
    let eg = rel(&from_mat(state.gamma()), &gamma);
    let et = rel(&from_mat(state.theta()), &theta);
    let eb = (state.beta() - beta).abs() / beta;
    let worst = eg.max(et).max(eb);
    let pass = worst <= 1e-10;
    report("3", "accumulators equal explicit weighted sums", pass, format!(
        "50 mini-batches, max relative error {worst:.2e} <= 1e-10"
    ))
}

fn criterion_04_pass_through_and_latency() -> bool {
    linalg::use_sequential_kernels();
    let c = clip(synth::ClipKind::Translate);
    let frames = &c.noisy.frames()[..12];
    let mut config = DenoiseConfig::new(SIGMA);
    config.alpha0 = 0.0;
    config.passes = 1;
    let mut engine = Engine::new(config, 64, 64).unwrap();
    let mut first_output = None;
    let mut outputs: Vec<Frame> = Vec::new();
    for (i, f) in frames.iter().enumerate() {
        if let Some(out) = engine.push_frame(f.clone()).unwrap() {
            first_output.get_or_insert(i);
            outputs.push(out);
        }
    }
    outputs.extend(engine.flush().unwrap());
    let max_err = outputs
        .iter()
        .zip(frames)
        .flat_map(|(a, b)| a.data().iter().zip(b.data()).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max);
    let latency = first_output.unwrap_or(usize::MAX);
    let pass = max_err <= 1e-8 && latency == 8 && outputs.len() == frames.len();
    report("4", "zero threshold passes frames through", pass, format!(
        "max |out - in| {max_err:.2e} <= 1e-8, latency {latency} frames (expected 8), {} of {} frames out",
        outputs.len(),
        frames.len()
    ))
}

fn criterion_05_denoising_gain() -> bool {
    let before = input_db(synth::ClipKind::Translate);
    let run = denoised(synth::ClipKind::Translate, Mode::A1);
    let baseline = denoised(synth::ClipKind::Translate, Mode::Dct3d);
    let gain = run.db - before;
    let pass = gain >= 6.0 && run.elapsed < Duration::from_secs(300);
    report("5", "denoising gain on the translating clip", pass, format!(
        "input {before:.3} dB, output {:.3} dB, gain {gain:.3} dB >= 6 dB \
         (fixed 3D DCT baseline {:.3} dB), {:.1}s < 300s",
        run.db,
        baseline.db,
        run.elapsed.as_secs_f64()
    ))
}

fn criterion_06_learned_beats_fixed() -> bool {
    let learned = denoised(synth::ClipKind::Translate, Mode::A1).db;
    let fixed = denoised(synth::ClipKind::Translate, Mode::Dct3d).db;
    let pass = learned >= fixed + 0.3;
    report("6", "learned transform beats the fixed 3D DCT", pass, format!(
        "learned {learned:.3} dB vs fixed {fixed:.3} dB, margin {:.3} dB >= 0.3 dB",
        learned - fixed
    ))
}

fn criterion_07_block_matching_advantage() -> bool {
    let a1 = denoised(synth::ClipKind::Translate, Mode::A1).db;
    let a2 = denoised(synth::ClipKind::Translate, Mode::A2).db;
    let s1 = denoised(synth::ClipKind::Static, Mode::A1).db;
    let s2 = denoised(synth::ClipKind::Static, Mode::A2).db;
    let pass = a2 >= a1 && (s2 - s1).abs() <= 0.2;
    report("7", "block matching helps under motion, neutral when static", pass, format!(
        "translating: matched {a2:.3} dB >= co-located {a1:.3} dB; \
         static: |{s2:.3} - {s1:.3}| = {:.3} dB <= 0.2 dB",
        (s2 - s1).abs()
    ))
}

fn criterion_08_block_matching_brute_force() -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (n, h, m, size) = (8usize, 21usize, 9usize, 32usize);
    let geom = PatchGeometry::new(n, n, m, size, size).unwrap();
    let mut mismatches = 0usize;
    let mut checked = 0usize;
    for _ in 0..50 {
        let buf: Vec<Frame> = (0..m)
            .map(|_| Frame::from_fn(size, size, |_, _| rng.gen_range(0..=255) as f64))
            .collect();
        for pos in serpentine_order(&geom, Parity::Even) {
            let rec = block_match(&buf, &geom, pos, h, h).unwrap();
            for slot in &rec.slots[1..] {
                checked += 1;
                if slot.distance != rescan_distance(&buf, n, h, pos, slot.depth) {
                    mismatches += 1;
                }
            }
        }
    }
    let pass = mismatches == 0;
    report("8", "block matching equals an exhaustive re-scan", pass, format!(
        "50 random 32x32x9 buffers, {checked} matches, {mismatches} mismatches"
    ))
}

/// Independent re-scan: every placement whose patch lies inside both the
/// frame and the window centred on the reference patch centre.
fn rescan_distance(buf: &[Frame], n: usize, h: usize, pos: (usize, usize), depth: usize) -> f64 {
    let mid = buf.len() / 2;
    let half_patch = (n as f64 - 1.0) / 2.0;
    let half_window = (h as f64 - 1.0) / 2.0;
    let (cy, cx) = (pos.0 as f64 + half_patch, pos.1 as f64 + half_patch);
    let frame = &buf[depth];
    let mut best = f64::INFINITY;
    for r in 0..=frame.height() - n {
        for c in 0..=frame.width() - n {
            let (top, bottom) = (r as f64, (r + n - 1) as f64);
            let (left, right) = (c as f64, (c + n - 1) as f64);
            if top < cy - half_window
                || bottom > cy + half_window
                || left < cx - half_window
                || right > cx + half_window
            {
                continue;
            }
            let mut ssd = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let d = frame.get(r + i, c + j) - buf[mid].get(pos.0 + i, pos.1 + j);
                    ssd += d * d;
                }
            }
            best = best.min(ssd.sqrt());
        }
    }
    best
}

fn criterion_09_condition_number_trend() -> bool {
    linalg::use_sequential_kernels();
    let c = clip(synth::ClipKind::Translate);
    let geom = PatchGeometry::new(8, 8, 9, 64, 64).unwrap();
    let order = serpentine_order(&geom, Parity::Even);
    let mut u = Mat::<f64>::zeros(geom.n(), order.len());
    for (j, &pos) in order.iter().enumerate() {
        extract_patch_into(&c.noisy.frames()[..9], &geom, pos, u.col_as_slice_mut(j)).unwrap();
    }
    let batch = MiniBatch::uniform(u, 1.9 * SIGMA).unwrap();
    let kappas: Vec<f64> = [1e-2, 1.0, 100.0]
        .iter()
        .map(|&lambda0| {
            let mut state = LearnerState::with_dct(8, 8, 9, 0.83, lambda0).unwrap();
            state.denoise_minibatch(&batch).unwrap();
            linalg::condition_number(state.w().as_ref()).unwrap()
        })
        .collect();
    let pass = kappas[0] > kappas[1] && kappas[1] > kappas[2] && kappas[2] < 1.5;
    report("9", "condition number falls as lambda0 grows", pass, format!(
        "kappa at lambda0 = 1e-2, 1, 100: {:.4}, {:.4}, {:.4}; strictly decreasing, last < 1.5",
        kappas[0], kappas[1], kappas[2]
    ))
}

fn criterion_10_cost_scaling() -> bool {
    linalg::use_sequential_kernels();
    let time = |h: usize, w: usize| {
        let clean = synth::generate(synth::ClipKind::Translate, h, w, 12).unwrap();
        let noisy = add_gaussian_noise(&clean, SIGMA, NOISE_SEED).unwrap();
        let mut config = DenoiseConfig::new(SIGMA);
        config.passes = 1;
        let start = Instant::now();
        run_multipass(&noisy, &config).unwrap();
        start.elapsed().as_secs_f64()
    };
    let small = time(64, 128);
    let large = time(128, 128);
    let ratio = large / small;
    let pass = (1.6..=2.8).contains(&ratio);
    report("10", "cost grows linearly with frame area", pass, format!(
        "12 frames, one pass: 64x128 {small:.1}s, 128x128 {large:.1}s, ratio {ratio:.2} in [1.6, 2.8]"
    ))
}

/// Not gating: runs only when `TLDENOISE_FULLSCALE_VIDEO` points at a clean
/// y4m video (for example a 288x352 sequence).
fn criterion_11_optional_full_scale() -> bool {
    let Ok(path) = std::env::var("TLDENOISE_FULLSCALE_VIDEO") else {
        println!("criterion 11 full-scale video: SKIP (not gating; set TLDENOISE_FULLSCALE_VIDEO)");
        return true;
    };
    linalg::use_sequential_kernels();
    let clean = video::read_video(&path, &video::Container::Y4m).unwrap();
    let noisy = add_gaussian_noise(&clean, SIGMA, NOISE_SEED).unwrap();
    let out = run_multipass(&noisy, &DenoiseConfig::new(SIGMA).with_mode(Mode::A2)).unwrap();
    let db = video::psnr(&clean, &out).unwrap().video_db;
    println!(
        "criterion 11 full-scale video: REPORT ({}x{}x{}, sigma 20, output {db:.3} dB; not gating)",
        clean.height(),
        clean.width(),
        clean.frame_count()
    );
    true
}

fn main() -> ExitCode {
    let criteria: [fn() -> bool; 11] = [
        criterion_01_sparse_coding_oracle,
        criterion_02_transform_update_oracle,
        criterion_03_accumulator_recursion,
        criterion_04_pass_through_and_latency,
        criterion_05_denoising_gain,
        criterion_06_learned_beats_fixed,
        criterion_07_block_matching_advantage,
        criterion_08_block_matching_brute_force,
        criterion_09_condition_number_trend,
        criterion_10_cost_scaling,
        criterion_11_optional_full_scale,
    ];
    let failed = criteria.iter().filter(|c| !c()).count();
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
