//! End-to-end acceptance suite. Each test prints a single
//! `criterion NN (<name>): PASS|FAIL` line (visible with
//! `cargo test --test acceptance -- --nocapture`) and holds a shared lock so
//! the allocation counters and wall-clock numbers are never measured
//! concurrently.

use std::panic::{catch_unwind, resume_unwind, AssertUnwindSafe};
use std::process::Command;
use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::Instant;

use dct_attention::attention::{
    self, ideal_dct_attention, project_qkv, vanilla_attention, vanilla_attention_vjp,
    AttentionKind, AttentionParams,
};
use dct_attention::bench::{
    run_error_profile, run_scaling_bench, write_csv, BenchRecord, ErrorProfileConfig,
    ErrorRecord, KindFamily, ScalingConfig,
};
use dct_attention::dct::{
    clear_plan_cache, dct_forward, dct_inverse, dct_matrix, makhoul_dct, makhoul_idct, DctPlan,
};
use dct_attention::numerics::{
    matmul, matmul_nt, matmul_tn, max_abs_diff, AllocationCounter, Matrix, Rng,
};
use dct_attention::transformer::{encoder_forward, EncoderConfig, EncoderWeights};

static GUARD: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    GUARD.lock().unwrap_or_else(|e| e.into_inner())
}

/// Run one criterion body under the suite lock and print its verdict.
fn criterion(num: u32, name: &str, body: impl FnOnce()) {
    let _g = serial();
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(body));
    let secs = start.elapsed().as_secs_f64();
    match outcome {
        Ok(()) => println!("criterion {num:02} ({name}): PASS [{secs:.2}s]"),
        Err(payload) => {
            println!("criterion {num:02} ({name}): FAIL [{secs:.2}s]");
            resume_unwind(payload);
        }
    }
}

fn random_matrix(seed: u64, rows: usize, cols: usize) -> Matrix {
    let mut rng = Rng::new(seed);
    Matrix::rand_uniform(&mut rng, rows, cols, -1.0, 1.0).unwrap()
}

#[test]
fn c01_transform_correctness() {
    criterion(1, "orthonormal transform", || {
        let start = Instant::now();
        for &n in &[1usize, 2, 3, 4, 7, 8, 16, 64, 128, 256, 512] {
            let d = dct_matrix(n, n).unwrap();
            let gram = matmul_nt(&d, &d).unwrap();
            let ortho = max_abs_diff(&gram, &Matrix::identity(n)).unwrap();
            assert!(ortho < 1e-10, "n={n}: |D D^T - I| = {ortho:.3e}");

            let plan = DctPlan::new(n, n).unwrap();
            let x = random_matrix(40 + n as u64, n, 4);
            let back = dct_inverse(&plan, &dct_forward(&plan, &x).unwrap()).unwrap();
            let roundtrip = max_abs_diff(&back, &x).unwrap();
            assert!(roundtrip < 1e-9, "n={n}: roundtrip error {roundtrip:.3e}");
        }
        // A constant signal compacts into the first coefficient alone.
        for &n in &[4usize, 7, 16, 64] {
            let c = 0.75;
            let plan = DctPlan::new(n, n).unwrap();
            let x = Matrix::from_fn(n, 1, |_, _| c);
            let coeffs = dct_forward(&plan, &x).unwrap();
            let dc = c * (n as f64).sqrt();
            assert!((coeffs.at(0, 0) - dc).abs() < 1e-12, "n={n}: leading coefficient");
            for i in 1..n {
                assert!(coeffs.at(i, 0).abs() < 1e-12, "n={n}: leaked into coefficient {i}");
            }
        }
        assert!(start.elapsed().as_secs_f64() < 5.0, "transform checks over budget");
    });
}

#[test]
fn c02_fft_path_matches_matrix_path() {
    criterion(2, "fft path equivalence", || {
        let start = Instant::now();
        for exp in 0..=10u32 {
            let n = 1usize << exp;
            let d = dct_matrix(n, n).unwrap();
            for trial in 0..10u64 {
                let x = random_matrix(2_000 + 100 * exp as u64 + trial, n, 1);
                let by_matrix = matmul(&d, &x).unwrap();
                let by_fft = makhoul_dct(x.data()).unwrap();
                let forward_gap = by_fft
                    .iter()
                    .zip(by_matrix.data())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max);
                assert!(forward_gap < 1e-9, "n={n} trial={trial}: forward gap {forward_gap:.3e}");

                let back_matrix = matmul_tn(&d, &by_matrix).unwrap();
                let back_fft = makhoul_idct(&by_fft).unwrap();
                let inverse_gap = back_fft
                    .iter()
                    .zip(back_matrix.data())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max);
                assert!(inverse_gap < 1e-9, "n={n} trial={trial}: inverse gap {inverse_gap:.3e}");
            }
        }
        assert!(start.elapsed().as_secs_f64() < 10.0, "fft checks over budget");
    });
}

#[test]
fn c03_compressed_orders_agree() {
    criterion(3, "compressed order equivalence", || {
        let start = Instant::now();
        let mut instances = 0usize;
        let mut worst = 0.0f64;
        for &n in &[4usize, 16, 64] {
            let mut n_bars = vec![1, (n / 4).max(1), n / 2, n];
            n_bars.dedup();
            for n_bar in n_bars {
                let plan = DctPlan::new(n, n_bar).unwrap();
                for seed in 0..10u64 {
                    let mut rng = Rng::new(9_000 + seed);
                    let x = Matrix::rand_uniform(&mut rng, n, 8, -1.0, 1.0).unwrap();
                    let p = AttentionParams::init(&mut rng, 8, 4);
                    let a = attention::naive_dct_attention(&x, &p, &plan).unwrap();
                    let b = attention::efficient_dct_attention(&x, &p, &plan).unwrap();
                    worst = worst.max(max_abs_diff(&a, &b).unwrap());
                    instances += 1;
                }
            }
        }
        assert!(instances >= 100, "only {instances} instances checked");
        assert!(worst < 1e-9, "largest gap between orderings: {worst:.3e}");
        assert!(start.elapsed().as_secs_f64() < 30.0, "equivalence sweep over budget");
    });
}

#[test]
fn c04_oracle_is_exact_at_full_rank() {
    criterion(4, "reconstruction oracle at full rank", || {
        for &n in &[8usize, 32] {
            let plan = DctPlan::new(n, n).unwrap();
            for seed in 0..20u64 {
                let mut rng = Rng::new(777 + seed);
                let x = Matrix::rand_uniform(&mut rng, n, 6, -1.0, 1.0).unwrap();
                let p = AttentionParams::init(&mut rng, 6, 3);
                let (q, k, v) = project_qkv(&x, &p).unwrap();
                let exact = vanilla_attention(&q, &k, &v).unwrap();
                let oracle = ideal_dct_attention(&x, &p, &plan).unwrap();
                let gap = max_abs_diff(&oracle, &exact).unwrap();
                assert!(gap < 1e-9, "n={n} seed={seed}: oracle gap {gap:.3e}");
            }
        }
    });
}

fn parse_error_csv(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn c05_error_profile_shape() {
    criterion(5, "truncation error profile", || {
        let config = ErrorProfileConfig {
            n: 64,
            d: 32,
            heads: 1,
            n_bars: vec![8, 16, 32, 64],
            seeds: vec![1, 2, 3],
        };
        let records = run_error_profile(&config).unwrap();
        assert_eq!(records.len(), 12);

        for &seed in &config.seeds {
            let per_seed: Vec<&ErrorRecord> =
                records.iter().filter(|r| r.seed == seed).collect();
            assert_eq!(per_seed.len(), 4);
            for pair in per_seed.windows(2) {
                assert!(pair[0].n_bar < pair[1].n_bar, "records are sorted by n_bar");
                assert!(
                    pair[1].frob_e <= pair[0].frob_e + 1e-12,
                    "seed {seed}: weight error rose from {} to {} as retained length grew",
                    pair[0].frob_e,
                    pair[1].frob_e
                );
            }
            let full = per_seed.last().unwrap();
            assert!(full.frob_e < 1e-9, "seed {seed}: full-rank weight error {}", full.frob_e);
            assert!(
                full.out_err_ideal < 1e-9,
                "seed {seed}: full-rank oracle output error {}",
                full.out_err_ideal
            );
            for r in &per_seed {
                if r.n_bar < config.n {
                    assert!(
                        r.relax_gap > 1e-6,
                        "seed {seed} n_bar {}: compressed softmax should not match the oracle",
                        r.n_bar
                    );
                }
            }
        }

        // The profile must survive serialization: six significant digits.
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("errors.csv");
        write_csv(&records, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("n,d,n_bar,seed,frob_E,out_err_ideal,out_err_efficient,relax_gap\n"));
        let rows = parse_error_csv(&text);
        assert_eq!(rows.len(), records.len());
        for (row, record) in rows.iter().zip(&records) {
            assert_eq!(row[0].parse::<usize>().unwrap(), record.n);
            assert_eq!(row[2].parse::<usize>().unwrap(), record.n_bar);
            assert_eq!(row[3].parse::<u64>().unwrap(), record.seed);
            for (text_value, value) in [
                (&row[4], record.frob_e),
                (&row[5], record.out_err_ideal),
                (&row[6], record.out_err_efficient),
                (&row[7], record.relax_gap),
            ] {
                let parsed: f64 = text_value.parse().unwrap();
                let denom = value.abs().max(1e-300);
                assert!(
                    (parsed - value).abs() / denom < 1e-5,
                    "csv rounding drifted: {parsed} vs {value}"
                );
            }
        }
    });
}

#[test]
fn c06_gradients_match_finite_differences() {
    criterion(6, "analytic gradients", || {
        let (n, d_head, h) = (8usize, 4usize, 1e-5f64);
        let mut worst = 0.0f64;
        for seed in 0..10u64 {
            let mut rng = Rng::new(31_000 + seed);
            let q = Matrix::rand_uniform(&mut rng, n, d_head, -1.0, 1.0).unwrap();
            let k = Matrix::rand_uniform(&mut rng, n, d_head, -1.0, 1.0).unwrap();
            let v = Matrix::rand_uniform(&mut rng, n, d_head, -1.0, 1.0).unwrap();
            let upstream = Matrix::rand_uniform(&mut rng, n, d_head, -1.0, 1.0).unwrap();

            let loss = |q: &Matrix, k: &Matrix, v: &Matrix| -> f64 {
                let out = vanilla_attention(q, k, v).unwrap();
                out.data().iter().zip(upstream.data()).map(|(o, u)| o * u).sum()
            };
            let (dq, dk, dv) = vanilla_attention_vjp(&q, &k, &v, &upstream).unwrap();

            for (which, analytic) in [(0, &dq), (1, &dk), (2, &dv)] {
                for i in 0..n {
                    for j in 0..d_head {
                        let mut plus = (q.clone(), k.clone(), v.clone());
                        let mut minus = (q.clone(), k.clone(), v.clone());
                        let (p_m, m_m) = match which {
                            0 => (&mut plus.0, &mut minus.0),
                            1 => (&mut plus.1, &mut minus.1),
                            _ => (&mut plus.2, &mut minus.2),
                        };
                        p_m.set(i, j, p_m.at(i, j) + h);
                        m_m.set(i, j, m_m.at(i, j) - h);
                        let fd = (loss(&plus.0, &plus.1, &plus.2)
                            - loss(&minus.0, &minus.1, &minus.2))
                            / (2.0 * h);
                        let rel = (analytic.at(i, j) - fd).abs() / fd.abs().max(1e-3);
                        worst = worst.max(rel);
                    }
                }
            }
        }
        assert!(worst < 1e-5, "largest relative gradient error: {worst:.3e}");
    });
}

/// One shared scaling run feeds both the memory and the wall-clock criteria.
fn scaling_records() -> &'static [BenchRecord] {
    static RECORDS: OnceLock<Vec<BenchRecord>> = OnceLock::new();
    RECORDS.get_or_init(|| {
        let config = ScalingConfig {
            lengths: vec![256, 512, 1024, 2048, 4096],
            scale: 0.25,
            kinds: vec![KindFamily::Vanilla, KindFamily::DctEfficient],
            d: 64,
            heads: 8,
            batch: 1,
            reps: 3,
            seed: 42,
        };
        run_scaling_bench(&config).unwrap()
    })
}

fn record_of<'a>(records: &'a [BenchRecord], kind: &str, n: usize) -> &'a BenchRecord {
    records
        .iter()
        .find(|r| r.kind == kind && r.n == n)
        .unwrap_or_else(|| panic!("no record for {kind} at n={n}"))
}

fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let count = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        let (lx, ly) = (x.ln(), y.ln());
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    (count * sxy - sx * sy) / (count * sxx - sx * sx)
}

#[test]
fn c07_memory_scaling() {
    criterion(7, "working-set scaling", || {
        let start = Instant::now();
        let records = scaling_records();
        let lengths = [256usize, 512, 1024, 2048, 4096];

        let slope_of = |kind: &str| {
            let points: Vec<(f64, f64)> = lengths
                .iter()
                .map(|&n| (n as f64, record_of(records, kind, n).peak_floats as f64))
                .collect();
            log_log_slope(&points)
        };
        let vanilla_slope = slope_of("Vanilla");
        let dct_slope = slope_of("DCT-0.25");
        assert!(vanilla_slope >= 1.9, "vanilla peak slope {vanilla_slope:.4}");
        assert!(dct_slope <= 1.3, "compressed peak slope {dct_slope:.4}");

        let ratio = record_of(records, "DCT-0.25", 2048).peak_floats as f64
            / record_of(records, "Vanilla", 2048).peak_floats as f64;
        assert!(ratio <= 0.4, "peak ratio at n=2048: {ratio:.4}");

        // Same configuration, fresh run: the peaks are not noisy.
        let rerun = run_scaling_bench(&ScalingConfig {
            lengths: vec![2048],
            scale: 0.25,
            kinds: vec![KindFamily::Vanilla, KindFamily::DctEfficient],
            d: 64,
            heads: 8,
            batch: 1,
            reps: 3,
            seed: 42,
        })
        .unwrap();
        for r in &rerun {
            assert_eq!(
                r.peak_floats,
                record_of(records, &r.kind, 2048).peak_floats,
                "peak for {} at n=2048 drifted between runs",
                r.kind
            );
        }

        // Cold single-head peaks against their closed-form predictions.
        let (n, n_bar, d) = (2048usize, 512usize, 64usize);
        let mut rng = Rng::new(4242);
        let x = Matrix::rand_uniform(&mut rng, n, d, -1.0, 1.0).unwrap();
        let p = AttentionParams::init(&mut rng, d, d);

        clear_plan_cache();
        AllocationCounter::reset();
        let baseline = AllocationCounter::live_floats();
        let (q, k, v) = project_qkv(&x, &p).unwrap();
        let out = vanilla_attention(&q, &k, &v).unwrap();
        let vanilla_peak = (AllocationCounter::peak_floats() - baseline) as f64;
        drop((q, k, v, out));
        let vanilla_model = (n * n + 3 * n * d + n * d) as f64;
        let vanilla_err = (vanilla_peak - vanilla_model).abs() / vanilla_model;
        assert!(
            vanilla_err < 0.10,
            "vanilla peak {vanilla_peak} vs model {vanilla_model} ({:.1}% off)",
            100.0 * vanilla_err
        );

        AllocationCounter::reset();
        let baseline = AllocationCounter::live_floats();
        let plan = DctPlan::new(n, n_bar).unwrap();
        let out = attention::efficient_dct_attention(&x, &p, &plan).unwrap();
        let efficient_peak = (AllocationCounter::peak_floats() - baseline) as f64;
        drop((plan, out));
        let efficient_model = (n_bar * n_bar + n_bar * n + 3 * n_bar * d + n * d) as f64;
        let efficient_err = (efficient_peak - efficient_model).abs() / efficient_model;
        assert!(
            efficient_err < 0.10,
            "compressed peak {efficient_peak} vs model {efficient_model} ({:.1}% off)",
            100.0 * efficient_err
        );

        assert!(start.elapsed().as_secs_f64() < 120.0, "memory criterion over budget");
    });
}

#[test]
fn c08_wall_clock_advantage() {
    criterion(8, "wall-clock advantage", || {
        let records = scaling_records();
        let dct = record_of(records, "DCT-0.25", 2048).time_ms_median;
        let vanilla = record_of(records, "Vanilla", 2048).time_ms_median;
        let ratio = dct / vanilla;
        assert!(
            ratio <= 0.7,
            "compressed path took {dct:.2} ms vs {vanilla:.2} ms (ratio {ratio:.3})"
        );
    });
}

#[test]
fn c09_encoder_smoke() {
    criterion(9, "encoder forward pass", || {
        let base = EncoderConfig {
            n_blocks: 4,
            d: 512,
            heads: 8,
            d_ff: 2048,
            max_len: 512,
            vocab_size: 512,
            attention: AttentionKind::Vanilla,
            seed: 21,
        };
        let weights = EncoderWeights::init(&base).unwrap();
        let mut rng = Rng::new(22);
        let ids: Vec<usize> =
            (0..128).map(|_| (rng.next_u64() % base.vocab_size as u64) as usize).collect();

        let run_kind = |kind: AttentionKind| -> Matrix {
            let config = EncoderConfig { attention: kind, ..base.clone() };
            encoder_forward(&ids, &weights, &config).unwrap()
        };

        let vanilla = run_kind(AttentionKind::Vanilla);
        let ideal_full = run_kind(AttentionKind::DctIdeal { n_bar: 128 });
        let efficient = run_kind(AttentionKind::DctEfficient { n_bar: 32 });
        let naive = run_kind(AttentionKind::DctNaive { n_bar: 32 });

        for (name, y) in [
            ("vanilla", &vanilla),
            ("ideal", &ideal_full),
            ("efficient", &efficient),
            ("naive", &naive),
        ] {
            assert_eq!(y.shape(), (128, 512), "{name} output shape");
            assert!(y.is_finite(), "{name} output has a non-finite entry");
        }

        let gap = max_abs_diff(&vanilla, &ideal_full).unwrap();
        assert!(gap < 1e-9, "full-rank oracle drifted from exact encoder: {gap:.3e}");
    });
}

fn run_cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_dct-attention"))
        .args(args)
        .output()
        .expect("binary should launch")
}

/// Bench CSV lines with the timing column blanked out.
fn mask_times(text: &str) -> String {
    text.lines()
        .map(|line| {
            let mut cols: Vec<&str> = line.split(',').collect();
            if cols.len() == 7 {
                cols[5] = "-";
            }
            cols.join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn c10_cli_is_deterministic() {
    criterion(10, "command-line determinism", || {
        let dir = tempfile::tempdir().unwrap();
        let bench_a = dir.path().join("bench_a.csv");
        let bench_b = dir.path().join("bench_b.csv");
        let bench_args = |out: &std::path::Path| {
            vec![
                "bench".to_string(),
                "--lengths".into(),
                "16,32".into(),
                "--scale".into(),
                "0.5".into(),
                "--kinds".into(),
                "vanilla,dct,ideal,naive".into(),
                "--d".into(),
                "16".into(),
                "--heads".into(),
                "2".into(),
                "--batch".into(),
                "2".into(),
                "--reps".into(),
                "3".into(),
                "--seed".into(),
                "7".into(),
                "--out".into(),
                out.display().to_string(),
            ]
        };
        for (path, label) in [(&bench_a, "first"), (&bench_b, "second")] {
            let args = bench_args(path);
            let strs: Vec<&str> = args.iter().map(String::as_str).collect();
            let output = run_cli(&strs);
            assert!(output.status.success(), "{label} bench run failed");
        }
        let a = std::fs::read_to_string(&bench_a).unwrap();
        let b = std::fs::read_to_string(&bench_b).unwrap();
        assert!(a.starts_with("kind,n,batch,n_bar,reps,time_ms_median,peak_floats\n"));
        assert_eq!(a.lines().count(), 1 + 4 * 2, "one row per (kind, length)");
        assert_eq!(mask_times(&a), mask_times(&b), "bench output varies run to run");

        let err_a = dir.path().join("err_a.csv");
        let err_b = dir.path().join("err_b.csv");
        for path in [&err_a, &err_b] {
            let out_arg = path.display().to_string();
            let output = run_cli(&[
                "error", "--n", "32", "--d", "16", "--heads", "1", "--nbar", "4,8,16,32",
                "--seeds", "1,2", "--out", &out_arg,
            ]);
            assert!(output.status.success(), "error run failed");
        }
        let ea = std::fs::read_to_string(&err_a).unwrap();
        let eb = std::fs::read_to_string(&err_b).unwrap();
        assert_eq!(ea, eb, "error profile varies run to run");
        assert_eq!(ea.lines().count(), 1 + 4 * 2);

        let selftest = run_cli(&["selftest", "--seed", "42"]);
        assert!(selftest.status.success(), "selftest exited non-zero");
        let stdout = String::from_utf8_lossy(&selftest.stdout);
        let ok_lines = stdout.lines().filter(|l| l.starts_with("ok ")).count();
        assert!(ok_lines >= 13, "selftest output:\n{stdout}");
        assert!(!stdout.contains("FAILED"), "selftest reported a failure:\n{stdout}");
    });
}
