//! Runtime invariant suite behind the `selftest` subcommand.
//!
//! Each check re-derives one of the properties the library is built on,
//! at sizes small enough to finish in seconds, and reports a named
//! pass/fail line. The suite is meant as a field diagnostic: if a port,
//! a compiler, or a numeric library breaks an assumption, the failing
//! property names it directly.

use crate::attention::{
    attention_weights, efficient_dct_attention, ideal_dct_attention, naive_dct_attention,
    project_qkv, vanilla_attention, vanilla_attention_vjp, AttentionParams, MultiHeadParams,
};
use crate::dct::{dct2_forward, dct2_inverse, dct_forward, dct_inverse, dct_matrix, DctPlan};
use crate::numerics::{
    frob_diff, matmul, matmul_nt, max_abs_diff, softmax_rows, AllocationCounter, Matrix, Rng,
};

type CheckResult = Result<(), String>;

fn check_against(name: &str, value: f64, bound: f64) -> CheckResult {
    if value < bound {
        Ok(())
    } else {
        Err(format!("{name}: {value:.3e} is not below {bound:.0e}"))
    }
}

fn rng_reference_stream(_seed: u64) -> CheckResult {
    let mut rng = Rng::new(1234567);
    let expect: [u64; 3] = [
        0x599e_d017_fb08_fc85,
        0x2c73_f084_5854_0fa5,
        0x883e_bce5_a3f2_7c77,
    ];
    for (i, want) in expect.into_iter().enumerate() {
        let got = rng.next_u64();
        if got != want {
            return Err(format!("draw {i}: got {got:#x}, want {want:#x}"));
        }
    }
    Ok(())
}

fn transform_orthonormality(_seed: u64) -> CheckResult {
    for n in [1usize, 2, 3, 4, 7, 8, 16, 64, 128] {
        let d = dct_matrix(n, n).map_err(|e| e.to_string())?;
        let gram = matmul_nt(&d, &d).map_err(|e| e.to_string())?;
        let err = max_abs_diff(&gram, &Matrix::identity(n)).map_err(|e| e.to_string())?;
        check_against(&format!("n={n}"), err, 1e-10)?;
    }
    Ok(())
}

fn transform_roundtrip(seed: u64) -> CheckResult {
    let mut rng = Rng::new(seed);
    for n in [2usize, 3, 8, 33, 64] {
        let plan = DctPlan::new(n, n).map_err(|e| e.to_string())?;
        let x = Matrix::rand_uniform(&mut rng, n, 4, -2.0, 2.0).map_err(|e| e.to_string())?;
        let back = dct_inverse(&plan, &dct_forward(&plan, &x).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let err = max_abs_diff(&back, &x).map_err(|e| e.to_string())?;
        check_against(&format!("n={n}"), err, 1e-9)?;
    }
    Ok(())
}

fn fft_matches_matrix_path(seed: u64) -> CheckResult {
    let mut rng = Rng::new(seed);
    for n in [2usize, 8, 64, 256] {
        let plan = DctPlan::new(n, n).map_err(|e| e.to_string())?;
        if !plan.fast_path() {
            return Err(format!("n={n} did not select the fft path"));
        }
        let x = Matrix::rand_uniform(&mut rng, n, 2, -1.0, 1.0).map_err(|e| e.to_string())?;
        let fast = dct_forward(&plan, &x).map_err(|e| e.to_string())?;
        let slow = matmul(plan.d_bar(), &x).map_err(|e| e.to_string())?;
        let err = max_abs_diff(&fast, &slow).map_err(|e| e.to_string())?;
        check_against(&format!("n={n}"), err, 1e-9)?;
    }
    Ok(())
}

fn truncation_error_monotone(seed: u64) -> CheckResult {
    let mut rng = Rng::new(seed);
    let n = 16;
    let e = Matrix::rand_uniform(&mut rng, n, n, 0.0, 1.0).map_err(|e| e.to_string())?;
    let mut last = f64::INFINITY;
    for n_bar in [2usize, 4, 8, 16] {
        let plan = DctPlan::new(n, n_bar).map_err(|e| e.to_string())?;
        let rec = dct2_inverse(&plan, &dct2_forward(&plan, &e).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let err = frob_diff(&rec, &e).map_err(|e| e.to_string())?;
        if err > last + 1e-12 {
            return Err(format!("error rose from {last:.3e} to {err:.3e} at n_bar={n_bar}"));
        }
        last = err;
    }
    check_against("full-rank residual", last, 1e-9)
}

fn softmax_rows_stochastic(seed: u64) -> CheckResult {
    let mut rng = Rng::new(seed);
    let a = Matrix::rand_uniform(&mut rng, 8, 8, -1000.0, 1000.0).map_err(|e| e.to_string())?;
    let s = softmax_rows(&a).map_err(|e| e.to_string())?;
    if !s.is_finite() {
        return Err("softmax produced a non-finite value".to_string());
    }
    for i in 0..s.rows() {
        let sum: f64 = s.row(i).iter().sum();
        check_against(&format!("row {i} sum deviation"), (sum - 1.0).abs(), 1e-12)?;
    }
    Ok(())
}

fn compressed_orders_equivalent(seed: u64) -> CheckResult {
    for offset in 0..4 {
        let mut rng = Rng::new(seed + offset);
        let x = Matrix::rand_uniform(&mut rng, 32, 8, -1.0, 1.0).map_err(|e| e.to_string())?;
        let p = AttentionParams::init(&mut rng, 8, 4);
        for n_bar in [1usize, 8, 16, 32] {
            let plan = DctPlan::new(32, n_bar).map_err(|e| e.to_string())?;
            let a = naive_dct_attention(&x, &p, &plan).map_err(|e| e.to_string())?;
            let b = efficient_dct_attention(&x, &p, &plan).map_err(|e| e.to_string())?;
            let err = max_abs_diff(&a, &b).map_err(|e| e.to_string())?;
            check_against(&format!("seed+{offset} n_bar={n_bar}"), err, 1e-9)?;
        }
    }
    Ok(())
}

fn oracle_exact_at_full_rank(seed: u64) -> CheckResult {
    for offset in 0..4 {
        let mut rng = Rng::new(seed + offset);
        let x = Matrix::rand_uniform(&mut rng, 16, 6, -1.0, 1.0).map_err(|e| e.to_string())?;
        let p = AttentionParams::init(&mut rng, 6, 3);
        let plan = DctPlan::new(16, 16).map_err(|e| e.to_string())?;
        let (q, k, v) = project_qkv(&x, &p).map_err(|e| e.to_string())?;
        let exact = vanilla_attention(&q, &k, &v).map_err(|e| e.to_string())?;
        let oracle = ideal_dct_attention(&x, &p, &plan).map_err(|e| e.to_string())?;
        let err = max_abs_diff(&oracle, &exact).map_err(|e| e.to_string())?;
        check_against(&format!("seed+{offset}"), err, 1e-9)?;
    }
    Ok(())
}

fn gradient_matches_finite_differences(seed: u64) -> CheckResult {
    let h = 1e-5;
    let mut rng = Rng::new(seed);
    let q = Matrix::rand_uniform(&mut rng, 8, 4, -1.0, 1.0).map_err(|e| e.to_string())?;
    let k = Matrix::rand_uniform(&mut rng, 8, 4, -1.0, 1.0).map_err(|e| e.to_string())?;
    let v = Matrix::rand_uniform(&mut rng, 8, 4, -1.0, 1.0).map_err(|e| e.to_string())?;
    let u = Matrix::rand_uniform(&mut rng, 8, 4, -1.0, 1.0).map_err(|e| e.to_string())?;
    let loss = |q: &Matrix, k: &Matrix, v: &Matrix| -> f64 {
        let out = vanilla_attention(q, k, v).expect("attention in selftest loss");
        out.data().iter().zip(u.data()).map(|(a, b)| a * b).sum()
    };
    let (dq, dk, dv) = vanilla_attention_vjp(&q, &k, &v, &u).map_err(|e| e.to_string())?;
    for (which, (m, dm)) in [(&q, &dq), (&k, &dk), (&v, &dv)].iter().enumerate() {
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                let mut plus = (*m).clone();
                plus.set(i, j, m.at(i, j) + h);
                let mut minus = (*m).clone();
                minus.set(i, j, m.at(i, j) - h);
                let (fp, fm) = match which {
                    0 => (loss(&plus, &k, &v), loss(&minus, &k, &v)),
                    1 => (loss(&q, &plus, &v), loss(&q, &minus, &v)),
                    _ => (loss(&q, &k, &plus), loss(&q, &k, &minus)),
                };
                let fd = (fp - fm) / (2.0 * h);
                let rel = (dm.at(i, j) - fd).abs() / fd.abs().max(1e-3);
                check_against(&format!("operand {which} entry ({i},{j})"), rel, 1e-5)?;
            }
        }
    }
    Ok(())
}

fn compressed_memory_stays_small(seed: u64) -> CheckResult {
    let (n, d, n_bar) = (256usize, 16, 64);
    let mut rng = Rng::new(seed);
    let x = Matrix::rand_uniform(&mut rng, n, d, -1.0, 1.0).map_err(|e| e.to_string())?;
    let p = AttentionParams::init(&mut rng, d, d);
    let plan = DctPlan::new(n, n_bar).map_err(|e| e.to_string())?;

    AllocationCounter::reset();
    let (q, k, v) = project_qkv(&x, &p).map_err(|e| e.to_string())?;
    drop(vanilla_attention(&q, &k, &v).map_err(|e| e.to_string())?);
    let largest_vanilla = AllocationCounter::largest_block_floats();
    if largest_vanilla != (n * n) as u64 {
        return Err(format!(
            "baseline should materialize an n x n = {} float matrix, largest was {largest_vanilla}",
            n * n
        ));
    }
    drop((q, k, v));

    AllocationCounter::reset();
    drop(efficient_dct_attention(&x, &p, &plan).map_err(|e| e.to_string())?);
    let largest = AllocationCounter::largest_block_floats();
    let bound = (n_bar * n).max(n * d) as u64;
    if largest > bound {
        return Err(format!(
            "compressed path allocated a block of {largest} floats, above max(n_bar*n, n*d) = {bound}"
        ));
    }
    Ok(())
}

fn attention_permutation_covariant(seed: u64) -> CheckResult {
    let mut rng = Rng::new(seed);
    let x = Matrix::rand_uniform(&mut rng, 12, 6, -1.0, 1.0).map_err(|e| e.to_string())?;
    let p = AttentionParams::init(&mut rng, 6, 6);
    let (q, k, v) = project_qkv(&x, &p).map_err(|e| e.to_string())?;
    let base = vanilla_attention(&q, &k, &v).map_err(|e| e.to_string())?;
    let rev = |m: &Matrix| Matrix::from_fn(m.rows(), m.cols(), |i, j| m.at(m.rows() - 1 - i, j));
    let permuted =
        vanilla_attention(&rev(&q), &rev(&k), &rev(&v)).map_err(|e| e.to_string())?;
    let err = max_abs_diff(&permuted, &rev(&base)).map_err(|e| e.to_string())?;
    check_against("reversal mismatch", err, 1e-12)
}

fn multi_head_composes(seed: u64) -> CheckResult {
    let mut rng = Rng::new(seed);
    let x = Matrix::rand_uniform(&mut rng, 16, 8, -1.0, 1.0).map_err(|e| e.to_string())?;
    let p = MultiHeadParams::init(&mut rng, 8, 2).map_err(|e| e.to_string())?;
    let vanilla = crate::attention::multi_head(&x, &p, crate::attention::AttentionKind::Vanilla)
        .map_err(|e| e.to_string())?;
    let ideal = crate::attention::multi_head(
        &x,
        &p,
        crate::attention::AttentionKind::DctIdeal { n_bar: 16 },
    )
    .map_err(|e| e.to_string())?;
    if vanilla.shape() != (16, 8) {
        return Err(format!("unexpected output shape {:?}", vanilla.shape()));
    }
    let err = max_abs_diff(&vanilla, &ideal).map_err(|e| e.to_string())?;
    check_against("full-rank oracle deviation", err, 1e-9)
}

fn weights_rows_sum_to_one(seed: u64) -> CheckResult {
    let mut rng = Rng::new(seed);
    let x = Matrix::rand_uniform(&mut rng, 10, 6, -1.0, 1.0).map_err(|e| e.to_string())?;
    let p = AttentionParams::init(&mut rng, 6, 3);
    let (q, k, _) = project_qkv(&x, &p).map_err(|e| e.to_string())?;
    let w = attention_weights(&q, &k).map_err(|e| e.to_string())?;
    for i in 0..w.rows() {
        let sum: f64 = w.row(i).iter().sum();
        check_against(&format!("row {i}"), (sum - 1.0).abs(), 1e-12)?;
    }
    Ok(())
}

type Check = (&'static str, fn(u64) -> CheckResult);

/// Run every invariant check, printing one line per property. Returns
/// the names of the failing properties, empty on success.
pub fn run(seed: u64) -> Vec<String> {
    let checks: &[Check] = &[
        ("rng-reference-stream", rng_reference_stream),
        ("transform-orthonormality", transform_orthonormality),
        ("transform-roundtrip", transform_roundtrip),
        ("fft-matches-matrix-path", fft_matches_matrix_path),
        ("truncation-error-monotone", truncation_error_monotone),
        ("softmax-rows-stochastic", softmax_rows_stochastic),
        ("attention-weights-stochastic", weights_rows_sum_to_one),
        ("attention-permutation-covariant", attention_permutation_covariant),
        ("compressed-orders-equivalent", compressed_orders_equivalent),
        ("oracle-exact-at-full-rank", oracle_exact_at_full_rank),
        ("gradient-matches-finite-differences", gradient_matches_finite_differences),
        ("compressed-memory-stays-small", compressed_memory_stays_small),
        ("multi-head-composes", multi_head_composes),
    ];
    let mut failures = Vec::new();
    for (name, check) in checks {
        match check(seed) {
            Ok(()) => println!("ok      {name}"),
            Err(reason) => {
                println!("FAILED  {name}: {reason}");
                failures.push(name.to_string());
            }
        }
    }
    failures
}
