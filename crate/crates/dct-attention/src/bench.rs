//! Scaling and error measurements with stable CSV output.
//!
//! Two experiments:
//!
//! - [`run_scaling_bench`] times the multi-head attention layer alone
//!   across sequence lengths and records the allocation-counter peak of
//!   one forward pass. Memory is reported as the peak number of matrix
//!   floats live above the pre-pass baseline (inputs, weights, and
//!   cached transform plans are the baseline), so the figure isolates
//!   what the pass itself keeps alive and is exactly reproducible.
//! - [`run_error_profile`] compares the compressed path and the
//!   reconstruction oracle against the exact baseline on one head,
//!   splitting the deviation into truncation loss and the gap opened by
//!   running softmax in the compressed domain.
//!
//! Timing uses the monotonic clock and reports the median of `reps`
//! passes after warm-up. Batches are simulated by looping the forward
//! pass and dividing both time and peak by the batch size, so reported
//! numbers are always per batch element. Runs are single-threaded; the
//! peak readings assume nothing else allocates matrices concurrently.

use crate::attention::{
    efficient_dct_attention, ideal_dct_attention, multi_head, project_qkv, vanilla_attention,
    AttentionKind, AttentionParams, MultiHeadParams,
};
use crate::dct::{n_bar_from_scale, shared_plan};
use crate::error::{Error, Result};
use crate::numerics::{frob_diff, AllocationCounter, Matrix, Rng};
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

/// Working-set cap for a single benchmark case, in floats (2 GiB of
/// f64). Cases predicted to exceed it are skipped, not run.
const WORKING_SET_CAP_FLOATS: u64 = 1 << 28;

/// Attention families selectable on the bench command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KindFamily {
    Vanilla,
    DctEfficient,
    DctIdeal,
    DctNaive,
}

impl KindFamily {
    pub fn parse(s: &str) -> Result<KindFamily> {
        match s {
            "vanilla" => Ok(KindFamily::Vanilla),
            "dct" => Ok(KindFamily::DctEfficient),
            "ideal" => Ok(KindFamily::DctIdeal),
            "naive" => Ok(KindFamily::DctNaive),
            other => Err(Error::invalid(
                "kinds",
                format!("unknown kind {other:?}; expected vanilla, dct, ideal, or naive"),
            )),
        }
    }

    fn with_n_bar(self, n_bar: usize) -> AttentionKind {
        match self {
            KindFamily::Vanilla => AttentionKind::Vanilla,
            KindFamily::DctEfficient => AttentionKind::DctEfficient { n_bar },
            KindFamily::DctIdeal => AttentionKind::DctIdeal { n_bar },
            KindFamily::DctNaive => AttentionKind::DctNaive { n_bar },
        }
    }

    /// Row label, e.g. `Vanilla` or `DCT-0.25`.
    fn label(self, scale: f64) -> String {
        match self {
            KindFamily::Vanilla => "Vanilla".to_string(),
            KindFamily::DctEfficient => format!("DCT-{scale}"),
            KindFamily::DctIdeal => format!("IDEAL-{scale}"),
            KindFamily::DctNaive => format!("NAIVE-{scale}"),
        }
    }
}

/// Scaling-benchmark parameters.
#[derive(Debug, Clone)]
pub struct ScalingConfig {
    pub lengths: Vec<usize>,
    pub scale: f64,
    pub kinds: Vec<KindFamily>,
    pub d: usize,
    pub heads: usize,
    pub batch: usize,
    pub reps: usize,
    pub seed: u64,
}

/// One measured (kind, length) cell of the scaling benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub kind: String,
    pub n: usize,
    pub batch: usize,
    pub n_bar: Option<usize>,
    pub reps: usize,
    pub time_ms_median: f64,
    pub peak_floats: u64,
}

/// One (n_bar, seed) cell of the error profile.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRecord {
    pub n: usize,
    pub d: usize,
    pub n_bar: usize,
    pub seed: u64,
    /// Frobenius error of the reconstructed weight matrix.
    pub frob_e: f64,
    /// Output deviation of the reconstruction oracle from the baseline.
    pub out_err_ideal: f64,
    /// Output deviation of the compressed path from the baseline.
    pub out_err_efficient: f64,
    /// Deviation between the compressed path and the oracle.
    pub relax_gap: f64,
}

/// Error-profile parameters. The comparison runs on a single head of
/// width `d / heads`.
#[derive(Debug, Clone)]
pub struct ErrorProfileConfig {
    pub n: usize,
    pub d: usize,
    pub heads: usize,
    pub n_bars: Vec<usize>,
    pub seeds: Vec<u64>,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Rough float count a case will keep live, used only for the skip guard.
fn predicted_working_set(family: KindFamily, n: usize, n_bar: usize, d: usize) -> u64 {
    let (n, n_bar, d) = (n as u64, n_bar as u64, d as u64);
    let shared = 4 * n * d;
    match family {
        KindFamily::Vanilla => n * n + shared,
        KindFamily::DctEfficient => n_bar * n_bar + n_bar * n + shared,
        // The oracle holds the exact weights and a reconstruction.
        KindFamily::DctIdeal => 2 * n * n + n_bar * n + shared,
        KindFamily::DctNaive => n_bar * n_bar + n_bar * n + shared,
    }
}

/// Run the scaling benchmark over every `(kind, length)` pair.
///
/// Per case: build input and weights from `seed`, run 3 warm-up passes
/// (these also populate the transform-plan cache), reset the allocation
/// counter, then time `reps` passes of `batch` forwards each. Cases
/// whose predicted working set exceeds the harness cap are reported to
/// stderr and skipped; the sweep continues.
pub fn run_scaling_bench(config: &ScalingConfig) -> Result<Vec<BenchRecord>> {
    validate_scaling(config)?;
    let mut records = Vec::new();
    for &family in &config.kinds {
        for &n in &config.lengths {
            let n_bar = n_bar_from_scale(n, config.scale);
            let case = format!("{} n={n}", family.label(config.scale));
            let predicted = predicted_working_set(family, n, n_bar, config.d);
            if predicted > WORKING_SET_CAP_FLOATS {
                eprintln!(
                    "skipping {case}: predicted working set of {predicted} floats exceeds cap of {WORKING_SET_CAP_FLOATS}"
                );
                continue;
            }
            records.push(measure_case(config, family, n, n_bar)?);
        }
    }
    sort_bench_records(&mut records);
    Ok(records)
}

fn validate_scaling(config: &ScalingConfig) -> Result<()> {
    if !(config.scale > 0.0 && config.scale <= 1.0) {
        return Err(Error::invalid(
            "bench",
            format!("scale {} must lie in (0, 1]", config.scale),
        ));
    }
    if config.reps < 3 {
        return Err(Error::invalid("bench", "reps must be at least 3"));
    }
    if config.batch == 0 {
        return Err(Error::invalid("bench", "batch must be at least 1"));
    }
    if config.lengths.is_empty() || config.kinds.is_empty() {
        return Err(Error::invalid("bench", "lengths and kinds must be non-empty"));
    }
    if config.heads == 0 || !config.d.is_multiple_of(config.heads) {
        return Err(Error::invalid(
            "bench",
            format!("width {} is not divisible into {} heads", config.d, config.heads),
        ));
    }
    Ok(())
}

fn measure_case(
    config: &ScalingConfig,
    family: KindFamily,
    n: usize,
    n_bar: usize,
) -> Result<BenchRecord> {
    let kind = family.with_n_bar(n_bar);
    let mut rng = Rng::new(config.seed);
    let x = Matrix::rand_uniform(&mut rng, n, config.d, -1.0, 1.0)?;
    let params = MultiHeadParams::init(&mut rng, config.d, config.heads)?;

    for _ in 0..3 {
        multi_head(&x, &params, kind)?;
    }

    AllocationCounter::reset();
    let baseline = AllocationCounter::live_floats();
    let mut times_ms = Vec::with_capacity(config.reps);
    for _ in 0..config.reps {
        let started = Instant::now();
        let mut outputs = Vec::with_capacity(config.batch);
        for _ in 0..config.batch {
            outputs.push(multi_head(&x, &params, kind)?);
        }
        times_ms.push(started.elapsed().as_secs_f64() * 1e3 / config.batch as f64);
    }
    let peak = AllocationCounter::peak_floats().saturating_sub(baseline) / config.batch as u64;

    Ok(BenchRecord {
        kind: family.label(config.scale),
        n,
        batch: config.batch,
        n_bar: kind.n_bar(),
        reps: config.reps,
        time_ms_median: median(&mut times_ms),
        peak_floats: peak,
    })
}

/// Run the error profile over every `(n_bar, seed)` pair.
///
/// Per case, on one head: compute the exact weights `E` and output,
/// roundtrip `E` through the truncated transform for `frob_e` and the
/// oracle output, run the compressed path, and record the Frobenius
/// deviations between the three outputs.
pub fn run_error_profile(config: &ErrorProfileConfig) -> Result<Vec<ErrorRecord>> {
    if config.heads == 0 || !config.d.is_multiple_of(config.heads) {
        return Err(Error::invalid(
            "error",
            format!("width {} is not divisible into {} heads", config.d, config.heads),
        ));
    }
    let d_head = config.d / config.heads;
    let mut records = Vec::new();
    for &n_bar in &config.n_bars {
        for &seed in &config.seeds {
            let plan = shared_plan(config.n, n_bar)?;
            let mut rng = Rng::new(seed);
            let x = Matrix::rand_uniform(&mut rng, config.n, config.d, -1.0, 1.0)?;
            let p = AttentionParams::init(&mut rng, config.d, d_head);

            let (q, k, v) = project_qkv(&x, &p)?;
            let e = crate::attention::attention_weights(&q, &k)?;
            let e_tilde =
                crate::dct::dct2_inverse(&plan, &crate::dct::dct2_forward(&plan, &e)?)?;

            let exact = vanilla_attention(&q, &k, &v)?;
            let ideal = ideal_dct_attention(&x, &p, &plan)?;
            let efficient = efficient_dct_attention(&x, &p, &plan)?;

            records.push(ErrorRecord {
                n: config.n,
                d: config.d,
                n_bar,
                seed,
                frob_e: frob_diff(&e_tilde, &e)?,
                out_err_ideal: frob_diff(&ideal, &exact)?,
                out_err_efficient: frob_diff(&efficient, &exact)?,
                relax_gap: frob_diff(&efficient, &ideal)?,
            });
        }
    }
    records.sort_by_key(|r| (r.n, r.n_bar, r.seed));
    Ok(records)
}

fn sort_bench_records(records: &mut [BenchRecord]) {
    records.sort_by(|a, b| {
        (&a.kind, a.n, a.n_bar).cmp(&(&b.kind, b.n, b.n_bar))
    });
}

/// Render a float with six significant digits.
fn fmt_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    format!("{x:.5e}")
}

/// A record type that knows its CSV header and field rendering.
pub trait CsvRecord {
    fn header() -> &'static str;
    fn fields(&self) -> String;
}

impl CsvRecord for BenchRecord {
    fn header() -> &'static str {
        "kind,n,batch,n_bar,reps,time_ms_median,peak_floats"
    }

    fn fields(&self) -> String {
        let mut line = String::new();
        let n_bar = self.n_bar.map_or(String::new(), |v| v.to_string());
        let _ = write!(
            line,
            "{},{},{},{},{},{},{}",
            self.kind,
            self.n,
            self.batch,
            n_bar,
            self.reps,
            fmt_sig6(self.time_ms_median),
            self.peak_floats
        );
        line
    }
}

impl CsvRecord for ErrorRecord {
    fn header() -> &'static str {
        "n,d,n_bar,seed,frob_E,out_err_ideal,out_err_efficient,relax_gap"
    }

    fn fields(&self) -> String {
        let mut line = String::new();
        let _ = write!(
            line,
            "{},{},{},{},{},{},{},{}",
            self.n,
            self.d,
            self.n_bar,
            self.seed,
            fmt_sig6(self.frob_e),
            fmt_sig6(self.out_err_ideal),
            fmt_sig6(self.out_err_efficient),
            fmt_sig6(self.relax_gap)
        );
        line
    }
}

/// Write records as CSV with a header line.
pub fn write_csv<R: CsvRecord>(records: &[R], path: &Path) -> Result<()> {
    let mut text = String::with_capacity(64 * (records.len() + 1));
    text.push_str(R::header());
    text.push('\n');
    for record in records {
        text.push_str(&record.fields());
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
