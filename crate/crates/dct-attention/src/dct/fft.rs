//! Power-of-two DCT-II/DCT-III via a single complex FFT.
//!
//! The forward route packs the input into an N-point complex FFT by the
//! even/odd reordering `v = [x0, x2, ..., x5, x3, x1]`, transforms it,
//! and peels the cosine coefficients off with the twiddle
//! `exp(-i*pi*k/2N)`. One length-N FFT per column replaces the length-2N
//! zero-padded transform a textbook reduction would use. The inverse
//! mirrors the same steps. Orthonormal scaling (the `alpha_k` weights)
//! is applied at the boundary so both directions match the explicit
//! cosine-matrix paths up to rounding.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Iterative radix-2 decimation-in-time FFT. `re`/`im` hold the signal
/// and are overwritten with its spectrum. Length must be a power of two.
fn fft_in_place(re: &mut [f64], im: &mut [f64]) {
    let n = re.len();
    debug_assert!(n.is_power_of_two());
    debug_assert_eq!(n, im.len());
    if n <= 1 {
        return;
    }

    // Bit-reversal permutation.
    let mut j = 0;
    for i in 0..n - 1 {
        if i < j {
            re.swap(i, j);
            im.swap(i, j);
        }
        let mut mask = n >> 1;
        while j & mask != 0 {
            j &= !mask;
            mask >>= 1;
        }
        j |= mask;
    }

    let mut len = 2;
    while len <= n {
        let ang = -2.0 * PI / len as f64;
        let (wr, wi) = (ang.cos(), ang.sin());
        let mut start = 0;
        while start < n {
            let (mut cr, mut ci) = (1.0, 0.0);
            for k in 0..len / 2 {
                let a = start + k;
                let b = a + len / 2;
                let tr = re[b] * cr - im[b] * ci;
                let ti = re[b] * ci + im[b] * cr;
                re[b] = re[a] - tr;
                im[b] = im[a] - ti;
                re[a] += tr;
                im[a] += ti;
                let ncr = cr * wr - ci * wi;
                ci = cr * wi + ci * wr;
                cr = ncr;
            }
            start += len;
        }
        len <<= 1;
    }
}

fn ifft_in_place(re: &mut [f64], im: &mut [f64]) {
    let n = re.len() as f64;
    for x in im.iter_mut() {
        *x = -*x;
    }
    fft_in_place(re, im);
    for x in re.iter_mut() {
        *x /= n;
    }
    for x in im.iter_mut() {
        *x = -*x / n;
    }
}

fn require_power_of_two(op: &'static str, n: usize) -> Result<()> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::invalid(
            op,
            format!("length {n} is not a power of two; use the cosine-matrix path instead"),
        ));
    }
    Ok(())
}

/// Orthonormal DCT-II of a power-of-two-length signal.
///
/// Output entry `k` equals `alpha_k * sum_m x[m] * cos(pi*(2m+1)*k / 2N)`
/// with `alpha_0 = sqrt(1/N)` and `alpha_k = sqrt(2/N)` otherwise.
pub fn makhoul_dct(x: &[f64]) -> Result<Vec<f64>> {
    let n = x.len();
    require_power_of_two("makhoul_dct", n)?;
    if n == 1 {
        return Ok(vec![x[0]]);
    }

    let mut re = vec![0.0; n];
    let mut im = vec![0.0; n];
    for m in 0..n.div_ceil(2) {
        re[m] = x[2 * m];
    }
    for m in 0..n / 2 {
        re[n - 1 - m] = x[2 * m + 1];
    }
    fft_in_place(&mut re, &mut im);

    let a0 = (1.0 / n as f64).sqrt();
    let ak = (2.0 / n as f64).sqrt();
    let mut out = vec![0.0; n];
    for k in 0..n {
        let ang = -PI * k as f64 / (2.0 * n as f64);
        let alpha = if k == 0 { a0 } else { ak };
        out[k] = alpha * (re[k] * ang.cos() - im[k] * ang.sin());
    }
    Ok(out)
}

/// Inverse of [`makhoul_dct`]: orthonormal DCT-III.
pub fn makhoul_idct(c: &[f64]) -> Result<Vec<f64>> {
    let n = c.len();
    require_power_of_two("makhoul_idct", n)?;
    if n == 1 {
        return Ok(vec![c[0]]);
    }

    // Undo the orthonormal weights: u[k] = sum_m x[m] cos(pi(2m+1)k/2N).
    let a0 = (1.0 / n as f64).sqrt();
    let ak = (2.0 / n as f64).sqrt();
    let unweight = |k: usize| c[k] / if k == 0 { a0 } else { ak };

    let mut re = vec![0.0; n];
    let mut im = vec![0.0; n];
    for k in 0..n {
        let ang = PI * k as f64 / (2.0 * n as f64);
        let xk = unweight(k);
        // The implicit extension has u[N] = 0.
        let xnk = if k == 0 { 0.0 } else { unweight(n - k) };
        re[k] = ang.cos() * xk + ang.sin() * xnk;
        im[k] = ang.sin() * xk - ang.cos() * xnk;
    }
    ifft_in_place(&mut re, &mut im);

    let mut x = vec![0.0; n];
    for m in 0..n.div_ceil(2) {
        x[2 * m] = re[m];
    }
    for m in 0..n / 2 {
        x[2 * m + 1] = re[n - 1 - m];
    }
    Ok(x)
}
