//! Thin wrappers around `rustfft` plus band-limited (zero-padding)
//! interpolation helpers.
//!
//! Sign convention: `forward` applies Σₖ x_k e^{-2πi jk/N}, `inverse` applies
//! the unnormalized Σₖ X_k e^{+2πi jk/N}.  All physical phase factors live in
//! [`crate::lattice::Lattice`].

use ndarray::{Array2, Axis};
use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// A pair of cached power-of-two FFT plans of one length.
pub(crate) struct Fft1d {
    pub len: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Fft1d {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            len,
            fwd: planner.plan_fft_forward(len),
            inv: planner.plan_fft_inverse(len),
        }
    }

    pub fn forward(&self, buf: &mut [C64]) {
        debug_assert_eq!(buf.len(), self.len);
        self.fwd.process(buf);
    }

    /// Unnormalized inverse transform (no 1/N).
    pub fn inverse(&self, buf: &mut [C64]) {
        debug_assert_eq!(buf.len(), self.len);
        self.inv.process(buf);
    }
}

/// Band-limited upsampling of a length-N sequence onto 2N points, with
/// caller-provided plans of length N and 2N.
///
/// Even output indices reproduce the input exactly; odd indices carry the
/// trigonometric interpolant.  The shared ±Nyquist coefficient is split in
/// half so real inputs stay real.
pub(crate) fn upsample2_with(x: &[C64], plan_n: &Fft1d, plan_2n: &Fft1d) -> Vec<C64> {
    let n = x.len();
    debug_assert_eq!(plan_n.len, n);
    debug_assert_eq!(plan_2n.len, 2 * n);
    let mut spec: Vec<C64> = x.to_vec();
    plan_n.forward(&mut spec);
    let mut padded = vec![C64::new(0.0, 0.0); 2 * n];
    let half = n / 2;
    padded[..half].copy_from_slice(&spec[..half]);
    padded[half] = 0.5 * spec[half];
    padded[2 * n - half] = 0.5 * spec[half];
    for j in 1..half {
        padded[2 * n - j] = spec[n - j];
    }
    plan_2n.inverse(&mut padded);
    let scale = 1.0 / n as f64;
    padded.iter_mut().for_each(|v| *v *= scale);
    padded
}

/// Band-limited upsampling of a length-N sequence onto 2N points.
pub(crate) fn upsample2(x: &[C64]) -> Vec<C64> {
    let n = x.len();
    upsample2_with(x, &Fft1d::new(n), &Fft1d::new(2 * n))
}

/// Two-dimensional band-limited upsampling, N×M → 2N×2M.
pub(crate) fn upsample2_2d(k: &Array2<C64>) -> Array2<C64> {
    let (rows, cols) = k.dim();
    let plan_c = Fft1d::new(cols);
    let plan_2c = Fft1d::new(2 * cols);
    let mut half_cols = Array2::zeros((rows, 2 * cols));
    for (r, row) in k.axis_iter(Axis(0)).enumerate() {
        let fine = upsample2_with(row.as_slice().expect("contiguous row"), &plan_c, &plan_2c);
        for (c, v) in fine.into_iter().enumerate() {
            half_cols[[r, c]] = v;
        }
    }
    let plan_r = Fft1d::new(rows);
    let plan_2r = Fft1d::new(2 * rows);
    let mut out = Array2::zeros((2 * rows, 2 * cols));
    let mut col_buf: Vec<C64> = Vec::with_capacity(rows);
    for c in 0..2 * cols {
        col_buf.clear();
        col_buf.extend(half_cols.column(c).iter().copied());
        let fine = upsample2_with(&col_buf, &plan_r, &plan_2r);
        for (r, v) in fine.into_iter().enumerate() {
            out[[r, c]] = v;
        }
    }
    out
}

/// Bluestein chirp-z transform: X_l = Σ_j x_j e^{-i α l j} for l = 0..L−1,
/// at arbitrary real frequency step α, via three FFTs of a fixed
/// power-of-two length.
///
/// The chirp spectrum depends only on (len_in, len_out, α), so one instance
/// amortizes over many input rows.
pub(crate) struct ChirpZ {
    len_in: usize,
    len_out: usize,
    fft: Fft1d,
    /// FFT of the chirp kernel e^{+i α k²/2}, arranged circularly.
    b_spec: Vec<C64>,
    /// e^{-i α j²/2} for the input twiddle.
    a_twiddle: Vec<C64>,
    /// e^{-i α l²/2} for the output twiddle.
    out_twiddle: Vec<C64>,
}

impl ChirpZ {
    pub fn new(len_in: usize, len_out: usize, alpha: f64) -> Self {
        let m = (len_in + len_out - 1).next_power_of_two();
        let fft = Fft1d::new(m);
        let chirp = |k: f64| C64::new(0.0, 0.5 * alpha * k * k).exp();
        let mut b = vec![C64::new(0.0, 0.0); m];
        b[0] = C64::new(1.0, 0.0);
        for k in 1..len_out {
            b[k] = chirp(k as f64);
        }
        for k in 1..len_in {
            b[m - k] = chirp(k as f64);
        }
        fft.forward(&mut b);
        let a_twiddle: Vec<C64> = (0..len_in).map(|j| chirp(j as f64).conj()).collect();
        let out_twiddle: Vec<C64> = (0..len_out).map(|l| chirp(l as f64).conj()).collect();
        Self { len_in, len_out, fft, b_spec: b, a_twiddle, out_twiddle }
    }

    pub fn run(&self, x: &[C64]) -> Vec<C64> {
        debug_assert_eq!(x.len(), self.len_in);
        let m = self.b_spec.len();
        let mut a = vec![C64::new(0.0, 0.0); m];
        for j in 0..self.len_in {
            a[j] = x[j] * self.a_twiddle[j];
        }
        self.fft.forward(&mut a);
        for (av, bv) in a.iter_mut().zip(self.b_spec.iter()) {
            *av *= *bv;
        }
        self.fft.inverse(&mut a);
        let scale = 1.0 / m as f64;
        (0..self.len_out).map(|l| a[l] * self.out_twiddle[l] * scale).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn upsample_reproduces_even_points_and_interpolates_gaussian() {
        let n = 64;
        let xs: Vec<f64> = (0..n).map(|i| -8.0 + 16.0 * i as f64 / n as f64).collect();
        let g: Vec<C64> = xs.iter().map(|&x| C64::new((-x * x / 2.0).exp(), 0.0)).collect();
        let fine = upsample2(&g);
        for i in 0..n {
            assert!((fine[2 * i] - g[i]).norm() < 1e-12);
        }
        // odd points must match the analytic Gaussian to spectral accuracy
        for i in 0..n - 1 {
            let x_mid = -8.0 + 16.0 * (i as f64 + 0.5) / n as f64;
            let expect = (-x_mid * x_mid / 2.0).exp();
            assert!(
                (fine[2 * i + 1].re - expect).abs() < 1e-10,
                "midpoint {i}: {} vs {expect}",
                fine[2 * i + 1].re
            );
            assert!(fine[2 * i + 1].im.abs() < 1e-12);
        }
    }

    #[test]
    fn chirp_z_matches_direct_sum() {
        let len_in = 13;
        let len_out = 29;
        let alpha = 0.377;
        let x: Vec<C64> = (0..len_in)
            .map(|j| C64::new((j as f64 * 0.3).sin(), (j as f64 * 0.7).cos()))
            .collect();
        let cz = ChirpZ::new(len_in, len_out, alpha);
        let got = cz.run(&x);
        for l in 0..len_out {
            let direct: C64 = x
                .iter()
                .enumerate()
                .map(|(j, &v)| v * C64::new(0.0, -alpha * (l * j) as f64).exp())
                .sum();
            assert!((got[l] - direct).norm() < 1e-10, "l = {l}: {} vs {direct}", got[l]);
        }
    }
}
