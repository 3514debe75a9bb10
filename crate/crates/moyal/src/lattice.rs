//! The shared 1-D phase-space discretization.
//!
//! A [`Lattice`] owns the position grid, the conjugate momentum grid, ħ, and
//! the discrete Fourier conventions every transform in this crate must agree
//! on.  The grids satisfy the duality relation
//!
//! ```text
//! dq · dp · n_points = 2πħ        (exactly, by construction)
//! ```
//!
//! Conventions, fixed here once and reused everywhere:
//!
//! * position grid `q_i = q_min + i·dq`, `i = 0..N`, with `dq = (q_max−q_min)/N`
//!   (the right endpoint is excluded, as usual for periodic FFT grids);
//! * momentum grid `p_j = (j − N/2)·dp`, centered on zero;
//! * momentum wave functions `ψ̃(p) = h^{-1/2} ∫ ψ(q) e^{-ipq/ħ} dq` with
//!   `h = 2πħ`, so the Wigner integrand carries `e^{+2ips/ħ}`;
//! * symbols live natively on the *half-grid* of pair midpoints
//!   `(q' + q'')/2`, spacing `dq/2`, 2N−1 points.
//!
//! For even N the midpoint discretization carries a known double-cover
//! structure: symbols computed from operators are periodic alias pairs in
//! `p` with period `N·dp/2` up to a midpoint-parity sign.  All operations in
//! this crate either suppress the alias (band-limited interpolation of
//! kernels) or document where it surfaces.

use crate::error::{Error, Result};
use crate::fft::{self, Fft1d};
use ndarray::Array1;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Bare lattice parameters as they appear in configuration files.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LatticeParams {
    pub n_points: usize,
    pub q_min: f64,
    pub q_max: f64,
    pub hbar: f64,
}

/// Immutable position/momentum discretization shared by all operators,
/// states and symbols.
#[derive(Clone, Debug, Serialize)]
#[serde(into = "LatticeParams")]
pub struct Lattice {
    n_points: usize,
    q_min: f64,
    q_max: f64,
    hbar: f64,
    dq: f64,
    dp: f64,
}

impl From<Lattice> for LatticeParams {
    fn from(l: Lattice) -> Self {
        LatticeParams { n_points: l.n_points, q_min: l.q_min, q_max: l.q_max, hbar: l.hbar }
    }
}

impl<'de> Deserialize<'de> for Lattice {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let p = LatticeParams::deserialize(d)?;
        Lattice::new(p.n_points, p.q_min, p.q_max, p.hbar).map_err(serde::de::Error::custom)
    }
}

impl Lattice {
    /// Build a lattice.  `n_points` must be a power of two ≥ 8, the interval
    /// non-degenerate and `hbar > 0`; the momentum grid is derived from the
    /// duality relation, never stored independently.
    pub fn new(n_points: usize, q_min: f64, q_max: f64, hbar: f64) -> Result<Self> {
        if n_points < 8 || !n_points.is_power_of_two() {
            return Err(Error::InvalidLattice(format!(
                "n_points must be a power of two >= 8, got {n_points}"
            )));
        }
        if !(q_max > q_min) || !(q_max - q_min).is_finite() {
            return Err(Error::InvalidLattice(format!(
                "degenerate interval [{q_min}, {q_max}]"
            )));
        }
        if !(hbar > 0.0) {
            return Err(Error::InvalidLattice(format!("hbar must be positive, got {hbar}")));
        }
        let dq = (q_max - q_min) / n_points as f64;
        let dp = 2.0 * PI * hbar / (n_points as f64 * dq);
        Ok(Self { n_points, q_min, q_max, hbar, dq, dp })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn q_min(&self) -> f64 {
        self.q_min
    }

    pub fn q_max(&self) -> f64 {
        self.q_max
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// Planck constant h = 2πħ.
    pub fn h(&self) -> f64 {
        2.0 * PI * self.hbar
    }

    pub fn dq(&self) -> f64 {
        self.dq
    }

    pub fn dp(&self) -> f64 {
        self.dp
    }

    /// i-th position grid point.
    pub fn q(&self, i: usize) -> f64 {
        self.q_min + i as f64 * self.dq
    }

    /// j-th momentum grid point (centered on zero).
    pub fn p(&self, j: usize) -> f64 {
        (j as f64 - self.n_points as f64 / 2.0) * self.dp
    }

    pub fn q_grid(&self) -> Array1<f64> {
        Array1::from_iter((0..self.n_points).map(|i| self.q(i)))
    }

    pub fn p_grid(&self) -> Array1<f64> {
        Array1::from_iter((0..self.n_points).map(|j| self.p(j)))
    }

    /// Half of the momentum-grid span, `N·dp/2`.
    pub fn p_half_span(&self) -> f64 {
        self.n_points as f64 * self.dp / 2.0
    }

    /// Number of half-grid midpoints, 2N−1.
    pub fn n_half(&self) -> usize {
        2 * self.n_points - 1
    }

    /// m-th midpoint `(q' + q'')/2` reachable by grid pairs; spacing dq/2.
    pub fn half_point(&self, m: usize) -> f64 {
        self.q_min + m as f64 * self.dq / 2.0
    }

    /// All 2N−1 midpoints reachable by grid pairs.
    pub fn half_grid(&self) -> Array1<f64> {
        Array1::from_iter((0..self.n_half()).map(|m| self.half_point(m)))
    }

    /// Index of `q0` on the half-grid, or an error if it is farther than
    /// `1e-12` (in units of dq/2) from any midpoint.
    pub fn half_index(&self, q0: f64) -> Result<usize> {
        let spacing = self.dq / 2.0;
        let raw = (q0 - self.q_min) / spacing;
        let m = raw.round();
        if (raw - m).abs() > 1e-12 * (1.0 + raw.abs()) || m < 0.0 || m as usize >= self.n_half() {
            return Err(Error::OffHalfGrid {
                q0,
                nearest: self.q_min + m.clamp(0.0, (self.n_half() - 1) as f64) * spacing,
                spacing,
            });
        }
        Ok(m as usize)
    }

    /// Phase-space cell area for half-grid symbols, `(dq/2)·dp`.
    pub fn half_cell(&self) -> f64 {
        0.5 * self.dq * self.dp
    }

    /// Momentum representation `ψ̃(p_j) = h^{-1/2} Σ_i dq ψ(q_i) e^{-i p_j q_i/ħ}`.
    pub fn to_momentum(&self, psi: &Array1<C64>) -> Array1<C64> {
        let n = self.n_points;
        assert_eq!(psi.len(), n, "state length must match lattice");
        let mut buf: Vec<C64> = psi
            .iter()
            .enumerate()
            .map(|(i, &v)| if i % 2 == 0 { v } else { -v })
            .collect();
        Fft1d::new(n).forward(&mut buf);
        let scale = self.dq / self.h().sqrt();
        Array1::from_iter((0..n).map(|j| {
            let phase = -self.p(j) * self.q_min / self.hbar;
            buf[j] * C64::new(0.0, phase).exp() * scale
        }))
    }

    /// Inverse of [`Lattice::to_momentum`].
    pub fn to_position(&self, psi_p: &Array1<C64>) -> Array1<C64> {
        let n = self.n_points;
        assert_eq!(psi_p.len(), n, "state length must match lattice");
        let mut buf: Vec<C64> = (0..n)
            .map(|j| {
                let phase = self.p(j) * self.q_min / self.hbar;
                psi_p[j] * C64::new(0.0, phase).exp()
            })
            .collect();
        Fft1d::new(n).inverse(&mut buf);
        let scale = self.dp / self.h().sqrt();
        Array1::from_iter((0..n).map(|i| {
            let v = buf[i] * scale;
            if i % 2 == 0 {
                v
            } else {
                -v
            }
        }))
    }

    /// Band-limited interpolation of a grid function onto the 2N-point fine
    /// grid (spacing dq/2); even entries reproduce the input.
    pub fn upsample(&self, f: &Array1<C64>) -> Array1<C64> {
        assert_eq!(f.len(), self.n_points);
        Array1::from(fft::upsample2(f.as_slice().expect("contiguous")))
    }

    /// ℓ² norm of a grid wave function with the dq measure.
    pub fn norm(&self, psi: &Array1<C64>) -> f64 {
        (psi.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.dq).sqrt()
    }

    /// Inner product ⟨a|b⟩ with the dq measure.
    pub fn inner(&self, a: &Array1<C64>, b: &Array1<C64>) -> C64 {
        a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum::<C64>() * self.dq
    }

    /// Check that another lattice is the same discretization.
    pub fn compatible(&self, other: &Lattice) -> Result<()> {
        let same = self.n_points == other.n_points
            && self.q_min == other.q_min
            && self.q_max == other.q_max
            && self.hbar == other.hbar;
        if same {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}
