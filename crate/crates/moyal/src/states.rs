//! Quantum states on the lattice: grid wave functions, density operators,
//! the localized Gaussian family, oscillator eigenstates, and the singular
//! directional kernel ρ₀ᵛ whose trace pairing produces phase-space
//! gradients.

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

/// A pure state sampled on the position grid.
#[derive(Clone, Debug)]
pub struct WaveFunction {
    pub lattice: Lattice,
    /// ψ(qᵢ) for each grid point.
    pub amplitudes: Array1<C64>,
}

impl WaveFunction {
    pub fn new(lattice: Lattice, amplitudes: Array1<C64>) -> Self {
        assert_eq!(amplitudes.len(), lattice.n_points());
        Self { lattice, amplitudes }
    }

    /// ℓ² norm with the dq measure.
    pub fn norm(&self) -> f64 {
        self.lattice.norm(&self.amplitudes)
    }

    /// Momentum-representation amplitudes ψ̃(pⱼ).
    pub fn momentum_amplitudes(&self) -> Array1<C64> {
        self.lattice.to_momentum(&self.amplitudes)
    }

    /// Position probability density |ψ(qᵢ)|².
    pub fn position_density(&self) -> Array1<f64> {
        self.amplitudes.mapv(|a| a.norm_sqr())
    }
}

/// An operator kernel ⟨q'|Â|q''⟩ on the grid, with the dq integration
/// measure: `(Âψ)(q_a) = Σ_b dq · K(a,b) ψ(q_b)`.
#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    pub lattice: Lattice,
    pub kernel: Array2<C64>,
    /// True only for kernels constructed as physical (positive, unit-trace)
    /// densities.  ρ₀ᵛ is exposed with `false`: it is a derivative of a
    /// quantizer, not a state, and consumers that need positivity reject it.
    pub is_state: bool,
}

impl OperatorMatrix {
    pub fn new(lattice: Lattice, kernel: Array2<C64>) -> Self {
        let n = lattice.n_points();
        assert_eq!(kernel.dim(), (n, n));
        Self { lattice, kernel, is_state: false }
    }

    /// Identity operator (kernel δ_{ab}/dq).
    pub fn identity(lattice: &Lattice) -> Self {
        let n = lattice.n_points();
        let mut kernel = Array2::zeros((n, n));
        let inv_dq = 1.0 / lattice.dq();
        for a in 0..n {
            kernel[[a, a]] = C64::new(inv_dq, 0.0);
        }
        Self::new(lattice.clone(), kernel)
    }

    /// Apply to a wave function with the dq measure.
    pub fn apply(&self, psi: &Array1<C64>) -> Array1<C64> {
        self.kernel.dot(psi) * C64::new(self.lattice.dq(), 0.0)
    }

    /// Operator product `Â·B̂` (kernel composition with the dq measure).
    pub fn matmul(&self, other: &OperatorMatrix) -> OperatorMatrix {
        self.lattice.compatible(&other.lattice).expect("operator lattice mismatch");
        let kernel = self.kernel.dot(&other.kernel) * C64::new(self.lattice.dq(), 0.0);
        OperatorMatrix::new(self.lattice.clone(), kernel)
    }

    /// Operator trace `Σ_a dq · K(a,a)`.
    pub fn trace(&self) -> C64 {
        self.kernel.diag().sum() * C64::new(self.lattice.dq(), 0.0)
    }

    /// ⟨ψ|Â|ψ⟩ with the dq measure.
    pub fn expectation(&self, psi: &Array1<C64>) -> C64 {
        let apsi = self.apply(psi);
        psi.iter().zip(apsi.iter()).map(|(a, b)| a.conj() * b).sum::<C64>()
            * C64::new(self.lattice.dq(), 0.0)
    }

    /// Hermiticity defect `max |K - K†|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.lattice.n_points();
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in a..n {
                let d = (self.kernel[[a, b]] - self.kernel[[b, a]].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Conjugate-transpose kernel.
    pub fn dagger(&self) -> OperatorMatrix {
        let kernel = self.kernel.t().mapv(|v| v.conj());
        OperatorMatrix::new(self.lattice.clone(), kernel)
    }
}

/// Initial phase-space point and unit deviation direction.
#[derive(Clone, Copy, Debug)]
pub struct PhaseSpaceDisplacement {
    /// x₀ = (q₀, p₀).
    pub x0: (f64, f64),
    /// Unit vector v = (v₁, v₂) for the initial deviation direction.
    pub v: (f64, f64),
}

impl PhaseSpaceDisplacement {
    /// Normalizes `v`; errors if it is (numerically) zero.
    pub fn new(x0: (f64, f64), v: (f64, f64)) -> Result<Self> {
        let n = (v.0 * v.0 + v.1 * v.1).sqrt();
        if !(n > 1e-14) || !n.is_finite() {
            return Err(Error::Config(format!("deviation direction {v:?} is degenerate")));
        }
        Ok(Self { x0, v: (v.0 / n, v.1 / n) })
    }
}

/// Gaussian state of width √ħ localized at x₀ = (q₀, p₀):
///
/// ```text
/// ψ_ħ(q) = (πħ)^{-1/4} exp( -(q-q₀)²/2ħ + i p₀ (q-q₀)/ħ )
/// ```
///
/// The sampled state is unit-normalized to spectral accuracy; no explicit
/// renormalization is applied.  Errors when the width √ħ is below 2·dq
/// (unresolvable); warns when x₀ is within 5√ħ of the box edge.
pub fn gaussian_state(lattice: &Lattice, x0: (f64, f64)) -> Result<WaveFunction> {
    let hbar = lattice.hbar();
    let width = hbar.sqrt();
    if width < 2.0 * lattice.dq() {
        return Err(Error::UnresolvableState(format!(
            "gaussian width sqrt(hbar) = {width:.3e} < 2 dq = {:.3e}",
            2.0 * lattice.dq()
        )));
    }
    let (q0, p0) = x0;
    if q0 - lattice.q_min() < 5.0 * width || lattice.q_max() - q0 < 5.0 * width {
        log::warn!("gaussian_state: q0 = {q0} within 5*sqrt(hbar) of the box edge");
    }
    if lattice.p_half_span() - p0.abs() < 5.0 * width {
        log::warn!("gaussian_state: p0 = {p0} within 5*sqrt(hbar) of the momentum edge");
    }
    let norm = (PI * hbar).powf(-0.25);
    let amplitudes = lattice.q_grid().mapv(|q| {
        let dqq = q - q0;
        C64::new(norm * (-dqq * dqq / (2.0 * hbar)).exp(), 0.0)
            * C64::new(0.0, p0 * dqq / hbar).exp()
    });
    Ok(WaveFunction::new(lattice.clone(), amplitudes))
}

/// n-th eigenstate of the unit-frequency harmonic oscillator,
/// `ψ_n(q) ∝ H_n(q/√ħ) e^{-q²/2ħ}`, sampled on the grid.
///
/// Uses the normalized Hermite-function recurrence, stable for moderate n.
pub fn oscillator_eigenstate(lattice: &Lattice, n: usize) -> WaveFunction {
    let hbar = lattice.hbar();
    let amplitudes = lattice.q_grid().mapv(|q| {
        let xi = q / hbar.sqrt();
        // φ₀ = π^{-1/4} e^{-ξ²/2},  φ_k = ξ√(2/k) φ_{k-1} − √((k-1)/k) φ_{k-2}
        let mut prev = 0.0f64;
        let mut cur = PI.powf(-0.25) * (-xi * xi / 2.0).exp();
        for k in 1..=n {
            let next = xi * (2.0 / k as f64).sqrt() * cur - ((k as f64 - 1.0) / k as f64).sqrt() * prev;
            prev = cur;
            cur = next;
        }
        C64::new(cur * hbar.powf(-0.25), 0.0)
    });
    WaveFunction::new(lattice.clone(), amplitudes)
}

/// Pure-state density ρ̂ = |ψ⟩⟨ψ| as a grid kernel ψ(q')·ψ*(q'').
pub fn density_from_pure(psi: &WaveFunction) -> OperatorMatrix {
    let n = psi.lattice.n_points();
    let mut kernel = Array2::zeros((n, n));
    for a in 0..n {
        for b in 0..n {
            kernel[[a, b]] = psi.amplitudes[a] * psi.amplitudes[b].conj();
        }
    }
    let mut op = OperatorMatrix::new(psi.lattice.clone(), kernel);
    op.is_state = true;
    op
}

/// The singular directional kernel ρ₀ᵛ:
///
/// ```text
/// ⟨q'|ρ₀ᵛ|q''⟩ = e^{i p₀ (q'-q'')/ħ} [ v₁ ∂_{q₀} + i v₂ (q'-q'')/ħ ] δ(q₀ - (q'+q'')/2)
/// ```
///
/// The midpoint delta is a Kronecker delta on the half-grid divided by
/// (dq/2); its q₀-derivative is the central difference over neighboring
/// midpoints.  Trace pairings with Heisenberg observables yield directional
/// phase-space gradients.  Not a physical state (`is_state = false`); q₀
/// must sit on the half-grid with both neighbors available.
pub fn singular_density_rho0v(
    lattice: &Lattice,
    disp: &PhaseSpaceDisplacement,
) -> Result<OperatorMatrix> {
    let (q0, p0) = disp.x0;
    let (v1, v2) = disp.v;
    let m0 = lattice.half_index(q0)?;
    if m0 == 0 || m0 + 1 >= lattice.n_half() {
        return Err(Error::OffHalfGrid {
            q0,
            nearest: lattice.half_point(m0.clamp(1, lattice.n_half() - 2)),
            spacing: lattice.dq() / 2.0,
        });
    }
    let n = lattice.n_points();
    let hbar = lattice.hbar();
    let half_step = lattice.dq() / 2.0;
    // δ'(q₀−μ) → [δ_{m₀+1}(μ) − δ_{m₀−1}(μ)] / (2·(dq/2)), δ_m = 1/(dq/2)
    let ddelta = 1.0 / (2.0 * half_step * half_step);
    let delta = 1.0 / half_step;
    let mut kernel: Array2<C64> = Array2::zeros((n, n));
    for a in 0..n {
        for b in 0..n {
            let m = a + b; // midpoint index of (q_a + q_b)/2 on the half-grid
            let mut val = C64::new(0.0, 0.0);
            if v1 != 0.0 {
                if m == m0 + 1 {
                    val += C64::new(v1 * ddelta, 0.0);
                } else if m + 1 == m0 {
                    val -= C64::new(v1 * ddelta, 0.0);
                }
            }
            if v2 != 0.0 && m == m0 {
                let u = lattice.q(a) - lattice.q(b);
                val += C64::new(0.0, v2 * u / hbar * delta);
            }
            if val != C64::new(0.0, 0.0) {
                let u = lattice.q(a) - lattice.q(b);
                kernel[[a, b]] = C64::new(0.0, p0 * u / hbar).exp() * val;
            }
        }
    }
    Ok(OperatorMatrix::new(lattice.clone(), kernel))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lattice() -> Lattice {
        Lattice::new(256, -12.0, 12.0, 1.0).unwrap()
    }

    #[test]
    fn ground_gaussian_value_and_norm() {
        let l = lattice();
        let psi = gaussian_state(&l, (0.0, 0.0)).unwrap();
        // ψ(0) = π^{-1/4} ≈ 0.7511
        let i0 = l.n_points() / 2;
        assert!((psi.amplitudes[i0].re - PI.powf(-0.25)).abs() < 1e-12);
        assert!((PI.powf(-0.25) - 0.7511).abs() < 1e-4);
        assert!((psi.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn boost_changes_phase_only() {
        let l = lattice();
        let still = gaussian_state(&l, (0.0, 0.0)).unwrap();
        let boosted = gaussian_state(&l, (0.0, 2.5)).unwrap();
        for i in 0..l.n_points() {
            assert!((still.amplitudes[i].norm() - boosted.amplitudes[i].norm()).abs() < 1e-14);
        }
    }

    #[test]
    fn displaced_gaussian_peaks_at_q0() {
        let l = lattice();
        let psi = gaussian_state(&l, (2.0, 0.0)).unwrap();
        let imax = (0..l.n_points())
            .max_by(|&a, &b| psi.amplitudes[a].norm().total_cmp(&psi.amplitudes[b].norm()))
            .unwrap();
        assert!((l.q(imax) - 2.0).abs() <= l.dq() / 2.0 + 1e-12);
    }

    #[test]
    fn unresolvable_width_rejected() {
        let l = Lattice::new(8, -12.0, 12.0, 1.0).unwrap(); // dq = 3
        assert!(matches!(gaussian_state(&l, (0.0, 0.0)), Err(Error::UnresolvableState(_))));
    }

    #[test]
    fn density_is_projector_with_unit_trace() {
        let l = lattice();
        let psi = gaussian_state(&l, (1.0, -0.5)).unwrap();
        let rho = density_from_pure(&psi);
        assert!(rho.is_state);
        assert!((rho.trace().re - 1.0).abs() < 1e-10);
        assert!(rho.trace().im.abs() < 1e-12);
        assert!(rho.hermiticity_defect() < 1e-12);
        // purity: ρ² = ρ
        let rho2 = rho.matmul(&rho);
        let defect = (&rho2.kernel - &rho.kernel)
            .iter()
            .map(|v| v.norm())
            .fold(0.0f64, f64::max);
        let scale = rho.kernel.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
        assert!(defect < 10.0 * l.dq() * scale, "projector defect {defect}");
    }

    #[test]
    fn orthogonal_states_have_orthogonal_densities() {
        let l = lattice();
        let psi0 = oscillator_eigenstate(&l, 0);
        let psi1 = oscillator_eigenstate(&l, 1);
        let rho0 = density_from_pure(&psi0);
        let rho1 = density_from_pure(&psi1);
        let overlap = rho0.matmul(&rho1).trace();
        assert!(overlap.norm() < 1e-10);
    }

    #[test]
    fn oscillator_states_are_normalized() {
        let l = lattice();
        for n in 0..10 {
            let psi = oscillator_eigenstate(&l, n);
            assert!((psi.norm() - 1.0).abs() < 1e-10, "n = {n}: {}", psi.norm());
        }
    }

    #[test]
    fn rho0v_requires_half_grid_point() {
        let l = lattice();
        let disp = PhaseSpaceDisplacement::new((0.01, 0.0), (1.0, 0.0)).unwrap();
        assert!(singular_density_rho0v(&l, &disp).is_err());
        let ok = PhaseSpaceDisplacement::new((l.dq() / 2.0 * 3.0 + l.q_min(), 0.0), (1.0, 0.0)).unwrap();
        assert!(singular_density_rho0v(&l, &ok).is_ok());
    }

    #[test]
    fn rho0v_v2_kernel_is_quantizer_times_momentum_difference() {
        // v = (0,1): kernel = i(q'-q'')/ħ × (quantizer-delta kernel)
        let l = lattice();
        let q0 = 0.0;
        let disp = PhaseSpaceDisplacement::new((q0, 0.0), (0.0, 1.0)).unwrap();
        let rho = singular_density_rho0v(&l, &disp).unwrap();
        let m0 = l.half_index(q0).unwrap();
        let n = l.n_points();
        for a in 0..n {
            for b in 0..n {
                let expect = if a + b == m0 {
                    let u = l.q(a) - l.q(b);
                    C64::new(0.0, u / l.hbar() / (l.dq() / 2.0))
                } else {
                    C64::new(0.0, 0.0)
                };
                assert!((rho.kernel[[a, b]] - expect).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn rho0v_is_linear_in_v() {
        let l = lattice();
        let q0 = l.half_point(l.n_points() + 5);
        let d1 = PhaseSpaceDisplacement { x0: (q0, 0.7), v: (1.0, 0.0) };
        let d2 = PhaseSpaceDisplacement { x0: (q0, 0.7), v: (0.0, 1.0) };
        let dmix = PhaseSpaceDisplacement { x0: (q0, 0.7), v: (0.6, 0.8) };
        let r1 = singular_density_rho0v(&l, &d1).unwrap();
        let r2 = singular_density_rho0v(&l, &d2).unwrap();
        let rmix = singular_density_rho0v(&l, &dmix).unwrap();
        let recon = &r1.kernel * C64::new(0.6, 0.0) + &r2.kernel * C64::new(0.8, 0.0);
        let defect = (&rmix.kernel - &recon).iter().map(|v| v.norm()).fold(0.0f64, f64::max);
        assert!(defect < 1e-8 / l.dq(), "linearity defect {defect}");
    }

    #[test]
    fn rho0v_pure_q_derivative_symmetries() {
        // v = (1,0), p0 = 0: the kernel is the q0-derivative of the midpoint
        // comb: Hermitian, and odd under reflection of both arguments
        // through q0
        let l = lattice();
        let m0 = l.n_points(); // q0 = 0 on the half-grid
        let q0 = l.half_point(m0);
        assert_eq!(q0, 0.0);
        let disp = PhaseSpaceDisplacement::new((q0, 0.0), (1.0, 0.0)).unwrap();
        let rho = singular_density_rho0v(&l, &disp).unwrap();
        let n = l.n_points();
        for a in 0..n {
            for b in 0..n {
                let herm = rho.kernel[[a, b]] - rho.kernel[[b, a]].conj();
                assert!(herm.norm() < 1e-10, "hermiticity at ({a},{b}): {herm}");
            }
        }
        // reflection through q0 = 0: q_i → −q_i is index i → N − i (interior)
        for a in 1..n {
            for b in 1..n {
                let refl = rho.kernel[[n - a, n - b]] + rho.kernel[[a, b]];
                assert!(refl.norm() < 1e-10, "reflection parity at ({a},{b}): {refl}");
            }
        }
    }
}
