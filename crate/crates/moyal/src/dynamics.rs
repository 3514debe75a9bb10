//! Hamiltonian construction, spectral time evolution, Heisenberg-picture
//! observables, the quantum trajectory X(x₀, t; ħ), and the two-parameter
//! smeared means ⟨A⟩(t, x₀; ħ, ε).
//!
//! Time evolution uses the full eigendecomposition of H (cheap at N ≤ 512),
//! so U(t) is available at arbitrary t with no time-step error.  Trace
//! pairings Tr[ρ̂ Â(t)] are evaluated in the eigenbasis at O(N²) per time
//! sample after a one-time O(N³) basis change.
//!
//! # Symbol evaluation and the window
//!
//! The quantum trajectory is the Weyl symbol of X̂(t) = U⁺ x̂ U at a point,
//! X(x₀,t;ħ) = 2 Tr[Δ(x₀) X̂(t)].  On an even-N lattice the sharp quantizer
//! pairing of an operator adds the symbol's alias partner at p₀ ± N·dp/2
//! (midpoint-parity signed); for observables with non-decaying symbols —
//! position and momentum themselves — the alias term is as large as the
//! value.  The trajectory machinery therefore pairs Δ(x₀) against
//! *windowed* observables Ŵ x̂(t) Ŵ, where Ŵ applies smooth compactly
//! supported phase-space windows that are identically 1 on the central
//! plateau and identically 0 near the box edge.  Inside the plateau the
//! windowed symbol equals the bare one to spectral accuracy while the alias
//! partner lands in the dead zone and vanishes; at t = 0 the evaluator
//! returns x₀ to rounding accuracy.  Evaluation points must stay in the
//! plateau — enforced by [`QuantumSystem::check_evaluation_point`] — and
//! every trajectory carries an escape monitor that reports the time at
//! which transported mass first reaches the plateau edge.

use crate::error::{Error, Result};
use crate::fft::Fft1d;
use crate::lattice::Lattice;
use crate::potential::HamiltonianSpec;
use crate::states::{
    density_from_pure, gaussian_state, OperatorMatrix, PhaseSpaceDisplacement, WaveFunction,
};
use crate::trajectory::{Provenance, Trajectory};
use crate::weyl::PhaseSpaceFunction;
use ndarray::{Array1, Array2};
use ndarray_linalg::Eigh;
use num_complex::Complex64 as C64;

/// Fraction of the box half-width where the q window roll begins.
const W_Q_PLATEAU: f64 = 0.60;
/// Fraction of the box half-width where the q window roll ends.
const W_Q_ZERO: f64 = 0.85;
/// Fraction of the momentum half-span where the p window roll begins.
const W_P_PLATEAU: f64 = 0.55;
/// Fraction of the momentum half-span where the p window roll ends.
const W_P_ZERO: f64 = 0.75;
/// Escape monitor threshold on the transported proxy mass.
const ESCAPE_MASS: f64 = 1e-6;

/// Erf-edged plateau window.  The Gaussian edge makes the window's
/// convolution kernel decay like a Gaussian, so the windowed observables
/// stay numerically local; by the roll's midpoint the profile has fallen to
/// 1/2 and it is ~1e−16 past the roll's end.
fn window_profile(x: f64, center: f64, half: f64, plateau: f64, zero: f64) -> f64 {
    let r = (x - center).abs() / half;
    let edge = 0.5 * (plateau + zero);
    let sigma = (zero - plateau) / 8.0;
    0.5 * libm::erfc((r - edge) / (std::f64::consts::SQRT_2 * sigma))
}

/// Build the spectral kinetic-energy kernel ⟨q'|p̂²/2|q''⟩ (Toeplitz).
fn kinetic_kernel(lattice: &Lattice) -> Array1<f64> {
    let n = lattice.n_points();
    let mut buf: Vec<C64> = (0..n)
        .map(|j| {
            let p = lattice.p(j);
            C64::new(0.5 * p * p, 0.0)
        })
        .collect();
    Fft1d::new(n).inverse(&mut buf); // Σ_j (p_j²/2) e^{+2πi jd/N}
    let scale = lattice.dp() / lattice.h();
    Array1::from_iter((0..n).map(|d| {
        let sign = if d % 2 == 0 { 1.0 } else { -1.0 };
        let v = buf[d] * sign * scale;
        debug_assert!(v.im.abs() < 1e-9 * (1.0 + v.re.abs()));
        v.re
    }))
}

/// Hamiltonian Ĥ = p̂²/2 + V(q̂) as a grid kernel (real symmetric).
pub fn build_hamiltonian(lattice: &Lattice, spec: &HamiltonianSpec) -> OperatorMatrix {
    let n = lattice.n_points();
    let t = kinetic_kernel(lattice);
    let inv_dq = 1.0 / lattice.dq();
    let mut kernel: Array2<C64> = Array2::zeros((n, n));
    for a in 0..n {
        for b in 0..n {
            let d = (a as i64 - b as i64).rem_euclid(n as i64) as usize;
            kernel[[a, b]] = C64::new(t[d], 0.0);
        }
        kernel[[a, a]] += C64::new(spec.potential.v(lattice.q(a)) * inv_dq, 0.0);
    }
    OperatorMatrix::new(lattice.clone(), kernel)
}

/// Heisenberg evolution Â(t) = U⁺(t) Â U(t) with U = e^{−itĤ/ħ}, by full
/// eigendecomposition of Ĥ.  Prefer [`QuantumSystem`] when evolving many
/// observables or times for the same Hamiltonian.
pub fn heisenberg_observable(
    h: &OperatorMatrix,
    op: &OperatorMatrix,
    t: f64,
) -> Result<OperatorMatrix> {
    let sys = QuantumSystem::from_hamiltonian(h.lattice.clone(), h)?;
    Ok(sys.heisenberg(op, t))
}

/// Spectral cache for one (lattice, Hamiltonian) pair plus the windowed
/// position/momentum observables and escape-monitor projectors.
pub struct QuantumSystem {
    pub lattice: Lattice,
    /// Eigenvalues of Ĥ, ascending.
    energies: Array1<f64>,
    /// ℓ²-orthonormal eigenvectors (columns), real.
    modes: Array2<f64>,
    /// Eigenvectors as complex, for basis changes.
    modes_c: Array2<C64>,
    /// Window amplitudes on the q and p grids.
    wq: Array1<f64>,
    wp: Array1<f64>,
    /// Bare x̂ observables in the eigenbasis.
    q_eig: Array2<C64>,
    p_eig: Array2<C64>,
    /// Strip indices (beyond the q/p plateaus) for the escape monitor.
    q_strip: Vec<usize>,
    p_strip: Vec<usize>,
}

impl QuantumSystem {
    /// Build the system from a Hamiltonian spec.
    pub fn new(lattice: &Lattice, spec: &HamiltonianSpec) -> Result<Self> {
        let h = build_hamiltonian(lattice, spec);
        Self::from_hamiltonian(lattice.clone(), &h)
    }

    /// Build the system from an explicit Hermitian Hamiltonian kernel.
    pub fn from_hamiltonian(lattice: Lattice, h: &OperatorMatrix) -> Result<Self> {
        lattice.compatible(&h.lattice)?;
        let n = lattice.n_points();
        let dq = lattice.dq();
        // ℓ² matrix of the Hamiltonian; must be real symmetric here
        let mut m = Array2::<f64>::zeros((n, n));
        for a in 0..n {
            for b in 0..n {
                let v = h.kernel[[a, b]];
                if v.im.abs() > 1e-9 * (1.0 + v.re.abs()) {
                    return Err(Error::Config(
                        "Hamiltonian kernel must be real symmetric (p²/2 + V(q) form)".into(),
                    ));
                }
                m[[a, b]] = v.re * dq;
            }
        }
        let (energies, modes) = m
            .eigh(ndarray_linalg::UPLO::Lower)
            .map_err(|e| Error::StepFailure(format!("eigensolve failed: {e}")))?;
        let modes_c = modes.mapv(|x| C64::new(x, 0.0));

        let q_center = 0.5 * (lattice.q_min() + lattice.q_max());
        let q_half = 0.5 * (lattice.q_max() - lattice.q_min());
        let p_half = lattice.p_half_span();
        let wq = lattice
            .q_grid()
            .mapv(|q| window_profile(q, q_center, q_half, W_Q_PLATEAU, W_Q_ZERO));
        let wp = lattice
            .p_grid()
            .mapv(|p| window_profile(p, 0.0, p_half, W_P_PLATEAU, W_P_ZERO));
        let q_strip: Vec<usize> = (0..n)
            .filter(|&a| ((lattice.q(a) - q_center) / q_half).abs() > W_Q_PLATEAU)
            .collect();
        let p_strip: Vec<usize> =
            (0..n).filter(|&j| (lattice.p(j) / p_half).abs() > W_P_PLATEAU).collect();

        let mut sys = Self {
            lattice,
            energies,
            modes,
            modes_c,
            wq,
            wp,
            q_eig: Array2::zeros((0, 0)),
            p_eig: Array2::zeros((0, 0)),
            q_strip,
            p_strip,
        };
        let mq = Array2::from_shape_fn((n, n), |(a, b)| {
            if a == b {
                C64::new(sys.lattice.q(a), 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let mp = sys.momentum_l2_matrix();
        sys.q_eig = sys.to_eigenbasis_l2(&mq);
        sys.p_eig = sys.to_eigenbasis_l2(&mp);
        Ok(sys)
    }

    pub fn energies(&self) -> &Array1<f64> {
        &self.energies
    }

    /// n-th eigenstate as a grid wave function.
    pub fn eigenstate(&self, n: usize) -> WaveFunction {
        let inv_sqrt_dq = 1.0 / self.lattice.dq().sqrt();
        let amps = Array1::from_iter(
            self.modes.column(n).iter().map(|&v| C64::new(v * inv_sqrt_dq, 0.0)),
        );
        WaveFunction::new(self.lattice.clone(), amps)
    }

    /// Schrödinger evolution of a state: ψ(t) = U(t) ψ.
    pub fn evolve_state(&self, psi: &Array1<C64>, t: f64) -> Array1<C64> {
        let sqrt_dq = self.lattice.dq().sqrt();
        let l2 = psi.mapv(|v| v * sqrt_dq);
        let c = self.modes_c.t().dot(&l2);
        let hbar = self.lattice.hbar();
        let phased = Array1::from_iter(
            c.iter()
                .zip(self.energies.iter())
                .map(|(&cv, &e)| cv * C64::new(0.0, -e * t / hbar).exp()),
        );
        self.modes_c.dot(&phased).mapv(|v| v / sqrt_dq)
    }

    /// ℓ² matrix of the spectral momentum operator.
    fn momentum_l2_matrix(&self) -> Array2<C64> {
        let n = self.lattice.n_points();
        let mut row: Vec<C64> = (0..n).map(|j| C64::new(self.lattice.p(j), 0.0)).collect();
        Fft1d::new(n).inverse(&mut row);
        let scale = self.lattice.dp() / self.lattice.h() * self.lattice.dq();
        Array2::from_shape_fn((n, n), |(a, b)| {
            let d = (a as i64 - b as i64).rem_euclid(n as i64) as usize;
            let sign = if (a + b) % 2 == 0 { 1.0 } else { -1.0 };
            row[d] * sign * scale
        })
    }

    /// Ŵ M Ŵ with Ŵ = Ŵ_q Ŵ_p (diagonal q window, FFT-applied p window).
    fn window_sandwich(&self, m_l2: &Array2<C64>) -> Array2<C64> {
        let n = m_l2.nrows();
        // Ŵq Ŵp M
        let mut k = m_l2.clone();
        self.apply_wp_left(&mut k);
        for a in 0..n {
            for b in 0..n {
                k[[a, b]] *= self.wq[a];
            }
        }
        // (... ) Ŵp Ŵq  =  ( Ŵq Ŵp (...)† )†
        let mut kd = k.t().mapv(|v| v.conj());
        self.apply_wp_left(&mut kd);
        for a in 0..n {
            for b in 0..n {
                kd[[a, b]] *= self.wq[a];
            }
        }
        kd.t().mapv(|v| v.conj())
    }

    /// Multiply Ŵp from the left: filter every column in the p representation.
    fn apply_wp_left(&self, m: &mut Array2<C64>) {
        let n = m.nrows();
        for b in 0..n {
            let col = Array1::from_iter(m.column(b).iter().copied());
            let mut pt = self.lattice.to_momentum(&col);
            for j in 0..n {
                pt[j] *= self.wp[j];
            }
            let back = self.lattice.to_position(&pt);
            for a in 0..n {
                m[[a, b]] = back[a];
            }
        }
    }

    /// Vᵀ (dq·K) V for a grid kernel.
    pub fn to_eigenbasis(&self, op: &OperatorMatrix) -> Array2<C64> {
        let m = op.kernel.mapv(|v| v * self.lattice.dq());
        self.to_eigenbasis_l2(&m)
    }

    fn to_eigenbasis_l2(&self, m_l2: &Array2<C64>) -> Array2<C64> {
        let vm = self.modes_c.t().dot(m_l2);
        vm.dot(&self.modes_c)
    }

    fn from_eigenbasis_l2(&self, m_eig: &Array2<C64>) -> Array2<C64> {
        let vm = self.modes_c.dot(m_eig);
        vm.dot(&self.modes_c.t())
    }

    /// Full Heisenberg-evolved observable kernel Â(t) = U⁺ Â U.
    pub fn heisenberg(&self, op: &OperatorMatrix, t: f64) -> OperatorMatrix {
        let hbar = self.lattice.hbar();
        let mut m = self.to_eigenbasis(op);
        let n = m.nrows();
        let phases: Vec<C64> =
            self.energies.iter().map(|&e| C64::new(0.0, e * t / hbar).exp()).collect();
        for a in 0..n {
            for b in 0..n {
                m[[a, b]] *= phases[a] * phases[b].conj();
            }
        }
        let back = self.from_eigenbasis_l2(&m);
        OperatorMatrix::new(self.lattice.clone(), back.mapv(|v| v / self.lattice.dq()))
    }

    /// Trace pairings Tr[ρ̂ Â(t)] for one density against one eigenbasis
    /// observable across many times, at O(N²) per time after the setup gemm.
    fn pairing_series(
        &self,
        rho_eig: &Array2<C64>,
        obs_eig: &Array2<C64>,
        times: &[f64],
    ) -> Vec<C64> {
        let n = rho_eig.nrows();
        let hbar = self.lattice.hbar();
        // w(a,b) = obs(a,b) ρ(b,a);  f(t) = Σ_ab w(a,b) e^{i(E_a−E_b)t/ħ}
        let w = Array2::from_shape_fn((n, n), |(a, b)| obs_eig[[a, b]] * rho_eig[[b, a]]);
        let t_len = times.len();
        let mut phi = Array2::<C64>::zeros((n, t_len));
        for (ti, &t) in times.iter().enumerate() {
            for a in 0..n {
                phi[[a, ti]] = C64::new(0.0, self.energies[a] * t / hbar).exp();
            }
        }
        let y = w.dot(&phi.mapv(|v| v.conj()));
        (0..t_len).map(|ti| (0..n).map(|a| phi[[a, ti]] * y[[a, ti]]).sum()).collect()
    }

    /// Windowed sharp quantizer Ŵ Δ(x₀) Ŵ as an ℓ² matrix in the eigenbasis.
    ///
    /// Pairing this against the bare evolved x̂(t) equals pairing the bare
    /// quantizer against the windowed observable Ŵ x̂(t) Ŵ (cyclic trace).
    fn quantizer_eig(&self, x0: (f64, f64)) -> Result<Array2<C64>> {
        let delta = crate::weyl::quantizer_matrix(&self.lattice, x0)?;
        let windowed = self.window_sandwich(&delta.kernel.mapv(|v| v * self.lattice.dq()));
        Ok(self.to_eigenbasis_l2(&windowed))
    }

    /// Quantum trajectory values (Q, P)(t) at one evaluation point, without
    /// escape enforcement.
    pub(crate) fn trajectory_points(
        &self,
        x0: (f64, f64),
        times: &[f64],
    ) -> Result<Vec<(f64, f64)>> {
        let rho = self.quantizer_eig(x0)?;
        let fq = self.pairing_series(&rho, &self.q_eig, times);
        let fp = self.pairing_series(&rho, &self.p_eig, times);
        Ok(fq.iter().zip(fp.iter()).map(|(a, b)| (2.0 * a.re, 2.0 * b.re)).collect())
    }

    /// Validate that x₀ sits inside the window plateau where symbol
    /// evaluation is alias-free.
    pub fn check_evaluation_point(&self, x0: (f64, f64)) -> Result<()> {
        let (q0, p0) = x0;
        let q_center = 0.5 * (self.lattice.q_min() + self.lattice.q_max());
        let q_half = 0.5 * (self.lattice.q_max() - self.lattice.q_min());
        let p_half = self.lattice.p_half_span();
        let q_ok = (q0 - q_center).abs() <= W_Q_PLATEAU * q_half;
        // the alias partner at p₀ ± N·dp/2 must land beyond the p dead zone
        let p_ok = p0.abs() <= (1.0 - W_P_ZERO) * p_half;
        if q_ok && p_ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "evaluation point ({q0}, {p0}) outside the windowed plateau \
                 (|q−c| <= {:.3}, |p| <= {:.3})",
                W_Q_PLATEAU * q_half,
                (1.0 - W_P_ZERO) * p_half
            )))
        }
    }

    /// First requested time at which the transported proxy mass beyond the
    /// window plateau exceeds 1e−6; returns `times.last()` if never.
    ///
    /// The proxy is the width-√ħ Gaussian at x₀, evolved exactly; its mass
    /// beyond the q/p plateaus tracks how much of the local phase-space
    /// neighborhood of x₀ the flow has carried toward the box edge.
    pub fn escape_time(&self, x0: (f64, f64), times: &[f64]) -> Result<f64> {
        let proxy = gaussian_state(&self.lattice, x0)?;
        let sqrt_dq = self.lattice.dq().sqrt();
        let l2 = proxy.amplitudes.mapv(|v| v * sqrt_dq);
        let c = self.modes_c.t().dot(&l2);
        let hbar = self.lattice.hbar();
        let mut t_ok = times.first().copied().unwrap_or(0.0);
        for &t in times {
            let phased = Array1::from_iter(
                c.iter()
                    .zip(self.energies.iter())
                    .map(|(&cv, &e)| cv * C64::new(0.0, -e * t / hbar).exp()),
            );
            let psi_l2 = self.modes_c.dot(&phased);
            let q_mass: f64 = self.q_strip.iter().map(|&a| psi_l2[a].norm_sqr()).sum();
            if q_mass > ESCAPE_MASS {
                return Ok(t_ok);
            }
            let grid = psi_l2.mapv(|v| v / sqrt_dq);
            let pt = self.lattice.to_momentum(&grid);
            let p_mass: f64 =
                self.p_strip.iter().map(|&j| pt[j].norm_sqr()).sum::<f64>() * self.lattice.dp();
            if p_mass > ESCAPE_MASS {
                return Ok(t_ok);
            }
            t_ok = t;
        }
        Ok(t_ok)
    }

    /// The quantum trajectory X(x₀, t; ħ): the Weyl symbol of X̂(t) at x₀.
    ///
    /// Errors with [`Error::Escape`] if the escape monitor fires before the
    /// last requested time.
    pub fn quantum_trajectory(&self, x0: (f64, f64), times: &[f64]) -> Result<Trajectory> {
        if times.is_empty() {
            return Err(Error::Config("empty time grid".into()));
        }
        self.check_evaluation_point(x0)?;
        let t_escape = self.escape_time(x0, times)?;
        let t_last = *times.last().unwrap();
        if t_escape < t_last {
            return Err(Error::Escape { t_escape, t_requested: t_last });
        }
        let points = self.trajectory_points(x0, times)?;
        Ok(Trajectory::new(times.to_vec(), points, Provenance::Quantum {
            hbar: self.lattice.hbar(),
        }))
    }

    /// Directional gradient series via the singular kernel ρ₀ᵛ:
    /// `(v·∇_{x₀}) X(x₀,t;ħ) = ( Tr[ρ₀ᵛ Q̂_w(t)], Tr[ρ₀ᵛ P̂_w(t)] )`.
    pub fn rho0v_gradient_series(
        &self,
        disp: &PhaseSpaceDisplacement,
        times: &[f64],
    ) -> Result<Vec<(f64, f64)>> {
        self.check_evaluation_point(disp.x0)?;
        let rho = crate::states::singular_density_rho0v(&self.lattice, disp)?;
        let windowed = self.window_sandwich(&rho.kernel.mapv(|v| v * self.lattice.dq()));
        let rho_eig = self.to_eigenbasis_l2(&windowed);
        let fq = self.pairing_series(&rho_eig, &self.q_eig, times);
        let fp = self.pairing_series(&rho_eig, &self.p_eig, times);
        Ok(fq.iter().zip(fp.iter()).map(|(a, b)| (a.re, b.re)).collect())
    }

    /// Smeared mean ⟨A⟩(t, x₀; ħ, ε) of a symbol observable.
    ///
    /// * ε = 0: the symbol of Â(t) evaluated at x₀ (windowed quantizer
    ///   pairing; x₀'s position must sit on the half-grid).
    /// * ε > 0: Tr[ρ̂_ε(x₀) Â(t)] with the Gaussian phase-space weight
    ///   W_ε(x; x₀); ε = ħ reproduces the coherent-state expectation.
    pub fn smeared_mean(
        &self,
        a_symbol: &PhaseSpaceFunction,
        x0: (f64, f64),
        epsilon: f64,
        times: &[f64],
    ) -> Result<Vec<f64>> {
        self.lattice.compatible(&a_symbol.lattice)?;
        let a_op = crate::weyl::weyl_quantize(a_symbol);
        if epsilon == 0.0 {
            self.check_evaluation_point(x0)?;
            // windowed-quantizer pairing against the bare evolved observable
            let obs_eig = self.to_eigenbasis(&a_op);
            let rho = self.quantizer_eig(x0)?;
            let series = self.pairing_series(&rho, &obs_eig, times);
            return Ok(series.iter().map(|v| 2.0 * v.re).collect());
        }
        if epsilon < 0.0 || epsilon.sqrt() < 2.0 * self.lattice.dq() {
            return Err(Error::Config(format!(
                "epsilon = {epsilon} below the resolvable scale (need sqrt(eps) >= 2 dq)"
            )));
        }
        let rho_eps = smearing_density(&self.lattice, x0, epsilon);
        let rho_eig = self.to_eigenbasis(&rho_eps);
        let obs_eig = self.to_eigenbasis(&a_op);
        let series = self.pairing_series(&rho_eig, &obs_eig, times);
        Ok(series.iter().map(|v| v.re).collect())
    }

    /// Expectation ⟨ψ| Â(t) |ψ⟩ for a fixed state across times.
    pub fn heisenberg_expectation(
        &self,
        psi: &WaveFunction,
        op: &OperatorMatrix,
        times: &[f64],
    ) -> Vec<f64> {
        let rho = density_from_pure(psi);
        let rho_eig = self.to_eigenbasis(&rho);
        let obs_eig = self.to_eigenbasis(op);
        self.pairing_series(&rho_eig, &obs_eig, times).iter().map(|v| v.re).collect()
    }
}

/// Kernel of the Gaussian smearing density ρ̂_ε(x₀) whose Wigner weight is
/// W_ε(x; x₀) = (πε)⁻¹ exp(−|x−x₀|²/ε):
///
/// ```text
/// ⟨q'|ρ̂_ε|q''⟩ = (πε)^{-1/2} e^{-(m-q₀)²/ε} e^{-ε u²/(4ħ²)} e^{i p₀ u/ħ},
///    m = (q'+q'')/2,  u = q'-q''
/// ```
///
/// At ε = ħ this is exactly the coherent-state projector at x₀.
pub fn smearing_density(lattice: &Lattice, x0: (f64, f64), epsilon: f64) -> OperatorMatrix {
    let n = lattice.n_points();
    let (q0, p0) = x0;
    let hbar = lattice.hbar();
    let amp = (std::f64::consts::PI * epsilon).powf(-0.5);
    let kernel = Array2::from_shape_fn((n, n), |(a, b)| {
        let mid = 0.5 * (lattice.q(a) + lattice.q(b)) - q0;
        let u = lattice.q(a) - lattice.q(b);
        let gauss = amp * (-mid * mid / epsilon - epsilon * u * u / (4.0 * hbar * hbar)).exp();
        C64::new(0.0, p0 * u / hbar).exp() * gauss
    });
    let mut op = OperatorMatrix::new(lattice.clone(), kernel);
    op.is_state = true;
    op
}

/// Egorov residuals ‖X(x₀, t; ħ) − x(t, x₀)‖ for a sequence of ħ values on
/// a fixed box.  A fresh lattice and spectral cache is built per ħ (the
/// momentum grid scales with ħ); the classical reference is shared.
pub fn egorov_residual(
    spec: &HamiltonianSpec,
    n_points: usize,
    q_min: f64,
    q_max: f64,
    x0: (f64, f64),
    t: f64,
    hbar_sequence: &[f64],
) -> Result<Vec<f64>> {
    if hbar_sequence.is_empty() {
        return Err(Error::Config("empty hbar sequence".into()));
    }
    let times = [t];
    let classical = crate::classical::classical_flow(spec, x0, &times)?;
    let (cq, cp) = classical.points[0];
    let mut residuals = Vec::with_capacity(hbar_sequence.len());
    for &hbar in hbar_sequence {
        let lattice = Lattice::new(n_points, q_min, q_max, hbar)?;
        let sys = QuantumSystem::new(&lattice, spec)?;
        let traj = sys.quantum_trajectory(x0, &times)?;
        let (q, p) = traj.points[0];
        residuals.push(((q - cq).powi(2) + (p - cp).powi(2)).sqrt());
    }
    Ok(residuals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::uniform_times;
    use crate::potential::HamiltonianSpec;

    fn lattice() -> Lattice {
        Lattice::new(256, -10.0, 10.0, 1.0).unwrap()
    }

    #[test]
    fn harmonic_spectrum_is_half_integers() {
        let l = lattice();
        let sys = QuantumSystem::new(&l, &HamiltonianSpec::harmonic(1.0)).unwrap();
        for n in 0..20 {
            let expect = n as f64 + 0.5;
            assert!(
                (sys.energies()[n] - expect).abs() < 1e-8,
                "E_{n} = {} vs {expect}",
                sys.energies()[n]
            );
        }
    }

    #[test]
    fn free_particle_spectrum_is_kinetic() {
        let l = Lattice::new(128, -16.0, 16.0, 1.0).unwrap();
        let sys = QuantumSystem::new(&l, &HamiltonianSpec::free()).unwrap();
        // eigenvalues are p²/2 on the momentum grid (doubly degenerate);
        // compare sorted lists
        let mut expect: Vec<f64> = (0..l.n_points()).map(|j| 0.5 * l.p(j) * l.p(j)).collect();
        expect.sort_by(f64::total_cmp);
        for (k, &e) in sys.energies().iter().enumerate() {
            assert!((e - expect[k]).abs() < 1e-8 * (1.0 + expect[k]), "k={k}");
        }
    }

    #[test]
    fn inverted_oscillator_spectrum_is_real_and_kernel_hermitian() {
        let l = lattice();
        let h = build_hamiltonian(&l, &HamiltonianSpec::inverted(1.0));
        assert!(h.hermiticity_defect() < 1e-10);
        let sys = QuantumSystem::from_hamiltonian(l, &h).unwrap();
        assert!(sys.energies().iter().all(|e| e.is_finite()));
    }

    #[test]
    fn unitarity_and_energy_conservation() {
        let l = lattice();
        let sys = QuantumSystem::new(&l, &HamiltonianSpec::quartic(1.0)).unwrap();
        let psi = gaussian_state(&l, (1.0, 0.0)).unwrap();
        let h = build_hamiltonian(&l, &HamiltonianSpec::quartic(1.0));
        let e0 = h.expectation(&psi.amplitudes).re;
        for &t in &[0.3, 1.7, 6.4] {
            let evolved = sys.evolve_state(&psi.amplitudes, t);
            let n = l.norm(&evolved);
            assert!((n - 1.0).abs() < 1e-10, "norm at t={t}: {n}");
            let e = h.expectation(&evolved).re;
            assert!((e - e0).abs() < 1e-8, "energy drift at t={t}: {e} vs {e0}");
        }
    }

    #[test]
    fn heisenberg_at_zero_is_identity_map() {
        let l = lattice();
        let sys = QuantumSystem::new(&l, &HamiltonianSpec::harmonic(1.0)).unwrap();
        let q_op = crate::weyl::weyl_quantize(&PhaseSpaceFunction::sample_real(&l, |q, _| q));
        let back = sys.heisenberg(&q_op, 0.0);
        let defect = (&back.kernel - &q_op.kernel)
            .iter()
            .map(|v| v.norm())
            .fold(0.0f64, f64::max);
        assert!(defect * l.dq() < 1e-10, "defect {defect}");
    }

    #[test]
    fn harmonic_heisenberg_rotates_position_into_momentum() {
        let l = lattice();
        let sys = QuantumSystem::new(&l, &HamiltonianSpec::harmonic(1.0)).unwrap();
        let q_op = crate::weyl::weyl_quantize(&PhaseSpaceFunction::sample_real(&l, |q, _| q));
        let p_op = crate::weyl::weyl_quantize(&PhaseSpaceFunction::sample_real(&l, |_, p| p));
        let qt = sys.heisenberg(&q_op, std::f64::consts::FRAC_PI_2);
        // q̂(π/2) = p̂ for ω = 1; compare action on a localized state
        let psi = gaussian_state(&l, (0.6, -0.4)).unwrap();
        let lhs = qt.apply(&psi.amplitudes);
        let rhs = p_op.apply(&psi.amplitudes);
        let err = (&lhs - &rhs).iter().map(|v| v.norm()).fold(0.0f64, f64::max);
        assert!(err < 1e-7, "q(pi/2) vs p action: {err}");
    }

    #[test]
    fn quantum_trajectory_harmonic_matches_classical_rotation() {
        let l = lattice();
        let sys = QuantumSystem::new(&l, &HamiltonianSpec::harmonic(1.0)).unwrap();
        let x0 = (l.half_point(l.n_points() + 16), 0.5); // on the half-grid
        let times = uniform_times(10.0, 40);
        let traj = sys.quantum_trajectory(x0, &times).unwrap();
        for (&t, &(q, p)) in traj.times.iter().zip(traj.points.iter()) {
            let qe = x0.0 * t.cos() + x0.1 * t.sin();
            let pe = x0.1 * t.cos() - x0.0 * t.sin();
            assert!((q - qe).abs() < 1e-6, "t={t}: Q={q} vs {qe}");
            assert!((p - pe).abs() < 1e-6, "t={t}: P={p} vs {pe}");
        }
    }

    #[test]
    fn trajectory_at_zero_returns_x0() {
        let l = lattice();
        let sys = QuantumSystem::new(&l, &HamiltonianSpec::quartic(0.7)).unwrap();
        for &m_off in &[0i64, 7, -13, 20] {
            let m = (l.n_points() as i64 + m_off) as usize;
            let x0 = (l.half_point(m), 0.31);
            let traj = sys.quantum_trajectory(x0, &[0.0]).unwrap();
            assert!(
                (traj.points[0].0 - x0.0).abs() < 1e-9,
                "Q(0) = {} vs {}",
                traj.points[0].0,
                x0.0
            );
            assert!((traj.points[0].1 - x0.1).abs() < 1e-9);
        }
    }

    #[test]
    fn inverted_trajectory_is_hyperbolic_within_escape_window() {
        let l = Lattice::new(256, -20.0, 20.0, 1.0).unwrap();
        let sys = QuantumSystem::new(&l, &HamiltonianSpec::inverted(1.0)).unwrap();
        let x0 = (l.half_point(l.n_points() + 4), 0.2);
        let times = uniform_times(1.5, 15);
        let traj = sys.quantum_trajectory(x0, &times).unwrap();
        for (&t, &(q, p)) in traj.times.iter().zip(traj.points.iter()) {
            let qe = x0.0 * t.cosh() + x0.1 * t.sinh();
            let pe = x0.0 * t.sinh() + x0.1 * t.cosh();
            assert!((q - qe).abs() < 1e-6, "t={t}: {q} vs {qe}");
            assert!((p - pe).abs() < 1e-6, "t={t}: {p} vs {pe}");
        }
    }

    #[test]
    fn escape_monitor_fires_for_inverted_oscillator() {
        let l = Lattice::new(256, -20.0, 20.0, 1.0).unwrap();
        let sys = QuantumSystem::new(&l, &HamiltonianSpec::inverted(1.0)).unwrap();
        let x0 = (l.half_point(l.n_points() + 4), 0.2);
        let times = uniform_times(8.0, 64);
        match sys.quantum_trajectory(x0, &times) {
            Err(Error::Escape { t_escape, .. }) => {
                assert!(t_escape > 0.5 && t_escape < 8.0, "t_escape = {t_escape}");
            }
            other => panic!("expected escape error, got {:?}", other.map(|t| t.points.len())),
        }
    }

    #[test]
    fn smeared_mean_at_epsilon_hbar_matches_expectation() {
        let l = lattice();
        let sys = QuantumSystem::new(&l, &HamiltonianSpec::quartic(1.0)).unwrap();
        let x0 = (1.0, 0.5);
        let a = PhaseSpaceFunction::sample_real(&l, |q, _| q);
        let times = uniform_times(2.0, 8);
        let smeared = sys.smeared_mean(&a, x0, l.hbar(), &times).unwrap();
        let psi = gaussian_state(&l, x0).unwrap();
        let q_op = crate::weyl::weyl_quantize(&a);
        let expect = sys.heisenberg_expectation(&psi, &q_op, &times);
        for (s, e) in smeared.iter().zip(expect.iter()) {
            assert!((s - e).abs() < 1e-8, "{s} vs {e}");
        }
        // t = 0 coherent-state mean is q₀
        assert!((smeared[0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn smeared_mean_epsilon_zero_matches_trajectory() {
        let l = lattice();
        let sys = QuantumSystem::new(&l, &HamiltonianSpec::harmonic(1.0)).unwrap();
        let x0 = (l.half_point(l.n_points() + 10), -0.4);
        let times = uniform_times(3.0, 6);
        let a = PhaseSpaceFunction::sample_real(&l, |q, _| q);
        let sm = sys.smeared_mean(&a, x0, 0.0, &times).unwrap();
        let traj = sys.quantum_trajectory(x0, &times).unwrap();
        for (s, &(q, _)) in sm.iter().zip(traj.points.iter()) {
            assert!((s - q).abs() < 1e-8, "{s} vs {q}");
        }
    }

    #[test]
    fn harmonic_smeared_mean_is_epsilon_independent_for_linear_symbol() {
        let l = lattice();
        let sys = QuantumSystem::new(&l, &HamiltonianSpec::harmonic(1.0)).unwrap();
        let x0 = (l.half_point(l.n_points() + 10), 0.5);
        let a = PhaseSpaceFunction::sample_real(&l, |q, _| q);
        let times = uniform_times(4.0, 8);
        let m0 = sys.smeared_mean(&a, x0, 0.0, &times).unwrap();
        let m1 = sys.smeared_mean(&a, x0, 0.5, &times).unwrap();
        let m2 = sys.smeared_mean(&a, x0, 1.0, &times).unwrap();
        for i in 0..times.len() {
            assert!((m0[i] - m1[i]).abs() < 1e-7);
            assert!((m1[i] - m2[i]).abs() < 1e-7);
        }
    }

    #[test]
    fn egorov_residual_quadratic_is_tiny_and_zero_at_t0() {
        let spec = HamiltonianSpec::harmonic(1.0);
        let res =
            egorov_residual(&spec, 128, -12.0, 12.0, (0.75, 0.25), 1.0, &[1.0, 0.5]).unwrap();
        for r in &res {
            assert!(*r < 1e-6, "quadratic Egorov residual {r}");
        }
        let res0 =
            egorov_residual(&spec, 128, -12.0, 12.0, (0.75, 0.25), 0.0, &[1.0]).unwrap();
        assert!(res0[0] < 1e-9);
    }
}
