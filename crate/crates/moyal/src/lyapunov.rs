//! Lyapunov exponents: the shared finite-time estimator, the two quantum
//! gradient routes (finite differences of the symbol; the ρ₀ᵛ trace
//! pairing), and quantum-vs-classical comparison reports.
//!
//! The t → ∞ limit in the defining formulas is replaced by a windowed
//! finite-time fit of ln‖gradient‖ with residual diagnostics.  The same
//! estimator serves the classical deviation norm and both quantum routes,
//! so the three numbers are directly comparable.  Growth that fits a power
//! law or stays bounded is classified as such and reported with exponent 0:
//! sub-exponential sensitive dependence must not masquerade as a positive
//! Lyapunov exponent.

use crate::classical;
use crate::dynamics::QuantumSystem;
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::potential::HamiltonianSpec;
use crate::states::PhaseSpaceDisplacement;
use serde::{Deserialize, Serialize};

/// Time window for the exponent fit.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct FitWindow {
    pub t_lo: f64,
    pub t_hi: f64,
}

impl FitWindow {
    pub fn new(t_lo: f64, t_hi: f64) -> Result<Self> {
        if !(t_lo < t_hi) || t_lo < 0.0 {
            return Err(Error::FitWindow(format!("need 0 <= t_lo < t_hi, got [{t_lo}, {t_hi}]")));
        }
        Ok(Self { t_lo, t_hi })
    }

    /// Default window [0.2·t_max, 0.9·t_max], skipping transients.
    pub fn default_for(t_max: f64) -> Self {
        Self { t_lo: 0.2 * t_max, t_hi: 0.9 * t_max }
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.t_lo - 1e-12 && t <= self.t_hi + 1e-12
    }
}

/// Growth classification of the fitted norm series.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthClass {
    Exponential,
    Polynomial,
    Bounded,
}

/// Which pipeline produced an estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Classical,
    QuantumFd,
    QuantumRho0v,
}

/// A finite-time Lyapunov estimate with fit diagnostics.
///
/// `value` is the exponent consistent with the classification: the fitted
/// slope for exponential growth, zero otherwise (a power law has vanishing
/// asymptotic exponential rate).  The raw windowed slope is always kept in
/// `fit_slope`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub value: f64,
    pub fit_window: FitWindow,
    /// rms residual of the linear fit of ln‖·‖ against t.
    pub residual: f64,
    pub growth_class: GrowthClass,
    pub route: Route,
    /// Raw least-squares slope of ln‖·‖ vs t on the window.
    pub fit_slope: f64,
    pub slope_stderr: f64,
    pub n_samples: usize,
}

const MIN_WINDOW_SAMPLES: usize = 10;
/// ln-range below which a series counts as bounded.
const BOUNDED_RANGE: f64 = 1e-4;
/// rms threshold (ln units) for accepting an exponential fit.
const EXP_RMS_TOL: f64 = 0.05;

fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64, f64) {
    let n = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let ss_res: f64 =
        xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let rms = (ss_res / n).sqrt();
    let stderr = if xs.len() > 2 { (ss_res / (n - 2.0)).sqrt() / sxx.sqrt() } else { 0.0 };
    (slope, intercept, rms, stderr)
}

/// Windowed finite-time exponent of a positive norm series.
///
/// The same estimator is used for the classical deviation norm and both
/// quantum gradient routes.  Errors on an empty window or non-positive
/// values inside it.
pub fn finite_time_exponent(
    series: &[(f64, f64)],
    fit_window: FitWindow,
    route: Route,
) -> Result<LyapunovEstimate> {
    let mut logs = Vec::with_capacity(series.len());
    for &(t, y) in series {
        if fit_window.contains(t) {
            if !(y > 0.0) || !y.is_finite() {
                return Err(Error::FitWindow(format!("non-positive value {y} at t = {t}")));
            }
            logs.push((t, y.ln()));
        }
    }
    finite_time_exponent_from_logs_filtered(logs, fit_window, route)
}

/// As [`finite_time_exponent`] but fed ln‖·‖ directly (used where the raw
/// norm would overflow, e.g. after Benettin renormalization).
pub fn finite_time_exponent_from_logs(
    log_series: &[(f64, f64)],
    fit_window: FitWindow,
    route: Route,
) -> Result<LyapunovEstimate> {
    let logs: Vec<(f64, f64)> =
        log_series.iter().copied().filter(|&(t, _)| fit_window.contains(t)).collect();
    finite_time_exponent_from_logs_filtered(logs, fit_window, route)
}

fn finite_time_exponent_from_logs_filtered(
    logs: Vec<(f64, f64)>,
    fit_window: FitWindow,
    route: Route,
) -> Result<LyapunovEstimate> {
    if logs.len() < MIN_WINDOW_SAMPLES {
        return Err(Error::FitWindow(format!(
            "window [{}, {}] holds {} samples, need >= {MIN_WINDOW_SAMPLES}",
            fit_window.t_lo,
            fit_window.t_hi,
            logs.len()
        )));
    }
    let ts: Vec<f64> = logs.iter().map(|&(t, _)| t).collect();
    let zs: Vec<f64> = logs.iter().map(|&(_, z)| z).collect();
    let (slope, _, rms, stderr) = linear_fit(&ts, &zs);

    let zmin = zs.iter().copied().fold(f64::INFINITY, f64::min);
    let zmax = zs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = zmax - zmin;

    // compete a power law against the exponential: whichever linearization
    // (ln‖·‖ vs t, or ln‖·‖ vs ln t) fits better wins
    let rms_log = if ts[0] > 0.0 {
        let lts: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
        linear_fit(&lts, &zs).2
    } else {
        f64::INFINITY
    };
    let growth_class = if range <= BOUNDED_RANGE {
        GrowthClass::Bounded
    } else if rms_log < rms {
        GrowthClass::Polynomial
    } else if rms <= EXP_RMS_TOL && slope > 3.0 * stderr {
        GrowthClass::Exponential
    } else {
        GrowthClass::Polynomial
    };

    let value = match growth_class {
        GrowthClass::Exponential => slope,
        _ => 0.0,
    };
    if !matches!(growth_class, GrowthClass::Exponential) && slope.abs() > 0.0 {
        log::debug!("non-exponential window (class {growth_class:?}), windowed slope {slope:.3e}");
    }
    Ok(LyapunovEstimate {
        value,
        fit_window,
        residual: rms,
        growth_class,
        route,
        fit_slope: slope,
        slope_stderr: stderr,
        n_samples: ts.len(),
    })
}

/// Step size whose q-displacement lands x₀ ± (δ/2)v on the half-grid:
/// one midpoint step for the default direction.
pub fn default_delta_fd(lattice: &Lattice, v: (f64, f64)) -> f64 {
    if v.0.abs() <= 1e-12 {
        lattice.dq()
    } else {
        lattice.dq() / v.0.abs()
    }
}

/// Directional derivative series (v·∇_{x₀}) X(x₀, t; ħ) by central
/// differences of the quantum trajectory, optionally Richardson-combined
/// with the doubled step.
pub fn symbol_gradient_series(
    sys: &QuantumSystem,
    x0: (f64, f64),
    v: (f64, f64),
    times: &[f64],
    delta_fd: f64,
    richardson: bool,
) -> Result<Vec<(f64, f64)>> {
    if !(delta_fd > 0.0) {
        return Err(Error::Config(format!("delta_fd must be positive, got {delta_fd}")));
    }
    let g1 = central_difference(sys, x0, v, times, delta_fd)?;
    if !richardson {
        return Ok(g1);
    }
    let g2 = central_difference(sys, x0, v, times, 2.0 * delta_fd)?;
    Ok(g1
        .iter()
        .zip(g2.iter())
        .map(|(a, b)| ((4.0 * a.0 - b.0) / 3.0, (4.0 * a.1 - b.1) / 3.0))
        .collect())
}

fn central_difference(
    sys: &QuantumSystem,
    x0: (f64, f64),
    v: (f64, f64),
    times: &[f64],
    delta: f64,
) -> Result<Vec<(f64, f64)>> {
    let xp = (x0.0 + 0.5 * delta * v.0, x0.1 + 0.5 * delta * v.1);
    let xm = (x0.0 - 0.5 * delta * v.0, x0.1 - 0.5 * delta * v.1);
    let plus = sys.trajectory_points(xp, times)?;
    let minus = sys.trajectory_points(xm, times)?;
    Ok(plus
        .iter()
        .zip(minus.iter())
        .map(|(a, b)| ((a.0 - b.0) / delta, (a.1 - b.1) / delta))
        .collect())
}

/// Single-time finite-difference gradient (Richardson on by default in the
/// series driver; here controlled by the flag).
pub fn symbol_gradient_fd(
    sys: &QuantumSystem,
    x0: (f64, f64),
    v: (f64, f64),
    t: f64,
    delta_fd: f64,
    richardson: bool,
) -> Result<(f64, f64)> {
    Ok(symbol_gradient_series(sys, x0, v, &[t], delta_fd, richardson)?[0])
}

/// Single-time gradient via the ρ₀ᵛ trace pairing (Eq.-(17) route).
pub fn gradient_via_rho0v(
    sys: &QuantumSystem,
    x0: (f64, f64),
    v: (f64, f64),
    t: f64,
) -> Result<(f64, f64)> {
    let disp = PhaseSpaceDisplacement::new(x0, v)?;
    Ok(sys.rho0v_gradient_series(&disp, &[t])?[0])
}

/// The quantum Lyapunov exponent by the requested route: windowed fit of
/// ln‖(v·∇_{x₀}) X(x₀,t;ħ)‖.
///
/// Errors when the escape window ends before the fit window, naming the
/// maximum usable time.
pub fn quantum_lyapunov(
    sys: &QuantumSystem,
    x0: (f64, f64),
    v: (f64, f64),
    t_max: f64,
    fit_window: FitWindow,
    route: Route,
    n_samples: usize,
) -> Result<LyapunovEstimate> {
    if !(t_max > 0.0) || n_samples < MIN_WINDOW_SAMPLES {
        return Err(Error::Config(format!(
            "need positive t_max and >= {MIN_WINDOW_SAMPLES} samples"
        )));
    }
    sys.check_evaluation_point(x0)?;
    let times = classical::uniform_times(t_max, n_samples);
    let t_escape = sys.escape_time(x0, &times)?;
    if t_escape < fit_window.t_hi {
        return Err(Error::Escape { t_escape, t_requested: fit_window.t_hi });
    }
    let usable: Vec<f64> = times.iter().copied().filter(|&t| t <= t_escape).collect();
    let grads = match route {
        Route::QuantumFd => {
            let delta = default_delta_fd(&sys.lattice, v);
            symbol_gradient_series(sys, x0, v, &usable, delta, true)?
        }
        Route::QuantumRho0v => {
            let disp = PhaseSpaceDisplacement::new(x0, v)?;
            sys.rho0v_gradient_series(&disp, &usable)?
        }
        Route::Classical => {
            return Err(Error::Config(
                "use classical::classical_lyapunov for the classical route".into(),
            ))
        }
    };
    let series: Vec<(f64, f64)> = usable
        .iter()
        .zip(grads.iter())
        .map(|(&t, &(gq, gp))| (t, (gq * gq + gp * gp).sqrt()))
        .collect();
    finite_time_exponent(&series, fit_window, route)
}

/// One ħ row of a comparison report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub hbar: f64,
    pub escape_time: f64,
    pub fit_window: FitWindow,
    pub window_clipped: bool,
    pub quantum_fd: Option<LyapunovEstimate>,
    pub quantum_rho0v: Option<LyapunovEstimate>,
    /// ‖X(x₀,t_ref;ħ) − x(t_ref,x₀)‖ (Egorov residual).
    pub egorov_residual: Option<f64>,
    /// (t, ‖gradient‖) series per route, for norm-vs-time exports.
    pub series_fd: Option<Vec<(f64, f64)>>,
    pub series_rho0v: Option<Vec<(f64, f64)>>,
    /// Failures collected instead of aborting the row.
    pub flags: Vec<String>,
}

/// Classical-vs-quantum comparison across an ħ list.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub system: String,
    pub x0: (f64, f64),
    pub v: (f64, f64),
    pub t_max: f64,
    /// Reference time for the Egorov residual column.
    pub t_ref: f64,
    pub classical: LyapunovEstimate,
    pub classical_series: Vec<(f64, f64)>,
    pub rows: Vec<ComparisonRow>,
}

/// Assemble the full classical / quantum-fd / quantum-ρ₀ᵛ / Egorov
/// comparison for one system over a list of ħ values.
///
/// Rows with failing sub-computations are flagged, never dropped.
#[allow(clippy::too_many_arguments)]
pub fn compare_report(
    spec: &HamiltonianSpec,
    n_points: usize,
    q_min: f64,
    q_max: f64,
    x0: (f64, f64),
    v: (f64, f64),
    hbar_list: &[f64],
    t_max: f64,
    fit_window: Option<FitWindow>,
    n_samples: usize,
) -> Result<ComparisonReport> {
    if hbar_list.is_empty() {
        return Err(Error::Config("empty hbar list".into()));
    }
    let window = fit_window.unwrap_or_else(|| FitWindow::default_for(t_max));
    let vn = PhaseSpaceDisplacement::new(x0, v)?.v;
    let classical = classical::classical_lyapunov(spec, x0, vn, t_max, window, n_samples)?;
    let times = classical::uniform_times(t_max, n_samples);
    let tangent = classical::tangent_flow(spec, x0, vn, &times)?;
    let classical_series: Vec<(f64, f64)> =
        tangent.iter().map(|s| (s.t, s.log_norm().exp())).collect();
    let t_ref = 0.5 * t_max;

    let mut rows = Vec::with_capacity(hbar_list.len());
    for &hbar in hbar_list {
        let mut flags = Vec::new();
        let mut row = ComparisonRow {
            hbar,
            escape_time: f64::NAN,
            fit_window: window,
            window_clipped: false,
            quantum_fd: None,
            quantum_rho0v: None,
            egorov_residual: None,
            series_fd: None,
            series_rho0v: None,
            flags: Vec::new(),
        };
        match (|| -> Result<()> {
            let lattice = Lattice::new(n_points, q_min, q_max, hbar)?;
            let sys = QuantumSystem::new(&lattice, spec)?;
            sys.check_evaluation_point(x0)?;
            let t_escape = sys.escape_time(x0, &times)?;
            row.escape_time = t_escape;
            let mut win = window;
            if t_escape < window.t_hi {
                win = FitWindow::default_for(t_escape);
                row.window_clipped = true;
                flags.push(format!(
                    "fit window clipped to escape time {t_escape:.4} (requested t_hi = {:.4})",
                    window.t_hi
                ));
            }
            row.fit_window = win;
            let usable: Vec<f64> = times.iter().copied().filter(|&t| t <= t_escape).collect();

            let delta = default_delta_fd(&lattice, vn);
            match symbol_gradient_series(&sys, x0, vn, &usable, delta, true) {
                Ok(grads) => {
                    let series: Vec<(f64, f64)> = usable
                        .iter()
                        .zip(grads.iter())
                        .map(|(&t, g)| (t, (g.0 * g.0 + g.1 * g.1).sqrt()))
                        .collect();
                    match finite_time_exponent(&series, win, Route::QuantumFd) {
                        Ok(est) => row.quantum_fd = Some(est),
                        Err(e) => flags.push(format!("fd estimate: {e}")),
                    }
                    row.series_fd = Some(series);
                }
                Err(e) => flags.push(format!("fd gradients: {e}")),
            }

            let disp = PhaseSpaceDisplacement::new(x0, vn)?;
            match sys.rho0v_gradient_series(&disp, &usable) {
                Ok(grads) => {
                    let series: Vec<(f64, f64)> = usable
                        .iter()
                        .zip(grads.iter())
                        .map(|(&t, g)| (t, (g.0 * g.0 + g.1 * g.1).sqrt()))
                        .collect();
                    match finite_time_exponent(&series, win, Route::QuantumRho0v) {
                        Ok(est) => row.quantum_rho0v = Some(est),
                        Err(e) => flags.push(format!("rho0v estimate: {e}")),
                    }
                    row.series_rho0v = Some(series);
                }
                Err(e) => flags.push(format!("rho0v gradients: {e}")),
            }

            let t_study = t_ref.min(0.9 * row.escape_time);
            match crate::dynamics::egorov_residual(
                spec,
                n_points,
                q_min,
                q_max,
                x0,
                t_study,
                &[hbar],
            ) {
                Ok(res) => row.egorov_residual = Some(res[0]),
                Err(e) => flags.push(format!("egorov residual: {e}")),
            }
            Ok(())
        })() {
            Ok(()) => {}
            Err(e) => flags.push(format!("row setup: {e}")),
        }
        row.flags = flags;
        rows.push(row);
    }
    Ok(ComparisonReport {
        system: spec.name.clone(),
        x0,
        v: vn,
        t_max,
        t_ref,
        classical,
        classical_series,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window() -> FitWindow {
        FitWindow::new(2.0, 8.0).unwrap()
    }

    fn sample(f: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
        (0..=100).map(|k| (0.1 * k as f64, f(0.1 * k as f64))).collect()
    }

    #[test]
    fn classifies_exponential_series() {
        let est = finite_time_exponent(&sample(f64::exp), window(), Route::Classical).unwrap();
        assert_eq!(est.growth_class, GrowthClass::Exponential);
        assert!((est.value - 1.0).abs() < 1e-6, "slope {}", est.value);
    }

    #[test]
    fn classifies_polynomial_series() {
        let est =
            finite_time_exponent(&sample(|t| t * t), window(), Route::Classical).unwrap();
        assert_eq!(est.growth_class, GrowthClass::Polynomial);
        assert!(est.value.abs() <= 0.05);
    }

    #[test]
    fn classifies_bounded_series() {
        let est = finite_time_exponent(&sample(|_| 1.0), window(), Route::Classical).unwrap();
        assert_eq!(est.growth_class, GrowthClass::Bounded);
        assert!(est.value.abs() < 1e-9);
        assert!(est.fit_slope.abs() < 1e-9);
    }

    #[test]
    fn scaling_invariance() {
        let base = finite_time_exponent(&sample(f64::exp), window(), Route::Classical).unwrap();
        let scaled: Vec<(f64, f64)> =
            sample(f64::exp).iter().map(|&(t, y)| (t, 7.3e4 * y)).collect();
        let est = finite_time_exponent(&scaled, window(), Route::Classical).unwrap();
        assert!((est.value - base.value).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_windows_and_values() {
        assert!(FitWindow::new(3.0, 2.0).is_err());
        let short: Vec<(f64, f64)> = vec![(2.0, 1.0), (3.0, 2.0)];
        assert!(matches!(
            finite_time_exponent(&short, window(), Route::Classical),
            Err(Error::FitWindow(_))
        ));
        let negative = sample(|t| 1.0 - 0.3 * t);
        assert!(finite_time_exponent(&negative, window(), Route::Classical).is_err());
    }

    #[test]
    fn empty_hbar_list_is_an_error() {
        let spec = HamiltonianSpec::harmonic(1.0);
        let out = compare_report(
            &spec,
            64,
            -8.0,
            8.0,
            (0.5, 0.0),
            (1.0, 0.0),
            &[],
            4.0,
            None,
            40,
        );
        assert!(out.is_err());
    }
}
