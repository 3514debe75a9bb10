//! The potential registry and Hamiltonian specification.
//!
//! All potentials are polynomial in q, so the classical force and its
//! derivative (needed by the tangent flow) are available analytically.

use serde::{Deserialize, Serialize};

/// A registered one-dimensional potential V(q).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Potential {
    /// V = 0.
    Free,
    /// V = ω² q² / 2.
    Harmonic { omega: f64 },
    /// V = −ω² q² / 2 (unstable fixed point at the origin).
    Inverted { omega: f64 },
    /// V = λ q⁴ / 4.
    Quartic { lambda: f64 },
    /// V = Σ_k c_k q^k with user coefficients (c_0 first).
    Polynomial { coeffs: Vec<f64> },
}

impl Potential {
    pub fn v(&self, q: f64) -> f64 {
        match self {
            Potential::Free => 0.0,
            Potential::Harmonic { omega } => 0.5 * omega * omega * q * q,
            Potential::Inverted { omega } => -0.5 * omega * omega * q * q,
            Potential::Quartic { lambda } => 0.25 * lambda * q.powi(4),
            Potential::Polynomial { coeffs } => {
                coeffs.iter().rev().fold(0.0, |acc, &c| acc * q + c)
            }
        }
    }

    /// dV/dq.
    pub fn dv(&self, q: f64) -> f64 {
        match self {
            Potential::Free => 0.0,
            Potential::Harmonic { omega } => omega * omega * q,
            Potential::Inverted { omega } => -omega * omega * q,
            Potential::Quartic { lambda } => lambda * q.powi(3),
            Potential::Polynomial { coeffs } => {
                let mut acc = 0.0;
                for (k, &c) in coeffs.iter().enumerate().skip(1).rev() {
                    acc = acc * q + k as f64 * c;
                }
                acc
            }
        }
    }

    /// d²V/dq².
    pub fn d2v(&self, q: f64) -> f64 {
        match self {
            Potential::Free => 0.0,
            Potential::Harmonic { omega } => omega * omega,
            Potential::Inverted { omega } => -omega * omega,
            Potential::Quartic { lambda } => 3.0 * lambda * q * q,
            Potential::Polynomial { coeffs } => {
                let mut acc = 0.0;
                for (k, &c) in coeffs.iter().enumerate().skip(2).rev() {
                    acc = acc * q + (k * (k - 1)) as f64 * c;
                }
                acc
            }
        }
    }

    /// Classical Hamiltonian H(q, p) = p²/2 + V(q) (unit mass).
    pub fn energy(&self, q: f64, p: f64) -> f64 {
        0.5 * p * p + self.v(q)
    }
}

/// A named Hamiltonian of the form H = p²/2 + V(q).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HamiltonianSpec {
    pub name: String,
    pub potential: Potential,
}

impl HamiltonianSpec {
    pub fn new(name: impl Into<String>, potential: Potential) -> Self {
        Self { name: name.into(), potential }
    }

    pub fn harmonic(omega: f64) -> Self {
        Self::new("harmonic", Potential::Harmonic { omega })
    }

    pub fn inverted(omega: f64) -> Self {
        Self::new("inverted", Potential::Inverted { omega })
    }

    pub fn quartic(lambda: f64) -> Self {
        Self::new("quartic", Potential::Quartic { lambda })
    }

    pub fn free() -> Self {
        Self::new("free", Potential::Free)
    }
}
