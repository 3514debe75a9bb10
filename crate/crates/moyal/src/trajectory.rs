//! Phase-space trajectory containers shared by the classical and quantum
//! evolution routines.

use serde::{Deserialize, Serialize};

/// Where a trajectory came from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Classical,
    Quantum { hbar: f64 },
    Smeared { hbar: f64, epsilon: f64 },
}

/// A time series of phase-space points X(t) = (Q(t), P(t)).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<(f64, f64)>,
    pub provenance: Provenance,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, points: Vec<(f64, f64)>, provenance: Provenance) -> Self {
        assert_eq!(times.len(), points.len());
        debug_assert!(times.windows(2).all(|w| w[1] > w[0]), "times must be strictly increasing");
        Self { times, points, provenance }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Largest pointwise distance to another trajectory on shared times.
    pub fn max_distance(&self, other: &Trajectory) -> f64 {
        assert_eq!(self.times.len(), other.times.len());
        self.points
            .iter()
            .zip(other.points.iter())
            .map(|(a, b)| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt())
            .fold(0.0, f64::max)
    }
}
