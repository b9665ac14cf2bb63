//! Reproducible coin-angle fields.
//!
//! A field is either homogeneous (`θ = θ₀` everywhere and always), spatial
//! (`θ(n) = θ₀ + δ_n`, frozen for the whole run) or temporal
//! (`θ(t) = θ₀ + δ_t`, one angle per step shared by every site), with the
//! `δ` drawn independently from `Uniform[-W/2, W/2]`.
//!
//! Every ensemble member draws from its own ChaCha8 stream: the key is
//! expanded from the run seed and the stream id is the sample index, so a
//! field depends only on `(seed, sample_index)` and never on which thread
//! builds it or in which order.

use std::fmt;
use std::str::FromStr;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::walk::{Coin, CoinAngle, CoinGate};

/// Identity of the generator behind every field, recorded in run metadata.
pub const GENERATOR: &str = "rand_chacha::ChaCha8Rng (seed_from_u64(seed), set_stream(sample_index))";

/// Disorder width used throughout unless configured otherwise.
pub const DEFAULT_WIDTH: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DisorderKind {
    Homogeneous,
    Spatial,
    Temporal,
}

impl DisorderKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DisorderKind::Homogeneous => "homogeneous",
            DisorderKind::Spatial => "spatial",
            DisorderKind::Temporal => "temporal",
        }
    }
}

impl fmt::Display for DisorderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DisorderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "homogeneous" => Ok(DisorderKind::Homogeneous),
            "spatial" => Ok(DisorderKind::Spatial),
            "temporal" => Ok(DisorderKind::Temporal),
            other => Err(Error::Config(format!(
                "unknown disorder kind {other:?} (expected homogeneous, spatial or temporal)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DisorderSpec {
    pub kind: DisorderKind,
    pub theta0: CoinAngle,
    /// Full width `W` of the uniform distribution of `δ`, in radians.
    pub width: f64,
    pub seed: u64,
}

impl DisorderSpec {
    pub fn homogeneous(theta0: f64) -> Self {
        Self {
            kind: DisorderKind::Homogeneous,
            theta0: CoinAngle(theta0),
            width: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.theta0.0.is_finite() {
            return Err(Error::Config(format!("theta0 must be finite, got {}", self.theta0.0)));
        }
        if !(self.width.is_finite() && self.width >= 0.0) {
            return Err(Error::Config(format!(
                "disorder width must be finite and >= 0, got {}",
                self.width
            )));
        }
        Ok(())
    }
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed and a path of indices, e.g. the
/// `(chi index, theta index)` of a phase-diagram cell.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix64(seed), |acc, &k| {
        mix64(acc ^ mix64(k.wrapping_add(0x9e37_79b9_7f4a_7c15)))
    })
}

/// The generator that feeds ensemble member `sample_index`.
pub fn sample_rng(seed: u64, sample_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(sample_index);
    rng
}

#[derive(Clone, Debug, PartialEq)]
enum Angles {
    Homogeneous { theta0: f64, gate: CoinGate },
    Spatial { theta: Vec<f64>, gates: Vec<CoinGate> },
    Temporal { theta: Vec<f64>, gates: Vec<CoinGate> },
}

/// The coin angles one walk actually sees, with the seed they came from.
#[derive(Clone, Debug, PartialEq)]
pub struct CoinField {
    angles: Angles,
    seed: u64,
    sample_index: u64,
}

/// Builds the field of ensemble member `sample_index`.
///
/// A spatial field holds `num_sites` angles, a temporal field `num_steps`,
/// a homogeneous field none.
pub fn make_coin_field(
    spec: &DisorderSpec,
    sample_index: u64,
    num_sites: usize,
    num_steps: usize,
) -> CoinField {
    let theta0 = spec.theta0.radians();
    let draw = |len: usize| -> Vec<f64> {
        let half = spec.width / 2.0;
        let delta = Uniform::new_inclusive(-half, half);
        let mut rng = sample_rng(spec.seed, sample_index);
        (0..len).map(|_| theta0 + delta.sample(&mut rng)).collect()
    };
    let gates = |theta: &[f64]| theta.iter().map(|&th| CoinGate::new(th)).collect();
    let angles = match spec.kind {
        DisorderKind::Homogeneous => Angles::Homogeneous {
            theta0,
            gate: CoinGate::new(theta0),
        },
        DisorderKind::Spatial => {
            let theta = draw(num_sites);
            Angles::Spatial {
                gates: gates(&theta),
                theta,
            }
        }
        DisorderKind::Temporal => {
            let theta = draw(num_steps);
            Angles::Temporal {
                gates: gates(&theta),
                theta,
            }
        }
    };
    CoinField {
        angles,
        seed: spec.seed,
        sample_index,
    }
}

impl CoinField {
    pub fn kind(&self) -> DisorderKind {
        match self.angles {
            Angles::Homogeneous { .. } => DisorderKind::Homogeneous,
            Angles::Spatial { .. } => DisorderKind::Spatial,
            Angles::Temporal { .. } => DisorderKind::Temporal,
        }
    }

    /// `(seed, sample_index)` the field was drawn from.
    pub fn provenance(&self) -> (u64, u64) {
        (self.seed, self.sample_index)
    }

    /// The drawn angles: per site for spatial, per step for temporal, empty
    /// for homogeneous.
    pub fn angles(&self) -> &[f64] {
        match &self.angles {
            Angles::Homogeneous { .. } => &[],
            Angles::Spatial { theta, .. } | Angles::Temporal { theta, .. } => theta,
        }
    }

    /// Angle applied at site `n` during step `t` (the step taking the state
    /// from `t` to `t + 1`).
    pub fn theta_for(&self, n: usize, t: usize) -> Result<CoinAngle> {
        match &self.angles {
            Angles::Homogeneous { theta0, .. } => Ok(CoinAngle(*theta0)),
            Angles::Spatial { theta, .. } => lookup(theta, n, "spatial coin field"),
            Angles::Temporal { theta, .. } => lookup(theta, t, "temporal coin field"),
        }
    }

    /// Gates for the step starting at time `t`, in the form the kernel takes.
    pub fn coin_at_step(&self, t: usize) -> Result<Coin<'_>> {
        match &self.angles {
            Angles::Homogeneous { gate, .. } => Ok(Coin::Uniform(*gate)),
            Angles::Spatial { gates, .. } => Ok(Coin::PerSite(gates)),
            Angles::Temporal { gates, .. } => gates
                .get(t)
                .map(|g| Coin::Uniform(*g))
                .ok_or(Error::OutOfRange {
                    what: "temporal coin field",
                    index: t,
                    len: gates.len(),
                }),
        }
    }
}

fn lookup(theta: &[f64], index: usize, what: &'static str) -> Result<CoinAngle> {
    theta.get(index).map(|&th| CoinAngle(th)).ok_or(Error::OutOfRange {
        what,
        index,
        len: theta.len(),
    })
}
