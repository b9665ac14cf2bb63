//! Return probability, participation function, density snapshots, long-time
//! averages and power-law fits.
//!
//! All quantities are built from the site density `p_n = |a_n|² + |b_n|²`;
//! coin components are summed before anything is squared.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::walk::WalkerState;

/// Site probabilities over the whole lattice.
pub fn site_density(state: &WalkerState) -> Vec<f64> {
    state
        .right()
        .iter()
        .zip(state.left())
        .map(|(r, l)| r.norm_sqr() + l.norm_sqr())
        .collect()
}

fn density_at(state: &WalkerState, n: usize) -> f64 {
    state.right()[n].norm_sqr() + state.left()[n].norm_sqr()
}

/// `R₀ = p_{n₀}`, the probability of finding the walker on its initial site.
pub fn return_probability(state: &WalkerState) -> f64 {
    density_at(state, state.origin())
}

/// `PR = 1 / Σ_n p_n²`.
pub fn participation(state: &WalkerState) -> f64 {
    let sum_sq: f64 = state
        .window()
        .map(|n| {
            let p = density_at(state, n);
            p * p
        })
        .sum();
    1.0 / sum_sq
}

/// Site density on offsets `-t..=t` from the origin at step `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: u64,
    /// `density[k]` is the probability at offset `k as i64 - t as i64`.
    pub density: Vec<f64>,
}

impl Snapshot {
    /// Captures the light cone of `state`. Sites outside the lattice (only
    /// possible on undersized lattices) read as zero.
    pub fn capture(state: &WalkerState) -> Self {
        let t = state.t();
        let origin = state.origin() as i64;
        let density = (-(t as i64)..=t as i64)
            .map(|offset| {
                let n = origin + offset;
                if n >= 0 && (n as usize) < state.num_sites() {
                    density_at(state, n as usize)
                } else {
                    0.0
                }
            })
            .collect();
        Self { t, density }
    }

    /// `(offset from origin, probability)` pairs.
    pub fn offsets(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        let t = self.t as i64;
        self.density
            .iter()
            .enumerate()
            .map(move |(k, &p)| (k as i64 - t, p))
    }
}

/// Observables recorded along one walk, or averaged over an ensemble.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ObservableSeries {
    pub times: Vec<u64>,
    pub r0: Vec<f64>,
    pub pr: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
}

impl ObservableSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Appends the observables of `state` at its current time.
    ///
    /// # Panics
    ///
    /// If `state.t()` does not exceed the last recorded time.
    pub fn record(&mut self, state: &WalkerState) {
        let t = state.t();
        assert!(
            self.times.last().is_none_or(|&last| t > last),
            "sample times must be strictly increasing"
        );
        self.times.push(t);
        self.r0.push(return_probability(state));
        self.pr.push(participation(state));
    }

    pub fn record_snapshot(&mut self, state: &WalkerState) {
        self.snapshots.push(Snapshot::capture(state));
    }

    pub fn t_max(&self) -> Option<u64> {
        self.times.last().copied()
    }

    pub fn times_f64(&self) -> Vec<f64> {
        self.times.iter().map(|&t| t as f64).collect()
    }

    pub fn value_at(&self, t: u64) -> Option<(f64, f64)> {
        self.times
            .binary_search(&t)
            .ok()
            .map(|k| (self.r0[k], self.pr[k]))
    }
}

/// Means of `R₀` and `PR` over the samples with `t >= (1 - tail_fraction) * t_max`.
pub fn long_time_average(series: &ObservableSeries, tail_fraction: f64) -> Result<(f64, f64)> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::Config(format!(
            "tail_fraction must lie in (0, 1], got {tail_fraction}"
        )));
    }
    let t_max = series.t_max().ok_or(Error::EmptyWindow { t_min: 0.0 })?;
    let t_min = (1.0 - tail_fraction) * t_max as f64;
    let start = series.times.partition_point(|&t| (t as f64) < t_min);
    let count = series.len() - start;
    if count == 0 {
        return Err(Error::EmptyWindow { t_min });
    }
    let mean = |v: &[f64]| v[start..].iter().sum::<f64>() / count as f64;
    Ok((mean(&series.r0), mean(&series.pr)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    /// Slope of `ln(value)` against `ln(t)`.
    pub exponent: f64,
    /// Intercept of `ln(value)` against `ln(t)`, i.e. the log of the prefactor.
    pub intercept: f64,
    pub fit_window: (f64, f64),
    pub r_squared: f64,
    pub points: usize,
}

impl PowerLawFit {
    pub fn predict(&self, t: f64) -> f64 {
        (self.intercept + self.exponent * t.ln()).exp()
    }
}

/// Least-squares line through `(ln t, ln value)` for the samples with
/// `t_min <= t <= t_max`.
pub fn fit_power_law(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<PowerLawFit> {
    if times.len() != values.len() {
        return Err(Error::Config(format!(
            "times and values differ in length ({} vs {})",
            times.len(),
            values.len()
        )));
    }
    let (t_min, t_max) = window;
    if !(t_min > 0.0 && t_min <= t_max) {
        return Err(Error::Config(format!(
            "fit window must satisfy 0 < t_min <= t_max, got [{t_min}, {t_max}]"
        )));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&t, &v) in times.iter().zip(values) {
        if t < t_min || t > t_max {
            continue;
        }
        if v.is_nan() || v <= 0.0 {
            return Err(Error::NonPositive { t, value: v });
        }
        xs.push(t.ln());
        ys.push(v.ln());
    }
    let n = xs.len();
    if n < 3 {
        return Err(Error::TooFewPoints {
            t_min,
            t_max,
            found: n,
        });
    }
    let mean_x = xs.iter().sum::<f64>() / n as f64;
    let mean_y = ys.iter().sum::<f64>() / n as f64;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        let (dx, dy) = (x - mean_x, y - mean_y);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::Config("fit window holds a single distinct time".into()));
    }
    let exponent = sxy / sxx;
    let intercept = mean_y - exponent * mean_x;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - exponent * x).powi(2))
        .sum();
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Ok(PowerLawFit {
        exponent,
        intercept,
        fit_window: window,
        r_squared,
        points: n,
    })
}

/// Pointwise mean over ensemble members recorded on the same time grid.
pub fn ensemble_average(members: &[ObservableSeries]) -> Result<ObservableSeries> {
    let first = members
        .first()
        .ok_or_else(|| Error::Config("cannot average an empty ensemble".into()))?;
    let snapshot_times: Vec<u64> = first.snapshots.iter().map(|s| s.t).collect();
    for m in &members[1..] {
        if m.times != first.times || m.snapshots.iter().map(|s| s.t).ne(snapshot_times.iter().copied()) {
            return Err(Error::MismatchedTimes);
        }
    }
    let count = members.len() as f64;
    let mean_of = |pick: &dyn Fn(&ObservableSeries) -> &[f64]| -> Vec<f64> {
        let mut acc = vec![0.0; pick(first).len()];
        for m in members {
            for (a, v) in acc.iter_mut().zip(pick(m)) {
                *a += v;
            }
        }
        acc.iter_mut().for_each(|a| *a /= count);
        acc
    };
    let snapshots = (0..first.snapshots.len())
        .map(|k| Snapshot {
            t: first.snapshots[k].t,
            density: mean_of(&|m: &ObservableSeries| &m.snapshots[k].density),
        })
        .collect();
    Ok(ObservableSeries {
        times: first.times.clone(),
        r0: mean_of(&|m: &ObservableSeries| &m.r0),
        pr: mean_of(&|m: &ObservableSeries| &m.pr),
        snapshots,
    })
}
