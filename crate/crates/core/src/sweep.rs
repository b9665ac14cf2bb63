//! Single runs, ensembles and `(χ, θ₀)` phase diagrams.
//!
//! Every task is a pure function of its parameters and derived seed: ensemble
//! member `k` uses stream `k` of the run seed, and phase-diagram cell `(i, j)`
//! runs its ensemble under `derive_seed(base_seed, [i, j])`. Results are
//! collected in index order, so the output does not depend on how many
//! workers ran or in which order they finished.

use std::fs::{File, OpenOptions};
use std::io::{Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::disorder::{derive_seed, make_coin_field, DisorderKind, DisorderSpec};
use crate::error::{Error, Result};
use crate::observables::{ensemble_average, long_time_average, ObservableSeries};
use crate::walk::{lattice_size_for, CoinAngle, NonlinearStrength, WalkerState};

pub const DEFAULT_R0_THRESHOLD: f64 = 0.03;
pub const DEFAULT_PR_THRESHOLD: f64 = 2.0;
pub const DEFAULT_TAIL_FRACTION: f64 = 0.1;

/// When observables and density snapshots are recorded.
///
/// The walk only populates sites with `n - n₀ ≡ t (mod 2)`, so `R₀` vanishes
/// identically on odd steps. Observables are therefore recorded on even
/// steps: `t = 0`, a log-spaced grid of `num_points` points over `[1, T]`,
/// and `tail_points` evenly spaced points over the long-time averaging
/// window, each snapped to the nearest even step and deduplicated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingSchedule {
    pub num_points: usize,
    pub tail_points: usize,
    pub snapshot_times: Vec<u64>,
}

impl Default for SamplingSchedule {
    fn default() -> Self {
        Self {
            num_points: 400,
            tail_points: 100,
            snapshot_times: Vec::new(),
        }
    }
}

fn snap_even(t: f64, steps: u64) -> u64 {
    let even = 2 * (t / 2.0).round() as u64;
    even.min(steps - steps % 2)
}

impl SamplingSchedule {
    /// Recording times for a run of `steps` steps, strictly increasing.
    pub fn record_times(&self, steps: u64, tail_fraction: f64) -> Vec<u64> {
        let mut times = vec![0];
        let t_max = steps as f64;
        if self.num_points == 1 {
            times.push(snap_even(t_max, steps));
        } else {
            for k in 0..self.num_points {
                let t = t_max.powf(k as f64 / (self.num_points - 1) as f64);
                times.push(snap_even(t, steps));
            }
        }
        let tail_start = (1.0 - tail_fraction) * t_max;
        for k in 0..self.tail_points {
            let t = if self.tail_points == 1 {
                t_max
            } else {
                tail_start + (t_max - tail_start) * k as f64 / (self.tail_points - 1) as f64
            };
            times.push(snap_even(t.max(tail_start.ceil()), steps));
        }
        times.sort_unstable();
        times.dedup();
        times
    }

    /// Snapshot times within the run, sorted and deduplicated.
    pub fn snapshot_times_for(&self, steps: u64) -> Vec<u64> {
        let mut snaps: Vec<u64> = self.snapshot_times.iter().copied().filter(|&t| t <= steps).collect();
        snaps.sort_unstable();
        snaps.dedup();
        snaps
    }
}

/// Everything needed to reproduce one ensemble of walks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Reference coin angle, radians.
    pub theta0: f64,
    pub chi: f64,
    pub disorder: DisorderKind,
    /// Full width of the uniform disorder distribution, radians.
    pub width: f64,
    pub steps: u64,
    pub ensemble_size: usize,
    pub base_seed: u64,
    pub sampling: SamplingSchedule,
    pub tail_fraction: f64,
}

impl RunConfig {
    /// A disorder-free single walk with default sampling.
    pub fn homogeneous(theta0: f64, chi: f64, steps: u64) -> Self {
        Self {
            theta0,
            chi,
            disorder: DisorderKind::Homogeneous,
            width: 0.0,
            steps,
            ensemble_size: 1,
            base_seed: 0,
            sampling: SamplingSchedule::default(),
            tail_fraction: DEFAULT_TAIL_FRACTION,
        }
    }

    pub fn with_disorder(mut self, kind: DisorderKind, width: f64, ensemble_size: usize, seed: u64) -> Self {
        self.disorder = kind;
        self.width = width;
        self.ensemble_size = ensemble_size;
        self.base_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        NonlinearStrength::new(self.chi)?;
        self.disorder_spec().validate()?;
        if self.steps == 0 {
            return Err(Error::Config("steps must be >= 1".into()));
        }
        if self.ensemble_size == 0 {
            return Err(Error::Config("ensemble size must be >= 1".into()));
        }
        if !(self.tail_fraction > 0.0 && self.tail_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "tail_fraction must lie in (0, 1], got {}",
                self.tail_fraction
            )));
        }
        if self.sampling.num_points == 0 {
            return Err(Error::Config("sampling.num_points must be >= 1".into()));
        }
        Ok(())
    }

    pub fn num_sites(&self) -> usize {
        lattice_size_for(self.steps)
    }

    pub fn disorder_spec(&self) -> DisorderSpec {
        DisorderSpec {
            kind: self.disorder,
            theta0: CoinAngle(self.theta0),
            width: self.width,
            seed: self.base_seed,
        }
    }

    /// Ensemble members that actually differ; a homogeneous walk is a
    /// single deterministic sample however many are requested.
    pub fn effective_ensemble_size(&self) -> usize {
        match self.disorder {
            DisorderKind::Homogeneous => 1,
            _ => self.ensemble_size,
        }
    }
}

/// Per-member record kept alongside an ensemble run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub sample_index: u64,
    pub seed: u64,
    /// `Σ p_n - 1` at the end of the run.
    pub norm_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleRun {
    pub meta: SampleMeta,
    pub series: ObservableSeries,
}

/// Evolves ensemble member `sample_index` and records its observables.
pub fn run_sample(config: &RunConfig, sample_index: u64) -> Result<SampleRun> {
    config.validate()?;
    let chi = NonlinearStrength::new(config.chi)?;
    let steps = config.steps;
    let field = make_coin_field(&config.disorder_spec(), sample_index, config.num_sites(), steps as usize);
    let times = config.sampling.record_times(steps, config.tail_fraction);
    let snaps = config.sampling.snapshot_times_for(steps);
    let mut state = WalkerState::centered(steps);
    let mut series = ObservableSeries::default();
    let (mut next, mut next_snap) = (0, 0);
    for t in 0..=steps {
        if times.get(next) == Some(&t) {
            series.record(&state);
            next += 1;
        }
        if snaps.get(next_snap) == Some(&t) {
            series.record_snapshot(&state);
            next_snap += 1;
        }
        if t < steps {
            state.step(chi, field.coin_at_step(t as usize)?)?;
        }
    }
    Ok(SampleRun {
        meta: SampleMeta {
            sample_index,
            seed: config.base_seed,
            norm_error: state.norm_sqr() - 1.0,
        },
        series,
    })
}

pub fn run_single(config: &RunConfig, sample_index: u64) -> Result<ObservableSeries> {
    run_sample(config, sample_index).map(|run| run.series)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleRun {
    pub mean: ObservableSeries,
    pub samples: Vec<SampleMeta>,
    pub members: Vec<ObservableSeries>,
}

/// Runs every ensemble member (in parallel on the current rayon pool) and
/// averages them in index order.
pub fn run_ensemble(config: &RunConfig) -> Result<EnsembleRun> {
    config.validate()?;
    let runs = (0..config.effective_ensemble_size() as u64)
        .into_par_iter()
        .map(|k| run_sample(config, k))
        .collect::<Result<Vec<_>>>()?;
    let (samples, members): (Vec<_>, Vec<_>) = runs.into_iter().map(|r| (r.meta, r.series)).unzip();
    Ok(EnsembleRun {
        mean: ensemble_average(&members)?,
        samples,
        members,
    })
}

/// Evenly spaced axes of a phase diagram.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub chi: Vec<f64>,
    pub theta: Vec<f64>,
}

fn linspace(min: f64, max: f64, count: usize, name: &str) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::Config(format!("{name}_count must be >= 1")));
    }
    if !(min.is_finite() && max.is_finite() && min <= max) {
        return Err(Error::Config(format!(
            "{name} range must be finite with min <= max, got [{min}, {max}]"
        )));
    }
    if count == 1 {
        return Ok(vec![min]);
    }
    let step = (max - min) / (count - 1) as f64;
    Ok((0..count)
        .map(|k| if k + 1 == count { max } else { min + step * k as f64 })
        .collect())
}

impl SweepGrid {
    pub fn new(chi: Vec<f64>, theta: Vec<f64>) -> Result<Self> {
        if chi.is_empty() || theta.is_empty() {
            return Err(Error::Config("phase-diagram axes must be nonempty".into()));
        }
        Ok(Self { chi, theta })
    }

    pub fn linspace(chi: (f64, f64, usize), theta: (f64, f64, usize)) -> Result<Self> {
        Self::new(
            linspace(chi.0, chi.1, chi.2, "chi")?,
            linspace(theta.0, theta.1, theta.2, "theta")?,
        )
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.chi.len(), self.theta.len())
    }

    /// Row-major cell order: chi index outer, theta index inner.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n_theta = self.theta.len();
        (0..self.chi.len()).flat_map(move |i| (0..n_theta).map(move |j| (i, j)))
    }

    /// The run of cell `(i, j)`: the template with `χ`, `θ₀` and the seed
    /// replaced.
    pub fn cell_config(&self, template: &RunConfig, i: usize, j: usize) -> RunConfig {
        RunConfig {
            chi: self.chi[i],
            theta0: self.theta[j],
            base_seed: derive_seed(template.base_seed, &[i as u64, j as u64]),
            ..template.clone()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub r0: f64,
    pub pr: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            r0: DEFAULT_R0_THRESHOLD,
            pr: DEFAULT_PR_THRESHOLD,
        }
    }
}

/// Long-time averages of one phase-diagram cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub chi_index: usize,
    pub theta_index: usize,
    pub chi: f64,
    pub theta0: f64,
    pub r0_bar: f64,
    pub pr_bar: f64,
}

pub fn run_cell(grid: &SweepGrid, template: &RunConfig, i: usize, j: usize) -> Result<CellRecord> {
    let config = grid.cell_config(template, i, j);
    let run = run_ensemble(&config)?;
    let (r0_bar, pr_bar) = long_time_average(&run.mean, config.tail_fraction)?;
    Ok(CellRecord {
        chi_index: i,
        theta_index: j,
        chi: config.chi,
        theta0: config.theta0,
        r0_bar,
        pr_bar,
    })
}

/// Runs every cell not already in `completed`, calling `on_cell` as each one
/// finishes (in completion order). An error from `on_cell` stops the sweep.
/// Returns all records, completed ones included, in row-major order.
pub fn run_cells<F>(
    grid: &SweepGrid,
    template: &RunConfig,
    completed: &[CellRecord],
    on_cell: F,
) -> Result<Vec<CellRecord>>
where
    F: Fn(&CellRecord) -> Result<()> + Sync,
{
    template.validate()?;
    let (n_chi, n_theta) = grid.shape();
    let mut slots: Vec<Option<CellRecord>> = vec![None; n_chi * n_theta];
    for rec in completed {
        if rec.chi_index >= n_chi || rec.theta_index >= n_theta {
            return Err(Error::Config(format!(
                "completed cell ({}, {}) lies outside the {n_chi}x{n_theta} grid",
                rec.chi_index, rec.theta_index
            )));
        }
        slots[rec.chi_index * n_theta + rec.theta_index] = Some(*rec);
    }
    let pending: Vec<(usize, usize)> = grid
        .cells()
        .filter(|&(i, j)| slots[i * n_theta + j].is_none())
        .collect();
    let fresh = pending
        .into_par_iter()
        .map(|(i, j)| {
            let rec = run_cell(grid, template, i, j)?;
            on_cell(&rec)?;
            Ok(rec)
        })
        .collect::<Result<Vec<_>>>()?;
    for rec in fresh {
        slots[rec.chi_index * n_theta + rec.theta_index] = Some(rec);
    }
    Ok(slots.into_iter().flatten().collect())
}

/// Long-time averages over the `(χ, θ₀)` grid with threshold masks.
/// Matrices are indexed `[chi index][theta index]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseDiagram {
    pub chi_axis: Vec<f64>,
    pub theta_axis: Vec<f64>,
    pub r0_bar: Vec<Vec<f64>>,
    pub pr_bar: Vec<Vec<f64>>,
    pub mask_r0: Vec<Vec<bool>>,
    pub mask_pr: Vec<Vec<bool>>,
    pub thresholds: Thresholds,
}

impl PhaseDiagram {
    /// Assembles the matrices from per-cell records; every cell must be present.
    pub fn assemble(grid: &SweepGrid, records: &[CellRecord], thresholds: Thresholds) -> Result<Self> {
        let (n_chi, n_theta) = grid.shape();
        let mut r0 = vec![vec![f64::NAN; n_theta]; n_chi];
        let mut pr = r0.clone();
        let mut seen = vec![vec![false; n_theta]; n_chi];
        for rec in records {
            let (i, j) = (rec.chi_index, rec.theta_index);
            if i >= n_chi || j >= n_theta {
                return Err(Error::Config(format!("cell ({i}, {j}) lies outside the grid")));
            }
            r0[i][j] = rec.r0_bar;
            pr[i][j] = rec.pr_bar;
            seen[i][j] = true;
        }
        if let Some((i, j)) = grid.cells().find(|&(i, j)| !seen[i][j]) {
            return Err(Error::Config(format!("phase diagram is missing cell ({i}, {j})")));
        }
        let mask = |m: &Vec<Vec<f64>>, thr: f64| -> Vec<Vec<bool>> {
            m.iter().map(|row| row.iter().map(|&v| v < thr).collect()).collect()
        };
        Ok(Self {
            chi_axis: grid.chi.clone(),
            theta_axis: grid.theta.clone(),
            mask_r0: mask(&r0, thresholds.r0),
            mask_pr: mask(&pr, thresholds.pr),
            r0_bar: r0,
            pr_bar: pr,
            thresholds,
        })
    }

    pub fn cell_count(&self, pred: impl Fn(usize, usize) -> bool) -> usize {
        (0..self.chi_axis.len())
            .flat_map(|i| (0..self.theta_axis.len()).map(move |j| (i, j)))
            .filter(|&(i, j)| pred(i, j))
            .count()
    }
}

pub fn run_phase_diagram(grid: &SweepGrid, template: &RunConfig, thresholds: Thresholds) -> Result<PhaseDiagram> {
    let records = run_cells(grid, template, &[], |_| Ok(()))?;
    PhaseDiagram::assemble(grid, &records, thresholds)
}

const CELL_LOG_HEADER: &str = "chi_index,theta_index,chi,theta0,r0_bar,pr_bar";

/// Append-only record of finished cells, one CSV line per cell.
///
/// The first line is `# <key>`, where the key identifies the sweep; a log
/// with a different key is refused on resume. Floats are written in their
/// shortest round-trip form so reloaded records are bit-identical. A
/// truncated final line (an interrupted write) is ignored on load.
pub struct CellLog {
    path: PathBuf,
    file: File,
}

impl CellLog {
    /// Creates a new log, replacing any existing file.
    pub fn create(path: &Path, key: &str) -> Result<Self> {
        let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
        writeln!(file, "# {key}\n{CELL_LOG_HEADER}").map_err(|e| Error::io(path, e))?;
        Ok(Self {
            path: path.to_owned(),
            file,
        })
    }

    /// Opens an existing log for appending and returns the records in it.
    /// Anything after the last complete record is cut off.
    pub fn resume(path: &Path, key: &str) -> Result<(Self, Vec<CellRecord>)> {
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = raw.split_inclusive('\n');
        let first = lines.next().unwrap_or("");
        if first.trim_end().strip_prefix("# ") != Some(key) {
            return Err(Error::Config(format!(
                "{} was written by a different sweep configuration; rerun without --resume",
                path.display()
            )));
        }
        let mut valid = first.len();
        let mut records = Vec::new();
        for line in lines {
            let Some(body) = line.strip_suffix('\n') else { break };
            if body != CELL_LOG_HEADER {
                match parse_cell_line(body) {
                    Some(rec) => records.push(rec),
                    None => break,
                }
            }
            valid += line.len();
        }
        let mut file = OpenOptions::new()
            .write(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        file.set_len(valid as u64)
            .and_then(|_| file.seek(SeekFrom::End(0)))
            .map_err(|e| Error::io(path, e))?;
        Ok((
            Self {
                path: path.to_owned(),
                file,
            },
            records,
        ))
    }

    pub fn append(&mut self, rec: &CellRecord) -> Result<()> {
        writeln!(
            self.file,
            "{},{},{},{},{},{}",
            rec.chi_index, rec.theta_index, rec.chi, rec.theta0, rec.r0_bar, rec.pr_bar
        )
        .and_then(|_| self.file.flush())
        .map_err(|e| Error::io(&self.path, e))
    }
}

fn parse_cell_line(line: &str) -> Option<CellRecord> {
    let mut it = line.split(',');
    let rec = CellRecord {
        chi_index: it.next()?.parse().ok()?,
        theta_index: it.next()?.parse().ok()?,
        chi: it.next()?.parse().ok()?,
        theta0: it.next()?.parse().ok()?,
        r0_bar: it.next()?.parse().ok()?,
        pr_bar: it.next()?.parse().ok()?,
    };
    it.next().is_none().then_some(rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    #[test]
    fn record_times_are_even_increasing_and_bounded() {
        let sched = SamplingSchedule::default();
        for steps in [1, 2, 7, 100, 5000, 10_001] {
            let times = sched.record_times(steps, 0.1);
            assert_eq!(times[0], 0);
            assert!(times.windows(2).all(|w| w[0] < w[1]));
            assert!(times.iter().all(|t| t % 2 == 0 && *t <= steps));
            assert_eq!(*times.last().unwrap(), steps - steps % 2);
        }
    }

    #[test]
    fn tail_window_is_densely_sampled() {
        let times = SamplingSchedule::default().record_times(5000, 0.1);
        let in_tail = times.iter().filter(|&&t| t >= 4500).count();
        assert!(in_tail >= 100, "{in_tail} samples in the tail");
        let last_decade = times.iter().filter(|&&t| t >= 500).count();
        assert!(last_decade > in_tail);
    }

    #[test]
    fn snapshot_times_are_clipped_to_the_run() {
        let sched = SamplingSchedule {
            snapshot_times: vec![50, 0, 10, 10, 200],
            ..Default::default()
        };
        assert_eq!(sched.snapshot_times_for(100), vec![0, 10, 50]);
    }

    #[test]
    fn config_validation() {
        let ok = RunConfig::homogeneous(FRAC_PI_4, 0.3, 10);
        assert!(ok.validate().is_ok());
        assert_eq!(ok.num_sites(), 25);
        let bad = [
            RunConfig { steps: 0, ..ok.clone() },
            RunConfig { chi: -0.1, ..ok.clone() },
            RunConfig { ensemble_size: 0, ..ok.clone() },
            RunConfig { tail_fraction: 0.0, ..ok.clone() },
            RunConfig { width: -1.0, ..ok.clone() },
        ];
        for cfg in bad {
            assert!(matches!(cfg.validate(), Err(Error::Config(_))), "{cfg:?}");
        }
    }

    #[test]
    fn homogeneous_ensembles_collapse_to_one_member() {
        let cfg = RunConfig::homogeneous(FRAC_PI_4, 0.3, 40).with_disorder(DisorderKind::Homogeneous, 10.0, 7, 3);
        assert_eq!(cfg.effective_ensemble_size(), 1);
        let run = run_ensemble(&cfg).unwrap();
        assert_eq!(run.members.len(), 1);
        assert_eq!(run.mean, run_single(&cfg, 0).unwrap());
    }

    #[test]
    fn single_member_ensemble_equals_the_run() {
        let cfg = RunConfig::homogeneous(FRAC_PI_4, 0.3, 60).with_disorder(DisorderKind::Spatial, 10.0, 1, 11);
        assert_eq!(run_ensemble(&cfg).unwrap().mean, run_single(&cfg, 0).unwrap());
    }

    #[test]
    fn sample_norm_is_preserved() {
        let cfg = RunConfig::homogeneous(FRAC_PI_4, 0.6, 500).with_disorder(DisorderKind::Temporal, 10.0, 2, 1);
        for k in 0..2 {
            assert!(run_sample(&cfg, k).unwrap().meta.norm_error.abs() < 1e-12);
        }
    }

    #[test]
    fn snapshots_are_recorded_on_schedule() {
        let mut cfg = RunConfig::homogeneous(FRAC_PI_4, 0.0, 20);
        cfg.sampling.snapshot_times = vec![0, 5, 20];
        let series = run_single(&cfg, 0).unwrap();
        let ts: Vec<u64> = series.snapshots.iter().map(|s| s.t).collect();
        assert_eq!(ts, vec![0, 5, 20]);
        assert_eq!(series.snapshots[2].density.len(), 41);
        let total: f64 = series.snapshots[1].density.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn linspace_axes() {
        let g = SweepGrid::linspace((0.0, 1.0, 5), (FRAC_PI_2 / 9.0, FRAC_PI_2, 9)).unwrap();
        assert_eq!(g.chi, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(g.theta[8], FRAC_PI_2);
        assert!((g.theta[0] - FRAC_PI_2 / 9.0).abs() < 1e-15);
        assert_eq!(g.cells().count(), 45);
        assert!(SweepGrid::linspace((0.0, 1.0, 0), (0.1, 1.0, 3)).is_err());
        assert!(SweepGrid::linspace((1.0, 0.0, 2), (0.1, 1.0, 3)).is_err());
        assert_eq!(SweepGrid::linspace((0.6, 0.6, 1), (1.0, 1.0, 1)).unwrap().shape(), (1, 1));
    }

    #[test]
    fn cells_get_distinct_seeds() {
        let g = SweepGrid::linspace((0.0, 1.0, 3), (0.1, 1.0, 3)).unwrap();
        let t = RunConfig::homogeneous(0.5, 0.1, 10);
        let a = g.cell_config(&t, 0, 1);
        let b = g.cell_config(&t, 1, 0);
        assert_ne!(a.base_seed, b.base_seed);
        assert_eq!(a.chi, 0.0);
        assert_eq!(a.theta0, g.theta[1]);
    }

    #[test]
    fn assemble_masks_and_missing_cells() {
        let g = SweepGrid::new(vec![0.0, 1.0], vec![0.5]).unwrap();
        let rec = |i, r0_bar, pr_bar| CellRecord {
            chi_index: i,
            theta_index: 0,
            chi: g.chi[i],
            theta0: 0.5,
            r0_bar,
            pr_bar,
        };
        let d = PhaseDiagram::assemble(&g, &[rec(1, 0.9, 1.2), rec(0, 0.01, 40.0)], Thresholds::default()).unwrap();
        assert_eq!(d.mask_r0, vec![vec![true], vec![false]]);
        assert_eq!(d.mask_pr, vec![vec![false], vec![true]]);
        assert_eq!(d.cell_count(|i, j| d.mask_r0[i][j]), 1);
        assert!(PhaseDiagram::assemble(&g, &[rec(0, 0.1, 1.0)], Thresholds::default()).is_err());
    }

    #[test]
    fn cell_log_round_trips_and_tolerates_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cells.log");
        let rec = CellRecord {
            chi_index: 2,
            theta_index: 3,
            chi: 0.1 + 0.2,
            theta0: std::f64::consts::PI / 7.0,
            r0_bar: 1.0 / 3.0,
            pr_bar: 12.345678901234567,
        };
        {
            let mut log = CellLog::create(&path, "key-1").unwrap();
            log.append(&rec).unwrap();
        }
        let mut raw = std::fs::read_to_string(&path).unwrap();
        raw.push_str("4,1,0.5,0.2");
        std::fs::write(&path, raw).unwrap();
        let (mut log, records) = CellLog::resume(&path, "key-1").unwrap();
        assert_eq!(records, vec![rec]);
        log.append(&rec).unwrap();
        drop(log);
        let (_, records) = CellLog::resume(&path, "key-1").unwrap();
        assert_eq!(records, vec![rec, rec]);
        assert!(CellLog::resume(&path, "key-2").is_err());
    }
}
