//! Experiment files.
//!
//! An experiment is a TOML document with the sections `[walk]`, `[disorder]`,
//! `[ensemble]`, `[sampling]`, `[sweep]`, `[output]` and `[paper_scale]`.
//! Unknown keys are rejected. Angles may be written in radians or as simple
//! multiples of pi (`"pi/4"`, `"3pi/8"`, `"0.5*pi"`).
//!
//! ```toml
//! [walk]
//! theta0 = "pi/4"
//! chi = 0.3
//! steps = 5000
//!
//! [disorder]
//! kind = "spatial"
//! width = 10.0
//! seed = 7
//!
//! [ensemble]
//! size = 10
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::disorder::{DisorderKind, DEFAULT_WIDTH};
use crate::error::{Error, Result};
use crate::sweep::{RunConfig, SamplingSchedule, SweepGrid, Thresholds};

/// An angle in radians that also accepts `"<a>*pi/<b>"`-style strings.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Angle(pub f64);

/// Parses `pi`, `pi/4`, `3pi/8`, `3*pi/8`, `0.5*pi`, `-pi/2` or a plain number.
pub fn parse_angle(raw: &str) -> Option<f64> {
    let s: String = raw.chars().filter(|c| !c.is_whitespace()).collect();
    if let Ok(v) = s.parse::<f64>() {
        return Some(v);
    }
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n, d.parse::<f64>().ok()?),
        None => (s.as_str(), 1.0),
    };
    let coef = num.strip_suffix("pi").or_else(|| num.strip_suffix("π"))?;
    let coef = coef.strip_suffix('*').unwrap_or(coef);
    let coef = match coef {
        "" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().ok()?,
    };
    let v = coef * std::f64::consts::PI / den;
    v.is_finite().then_some(v)
}

impl Serialize for Angle {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct AngleVisitor;

        impl Visitor<'_> for AngleVisitor {
            type Value = Angle;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an angle in radians or a string such as \"pi/4\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Angle, E> {
                Ok(Angle(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Angle, E> {
                Ok(Angle(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Angle, E> {
                Ok(Angle(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Angle, E> {
                parse_angle(v)
                    .map(Angle)
                    .ok_or_else(|| E::custom(format!("cannot parse angle {v:?}")))
            }
        }

        d.deserialize_any(AngleVisitor)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkSection {
    pub theta0: Angle,
    pub chi: f64,
    pub steps: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DisorderSection {
    pub kind: DisorderKind,
    pub width: f64,
    pub seed: u64,
}

impl Default for DisorderSection {
    fn default() -> Self {
        Self {
            kind: DisorderKind::Homogeneous,
            width: DEFAULT_WIDTH,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleSection {
    pub size: usize,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        Self { size: 10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingSection {
    pub num_points: usize,
    pub tail_points: usize,
    pub snapshot_times: Vec<u64>,
    /// Also snapshot every this many steps (0 disables).
    pub snapshot_every: u64,
}

impl Default for SamplingSection {
    fn default() -> Self {
        let d = SamplingSchedule::default();
        Self {
            num_points: d.num_points,
            tail_points: d.tail_points,
            snapshot_times: d.snapshot_times,
            snapshot_every: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub chi_min: f64,
    pub chi_max: f64,
    pub chi_count: usize,
    pub theta_min: Angle,
    pub theta_max: Angle,
    pub theta_count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub directory: Option<PathBuf>,
    pub tail_fraction: f64,
    pub r0_threshold: f64,
    pub pr_threshold: f64,
    /// Write per-sample columns to `series.csv`.
    pub per_sample: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        let t = Thresholds::default();
        Self {
            directory: None,
            tail_fraction: crate::sweep::DEFAULT_TAIL_FRACTION,
            r0_threshold: t.r0,
            pr_threshold: t.pr,
            per_sample: false,
        }
    }
}

/// Values substituted when running with `--paper-scale`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PaperScaleSection {
    pub steps: u64,
    pub ensemble_size: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chi_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_count: Option<usize>,
    /// Lower end of the θ₀ axis under `--paper-scale`; keeps the finer axis evenly
    /// spaced over `(0, π/2]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_min: Option<Angle>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<u64>,
}

impl Default for PaperScaleSection {
    fn default() -> Self {
        Self {
            steps: 70_000,
            ensemble_size: 50,
            chi_count: Some(41),
            theta_count: Some(41),
            theta_min: None,
            snapshot_every: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub walk: WalkSection,
    #[serde(default)]
    pub disorder: DisorderSection,
    #[serde(default)]
    pub ensemble: EnsembleSection,
    #[serde(default)]
    pub sampling: SamplingSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub paper_scale: PaperScaleSection,
}

fn config_err(source: &str, e: impl fmt::Display) -> Error {
    Error::Config(format!("{source}: {e}"))
}

/// Parses the right-hand side of `--set key=value` as a TOML value, falling
/// back to a bare string.
fn parse_override_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_owned()))
}

/// Applies a `section.key=value` override to a parsed document.
pub fn apply_override(doc: &mut toml::Table, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {assignment:?} is not of the form key=value")))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(Error::Config(format!("bad override key {path:?}")));
    }
    let (last, parents) = keys.split_last().expect("split yields at least one key");
    let mut table = doc;
    for key in parents {
        table = table
            .entry(key.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override {path:?}: {key} is not a section")))?;
    }
    table.insert(last.to_string(), parse_override_value(raw.trim()));
    Ok(())
}

impl ExperimentFile {
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        Self::parse(text, overrides, "<config>")
    }

    fn parse(text: &str, overrides: &[String], source: &str) -> Result<Self> {
        let file: Self = if overrides.is_empty() {
            toml::from_str(text).map_err(|e| config_err(source, e))?
        } else {
            let mut doc: toml::Table = toml::from_str(text).map_err(|e| config_err(source, e))?;
            for o in overrides {
                apply_override(&mut doc, o)?;
            }
            toml::Value::Table(doc)
                .try_into()
                .map_err(|e| config_err(source, e))?
        };
        file.validate()?;
        Ok(file)
    }

    /// Loads a TOML experiment file, or the `config` record of a `meta.json`
    /// written by a previous run.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let source = path.display().to_string();
        if path.extension().is_some_and(|ext| ext == "json") {
            let meta: serde_json::Value = serde_json::from_str(&text).map_err(|e| config_err(&source, e))?;
            let config = meta
                .get("config")
                .ok_or_else(|| config_err(&source, "metadata record has no `config` entry"))?;
            // Route through TOML so overrides and validation behave the same.
            let as_toml = toml::to_string(config).map_err(|e| config_err(&source, e))?;
            return Self::parse(&as_toml, overrides, &source);
        }
        Self::parse(&text, overrides, &source)
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: String| if ok { Ok(()) } else { Err(Error::Config(msg)) };
        check(self.walk.steps >= 1, "walk.steps must be >= 1".into())?;
        check(
            self.walk.chi.is_finite() && self.walk.chi >= 0.0,
            format!("walk.chi must be finite and >= 0, got {}", self.walk.chi),
        )?;
        check(
            self.walk.theta0.0.is_finite(),
            format!("walk.theta0 must be finite, got {}", self.walk.theta0.0),
        )?;
        check(
            self.disorder.width.is_finite() && self.disorder.width >= 0.0,
            format!("disorder.width must be finite and >= 0, got {}", self.disorder.width),
        )?;
        check(self.ensemble.size >= 1, "ensemble.size must be >= 1".into())?;
        check(self.sampling.num_points >= 1, "sampling.num_points must be >= 1".into())?;
        let o = &self.output;
        check(
            o.tail_fraction > 0.0 && o.tail_fraction <= 1.0,
            format!("output.tail_fraction must lie in (0, 1], got {}", o.tail_fraction),
        )?;
        check(
            o.r0_threshold > 0.0,
            format!("output.r0_threshold must be > 0, got {}", o.r0_threshold),
        )?;
        check(
            o.pr_threshold > 0.0,
            format!("output.pr_threshold must be > 0, got {}", o.pr_threshold),
        )?;
        let p = &self.paper_scale;
        check(p.steps >= 1, "paper_scale.steps must be >= 1".into())?;
        check(p.ensemble_size >= 1, "paper_scale.ensemble_size must be >= 1".into())?;
        if let Some(s) = &self.sweep {
            check(s.chi_count >= 1, "sweep.chi_count must be >= 1".into())?;
            check(s.theta_count >= 1, "sweep.theta_count must be >= 1".into())?;
            check(
                s.chi_min >= 0.0 && s.chi_min <= s.chi_max,
                format!("sweep chi range must satisfy 0 <= chi_min <= chi_max, got [{}, {}]", s.chi_min, s.chi_max),
            )?;
            check(
                s.theta_min.0 <= s.theta_max.0,
                format!(
                    "sweep theta range must satisfy theta_min <= theta_max, got [{}, {}]",
                    s.theta_min.0, s.theta_max.0
                ),
            )?;
        }
        Ok(())
    }

    pub fn steps(&self, paper_scale: bool) -> u64 {
        if paper_scale {
            self.paper_scale.steps
        } else {
            self.walk.steps
        }
    }

    /// The file with the `[paper_scale]` values folded in, so that running it
    /// without `--paper-scale` reproduces a paper-scale run.
    pub fn resolved(&self, paper_scale: bool) -> Self {
        let mut out = self.clone();
        out.output.directory = None;
        if !paper_scale {
            return out;
        }
        let p = &self.paper_scale;
        out.walk.steps = p.steps;
        out.ensemble.size = p.ensemble_size;
        if let Some(every) = p.snapshot_every {
            out.sampling.snapshot_every = every;
        }
        if let Some(s) = out.sweep.as_mut() {
            s.chi_count = p.chi_count.unwrap_or(s.chi_count);
            s.theta_count = p.theta_count.unwrap_or(s.theta_count);
            s.theta_min = p.theta_min.unwrap_or(s.theta_min);
        }
        out
    }

    pub fn thresholds(&self) -> Thresholds {
        Thresholds {
            r0: self.output.r0_threshold,
            pr: self.output.pr_threshold,
        }
    }

    pub fn run_config(&self, paper_scale: bool) -> RunConfig {
        let steps = self.steps(paper_scale);
        let every = match (paper_scale, self.paper_scale.snapshot_every) {
            (true, Some(e)) => e,
            _ => self.sampling.snapshot_every,
        };
        let mut snapshot_times = self.sampling.snapshot_times.clone();
        if every > 0 {
            snapshot_times.extend((0..=steps).step_by(every as usize));
        }
        let width = match self.disorder.kind {
            DisorderKind::Homogeneous => 0.0,
            _ => self.disorder.width,
        };
        RunConfig {
            theta0: self.walk.theta0.0,
            chi: self.walk.chi,
            disorder: self.disorder.kind,
            width,
            steps,
            ensemble_size: if paper_scale {
                self.paper_scale.ensemble_size
            } else {
                self.ensemble.size
            },
            base_seed: self.disorder.seed,
            sampling: SamplingSchedule {
                num_points: self.sampling.num_points,
                tail_points: self.sampling.tail_points,
                snapshot_times,
            },
            tail_fraction: self.output.tail_fraction,
        }
    }

    pub fn grid(&self, paper_scale: bool) -> Result<SweepGrid> {
        let s = self
            .sweep
            .as_ref()
            .ok_or_else(|| Error::Config("missing [sweep] section".into()))?;
        let p = &self.paper_scale;
        let (chi_count, theta_count, theta_min) = if paper_scale {
            (
                p.chi_count.unwrap_or(s.chi_count),
                p.theta_count.unwrap_or(s.theta_count),
                p.theta_min.unwrap_or(s.theta_min),
            )
        } else {
            (s.chi_count, s.theta_count, s.theta_min)
        };
        if theta_min.0 > s.theta_max.0 {
            return Err(Error::Config(format!(
                "theta_min {} exceeds sweep.theta_max {}",
                theta_min.0, s.theta_max.0
            )));
        }
        SweepGrid::linspace((s.chi_min, s.chi_max, chi_count), (theta_min.0, s.theta_max.0, theta_count))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const MINIMAL: &str = r#"
[walk]
theta0 = "pi/4"
chi = 0.3
steps = 100
"#;

    #[test]
    fn angles_parse_in_several_spellings() {
        assert_eq!(parse_angle("pi"), Some(PI));
        assert_eq!(parse_angle("pi/4"), Some(PI / 4.0));
        assert_eq!(parse_angle("3pi/8"), Some(3.0 * PI / 8.0));
        assert_eq!(parse_angle(" 3 * pi / 8 "), Some(3.0 * PI / 8.0));
        assert_eq!(parse_angle("0.5*pi"), Some(0.5 * PI));
        assert_eq!(parse_angle("-pi/2"), Some(-PI / 2.0));
        assert_eq!(parse_angle("1.25"), Some(1.25));
        assert_eq!(parse_angle("tau"), None);
        assert_eq!(parse_angle("pi/0"), None);
    }

    #[test]
    fn minimal_file_gets_defaults() {
        let f = ExperimentFile::from_toml_str(MINIMAL, &[]).unwrap();
        assert_eq!(f.walk.theta0, Angle(PI / 4.0));
        assert_eq!(f.disorder.kind, DisorderKind::Homogeneous);
        assert_eq!(f.ensemble.size, 10);
        let run = f.run_config(false);
        assert_eq!(run.steps, 100);
        assert_eq!(run.width, 0.0);
        assert_eq!(run.tail_fraction, 0.1);
        assert_eq!(f.run_config(true).steps, 70_000);
        assert_eq!(f.run_config(true).ensemble_size, 50);
    }

    #[test]
    fn missing_key_is_named() {
        let err = ExperimentFile::from_toml_str("[walk]\nchi = 0.3\nsteps = 10\n", &[]).unwrap_err();
        assert!(err.to_string().contains("theta0"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("{MINIMAL}\n[disorder]\nkind = \"spatial\"\nwdth = 3.0\n");
        let err = ExperimentFile::from_toml_str(&text, &[]).unwrap_err();
        assert!(err.to_string().contains("wdth"), "{err}");
        let text = format!("{MINIMAL}\n[extra]\nx = 1\n");
        assert!(ExperimentFile::from_toml_str(&text, &[]).is_err());
    }

    #[test]
    fn physical_parameters_are_validated() {
        for bad in [
            "walk.steps=0",
            "walk.chi=-1.0",
            "disorder.width=-0.5",
            "output.r0_threshold=0.0",
            "output.pr_threshold=-2.0",
            "output.tail_fraction=0.0",
            "ensemble.size=0",
        ] {
            assert!(
                ExperimentFile::from_toml_str(MINIMAL, &[bad.to_string()]).is_err(),
                "{bad} accepted"
            );
        }
    }

    #[test]
    fn overrides_replace_and_create_keys() {
        let f = ExperimentFile::from_toml_str(
            MINIMAL,
            &[
                "walk.chi=0.6".into(),
                "walk.theta0=pi/3".into(),
                "disorder.kind=temporal".into(),
                "disorder.seed=12".into(),
            ],
        )
        .unwrap();
        assert_eq!(f.walk.chi, 0.6);
        assert_eq!(f.walk.theta0, Angle(PI / 3.0));
        assert_eq!(f.disorder.kind, DisorderKind::Temporal);
        assert_eq!(f.disorder.seed, 12);
        assert!(ExperimentFile::from_toml_str(MINIMAL, &["walk".into()]).is_err());
        assert!(ExperimentFile::from_toml_str(MINIMAL, &["walk.chi.x=1".into()]).is_err());
    }

    #[test]
    fn sweep_grid_from_file() {
        let text = format!(
            "{MINIMAL}\n[sweep]\nchi_min = 0.0\nchi_max = 1.0\nchi_count = 9\ntheta_min = \"pi/18\"\ntheta_max = \"pi/2\"\ntheta_count = 9\n"
        );
        let f = ExperimentFile::from_toml_str(&text, &[]).unwrap();
        let g = f.grid(false).unwrap();
        assert_eq!(g.shape(), (9, 9));
        assert_eq!(g.theta[8], PI / 2.0);
        assert_eq!(f.grid(true).unwrap().shape(), (41, 41));
        let bad = ExperimentFile::from_toml_str(&text, &["sweep.chi_count=0".into()]);
        assert!(bad.is_err());
        assert!(ExperimentFile::from_toml_str(MINIMAL, &[]).unwrap().grid(false).is_err());
    }

    #[test]
    fn snapshot_every_expands_to_times() {
        let f = ExperimentFile::from_toml_str(
            MINIMAL,
            &["sampling.snapshot_every=25".into(), "sampling.snapshot_times=[3]".into()],
        )
        .unwrap();
        let mut times = f.run_config(false).sampling.snapshot_times;
        times.sort_unstable();
        assert_eq!(times, vec![0, 3, 25, 50, 75, 100]);
    }

    #[test]
    fn resolved_file_reproduces_paper_scale() {
        let text = format!(
            "{MINIMAL}\n[sweep]\nchi_min = 0.0\nchi_max = 1.0\nchi_count = 3\ntheta_min = 0.1\ntheta_max = 1.5\ntheta_count = 3\n[paper_scale]\nsteps = 500\nensemble_size = 4\nchi_count = 5\ntheta_min = \"pi/82\"\nsnapshot_every = 100\n"
        );
        let f = ExperimentFile::from_toml_str(&text, &[]).unwrap();
        let r = f.resolved(true);
        assert_eq!(r.run_config(false), f.run_config(true));
        assert_eq!(r.grid(false).unwrap(), f.grid(true).unwrap());
        assert_eq!(f.resolved(false).run_config(false), f.run_config(false));
    }

    #[test]
    fn serialized_file_round_trips() {
        let f = ExperimentFile::from_toml_str(MINIMAL, &["disorder.kind=spatial".into()]).unwrap();
        let json = serde_json::to_value(&f).unwrap();
        let back = ExperimentFile::from_toml_str(&toml::to_string(&json).unwrap(), &[]).unwrap();
        assert_eq!(back, f);
    }
}
