//! Scenario configuration in flat `key = value` form.
//!
//! ```text
//! # soliton leaving the window
//! scenario = soliton
//! grid.n = 8192
//! grid.length = 800
//! solver.dt = 5e-3
//! soliton.c = 1
//! soliton.x0 = -10
//! ```
//!
//! Keys are dotted, one per line; `#` starts a comment. Unknown and
//! repeated keys are rejected.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lemmas::random_band_limited;
use crate::soliton::{certified_soliton, soliton, SolitonParams};
use crate::solver::SolverConfig;
use crate::spectral::{Field, Grid};
use crate::virial::WeightSchedule;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolitonFamily {
    /// `(A, s) = (-2B, -B)`.
    Certified,
    /// `(A, s) = (4c, c)`.
    Classical,
}

impl SolitonFamily {
    fn as_str(self) -> &'static str {
        match self {
            SolitonFamily::Certified => "certified",
            SolitonFamily::Classical => "classical",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Scenario {
    Soliton {
        c: f64,
        x0: f64,
        family: SolitonFamily,
    },
    Gaussian {
        amplitude: f64,
        width: f64,
        center: f64,
    },
    Random {
        seed: u64,
        bandwidth: usize,
        amplitude: f64,
    },
    /// One sample per line, `grid.n` lines.
    Custom {
        samples: PathBuf,
    },
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Soliton { .. } => "soliton",
            Scenario::Gaussian { .. } => "gaussian",
            Scenario::Random { .. } => "random",
            Scenario::Custom { .. } => "custom",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub grid_n: usize,
    pub grid_length: f64,
    pub solver: SolverConfig,
    pub weight_a: f64,
    pub weight_c: f64,
    /// Output directory; the CLI's `--out` and the environment take over
    /// when this is unset.
    pub output_dir: Option<PathBuf>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            scenario: Scenario::Soliton {
                c: 1.0,
                x0: 0.0,
                family: SolitonFamily::Certified,
            },
            grid_n: 1024,
            grid_length: 200.0,
            solver: SolverConfig::default(),
            weight_a: 0.0,
            weight_c: 1.0,
            output_dir: None,
        }
    }
}

const KEYS: &[&str] = &[
    "scenario",
    "grid.n",
    "grid.length",
    "solver.dt",
    "solver.t0",
    "solver.t_end",
    "solver.dealias",
    "solver.record_every",
    "solver.nonlinear",
    "weight.a",
    "weight.c_scale",
    "soliton.c",
    "soliton.x0",
    "soliton.family",
    "gaussian.amplitude",
    "gaussian.width",
    "gaussian.center",
    "random.seed",
    "random.bandwidth",
    "random.amplitude",
    "custom.samples",
    "output.dir",
    "output.format",
];

struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn parse(text: &str) -> Result<Entries> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
                line,
                msg: format!("expected `key = value`, got {content:?}"),
            })?;
            let key = key.trim();
            let value = value.trim();
            if !KEYS.contains(&key) {
                return Err(Error::Config {
                    line,
                    msg: format!("unknown key {key:?}"),
                });
            }
            if value.is_empty() {
                return Err(Error::Config {
                    line,
                    msg: format!("empty value for {key}"),
                });
            }
            if map.insert(key.to_string(), (line, value.to_string())).is_some() {
                return Err(Error::Config {
                    line,
                    msg: format!("duplicate key {key}"),
                });
            }
        }
        Ok(Entries { map })
    }

    fn raw(&self, key: &str) -> Option<&(usize, String)> {
        self.map.get(key)
    }

    fn get<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.map.get(key) {
            None => Ok(default),
            Some((line, v)) => v.parse().map_err(|_| Error::Config {
                line: *line,
                msg: format!("cannot parse {key} = {v:?}"),
            }),
        }
    }

    fn has_prefix(&self, prefix: &str) -> Option<(usize, &str)> {
        self.map
            .iter()
            .find(|(k, _)| k.starts_with(prefix))
            .map(|(k, (line, _))| (*line, k.as_str()))
    }
}

impl ScenarioConfig {
    /// Parses `text`; relative sample paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<ScenarioConfig> {
        let e = Entries::parse(text)?;
        let d = ScenarioConfig::default();
        let name = e.get("scenario", "soliton".to_string())?;
        let scenario = match name.as_str() {
            "soliton" => {
                let family = match e.raw("soliton.family").map(|(l, v)| (*l, v.as_str())) {
                    None | Some((_, "certified")) => SolitonFamily::Certified,
                    Some((_, "classical")) => SolitonFamily::Classical,
                    Some((line, other)) => {
                        return Err(Error::Config {
                            line,
                            msg: format!("soliton.family must be certified or classical, got {other:?}"),
                        })
                    }
                };
                Scenario::Soliton {
                    c: e.get("soliton.c", 1.0)?,
                    x0: e.get("soliton.x0", 0.0)?,
                    family,
                }
            }
            "gaussian" => Scenario::Gaussian {
                amplitude: e.get("gaussian.amplitude", 1.0)?,
                width: e.get("gaussian.width", 1.0)?,
                center: e.get("gaussian.center", 0.0)?,
            },
            "random" => Scenario::Random {
                seed: e.get("random.seed", 0)?,
                bandwidth: e.get("random.bandwidth", 32)?,
                amplitude: e.get("random.amplitude", 1.0)?,
            },
            "custom" => {
                let (line, path) = e.raw("custom.samples").ok_or(Error::Config {
                    line: 0,
                    msg: "scenario custom needs custom.samples".into(),
                })?;
                let path = PathBuf::from(path);
                let path = if path.is_relative() { base.join(path) } else { path };
                if !path.is_file() {
                    return Err(Error::Config {
                        line: *line,
                        msg: format!("samples file {} does not exist", path.display()),
                    });
                }
                Scenario::Custom { samples: path }
            }
            other => {
                let line = e.raw("scenario").map_or(0, |(l, _)| *l);
                return Err(Error::Config {
                    line,
                    msg: format!("unknown scenario {other:?}"),
                });
            }
        };
        for prefix in ["soliton.", "gaussian.", "random.", "custom."] {
            if prefix.trim_end_matches('.') != scenario.name() {
                if let Some((line, key)) = e.has_prefix(prefix) {
                    return Err(Error::Config {
                        line,
                        msg: format!("{key} does not apply to scenario {}", scenario.name()),
                    });
                }
            }
        }
        if let Some((line, fmt)) = e.raw("output.format") {
            if fmt != "csv" {
                return Err(Error::Config {
                    line: *line,
                    msg: format!("output.format must be csv, got {fmt:?}"),
                });
            }
        }
        let s = &d.solver;
        let cfg = ScenarioConfig {
            scenario,
            grid_n: e.get("grid.n", d.grid_n)?,
            grid_length: e.get("grid.length", d.grid_length)?,
            solver: SolverConfig {
                dt: e.get("solver.dt", s.dt)?,
                t0: e.get("solver.t0", s.t0)?,
                t_end: e.get("solver.t_end", s.t_end)?,
                dealias: e.get("solver.dealias", s.dealias)?,
                record_every: e.get("solver.record_every", s.record_every)?,
                nonlinear: e.get("solver.nonlinear", s.nonlinear)?,
            },
            weight_a: e.get("weight.a", d.weight_a)?,
            weight_c: e.get("weight.c_scale", d.weight_c)?,
            output_dir: e.raw("output.dir").map(|(_, v)| PathBuf::from(v)),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<ScenarioConfig> {
        let text = fs::read_to_string(path).map_err(|err| Error::Config {
            line: 0,
            msg: format!("cannot read {}: {err}", path.display()),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        ScenarioConfig::parse(&text, base)
    }

    pub fn grid(&self) -> Result<Arc<Grid>> {
        Grid::new(self.grid_n, self.grid_length)
    }

    pub fn schedule(&self) -> Result<WeightSchedule> {
        WeightSchedule::new(self.weight_a, self.weight_c)
    }

    /// Checks every range the run depends on, without integrating.
    pub fn validate(&self) -> Result<()> {
        let grid = self.grid()?;
        self.solver.validate(&grid)?;
        self.schedule()?;
        if self.solver.t0 <= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "t0 = {} must exceed 1 for the weight schedule",
                self.solver.t0
            )));
        }
        match &self.scenario {
            Scenario::Gaussian {
                width,
                amplitude,
                center,
            } => {
                if !(*width > 0.0 && width.is_finite() && amplitude.is_finite() && center.is_finite()) {
                    return Err(Error::InvalidParameter(
                        "gaussian parameters must be finite, width > 0".into(),
                    ));
                }
            }
            Scenario::Random {
                bandwidth, amplitude, ..
            } => {
                if *bandwidth == 0 || *bandwidth >= self.grid_n / 2 || !amplitude.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "random.bandwidth must lie in 1..{}",
                        self.grid_n / 2
                    )));
                }
            }
            Scenario::Soliton { .. } | Scenario::Custom { .. } => {}
        }
        self.initial_data()?;
        Ok(())
    }

    /// The sampled initial condition at `t0`; solitons are also returned
    /// with their parameters.
    pub fn initial_data(&self) -> Result<(Field, Option<SolitonParams>)> {
        let grid = self.grid()?;
        match &self.scenario {
            Scenario::Soliton { c, x0, family } => {
                let (u, p) = match family {
                    SolitonFamily::Certified => certified_soliton(*c, *x0, &grid)?,
                    SolitonFamily::Classical => soliton(*c, *x0, &grid)?,
                };
                Ok((u, Some(p)))
            }
            Scenario::Gaussian {
                amplitude,
                width,
                center,
            } => Ok((
                Field::from_fn(&grid, |x| {
                    let y = (x - center) / width;
                    amplitude * (-y * y).exp()
                }),
                None,
            )),
            Scenario::Random {
                seed,
                bandwidth,
                amplitude,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let f = random_band_limited(&grid, *bandwidth, &mut rng);
                Ok((f.scale(amplitude / f.max_abs()), None))
            }
            Scenario::Custom { samples } => {
                let text = fs::read_to_string(samples)?;
                let mut values = Vec::with_capacity(self.grid_n);
                for (i, line) in text.lines().enumerate() {
                    let line = line.trim();
                    if line.is_empty() || line.starts_with('#') {
                        continue;
                    }
                    values.push(line.parse::<f64>().map_err(|_| Error::Config {
                        line: i + 1,
                        msg: format!("bad sample {line:?} in {}", samples.display()),
                    })?);
                }
                Ok((Field::new(&grid, values)?, None))
            }
        }
    }

    /// Canonical key/value pairs, every key spelled out.
    pub fn entries(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("scenario", self.scenario.name().into());
        put("grid.n", self.grid_n.to_string());
        put("grid.length", self.grid_length.to_string());
        let s = &self.solver;
        put("solver.dt", s.dt.to_string());
        put("solver.t0", s.t0.to_string());
        put("solver.t_end", s.t_end.to_string());
        put("solver.dealias", s.dealias.to_string());
        put("solver.record_every", s.record_every.to_string());
        put("solver.nonlinear", s.nonlinear.to_string());
        put("weight.a", self.weight_a.to_string());
        put("weight.c_scale", self.weight_c.to_string());
        match &self.scenario {
            Scenario::Soliton { c, x0, family } => {
                put("soliton.c", c.to_string());
                put("soliton.x0", x0.to_string());
                put("soliton.family", family.as_str().into());
            }
            Scenario::Gaussian {
                amplitude,
                width,
                center,
            } => {
                put("gaussian.amplitude", amplitude.to_string());
                put("gaussian.width", width.to_string());
                put("gaussian.center", center.to_string());
            }
            Scenario::Random {
                seed,
                bandwidth,
                amplitude,
            } => {
                put("random.seed", seed.to_string());
                put("random.bandwidth", bandwidth.to_string());
                put("random.amplitude", amplitude.to_string());
            }
            Scenario::Custom { samples } => put("custom.samples", samples.display().to_string()),
        }
        if let Some(dir) = &self.output_dir {
            put("output.dir", dir.display().to_string());
        }
        put("output.format", "csv".into());
        m
    }
}

impl fmt::Display for ScenarioConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.entries() {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ScenarioConfig> {
        ScenarioConfig::parse(text, Path::new("."))
    }

    #[test]
    fn defaults_and_comments() {
        let cfg = parse("# nothing but a comment\n\n").unwrap();
        assert_eq!(cfg, ScenarioConfig::default());
        let cfg = parse(
            "scenario = gaussian  # trailing\ngrid.n = 512\ngaussian.width = 2.5\nsolver.dealias = false\n",
        )
        .unwrap();
        assert_eq!(cfg.grid_n, 512);
        assert!(!cfg.solver.dealias);
        assert_eq!(
            cfg.scenario,
            Scenario::Gaussian {
                amplitude: 1.0,
                width: 2.5,
                center: 0.0
            }
        );
    }

    #[test]
    fn rejects_bad_input() {
        for (text, line) in [
            ("grid.n = 100", None),
            ("grid.n = abc", Some(1)),
            ("\ngrid.size = 4", Some(2)),
            ("grid.n = 256\ngrid.n = 512", Some(2)),
            ("weight.a = 0.5", None),
            ("solver.t0 = 1", None),
            ("solver.dt = 1", None),
            ("scenario = gaussian\nsoliton.c = 2", Some(2)),
            ("scenario = wave", Some(1)),
            ("scenario = custom", Some(0)),
            ("scenario = custom\ncustom.samples = /no/such/file", Some(2)),
            ("soliton.family = other", Some(1)),
            ("output.format = json", Some(1)),
            ("grid.n", Some(1)),
            ("soliton.c = 0.01", None),
        ] {
            let err = parse(text).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{text}");
            match (line, &err) {
                (Some(l), Error::Config { line, .. }) => assert_eq!(*line, l, "{text}"),
                (None, Error::Config { .. }) => panic!("{text}: {err}"),
                _ => {}
            }
        }
    }

    #[test]
    fn display_round_trips() {
        let text = "scenario = random\nrandom.seed = 9\nrandom.bandwidth = 40\nweight.a = 0.25\nsolver.dt = 2.5e-3\n";
        let cfg = parse(text).unwrap();
        let again = parse(&cfg.to_string()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn custom_samples_resolve_relative_to_config() {
        let dir = tempfile::tempdir().unwrap();
        let n = 64;
        let body: String = (0..n).map(|i| format!("{}\n", (i as f64 * 0.1).sin())).collect();
        fs::write(dir.path().join("u0.txt"), body).unwrap();
        let cfg_path = dir.path().join("run.cfg");
        fs::write(
            &cfg_path,
            "scenario = custom\ncustom.samples = u0.txt\ngrid.n = 64\ngrid.length = 20\n",
        )
        .unwrap();
        let cfg = ScenarioConfig::load(&cfg_path).unwrap();
        let (u, p) = cfg.initial_data().unwrap();
        assert!(p.is_none());
        assert_eq!(u.samples()[1], 0.1f64.sin());

        fs::write(dir.path().join("u0.txt"), "1\n2\n").unwrap();
        assert!(matches!(
            ScenarioConfig::load(&cfg_path),
            Err(Error::LengthMismatch { expected: 64, got: 2 })
        ));
    }

    #[test]
    fn random_scenario_is_seeded() {
        let a = parse("scenario = random\nrandom.seed = 4\nrandom.amplitude = 0.5").unwrap();
        let (u, _) = a.initial_data().unwrap();
        let (v, _) = a.initial_data().unwrap();
        assert_eq!(u.samples(), v.samples());
        assert!((u.max_abs() - 0.5).abs() < 1e-15);
    }
}
