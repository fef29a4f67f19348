//! Flat `key = value` settings: built-in defaults, then a preset, then a config
//! file, then command-line flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use cadherin_core::{Grid, RawParams, ValidationMode};

/// Every key a config file or flag may set.
pub const KNOWN_KEYS: &[&str] = &[
    "rho",
    "sigma",
    "a0",
    "a1",
    "eps",
    "grid",
    "dt",
    "T",
    "out",
    "mode",
    "init",
    "scheme",
    "snapshot_every",
    "stop_threshold",
    "dt_max",
    "dt_growth",
    "fit_window",
    "cg_tol",
    "cg_max_iter",
    "n_max",
    "tol",
    "eps_sweep",
    "seed",
];

pub const PRESETS: &[&str] = &["paper-fig2"];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
    /// Where each value came from, for the manifest.
    sources: BTreeMap<String, &'static str>,
}

fn canonical_key(raw: &str) -> String {
    let k = raw.trim().replace('-', "_");
    match k.as_str() {
        "t" | "t_end" => "T".into(),
        "epsilon" => "eps".into(),
        _ => k,
    }
}

impl Settings {
    pub fn defaults() -> Self {
        let mut s = Settings::default();
        let p = RawParams::REFERENCE;
        for (k, v) in [
            ("rho", p.rho.to_string()),
            ("sigma", p.sigma.to_string()),
            ("a0", p.a0.to_string()),
            ("a1", p.a1.to_string()),
            ("eps", p.epsilon.to_string()),
            ("grid", "64x64".into()),
            ("T", "1".into()),
            ("out", "out".into()),
            ("mode", "lenient".into()),
            ("scheme", "riccati-exact".into()),
            ("snapshot_every", "100".into()),
            ("cg_tol", "1e-10".into()),
            ("cg_max_iter", "5000".into()),
            ("n_max", "20".into()),
            ("tol", "1e-6".into()),
            ("seed", "20240601".into()),
        ] {
            s.set(k, &v, "default");
        }
        s
    }

    pub fn set(&mut self, key: &str, value: &str, source: &'static str) {
        let k = canonical_key(key);
        self.values.insert(k.clone(), value.trim().to_string());
        self.sources.insert(k, source);
    }

    pub fn apply_preset(&mut self, name: &str) -> Result<()> {
        match name {
            "paper-fig2" => {
                for (k, v) in [
                    ("rho", "0.7"),
                    ("sigma", "1"),
                    ("a0", "0.25"),
                    ("a1", "0.5"),
                    ("eps", "0.35"),
                    ("mode", "lenient"),
                    ("grid", "128x128"),
                    ("init", "reference"),
                    ("dt", "1e-4"),
                    ("dt_max", "5e-3"),
                    ("dt_growth", "1.05"),
                    ("T", "60"),
                    ("stop_threshold", "1e-3"),
                    ("snapshot_every", "500"),
                ] {
                    self.set(k, v, "preset");
                }
                Ok(())
            }
            other => bail!("unknown preset `{other}` (known: {})", PRESETS.join(", ")),
        }
    }

    /// Reads `key = value` lines; `#` starts a comment.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        self.apply_text(&text)
            .with_context(|| format!("in config file {}", path.display()))
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key = value", lineno + 1))?;
            let key = canonical_key(k);
            if key == "preset" {
                self.apply_preset(v.trim())?;
                continue;
            }
            if !KNOWN_KEYS.contains(&key.as_str()) {
                bail!("line {}: unknown key `{}`", lineno + 1, k.trim());
            }
            self.set(&key, v, "config");
        }
        Ok(())
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(&canonical_key(key)).map(String::as_str)
    }

    pub fn get<T>(&self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some(s) => s
                .parse::<T>()
                .map(Some)
                .map_err(|e| anyhow!("invalid value `{s}` for `{key}`: {e}")),
        }
    }

    pub fn require<T>(&self, key: &str) -> Result<T>
    where
        T: FromStr,
        T::Err: fmt::Display,
    {
        self.get(key)?
            .ok_or_else(|| anyhow!("missing required setting `{key}`"))
    }

    pub fn raw_params(&self) -> Result<RawParams> {
        Ok(RawParams {
            rho: self.require("rho")?,
            sigma: self.require("sigma")?,
            a0: self.require("a0")?,
            a1: self.require("a1")?,
            epsilon: self.require("eps")?,
        })
    }

    pub fn mode(&self) -> Result<ValidationMode> {
        match self.raw("mode").unwrap_or("lenient") {
            "strict" => Ok(ValidationMode::Strict),
            "lenient" => Ok(ValidationMode::Lenient),
            other => bail!("invalid mode `{other}` (expected strict or lenient)"),
        }
    }

    pub fn grid(&self) -> Result<Grid> {
        let spec: GridSpec = self.require("grid")?;
        Grid::new(spec.nx, spec.ny).map_err(|e| anyhow!("invalid grid: {e}"))
    }

    pub fn out_dir(&self) -> PathBuf {
        PathBuf::from(self.raw("out").unwrap_or("out"))
    }

    /// `(key, value, source)` in key order.
    pub fn entries(&self) -> impl Iterator<Item = (&str, &str, &str)> {
        self.values
            .iter()
            .map(|(k, v)| (k.as_str(), v.as_str(), self.sources[k]))
    }
}

/// `NXxNY`, or a single `N` for a square grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| format!("expected NXxNY, got `{s}`"))
        };
        match s.split_once(['x', 'X']) {
            Some((a, b)) => Ok(GridSpec {
                nx: parse(a)?,
                ny: parse(b)?,
            }),
            None => {
                let n = parse(s)?;
                Ok(GridSpec { nx: n, ny: n })
            }
        }
    }
}

/// Initial data for evolve and picard.
#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    /// The reference sinusoidal bound profile with `u = 1 - v`.
    Reference,
    /// The admissible constant equilibrium `(1 - v1, v1)`.
    Stationary,
    Constant {
        u: f64,
        v: f64,
    },
    Files {
        u: PathBuf,
        v: PathBuf,
    },
}

impl FromStr for InitSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s {
            "reference" => return Ok(InitSpec::Reference),
            "stationary" => return Ok(InitSpec::Stationary),
            _ => {}
        }
        let pair = |rest: &str| {
            rest.split_once(',')
                .ok_or_else(|| format!("expected two comma-separated entries in `{s}`"))
                .map(|(a, b)| (a.trim().to_string(), b.trim().to_string()))
        };
        if let Some(rest) = s.strip_prefix("constant:") {
            let (a, b) = pair(rest)?;
            let num = |t: &str| {
                t.parse::<f64>()
                    .map_err(|_| format!("bad number `{t}` in `{s}`"))
            };
            return Ok(InitSpec::Constant {
                u: num(&a)?,
                v: num(&b)?,
            });
        }
        if let Some(rest) = s.strip_prefix("files:") {
            let (a, b) = pair(rest)?;
            return Ok(InitSpec::Files {
                u: a.into(),
                v: b.into(),
            });
        }
        Err(format!(
            "unknown init `{s}` (expected reference, stationary, constant:U,V or files:U.csv,V.csv)"
        ))
    }
}

/// `a:b:n` (inclusive, `n` points) or a comma-separated list.
pub fn parse_eps_sweep(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let a: f64 = parts[0].trim().parse()?;
        let b: f64 = parts[1].trim().parse()?;
        let n: usize = parts[2].trim().parse()?;
        if n < 2 {
            bail!("eps sweep `{s}` needs at least 2 points");
        }
        return Ok((0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .collect());
    }
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| anyhow!("bad number `{t}` in eps sweep"))
        })
        .collect()
}

/// `a,b` time window.
pub fn parse_window(s: &str) -> Result<(f64, f64)> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| anyhow!("expected `start,end` for fit window, got `{s}`"))?;
    let (a, b): (f64, f64) = (a.trim().parse()?, b.trim().parse()?);
    if !(a < b) {
        bail!("fit window start must be below its end, got {a},{b}");
    }
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layering_and_aliases() {
        let mut s = Settings::defaults();
        s.apply_text("# comment\nrho = 0.6\nt-end=2 # trailing\nepsilon=0.1\n")
            .unwrap();
        assert_eq!(s.get::<f64>("rho").unwrap(), Some(0.6));
        assert_eq!(s.get::<f64>("T").unwrap(), Some(2.0));
        assert_eq!(s.get::<f64>("eps").unwrap(), Some(0.1));
        s.set("rho", "0.5", "flag");
        assert_eq!(s.raw("rho"), Some("0.5"));
        assert!(s.apply_text("bogus = 1").is_err());
        assert!(s.apply_text("rho 0.3").is_err());
    }

    #[test]
    fn preset_line_in_file() {
        let mut s = Settings::defaults();
        s.apply_text("preset = paper-fig2\ngrid = 32").unwrap();
        assert_eq!(s.raw("init"), Some("reference"));
        assert_eq!(s.grid().unwrap(), Grid::square(32).unwrap());
        assert!(s.apply_preset("nope").is_err());
    }

    #[test]
    fn grid_and_init_specs() {
        assert_eq!("12x7".parse(), Ok(GridSpec { nx: 12, ny: 7 }));
        assert_eq!("16".parse(), Ok(GridSpec { nx: 16, ny: 16 }));
        assert!("axb".parse::<GridSpec>().is_err());
        assert_eq!(
            "constant:0.6,0.4".parse(),
            Ok(InitSpec::Constant { u: 0.6, v: 0.4 })
        );
        assert_eq!("reference".parse(), Ok(InitSpec::Reference));
        assert!("constant:0.6".parse::<InitSpec>().is_err());
        assert!("random".parse::<InitSpec>().is_err());
    }

    #[test]
    fn sweep_and_window() {
        assert_eq!(parse_eps_sweep("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_eps_sweep("0.1, 0.2").unwrap(), vec![0.1, 0.2]);
        assert!(parse_eps_sweep("0:1:1").is_err());
        assert_eq!(parse_window("1,2").unwrap(), (1.0, 2.0));
        assert!(parse_window("2,1").is_err());
    }
}
