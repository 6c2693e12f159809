//! The flat `key = value` configuration of the `compare` subcommand.
//!
//! ```text
//! # comment
//! sizes = 21,41,81
//! problems = 1,2,3
//! methods = structured-FD,distmesh-a-FEM,distmesh-b-FEM
//! sigma = 0.5
//! region = square square.poly 0,1,2,3
//! ```
//!
//! `region` may repeat; every other key may appear at most once. Polygon
//! paths are relative to the directory of the configuration file.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::functionals::FunctionalConfig;
use crate::geometry::Polygon;
use crate::problems::{builtin_problem, BuiltinProblem};
use crate::report::{ExperimentConfig, Method, Region};
use crate::sparse::LinearSolver;

#[derive(Debug, Clone, PartialEq)]
pub struct RegionEntry {
    pub name: String,
    pub path: PathBuf,
    pub corners: [usize; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareConfig {
    pub regions: Vec<RegionEntry>,
    pub sizes: Vec<usize>,
    pub problems: Vec<BuiltinProblem>,
    pub methods: Vec<Method>,
    pub functional: FunctionalConfig,
    pub fd_solver: LinearSolver,
    pub fem_solver: LinearSolver,
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for CompareConfig {
    fn default() -> Self {
        let base = ExperimentConfig::new(Vec::new());
        Self {
            regions: Vec::new(),
            sizes: base.sizes,
            problems: base.problems,
            methods: base.methods,
            functional: base.functional,
            fd_solver: base.fd_solver,
            fem_solver: base.fem_solver,
            tol: base.tol,
            max_iters: base.max_iters,
        }
    }
}

fn list<T>(value: &str, line: usize, what: &str, parse: impl Fn(&str) -> Option<T>) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .map(|v| parse(v).ok_or_else(|| Error::parse(line, format!("invalid {what} {v:?}"))))
        .collect()
}

fn scalar<T: std::str::FromStr>(value: &str, line: usize, key: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::parse(line, format!("invalid value {value:?} for {key}")))
}

fn positive(v: f64, line: usize, key: &str) -> Result<f64> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::parse(line, format!("{key} must be positive and finite")));
    }
    Ok(v)
}

fn region(value: &str, line: usize) -> Result<RegionEntry> {
    let f: Vec<&str> = value.split_whitespace().collect();
    if f.len() != 3 {
        return Err(Error::parse(line, "region needs \"name path i1,i2,i3,i4\""));
    }
    let c = list(f[2], line, "corner index", |v| v.parse::<usize>().ok())?;
    let corners: [usize; 4] = c
        .try_into()
        .map_err(|_| Error::parse(line, "region needs exactly four corner indices"))?;
    Ok(RegionEntry {
        name: f[0].to_string(),
        path: PathBuf::from(f[1]),
        corners,
    })
}

/// Parses the text of a configuration file. Nothing is read from disk.
pub fn parse_config(text: &str) -> Result<CompareConfig> {
    let mut cfg = CompareConfig::default();
    let mut seen: Vec<String> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| Error::parse(line, "expected key = value"))?;
        let (key, value) = (key.trim(), value.trim());
        if key != "region" {
            if seen.iter().any(|k| k == key) {
                return Err(Error::parse(line, format!("duplicate key {key}")));
            }
            seen.push(key.to_string());
        }
        match key {
            "region" => cfg.regions.push(region(value, line)?),
            "sizes" => cfg.sizes = list(value, line, "size", |v| v.parse().ok())?,
            "problems" => {
                cfg.problems = list(value, line, "problem", |v| builtin_problem(v.parse().ok()?).ok())?
            }
            "methods" => cfg.methods = list(value, line, "method", |v| v.parse().ok())?,
            "sigma" => cfg.functional.sigma = scalar(value, line, key)?,
            "omega0" => cfg.functional.omega0 = Some(positive(scalar(value, line, key)?, line, key)?),
            "max_omega_updates" => cfg.functional.max_omega_updates = scalar(value, line, key)?,
            "inner_tol" => cfg.functional.inner_tol = scalar(value, line, key)?,
            "inner_max_iters" => cfg.functional.inner_max_iters = scalar(value, line, key)?,
            "fd_solver" => cfg.fd_solver = scalar(value, line, key)?,
            "fem_solver" => cfg.fem_solver = scalar(value, line, key)?,
            "tol" => cfg.tol = positive(scalar(value, line, key)?, line, key)?,
            "max_iters" => cfg.max_iters = scalar(value, line, key)?,
            _ => return Err(Error::parse(line, format!("unknown key {key:?}"))),
        }
    }
    if cfg.regions.is_empty() {
        return Err(Error::InvalidArgument("configuration lists no region".into()));
    }
    cfg.functional.validate()?;
    Ok(cfg)
}

impl CompareConfig {
    /// Reads the region polygons, resolving paths against `base`.
    pub fn load(&self, base: &Path, threads: Option<usize>) -> Result<ExperimentConfig> {
        let regions = self
            .regions
            .iter()
            .map(|r| {
                let path = base.join(&r.path);
                let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                Ok(Region {
                    name: r.name.clone(),
                    polygon: Polygon::parse(&text)?,
                    corners: r.corners,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut e = ExperimentConfig::new(regions);
        e.sizes = self.sizes.clone();
        e.problems = self.problems.clone();
        e.methods = self.methods.clone();
        e.functional = self.functional.clone();
        e.fd_solver = self.fd_solver;
        e.fem_solver = self.fem_solver;
        e.tol = self.tol;
        e.max_iters = self.max_iters;
        e.threads = threads;
        e.validate()?;
        Ok(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# bundled
sizes = 21, 41
problems = 2
methods = structured-FD,distmesh-b-FEM
sigma = 0.25
fd_solver = direct
region = sq square.poly 0,1,2,3
region = c  sub/c.poly 0,1,6,7
";

    #[test]
    fn sample_parses() {
        let c = parse_config(SAMPLE).unwrap();
        assert_eq!(c.sizes, vec![21, 41]);
        assert_eq!(c.problems, vec![BuiltinProblem::RotatedEighth]);
        assert_eq!(c.methods, vec![Method::StructuredFd, Method::DistMeshB]);
        assert_eq!(c.functional.sigma, 0.25);
        assert_eq!(c.fd_solver, LinearSolver::Direct);
        assert_eq!(c.regions.len(), 2);
        assert_eq!(c.regions[1].path, PathBuf::from("sub/c.poly"));
        assert_eq!(c.regions[1].corners, [0, 1, 6, 7]);
        assert_eq!(c.fem_solver, CompareConfig::default().fem_solver);
    }

    #[test]
    fn defaults_follow_the_protocol() {
        let c = parse_config("region = a a.poly 0,1,2,3").unwrap();
        assert_eq!(c.sizes, vec![21, 41, 81]);
        assert_eq!(c.problems.len(), 3);
        assert_eq!(c.methods.len(), 3);
        assert_eq!(c.functional.sigma, 0.5);
    }

    #[test]
    fn malformed_configs() {
        for bad in [
            "",
            "# only a comment\n",
            "sizes = 21\n",
            "region = a a.poly 0,1,2\n",
            "region = a a.poly 0,1,2,x\n",
            "region = a a.poly\n",
            "region = a a.poly 0,1,2,3\nsizes = 21,,41\n",
            "region = a a.poly 0,1,2,3\nproblems = 4\n",
            "region = a a.poly 0,1,2,3\nmethods = fd\n",
            "region = a a.poly 0,1,2,3\nsigma = 2\n",
            "region = a a.poly 0,1,2,3\ntol = -1\n",
            "region = a a.poly 0,1,2,3\ncolour = red\n",
            "region = a a.poly 0,1,2,3\nsigma = 0.5\nsigma = 0.5\n",
            "region a a.poly 0,1,2,3\n",
        ] {
            assert!(parse_config(bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn parse_errors_name_the_line() {
        let err = parse_config("region = a a.poly 0,1,2,3\n\nsizes = x\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn load_resolves_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("sq.poly"), "4\n0 0\n1 0\n1 1\n0 1\n").unwrap();
        let c = parse_config("sizes = 5,9\nregion = sq sq.poly 0,1,2,3\n").unwrap();
        let e = c.load(dir.path(), Some(2)).unwrap();
        assert_eq!(e.regions[0].polygon.len(), 4);
        assert_eq!(e.threads, Some(2));
        let missing = parse_config("region = m missing.poly 0,1,2,3\n").unwrap();
        assert!(matches!(missing.load(dir.path(), None), Err(Error::Io { .. })));
    }
}
