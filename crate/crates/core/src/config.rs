//! Flat `section.key = value` run configuration.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::analysis::{AnalysisConfig, AnalysisPoint, PointKind};
use crate::error::{Error, Result};
use crate::geometry::{Domain, Point};
use crate::moduli::Modulus;
use crate::solver::SolverConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Solve, extract and analyze.
    Full,
    /// Epiperimetric constants only; no PDE.
    Constants,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Points {
    Auto,
    List(Vec<AnalysisPoint>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub domain: Domain,
    pub h: f64,
    pub solver: SolverConfig,
    pub analysis: AnalysisConfig,
    pub points: Points,
    pub output: Option<PathBuf>,
    pub verbosity: u8,
}

const KEYS: &[&str] = &[
    "run.mode",
    "domain.kind",
    "domain.radius",
    "domain.width",
    "domain.height",
    "domain.corner",
    "domain.amplitude",
    "domain.exponent",
    "domain.half_width",
    "domain.top",
    "grid.h",
    "grid.n",
    "solver.n",
    "solver.seed",
    "solver.penalties",
    "solver.inner_iterations",
    "solver.step",
    "solver.tolerance",
    "solver.retries",
    "solver.relaxation",
    "solver.interface_iterations",
    "solver.interface_tolerance",
    "solver.max_sweeps",
    "analysis.points",
    "analysis.chart_radius",
    "analysis.radii",
    "analysis.delta",
    "analysis.tolerance",
    "analysis.cleanup_radius",
    "moduli.sigma0",
    "output.dir",
    "output.verbosity",
];

struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Config { line, msg: msg.into() }
}

impl Entries {
    fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| err(line, "expected `section.key = value`"))?;
            let key = key.trim();
            let value = value.trim();
            if !key.contains('.') {
                return Err(err(line, format!("key `{key}` has no section")));
            }
            if !KEYS.contains(&key) {
                return Err(err(line, format!("unknown key `{key}`")));
            }
            if value.is_empty() {
                return Err(err(line, format!("empty value for `{key}`")));
            }
            if map.insert(key.to_string(), (line, value.to_string())).is_some() {
                return Err(err(line, format!("duplicate key `{key}`")));
            }
        }
        Ok(Entries { map })
    }

    fn raw(&self, key: &str) -> Option<(usize, &str)> {
        self.map.get(key).map(|(l, v)| (*l, v.as_str()))
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some((line, v)) => v.parse::<T>().map(Some).map_err(|_| err(line, format!("cannot parse `{v}` for `{key}`"))),
        }
    }

    fn or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    fn line(&self, key: &str) -> usize {
        self.raw(key).map(|(l, _)| l).unwrap_or(0)
    }
}

fn floats(line: usize, v: &str) -> Result<Vec<f64>> {
    v.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| err(line, format!("cannot parse `{s}` as a number"))))
        .collect()
}

fn domain(e: &Entries) -> Result<Domain> {
    let kind = e.raw("domain.kind").map(|(_, v)| v).unwrap_or("disk");
    let line = e.line("domain.kind");
    let d = match kind {
        "disk" => Domain::disk(e.or("domain.radius", 1.0)?),
        "rounded_rect" => Domain::rounded_rect(e.or("domain.width", 2.0)?, e.or("domain.height", 1.0)?, e.or("domain.corner", 0.2)?),
        "epigraph" => Domain::epigraph(
            e.or("domain.amplitude", 0.5)?,
            e.or("domain.exponent", 1.0)?,
            e.or("domain.half_width", 1.0)?,
            e.or("domain.top", 1.0)?,
        ),
        other => return Err(err(line, format!("unknown domain kind `{other}`"))),
    };
    d.map_err(|x| err(line, x.to_string()))
}

fn sigma0(e: &Entries) -> Result<Modulus> {
    let Some((line, v)) = e.raw("moduli.sigma0") else {
        return Ok(Modulus::power(1.0, 1.0, 1.0)?);
    };
    let mut parts = v.split_whitespace();
    let kind = parts.next().unwrap_or("");
    let args = floats(line, &parts.collect::<Vec<_>>().join(" "))?;
    let m = match (kind, args.as_slice()) {
        ("zero", []) => Ok(Modulus::zero(1.0)),
        ("power", [c, a]) => Modulus::power(*c, *a, 1.0),
        ("log", [c, b]) => Modulus::log_power(*c, *b, 0.5),
        _ => return Err(err(line, "expected `zero`, `power <coef> <exponent>` or `log <coef> <beta>`")),
    };
    m.map_err(|x| err(line, x.to_string()))
}

fn points(e: &Entries) -> Result<Points> {
    let Some((line, v)) = e.raw("analysis.points") else { return Ok(Points::Auto) };
    match v {
        "auto" => Ok(Points::Auto),
        "none" => Ok(Points::List(Vec::new())),
        list => list
            .split(';')
            .map(|p| match floats(line, p)?.as_slice() {
                [x, y] => Ok(AnalysisPoint { kind: PointKind::Explicit, point: [*x, *y] as Point }),
                _ => Err(err(line, format!("point `{}` needs two coordinates", p.trim()))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Points::List),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let e = Entries::parse(text)?;
        let mode = match e.raw("run.mode") {
            None | Some((_, "full")) => Mode::Full,
            Some((_, "constants")) => Mode::Constants,
            Some((line, other)) => return Err(err(line, format!("unknown mode `{other}`"))),
        };
        let h = match (e.get::<f64>("grid.h")?, e.get::<f64>("grid.n")?) {
            (Some(_), Some(_)) => return Err(err(e.line("grid.n"), "give either grid.h or grid.n")),
            (Some(h), None) => h,
            (None, Some(n)) => 1.0 / n,
            (None, None) => 1.0 / 128.0,
        };
        if !(h > 0.0 && h < 0.5) {
            return Err(err(e.line("grid.h").max(e.line("grid.n")), "grid spacing must lie in (0, 0.5)"));
        }
        let d = SolverConfig::default();
        let solver = SolverConfig {
            n: e.or("solver.n", d.n)?,
            penalties: match e.raw("solver.penalties") {
                Some((line, v)) => floats(line, v)?,
                None => d.penalties.clone(),
            },
            inner_iterations: e.or("solver.inner_iterations", d.inner_iterations)?,
            step: e.or("solver.step", d.step)?,
            tolerance: e.or("solver.tolerance", d.tolerance)?,
            seed: e.or("solver.seed", d.seed)?,
            retries: e.or("solver.retries", d.retries)?,
            relaxation: e.or("solver.relaxation", d.relaxation)?,
            interface_iterations: e.or("solver.interface_iterations", d.interface_iterations)?,
            interface_tolerance: e.or("solver.interface_tolerance", d.interface_tolerance)?,
            max_sweeps: e.or("solver.max_sweeps", d.max_sweeps)?,
        };
        solver.validate().map_err(|x| err(e.line("solver.n"), x.to_string()))?;
        let a = AnalysisConfig::default();
        let cleanup_radius = match e.raw("analysis.cleanup_radius") {
            None | Some((_, "auto")) => None,
            Some((line, v)) => Some(v.parse::<f64>().map_err(|_| err(line, format!("cannot parse `{v}` as a radius")))?),
        };
        let analysis = AnalysisConfig {
            chart_radius: e.or("analysis.chart_radius", a.chart_radius)?,
            radii: e.or("analysis.radii", a.radii)?,
            delta: e.or("analysis.delta", a.delta)?,
            tolerance: e.or("analysis.tolerance", a.tolerance)?,
            sigma0: sigma0(&e)?,
            cleanup_radius,
        };
        if !(analysis.chart_radius > 0.0) || analysis.radii < 4 {
            return Err(err(e.line("analysis.radii").max(e.line("analysis.chart_radius")), "need chart_radius > 0 and radii >= 4"));
        }
        Ok(RunConfig {
            mode,
            domain: domain(&e)?,
            h,
            solver,
            analysis,
            points: points(&e)?,
            output: e.raw("output.dir").map(|(_, v)| PathBuf::from(v)),
            verbosity: e.or("output.verbosity", 1)?,
        })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let c = RunConfig::parse("# disk\nsolver.n = 3\ngrid.n = 32\nanalysis.points = 1 0; 0 1\n").unwrap();
        assert_eq!(c.solver.n, 3);
        assert_eq!(c.h, 1.0 / 32.0);
        assert_eq!(c.mode, Mode::Full);
        assert_eq!(c.points, Points::List(vec![
            AnalysisPoint { kind: PointKind::Explicit, point: [1.0, 0.0] },
            AnalysisPoint { kind: PointKind::Explicit, point: [0.0, 1.0] },
        ]));
        let c = RunConfig::parse("run.mode = constants").unwrap();
        assert_eq!(c.mode, Mode::Constants);
        assert_eq!(c.points, Points::Auto);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cases = [
            ("solver.n = 2\n\nbogus\n", 3),
            ("grid.n = 64\nsolver.colour = red\n", 2),
            ("solver.n = two\n", 1),
            ("domain.kind = torus\n", 1),
            ("\nsolver.n = 2\nsolver.n = 3\n", 3),
            ("domain.radius = -1\ndomain.kind = disk\n", 2),
            ("analysis.points = 1 2 3\n", 1),
            ("grid.h = 0.1\ngrid.n = 10\n", 2),
            ("moduli.sigma0 = power 1\n", 1),
        ];
        for (text, line) in cases {
            match RunConfig::parse(text) {
                Err(Error::Config { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }
}
