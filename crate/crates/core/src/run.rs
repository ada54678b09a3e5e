//! Run orchestration: solve, extract, analyze, check and write artifacts.

use std::fmt::Write as _;
use std::path::Path;

use crate::analysis::{analyze_point, auto_points, AnalysisPoint, PointKind, PointReport};
use crate::blowup::kappa_constants;
use crate::config::{Mode, Points, RunConfig};
use crate::epiperimetric::{epi_constants, EpiConstants};
use crate::error::Result;
use crate::field::GridField;
use crate::frequency::PointClass;
use crate::geometry::{DomainKind, DomainSpec};
use crate::interface::{boundary_contact_angle, extract_interface, junction_angles, to_svg, arcs_csv, InterfaceGraph};
use crate::reference::disk_partition_sum;
use crate::solver::{extremality_residual, minimize_partition, DensityField};

/// Tolerances of the checks a run evaluates.
pub mod tol {
    pub const REFERENCE_N2: f64 = 0.02;
    pub const REFERENCE: f64 = 0.03;
    pub const ANGLE_DEG: f64 = 3.0;
    pub const GAMMA_Z2: f64 = 0.1;
    pub const GAMMA_Z1: f64 = 0.05;
    pub const MONOTONICITY: f64 = 0.02;
    pub const C_MAX: f64 = 100.0;
    pub const RATE_EXPONENT: f64 = 0.9;
    pub const CAUCHY_SPREAD: f64 = 3.0;
    pub const LINEAR_FRACTION: f64 = 0.25;
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    /// Human-readable target, e.g. `<= 3`.
    pub target: String,
    pub pass: bool,
}

impl Check {
    fn at_most(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Check { name: name.into(), measured, target: format!("<= {bound}"), pass: measured <= bound }
    }

    fn at_least(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Check { name: name.into(), measured, target: format!(">= {bound}"), pass: measured >= bound }
    }

    fn near(name: impl Into<String>, measured: f64, target: f64, tol: f64) -> Self {
        Check { name: name.into(), measured, target: format!("{target} +- {tol}"), pass: (measured - target).abs() <= tol }
    }

    fn equal(name: impl Into<String>, measured: usize, expected: usize) -> Self {
        Check { name: name.into(), measured: measured as f64, target: format!("= {expected}"), pass: measured == expected }
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let m = self.measured;
        let v = if m != 0.0 && (m.abs() < 1e-3 || m.abs() >= 1e6) { format!("{m:.6e}") } else { format!("{m:.6}") };
        write!(f, "{} {} measured {v} target {}", if self.pass { "PASS" } else { "FAIL" }, self.name, self.target)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverSummary {
    pub eigenvalues: Vec<f64>,
    pub sum: f64,
    pub reference: Option<f64>,
    pub residuals: (f64, f64),
    pub lipschitz: f64,
    pub attempts: usize,
    pub pieces: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InterfaceSummary {
    pub arcs: usize,
    /// Angles in degrees per junction.
    pub junction_angles: Vec<Vec<f64>>,
    pub contact_angles: Vec<f64>,
    pub free_boundary_points: usize,
    pub isolated: bool,
}

/// Constants fitted across all analyzed points.
#[derive(Clone, Debug, PartialEq)]
pub struct Fitted {
    pub c_a: f64,
    pub c_w: f64,
    pub c_b: f64,
    pub c_cauchy: (f64, f64),
    /// Measured amplitude normalization against the printed and the L² κ, worst over points.
    pub kappa: (f64, f64),
}

#[derive(Debug)]
pub struct RunReport {
    pub mode: Mode,
    pub h: f64,
    pub n: usize,
    pub solver: Option<SolverSummary>,
    pub constants: Option<EpiConstants>,
    pub interface: Option<InterfaceSummary>,
    pub points: Vec<PointReport>,
    pub fitted: Option<Fitted>,
    pub checks: Vec<Check>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// A finished run with the objects needed for figures.
#[derive(Debug)]
pub struct Run {
    pub report: RunReport,
    pub field: Option<DensityField>,
    pub graph: Option<InterfaceGraph>,
}

pub fn run(cfg: &RunConfig) -> Result<Run> {
    if cfg.mode == Mode::Constants {
        let c = epi_constants(2)?;
        let checks = constants_checks(&c);
        let report = RunReport { mode: cfg.mode, h: cfg.h, n: 0, solver: None, constants: Some(c), interface: None, points: vec![], fitted: None, checks };
        return Ok(Run { report, field: None, graph: None });
    }
    let spec = DomainSpec::new(cfg.domain.clone(), cfg.h)?;
    let field = minimize_partition(&spec, &cfg.solver)?;
    let graph = extract_interface(&field)?;
    let grid = GridField::new(&field);
    let lip = graph.lipschitz;
    let pts: Vec<AnalysisPoint> = match &cfg.points {
        Points::Auto => auto_points(&graph, 2.0 * cfg.h),
        Points::List(v) => v.clone(),
    };
    let points = pts.iter().map(|p| analyze_point(&field, &grid, lip, *p, &cfg.analysis)).collect::<Result<Vec<_>>>()?;
    let reference = match cfg.domain.kind {
        DomainKind::Disk { radius, .. } => Some(disk_partition_sum(cfg.solver.n, radius)?),
        _ => None,
    };
    let solver = SolverSummary {
        eigenvalues: field.eigenvalues.clone(),
        sum: field.eigenvalue_sum(),
        reference,
        residuals: extremality_residual(&field),
        lipschitz: lip,
        attempts: field.attempts,
        pieces: field.support_pieces(),
    };
    let interface = InterfaceSummary {
        arcs: graph.arcs.len(),
        junction_angles: (0..graph.junctions.len())
            .filter_map(|j| junction_angles(&graph, j).ok())
            .map(|a| a.angles.iter().map(|x| x.to_degrees()).collect())
            .collect(),
        contact_angles: (0..graph.contacts.len()).filter_map(|c| boundary_contact_angle(&graph, c).ok()).map(|a| a.angle.to_degrees()).collect(),
        free_boundary_points: graph.traces.points.len(),
        isolated: graph.traces.isolated,
    };
    let fitted = fit_constants(&points);
    let mut checks = solver_checks(&solver, cfg);
    checks.extend(interface_checks(&interface, &graph));
    checks.extend(point_checks(&points, fitted.as_ref()));
    let report = RunReport { mode: cfg.mode, h: cfg.h, n: cfg.solver.n, solver: Some(solver), constants: None, interface: Some(interface), points, fitted, checks };
    Ok(Run { report, field: Some(field), graph: Some(graph) })
}

fn constants_checks(c: &EpiConstants) -> Vec<Check> {
    let q2 = 2.0 / 3.0 + 3f64.sqrt() / (2.0 * std::f64::consts::PI);
    vec![
        Check::near("constants.q2_squared", c.q * c.q, q2, 1e-4),
        Check::near("constants.delta2", c.delta, 0.0708, 1e-3),
        Check { name: "constants.eps_bd".into(), measured: c.eps_bd, target: "> 0".into(), pass: c.eps_bd > 0.0 },
        Check { name: "constants.eps_int".into(), measured: c.eps_int, target: "> 0".into(), pass: c.eps_int > 0.0 },
    ]
}

fn solver_checks(s: &SolverSummary, cfg: &RunConfig) -> Vec<Check> {
    let mut out = Vec::new();
    if let Some(r) = s.reference {
        let tol = if cfg.solver.n <= 2 { tol::REFERENCE_N2 } else { tol::REFERENCE };
        out.push(Check::at_most("solver.reference_relative_error", (s.sum - r).abs() / r, tol));
    }
    out.push(Check::at_most("solver.extremality_residual", s.residuals.0.max(s.residuals.1), cfg.h));
    out
}

fn interface_checks(i: &InterfaceSummary, graph: &InterfaceGraph) -> Vec<Check> {
    let mut out = Vec::new();
    for (k, angles) in i.junction_angles.iter().enumerate() {
        let ideal = 360.0 / angles.len() as f64;
        let dev = angles.iter().map(|a| (a - ideal).abs()).fold(0.0, f64::max);
        out.push(Check::at_most(format!("interface.junction{k}.angle_deviation_deg"), dev, tol::ANGLE_DEG));
    }
    for (k, a) in i.contact_angles.iter().enumerate() {
        out.push(Check::at_most(format!("interface.contact{k}.angle_to_normal_deg"), *a, tol::ANGLE_DEG));
    }
    out.push(Check { name: "interface.free_boundary_isolated".into(), measured: i.free_boundary_points as f64, target: "isolated clusters".into(), pass: i.isolated });
    for (k, p) in graph.traces.points.iter().enumerate() {
        let distinct = p.neighbors.0 != p.neighbors.1 && p.neighbors.0 != usize::MAX && p.neighbors.1 != usize::MAX;
        out.push(Check { name: format!("interface.point{k}.adjacent_traces_distinct"), measured: distinct as u8 as f64, target: "= 1".into(), pass: distinct });
    }
    out
}

fn fit_constants(points: &[PointReport]) -> Option<Fitted> {
    if points.is_empty() {
        return None;
    }
    let c_a = points.iter().map(|p| p.profile.c_a).fold(0.0, f64::max);
    let c_w = points
        .iter()
        .filter_map(|p| p.rate.as_ref().and_then(|r| p.profile.weiss_constant(r.gamma).ok()))
        .fold(0.0, f64::max);
    let c_b = points.iter().map(|p| p.profile.c_b()).fold(0.0, f64::max);
    let cc: Vec<f64> = points.iter().filter_map(|p| p.rate.as_ref().map(|r| r.c_cauchy)).collect();
    let c_cauchy = (cc.iter().copied().fold(f64::INFINITY, f64::min), cc.iter().copied().fold(0.0, f64::max));
    let worst = |f: fn(&(f64, f64)) -> f64| points.iter().filter_map(|p| p.normalization.as_ref().map(f)).fold(1.0, |w, v| if (v - 1.0).abs() > (w - 1.0f64).abs() { v } else { w });
    Some(Fitted { c_a, c_w, c_b, c_cauchy, kappa: (worst(|n| n.0), worst(|n| n.1)) })
}

fn point_checks(points: &[PointReport], fitted: Option<&Fitted>) -> Vec<Check> {
    let mut out = Vec::new();
    let Some(f) = fitted else { return out };
    for (k, p) in points.iter().enumerate() {
        let tag = format!("point{k}.{}", p.point.kind);
        let gamma = p.profile.gamma_estimate.unwrap_or(f64::NAN);
        match p.point.kind {
            PointKind::Contact => {
                out.push(Check { name: format!("{tag}.class"), measured: gamma, target: "Z2".into(), pass: p.class == PointClass::Z2 });
                out.push(Check::near(format!("{tag}.gamma"), gamma, 2.0, tol::GAMMA_Z2));
            }
            PointKind::TraceMidpoint => {
                out.push(Check { name: format!("{tag}.class"), measured: gamma, target: "Z1".into(), pass: p.class == PointClass::Z1 });
                out.push(Check::near(format!("{tag}.gamma"), gamma, 1.0, tol::GAMMA_Z1));
            }
            PointKind::Explicit => {}
        }
        out.push(Check::at_most(format!("{tag}.monotonicity_violation"), p.profile.monotonicity_violation(f.c_a), tol::MONOTONICITY));
        if let Some(r) = &p.rate {
            out.push(Check::at_least(format!("{tag}.rate_exponent"), r.exponent, tol::RATE_EXPONENT));
        }
        if let Some(c) = &p.cleanup {
            if let Some(e) = c.expected {
                out.push(Check::equal(format!("{tag}.active_components"), c.active, e));
            }
        }
        if let (Some(lb), Some(a)) = (p.cleanup.as_ref().and_then(|c| c.linear.as_ref()), p.amplitude()) {
            out.push(Check::at_least(format!("{tag}.linear_growth_over_amplitude"), lb.c / a, tol::LINEAR_FRACTION));
        }
    }
    out.push(Check::at_most("fitted.c_a", f.c_a, tol::C_MAX));
    if f.c_cauchy.1 > 0.0 {
        out.push(Check::at_most("fitted.cauchy_spread", f.c_cauchy.1 / f.c_cauchy.0, tol::CAUCHY_SPREAD));
    }
    out
}

fn fmt_list(v: &[f64], prec: usize) -> String {
    v.iter().map(|x| format!("{x:.prec$}")).collect::<Vec<_>>().join(" ")
}

/// Plain-text report; identical inputs give identical text.
pub fn render(r: &RunReport, verbosity: u8) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "fblab report");
    let _ = writeln!(s, "mode {:?}", r.mode);
    if let Some(c) = &r.constants {
        let k = kappa_constants();
        let _ = writeln!(s, "\n[constants d=2]");
        let _ = writeln!(s, "q2^2 {:.8}", c.q * c.q);
        let _ = writeln!(s, "delta2 {:.6}", c.delta);
        let _ = writeln!(s, "ell0 {:.6}", c.ell0);
        let _ = writeln!(s, "eps1(gamma=1) {:.6}", c.eps1_at_one);
        let _ = writeln!(s, "eps2(gamma=1) {:.6e}", c.eps2_at_one);
        let _ = writeln!(s, "eps_bd {:.6e} (gamma {:.2})", c.eps_bd, c.eps_bd_gamma);
        let _ = writeln!(s, "eps_int {:.6e}", c.eps_int);
        let _ = writeln!(s, "kappa1 printed {:.6} l2 {:.6}", k.printed_1, k.l2_1);
        let _ = writeln!(s, "kappa2 printed {:.6} l2 {:.6}", k.printed_2, k.l2_2);
    }
    if let Some(v) = &r.solver {
        let _ = writeln!(s, "\n[solver] n {} h {:.6}", r.n, r.h);
        let _ = writeln!(s, "eigenvalues {}", fmt_list(&v.eigenvalues, 6));
        let _ = writeln!(s, "sum {:.6}", v.sum);
        if let Some(re) = v.reference {
            let _ = writeln!(s, "reference {:.6} relative_error {:.3e}", re, (v.sum - re).abs() / re);
        }
        let _ = writeln!(s, "extremality_residuals {:.3e} {:.3e}", v.residuals.0, v.residuals.1);
        let _ = writeln!(s, "Lip {:.6}", v.lipschitz);
        let _ = writeln!(s, "attempts {} support_pieces {:?}", v.attempts, v.pieces);
    }
    if let Some(i) = &r.interface {
        let _ = writeln!(s, "\n[interface]");
        let _ = writeln!(s, "arcs {}", i.arcs);
        for (k, a) in i.junction_angles.iter().enumerate() {
            let _ = writeln!(s, "junction{k} angles_deg {}", fmt_list(a, 3));
        }
        let _ = writeln!(s, "contact_angles_deg {}", fmt_list(&i.contact_angles, 3));
        let _ = writeln!(s, "free_boundary_points {} isolated {}", i.free_boundary_points, i.isolated);
    }
    if !r.points.is_empty() {
        let _ = writeln!(s, "\n[points]");
        for (k, p) in r.points.iter().enumerate() {
            let g = p.profile.gamma_estimate.map(|g| format!("{g:.4}")).unwrap_or_else(|| "none".into());
            let _ = write!(s, "point{k} {} ({:.5}, {:.5}) class {} gamma {g}", p.point.kind, p.point.point[0], p.point.point[1], p.class);
            if let Some(rt) = &p.rate {
                let _ = write!(s, " a {:.4} rate_exponent {:.3} c_cauchy {:.3e}", rt.terminal.a, rt.exponent, rt.c_cauchy);
            }
            if let Some(c) = &p.cleanup {
                let _ = write!(s, " active {} r_clean {:.4}", c.active, p.cleanup_radius.unwrap_or(0.0));
            }
            let _ = writeln!(s);
            if verbosity >= 2 {
                let ns: Vec<f64> = p.profile.samples.iter().map(|x| x.frequency).collect();
                let _ = writeln!(s, "  N {}", fmt_list(&ns, 5));
            }
        }
    }
    if let Some(f) = &r.fitted {
        let _ = writeln!(s, "\n[fitted]");
        let _ = writeln!(s, "C_A {:.4e}", f.c_a);
        let _ = writeln!(s, "C_W {:.4e}", f.c_w);
        let _ = writeln!(s, "C_b {:.4}", f.c_b);
        let _ = writeln!(s, "C_cauchy {:.4e} .. {:.4e}", f.c_cauchy.0, f.c_cauchy.1);
        let _ = writeln!(s, "kappa_ratio printed {:.4} l2 {:.4}", f.kappa.0, f.kappa.1);
    }
    let _ = writeln!(s, "\n[checks]");
    for c in &r.checks {
        let _ = writeln!(s, "{c}");
    }
    let _ = writeln!(s, "\n{}", if r.passed() { "all checks passed" } else { "some checks failed" });
    s
}

/// SVG partition map, arc CSV, field CSV, per-point frequency and rate CSVs, report text.
pub fn emit_figures(run: &Run, dir: &Path, verbosity: u8) -> Result<Vec<std::path::PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: String, body: String| -> Result<()> {
        let p = dir.join(name);
        std::fs::write(&p, body)?;
        written.push(p);
        Ok(())
    };
    put("report.txt".into(), render(&run.report, verbosity))?;
    if let (Some(field), Some(graph)) = (&run.field, &run.graph) {
        put("partition.svg".into(), to_svg(field, graph))?;
        put("arcs.csv".into(), arcs_csv(graph))?;
        put("field.csv".into(), field.to_csv())?;
    }
    for (k, p) in run.report.points.iter().enumerate() {
        put(format!("frequency_{k}.csv"), p.profile.to_csv())?;
        if let Some(r) = &p.rate {
            put(format!("rate_{k}.csv"), r.to_csv())?;
        }
    }
    Ok(written)
}
