//! Per-point analysis of a solved partition at boundary points: frequency, blow-up, clean-up.

use crate::blowup::{blowup_rate, normalization_ratios, ProfileKind, RateReport};
use crate::error::{invalid, Result};
use crate::field::GridField;
use crate::frequency::{check_h_growth, frequency_profile, r0, radii_schedule, Center, FrequencyProfile, HGrowth, PointClass};
use crate::geometry::{BoundaryChart, Point};
use crate::interface::{cleanup_check, Cleanup, InterfaceGraph};
use crate::moduli::Modulus;
use crate::solver::DensityField;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointKind {
    /// Free-boundary point on `∂D` detected from the traces.
    Contact,
    /// Arc-length midpoint of a trace.
    TraceMidpoint,
    /// Supplied by the user.
    Explicit,
}

impl std::fmt::Display for PointKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PointKind::Contact => "contact",
            PointKind::TraceMidpoint => "trace-midpoint",
            PointKind::Explicit => "explicit",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalysisPoint {
    pub kind: PointKind,
    pub point: Point,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisConfig {
    pub chart_radius: f64,
    /// Radii per frequency profile and per rate fit.
    pub radii: usize,
    /// `δ` separating `γ = 2` from the next admissible frequency.
    pub delta: f64,
    /// Classification tolerance on `γ`.
    pub tolerance: f64,
    /// Modulus `σ₀` for the rate integrals.
    pub sigma0: Modulus,
    /// Fixed clean-up radius; `None` uses [`cleanup_radius`].
    pub cleanup_radius: Option<f64>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            chart_radius: 0.2,
            radii: 8,
            delta: 0.0708,
            tolerance: 0.1,
            sigma0: Modulus::power(1.0, 1.0, 1.0).expect("valid modulus"),
            cleanup_radius: None,
        }
    }
}

/// Smallest radius at which a degree-two profile of amplitude `a` exceeds `τ_z = 3h·lip`
/// by a factor 2 (`a r²/2 = 2τ_z`), and at least `8h`.
pub fn cleanup_radius(h: f64, lip: f64, amplitude: f64) -> f64 {
    let r = if amplitude > 0.0 { (12.0 * h * lip / amplitude).sqrt() } else { f64::INFINITY };
    r.max(8.0 * h)
}

#[derive(Clone, Debug)]
pub struct PointReport {
    pub point: AnalysisPoint,
    pub normal: Point,
    pub profile: FrequencyProfile,
    pub class: PointClass,
    pub rate: Option<RateReport>,
    /// Growth of the untransformed height, used for the amplitude normalization.
    pub growth: Option<HGrowth>,
    /// `(printed κ, L² κ)` normalization ratios.
    pub normalization: Option<(f64, f64)>,
    pub cleanup_radius: Option<f64>,
    pub cleanup: Option<Cleanup>,
}

impl PointReport {
    pub fn amplitude(&self) -> Option<f64> {
        self.rate.as_ref().map(|r| r.terminal.a)
    }

    /// Linear nondegeneracy at Z1 points: `c ≥ 0.25·a`.
    pub fn linear_bound_holds(&self) -> Option<bool> {
        let lb = self.cleanup.as_ref()?.linear.as_ref()?;
        Some(lb.nodes > 0 && lb.c >= 0.25 * self.amplitude()?)
    }
}

/// Detected free-boundary points and trace midpoints, in boundary order. A free-boundary point
/// with an interface contact within its cluster (plus `snap`) is moved to that contact, which
/// carries the solver's crossing positions.
pub fn auto_points(graph: &InterfaceGraph, snap: f64) -> Vec<AnalysisPoint> {
    let t = &graph.traces;
    let mut pts: Vec<(f64, AnalysisPoint)> = t
        .points
        .iter()
        .map(|p| {
            let near = graph
                .contacts
                .iter()
                .map(|c| (c.point, (c.point[0] - p.point[0]).hypot(c.point[1] - p.point[1])))
                .filter(|(_, d)| *d <= 0.5 * p.width + snap)
                .min_by(|a, b| a.1.total_cmp(&b.1));
            (p.s, AnalysisPoint { kind: PointKind::Contact, point: near.map(|n| n.0).unwrap_or(p.point) })
        })
        .collect();
    let total = t.samples.len();
    for arc in &t.arcs {
        if arc.samples == total {
            continue;
        }
        let first = t.samples.iter().position(|s| s.s == arc.s_start).unwrap_or(0);
        let mid = (first + arc.samples / 2) % total;
        pts.push((t.samples[mid].s, AnalysisPoint { kind: PointKind::TraceMidpoint, point: t.samples[mid].pos }));
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.into_iter().map(|(_, p)| p).collect()
}

/// Full analysis at a point of `∂D`.
pub fn analyze_point(field: &DensityField, grid: &GridField, lip: f64, point: AnalysisPoint, cfg: &AnalysisConfig) -> Result<PointReport> {
    let spec = &field.spec;
    let h = spec.h;
    if cfg.radii < 4 {
        return invalid("need at least four radii per profile");
    }
    let x0 = spec.domain.project_to_boundary(point.point);
    let normal = spec.domain.normal(x0);
    let chart = BoundaryChart::at(&spec.domain, x0, cfg.chart_radius)?;
    let lambda_max = field.eigenvalues.iter().copied().fold(0.0, f64::max);
    let r_hi = r0(cfg.chart_radius, lambda_max, 2);
    let lo = 8.0 * h;
    if r_hi <= lo {
        return invalid(format!("R₀ = {r_hi:.4} does not exceed 8h = {lo:.4}; refine the grid"));
    }
    let radii = radii_schedule(lo, r_hi, cfg.radii)?;
    let profile = frequency_profile(grid, &Center::Boundary(chart), &radii, &[1.0, 2.0])?;
    let class = profile.classify(cfg.delta, cfg.tolerance);
    let kind = match class {
        PointClass::Z1 => Some(ProfileKind::Deg1),
        PointClass::Z2 => Some(ProfileKind::Deg2),
        _ => None,
    };
    let (rate, growth, normalization) = match kind {
        Some(kind) => {
            let rate_radii = radii_schedule(lo, cfg.chart_radius.max(r_hi), cfg.radii)?;
            let rate = blowup_rate(grid, x0, normal, &rate_radii, kind.gamma(), kind, &cfg.sigma0)?;
            let plain = frequency_profile(grid, &Center::Interior(x0), &radii, &[kind.gamma()])?;
            let growth = check_h_growth(&plain, kind.gamma()).ok();
            let norm = growth.as_ref().and_then(|g| normalization_ratios(rate.terminal.a, g.h_limit, kind).ok());
            (Some(rate), growth, norm)
        }
        None => (None, None, None),
    };
    let expected = class.active_components();
    let radius = cfg.cleanup_radius.or_else(|| rate.as_ref().map(|r| cleanup_radius(h, lip, r.terminal.a)));
    let cleanup = match radius {
        Some(r) => Some(cleanup_check(field, lip, x0, r, expected)?),
        None => None,
    };
    Ok(PointReport { point, normal, profile, class, rate, growth, normalization, cleanup_radius: radius, cleanup })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoundarySample;
    use crate::interface::{Contact, FreeBoundaryPoint, TraceArc, Traces};

    fn graph(contacts: &[Point]) -> InterfaceGraph {
        // twelve samples on the x-axis, traces 0 on s ∈ [0, 4], 1 on s ∈ [7, 11]
        let samples = (0..12).map(|k| BoundarySample { pos: [k as f64, 0.0], normal: [0.0, -1.0], s: k as f64 }).collect();
        let arcs = vec![
            TraceArc { component: 0, s_start: 0.0, s_end: 4.0, samples: 5 },
            TraceArc { component: 1, s_start: 7.0, s_end: 11.0, samples: 5 },
        ];
        let points = vec![FreeBoundaryPoint { point: [5.5, 0.0], s: 5.5, width: 2.0, neighbors: (0, 1) }];
        InterfaceGraph {
            arcs: vec![],
            junctions: vec![],
            contacts: contacts.iter().map(|p| Contact { point: *p, normal: [0.0, -1.0], arc: 0, at_start: true }).collect(),
            traces: Traces { assigned: vec![], samples, arcs, points, tau: 0.1, isolated: true },
            lipschitz: 1.0,
        }
    }

    #[test]
    fn auto_points_order_and_midpoints() {
        let pts = auto_points(&graph(&[]), 0.1);
        let kinds: Vec<PointKind> = pts.iter().map(|p| p.kind).collect();
        assert_eq!(kinds, [PointKind::TraceMidpoint, PointKind::Contact, PointKind::TraceMidpoint]);
        assert_eq!(pts[0].point, [2.0, 0.0]);
        assert_eq!(pts[1].point, [5.5, 0.0]);
        assert_eq!(pts[2].point, [9.0, 0.0]);
    }

    #[test]
    fn auto_points_snap_to_nearest_contact_in_reach() {
        let pts = auto_points(&graph(&[[3.0, 0.0], [5.9, 0.0], [6.2, 0.0]]), 0.1);
        assert_eq!(pts[1].point, [5.9, 0.0]);
        // out of reach: |6.8 - 5.5| > 1 + 0.1
        let pts = auto_points(&graph(&[[6.8, 0.0]]), 0.1);
        assert_eq!(pts[1].point, [5.5, 0.0]);
    }

    #[test]
    fn cleanup_radius_rule() {
        let h = 1.0 / 128.0;
        // a r²/2 = 2·3h·Lip at the returned radius
        let r = cleanup_radius(h, 2.0, 1.5);
        assert!((1.5 * r * r / 2.0 - 6.0 * h * 2.0).abs() < 1e-12);
        assert_eq!(cleanup_radius(h, 1e-6, 100.0), 8.0 * h);
        assert_eq!(cleanup_radius(h, 1.0, 0.0), f64::INFINITY);
    }
}
