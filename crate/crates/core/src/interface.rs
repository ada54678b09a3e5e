//! Free-interface extraction, boundary traces and the structure checks built on them.

use std::collections::HashMap;
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::field::{Field, GridField};
use crate::geometry::{BoundarySample, Point};
use crate::solver::{lipschitz_estimate, DensityField};

/// How an arc ends.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum End {
    Junction(usize),
    Contact(usize),
    /// Ends inside the domain without meeting anything (closed arcs use this on both ends).
    Free,
}

/// Polyline separating components `pair.0 < pair.1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Arc {
    pub pair: (usize, usize),
    pub points: Vec<Point>,
    pub start: End,
    pub end: End,
    pub closed: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Junction {
    pub point: Point,
    /// Incident arcs as `(arc, at_start)`.
    pub arcs: Vec<(usize, bool)>,
    pub components: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Contact {
    /// Projection of the arc end onto `∂D`.
    pub point: Point,
    /// Outward normal at `point`.
    pub normal: Point,
    pub arc: usize,
    pub at_start: bool,
}

/// Maximal run of boundary samples assigned to one component.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceArc {
    pub component: usize,
    /// Arc-length parameters of the first and last sample.
    pub s_start: f64,
    pub s_end: f64,
    pub samples: usize,
}

/// A cluster of unassigned boundary samples (or a direct switch between traces).
#[derive(Clone, Debug, PartialEq)]
pub struct FreeBoundaryPoint {
    pub point: Point,
    pub s: f64,
    /// Length of the unassigned cluster along `∂D`.
    pub width: f64,
    /// Components of the traces before and after the point (counterclockwise).
    pub neighbors: (usize, usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Traces {
    pub samples: Vec<BoundarySample>,
    pub assigned: Vec<Option<usize>>,
    pub arcs: Vec<TraceArc>,
    pub points: Vec<FreeBoundaryPoint>,
    /// Threshold on the inward difference quotient.
    pub tau: f64,
    /// Every unassigned cluster is shorter than [`MAX_CLUSTER`] grid spacings.
    pub isolated: bool,
}

/// Longest unassigned cluster, in grid spacings, still counted as an isolated point.
pub const MAX_CLUSTER: f64 = 20.0;

#[derive(Clone, Debug, PartialEq)]
pub struct InterfaceGraph {
    pub arcs: Vec<Arc>,
    pub junctions: Vec<Junction>,
    pub contacts: Vec<Contact>,
    pub traces: Traces,
    pub lipschitz: f64,
}

type EdgeKey = (usize, usize);

fn edge_key(a: usize, b: usize) -> EdgeKey {
    (a.min(b), a.max(b))
}

#[derive(Clone, Copy, Debug)]
enum Stop {
    Junction(usize),
    Boundary,
}

struct EdgePoint {
    point: Point,
    pair: (usize, usize),
    links: Vec<EdgeKey>,
    stop: Option<Stop>,
}

fn union_find_root(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Crossing point on the edge `a → b` between nodes owned by different components.
fn crossing(field: &DensityField, grid: &GridField, a: usize, b: usize, i: usize, j: usize) -> Point {
    let (pa, pb) = (field.spec.node(a), field.spec.node(b));
    let t = field.interfaces.get(a, b).unwrap_or_else(|| {
        let fa = grid.extended[i][a] - grid.extended[j][a];
        let fb = grid.extended[i][b] - grid.extended[j][b];
        if fa != fb {
            (fa / (fa - fb)).clamp(0.0, 1.0)
        } else {
            0.5
        }
    });
    [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])]
}

/// Marching squares over the owner labels of a solved field.
pub fn extract_interface(field: &DensityField) -> Result<InterfaceGraph> {
    let grid = GridField::new(field);
    let lip = lipschitz_estimate(field);
    let traces = traces_on_boundary_with(field, &grid, lip)?;
    let spec = &field.spec;
    // mask nodes where every component vanishes take the label of an owned neighbor
    let labels_all: Vec<Option<usize>> = (0..spec.mask.len())
        .map(|k| {
            if !spec.mask[k] {
                None
            } else {
                field.owner[k].or_else(|| spec.neighbors(k).iter().flatten().find_map(|&q| if spec.mask[q] { field.owner[q] } else { None }))
            }
        })
        .collect();
    let label = |k: usize| labels_all[k];
    let mut points: HashMap<EdgeKey, EdgePoint> = HashMap::new();
    let mut junction_cells: Vec<(usize, usize, Vec<EdgeKey>)> = Vec::new();
    for cj in 0..spec.ny - 1 {
        for ci in 0..spec.nx - 1 {
            let c = [spec.index(ci, cj), spec.index(ci + 1, cj), spec.index(ci + 1, cj + 1), spec.index(ci, cj + 1)];
            let labels = c.map(label);
            let mut distinct: Vec<usize> = labels.iter().flatten().copied().collect();
            distinct.sort_unstable();
            distinct.dedup();
            if distinct.len() < 2 {
                continue;
            }
            let has_none = labels.iter().any(|l| l.is_none());
            // crossings on the four edges, indexed by edge m = (c[m], c[m+1])
            let mut edges: [Option<EdgeKey>; 4] = [None; 4];
            for m in 0..4 {
                let (a, b) = (c[m], c[(m + 1) % 4]);
                if let (Some(i), Some(j)) = (labels[m], labels[(m + 1) % 4]) {
                    if i != j {
                        let key = edge_key(a, b);
                        points.entry(key).or_insert_with(|| EdgePoint {
                            point: crossing(field, &grid, a, b, i, j),
                            pair: (i.min(j), i.max(j)),
                            links: Vec::new(),
                            stop: None,
                        });
                        edges[m] = Some(key);
                    }
                }
            }
            let present: Vec<EdgeKey> = edges.iter().flatten().copied().collect();
            if distinct.len() >= 3 {
                junction_cells.push((ci, cj, present));
                continue;
            }
            let link = |p: EdgeKey, q: EdgeKey, points: &mut HashMap<EdgeKey, EdgePoint>| {
                points.get_mut(&p).unwrap().links.push(q);
                points.get_mut(&q).unwrap().links.push(p);
            };
            match present.len() {
                2 => link(present[0], present[1], &mut points),
                4 => {
                    // saddle: separate the corners of the component weaker at the cell center
                    let (i, j) = (distinct[0], distinct[1]);
                    let center = [spec.node(c[0])[0] + 0.5 * spec.h, spec.node(c[0])[1] + 0.5 * spec.h];
                    let weak = if grid.signed(i, center) > grid.signed(j, center) { j } else { i };
                    for m in 0..4 {
                        if labels[m] == Some(weak) {
                            link(edges[(m + 3) % 4].unwrap(), edges[m].unwrap(), &mut points);
                        }
                    }
                }
                _ => {
                    for k in present {
                        if has_none {
                            points.get_mut(&k).unwrap().stop = Some(Stop::Boundary);
                        }
                    }
                }
            }
        }
    }
    // junction clusters: cells within one cell of each other
    let nj = junction_cells.len();
    let mut parent: Vec<usize> = (0..nj).collect();
    for a in 0..nj {
        for b in a + 1..nj {
            let (ca, cb) = (&junction_cells[a], &junction_cells[b]);
            if ca.0.abs_diff(cb.0) <= 2 && ca.1.abs_diff(cb.1) <= 2 {
                let (ra, rb) = (union_find_root(&mut parent, a), union_find_root(&mut parent, b));
                parent[ra] = rb;
            }
        }
    }
    let mut cluster_id: HashMap<usize, usize> = HashMap::new();
    let mut junctions: Vec<Junction> = Vec::new();
    let mut sums: Vec<(Point, usize)> = Vec::new();
    for a in 0..nj {
        let root = union_find_root(&mut parent, a);
        let id = *cluster_id.entry(root).or_insert_with(|| {
            junctions.push(Junction { point: [0.0, 0.0], arcs: Vec::new(), components: Vec::new() });
            sums.push(([0.0, 0.0], 0));
            junctions.len() - 1
        });
        let (ci, cj, ref keys) = junction_cells[a];
        for k in keys {
            let p = points.get_mut(k).unwrap();
            p.stop = Some(Stop::Junction(id));
            sums[id].0[0] += p.point[0];
            sums[id].0[1] += p.point[1];
            sums[id].1 += 1;
        }
        if keys.is_empty() {
            let q = spec.node(spec.index(ci, cj));
            sums[id].0[0] += q[0] + 0.5 * spec.h;
            sums[id].0[1] += q[1] + 0.5 * spec.h;
            sums[id].1 += 1;
        }
    }
    for (j, (s, n)) in junctions.iter_mut().zip(&sums) {
        j.point = [s[0] / *n as f64, s[1] / *n as f64];
    }
    // walk chains; sorted keys keep the output deterministic
    let mut keys: Vec<EdgeKey> = points.keys().copied().collect();
    keys.sort_unstable();
    let mut visited: HashMap<EdgeKey, bool> = HashMap::new();
    let mut arcs: Vec<Arc> = Vec::new();
    let mut contacts: Vec<Contact> = Vec::new();
    let end_of = |k: EdgeKey, points: &HashMap<EdgeKey, EdgePoint>| -> Option<Stop> { points[&k].stop };
    let starts: Vec<EdgeKey> = keys.iter().copied().filter(|k| points[k].links.len() < 2).collect();
    let rest: Vec<EdgeKey> = keys.iter().copied().filter(|k| points[k].links.len() >= 2).collect();
    for (closed_pass, list) in [(false, starts), (true, rest)] {
        for start in list {
            if visited.contains_key(&start) {
                continue;
            }
            let mut chain = vec![start];
            visited.insert(start, true);
            let mut prev: Option<EdgeKey> = None;
            let mut cur = start;
            loop {
                let next = points[&cur].links.iter().copied().find(|n| Some(*n) != prev && !visited.contains_key(n));
                match next {
                    Some(n) => {
                        visited.insert(n, true);
                        chain.push(n);
                        prev = Some(cur);
                        cur = n;
                    }
                    None => break,
                }
            }
            let pair = points[&start].pair;
            let pts: Vec<Point> = chain.iter().map(|k| points[k].point).collect();
            let closed = closed_pass && points[&cur].links.contains(&start) && chain.len() > 2;
            let idx = arcs.len();
            let mut ends = [End::Free, End::Free];
            if !closed {
                for (e, key) in [(0, start), (1, cur)] {
                    match end_of(key, &points) {
                        Some(Stop::Junction(id)) => {
                            ends[e] = End::Junction(id);
                            junctions[id].arcs.push((idx, e == 0));
                        }
                        Some(Stop::Boundary) => {
                            let p = pts[if e == 0 { 0 } else { pts.len() - 1 }];
                            let q = spec.domain.project_to_boundary(p);
                            ends[e] = End::Contact(contacts.len());
                            contacts.push(Contact { point: q, normal: spec.domain.normal(q), arc: idx, at_start: e == 0 });
                        }
                        None => {}
                    }
                }
            }
            arcs.push(Arc { pair, points: pts, start: ends[0], end: ends[1], closed });
        }
    }
    for j in junctions.iter_mut() {
        let mut comps: Vec<usize> = j.arcs.iter().flat_map(|(a, _)| [arcs[*a].pair.0, arcs[*a].pair.1]).collect();
        comps.sort_unstable();
        comps.dedup();
        j.components = comps;
    }
    Ok(InterfaceGraph { arcs, junctions, contacts, traces, lipschitz: lip })
}

/// Unit direction of the least-squares line through `pts`, oriented from the first point onward.
fn fit_direction(pts: &[Point]) -> Point {
    let n = pts.len() as f64;
    let m = pts.iter().fold([0.0, 0.0], |s, p| [s[0] + p[0] / n, s[1] + p[1] / n]);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in pts {
        let (dx, dy) = (p[0] - m[0], p[1] - m[1]);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let t = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let mut d = [t.cos(), t.sin()];
    let span = [pts[pts.len() - 1][0] - pts[0][0], pts[pts.len() - 1][1] - pts[0][1]];
    if d[0] * span[0] + d[1] * span[1] < 0.0 {
        d = [-d[0], -d[1]];
    }
    d
}

/// Fit window near one end of an arc, ordered away from that end.
fn end_window(arc: &Arc, at_start: bool, skip: usize, len: usize) -> (Vec<Point>, bool) {
    let mut pts = arc.points.clone();
    if !at_start {
        pts.reverse();
    }
    let full = pts.len() >= skip + len;
    let lo = skip.min(pts.len().saturating_sub(2));
    let hi = (skip + len).min(pts.len());
    (pts[lo..hi].to_vec(), !full)
}

/// Nodes used for tangent fits.
pub const FIT_NODES: usize = 8;
/// Nodes next to `∂D` skipped in contact fits.
pub const CONTACT_SKIP: usize = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct JunctionAngles {
    /// Angles between consecutive incident arcs (counterclockwise), in radians.
    pub angles: Vec<f64>,
    /// `max |angle − 2π/k|`
    pub deviation: f64,
    /// Some arc had fewer than [`FIT_NODES`] nodes.
    pub reduced: bool,
}

pub fn junction_angles(graph: &InterfaceGraph, junction: usize) -> Result<JunctionAngles> {
    let j = graph.junctions.get(junction).ok_or_else(|| Error::InvalidInput("no such junction".into()))?;
    if j.arcs.len() < 3 {
        return invalid(format!("junction with {} arcs is not a multiple point", j.arcs.len()));
    }
    let mut reduced = false;
    let mut dirs: Vec<f64> = j
        .arcs
        .iter()
        .map(|&(a, at_start)| {
            let (w, short) = end_window(&graph.arcs[a], at_start, 0, FIT_NODES);
            reduced |= short;
            let d = fit_direction(&w);
            d[1].atan2(d[0])
        })
        .collect();
    dirs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let k = dirs.len();
    let angles: Vec<f64> = (0..k).map(|m| if m + 1 < k { dirs[m + 1] - dirs[m] } else { dirs[0] + 2.0 * PI - dirs[m] }).collect();
    let deviation = angles.iter().map(|a| (a - 2.0 * PI / k as f64).abs()).fold(0.0, f64::max);
    Ok(JunctionAngles { angles, deviation, reduced })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContactAngle {
    /// Angle between the fitted arc tangent and `ν`, in `[0, π/2]`.
    pub angle: f64,
    pub reduced: bool,
}

pub fn boundary_contact_angle(graph: &InterfaceGraph, contact: usize) -> Result<ContactAngle> {
    let c = graph.contacts.get(contact).ok_or_else(|| Error::InvalidInput("no such contact".into()))?;
    let (w, reduced) = end_window(&graph.arcs[c.arc], c.at_start, CONTACT_SKIP, FIT_NODES);
    if w.len() < 2 {
        return invalid("arc too short for a tangent fit");
    }
    let d = fit_direction(&w);
    let cos = (d[0] * c.normal[0] + d[1] * c.normal[1]).abs().min(1.0);
    Ok(ContactAngle { angle: cos.acos(), reduced })
}

/// Boundary traces with `τ_ν = 3h·lip`.
pub fn traces_on_boundary(field: &DensityField, lip: f64) -> Result<Traces> {
    let grid = GridField::new(field);
    traces_on_boundary_with(field, &grid, lip)
}

/// Inward offset, in grid spacings, of the difference quotient.
const QUOTIENT_OFFSET: f64 = 2.0;

fn traces_on_boundary_with(field: &DensityField, grid: &GridField, lip: f64) -> Result<Traces> {
    let h = field.spec.h;
    let tau = 3.0 * h * lip;
    let samples = field.spec.domain.boundary_polyline(0.5 * h);
    if samples.len() < 3 {
        return invalid("boundary polyline too coarse");
    }
    let delta = QUOTIENT_OFFSET * h;
    let assigned: Vec<Option<usize>> = samples
        .iter()
        .map(|b| {
            let p = [b.pos[0] - delta * b.normal[0], b.pos[1] - delta * b.normal[1]];
            let (best, q) = (0..field.n()).map(|i| (i, grid.value(i, p) / delta)).fold((0, f64::MIN), |m, v| if v.1 > m.1 { v } else { m });
            (q > tau).then_some(best)
        })
        .collect();
    Ok(summarize_traces(samples, assigned, tau, h))
}

/// Group assignments along the closed boundary into trace arcs and free-boundary points.
fn summarize_traces(samples: Vec<BoundarySample>, assigned: Vec<Option<usize>>, tau: f64, h: f64) -> Traces {
    let m = samples.len();
    let perimeter = {
        let (a, b) = (samples[m - 1].pos, samples[0].pos);
        samples[m - 1].s + (a[0] - b[0]).hypot(a[1] - b[1])
    };
    let arc_len = |from: usize, to: usize| {
        let d = samples[to].s - samples[from].s;
        if d < 0.0 {
            d + perimeter
        } else {
            d
        }
    };
    let mut arcs = Vec::new();
    let mut points = Vec::new();
    let Some(anchor) = (0..m).find(|&k| assigned[k].is_some() && assigned[(k + m - 1) % m] != assigned[k]) else {
        // a single trace (or none) around the whole boundary
        if let Some(c) = assigned[0] {
            if assigned.iter().all(|a| *a == Some(c)) {
                arcs.push(TraceArc { component: c, s_start: samples[0].s, s_end: samples[m - 1].s, samples: m });
            }
        }
        return Traces { samples, assigned, arcs, points, tau, isolated: true };
    };
    // runs starting at the anchor, cyclically
    let mut runs: Vec<(Option<usize>, usize, usize)> = Vec::new();
    for step in 0..m {
        let k = (anchor + step) % m;
        match runs.last_mut() {
            Some(r) if r.0 == assigned[k] => r.2 = k,
            _ => runs.push((assigned[k], k, k)),
        }
    }
    let count = |r: &(Option<usize>, usize, usize)| (r.2 + m - r.1) % m + 1;
    let mut isolated = true;
    let nr = runs.len();
    for (idx, r) in runs.iter().enumerate() {
        match r.0 {
            Some(c) => {
                arcs.push(TraceArc { component: c, s_start: samples[r.1].s, s_end: samples[r.2].s, samples: count(r) });
                let next = &runs[(idx + 1) % nr];
                if let Some(d) = next.0 {
                    if d != c {
                        // direct switch between two traces
                        let (a, b) = (samples[r.2].pos, samples[next.1].pos);
                        points.push(FreeBoundaryPoint {
                            point: [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])],
                            s: samples[r.2].s,
                            width: 0.0,
                            neighbors: (c, d),
                        });
                    }
                }
            }
            None => {
                let prev = runs[(idx + nr - 1) % nr].0.unwrap_or(usize::MAX);
                let next = runs[(idx + 1) % nr].0.unwrap_or(usize::MAX);
                let width = arc_len(r.1, r.2);
                if width > MAX_CLUSTER * h {
                    isolated = false;
                }
                let mid = (r.1 + count(r) / 2) % m;
                points.push(FreeBoundaryPoint { point: samples[mid].pos, s: samples[mid].s, width, neighbors: (prev, next) });
            }
        }
    }
    Traces { samples, assigned, arcs, points, tau, isolated }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearBound {
    /// `min u_j/dist(·,∂D)` over nodes of `B_{r/2}(x₀)` at distance at least `h` from `∂D`.
    pub c: f64,
    pub nodes: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cleanup {
    pub active: usize,
    pub expected: Option<usize>,
    /// `‖u_i‖_{L∞(B_r(x₀)∩D)}` at grid nodes.
    pub sup: Vec<f64>,
    pub tau: f64,
    /// Linear growth of the dominant component (reported when one component is expected).
    pub linear: Option<LinearBound>,
}

impl Cleanup {
    pub fn matches(&self) -> bool {
        self.expected.is_none_or(|e| e == self.active)
    }
}

/// Components with `‖u_i‖_{L∞(B_r(x₀)∩D)} > τ_z = 3h·Lip`.
pub fn cleanup_check(field: &DensityField, lip: f64, x0: Point, r: f64, expected: Option<usize>) -> Result<Cleanup> {
    let spec = &field.spec;
    let h = spec.h;
    if r < 8.0 * h * (1.0 - 1e-12) {
        return Err(Error::OutOfRange { what: "clean-up radius", value: r, lo: 8.0 * h, hi: f64::INFINITY });
    }
    let tau = 3.0 * h * lip;
    let mut sup = vec![0.0f64; field.n()];
    let lo_i = (((x0[0] - r - spec.origin[0]) / h).floor().max(0.0)) as usize;
    let hi_i = (((x0[0] + r - spec.origin[0]) / h).ceil() as usize).min(spec.nx - 1);
    let lo_j = (((x0[1] - r - spec.origin[1]) / h).floor().max(0.0)) as usize;
    let hi_j = (((x0[1] + r - spec.origin[1]) / h).ceil() as usize).min(spec.ny - 1);
    let mut inner = Vec::new();
    for j in lo_j..=hi_j {
        for i in lo_i..=hi_i {
            let k = spec.index(i, j);
            let p = spec.node(k);
            let dist = (p[0] - x0[0]).hypot(p[1] - x0[1]);
            if !spec.mask[k] || dist > r {
                continue;
            }
            for (c, s) in sup.iter_mut().enumerate() {
                *s = s.max(field.components[c][k]);
            }
            if dist <= 0.5 * r {
                inner.push(k);
            }
        }
    }
    let active = sup.iter().filter(|s| **s > tau).count();
    let linear = if expected == Some(1) {
        let dom = (0..field.n()).max_by(|a, b| sup[*a].partial_cmp(&sup[*b]).unwrap()).unwrap_or(0);
        let mut c = f64::INFINITY;
        let mut nodes = 0;
        for k in inner {
            let p = spec.node(k);
            let q = spec.domain.project_to_boundary(p);
            let d = (p[0] - q[0]).hypot(p[1] - q[1]);
            if d >= h {
                c = c.min(field.components[dom][k] / d);
                nodes += 1;
            }
        }
        Some(LinearBound { c, nodes })
    } else {
        None
    };
    Ok(Cleanup { active, expected, sup, tau, linear })
}

const PALETTE: [&str; 8] = ["#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#b07aa1", "#76b7b2", "#edc948", "#9c755f"];

/// SVG with the partition colored by owner, arcs, junctions (circles) and contacts (squares).
pub fn to_svg(field: &DensityField, graph: &InterfaceGraph) -> String {
    let spec = &field.spec;
    let (lo, hi) = spec.domain.bbox();
    let pad = 0.05 * (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let scale = 600.0 / ((hi[0] - lo[0]).max(hi[1] - lo[1]) + 2.0 * pad);
    let px = |p: Point| ((p[0] - lo[0] + pad) * scale, (hi[1] + pad - p[1]) * scale);
    let width = (hi[0] - lo[0] + 2.0 * pad) * scale;
    let height = (hi[1] - lo[1] + 2.0 * pad) * scale;
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.2} {height:.2}\">\n"
    );
    let cell = spec.h * scale;
    for j in 0..spec.ny {
        let mut i = 0;
        while i < spec.nx {
            let k = spec.index(i, j);
            let Some(c) = (if spec.mask[k] { field.owner[k] } else { None }) else {
                i += 1;
                continue;
            };
            let start = i;
            while i < spec.nx && spec.mask[spec.index(i, j)] && field.owner[spec.index(i, j)] == Some(c) {
                i += 1;
            }
            let (x, y) = px(spec.node(spec.index(start, j)));
            out.push_str(&format!(
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>\n",
                x - 0.5 * cell,
                y - 0.5 * cell,
                (i - start) as f64 * cell,
                cell,
                PALETTE[c % PALETTE.len()]
            ));
        }
    }
    let boundary: Vec<String> = spec.boundary.iter().map(|b| {
        let (x, y) = px(b.pos);
        format!("{x:.2},{y:.2}")
    }).collect();
    out.push_str(&format!("<polygon points=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\"/>\n", boundary.join(" ")));
    for arc in &graph.arcs {
        let pts: Vec<String> = arc.points.iter().map(|p| {
            let (x, y) = px(*p);
            format!("{x:.2},{y:.2}")
        }).collect();
        out.push_str(&format!("<polyline points=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"2\"/>\n", pts.join(" ")));
    }
    for j in &graph.junctions {
        let (x, y) = px(j.point);
        out.push_str(&format!("<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"5\" fill=\"white\" stroke=\"black\"/>\n"));
    }
    for c in &graph.contacts {
        let (x, y) = px(c.point);
        out.push_str(&format!("<rect x=\"{:.2}\" y=\"{:.2}\" width=\"8\" height=\"8\" fill=\"white\" stroke=\"black\"/>\n", x - 4.0, y - 4.0));
    }
    out.push_str("</svg>\n");
    out
}

/// CSV `arc,i,j,k,x,y` with one row per polyline node (components are 1-based).
pub fn arcs_csv(graph: &InterfaceGraph) -> String {
    let mut out = String::from("arc,i,j,k,x,y\n");
    for (a, arc) in graph.arcs.iter().enumerate() {
        for (k, p) in arc.points.iter().enumerate() {
            out.push_str(&format!("{a},{},{},{k},{:.9},{:.9}\n", arc.pair.0 + 1, arc.pair.1 + 1, p[0], p[1]));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{sample_on_grid, Synthetic};
    use crate::geometry::{Domain, DomainSpec};
    use crate::solver::{minimize_partition, SolverConfig};

    fn slab(h: f64) -> DomainSpec {
        DomainSpec::new(Domain::epigraph(0.0, 1.0, 1.0, 1.0).unwrap(), h).unwrap()
    }

    #[test]
    fn single_component_has_no_interface() {
        let spec = DomainSpec::new(Domain::disk(1.0).unwrap(), 1.0 / 24.0).unwrap();
        let d = minimize_partition(&spec, &SolverConfig { n: 1, ..Default::default() }).unwrap();
        let g = extract_interface(&d).unwrap();
        assert!(g.arcs.is_empty() && g.junctions.is_empty() && g.contacts.is_empty());
        assert_eq!(g.traces.arcs.len(), 1);
        assert!(g.traces.points.is_empty());
    }

    #[test]
    fn three_rays_meet_at_equal_angles() {
        let spec = DomainSpec::new(Domain::disk(1.0).unwrap(), 1.0 / 64.0).unwrap();
        let f = Synthetic::plane_sectors(1.5, 1.0, 0.3).unwrap();
        let d = sample_on_grid(&f, &spec).unwrap();
        let g = extract_interface(&d).unwrap();
        assert_eq!(g.junctions.len(), 1);
        assert_eq!(g.arcs.len(), 3);
        let j = junction_angles(&g, 0).unwrap();
        assert!(j.deviation.to_degrees() < 0.5, "{} {:?} {:?}", j.deviation.to_degrees(), g.junctions[0].point, j.angles.iter().map(|a| a.to_degrees()).collect::<Vec<_>>());
        assert!(j.junction_point_error(&g) < spec.h);
    }

    impl JunctionAngles {
        fn junction_point_error(&self, g: &InterfaceGraph) -> f64 {
            g.junctions[0].point[0].hypot(g.junctions[0].point[1])
        }
    }

    #[test]
    fn orthogonal_pair_contact() {
        let spec = slab(1.0 / 64.0);
        let f = Synthetic::boundary_pair(1.0, [0.0, -1.0], [1.0, 0.0]).unwrap();
        let d = sample_on_grid(&f, &spec).unwrap();
        let g = extract_interface(&d).unwrap();
        let bottom: Vec<usize> = (0..g.contacts.len()).filter(|&c| g.contacts[c].point[1].abs() < 1e-9).collect();
        assert_eq!(bottom.len(), 1);
        let a = boundary_contact_angle(&g, bottom[0]).unwrap();
        assert!(a.angle.to_degrees() < 0.5, "{}", a.angle.to_degrees());
        assert!(g.contacts[bottom[0]].point[0].abs() < spec.h);
    }

    #[test]
    fn tilted_interface_reports_its_angle() {
        let spec = slab(1.0 / 64.0);
        let e = [45f64.to_radians().cos(), 45f64.to_radians().sin()];
        let f = Synthetic::boundary_pair(1.0, [0.0, -1.0], e).unwrap();
        let d = sample_on_grid(&f, &spec).unwrap();
        let g = extract_interface(&d).unwrap();
        let c = (0..g.contacts.len()).find(|&c| g.contacts[c].point[1].abs() < 1e-9).unwrap();
        let a = boundary_contact_angle(&g, c).unwrap();
        assert!((a.angle.to_degrees() - 45.0).abs() < 0.5, "{}", a.angle.to_degrees());
    }

    #[test]
    fn wedge_traces_split_at_the_line() {
        let spec = slab(1.0 / 64.0);
        let f = Synthetic::boundary_pair(1.0, [0.0, -1.0], [1.0, 0.0]).unwrap();
        let d = sample_on_grid(&f, &spec).unwrap();
        let t = traces_on_boundary(&d, 1.5).unwrap();
        // the bottom edge carries both traces; the split sits at x = 0
        let bottom: Vec<&FreeBoundaryPoint> = t.points.iter().filter(|p| p.point[1].abs() < 1e-9 && p.point[0].abs() < 0.9).collect();
        assert_eq!(bottom.len(), 1);
        assert!(bottom[0].point[0].abs() < 3.0 * spec.h);
        assert!(t.isolated, "{:?}", t.points);
        let (a, b) = bottom[0].neighbors;
        assert!(a != b && a < 2 && b < 2);
    }

    #[test]
    fn two_rays_are_not_a_junction() {
        let g = InterfaceGraph {
            arcs: vec![],
            junctions: vec![Junction { point: [0.0, 0.0], arcs: vec![], components: vec![0, 1] }],
            contacts: vec![],
            traces: Traces { samples: vec![], assigned: vec![], arcs: vec![], points: vec![], tau: 0.0, isolated: true },
            lipschitz: 1.0,
        };
        assert!(junction_angles(&g, 0).is_err());
    }

    #[test]
    fn cleanup_counts_and_linear_growth() {
        let spec = slab(1.0 / 64.0);
        let f = Synthetic::boundary_pair(1.0, [0.0, -1.0], [1.0, 0.0]).unwrap();
        let d = sample_on_grid(&f, &spec).unwrap();
        let lip = 1.5;
        let far = cleanup_check(&d, lip, [0.6, 0.0], 0.25, Some(1)).unwrap();
        assert_eq!(far.active, 1, "{:?} {}", far.sup, far.tau);
        assert!(far.matches());
        let lb = far.linear.unwrap();
        assert!(lb.c > 0.0 && lb.nodes > 10);
        let at = cleanup_check(&d, lip, [0.0, 0.0], 0.5, Some(2)).unwrap();
        assert_eq!(at.active, 2);
        assert!(cleanup_check(&d, lip, [0.0, 0.0], 2.0 * spec.h, None).is_err());
    }

    #[test]
    fn exports() {
        let spec = DomainSpec::new(Domain::disk(1.0).unwrap(), 1.0 / 32.0).unwrap();
        let f = Synthetic::plane_sectors(1.5, 1.0, 0.3).unwrap();
        let d = sample_on_grid(&f, &spec).unwrap();
        let g = extract_interface(&d).unwrap();
        let svg = to_svg(&d, &g);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("<circle"));
        let csv = arcs_csv(&g);
        assert!(csv.starts_with("arc,i,j,k,x,y\n"));
        assert!(csv.lines().count() > 10);
    }
}
