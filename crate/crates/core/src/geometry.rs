//! Planar domains, grids, boundary charts and the boundary-straightening map.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::moduli::Modulus;
use crate::quadrature::gauss_legendre_on;

pub type Point = [f64; 2];

fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

#[derive(Clone, Debug, PartialEq)]
pub enum DomainKind {
    Disk { center: Point, radius: f64 },
    /// Centered rectangle `[-w/2, w/2] × [-h/2, h/2]` with corner arcs of radius `corner`.
    RoundedRect { width: f64, height: f64, corner: f64 },
    /// `{|y₁| < half_width, a|y₁|^{1+e} < y₂ < top}`.
    Epigraph { amplitude: f64, exponent: f64, half_width: f64, top: f64 },
}

/// A point on the boundary with its outward unit normal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundarySample {
    pub pos: Point,
    pub normal: Point,
    /// Arclength parameter along the counterclockwise boundary.
    pub s: f64,
}

fn push_segment(out: &mut Vec<BoundarySample>, s_acc: &mut f64, spacing: f64, a: Point, b: Point, normal: Point) {
    let len = norm([b[0] - a[0], b[1] - a[1]]);
    let n = ((len / spacing).ceil() as usize).max(1);
    for k in 0..n {
        let t = k as f64 / n as f64;
        out.push(BoundarySample { pos: [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])], normal, s: *s_acc + t * len });
    }
    *s_acc += len;
}

#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    pub kind: DomainKind,
}

impl Domain {
    pub fn disk(radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return invalid("disk radius must be positive");
        }
        Ok(Domain { kind: DomainKind::Disk { center: [0.0, 0.0], radius } })
    }

    pub fn rounded_rect(width: f64, height: f64, corner: f64) -> Result<Self> {
        if !(width > 0.0 && height > 0.0 && corner >= 0.0 && 2.0 * corner < width.min(height)) {
            return invalid("rounded rectangle needs 0 <= 2·corner < min(width, height)");
        }
        Ok(Domain { kind: DomainKind::RoundedRect { width, height, corner } })
    }

    pub fn epigraph(amplitude: f64, exponent: f64, half_width: f64, top: f64) -> Result<Self> {
        if !(amplitude >= 0.0 && exponent > 0.0 && exponent <= 1.0 && half_width > 0.0) {
            return invalid("epigraph needs amplitude >= 0, exponent in (0, 1], half_width > 0");
        }
        if !(top > amplitude * half_width.powf(1.0 + exponent)) {
            return invalid("epigraph top must lie above the graph");
        }
        Ok(Domain { kind: DomainKind::Epigraph { amplitude, exponent, half_width, top } })
    }

    fn graph(&self, y1: f64) -> (f64, f64) {
        match self.kind {
            DomainKind::Epigraph { amplitude, exponent, .. } => {
                let a = y1.abs();
                (amplitude * a.powf(1.0 + exponent), amplitude * (1.0 + exponent) * a.powf(exponent) * y1.signum())
            }
            _ => (0.0, 0.0),
        }
    }

    /// Level function, negative inside.
    pub fn level(&self, y: Point) -> f64 {
        match self.kind {
            DomainKind::Disk { center, radius } => norm([y[0] - center[0], y[1] - center[1]]) - radius,
            DomainKind::RoundedRect { width, height, corner } => {
                let qx = y[0].abs() - (0.5 * width - corner);
                let qy = y[1].abs() - (0.5 * height - corner);
                norm([qx.max(0.0), qy.max(0.0)]) + qx.max(qy).min(0.0) - corner
            }
            DomainKind::Epigraph { half_width, top, .. } => {
                let (g, _) = self.graph(y[0]);
                (g - y[1]).max(y[1] - top).max(y[0].abs() - half_width)
            }
        }
    }

    /// Gradient of the level function.
    pub fn level_gradient(&self, y: Point) -> Point {
        match self.kind {
            DomainKind::Disk { center, .. } => {
                let d = [y[0] - center[0], y[1] - center[1]];
                let n = norm(d).max(1e-300);
                [d[0] / n, d[1] / n]
            }
            DomainKind::RoundedRect { width, height, corner } => {
                let qx = y[0].abs() - (0.5 * width - corner);
                let qy = y[1].abs() - (0.5 * height - corner);
                let (sx, sy) = (y[0].signum(), y[1].signum());
                if qx > 0.0 && qy > 0.0 {
                    let n = norm([qx, qy]);
                    [sx * qx / n, sy * qy / n]
                } else if qx > qy {
                    [sx, 0.0]
                } else {
                    [0.0, sy]
                }
            }
            DomainKind::Epigraph { half_width, top, .. } => {
                let (g, dg) = self.graph(y[0]);
                let pieces = [g - y[1], y[1] - top, y[0].abs() - half_width];
                let k = (0..3).max_by(|&a, &b| pieces[a].total_cmp(&pieces[b])).unwrap();
                match k {
                    0 => [dg, -1.0],
                    1 => [0.0, 1.0],
                    _ => [y[0].signum(), 0.0],
                }
            }
        }
    }

    pub fn contains(&self, y: Point) -> bool {
        self.level(y) < 0.0
    }

    pub fn bbox(&self) -> (Point, Point) {
        match self.kind {
            DomainKind::Disk { center, radius } => {
                ([center[0] - radius, center[1] - radius], [center[0] + radius, center[1] + radius])
            }
            DomainKind::RoundedRect { width, height, .. } => {
                ([-0.5 * width, -0.5 * height], [0.5 * width, 0.5 * height])
            }
            DomainKind::Epigraph { half_width, top, .. } => ([-half_width, 0.0], [half_width, top]),
        }
    }

    pub fn area(&self) -> f64 {
        match self.kind {
            DomainKind::Disk { radius, .. } => PI * radius * radius,
            DomainKind::RoundedRect { width, height, corner } => width * height - (4.0 - PI) * corner * corner,
            DomainKind::Epigraph { amplitude, exponent, half_width, top } => {
                2.0 * half_width * top - 2.0 * amplitude * half_width.powf(2.0 + exponent) / (2.0 + exponent)
            }
        }
    }

    /// Counterclockwise boundary samples at spacing close to `spacing`.
    pub fn boundary_polyline(&self, spacing: f64) -> Vec<BoundarySample> {
        let mut out = Vec::new();
        let mut s_acc = 0.0;
        match self.kind {
            DomainKind::Disk { center, radius } => {
                let n = ((2.0 * PI * radius / spacing).ceil() as usize).max(8);
                for k in 0..n {
                    let t = 2.0 * PI * k as f64 / n as f64;
                    let nrm = [t.cos(), t.sin()];
                    out.push(BoundarySample {
                        pos: [center[0] + radius * nrm[0], center[1] + radius * nrm[1]],
                        normal: nrm,
                        s: radius * t,
                    });
                }
            }
            DomainKind::RoundedRect { width, height, corner } => {
                let (a, b) = (0.5 * width - corner, 0.5 * height - corner);
                let centers = [[a, -b], [a, b], [-a, b], [-a, -b]];
                let start_angle = [-0.5 * PI, 0.0, 0.5 * PI, PI];
                for k in 0..4 {
                    let c = centers[k];
                    let n_arc = ((0.5 * PI * corner / spacing).ceil() as usize).max(2);
                    // straight edge leading into corner k: from previous corner's arc end
                    let prev = centers[(k + 3) % 4];
                    let t0 = start_angle[k];
                    let nrm = [t0.cos(), t0.sin()];
                    let from = [prev[0] + corner * nrm[0], prev[1] + corner * nrm[1]];
                    let to = [c[0] + corner * nrm[0], c[1] + corner * nrm[1]];
                    push_segment(&mut out, &mut s_acc, spacing, from, to, nrm);
                    if corner == 0.0 {
                        continue;
                    }
                    for j in 0..n_arc {
                        let t = t0 + 0.5 * PI * j as f64 / n_arc as f64;
                        let nr = [t.cos(), t.sin()];
                        out.push(BoundarySample {
                            pos: [c[0] + corner * nr[0], c[1] + corner * nr[1]],
                            normal: nr,
                            s: s_acc + corner * (t - t0),
                        });
                    }
                    s_acc += 0.5 * PI * corner;
                }
            }
            DomainKind::Epigraph { half_width, top, .. } => {
                let w = half_width;
                let mut y1 = -w;
                while y1 < w {
                    let (g, dg) = self.graph(y1);
                    let l = dg.hypot(1.0);
                    out.push(BoundarySample { pos: [y1, g], normal: [dg / l, -1.0 / l], s: s_acc });
                    let step = (spacing / l).min(w - y1);
                    s_acc += step * l;
                    y1 += step.max(1e-12);
                }
                let gw = self.graph(w).0;
                push_segment(&mut out, &mut s_acc, spacing, [w, gw], [w, top], [1.0, 0.0]);
                push_segment(&mut out, &mut s_acc, spacing, [w, top], [-w, top], [0.0, 1.0]);
                push_segment(&mut out, &mut s_acc, spacing, [-w, top], [-w, gw], [-1.0, 0.0]);
            }
        }
        out
    }

    /// Boundary points usable as chart centers: away from corners and rounded corners.
    pub fn analyzable(&self, y: Point, keep_out: f64) -> bool {
        match self.kind {
            DomainKind::Disk { .. } => true,
            DomainKind::RoundedRect { width, height, corner } => {
                let (a, b) = (0.5 * width - corner, 0.5 * height - corner);
                y[0].abs() < a - keep_out || y[1].abs() < b - keep_out
            }
            DomainKind::Epigraph { half_width, top, .. } => {
                let corners = [[half_width, self.graph(half_width).0], [half_width, top], [-half_width, top], [-half_width, self.graph(half_width).0]];
                corners.iter().all(|c| norm([y[0] - c[0], y[1] - c[1]]) > keep_out)
            }
        }
    }

    /// Hölder exponent of the boundary normal used for chart moduli.
    pub fn chart_exponent(&self) -> f64 {
        match self.kind {
            DomainKind::Epigraph { exponent, .. } => exponent,
            _ => 1.0,
        }
    }

    /// Project a point near the boundary onto it along the level gradient.
    pub fn project_to_boundary(&self, y: Point) -> Point {
        let mut p = y;
        for _ in 0..50 {
            let f = self.level(p);
            let g = self.level_gradient(p);
            let gg = dot(g, g).max(1e-300);
            p = [p[0] - f * g[0] / gg, p[1] - f * g[1] / gg];
            if f.abs() < 1e-14 {
                break;
            }
        }
        p
    }

    /// Outward unit normal at a boundary point.
    pub fn normal(&self, y: Point) -> Point {
        let g = self.level_gradient(y);
        let n = norm(g);
        [g[0] / n, g[1] / n]
    }
}

/// The computational grid: nodes `origin + (i h, j h)`, active where the domain contains them.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainSpec {
    pub domain: Domain,
    pub h: f64,
    pub origin: Point,
    pub nx: usize,
    pub ny: usize,
    pub mask: Vec<bool>,
    pub boundary: Vec<BoundarySample>,
}

impl DomainSpec {
    pub fn new(domain: Domain, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return invalid("grid spacing must be positive");
        }
        let (lo, hi) = domain.bbox();
        let origin = [lo[0] - h, lo[1] - h];
        let nx = ((hi[0] - lo[0]) / h).ceil() as usize + 3;
        let ny = ((hi[1] - lo[1]) / h).ceil() as usize + 3;
        let mut mask = vec![false; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                mask[j * nx + i] = domain.contains([origin[0] + i as f64 * h, origin[1] + j as f64 * h]);
            }
        }
        let boundary = domain.boundary_polyline(h);
        let spec = DomainSpec { domain, h, origin, nx, ny, mask, boundary };
        if spec.active_count() == 0 {
            return invalid("grid has no interior nodes");
        }
        if spec.mask_components() != 1 {
            return invalid("domain mask is not connected at this resolution");
        }
        Ok(spec)
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn coords(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    pub fn node(&self, k: usize) -> Point {
        let (i, j) = self.coords(k);
        [self.origin[0] + i as f64 * self.h, self.origin[1] + j as f64 * self.h]
    }

    pub fn active_count(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }

    /// Neighbors of node `k` in the order +x, -x, +y, -y (None outside the array).
    pub fn neighbors(&self, k: usize) -> [Option<usize>; 4] {
        let (i, j) = self.coords(k);
        [
            (i + 1 < self.nx).then(|| k + 1),
            (i > 0).then(|| k - 1),
            (j + 1 < self.ny).then(|| k + self.nx),
            (j > 0).then(|| k - self.nx),
        ]
    }

    /// Fraction `θ ∈ (0, 1]` of the segment from node `p` to node `q` that lies inside the domain.
    pub fn cut_fraction(&self, p: usize, q: usize) -> f64 {
        let (a, b) = (self.node(p), self.node(q));
        let f = |t: f64| self.domain.level([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        let (mut lo, mut hi) = (0.0, 1.0);
        if f(hi) < 0.0 {
            return 1.0;
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn mask_components(&self) -> usize {
        let mut seen = vec![false; self.mask.len()];
        let mut count = 0;
        for start in 0..self.mask.len() {
            if !self.mask[start] || seen[start] {
                continue;
            }
            count += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(k) = stack.pop() {
                for q in self.neighbors(k).into_iter().flatten() {
                    if self.mask[q] && !seen[q] {
                        seen[q] = true;
                        stack.push(q);
                    }
                }
            }
        }
        count
    }

    /// CSV lines `x,y,nx,ny` of the boundary polyline.
    pub fn boundary_csv(&self) -> String {
        let mut s = String::from("x,y,nx,ny\n");
        for b in &self.boundary {
            s.push_str(&format!("{},{},{},{}\n", b.pos[0], b.pos[1], b.normal[0], b.normal[1]));
        }
        s
    }
}

/// How the local graph `φ` of a chart is evaluated.
#[derive(Clone, Debug, PartialEq)]
pub enum ChartGraph {
    /// `φ ≡ 0`
    Flat,
    /// Root of the domain level function along the inward normal.
    Level(Domain),
}

/// Local description of the boundary near `x₀`: `D ∩ B = {Q x + x₀ : x₂ > φ(x₁)}`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryChart {
    pub x0: Point,
    /// Columns are the tangent and the inward normal.
    pub q: [[f64; 2]; 2],
    pub radius: f64,
    pub sigma: Modulus,
    pub graph: ChartGraph,
}

/// `C^∞` cutoff equal to 1 on `[0, R/2]`, 0 on `[R, ∞)`, with `|η'| ≤ 4/R`.
pub fn cutoff(t: f64, r: f64) -> (f64, f64) {
    let f = |s: f64| if s > 0.0 { (-1.0 / s).exp() } else { 0.0 };
    let df = |s: f64| if s > 0.0 { (-1.0 / s).exp() / (s * s) } else { 0.0 };
    let l = 0.5 * r;
    let x = (t - l) / l;
    if x <= 0.0 {
        return (1.0, 0.0);
    }
    if x >= 1.0 {
        return (0.0, 0.0);
    }
    let (a, b) = (f(1.0 - x), f(x));
    let (da, db) = (-df(1.0 - x), df(x));
    let eta = a / (a + b);
    let deta = (da * (a + b) - a * (da + db)) / ((a + b) * (a + b));
    (eta, deta / l)
}

impl BoundaryChart {
    /// Flat chart at the origin with inward normal `e₂` and an arbitrary modulus.
    pub fn flat(sigma: Modulus, radius: f64) -> Result<Self> {
        Self::check_sigma(&sigma, radius)?;
        Ok(BoundaryChart { x0: [0.0, 0.0], q: [[1.0, 0.0], [0.0, 1.0]], radius, sigma, graph: ChartGraph::Flat })
    }

    fn check_sigma(sigma: &Modulus, radius: f64) -> Result<()> {
        if !sigma.is_smoothed() {
            return Err(Error::NotSmoothed);
        }
        if !(radius > 0.0) {
            return invalid("chart radius must be positive");
        }
        Ok(())
    }

    /// Chart of `domain` at the boundary point nearest `y`, with modulus fitted on `(-radius, radius)`.
    pub fn at(domain: &Domain, y: Point, radius: f64) -> Result<Self> {
        let x0 = domain.project_to_boundary(y);
        let nu = domain.normal(x0);
        let n_in = [-nu[0], -nu[1]];
        let tau = [n_in[1], -n_in[0]];
        let mut chart = BoundaryChart {
            x0,
            q: [tau, n_in],
            radius,
            sigma: Modulus::zero(2.0 * radius),
            graph: ChartGraph::Level(domain.clone()),
        };
        let e = domain.chart_exponent();
        let n = 401;
        let s: Vec<f64> = (0..n).map(|k| -radius + 2.0 * radius * k as f64 / (n - 1) as f64).collect();
        let mut d = Vec::with_capacity(n);
        for &si in &s {
            d.push(chart.phi_prime(si)?);
        }
        let mut c: f64 = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                c = c.max((d[i] - d[j]).abs() / (s[j] - s[i]).powf(e));
            }
        }
        chart.sigma = if c < 1e-13 { Modulus::zero(2.0 * radius) } else { Modulus::power(c * (1.0 + 1e-9), e, 2.0 * radius)? };
        Ok(chart)
    }

    /// Global point of local coordinates.
    pub fn to_global(&self, x: Point) -> Point {
        let [t, n] = self.q;
        [self.x0[0] + x[0] * t[0] + x[1] * n[0], self.x0[1] + x[0] * t[1] + x[1] * n[1]]
    }

    pub fn to_local(&self, y: Point) -> Point {
        let d = [y[0] - self.x0[0], y[1] - self.x0[1]];
        [dot(d, self.q[0]), dot(d, self.q[1])]
    }

    /// Rotate a local vector to global coordinates.
    pub fn rotate(&self, v: Point) -> Point {
        let [t, n] = self.q;
        [v[0] * t[0] + v[1] * n[0], v[0] * t[1] + v[1] * n[1]]
    }

    pub fn phi(&self, s: f64) -> Result<f64> {
        match &self.graph {
            ChartGraph::Flat => Ok(0.0),
            ChartGraph::Level(dom) => {
                let f = |p: f64| dom.level(self.to_global([s, p]));
                let l = 2.0 * s.abs() + 1e-12;
                let (mut lo, mut hi) = (-l, l);
                if !(f(lo) > 0.0 && f(hi) < 0.0) {
                    return Err(Error::Hypothesis(format!("boundary is not a graph over the tangent at s = {s}")));
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if f(mid) > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo < 1e-15 * (1.0 + l) {
                        break;
                    }
                }
                Ok(0.5 * (lo + hi))
            }
        }
    }

    pub fn phi_prime(&self, s: f64) -> Result<f64> {
        match &self.graph {
            ChartGraph::Flat => Ok(0.0),
            ChartGraph::Level(dom) => {
                let p = self.phi(s)?;
                let g = dom.level_gradient(self.to_global([s, p]));
                Ok(-dot(g, self.q[0]) / dot(g, self.q[1]))
            }
        }
    }

    /// `g(ρ) = 3η(ρ)ρσ(ρ)` and `g'(ρ)`.
    fn lift(&self, rho: f64) -> (f64, f64) {
        let (eta, deta) = cutoff(rho, self.radius);
        if eta == 0.0 {
            return (0.0, 0.0);
        }
        let s = self.sigma.value(rho);
        let alpha = 3.0 * (s + rho * self.sigma.derivative(rho));
        (3.0 * eta * rho * s, 3.0 * deta * rho * s + eta * alpha)
    }

    /// `Ψ(x) = (x₁, x₂ + 3η(|x|)|x|σ(|x|))` in local coordinates.
    pub fn psi_local(&self, x: Point) -> Point {
        [x[0], x[1] + self.lift(norm(x)).0]
    }

    /// `Ψ_{x₀}(x) = QΨ(x) + x₀`.
    pub fn psi(&self, x: Point) -> Point {
        self.to_global(self.psi_local(x))
    }

    /// Newton inverse of `Ψ_{x₀}`.
    pub fn psi_inverse(&self, y: Point) -> Result<Point> {
        let z = self.to_local(y);
        let x1 = z[0];
        let mut x2 = z[1];
        for _ in 0..100 {
            let rho = x1.hypot(x2);
            let (g, dg) = self.lift(rho);
            let f = x2 + g - z[1];
            let df = if rho > 0.0 { 1.0 + dg * x2 / rho } else { 1.0 };
            if df <= 0.0 {
                return Err(Error::Hypothesis("Ψ is not invertible here".into()));
            }
            let step = f / df;
            x2 -= step;
            if step.abs() <= 4.0 * f64::EPSILON * (1.0 + x2.abs()) {
                return Ok([x1, x2]);
            }
        }
        let rho = x1.hypot(x2);
        if (x2 + self.lift(rho).0 - z[1]).abs() <= 1e-13 * (1.0 + z[1].abs()) {
            return Ok([x1, x2]);
        }
        Err(Error::Hypothesis("Newton inverse of Ψ did not converge".into()))
    }

    /// `sup |det DΨ - 1|`, sampled on `n` radii and 64 angles inside `B_radius`.
    pub fn det_deviation(&self, n: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 1..=n {
            let rho = self.radius * i as f64 / n as f64;
            for k in 0..64 {
                let t = 2.0 * PI * k as f64 / 64.0;
                worst = worst.max((self.det([rho * t.cos(), rho * t.sin()]) - 1.0).abs());
            }
        }
        worst
    }

    /// Shrink the chart radius by factors of 2/3 until `|det DΨ - 1| ≤ 1/2`; returns the new radius.
    pub fn shrink_to_safe(&mut self) -> Result<f64> {
        for _ in 0..60 {
            if self.det_deviation(64) <= 0.5 {
                return Ok(self.radius);
            }
            self.radius *= 2.0 / 3.0;
        }
        Err(Error::Hypothesis("no chart radius keeps det DΨ within 1/2 of 1".into()))
    }

    /// `a(x) = g'(|x|)/|x|`, so that `DΨ = I + e₂ ⊗ a x` (row form).
    fn a_factor(&self, x: Point) -> f64 {
        let rho = norm(x);
        if rho == 0.0 {
            0.0
        } else {
            self.lift(rho).1 / rho
        }
    }

    /// Jacobian of `Ψ` in local coordinates, rows are components.
    pub fn jacobian_local(&self, x: Point) -> [[f64; 2]; 2] {
        let a = self.a_factor(x);
        [[1.0, 0.0], [a * x[0], 1.0 + a * x[1]]]
    }

    pub fn det(&self, x: Point) -> f64 {
        1.0 + self.a_factor(x) * x[1]
    }

    pub fn coefficients(&self) -> CoefficientField<'_> {
        CoefficientField { chart: self }
    }

    /// Membership in the transformed region: `x₂ > φ(x₁) - 3|x|σ(|x|)`.
    pub fn in_transformed(&self, x: Point) -> Result<bool> {
        Ok(x[1] > self.phi(x[0])? - 3.0 * norm(x) * self.sigma.value(norm(x)))
    }

    /// Margins of the graph estimates `|φ(s)| ≤ |s|σ(|s|)` and `|sφ' - φ| ≤ 2|s|σ(|s|)`.
    pub fn graph_margins(&self, samples: usize) -> Result<(f64, f64)> {
        let (mut m1, mut m2) = (f64::INFINITY, f64::INFINITY);
        for k in 0..samples {
            let s = -self.radius + 2.0 * self.radius * (k as f64 + 0.5) / samples as f64;
            let sig = s.abs() * self.sigma.value(s.abs());
            let p = self.phi(s)?;
            m1 = m1.min(sig - p.abs());
            m2 = m2.min(2.0 * sig - (s * self.phi_prime(s)? - p).abs());
        }
        Ok((m1, m2))
    }
}

/// Coefficients of the transformed operator at local points.
pub struct CoefficientField<'a> {
    chart: &'a BoundaryChart,
}

impl CoefficientField<'_> {
    /// `A = (DΨ)^{-1}(DΨ)^{-T} det DΨ`, the matrix of the pulled-back Dirichlet energy.
    pub fn a(&self, x: Point) -> [[f64; 2]; 2] {
        let a = self.chart.a_factor(x);
        let j = 1.0 + a * x[1];
        let off = -a * x[0];
        [[j, off], [off, (1.0 + a * a * x[0] * x[0]) / j]]
    }

    pub fn p(&self, x: Point) -> f64 {
        self.chart.det(x)
    }

    pub fn mu(&self, x: Point) -> f64 {
        let r2 = dot(x, x);
        if r2 == 0.0 {
            return 1.0;
        }
        let ax = mat_vec(self.a(x), x);
        dot(ax, x) / r2
    }

    /// `𝛂(x) = A x/|x|`
    pub fn alpha_vec(&self, x: Point) -> Point {
        let r = norm(x);
        if r == 0.0 {
            return [0.0, 0.0];
        }
        let ax = mat_vec(self.a(x), x);
        [ax[0] / r, ax[1] / r]
    }

    /// `β(x) = A x/μ(x)`
    pub fn beta(&self, x: Point) -> Point {
        let ax = mat_vec(self.a(x), x);
        let m = self.mu(x);
        [ax[0] / m, ax[1] / m]
    }

    fn fd_step(x: Point) -> f64 {
        1e-5 * norm(x)
    }

    /// `|∇A_{ij}|` maximized over entries, by central differences.
    pub fn grad_a_norm(&self, x: Point) -> f64 {
        let h = Self::fd_step(x);
        let mut worst: f64 = 0.0;
        for (i, j) in [(0, 0), (0, 1), (1, 1)] {
            let dx = (self.a([x[0] + h, x[1]])[i][j] - self.a([x[0] - h, x[1]])[i][j]) / (2.0 * h);
            let dy = (self.a([x[0], x[1] + h])[i][j] - self.a([x[0], x[1] - h])[i][j]) / (2.0 * h);
            worst = worst.max(dx.hypot(dy));
        }
        worst
    }

    pub fn div_alpha(&self, x: Point) -> f64 {
        let h = Self::fd_step(x);
        (self.alpha_vec([x[0] + h, x[1]])[0] - self.alpha_vec([x[0] - h, x[1]])[0]) / (2.0 * h)
            + (self.alpha_vec([x[0], x[1] + h])[1] - self.alpha_vec([x[0], x[1] - h])[1]) / (2.0 * h)
    }

    pub fn div_beta(&self, x: Point) -> f64 {
        let h = Self::fd_step(x);
        (self.beta([x[0] + h, x[1]])[0] - self.beta([x[0] - h, x[1]])[0]) / (2.0 * h)
            + (self.beta([x[0], x[1] + h])[1] - self.beta([x[0], x[1] - h])[1]) / (2.0 * h)
    }
}

pub fn mat_vec(m: [[f64; 2]; 2], v: Point) -> Point {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

fn op_norm_sym(m: [[f64; 2]; 2]) -> (f64, f64) {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
    (0.5 * tr - disc, 0.5 * tr + disc)
}

/// Measured ratios of the coefficient bounds; `kappa` is the smallest constant covering all.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KappaFit {
    pub a_minus_i: f64,
    pub grad_a: f64,
    pub p_minus_1: f64,
    pub mu_minus_1: f64,
    pub div_alpha: f64,
    pub beta_minus_x: f64,
    pub div_beta: f64,
    pub min_eigen: f64,
    pub max_eigen: f64,
    pub mu_range: (f64, f64),
    pub kappa: f64,
}

/// Fit the coefficient constants on the transformed region inside `B_r`.
pub fn fit_kappa(chart: &BoundaryChart, r: f64, n: usize) -> Result<KappaFit> {
    let c = chart.coefficients();
    let mut f = KappaFit {
        a_minus_i: 0.0,
        grad_a: 0.0,
        p_minus_1: 0.0,
        mu_minus_1: 0.0,
        div_alpha: 0.0,
        beta_minus_x: 0.0,
        div_beta: 0.0,
        min_eigen: f64::INFINITY,
        max_eigen: 0.0,
        mu_range: (f64::INFINITY, 0.0),
        kappa: 0.0,
    };
    for i in 1..=n {
        let rho = r * i as f64 / n as f64;
        let s = chart.sigma.value(rho);
        for k in 0..=n {
            let t = PI * k as f64 / n as f64;
            let x = [rho * t.cos(), rho * t.sin()];
            if !chart.in_transformed(x)? {
                continue;
            }
            let a = c.a(x);
            let (lo, hi) = op_norm_sym(a);
            f.min_eigen = f.min_eigen.min(lo);
            f.max_eigen = f.max_eigen.max(hi);
            let mu = c.mu(x);
            f.mu_range = (f.mu_range.0.min(mu), f.mu_range.1.max(mu));
            if s > 0.0 {
                let d = [[a[0][0] - 1.0, a[0][1]], [a[1][0], a[1][1] - 1.0]];
                let (l2, h2) = op_norm_sym(d);
                f.a_minus_i = f.a_minus_i.max(l2.abs().max(h2.abs()) / s);
                f.grad_a = f.grad_a.max(c.grad_a_norm(x) * rho / s);
                f.p_minus_1 = f.p_minus_1.max((c.p(x) - 1.0).abs() / s);
                f.mu_minus_1 = f.mu_minus_1.max((mu - 1.0).abs() / s);
                f.div_alpha = f.div_alpha.max((c.div_alpha(x) - mu / rho).abs() * rho / s);
                let b = c.beta(x);
                f.beta_minus_x = f.beta_minus_x.max(norm([b[0] - x[0], b[1] - x[1]]) / (rho * s));
                f.div_beta = f.div_beta.max((c.div_beta(x) - 2.0).abs() / s);
            }
        }
    }
    f.kappa = [
        f.a_minus_i,
        f.grad_a,
        f.p_minus_1,
        f.mu_minus_1,
        f.div_alpha,
        f.beta_minus_x,
        f.div_beta,
        1.0 / f.min_eigen,
        f.max_eigen,
    ]
    .into_iter()
    .fold(0.0, f64::max);
    Ok(f)
}

/// Point on the transformed boundary `x₂ = φ(x₁) - 3|x|σ(|x|)` above `x₁ = s`.
pub fn gamma_point(chart: &BoundaryChart, s: f64) -> Result<Point> {
    let p = chart.phi(s)?;
    let mut x2 = p;
    for _ in 0..100 {
        let rho = s.hypot(x2);
        let sig = chart.sigma.value(rho);
        let f = x2 - p + 3.0 * rho * sig;
        let df = if rho > 0.0 { 1.0 + 3.0 * (sig + rho * chart.sigma.derivative(rho)) * x2 / rho } else { 1.0 };
        let step = f / df;
        x2 -= step;
        if step.abs() < 1e-16 * (1.0 + x2.abs()) {
            break;
        }
    }
    Ok([s, x2])
}

/// Outward unit normal of the transformed region at a point of its boundary.
pub fn gamma_normal(chart: &BoundaryChart, x: Point) -> Result<Point> {
    let rho = norm(x);
    let alpha = if rho > 0.0 {
        3.0 * (chart.sigma.value(rho) + rho * chart.sigma.derivative(rho))
    } else {
        0.0
    };
    let (ax, ay) = if rho > 0.0 { (alpha * x[0] / rho, alpha * x[1] / rho) } else { (0.0, 0.0) };
    let g = [-chart.phi_prime(x[0])? + ax, 1.0 + ay];
    let n = norm(g);
    Ok([-g[0] / n, -g[1] / n])
}

/// Minima over sampled `Γ_r` of `A x·ν - |x|σ(|x|)` and `x·ν - ½|x|σ(|x|)`.
pub fn check_starshaped(chart: &BoundaryChart, r: f64) -> Result<(f64, f64)> {
    if r > chart.radius / 2.0 * (1.0 + 1e-12) {
        return Err(Error::OutOfRange { what: "starshaped radius", value: r, lo: 0.0, hi: chart.radius / 2.0 });
    }
    let c = chart.coefficients();
    let (mut m1, mut m2) = (f64::INFINITY, f64::INFINITY);
    let n = 400;
    let mut count = 0;
    for k in 0..n {
        let s = -r + 2.0 * r * (k as f64 + 0.5) / n as f64;
        let x = gamma_point(chart, s)?;
        let rho = norm(x);
        if rho >= r || rho == 0.0 {
            continue;
        }
        count += 1;
        let nu = gamma_normal(chart, x)?;
        let sig = rho * chart.sigma.value(rho);
        m1 = m1.min(dot(mat_vec(c.a(x), x), nu) - sig);
        m2 = m2.min(dot(x, nu) - 0.5 * sig);
    }
    if count == 0 {
        return invalid("no samples of the transformed boundary inside B_r");
    }
    Ok((m1, m2))
}

/// Quadrature nodes on `𝒪_r` (area) and `S_r` (arc).
#[derive(Clone, Debug, PartialEq)]
pub struct TransformedRegion {
    pub r: f64,
    pub volume: Vec<(Point, f64)>,
    pub surface: Vec<(Point, f64)>,
}

impl TransformedRegion {
    pub fn area(&self) -> f64 {
        self.volume.iter().map(|v| v.1).sum()
    }

    pub fn arc_length(&self) -> f64 {
        self.surface.iter().map(|v| v.1).sum()
    }
}

/// Composite 4-point Gauss-Legendre rule with about `n` nodes on `[a, b]`.
pub fn composite_gauss(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let panels = n.div_ceil(4).max(1);
    let (mut x, mut w) = (Vec::with_capacity(4 * panels), Vec::with_capacity(4 * panels));
    for k in 0..panels {
        let lo = a + (b - a) * k as f64 / panels as f64;
        let hi = a + (b - a) * (k + 1) as f64 / panels as f64;
        let (xs, ws) = gauss_legendre_on(4, lo, hi);
        x.extend(xs);
        w.extend(ws);
    }
    (x, w)
}

/// Angular interval `(θ_lo, θ_hi)` of `S_ρ`.
pub fn arc_interval(chart: &BoundaryChart, rho: f64) -> Result<(f64, f64)> {
    let g = |t: f64| -> Result<f64> {
        let x = [rho * t.cos(), rho * t.sin()];
        Ok(x[1] - chart.phi(x[0])? + 3.0 * rho * chart.sigma.value(rho))
    };
    let bisect = |mut neg: f64, mut pos: f64| -> Result<f64> {
        if !(g(neg)? < 0.0 && g(pos)? > 0.0) {
            return Err(Error::Hypothesis(format!("S_r is not a single arc at r = {rho}")));
        }
        for _ in 0..80 {
            let mid = 0.5 * (neg + pos);
            if g(mid)? < 0.0 {
                neg = mid;
            } else {
                pos = mid;
            }
        }
        Ok(0.5 * (neg + pos))
    };
    Ok((bisect(-0.5 * PI, 0.5 * PI)?, bisect(1.5 * PI, 0.5 * PI)?))
}

/// Polar sampling of `𝒪_r` and `S_r` with `n_r` radial and `n_θ` angular nodes.
pub fn transformed_region(chart: &BoundaryChart, r: f64, n_r: usize, n_theta: usize) -> Result<TransformedRegion> {
    if n_r < 8 || n_theta < 8 {
        return invalid("transformed region needs at least 8 nodes per direction");
    }
    if r > chart.radius / 2.0 * (1.0 + 1e-12) {
        return Err(Error::OutOfRange { what: "transformed radius", value: r, lo: 0.0, hi: chart.radius / 2.0 });
    }
    let (rx, rw) = composite_gauss(n_r, 0.0, r);
    let mut volume = Vec::with_capacity(rx.len() * n_theta);
    for (rho, wr) in rx.iter().zip(&rw) {
        let (lo, hi) = arc_interval(chart, *rho)?;
        let (tx, tw) = composite_gauss(n_theta, lo, hi);
        for (t, wt) in tx.iter().zip(&tw) {
            volume.push(([rho * t.cos(), rho * t.sin()], wr * wt * rho));
        }
    }
    let (lo, hi) = arc_interval(chart, r)?;
    let (tx, tw) = composite_gauss(n_theta, lo, hi);
    let surface = tx.iter().zip(&tw).map(|(t, wt)| ([r * t.cos(), r * t.sin()], wt * r)).collect();
    Ok(TransformedRegion { r, volume, surface })
}

/// First radius (on a uniform grid of `n` radii up to `radius/2`) where each chart
/// property fails, or `None` if it holds throughout.
#[derive(Clone, Debug, PartialEq)]
pub struct ChartValidity {
    pub graph_bounds: Option<f64>,
    pub det_within_half: Option<f64>,
    pub mu_range: Option<f64>,
    pub starshaped: Option<f64>,
}

pub fn chart_validity(chart: &BoundaryChart, n: usize) -> Result<ChartValidity> {
    let mut v = ChartValidity { graph_bounds: None, det_within_half: None, mu_range: None, starshaped: None };
    let c = chart.coefficients();
    for i in 1..=n {
        let r = 0.5 * chart.radius * i as f64 / n as f64;
        let sig = r * chart.sigma.value(r);
        if v.graph_bounds.is_none() {
            let p = chart.phi(r)?.abs().max(chart.phi(-r)?.abs());
            if p > sig * (1.0 + 1e-9) + 1e-15 {
                v.graph_bounds = Some(r);
            }
        }
        let mut det_ok = true;
        let mut mu_ok = true;
        for k in 0..64 {
            let t = 2.0 * PI * k as f64 / 64.0;
            let x = [r * t.cos(), r * t.sin()];
            if (chart.det(x) - 1.0).abs() > 0.5 {
                det_ok = false;
            }
            if chart.in_transformed(x)? {
                let m = c.mu(x);
                if !(0.5..=1.5).contains(&m) {
                    mu_ok = false;
                }
            }
        }
        if !det_ok && v.det_within_half.is_none() {
            v.det_within_half = Some(r);
        }
        if !mu_ok && v.mu_range.is_none() {
            v.mu_range = Some(r);
        }
        if v.starshaped.is_none() && check_starshaped(chart, r)?.0 < -1e-12 {
            v.starshaped = Some(r);
        }
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    fn linear(c: f64) -> Modulus {
        Modulus::power(c, 1.0, 1.0).unwrap()
    }

    #[test]
    fn cutoff_profile() {
        let r = 0.4;
        assert_eq!(cutoff(0.1, r), (1.0, 0.0));
        assert_eq!(cutoff(0.5, r), (0.0, 0.0));
        let mut worst: f64 = 0.0;
        for k in 0..=2000 {
            let t = 0.2 + 0.2 * k as f64 / 2000.0;
            let (e, de) = cutoff(t, r);
            assert!((0.0..=1.0).contains(&e));
            worst = worst.max(de.abs());
            let fd = (cutoff(t + 1e-7, r).0 - cutoff(t - 1e-7, r).0) / 2e-7;
            assert!((fd - de).abs() < 1e-5 * (1.0 + de.abs()));
        }
        assert!(worst <= 4.0 / r * (1.0 + 1e-9), "{worst}");
    }

    #[test]
    fn psi_examples() {
        let ch = BoundaryChart::flat(linear(1.0), 1.0).unwrap();
        assert_eq!(ch.psi([0.0, 0.0]), [0.0, 0.0]);
        let y = ch.psi([0.0, 0.1]);
        assert!(close(y[1], 0.13, 1e-14) && y[0] == 0.0);
        assert_eq!(ch.psi([0.8, 0.7]), [0.8, 0.7]);
        let d = Domain::disk(1.0).unwrap();
        let ch = BoundaryChart::at(&d, [0.0, 1.0], 0.3).unwrap();
        let y = ch.psi([0.0, 0.0]);
        assert!(close(y[0], 0.0, 1e-14) && close(y[1], 1.0, 1e-14));
    }

    #[test]
    fn psi_inverse_roundtrip() {
        let d = Domain::disk(1.0).unwrap();
        let ch = BoundaryChart::at(&d, [0.6, 0.8], 0.025).unwrap();
        for k in 0..200 {
            let t = k as f64 * 0.7;
            let rho = 0.03 * ((k % 17) as f64 / 17.0);
            let x = [rho * t.cos(), rho * t.sin()];
            let back = ch.psi_inverse(ch.psi(x)).unwrap();
            assert!(norm([back[0] - x[0], back[1] - x[1]]) < 1e-10);
        }
    }

    #[test]
    fn shrink_restores_invertibility() {
        let d = Domain::disk(1.0).unwrap();
        let mut ch = BoundaryChart::at(&d, [0.6, 0.8], 0.3).unwrap();
        assert!(ch.det_deviation(64) > 0.5);
        let r = ch.shrink_to_safe().unwrap();
        assert!(r < 0.3 && r > 0.01 && ch.det_deviation(64) <= 0.5);
    }

    #[test]
    fn det_within_half_for_small_modulus() {
        let ch = BoundaryChart::flat(linear(0.05), 0.5).unwrap();
        for k in 0..400 {
            let t = k as f64 * 0.37;
            let rho = 0.6 * (k as f64 / 400.0);
            assert!((ch.det([rho * t.cos(), rho * t.sin()]) - 1.0).abs() <= 0.5);
        }
    }

    #[test]
    fn coefficient_examples() {
        let ch = BoundaryChart::flat(linear(1.0), 1.0).unwrap();
        let c = ch.coefficients();
        assert_eq!(c.a([0.0, 0.0]), [[1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(c.p([0.0, 0.0]), 1.0);
        assert_eq!(c.mu([0.0, 0.0]), 1.0);
        let t = 0.01;
        let a = c.a([0.0, t]);
        assert!(close(c.p([0.0, t]), 1.0 + 6.0 * t, 1e-14));
        assert!(close(a[0][0], 1.0 + 6.0 * t, 1e-14));
        assert_eq!(a[0][1], 0.0);
        assert!(close(a[1][1], 1.0 / (1.0 + 6.0 * t), 1e-14));
        assert!(close(c.a([0.02, 0.0])[0][0], 1.0, 1e-15));
    }

    #[test]
    fn coefficients_pull_back_the_energy() {
        // A = J⁻¹J⁻ᵀ det J with J the row Jacobian; check against a generic gradient
        let d = Domain::disk(1.0).unwrap();
        let ch = BoundaryChart::at(&d, [0.0, -1.0], 0.3).unwrap();
        let c = ch.coefficients();
        let x = [0.03, 0.05];
        let j = ch.jacobian_local(x);
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        let gu = [0.3, -1.2];
        // ∇v = Jᵀ ∇u; |∇u|² det = A∇v·∇v
        let gv = [j[0][0] * gu[0] + j[1][0] * gu[1], j[0][1] * gu[0] + j[1][1] * gu[1]];
        let lhs = dot(gu, gu) * det;
        let rhs = dot(mat_vec(c.a(x), gv), gv);
        assert!(close(lhs, rhs, 1e-13));
        assert!(close(det, c.p(x), 1e-14));
    }

    #[test]
    fn disk_chart_geometry() {
        let d = Domain::disk(1.0).unwrap();
        let ch = BoundaryChart::at(&d, [1.0, 0.0], 0.4).unwrap();
        assert!(close(ch.phi(0.3).unwrap(), 1.0 - (1.0 - 0.09f64).sqrt(), 1e-12));
        assert!(close(ch.phi_prime(0.3).unwrap(), 0.3 / (1.0 - 0.09f64).sqrt(), 1e-10));
        let c = match ch.sigma.kind() {
            crate::moduli::ModulusKind::Power { coef, .. } => *coef,
            _ => panic!(),
        };
        assert!(c >= 1.0 && c <= (1.0 - 0.16f64).powf(-1.5) * 1.001, "{c}");
        let (m1, m2) = ch.graph_margins(200).unwrap();
        assert!(m1 >= 0.0 && m2 >= 0.0);
        let (s1, _) = check_starshaped(&ch, 0.1).unwrap();
        assert!(s1 >= 0.0);
    }

    #[test]
    fn starshaped_examples() {
        let ch = BoundaryChart::flat(Modulus::zero(1.0), 1.0).unwrap();
        let (a, b) = check_starshaped(&ch, 0.2).unwrap();
        assert!(a.abs() < 1e-15 && b.abs() < 1e-15);
        let ch = BoundaryChart::flat(linear(1.0), 0.4).unwrap();
        let (a, b) = check_starshaped(&ch, 0.1).unwrap();
        assert!(a > 0.0);
        // the weaker-looking plain starshapedness fails for the transformed flat graph
        assert!(b < 0.0);
    }

    #[test]
    fn transformed_region_examples() {
        let ch = BoundaryChart::flat(Modulus::zero(1.0), 1.0).unwrap();
        let reg = transformed_region(&ch, 0.3, 32, 64).unwrap();
        assert!(close(reg.arc_length(), PI * 0.3, 1e-12));
        assert!(close(reg.area(), 0.5 * PI * 0.09, 1e-12));
        let ch = BoundaryChart::flat(linear(1e-3), 1.0).unwrap();
        let reg = transformed_region(&ch, 0.1, 32, 64).unwrap();
        assert!((reg.area() / (0.5 * PI * 0.01) - 1.0).abs() < 0.01);
        for (x, _) in &reg.volume {
            assert!(ch.in_transformed(*x).unwrap());
        }
        assert!(transformed_region(&ch, 0.1, 4, 64).is_err());
    }

    #[test]
    fn kappa_fit_bounded() {
        let d = Domain::disk(1.0).unwrap();
        let ch = BoundaryChart::at(&d, [0.0, 1.0], 0.3).unwrap();
        let k1 = fit_kappa(&ch, 0.05, 24).unwrap();
        let k2 = fit_kappa(&ch, 0.15, 24).unwrap();
        assert!(k1.kappa.is_finite() && k1.kappa < 50.0, "{k1:?}");
        assert!(k2.kappa < 50.0, "{k2:?}");
        assert!(k1.mu_range.0 >= 0.5 && k1.mu_range.1 <= 1.5);
        assert!(k1.min_eigen > 0.0);
    }

    #[test]
    fn domains_and_grids() {
        let d = Domain::disk(1.0).unwrap();
        let g = DomainSpec::new(d.clone(), 1.0 / 32.0).unwrap();
        let area = g.active_count() as f64 * g.h * g.h;
        assert!((area - PI).abs() < 0.05);
        for b in &g.boundary {
            assert!(close(norm(b.normal), 1.0, 1e-14));
            assert!(d.level(b.pos).abs() < 1e-12);
        }
        let r = Domain::rounded_rect(2.0, 1.0, 0.1).unwrap();
        let g = DomainSpec::new(r.clone(), 1.0 / 32.0).unwrap();
        assert!(((g.active_count() as f64) * g.h * g.h - r.area()).abs() < 0.1);
        for b in &g.boundary {
            assert!(r.level(b.pos).abs() < 1e-12, "{b:?}");
        }
        assert!(r.analyzable([0.0, -0.5], 0.2));
        assert!(!r.analyzable([0.95, -0.5], 0.2));
        let e = Domain::epigraph(1.0, 0.5, 1.0, 1.5).unwrap();
        let g = DomainSpec::new(e.clone(), 1.0 / 32.0).unwrap();
        assert!(((g.active_count() as f64) * g.h * g.h - e.area()).abs() < 0.12);
        assert!(g.boundary_csv().starts_with("x,y,nx,ny\n"));
    }

    #[test]
    fn epigraph_chart_modulus() {
        let e = Domain::epigraph(1.0, 0.5, 1.0, 1.5).unwrap();
        let ch = BoundaryChart::at(&e, [0.0, 0.0], 0.2).unwrap();
        match ch.sigma.kind() {
            crate::moduli::ModulusKind::Power { coef, exponent } => {
                assert_eq!(*exponent, 0.5);
                assert!(close(*coef, 1.5 * 2f64.sqrt(), 0.02), "{coef}");
            }
            _ => panic!(),
        }
        assert!(close(ch.phi(0.04).unwrap(), 0.04f64.powf(1.5), 1e-10));
    }

    #[test]
    fn cut_fraction_on_disk() {
        let g = DomainSpec::new(Domain::disk(1.0).unwrap(), 0.1).unwrap();
        // node at (0.95, 0) going +x leaves the disk at x = 1
        let k = (0..g.mask.len()).find(|&k| {
            let p = g.node(k);
            (p[0] - 0.9).abs() < 1e-9 && p[1].abs() < 1e-9
        });
        if let Some(k) = k {
            let q = g.neighbors(k)[0].unwrap();
            assert!(close(g.cut_fraction(k, q), 1.0, 1e-9) || g.mask[q]);
        }
    }

    proptest! {
        #[test]
        fn a_symmetric_positive(x in -0.1f64..0.1, y in -0.1f64..0.1, c in 0.0f64..1.0) {
            let ch = BoundaryChart::flat(linear(c), 0.5).unwrap();
            let a = ch.coefficients().a([x, y]);
            prop_assert_eq!(a[0][1], a[1][0]);
            let (lo, _) = op_norm_sym(a);
            prop_assert!(lo > 0.0);
        }

        #[test]
        fn psi_identity_outside(r in 0.5f64..3.0, t in 0.0f64..6.3) {
            let ch = BoundaryChart::flat(linear(0.5), 0.5).unwrap();
            let x = [r * t.cos(), r * t.sin()];
            prop_assert_eq!(ch.psi(x), x);
        }
    }
}
