//! Pointwise evaluation of segregated densities: solver output or analytic profiles.

use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::geometry::{Domain, DomainSpec, Point};
use crate::solver::{domain_cuts, DensityField};

/// Read-only access to `N` nonnegative components, their gradients and eigenvalues.
pub trait Field: Sync {
    fn n(&self) -> usize;
    fn value(&self, i: usize, p: Point) -> f64;
    fn gradient(&self, i: usize, p: Point) -> Point;
    fn lambda(&self, i: usize) -> f64;
    /// Whether `p` lies in the domain carrying the field.
    fn inside(&self, p: Point) -> bool;
    /// Grid spacing for discrete fields.
    fn resolution(&self) -> Option<f64> {
        None
    }
    /// Whether the closed square of half-side `radius` around `center` is covered by the data.
    fn covers(&self, _center: Point, _radius: f64) -> bool {
        true
    }
}

/// Bilinear evaluation of a solved field with each component extended across its free
/// boundary by two ghost layers, so that interpolation near an interface sees a signed
/// function whose zero sits at the solver's crossing.
#[derive(Clone, Debug)]
pub struct GridField {
    pub spec: DomainSpec,
    /// Ghost-extended nodal values, one array per component.
    pub extended: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
}

const GHOST_LAYERS: usize = 2;

impl GridField {
    pub fn new(field: &DensityField) -> Self {
        let spec = &field.spec;
        let cuts = domain_cuts(spec);
        let total = spec.mask.len();
        let extended = (0..field.n())
            .map(|i| {
                let u = &field.components[i];
                let mut known: Vec<bool> = (0..total).map(|k| field.owner[k] == Some(i)).collect();
                let mut ext: Vec<f64> = (0..total).map(|k| if known[k] { u[k] } else { 0.0 }).collect();
                for layer in 0..GHOST_LAYERS {
                    let mut updates = Vec::new();
                    for r in 0..total {
                        if known[r] {
                            continue;
                        }
                        let nb = spec.neighbors(r);
                        let (mut sum, mut count) = (0.0, 0);
                        for d in 0..4 {
                            let back = d ^ 1;
                            let Some(a) = nb[back] else { continue };
                            if !known[a] {
                                continue;
                            }
                            let b = spec.neighbors(a)[back].filter(|&b| known[b]);
                            if layer > 0 || field.owner[a] != Some(i) {
                                if let Some(b) = b {
                                    sum += 2.0 * ext[a] - ext[b];
                                    count += 1;
                                }
                                continue;
                            }
                            // crossing fraction measured from a toward r
                            let theta = if !spec.mask[r] {
                                cuts[a][d]
                            } else if let Some(t) = field.interfaces.get(a, r) {
                                t
                            } else {
                                1.0
                            };
                            let est = if theta >= 0.5 || b.is_none() {
                                let t = theta.max(0.1);
                                ext[a] * (t - 1.0) / t
                            } else {
                                let slope = ext[b.unwrap()] / (1.0 + theta);
                                -slope * (1.0 - theta)
                            };
                            sum += est;
                            count += 1;
                        }
                        if count > 0 {
                            updates.push((r, sum / count as f64));
                        }
                    }
                    for (r, v) in updates {
                        ext[r] = v;
                        known[r] = true;
                    }
                }
                ext
            })
            .collect();
        GridField { spec: spec.clone(), extended, eigenvalues: field.eigenvalues.clone() }
    }

    fn cell(&self, p: Point) -> Option<(usize, f64, f64)> {
        let s = &self.spec;
        let fx = (p[0] - s.origin[0]) / s.h;
        let fy = (p[1] - s.origin[1]) / s.h;
        if !(fx >= 0.0 && fy >= 0.0) {
            return None;
        }
        let (i0, j0) = ((fx.floor() as usize).min(s.nx - 2), (fy.floor() as usize).min(s.ny - 2));
        if fx > (s.nx - 1) as f64 || fy > (s.ny - 1) as f64 {
            return None;
        }
        Some((s.index(i0, j0), fx - i0 as f64, fy - j0 as f64))
    }

    /// Signed bilinear interpolant of the extended component (no clipping, no domain test).
    pub fn signed(&self, i: usize, p: Point) -> f64 {
        let Some((k, tx, ty)) = self.cell(p) else { return 0.0 };
        let u = &self.extended[i];
        let nx = self.spec.nx;
        (1.0 - tx) * (1.0 - ty) * u[k] + tx * (1.0 - ty) * u[k + 1] + (1.0 - tx) * ty * u[k + nx] + tx * ty * u[k + nx + 1]
    }

    fn signed_gradient(&self, i: usize, p: Point) -> Point {
        let Some((k, tx, ty)) = self.cell(p) else { return [0.0, 0.0] };
        let u = &self.extended[i];
        let nx = self.spec.nx;
        let h = self.spec.h;
        let (a, b, c, d) = (u[k], u[k + 1], u[k + nx], u[k + nx + 1]);
        [((b - a) * (1.0 - ty) + (d - c) * ty) / h, ((c - a) * (1.0 - tx) + (d - b) * tx) / h]
    }
}

impl Field for GridField {
    fn n(&self) -> usize {
        self.extended.len()
    }

    fn value(&self, i: usize, p: Point) -> f64 {
        if !self.spec.domain.contains(p) {
            return 0.0;
        }
        self.signed(i, p).max(0.0)
    }

    fn gradient(&self, i: usize, p: Point) -> Point {
        if self.value(i, p) > 0.0 {
            self.signed_gradient(i, p)
        } else {
            [0.0, 0.0]
        }
    }

    fn lambda(&self, i: usize) -> f64 {
        self.eigenvalues[i]
    }

    fn inside(&self, p: Point) -> bool {
        self.spec.domain.contains(p)
    }

    fn resolution(&self) -> Option<f64> {
        Some(self.spec.h)
    }

    fn covers(&self, c: Point, r: f64) -> bool {
        let s = &self.spec;
        let hi = [s.origin[0] + (s.nx - 1) as f64 * s.h, s.origin[1] + (s.ny - 1) as f64 * s.h];
        c[0] - r >= s.origin[0] && c[1] - r >= s.origin[1] && c[0] + r <= hi[0] && c[1] + r <= hi[1]
    }
}

/// Value and gradient of one analytic component.
pub type Component = Box<dyn Fn(Point) -> (f64, Point) + Send + Sync>;

/// Region carrying an analytic field.
#[derive(Clone, Debug, PartialEq)]
pub enum Region {
    Plane,
    /// `{x : x·ν < 0}` for the outward unit normal `ν`.
    HalfPlane { normal: Point },
    Domain(Domain),
}

impl Region {
    pub fn contains(&self, p: Point) -> bool {
        match self {
            Region::Plane => true,
            Region::HalfPlane { normal } => p[0] * normal[0] + p[1] * normal[1] < 0.0,
            Region::Domain(d) => d.contains(p),
        }
    }
}

/// Analytic segregated field, mostly homogeneous harmonic profiles centered at the origin.
pub struct Synthetic {
    comps: Vec<Component>,
    lambdas: Vec<f64>,
    region: Region,
}

fn unit(v: Point) -> Result<Point> {
    let n = v[0].hypot(v[1]);
    if !(n > 0.0 && n.is_finite()) {
        return invalid("direction must be a nonzero vector");
    }
    Ok([v[0] / n, v[1] / n])
}

/// `r^γ sin(γ(θ − θ₀))` restricted to its positive sector `θ − θ₀ ∈ (jπ/γ, (j+1)π/γ)` (made positive).
fn sector_component(gamma: f64, amplitude: f64, theta0: f64, j: usize) -> Component {
    Box::new(move |p: Point| {
        let r = p[0].hypot(p[1]);
        if r == 0.0 {
            return (0.0, [0.0, 0.0]);
        }
        let t = (p[1].atan2(p[0]) - theta0).rem_euclid(2.0 * PI);
        let width = PI / gamma;
        let lo = j as f64 * width;
        if !(t > lo && t < lo + width) {
            return (0.0, [0.0, 0.0]);
        }
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let s = (gamma * t).sin();
        let c = (gamma * t).cos();
        let rg = r.powf(gamma - 1.0);
        let v = sign * amplitude * rg * r * s;
        // d/dr and (1/r) d/dθ in the rotated polar frame
        let dr = sign * amplitude * gamma * rg * s;
        let dt = sign * amplitude * gamma * rg * c;
        let phi = t + theta0;
        let (sp, cp) = phi.sin_cos();
        (v, [cp * dr - sp * dt, sp * dr + cp * dt])
    })
}

impl Synthetic {
    pub fn new(comps: Vec<Component>, lambdas: Vec<f64>, region: Region) -> Result<Self> {
        if comps.len() != lambdas.len() || comps.is_empty() {
            return invalid("need one eigenvalue per component and at least one component");
        }
        Ok(Synthetic { comps, lambdas, region })
    }

    /// `a(−x·ν)⁺` on the half-plane with outward normal `ν`.
    pub fn wedge(amplitude: f64, normal: Point) -> Result<Self> {
        let nu = unit(normal)?;
        let comp: Component = Box::new(move |p: Point| {
            let s = -(p[0] * nu[0] + p[1] * nu[1]);
            if s > 0.0 {
                (amplitude * s, [-amplitude * nu[0], -amplitude * nu[1]])
            } else {
                (0.0, [0.0, 0.0])
            }
        });
        Self::new(vec![comp], vec![0.0], Region::HalfPlane { normal: nu })
    }

    /// The `k` sectors of `r^k|sin kθ|` in the half-plane with outward normal `ν`, angle measured
    /// from the boundary tangent; one component per sector.
    pub fn half_plane_sectors(k: usize, amplitude: f64, normal: Point) -> Result<Self> {
        if k == 0 {
            return invalid("sector count must be positive");
        }
        let nu = unit(normal)?;
        // tangent τ with (τ, −ν) positively oriented
        let theta0 = nu[0].atan2(-nu[1]);
        let comps = (0..k).map(|j| sector_component(k as f64, amplitude, theta0, j)).collect();
        Self::new(comps, vec![0.0; k], Region::HalfPlane { normal: nu })
    }

    /// The `2γ` sectors of `r^γ|sin γ(θ−θ₀)|` in the plane; `2γ` must be an integer ≥ 2.
    pub fn plane_sectors(gamma: f64, amplitude: f64, theta0: f64) -> Result<Self> {
        let m = 2.0 * gamma;
        if !(m >= 2.0 && (m - m.round()).abs() < 1e-12) {
            return invalid("plane sectors need 2γ to be an integer >= 2");
        }
        let n = m.round() as usize;
        let comps = (0..n).map(|j| sector_component(gamma, amplitude, theta0, j)).collect();
        Self::new(comps, vec![0.0; n], Region::Plane)
    }

    /// `a(x·e)^±(−x·ν)⁺`: the degree-two boundary profile when `e·ν = 0`.
    pub fn boundary_pair(amplitude: f64, normal: Point, e: Point) -> Result<Self> {
        let nu = unit(normal)?;
        let e = unit(e)?;
        let make = |sign: f64| -> Component {
            Box::new(move |p: Point| {
                let s = -(p[0] * nu[0] + p[1] * nu[1]);
                let t = sign * (p[0] * e[0] + p[1] * e[1]);
                if s > 0.0 && t > 0.0 {
                    let a = amplitude;
                    (a * s * t, [a * (t * -nu[0] + s * sign * e[0]), a * (t * -nu[1] + s * sign * e[1])])
                } else {
                    (0.0, [0.0, 0.0])
                }
            })
        };
        Self::new(vec![make(1.0), make(-1.0)], vec![0.0; 2], Region::HalfPlane { normal: nu })
    }

    /// Scale every component by `c`.
    pub fn scaled(self, c: f64) -> Self {
        let comps = self
            .comps
            .into_iter()
            .map(|f| -> Component {
                Box::new(move |p| {
                    let (v, g) = f(p);
                    (c * v, [c * g[0], c * g[1]])
                })
            })
            .collect();
        Synthetic { comps, lambdas: self.lambdas, region: self.region }
    }
}

impl Field for Synthetic {
    fn n(&self) -> usize {
        self.comps.len()
    }

    fn value(&self, i: usize, p: Point) -> f64 {
        if !self.region.contains(p) {
            return 0.0;
        }
        (self.comps[i])(p).0
    }

    fn gradient(&self, i: usize, p: Point) -> Point {
        if !self.region.contains(p) {
            return [0.0, 0.0];
        }
        (self.comps[i])(p).1
    }

    fn lambda(&self, i: usize) -> f64 {
        self.lambdas[i]
    }

    fn inside(&self, p: Point) -> bool {
        self.region.contains(p)
    }
}

/// Sample an analytic field on the nodes of a grid as a [`DensityField`].
pub fn sample_on_grid(field: &dyn Field, spec: &DomainSpec) -> Result<DensityField> {
    let comps = (0..field.n())
        .map(|i| (0..spec.mask.len()).map(|k| if spec.mask[k] { field.value(i, spec.node(k)) } else { 0.0 }).collect())
        .collect();
    DensityField::from_components(spec.clone(), comps)
}
