//! Model manifolds with known curvature.
//!
//! Sign convention: the warped surface `dr² + f(r)² dθ²` has Gauss curvature
//! `-f''/f`, and on a surface the Ricci tensor is Gauss curvature times the
//! metric. `ModelGeometry::ricci_lower` is the constant `K` in `Ric >= -K g`,
//! so hyperbolic 3-space (`Ric = -2 g`) has `K = 2` and every nonnegatively
//! curved model has `K = 0`.

mod volume;
mod warp;

pub use volume::{unit_ball_volume, BishopReport};
pub use warp::Warp;

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Step of the curvature certification grid and of warped-surface quadrature.
pub const WARP_GRID_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeometryKind {
    Euclidean,
    FlatTorus { period: f64 },
    /// `S¹(period) × ℝ`; coordinates are `(θ, z)`.
    FlatCylinder { period: f64 },
    /// Unit round sphere; coordinates are polar angle and azimuth.
    SphereS2,
    /// Curvature -1; geodesic polar coordinates `(r, θ, φ)`.
    HyperbolicH3,
    /// `dr² + f(r)² dθ²` on `r ∈ [0, r_max]`.
    WarpedSurface { warp: Warp, r_max: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Chart {
    Cartesian,
    Angular,
    Cylindrical,
    RadialPolar,
}

/// A point in the chart of its geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub chart: Chart,
    pub coords: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelGeometry {
    pub kind: GeometryKind,
    pub dim: usize,
}

/// Result of certifying a Ricci lower bound on a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureCertificate {
    pub k: f64,
    /// Minimum Gauss curvature seen on the grid (warped surfaces only).
    pub min_gauss: Option<f64>,
    pub grid_points: usize,
}

fn check_period(period: f64) -> Result<()> {
    if period.is_finite() && period > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("period must be positive, got {period}")))
    }
}

impl ModelGeometry {
    pub fn euclidean(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("dimension must be positive".into()));
        }
        Ok(Self { kind: GeometryKind::Euclidean, dim: n })
    }

    pub fn flat_torus(n: usize, period: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("dimension must be positive".into()));
        }
        check_period(period)?;
        Ok(Self { kind: GeometryKind::FlatTorus { period }, dim: n })
    }

    pub fn flat_cylinder(period: f64) -> Result<Self> {
        check_period(period)?;
        Ok(Self { kind: GeometryKind::FlatCylinder { period }, dim: 2 })
    }

    pub fn sphere() -> Self {
        Self { kind: GeometryKind::SphereS2, dim: 2 }
    }

    pub fn hyperbolic() -> Self {
        Self { kind: GeometryKind::HyperbolicH3, dim: 3 }
    }

    pub fn warped(warp: Warp, r_max: f64) -> Result<Self> {
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(Error::Domain(format!("r_max must be positive, got {r_max}")));
        }
        Ok(Self { kind: GeometryKind::WarpedSurface { warp, r_max }, dim: 2 })
    }

    pub fn chart(&self) -> Chart {
        match self.kind {
            GeometryKind::Euclidean => Chart::Cartesian,
            GeometryKind::FlatTorus { .. } | GeometryKind::SphereS2 => Chart::Angular,
            GeometryKind::FlatCylinder { .. } => Chart::Cylindrical,
            GeometryKind::HyperbolicH3 | GeometryKind::WarpedSurface { .. } => Chart::RadialPolar,
        }
    }

    pub fn is_compact(&self) -> bool {
        matches!(self.kind, GeometryKind::FlatTorus { .. } | GeometryKind::SphereS2)
    }

    pub fn is_flat(&self) -> bool {
        matches!(
            self.kind,
            GeometryKind::Euclidean
                | GeometryKind::FlatTorus { .. }
                | GeometryKind::FlatCylinder { .. }
                | GeometryKind::WarpedSurface { warp: Warp::Flat, .. }
        )
    }

    /// Kernels on this geometry are functions of the distance to the source only,
    /// and sampling happens along a ray from the chart base point.
    pub fn is_radial(&self) -> bool {
        matches!(
            self.kind,
            GeometryKind::SphereS2 | GeometryKind::HyperbolicH3 | GeometryKind::WarpedSurface { .. }
        )
    }

    /// Stable text key, also accepted by `FromStr`.
    pub fn key(&self) -> String {
        match self.kind {
            GeometryKind::Euclidean => format!("euclidean:n={}", self.dim),
            GeometryKind::FlatTorus { period } => format!("torus:n={},L={}", self.dim, period),
            GeometryKind::FlatCylinder { period } => format!("cylinder:L={period}"),
            GeometryKind::SphereS2 => "sphere:s2".to_string(),
            GeometryKind::HyperbolicH3 => "hyperbolic:h3".to_string(),
            GeometryKind::WarpedSurface { warp, r_max } => format!("warped:f={warp},Rmax={r_max}"),
        }
    }

    /// Base point of the chart: origin, north pole, or warped pole.
    pub fn origin(&self) -> Point {
        Point { chart: self.chart(), coords: vec![0.0; self.dim] }
    }

    /// Validate chart coordinates and reduce periodic ones.
    pub fn point(&self, coords: &[f64]) -> Result<Point> {
        if coords.len() != self.dim {
            return Err(Error::Domain(format!(
                "{} expects {} coordinates, got {}",
                self.key(),
                self.dim,
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("non-finite coordinate".into()));
        }
        let mut c = coords.to_vec();
        match self.kind {
            GeometryKind::Euclidean => {}
            GeometryKind::FlatTorus { period } => {
                for x in &mut c {
                    *x = x.rem_euclid(period);
                }
            }
            GeometryKind::FlatCylinder { period } => c[0] = c[0].rem_euclid(period),
            GeometryKind::SphereS2 => {
                // absorb rounding from lattice arithmetic at the antipode
                if c[0] > PI && c[0] <= PI * (1.0 + 1e-12) {
                    c[0] = PI;
                }
                if !(0.0..=PI).contains(&c[0]) {
                    return Err(Error::Domain(format!("polar angle {} outside [0, π]", c[0])));
                }
                c[1] = c[1].rem_euclid(2.0 * PI);
            }
            GeometryKind::HyperbolicH3 => {
                if c[0] < 0.0 || !(0.0..=PI).contains(&c[1]) {
                    return Err(Error::Domain(format!("invalid geodesic polar point {c:?}")));
                }
                c[2] = c[2].rem_euclid(2.0 * PI);
            }
            GeometryKind::WarpedSurface { r_max, .. } => {
                if c[0] < 0.0 || c[0] > r_max {
                    return Err(Error::ChartTruncation { radius: c[0], limit: r_max });
                }
                c[1] = c[1].rem_euclid(2.0 * PI);
            }
        }
        Ok(Point { chart: self.chart(), coords: c })
    }

    /// Point at geodesic distance `r` from the base point along the reference ray.
    pub fn point_on_ray(&self, r: f64) -> Result<Point> {
        let mut c = vec![0.0; self.dim];
        match self.kind {
            GeometryKind::SphereS2 | GeometryKind::HyperbolicH3 | GeometryKind::WarpedSurface { .. } => {
                c[0] = r;
                if matches!(self.kind, GeometryKind::HyperbolicH3) {
                    // a fixed generic direction
                    c[1] = 0.5 * PI;
                }
            }
            _ => c[0] = r,
        }
        self.point(&c)
    }

    fn check_point(&self, p: &Point) -> Result<()> {
        if p.chart != self.chart() || p.coords.len() != self.dim {
            return Err(Error::DomainMismatch(format!(
                "{:?} point with {} coordinates used on {}",
                p.chart,
                p.coords.len(),
                self.key()
            )));
        }
        Ok(())
    }

    /// Signed per-axis displacement `y - x`, minimized over lattice translates
    /// for periodic axes.
    pub fn displacement(&self, x: &Point, y: &Point) -> Result<Vec<f64>> {
        self.check_point(x)?;
        self.check_point(y)?;
        let periodic = |d: f64, period: f64| {
            (-3..=3)
                .map(|k| d - k as f64 * period)
                .min_by(|a, b| a.abs().total_cmp(&b.abs()))
                .unwrap()
        };
        match self.kind {
            GeometryKind::Euclidean => Ok(x.coords.iter().zip(&y.coords).map(|(a, b)| b - a).collect()),
            GeometryKind::FlatTorus { period } => Ok(x
                .coords
                .iter()
                .zip(&y.coords)
                .map(|(a, b)| periodic((b - a).rem_euclid(period), period))
                .collect()),
            GeometryKind::FlatCylinder { period } => Ok(vec![
                periodic((y.coords[0] - x.coords[0]).rem_euclid(period), period),
                y.coords[1] - x.coords[1],
            ]),
            _ => Err(Error::NotApplicable(format!("{} has no global Cartesian displacement", self.key()))),
        }
    }

    pub fn distance(&self, x: &Point, y: &Point) -> Result<f64> {
        self.check_point(x)?;
        self.check_point(y)?;
        match self.kind {
            GeometryKind::Euclidean | GeometryKind::FlatTorus { .. } | GeometryKind::FlatCylinder { .. } => {
                let d = self.displacement(x, y)?;
                Ok(d.iter().map(|v| v * v).sum::<f64>().sqrt())
            }
            GeometryKind::SphereS2 => {
                let a = sphere_unit_vector(x.coords[0], x.coords[1]);
                let b = sphere_unit_vector(y.coords[0], y.coords[1]);
                let dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
                let cross = norm3(cross3(a, b));
                Ok(cross.atan2(dot))
            }
            GeometryKind::HyperbolicH3 => {
                let ha = hyperboloid(&x.coords);
                let hb = hyperboloid(&y.coords);
                // Minkowski norm of the chord; stable for nearby points.
                let d0 = ha[0] - hb[0];
                let spatial: f64 = (1..4).map(|i| (ha[i] - hb[i]).powi(2)).sum();
                let chord = (spatial - d0 * d0).max(0.0).sqrt();
                Ok(2.0 * (0.5 * chord).asinh())
            }
            GeometryKind::WarpedSurface { .. } => {
                let (r1, r2) = (x.coords[0], y.coords[0]);
                if r1 == 0.0 || r2 == 0.0 {
                    Ok(r1 + r2)
                } else if (x.coords[1] - y.coords[1]).abs() == 0.0 {
                    Ok((r1 - r2).abs())
                } else {
                    Err(Error::NotApplicable(
                        "warped-surface distance is only available from the pole or along a meridian".into(),
                    ))
                }
            }
        }
    }

    /// Certify the Ricci lower-bound constant `K`.
    pub fn curvature_certificate(&self) -> Result<CurvatureCertificate> {
        let k = match self.kind {
            GeometryKind::HyperbolicH3 => (self.dim - 1) as f64,
            GeometryKind::WarpedSurface { warp, r_max } => {
                let n = (r_max / WARP_GRID_STEP).ceil() as usize;
                let mut min_gauss = f64::INFINITY;
                for i in 1..=n {
                    let r = (i as f64 * WARP_GRID_STEP).min(r_max);
                    let d2 = warp.d2f(r);
                    if d2 > 0.0 {
                        return Err(Error::CurvatureViolation(format!(
                            "f''({r}) = {d2} > 0 for warp {warp}; Gauss curvature negative"
                        )));
                    }
                    min_gauss = min_gauss.min(warp.gauss_curvature(r));
                }
                return Ok(CurvatureCertificate { k: 0.0, min_gauss: Some(min_gauss), grid_points: n });
            }
            _ => 0.0,
        };
        Ok(CurvatureCertificate { k, min_gauss: None, grid_points: 0 })
    }

    pub fn ricci_lower_bound(&self) -> Result<f64> {
        self.curvature_certificate().map(|c| c.k)
    }

    /// Spatial sample points within `radius` of `source`, on a lattice of
    /// spacing `step` that always contains the source itself.
    pub fn sample_points(&self, source: &Point, radius: f64, step: f64) -> Result<Vec<Point>> {
        self.check_point(source)?;
        if !(step > 0.0 && radius >= 0.0) {
            return Err(Error::Domain(format!("invalid sampling radius {radius} / step {step}")));
        }
        if self.is_radial() {
            if source.coords.iter().any(|&c| c != 0.0) {
                return Err(Error::NotApplicable(
                    "radial geometries are sampled about the chart base point".into(),
                ));
            }
            let limit = match self.kind {
                GeometryKind::SphereS2 => radius.min(PI),
                GeometryKind::WarpedSurface { r_max, .. } => radius.min(r_max),
                _ => radius,
            };
            let m = (limit / step + 1e-9).floor() as i64;
            return (0..=m).map(|k| self.point_on_ray(k as f64 * step)).collect();
        }
        let half_periods: Vec<f64> = (0..self.dim)
            .map(|axis| match self.kind {
                GeometryKind::FlatTorus { period } => 0.5 * period,
                GeometryKind::FlatCylinder { period } if axis == 0 => 0.5 * period,
                _ => f64::INFINITY,
            })
            .collect();
        let ranges: Vec<i64> = half_periods
            .iter()
            .map(|&hp| ((radius.min(hp)) / step + 1e-9).floor() as i64)
            .collect();
        let mut out = Vec::new();
        let mut idx: Vec<i64> = ranges.iter().map(|&m| -m).collect();
        loop {
            let disp: Vec<f64> = idx.iter().map(|&k| k as f64 * step).collect();
            let inside = disp
                .iter()
                .zip(&half_periods)
                .all(|(d, hp)| d.abs() <= *hp && !(hp.is_finite() && *d == -hp));
            let r2: f64 = disp.iter().map(|d| d * d).sum();
            if inside && r2 <= radius * radius * (1.0 + 1e-12) {
                let c: Vec<f64> = source.coords.iter().zip(&disp).map(|(a, b)| a + b).collect();
                out.push(self.point(&c)?);
            }
            // odometer
            let mut axis = 0;
            loop {
                if axis == self.dim {
                    return Ok(out);
                }
                if idx[axis] < ranges[axis] {
                    idx[axis] += 1;
                    break;
                }
                idx[axis] = -ranges[axis];
                axis += 1;
            }
        }
    }
}

fn sphere_unit_vector(theta: f64, phi: f64) -> [f64; 3] {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn norm3(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

fn hyperboloid(c: &[f64]) -> [f64; 4] {
    let (r, th, ph) = (c[0], c[1], c[2]);
    let s = r.sinh();
    [r.cosh(), s * th.sin() * ph.cos(), s * th.sin() * ph.sin(), s * th.cos()]
}

impl fmt::Display for ModelGeometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

impl FromStr for ModelGeometry {
    type Err = Error;

    /// Parses keys such as `euclidean:n=2`, `torus:n=1,L=6.2831853`,
    /// `cylinder:L=6.28`, `sphere`, `hyperbolic:h3`, `warped:f=cigar,Rmax=20`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut params = std::collections::BTreeMap::new();
        for item in rest.split(',').map(str::trim).filter(|x| !x.is_empty()) {
            match item.split_once('=') {
                Some((k, v)) => {
                    params.insert(k.trim().to_string(), v.trim().to_string());
                }
                None => {
                    params.insert(item.to_string(), String::new());
                }
            }
        }
        let num = |key: &str, default: Option<f64>| -> Result<f64> {
            match params.get(key) {
                Some(v) => v.parse::<f64>().map_err(|_| Error::Parse(format!("`{key}={v}` is not a number"))),
                None => default.ok_or_else(|| Error::Parse(format!("`{s}` is missing `{key}`"))),
            }
        };
        let dim = |default: Option<f64>| -> Result<usize> {
            let n = num("n", default)?;
            if n.fract() != 0.0 || n < 1.0 {
                return Err(Error::Parse(format!("dimension must be a positive integer, got {n}")));
            }
            Ok(n as usize)
        };
        match head.to_ascii_lowercase().as_str() {
            "euclidean" | "rn" => Self::euclidean(dim(None)?),
            "torus" => Self::flat_torus(dim(Some(1.0))?, num("L", Some(2.0 * PI))?),
            "cylinder" => Self::flat_cylinder(num("L", Some(2.0 * PI))?),
            "sphere" | "s2" => Ok(Self::sphere()),
            "hyperbolic" | "h3" => Ok(Self::hyperbolic()),
            "warped" => {
                let warp: Warp = params.get("f").map(String::as_str).unwrap_or("cigar").parse()?;
                Self::warped(warp, num("Rmax", Some(20.0))?)
            }
            other => Err(Error::Parse(format!("unknown geometry `{other}`"))),
        }
    }
}
