use std::f64::consts::PI;

use super::{GeometryKind, ModelGeometry, Point, WARP_GRID_STEP};
use crate::error::{Error, Result};
use crate::quad::simpson;

/// Volume of the unit ball in ℝⁿ.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / n as f64 * unit_ball_volume(n - 2),
    }
}

/// `(x √(r²-x²) + r² asin(x/r)) / 2`, an antiderivative of `√(r²-x²)`.
fn circle_primitive(x: f64, r: f64) -> f64 {
    let s = (r * r - x * x).max(0.0).sqrt();
    0.5 * (x * s + r * r * (x / r).clamp(-1.0, 1.0).asin())
}

/// Ball of radius `r` in the flat torus `(ℝ/Lℤ)ⁿ`, `half = L/2`.
fn torus_ball(n: usize, r: f64, half: f64) -> f64 {
    if r <= half {
        return unit_ball_volume(n) * r.powi(n as i32);
    }
    match n {
        1 => 2.0 * half,
        2 => {
            let x0 = (r * r - half * half).sqrt();
            if x0 >= half {
                4.0 * half * half
            } else {
                4.0 * (half * x0 + circle_primitive(half, r) - circle_primitive(x0, r))
            }
        }
        _ => {
            let full = (2.0 * half).powi(n as i32);
            if r * r >= n as f64 * half * half {
                return full;
            }
            // slices perpendicular to the last axis
            2.0 * simpson(|z| torus_ball(n - 1, (r * r - z * z).max(0.0).sqrt(), half), 0.0, half, 20_000)
        }
    }
}

/// `sinh(2r) - 2r` without cancellation for small `r`.
fn sinh2_minus_2r(r: f64) -> f64 {
    if r > 0.5 {
        return (2.0 * r).sinh() - 2.0 * r;
    }
    let x = 2.0 * r;
    let x2 = x * x;
    let mut term = x * x2 / 6.0;
    let mut sum: f64 = 0.0;
    let mut k = 1.0;
    while term.abs() > 1e-18 * sum.abs() {
        sum += term;
        term *= x2 / ((2.0 * k + 2.0) * (2.0 * k + 3.0));
        k += 1.0;
    }
    sum
}

/// Monotonicity report for `r ↦ Vol(B(r)) / rⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub struct BishopReport {
    pub radii: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Largest increase between consecutive ratios (zero when nonincreasing).
    pub max_violation: f64,
}

impl BishopReport {
    pub fn strictly_decreasing(&self) -> bool {
        self.ratios.windows(2).all(|w| w[1] < w[0])
    }
}

impl ModelGeometry {
    /// Volume of the geodesic ball `B_y(r)`.
    ///
    /// All model geometries are homogeneous except the warped surface, whose
    /// balls are only supported about the pole.
    pub fn ball_volume(&self, y: &Point, r: f64) -> Result<f64> {
        self.check_point(y)?;
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Domain(format!("ball radius must be positive, got {r}")));
        }
        let n = self.dim;
        let v = match self.kind {
            GeometryKind::Euclidean => unit_ball_volume(n) * r.powi(n as i32),
            GeometryKind::FlatTorus { period } => torus_ball(n, r, 0.5 * period),
            GeometryKind::FlatCylinder { period } => {
                let m = r.min(0.5 * period);
                4.0 * circle_primitive(m, r)
            }
            GeometryKind::SphereS2 => {
                if r >= PI {
                    4.0 * PI
                } else {
                    let s = (0.5 * r).sin();
                    4.0 * PI * s * s
                }
            }
            GeometryKind::HyperbolicH3 => PI * sinh2_minus_2r(r),
            GeometryKind::WarpedSurface { warp, r_max } => {
                if y.coords[0] != 0.0 {
                    return Err(Error::NotApplicable("warped-surface balls are centred at the pole".into()));
                }
                if r > r_max {
                    return Err(Error::ChartTruncation { radius: r, limit: r_max });
                }
                let panels = ((r / WARP_GRID_STEP).ceil() as usize).max(16);
                2.0 * PI * simpson(|s| warp.f(s), 0.0, r, panels)
            }
        };
        Ok(v)
    }

    /// `Vol(B_y(√t)) / Vol(B_y(√(t/2)))`.
    pub fn doubling_constant(&self, y: &Point, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("time must be positive, got {t}")));
        }
        Ok(self.ball_volume(y, t.sqrt())? / self.ball_volume(y, (0.5 * t).sqrt())?)
    }

    /// Check that `Vol(B_y(r))/rⁿ` is nonincreasing over increasing `radii`.
    pub fn bishop_monotonicity_check(&self, y: &Point, radii: &[f64]) -> Result<BishopReport> {
        if self.ricci_lower_bound()? != 0.0 {
            return Err(Error::NotApplicable(format!(
                "volume comparison needs nonnegative Ricci curvature; {} has K > 0",
                self.key()
            )));
        }
        if radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("radii must be strictly increasing".into()));
        }
        let ratios = radii
            .iter()
            .map(|&r| Ok(self.ball_volume(y, r)? / r.powi(self.dim as i32)))
            .collect::<Result<Vec<_>>>()?;
        let max_violation = ratios.windows(2).map(|w| (w[1] - w[0]).max(0.0)).fold(0.0, f64::max);
        Ok(BishopReport { radii: radii.to_vec(), ratios, max_violation })
    }
}
