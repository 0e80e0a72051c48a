//! Radial cutoff functions `η(x) = φ(d(x, p)/R)` with `η = 1` on `B_p(R)` and
//! support in `B_p(2R)`, and the constant `C₃` in
//! `|∇η|² <= C₃ η / R²`, `Δη >= -C₃ / R²`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::estimates::{ConstantFit, ConstantName, EstimateReport, Location};
use crate::exec::Execution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    /// `cos²(π(s-1)/2)` on the transition band.
    #[default]
    CosSquared,
    /// `1 - (10x³ - 15x⁴ + 6x⁵)`, `x = s - 1`.
    Quintic,
}

impl fmt::Display for ProfileKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProfileKind::CosSquared => "cos2",
            ProfileKind::Quintic => "quintic",
        })
    }
}

impl FromStr for ProfileKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cos2" | "cos-squared" | "cos²" => Ok(ProfileKind::CosSquared),
            "quintic" => Ok(ProfileKind::Quintic),
            other => Err(Error::Parse(format!("unknown cutoff profile '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffProfile {
    pub kind: ProfileKind,
    /// Scale `R`.
    pub radius: f64,
}

pub fn build_cutoff(radius: f64, kind: ProfileKind) -> Result<CutoffProfile> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Domain(format!("cutoff scale must be positive, got {radius}")));
    }
    Ok(CutoffProfile { kind, radius })
}

fn smoothstep(x: f64) -> f64 {
    x * x * x * (10.0 + x * (-15.0 + 6.0 * x))
}

impl CutoffProfile {
    /// `φ(s)`.
    pub fn phi(&self, s: f64) -> f64 {
        if s <= 1.0 {
            return 1.0;
        }
        if s >= 2.0 {
            return 0.0;
        }
        let x = s - 1.0;
        match self.kind {
            ProfileKind::CosSquared => (0.5 * PI * x).cos().powi(2),
            ProfileKind::Quintic => smoothstep(1.0 - x),
        }
    }

    /// `φ'(s)`.
    pub fn dphi(&self, s: f64) -> f64 {
        if s <= 1.0 || s >= 2.0 {
            return 0.0;
        }
        let x = s - 1.0;
        match self.kind {
            ProfileKind::CosSquared => -0.5 * PI * (PI * x).sin(),
            ProfileKind::Quintic => -30.0 * x * x * (1.0 - x) * (1.0 - x),
        }
    }

    /// `φ''(s)`; one-sided limits from inside the band at `s = 1, 2`.
    pub fn d2phi(&self, s: f64) -> f64 {
        if !(1.0..=2.0).contains(&s) {
            return 0.0;
        }
        let x = s - 1.0;
        match self.kind {
            ProfileKind::CosSquared => -0.5 * PI * PI * (PI * x).cos(),
            ProfileKind::Quintic => -60.0 * x * (1.0 - x) * (1.0 - 2.0 * x),
        }
    }

    /// `φ'²/φ` with the removable singularity at `φ = 0` resolved analytically.
    pub fn guarded_ratio(&self, s: f64) -> f64 {
        if s <= 1.0 || s > 2.0 {
            return 0.0;
        }
        let x = s - 1.0;
        match self.kind {
            ProfileKind::CosSquared => PI * PI * (0.5 * PI * x).sin().powi(2),
            ProfileKind::Quintic => {
                let y = 1.0 - x;
                900.0 * x.powi(4) * y / (10.0 + y * (-15.0 + 6.0 * y))
            }
        }
    }

    /// `η` at distance `d` from the centre.
    pub fn eta(&self, d: f64) -> f64 {
        self.phi(d / self.radius)
    }

    /// `|∇η|²` at distance `d`.
    pub fn grad_sq(&self, d: f64) -> f64 {
        (self.dphi(d / self.radius) / self.radius).powi(2)
    }

    /// `Δη` at distance `d` in `ℝⁿ`.
    pub fn laplacian(&self, d: f64, n: usize) -> f64 {
        let s = d / self.radius;
        let radial = if s > 0.0 { (n as f64 - 1.0) * self.dphi(s) / s } else { 0.0 };
        (self.d2phi(s) + radial) / (self.radius * self.radius)
    }
}

/// Fitted cutoff constant with its two parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffFit {
    /// `sup R²|∇η|²/η` over the closure of `η > 0`.
    pub gradient_part: f64,
    /// `sup -R²Δη`.
    pub laplacian_part: f64,
    pub fit: ConstantFit,
}

/// Distances `R·k/per_unit` for `s = k/per_unit ∈ [0, 2.5]`; `s = 1, 2` are always nodes.
fn grid(cut: &CutoffProfile, per_unit: usize) -> Vec<f64> {
    let last = (2.5 * per_unit as f64).round() as usize;
    (0..=last).map(|k| cut.radius * k as f64 / per_unit as f64).collect()
}

/// Fits `C₃ = max(sup R²|∇η|²/η, sup -R²Δη)` over a radial grid in `ℝⁿ`.
pub fn cutoff_constants(cut: &CutoffProfile, n: usize, per_unit: usize, execution: Execution) -> Result<CutoffFit> {
    if n == 0 || per_unit == 0 {
        return Err(Error::Domain("cutoff fit needs n >= 1 and a nonempty grid".into()));
    }
    let r2 = cut.radius * cut.radius;
    let points = grid(cut, per_unit);
    let parts = execution.map(&points, |&d| {
        let s = d / cut.radius;
        // closure of {η > 0}: the guarded ratio extends continuously to s = 2
        let grad = cut.guarded_ratio(s);
        (grad, -r2 * cut.laplacian(d, n))
    });
    let (mut g_best, mut l_best) = ((0.0, 0usize), (f64::NEG_INFINITY, 0usize));
    for (i, &(g, l)) in parts.iter().enumerate() {
        if g > g_best.0 {
            g_best = (g, i);
        }
        if l > l_best.0 {
            l_best = (l, i);
        }
    }
    let (value, at) = if g_best.0 >= l_best.0 { g_best } else { l_best };
    Ok(CutoffFit {
        gradient_part: g_best.0,
        laplacian_part: l_best.0,
        fit: ConstantFit {
            name: ConstantName::Cutoff,
            value,
            family: format!("{} profile, n = {n}, R = {}", cut.kind, cut.radius),
            binding: Some(Location { coords: vec![points[at]], t: 0.0 }),
            samples: points.len(),
        },
    })
}

/// Smallest normalized slack of `|∇η|² <= C₃η/R²` and `Δη >= -C₃/R²` on a
/// grid: `min(C₃ - R²|∇η|²/η, C₃ + R²Δη) / C₃`.
pub fn verify_cutoff(cut: &CutoffProfile, n: usize, c3: f64, per_unit: usize) -> f64 {
    let r2 = cut.radius * cut.radius;
    grid(cut, per_unit)
        .into_iter()
        .map(|d| {
            let s = d / cut.radius;
            let grad = c3 - cut.guarded_ratio(s);
            grad.min(c3 + r2 * cut.laplacian(d, n)) / c3
        })
        .fold(f64::INFINITY, f64::min)
}

/// Relative tolerance of the finer-grid re-verification: an interior
/// supremum can rise by `O(h²)` between grids.
pub const CUTOFF_REFINE_TOLERANCE: f64 = 1e-6;

/// The `cutoff-fit` report: fit at scale `R`, re-fit at `100R`, and
/// re-verification on a grid twice as fine.
pub fn cutoff_report(kind: ProfileKind, n: usize, per_unit: usize, execution: Execution) -> Result<(EstimateReport, CutoffFit)> {
    let base = build_cutoff(1.0, kind)?;
    let fit = cutoff_constants(&base, n, per_unit, execution)?;
    let scaled = cutoff_constants(&build_cutoff(100.0, kind)?, n, per_unit, execution)?;
    let slack = verify_cutoff(&base, n, fit.fit.value, 2 * per_unit);
    let drift = (fit.fit.value - scaled.fit.value).abs() / fit.fit.value;
    let mut report = EstimateReport {
        estimate_id: "cutoff-fit".into(),
        geometry: format!("euclidean:n={n}"),
        worst_margin: slack,
        argmin: fit.fit.binding.clone(),
        fitted_constant: Some(fit.fit.value),
        samples: fit.fit.samples,
        tolerance_floor: -CUTOFF_REFINE_TOLERANCE,
        pass: slack >= -CUTOFF_REFINE_TOLERANCE && drift <= 1e-12,
        diagnostics: Default::default(),
    };
    report.diagnostics.insert("gradient_part".into(), fit.gradient_part);
    report.diagnostics.insert("laplacian_part".into(), fit.laplacian_part);
    report.diagnostics.insert("scale_drift".into(), drift);
    Ok((report, fit))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_values() {
        let c = build_cutoff(1.0, ProfileKind::CosSquared).unwrap();
        assert_eq!(c.phi(1.0), 1.0);
        assert_eq!(c.phi(2.0), 0.0);
        assert!((c.phi(1.5) - 0.5).abs() < 1e-15);
        assert_eq!(c.dphi(1.0), 0.0);
        assert!(c.dphi(2.0 - 1e-12).abs() < 1e-10);
        let q = build_cutoff(1.0, ProfileKind::Quintic).unwrap();
        assert!((q.phi(1.5) - 0.5).abs() < 1e-15);
        assert!(q.dphi(1.0 + 1e-9).abs() < 1e-15);
    }

    #[test]
    fn derivatives_by_differences() {
        for kind in [ProfileKind::CosSquared, ProfileKind::Quintic] {
            let c = build_cutoff(1.0, kind).unwrap();
            let h = 1e-5;
            for s in [1.1, 1.37, 1.5, 1.8, 1.95] {
                let d1 = (c.phi(s + h) - c.phi(s - h)) / (2.0 * h);
                let d2 = (c.phi(s + h) - 2.0 * c.phi(s) + c.phi(s - h)) / (h * h);
                assert!((d1 - c.dphi(s)).abs() < 1e-8, "{kind} {s}");
                assert!((d2 - c.d2phi(s)).abs() < 1e-4, "{kind} {s}");
                let ratio = c.dphi(s).powi(2) / c.phi(s);
                assert!((ratio - c.guarded_ratio(s)).abs() < 1e-10 * ratio.max(1.0), "{kind} {s}");
            }
        }
    }

    #[test]
    fn eta_is_one_on_inner_ball() {
        for r in [1.0, 10.0, 100.0] {
            let c = build_cutoff(r, ProfileKind::CosSquared).unwrap();
            for k in 0..=100 {
                assert_eq!(c.eta(r * k as f64 / 100.0), 1.0);
            }
            assert_eq!(c.eta(2.0 * r), 0.0);
        }
    }

    #[test]
    fn cos_squared_gradient_part_is_pi_squared() {
        let c = build_cutoff(1.0, ProfileKind::CosSquared).unwrap();
        let fit = cutoff_constants(&c, 1, 1000, Execution::Sequential).unwrap();
        assert!((fit.gradient_part - PI * PI).abs() < 1e-12);
        assert!((fit.laplacian_part - PI * PI / 2.0).abs() < 1e-12);
        assert_eq!(fit.fit.value, fit.gradient_part);
    }

    #[test]
    fn scale_independent_and_reverified() {
        for kind in [ProfileKind::CosSquared, ProfileKind::Quintic] {
            for n in 1..=3 {
                let (report, _) = cutoff_report(kind, n, 1000, Execution::Sequential).unwrap();
                assert!(report.pass, "{kind} n={n}: {report:?}");
                assert!(report.diagnostics["scale_drift"] <= 1e-12);
            }
        }
    }

    #[test]
    fn rejects_bad_scale() {
        assert!(build_cutoff(0.0, ProfileKind::Quintic).is_err());
        assert!("triangle".parse::<ProfileKind>().is_err());
    }
}
