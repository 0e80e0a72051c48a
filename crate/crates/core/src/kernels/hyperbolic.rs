//! Closed-form heat kernel of hyperbolic 3-space (curvature -1):
//! `H(r, t) = (4πt)^{-3/2} (r / sinh r) e^{-t - r²/4t}`.

use std::f64::consts::PI;

use super::KernelJet;
use crate::error::{Error, Result};

/// `sinh r - r cosh r` via its alternating-free series below `r = 1`.
fn sinh_minus_r_cosh(r: f64) -> f64 {
    if r >= 1.0 {
        return r.sinh() - r * r.cosh();
    }
    let r2 = r * r;
    // -Σ_{k>=1} 2k r^{2k+1} / (2k+1)!
    let mut pow_fact = r * r2 / 6.0; // r^3/3!
    let mut sum: f64 = 0.0;
    let mut k = 1.0;
    while pow_fact > 1e-18 * sum.abs().max(f64::MIN_POSITIVE) {
        sum += 2.0 * k * pow_fact;
        pow_fact *= r2 / ((2.0 * k + 2.0) * (2.0 * k + 3.0));
        k += 1.0;
    }
    -sum
}

/// `r² - sinh² r` via `-Σ_{k>=2} 2^{2k-1} r^{2k} / (2k)!` below `r = 1`.
fn r2_minus_sinh2(r: f64) -> f64 {
    if r >= 1.0 {
        let s = r.sinh();
        return r * r - s * s;
    }
    let x2 = 4.0 * r * r;
    let mut term = x2 * x2 / 24.0; // (2r)^4/4!
    let mut sum: f64 = 0.0;
    let mut k = 2.0;
    while term > 1e-18 * sum.abs().max(f64::MIN_POSITIVE) {
        sum += 0.5 * term;
        term *= x2 / ((2.0 * k + 1.0) * (2.0 * k + 2.0));
        k += 1.0;
    }
    -sum
}

/// Regular radial building blocks at distance `r`.
struct Radial {
    /// `r / sinh r`
    phi: f64,
    /// `1/r - coth r`
    q: f64,
    /// `d/dr (1/r - coth r)`
    dq: f64,
    /// `coth r · (1/r - coth r)`
    coth_q: f64,
    /// `r coth r`
    r_coth: f64,
}

fn radial(r: f64) -> Radial {
    if r == 0.0 {
        return Radial { phi: 1.0, q: 0.0, dq: -1.0 / 3.0, coth_q: -1.0 / 3.0, r_coth: 1.0 };
    }
    if r > 20.0 {
        let e = (-2.0 * r).exp();
        let coth = (1.0 + e) / (1.0 - e);
        let csch2 = 4.0 * e / ((1.0 - e) * (1.0 - e));
        let q = 1.0 / r - coth;
        return Radial {
            phi: 2.0 * r * (-r).exp() / (1.0 - e),
            q,
            dq: -1.0 / (r * r) + csch2,
            coth_q: coth * q,
            r_coth: r * coth,
        };
    }
    let s = r.sinh();
    let c = r.cosh();
    let n = sinh_minus_r_cosh(r);
    Radial {
        phi: r / s,
        q: n / (r * s),
        dq: r2_minus_sinh2(r) / (r * r * s * s),
        coth_q: c * n / (r * s * s),
        r_coth: r * c / s,
    }
}

fn check(r: f64, t: f64) -> Result<()> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("time must be positive, got {t}")));
    }
    if !(r >= 0.0) {
        return Err(Error::Domain(format!("distance must be nonnegative, got {r}")));
    }
    Ok(())
}

pub fn h3_kernel(r: f64, t: f64) -> Result<f64> {
    check(r, t)?;
    Ok((4.0 * PI * t).powf(-1.5) * radial(r).phi * (-t - r * r / (4.0 * t)).exp())
}

/// Jet of the H³ kernel. Uses `Δu = ∂_t u = u (r²/4t² - 3/2t - 1)`; the
/// Hessian has eigenvalues `u''` (radial) and `coth r · u'` (twice).
pub fn h3_jet(r: f64, t: f64) -> Result<KernelJet> {
    let u = h3_kernel(r, t)?;
    let b = radial(r);
    let w = b.q - r / (2.0 * t);
    let du = u * w;
    let d2u = u * (w * w + b.dq - 0.5 / t);
    let tangential = u * (b.coth_q - b.r_coth / (2.0 * t));
    let l = r * r / (4.0 * t * t) - 1.5 / t - 1.0;
    let dlap = u * (w * l + r / (2.0 * t * t));
    Ok(KernelJet {
        u,
        grad_sq: du * du,
        lap: u * l,
        hess_sq: d2u * d2u + 2.0 * tangential * tangential,
        grad_lap_sq: Some(dlap * dlap),
    })
}
