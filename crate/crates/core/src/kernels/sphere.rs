//! Heat kernel of the unit round sphere as a Legendre series in `cos d`.
//!
//! `H = Σ_l (2l+1)/(4π) e^{-l(l+1)t} P_l(x)` with `x = cos d`. Writing
//! `S(x) = H`, the radial jet on S² is
//!
//! - `|∇u|² = (1-x²) S'²`
//! - `Δu   = (1-x²) S'' - 2x S' = -Σ l(l+1) c_l P_l`
//! - Hessian eigenvalues `(1-x²) S'' - x S'` and `-x S'`
//! - `|∇Δu|² = (1-x²) (ΔS)'²`
//!
//! all of which stay regular at the poles.

use std::f64::consts::PI;

use super::KernelJet;
use crate::error::{Error, Result};

/// Smallest time at which the truncated series is used.
pub const SPHERE_T_MIN: f64 = 0.01;
pub const SPHERE_TERM_BUDGET: usize = 5_000;

#[derive(Debug, Clone, Copy, Default)]
struct Sums {
    s: f64,
    ds: f64,
    d2s: f64,
    lap: f64,
    dlap: f64,
    terms: usize,
}

fn series(x: f64, t: f64) -> Result<Sums> {
    if t < SPHERE_T_MIN {
        return Err(Error::Domain(format!("sphere kernel series requires t >= {SPHERE_T_MIN}, got {t}")));
    }
    let x = x.clamp(-1.0, 1.0);
    let mut out = Sums::default();
    // P_{l-1}, P_l and derivatives
    let (mut p_prev, mut p) = (0.0, 1.0);
    let (mut dp_prev, mut dp) = (0.0, 0.0);
    let (mut d2p_prev, mut d2p) = (0.0, 0.0);
    let mut l = 0usize;
    loop {
        let lf = l as f64;
        let lam = lf * (lf + 1.0);
        let c = (2.0 * lf + 1.0) / (4.0 * PI) * (-lam * t).exp();
        out.s += c * p;
        out.ds += c * dp;
        out.d2s += c * d2p;
        out.lap -= lam * c * p;
        out.dlap -= lam * c * dp;
        // |P_l| <= 1, |P_l'| <= l²/2, |P_l''| <= l⁴/8; weigh by l⁶ to cover λ P_l' too
        let bound = c * (1.0 + lam).powi(3);
        if l > 2 && bound < 1e-17 {
            out.terms = l + 1;
            return Ok(out);
        }
        if l >= SPHERE_TERM_BUDGET {
            return Err(Error::Truncation(format!("sphere series exceeded {SPHERE_TERM_BUDGET} terms at t={t}")));
        }
        let p_next = if l == 0 { x } else { ((2.0 * lf + 1.0) * x * p - lf * p_prev) / (lf + 1.0) };
        let dp_next = if l == 0 { 1.0 } else { dp_prev + (2.0 * lf + 1.0) * p };
        let d2p_next = if l == 0 { 0.0 } else { d2p_prev + (2.0 * lf + 1.0) * dp };
        p_prev = p;
        p = p_next;
        dp_prev = dp;
        dp = dp_next;
        d2p_prev = d2p;
        d2p = d2p_next;
        l += 1;
    }
}

/// Kernel value at geodesic distance `d`.
pub fn sphere_kernel(d: f64, t: f64) -> Result<f64> {
    Ok(series(d.cos(), t)?.s)
}

/// Number of series terms used at `(d, t)`.
pub fn sphere_term_count(d: f64, t: f64) -> Result<usize> {
    Ok(series(d.cos(), t)?.terms)
}

pub fn sphere_jet(d: f64, t: f64) -> Result<KernelJet> {
    let x = d.cos();
    let one_minus = {
        let s = d.sin();
        s * s
    };
    let z = series(x, t)?;
    let e_rad = one_minus * z.d2s - x * z.ds;
    let e_tan = -x * z.ds;
    Ok(KernelJet {
        u: z.s,
        grad_sq: one_minus * z.ds * z.ds,
        lap: z.lap,
        hess_sq: e_rad * e_rad + e_tan * e_tan,
        grad_lap_sq: Some(one_minus * z.dlap * z.dlap),
    })
}
