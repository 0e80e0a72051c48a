use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// Warp function `f` of a rotationally symmetric surface `dr² + f(r)² dθ²`.
///
/// Every variant closes smoothly at the pole: `f(0) = 0`, `f'(0) = 1`.
/// The Gauss curvature of the surface is `-f''/f`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Warp {
    /// `f(r) = r`, the flat plane in polar coordinates.
    Flat,
    /// `f(r) = 1 - e^{-r}`: positive curvature, asymptotically a cylinder of circumference 2π.
    Cigar,
    /// `f(r) = tanh r`: Hamilton's cigar soliton profile.
    Tanh,
    /// `f(r) = sinh r`: the hyperbolic plane (negative curvature).
    Sinh,
    /// `f(r) = sin r`: the unit sphere in polar form; degenerate again at `r = π`.
    Sine,
}

impl Warp {
    pub fn f(self, r: f64) -> f64 {
        match self {
            Warp::Flat => r,
            Warp::Cigar => -(-r).exp_m1(),
            Warp::Tanh => r.tanh(),
            Warp::Sinh => r.sinh(),
            Warp::Sine => r.sin(),
        }
    }

    pub fn df(self, r: f64) -> f64 {
        match self {
            Warp::Flat => 1.0,
            Warp::Cigar => (-r).exp(),
            Warp::Tanh => {
                let c = r.cosh();
                1.0 / (c * c)
            }
            Warp::Sinh => r.cosh(),
            Warp::Sine => r.cos(),
        }
    }

    pub fn d2f(self, r: f64) -> f64 {
        match self {
            Warp::Flat => 0.0,
            Warp::Cigar => -(-r).exp(),
            Warp::Tanh => {
                let c = r.cosh();
                -2.0 * r.tanh() / (c * c)
            }
            Warp::Sinh => r.sinh(),
            Warp::Sine => -r.sin(),
        }
    }

    /// Closed-form antiderivative with `F(0) = 0`.
    pub fn antiderivative(self, r: f64) -> f64 {
        match self {
            Warp::Flat => 0.5 * r * r,
            // r + e^{-r} - 1
            Warp::Cigar => r + (-r).exp_m1(),
            Warp::Tanh => r.cosh().ln(),
            // cosh r - 1 = 2 sinh²(r/2)
            Warp::Sinh => {
                let s = (0.5 * r).sinh();
                2.0 * s * s
            }
            Warp::Sine => {
                let s = (0.5 * r).sin();
                2.0 * s * s
            }
        }
    }

    /// Gauss curvature `-f''/f`; the pole value is the limit `-f'''(0)`.
    pub fn gauss_curvature(self, r: f64) -> f64 {
        if r == 0.0 {
            return match self {
                Warp::Flat => 0.0,
                // f''(0) = -1 != 0: curvature grows like 1/r towards the pole.
                Warp::Cigar => f64::INFINITY,
                Warp::Tanh => 2.0,
                Warp::Sinh => -1.0,
                Warp::Sine => 1.0,
            };
        }
        -self.d2f(r) / self.f(r)
    }

    pub fn name(self) -> &'static str {
        match self {
            Warp::Flat => "flat",
            Warp::Cigar => "cigar",
            Warp::Tanh => "tanh",
            Warp::Sinh => "sinh",
            Warp::Sine => "sine",
        }
    }
}

impl fmt::Display for Warp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Warp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "flat" | "r" => Ok(Warp::Flat),
            "cigar" | "1-exp(-r)" => Ok(Warp::Cigar),
            "tanh" => Ok(Warp::Tanh),
            "sinh" | "hyperbolic" => Ok(Warp::Sinh),
            "sine" | "sin" => Ok(Warp::Sine),
            other => Err(Error::Parse(format!("unknown warp `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALL: [Warp; 5] = [Warp::Flat, Warp::Cigar, Warp::Tanh, Warp::Sinh, Warp::Sine];

    #[test]
    fn smooth_pole_closure() {
        for w in ALL {
            assert_eq!(w.f(0.0), 0.0, "{w}");
            assert!((w.df(0.0) - 1.0).abs() < 1e-15, "{w}");
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-5;
        for w in ALL {
            for &r in &[0.1, 0.7, 2.0, 5.0] {
                let d1 = (w.f(r + h) - w.f(r - h)) / (2.0 * h);
                let d2 = (w.df(r + h) - w.df(r - h)) / (2.0 * h);
                let da = (w.antiderivative(r + h) - w.antiderivative(r - h)) / (2.0 * h);
                assert!((d1 - w.df(r)).abs() < 1e-8 * (1.0 + w.df(r).abs()), "{w} f' at {r}");
                assert!((d2 - w.d2f(r)).abs() < 1e-8 * (1.0 + w.d2f(r).abs()), "{w} f'' at {r}");
                assert!((da - w.f(r)).abs() < 1e-8 * (1.0 + w.f(r).abs()), "{w} F' at {r}");
            }
        }
    }

    #[test]
    fn pole_curvature_is_the_limit() {
        for w in ALL.into_iter().filter(|w| *w != Warp::Cigar) {
            let near = w.gauss_curvature(1e-6);
            assert!((near - w.gauss_curvature(0.0)).abs() < 1e-5, "{w}: {near}");
        }
        // The cigar pole is a curvature singularity of order 1/r.
        let k = Warp::Cigar.gauss_curvature(1e-6);
        assert!((k * 1e-6 - 1.0).abs() < 1e-5, "{k}");
        assert_eq!(Warp::Cigar.gauss_curvature(0.0), f64::INFINITY);
    }
}
