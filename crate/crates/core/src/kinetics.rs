//! Monomial-gamma kinetic energies.
//!
//! The stiff kinetics `k(p) = |p|^(1/a)` are not differentiable at the
//! origin for `a >= 1`. The softened forms used by the samplers keep the
//! same tails while being smooth everywhere:
//!
//! ```text
//! a = 1:   k_c(p) = -p + (2/c) log(1 + exp(c p))
//! a = 2:   k_c(p) = |p|^(1/2) + 4 / (c (1 + exp(c |p|^(1/2))))
//! a = 1/2: k_c(p) = p^2 / 2
//! ```
//!
//! All functions act coordinate-wise with an identity mass matrix.

use std::fmt;

use rand::{Rng, RngCore};
use rand_distr::{Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::SamplerError;

/// Maximum number of rejected proposals per coordinate before
/// [`sample_momentum`] gives up.
pub const MAX_REJECTIONS: u64 = 10_000;

/// Below this value of `s = |p|^(1/2)` the `a = 2` gradient uses its
/// leading-order series.
pub const TAYLOR_THRESHOLD: f64 = 1e-6;

/// Floor on `s = |p|^(1/2)` in the `a = 2` curvature. The exact second
/// derivative grows like `c^2 / (16 s)` near the origin.
pub const CURVATURE_FLOOR: f64 = 1e-3;

/// Supported monomial parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub enum Monomial {
    /// `a = 1/2`: Gaussian kinetics.
    Half,
    /// `a = 1`: Laplace-tailed kinetics.
    One,
    /// `a = 2`: `exp(-|p|^(1/2))` kinetics.
    Two,
}

impl Monomial {
    pub fn value(self) -> f64 {
        match self {
            Monomial::Half => 0.5,
            Monomial::One => 1.0,
            Monomial::Two => 2.0,
        }
    }
}

impl TryFrom<f64> for Monomial {
    type Error = String;

    fn try_from(a: f64) -> Result<Self, Self::Error> {
        if a == 0.5 {
            Ok(Monomial::Half)
        } else if a == 1.0 {
            Ok(Monomial::One)
        } else if a == 2.0 {
            Ok(Monomial::Two)
        } else {
            Err(format!(
                "unsupported monomial parameter a = {a} (expected 0.5, 1 or 2)"
            ))
        }
    }
}

impl From<Monomial> for f64 {
    fn from(a: Monomial) -> f64 {
        a.value()
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Monomial::Half => write!(f, "1/2"),
            Monomial::One => write!(f, "1"),
            Monomial::Two => write!(f, "2"),
        }
    }
}

/// Monomial parameter plus softening.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KineticSpec {
    a: Monomial,
    c: f64,
}

impl KineticSpec {
    /// `c` must be finite and positive. It is ignored for `a = 1/2`.
    pub fn new(a: Monomial, c: f64) -> Result<Self, SamplerError> {
        if !(c.is_finite() && c > 0.0) {
            return Err(SamplerError::InvalidConfig(format!(
                "softening c must be positive and finite, got {c}"
            )));
        }
        Ok(KineticSpec { a, c })
    }

    /// Gaussian kinetics `p^2 / 2`.
    pub fn quadratic() -> Self {
        KineticSpec {
            a: Monomial::Half,
            c: 1.0,
        }
    }

    pub fn monomial(&self) -> Monomial {
        self.a
    }

    pub fn softening(&self) -> f64 {
        self.c
    }

    /// Stiff kinetic energy of one coordinate.
    pub fn stiff(&self, p: f64) -> f64 {
        match self.a {
            Monomial::Half => 0.5 * p * p,
            Monomial::One => p.abs(),
            Monomial::Two => p.abs().sqrt(),
        }
    }

    /// Softened kinetic energy of one coordinate.
    pub fn soft(&self, p: f64) -> f64 {
        let c = self.c;
        match self.a {
            Monomial::Half => 0.5 * p * p,
            // -p + (2/c) log(1 + e^{cp}), rearranged to be exactly even in p
            Monomial::One => p.abs() + 2.0 / c * (-c * p.abs()).exp().ln_1p(),
            Monomial::Two => {
                let s = p.abs().sqrt();
                // 4 / (c (1 + e^{cs})) written as (4/c) * sigmoid(-cs)
                s + 4.0 / c * sigmoid(-c * s)
            }
        }
    }

    /// First derivative of [`KineticSpec::soft`].
    pub fn soft_grad(&self, p: f64) -> f64 {
        let c = self.c;
        match self.a {
            Monomial::Half => p,
            Monomial::One => (0.5 * c * p).tanh(),
            Monomial::Two => {
                let s = p.abs().sqrt();
                if s < TAYLOR_THRESHOLD {
                    c * c / 8.0 * s * p.signum_or_zero()
                } else {
                    let t = (0.5 * c * s).tanh();
                    t * t * p.signum() / (2.0 * s)
                }
            }
        }
    }

    /// Second derivative of [`KineticSpec::soft`]. For `a = 2` the value is
    /// evaluated at `max(|p|^(1/2), CURVATURE_FLOOR)`.
    pub fn soft_hess(&self, p: f64) -> f64 {
        let c = self.c;
        match self.a {
            Monomial::Half => 1.0,
            Monomial::One => {
                let sech = 1.0 / (0.5 * c * p).cosh();
                0.5 * c * sech * sech
            }
            Monomial::Two => {
                let s = p.abs().sqrt().max(CURVATURE_FLOOR);
                let x = 0.5 * c * s;
                let t = x.tanh();
                let sech = 1.0 / x.cosh();
                (c * s * t * sech * sech - t * t) / (4.0 * s * s * s)
            }
        }
    }

    /// Supremum of `|soft_grad|` over all momenta.
    ///
    /// For `a = 1` this is 1. For `a = 2` it is `c * max_x tanh(x)^2 / (4x)`,
    /// which is about `0.146 c`, so it only stays below 1 for `c < 6.87`.
    pub fn grad_bound(&self) -> f64 {
        match self.a {
            Monomial::Half => f64::INFINITY,
            Monomial::One => 1.0,
            Monomial::Two => self.c * TANH2_OVER_X_MAX / 4.0,
        }
    }
}

/// `max_x tanh(x)^2 / x`, attained near `x = 1.0887`.
const TANH2_OVER_X_MAX: f64 = 0.582_582_908_365_148_5;

trait SignumOrZero {
    fn signum_or_zero(self) -> f64;
}

impl SignumOrZero for f64 {
    fn signum_or_zero(self) -> f64 {
        if self == 0.0 {
            0.0
        } else {
            self.signum()
        }
    }
}

/// `log(1 + e^x)` without overflow.
pub fn log1p_exp(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Logistic function, stable for large `|x|`.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn check_finite(p: &[f64]) -> Result<(), SamplerError> {
    match p.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(SamplerError::Domain(format!(
            "non-finite momentum coordinate {i}: {}",
            p[i]
        ))),
        None => Ok(()),
    }
}

/// `sum_d k(p_d)` for the stiff kinetics.
pub fn stiff_energy(p: &[f64], spec: &KineticSpec) -> Result<f64, SamplerError> {
    check_finite(p)?;
    Ok(p.iter().map(|&v| spec.stiff(v)).sum())
}

/// `sum_d k_c(p_d)` for the softened kinetics.
pub fn soft_energy(p: &[f64], spec: &KineticSpec) -> Result<f64, SamplerError> {
    check_finite(p)?;
    Ok(p.iter().map(|&v| spec.soft(v)).sum())
}

pub fn soft_grad(p: &[f64], spec: &KineticSpec) -> Result<Vec<f64>, SamplerError> {
    check_finite(p)?;
    Ok(p.iter().map(|&v| spec.soft_grad(v)).collect())
}

pub fn soft_hess_diag(p: &[f64], spec: &KineticSpec) -> Result<Vec<f64>, SamplerError> {
    check_finite(p)?;
    Ok(p.iter().map(|&v| spec.soft_hess(v)).collect())
}

/// Momentum draw plus the number of rejected proposals it took.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentumSample {
    pub value: Vec<f64>,
    pub rejections: u64,
}

/// Draw `dim` i.i.d. momenta from the density proportional to `exp(-k_c(p))`.
///
/// Each coordinate is proposed from the stiff marginal, `p = ±G^a` with
/// `G ~ Gamma(a, 1)`, and accepted with probability `exp(k(p) - k_c(p))`.
/// Random draws per proposal, in order: one gamma variate, one sign bit, one
/// uniform for acceptance. `a = 1/2` consumes exactly one standard normal
/// per coordinate.
pub fn sample_momentum(
    spec: &KineticSpec,
    dim: usize,
    rng: &mut dyn RngCore,
) -> Result<MomentumSample, SamplerError> {
    let mut value = Vec::with_capacity(dim);
    let mut rejections = 0;
    match spec.a {
        Monomial::Half => {
            value.extend((0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)));
        }
        Monomial::One | Monomial::Two => {
            let gamma = Gamma::new(spec.a.value(), 1.0).expect("shape is positive");
            for d in 0..dim {
                let mut tries = 0;
                loop {
                    let p = propose_stiff(spec.a, &gamma, rng);
                    if rng.random::<f64>() < (spec.stiff(p) - spec.soft(p)).exp() {
                        value.push(p);
                        break;
                    }
                    tries += 1;
                    if tries >= MAX_REJECTIONS {
                        return Err(SamplerError::RejectionCap {
                            coordinate: d,
                            tries,
                        });
                    }
                }
                rejections += tries;
            }
        }
    }
    Ok(MomentumSample { value, rejections })
}

/// Draw `dim` momenta from the stiff marginal `exp(-|p|^(1/a))` only.
pub fn sample_stiff_momentum(spec: &KineticSpec, dim: usize, rng: &mut dyn RngCore) -> Vec<f64> {
    match spec.a {
        Monomial::Half => (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect(),
        a => {
            let gamma = Gamma::new(a.value(), 1.0).expect("shape is positive");
            (0..dim).map(|_| propose_stiff(a, &gamma, rng)).collect()
        }
    }
}

fn propose_stiff(a: Monomial, gamma: &Gamma<f64>, rng: &mut dyn RngCore) -> f64 {
    let g: f64 = rng.sample(gamma);
    let magnitude = match a {
        Monomial::Two => g * g,
        _ => g,
    };
    if rng.random::<bool>() {
        magnitude
    } else {
        -magnitude
    }
}

/// Thermostat draws from `exp(-|xi|^2 / 2)`: `dim` standard normals.
pub fn sample_thermostat(dim: usize, rng: &mut dyn RngCore) -> Vec<f64> {
    (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}
