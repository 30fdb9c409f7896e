//! Discretized samplers and the chain runner.
//!
//! Every stepper maps a [`SamplerState`] to a new one and never touches the
//! model. Random draws per step, in order:
//!
//! 1. whatever [`Potential::stoch_grad`] consumes (one call per step),
//! 2. `dim` standard normals for the momentum noise, if its variance is positive,
//! 3. `dim` standard normals for the parameter noise, if its variance is positive,
//! 4. `dim` standard normals for the thermostat noise, if its variance is positive.
//!
//! Under this contract SGNHT, SGMGT with `a = 1/2` and SGMGT-D with
//! `sigma_theta = sigma_xi = 0`, `gamma = 1`, `sigma_p = A`, `a = 1/2` produce
//! bitwise identical trajectories from the same seed.
//!
//! # Thermostat coordinate
//!
//! `SamplerState::xi` holds the total friction acting on the momentum. For
//! SGNHT and SGMGT that is the thermostat itself; its marginal is
//! `N(A, 1)`. For SGMGT-D the friction is `zeta = sigma_p + gamma * xi` where
//! `xi ~ N(0, 1)` is the thermostat with `F(xi) = xi^2 / 2`, so the stored
//! value has marginal `N(sigma_p, gamma^2)` and evolves as
//!
//! ```text
//! d zeta = [gamma^2 (g.g - K'') - sigma_xi (zeta - sigma_p)] dt + gamma sqrt(2 sigma_xi) dW
//! ```
//!
//! For SGHMC it is the constant `A`; SGLD and MGHMC keep it at zero.

use std::fmt;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::SamplerError;
use crate::kinetics::{sample_momentum, KineticSpec, Monomial};
use crate::potentials::Potential;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Sgld,
    Sghmc,
    Sgnht,
    Sgmgt,
    SgmgtD,
    Mghmc,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Sgld,
        Algorithm::Sghmc,
        Algorithm::Sgnht,
        Algorithm::Sgmgt,
        Algorithm::SgmgtD,
        Algorithm::Mghmc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Sgld => "sgld",
            Algorithm::Sghmc => "sghmc",
            Algorithm::Sgnht => "sgnht",
            Algorithm::Sgmgt => "sgmgt",
            Algorithm::SgmgtD => "sgmgt-d",
            Algorithm::Mghmc => "mghmc",
        }
    }

    fn has_momentum_resampling(self) -> bool {
        matches!(
            self,
            Algorithm::Sghmc | Algorithm::Sgnht | Algorithm::Sgmgt | Algorithm::SgmgtD
        )
    }

    fn has_thermostat(self) -> bool {
        matches!(self, Algorithm::Sgnht | Algorithm::Sgmgt | Algorithm::SgmgtD)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s.to_ascii_lowercase())
            .ok_or_else(|| format!("unknown algorithm `{s}`"))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    #[default]
    Euler,
    Splitting,
}

/// Sampler hyperparameters. Resampling periods of 0 disable resampling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerConfig {
    pub algorithm: Algorithm,
    /// Kinetic monomial parameter.
    pub a: Monomial,
    /// Kinetic softening.
    pub c: f64,
    pub h: f64,
    /// Diffusion factor `A` of SGHMC, SGNHT and SGMGT.
    pub diffusion: f64,
    pub sigma_theta: f64,
    pub sigma_p: f64,
    pub sigma_xi: f64,
    pub gamma: f64,
    pub t_p: u64,
    pub t_xi: u64,
    pub integrator: Integrator,
    pub n_iters: u64,
    pub n_burnin: u64,
    pub thin: u64,
    pub leapfrog_steps: usize,
    pub seed: u64,
    pub init_theta: Option<Vec<f64>>,
    pub record_energy: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            algorithm: Algorithm::Sgmgt,
            a: Monomial::One,
            c: 5.0,
            h: 0.01,
            diffusion: 1.0,
            sigma_theta: 0.0,
            sigma_p: 1.0,
            sigma_xi: 0.0,
            gamma: 1.0,
            t_p: 100,
            t_xi: 100,
            integrator: Integrator::Euler,
            n_iters: 10_000,
            n_burnin: 0,
            thin: 1,
            leapfrog_steps: 10,
            seed: 0,
            init_theta: None,
            record_energy: false,
        }
    }
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), SamplerError> {
    if cond {
        Ok(())
    } else {
        Err(SamplerError::InvalidConfig(msg()))
    }
}

fn nonneg(name: &str, v: f64) -> Result<(), SamplerError> {
    check(v.is_finite() && v >= 0.0, || format!("{name} must be nonnegative, got {v}"))
}

impl SamplerConfig {
    pub fn with_algorithm(algorithm: Algorithm) -> Self {
        SamplerConfig {
            algorithm,
            ..SamplerConfig::default()
        }
    }

    /// Kinetic energy used by the dynamics. SGHMC and SGNHT always use the
    /// quadratic one.
    pub fn kinetic(&self) -> Result<KineticSpec, SamplerError> {
        match self.algorithm {
            Algorithm::Sgld | Algorithm::Sghmc | Algorithm::Sgnht => Ok(KineticSpec::quadratic()),
            _ => KineticSpec::new(self.a, self.c),
        }
    }

    pub fn validate(&self) -> Result<(), SamplerError> {
        check(self.h.is_finite() && self.h > 0.0, || {
            format!("step size h must be positive, got {}", self.h)
        })?;
        check(self.n_burnin < self.n_iters, || {
            format!(
                "n_burnin ({}) must be smaller than n_iters ({})",
                self.n_burnin, self.n_iters
            )
        })?;
        check(self.thin > 0, || "thin must be positive".into())?;
        check(self.leapfrog_steps > 0, || "leapfrog_steps must be positive".into())?;
        nonneg("diffusion", self.diffusion)?;
        nonneg("sigma_theta", self.sigma_theta)?;
        nonneg("sigma_p", self.sigma_p)?;
        nonneg("sigma_xi", self.sigma_xi)?;
        self.kinetic()?;
        if self.algorithm == Algorithm::SgmgtD {
            check(self.sigma_p > 0.0, || "sgmgt-d needs sigma_p > 0".into())?;
            check(self.gamma.is_finite() && self.gamma > 0.0, || {
                format!("gamma must be positive, got {}", self.gamma)
            })?;
        }
        if self.integrator == Integrator::Splitting {
            check(
                !matches!(self.algorithm, Algorithm::Sgld | Algorithm::Mghmc),
                || format!("the splitting integrator does not apply to {}", self.algorithm),
            )?;
        }
        Ok(())
    }

    /// Drift and noise coefficients in the SGMGT-D parametrization.
    fn coefficients(&self) -> Coefficients {
        match self.algorithm {
            Algorithm::SgmgtD => Coefficients {
                sigma_p: self.sigma_p,
                sigma_theta: self.sigma_theta,
                sigma_xi: self.sigma_xi,
                gamma: self.gamma,
            },
            Algorithm::Sghmc => Coefficients {
                sigma_p: self.diffusion,
                sigma_theta: 0.0,
                sigma_xi: 0.0,
                gamma: 0.0,
            },
            _ => Coefficients {
                sigma_p: self.diffusion,
                sigma_theta: 0.0,
                sigma_xi: 0.0,
                gamma: 1.0,
            },
        }
    }

    /// Mean and scale of the stored friction coordinate at equilibrium.
    fn friction_marginal(&self) -> (f64, f64) {
        let k = self.coefficients();
        match self.algorithm {
            Algorithm::Sgnht | Algorithm::Sgmgt | Algorithm::SgmgtD => (k.sigma_p, k.gamma),
            Algorithm::Sghmc => (self.diffusion, 0.0),
            Algorithm::Sgld | Algorithm::Mghmc => (0.0, 0.0),
        }
    }

    fn expected_samples(&self) -> u64 {
        (self.n_iters - self.n_burnin) / self.thin
    }
}

#[derive(Clone, Copy, Debug)]
struct Coefficients {
    sigma_p: f64,
    sigma_theta: f64,
    sigma_xi: f64,
    gamma: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamplerState {
    pub theta: Vec<f64>,
    pub p: Vec<f64>,
    pub xi: Vec<f64>,
    /// Completed steps.
    pub iter: u64,
}

impl SamplerState {
    pub fn new(theta: Vec<f64>, p: Vec<f64>, xi: Vec<f64>) -> Result<Self, SamplerError> {
        for v in [&p, &xi] {
            if v.len() != theta.len() {
                return Err(SamplerError::DimensionMismatch {
                    expected: theta.len(),
                    got: v.len(),
                });
            }
        }
        Ok(SamplerState { theta, p, xi, iter: 0 })
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    /// Initial state: `theta` from the config (zero otherwise), momentum and
    /// friction from their marginals.
    pub fn init(
        dim: usize,
        config: &SamplerConfig,
        rng: &mut dyn RngCore,
    ) -> Result<Self, SamplerError> {
        let theta = match &config.init_theta {
            Some(t) if t.len() != dim => {
                return Err(SamplerError::DimensionMismatch {
                    expected: dim,
                    got: t.len(),
                })
            }
            Some(t) => t.clone(),
            None => vec![0.0; dim],
        };
        let p = match config.algorithm {
            Algorithm::Sgld | Algorithm::Mghmc => vec![0.0; dim],
            _ => sample_momentum(&config.kinetic()?, dim, rng)?.value,
        };
        let xi = draw_friction(config, dim, rng);
        Ok(SamplerState { theta, p, xi, iter: 0 })
    }

    /// `U(theta) + K_c(p) + F(xi)` for the configured sampler.
    pub fn hamiltonian(&self, model: &dyn Potential, config: &SamplerConfig) -> f64 {
        let u = model.energy(&self.theta);
        if config.algorithm == Algorithm::Sgld {
            return u;
        }
        let kinetic = config.kinetic().unwrap_or_else(|_| KineticSpec::quadratic());
        let k: f64 = self.p.iter().map(|&v| kinetic.soft(v)).sum();
        let (offset, scale) = config.friction_marginal();
        let f = if scale > 0.0 {
            self.xi
                .iter()
                .map(|&z| 0.5 * ((z - offset) / scale).powi(2))
                .sum()
        } else {
            0.0
        };
        u + k + f
    }

    fn check_finite(&self, iter: u64) -> Result<(), SamplerError> {
        for (name, v) in [("theta", &self.theta), ("p", &self.p), ("xi", &self.xi)] {
            if let Some(i) = v.iter().position(|x| !x.is_finite()) {
                return Err(SamplerError::Divergence {
                    iter,
                    detail: format!("{name}[{i}] = {}", v[i]),
                });
            }
        }
        Ok(())
    }
}

fn draw_friction(config: &SamplerConfig, dim: usize, rng: &mut dyn RngCore) -> Vec<f64> {
    let (offset, scale) = config.friction_marginal();
    if config.algorithm.has_thermostat() {
        (0..dim)
            .map(|_| offset + scale * rng.sample::<f64, _>(StandardNormal))
            .collect()
    } else {
        vec![offset; dim]
    }
}

fn normal(rng: &mut dyn RngCore) -> f64 {
    rng.sample(StandardNormal)
}

fn stoch_grad(
    model: &dyn Potential,
    theta: &[f64],
    rng: &mut dyn RngCore,
) -> Result<Vec<f64>, SamplerError> {
    let g = model.stoch_grad(theta, rng);
    if g.len() != theta.len() {
        return Err(SamplerError::DimensionMismatch {
            expected: theta.len(),
            got: g.len(),
        });
    }
    Ok(g)
}

fn finish(mut next: SamplerState) -> Result<SamplerState, SamplerError> {
    next.iter += 1;
    next.check_finite(next.iter)?;
    Ok(next)
}

/// `theta <- theta - h grad + sqrt(2h) N`.
pub fn step_sgld(
    state: &SamplerState,
    model: &dyn Potential,
    config: &SamplerConfig,
    rng: &mut dyn RngCore,
) -> Result<SamplerState, SamplerError> {
    let h = config.h;
    let grad = stoch_grad(model, &state.theta, rng)?;
    let scale = (2.0 * h).sqrt();
    let mut next = state.clone();
    for (t, g) in next.theta.iter_mut().zip(&grad) {
        *t = *t - h * g + scale * normal(rng);
    }
    finish(next)
}

/// Constant friction `A`, quadratic kinetics.
pub fn step_sghmc(
    state: &SamplerState,
    model: &dyn Potential,
    config: &SamplerConfig,
    rng: &mut dyn RngCore,
) -> Result<SamplerState, SamplerError> {
    let (h, a) = (config.h, config.diffusion);
    let grad = stoch_grad(model, &state.theta, rng)?;
    let mut next = state.clone();
    for (p, g) in next.p.iter_mut().zip(&grad) {
        *p -= h * (g + a * *p);
    }
    add_noise(&mut next.p, 2.0 * a * h, 1.0, rng);
    for (t, p) in next.theta.iter_mut().zip(&next.p) {
        *t += h * p;
    }
    finish(next)
}

fn add_noise(v: &mut [f64], variance: f64, scale: f64, rng: &mut dyn RngCore) {
    if variance > 0.0 {
        let sd = variance.sqrt();
        for x in v.iter_mut() {
            *x += scale * (sd * normal(rng));
        }
    }
}

/// Nosé–Hoover thermostat with quadratic kinetics.
pub fn step_sgnht(
    state: &SamplerState,
    model: &dyn Potential,
    config: &SamplerConfig,
    rng: &mut dyn RngCore,
) -> Result<SamplerState, SamplerError> {
    let (h, a) = (config.h, config.diffusion);
    let grad = stoch_grad(model, &state.theta, rng)?;
    let mut next = state.clone();
    for ((p, g), xi) in next.p.iter_mut().zip(&grad).zip(&state.xi) {
        *p -= h * (g + xi * *p);
    }
    add_noise(&mut next.p, 2.0 * a * h, 1.0, rng);
    for (t, p) in next.theta.iter_mut().zip(&next.p) {
        *t += h * p;
    }
    for (xi, p) in next.xi.iter_mut().zip(&next.p) {
        *xi += h * (p * p - 1.0);
    }
    finish(next)
}

/// Thermostat dynamics with the softened kinetic energy.
pub fn step_sgmgt(
    state: &SamplerState,
    model: &dyn Potential,
    config: &SamplerConfig,
    rng: &mut dyn RngCore,
) -> Result<SamplerState, SamplerError> {
    let (h, a) = (config.h, config.diffusion);
    let kin = config.kinetic()?;
    let grad = stoch_grad(model, &state.theta, rng)?;
    let mut next = state.clone();
    for ((p, g), xi) in next.p.iter_mut().zip(&grad).zip(&state.xi) {
        *p -= h * (g + xi * kin.soft_grad(*p));
    }
    add_noise(&mut next.p, 2.0 * a * h, 1.0, rng);
    for (t, p) in next.theta.iter_mut().zip(&next.p) {
        *t += h * kin.soft_grad(*p);
    }
    for (xi, &p) in next.xi.iter_mut().zip(&next.p) {
        let g = kin.soft_grad(p);
        *xi += h * (g * g - kin.soft_hess(p));
    }
    finish(next)
}

/// Generalized thermostat dynamics with Brownian terms on every line.
/// `xi` holds the friction `sigma_p + gamma * thermostat`; see the module
/// documentation.
pub fn step_sgmgt_d(
    state: &SamplerState,
    model: &dyn Potential,
    config: &SamplerConfig,
    rng: &mut dyn RngCore,
) -> Result<SamplerState, SamplerError> {
    euler_generalized(state, model, &config.kinetic()?, config.h, config.coefficients(), rng)
}

fn euler_generalized(
    state: &SamplerState,
    model: &dyn Potential,
    kin: &KineticSpec,
    h: f64,
    k: Coefficients,
    rng: &mut dyn RngCore,
) -> Result<SamplerState, SamplerError> {
    let grad = stoch_grad(model, &state.theta, rng)?;
    let mut next = state.clone();
    for ((p, g), zeta) in next.p.iter_mut().zip(&grad).zip(&state.xi) {
        *p -= h * (zeta * kin.soft_grad(*p) + g);
    }
    add_noise(&mut next.p, 2.0 * k.sigma_p * h, 1.0, rng);
    for ((t, &p), g) in next.theta.iter_mut().zip(&next.p).zip(&grad) {
        *t += h * (kin.soft_grad(p) - k.sigma_theta * g);
    }
    add_noise(&mut next.theta, 2.0 * k.sigma_theta * h, 1.0, rng);
    for (zeta, &p) in next.xi.iter_mut().zip(&next.p) {
        let g = kin.soft_grad(p);
        *zeta += h * (k.gamma * k.gamma * (g * g - kin.soft_hess(p)) - k.sigma_xi * (*zeta - k.sigma_p));
    }
    add_noise(&mut next.xi, 2.0 * k.sigma_xi * h, k.gamma, rng);
    finish(next)
}

/// Symmetric splitting A(h/2) B(h/2) O(h) B(h/2) A(h/2).
///
/// A moves `theta` and the friction along the kinetic gradient, B applies
/// friction and the potential gradient to `p` (one gradient evaluation,
/// taken after the first A, shared by both B half-steps), O adds all
/// Brownian terms together with the first-order Langevin drifts of `theta`
/// and the friction. Applies to SGHMC, SGNHT, SGMGT and SGMGT-D through
/// their SGMGT-D coefficients. Draw order: gradient, `p` noise, `theta`
/// noise, friction noise.
pub fn splitting_step_sgmgt_d(
    state: &SamplerState,
    model: &dyn Potential,
    config: &SamplerConfig,
    rng: &mut dyn RngCore,
) -> Result<SamplerState, SamplerError> {
    splitting_generalized(state, model, &config.kinetic()?, config.h, config.coefficients(), rng)
}

fn splitting_generalized(
    state: &SamplerState,
    model: &dyn Potential,
    kin: &KineticSpec,
    h: f64,
    k: Coefficients,
    rng: &mut dyn RngCore,
) -> Result<SamplerState, SamplerError> {
    let half = 0.5 * h;
    let mut s = state.clone();
    let flow_a = |s: &mut SamplerState| {
        for ((t, zeta), &p) in s.theta.iter_mut().zip(s.xi.iter_mut()).zip(&s.p) {
            let g = kin.soft_grad(p);
            *t += half * g;
            *zeta += half * k.gamma * k.gamma * (g * g - kin.soft_hess(p));
        }
    };
    flow_a(&mut s);
    let grad = stoch_grad(model, &s.theta, rng)?;
    let flow_b = |s: &mut SamplerState| {
        for ((p, g), zeta) in s.p.iter_mut().zip(&grad).zip(&s.xi) {
            *p -= half * (zeta * kin.soft_grad(*p) + g);
        }
    };
    flow_b(&mut s);
    add_noise(&mut s.p, 2.0 * k.sigma_p * h, 1.0, rng);
    for (t, g) in s.theta.iter_mut().zip(&grad) {
        *t -= h * k.sigma_theta * g;
    }
    add_noise(&mut s.theta, 2.0 * k.sigma_theta * h, 1.0, rng);
    for zeta in s.xi.iter_mut() {
        *zeta -= h * k.sigma_xi * (*zeta - k.sigma_p);
    }
    add_noise(&mut s.xi, 2.0 * k.sigma_xi * h, k.gamma, rng);
    flow_b(&mut s);
    flow_a(&mut s);
    finish(s)
}

/// Outcome of one Metropolis-corrected trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct LeapfrogOutcome {
    pub state: SamplerState,
    pub accepted: bool,
}

/// Full-batch leapfrog with fresh momentum and a Metropolis test on
/// `U + K_c`. Draws: the momentum, then one uniform. A proposal that leaves
/// the finite range is rejected.
pub fn mghmc_leapfrog(
    state: &SamplerState,
    model: &dyn Potential,
    config: &SamplerConfig,
    rng: &mut dyn RngCore,
) -> Result<LeapfrogOutcome, SamplerError> {
    let kin = config.kinetic()?;
    let h = config.h;
    let dim = state.dim();
    let p0 = sample_momentum(&kin, dim, rng)?.value;
    let kinetic = |p: &[f64]| p.iter().map(|&v| kin.soft(v)).sum::<f64>();
    let h0 = model.energy(&state.theta) + kinetic(&p0);

    let mut theta = state.theta.clone();
    let mut p = p0.clone();
    let mut grad = model.grad(&theta);
    for _ in 0..config.leapfrog_steps {
        for (pi, g) in p.iter_mut().zip(&grad) {
            *pi -= 0.5 * h * g;
        }
        for (t, &pi) in theta.iter_mut().zip(&p) {
            *t += h * kin.soft_grad(pi);
        }
        grad = model.grad(&theta);
        for (pi, g) in p.iter_mut().zip(&grad) {
            *pi -= 0.5 * h * g;
        }
    }
    let h1 = model.energy(&theta) + kinetic(&p);
    let u: f64 = rng.random();
    let finite = h1.is_finite() && theta.iter().chain(&p).all(|v| v.is_finite());
    let accepted = finite && u < (h0 - h1).exp();
    let next = if accepted {
        SamplerState {
            theta,
            p,
            xi: state.xi.clone(),
            iter: state.iter + 1,
        }
    } else {
        SamplerState {
            theta: state.theta.clone(),
            p: p0,
            xi: state.xi.clone(),
            iter: state.iter + 1,
        }
    };
    Ok(LeapfrogOutcome { state: next, accepted })
}

/// What [`maybe_resample`] replaced.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Resampled {
    pub momentum: bool,
    pub thermostat: bool,
}

/// Resampling before iteration `state.iter + 1`: the momentum is redrawn
/// when `t_p` divides that iteration number, the friction when `t_xi` does.
/// No-op for SGLD and MGHMC and for disabled (zero) periods. SGHMC has no
/// thermostat to redraw.
pub fn maybe_resample(
    state: &SamplerState,
    config: &SamplerConfig,
    rng: &mut dyn RngCore,
) -> Result<(SamplerState, Resampled), SamplerError> {
    let upcoming = state.iter + 1;
    let due = |t: u64| t > 0 && upcoming % t == 0;
    let mut out = Resampled::default();
    let mut next = state.clone();
    if config.algorithm.has_momentum_resampling() && due(config.t_p) {
        next.p = sample_momentum(&config.kinetic()?, state.dim(), rng)?.value;
        out.momentum = true;
    }
    if config.algorithm.has_thermostat() && due(config.t_xi) {
        next.xi = draw_friction(config, state.dim(), rng);
        out.thermostat = true;
    }
    Ok((next, out))
}

/// Advance one iteration with the configured algorithm and integrator,
/// without resampling. Returns whether an MGHMC proposal was accepted.
pub fn step(
    state: &SamplerState,
    model: &dyn Potential,
    config: &SamplerConfig,
    rng: &mut dyn RngCore,
) -> Result<(SamplerState, bool), SamplerError> {
    let next = match (config.algorithm, config.integrator) {
        (Algorithm::Mghmc, _) => {
            let out = mghmc_leapfrog(state, model, config, rng)?;
            return Ok((out.state, out.accepted));
        }
        (Algorithm::Sgld, _) => step_sgld(state, model, config, rng)?,
        (_, Integrator::Splitting) => splitting_step_sgmgt_d(state, model, config, rng)?,
        (Algorithm::Sghmc, Integrator::Euler) => step_sghmc(state, model, config, rng)?,
        (Algorithm::Sgnht, Integrator::Euler) => step_sgnht(state, model, config, rng)?,
        (Algorithm::Sgmgt, Integrator::Euler) => step_sgmgt(state, model, config, rng)?,
        (Algorithm::SgmgtD, Integrator::Euler) => step_sgmgt_d(state, model, config, rng)?,
    };
    Ok((next, true))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainTrace {
    /// Retained `theta` after burn-in and thinning.
    pub samples: Vec<Vec<f64>>,
    /// Iteration number of each retained sample.
    pub iters: Vec<u64>,
    /// Hamiltonian at each retained sample, when requested.
    pub energies: Option<Vec<f64>>,
    pub accepted: u64,
    pub proposals: u64,
    pub momentum_resamples: u64,
    pub thermostat_resamples: u64,
    pub momentum_rejections: u64,
    pub config: SamplerConfig,
    pub seed: u64,
    /// Set when the chain aborted; the samples cover the iterations before it.
    pub failure: Option<SamplerError>,
}

impl ChainTrace {
    pub fn dim(&self) -> usize {
        self.samples.first().map_or(0, Vec::len)
    }

    /// Values of coordinate `d` across samples.
    pub fn coordinate(&self, d: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s[d]).collect()
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposals == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposals as f64
        }
    }
}

/// Run one chain with `config.seed`. Configuration problems are returned as
/// errors; failures during sampling end the chain early and are recorded in
/// [`ChainTrace::failure`].
pub fn run_chain(model: &dyn Potential, config: &SamplerConfig) -> Result<ChainTrace, SamplerError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut state = SamplerState::init(model.dim(), config, &mut rng)?;
    let mut trace = ChainTrace {
        samples: Vec::with_capacity(config.expected_samples() as usize),
        iters: Vec::with_capacity(config.expected_samples() as usize),
        energies: config.record_energy.then(Vec::new),
        accepted: 0,
        proposals: 0,
        momentum_resamples: 0,
        thermostat_resamples: 0,
        momentum_rejections: 0,
        config: config.clone(),
        seed: config.seed,
        failure: None,
    };
    for iter in 1..=config.n_iters {
        match advance(&state, model, config, &mut rng, &mut trace) {
            Ok(next) => state = next,
            Err(e) => {
                trace.failure = Some(match e {
                    SamplerError::Divergence { .. } => e,
                    other => SamplerError::Divergence {
                        iter,
                        detail: other.to_string(),
                    },
                });
                break;
            }
        }
        if iter > config.n_burnin && (iter - config.n_burnin) % config.thin == 0 {
            trace.samples.push(state.theta.clone());
            trace.iters.push(iter);
            if let Some(e) = trace.energies.as_mut() {
                e.push(state.hamiltonian(model, config));
            }
        }
    }
    Ok(trace)
}

fn advance(
    state: &SamplerState,
    model: &dyn Potential,
    config: &SamplerConfig,
    rng: &mut dyn RngCore,
    trace: &mut ChainTrace,
) -> Result<SamplerState, SamplerError> {
    let (resampled, what) = maybe_resample(state, config, rng)?;
    trace.momentum_resamples += u64::from(what.momentum);
    trace.thermostat_resamples += u64::from(what.thermostat);
    let (next, accepted) = step(&resampled, model, config, rng)?;
    trace.proposals += 1;
    trace.accepted += u64::from(accepted);
    Ok(next)
}
