//! Scalar reparameterizations and the adaptive random-walk kernel.
//!
//! Positive parameters move on the log scale, range parameters on the logit
//! scale of their uniform support. Each proposal deviation `λ` is tuned
//! toward a target acceptance rate by stochastic approximation with decaying
//! gain `γ_i = i^{−decay}`, so adaptation vanishes and ergodicity survives.

use rand::Rng;
use rand_distr::StandardNormal;

/// Hard caps on any adapted proposal scale.
pub const LAMBDA_MIN: f64 = 1e-6;
pub const LAMBDA_MAX: f64 = 1e3;

/// Bijection from a constrained parameter onto the real line.
#[derive(Clone, Copy, Debug)]
pub enum Transform {
    /// `x > 0 ↦ ln x`.
    Log,
    /// `x ∈ (lo, hi) ↦ logit((x − lo)/(hi − lo))`.
    Logit { lo: f64, hi: f64 },
}

fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

impl Transform {
    pub fn forward(&self, x: f64) -> f64 {
        match *self {
            Transform::Log => x.ln(),
            Transform::Logit { lo, hi } => {
                let w = (x - lo) / (hi - lo);
                (w / (1.0 - w)).ln()
            }
        }
    }

    pub fn inverse(&self, u: f64) -> f64 {
        match *self {
            Transform::Log => u.exp(),
            Transform::Logit { lo, hi } => lo + (hi - lo) * sigmoid(u),
        }
    }

    /// `ln |dx/du|` at `u`: the density correction for sampling on the
    /// transformed scale.
    pub fn log_jacobian(&self, u: f64) -> f64 {
        match *self {
            Transform::Log => u,
            Transform::Logit { lo, hi } => {
                let s = sigmoid(u);
                (hi - lo).ln() + s.ln() + (1.0 - s).ln()
            }
        }
    }
}

/// Robbins–Monro tuning of one proposal scale toward a target acceptance
/// rate, updated from the acceptance *probability* of every proposal
/// (including auto-rejected ones).
#[derive(Clone, Copy, Debug)]
pub struct AdaptiveScale {
    lambda: f64,
    iter: u64,
    target: f64,
    decay: f64,
}

impl AdaptiveScale {
    pub fn new(initial: f64, target: f64, decay: f64) -> AdaptiveScale {
        AdaptiveScale { lambda: initial.clamp(LAMBDA_MIN, LAMBDA_MAX), iter: 0, target, decay }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `ln λ ← ln λ + γ_i (α − α*)`, clamped to `[LAMBDA_MIN, LAMBDA_MAX]`.
    pub fn update(&mut self, accept_prob: f64) {
        self.iter += 1;
        let gain = (self.iter as f64).powf(-self.decay);
        self.lambda = (self.lambda * (gain * (accept_prob - self.target)).exp())
            .clamp(LAMBDA_MIN, LAMBDA_MAX);
    }
}

/// Outcome of one Metropolis–Hastings move.
#[derive(Clone, Copy, Debug)]
pub struct MhStep {
    /// The parameter after the move (the proposal if accepted, else unchanged).
    pub value: f64,
    /// Log target at `value`.
    pub log_target: f64,
    /// The acceptance probability of the proposal (zero when the target
    /// could not be evaluated there).
    pub accept_prob: f64,
    pub accepted: bool,
}

/// One adaptive random-walk move on the transformed scale.
///
/// `log_target` is the log posterior kernel in the *original*
/// parameterization; it is evaluated only at the proposal, with the current
/// value's kernel passed in as `current_lt`. A proposal where the target
/// cannot be evaluated (`None`, or a non-finite transform image) is rejected
/// with acceptance probability zero — the scale still adapts on it.
pub fn mh_step_with<F>(
    log_target: F,
    transform: Transform,
    current: f64,
    current_lt: f64,
    scale: &mut AdaptiveScale,
    rng: &mut impl Rng,
) -> MhStep
where
    F: FnOnce(f64) -> Option<f64>,
{
    let u = transform.forward(current);
    let z: f64 = rng.sample(StandardNormal);
    let u_prop = u + scale.lambda() * z;
    let x_prop = transform.inverse(u_prop);

    let mut accept_prob = 0.0;
    let mut proposal_lt = f64::NEG_INFINITY;
    if x_prop.is_finite() && u_prop.is_finite() {
        if let Some(lt) = log_target(x_prop) {
            let log_ratio =
                lt + transform.log_jacobian(u_prop) - current_lt - transform.log_jacobian(u);
            if !log_ratio.is_nan() {
                accept_prob = log_ratio.exp().min(1.0);
            }
            proposal_lt = lt;
        }
    }
    let accepted = accept_prob > 0.0 && rng.gen::<f64>() < accept_prob;
    scale.update(accept_prob);
    if accepted {
        MhStep { value: x_prop, log_target: proposal_lt, accept_prob, accepted }
    } else {
        MhStep { value: current, log_target: current_lt, accept_prob, accepted }
    }
}
