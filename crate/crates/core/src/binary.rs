//! Stochastic binary interaction rules.
//!
//! Every rule takes its noise realizations as arguments, so the functions are
//! deterministic and can be applied to disjoint pairs in any order. An
//! interaction whose outcome leaves the domain is rejected as a whole: both
//! agents keep their pre-interaction states.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::kernels::{eval_d, eval_p, eval_r, Credibility, DiffusionSpec, KernelSpec};

/// Zero-mean uniform noise with the given variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct NoiseSpec {
    pub variance: f64,
}

impl NoiseSpec {
    pub fn from_std(std: f64) -> Self {
        NoiseSpec {
            variance: std * std,
        }
    }

    pub fn half_width(&self) -> f64 {
        (3.0 * self.variance).sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        NoiseSpec {
            variance: self.variance * factor,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.variance == 0.0 {
            return 0.0;
        }
        let h = self.half_width();
        h * (2.0 * rng.random::<f64>() - 1.0)
    }
}

/// Result of one binary interaction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome<T> {
    pub accepted: bool,
    pub post: T,
}

impl<T> Outcome<T> {
    fn decide(pre: T, post: T, ok: bool) -> Self {
        Outcome {
            accepted: ok,
            post: if ok { post } else { pre },
        }
    }
}

#[inline]
fn in_opinion_domain(w: f64) -> bool {
    (-1.0..=1.0).contains(&w)
}

/// Follower-follower opinion exchange,
/// `w' = w + alpha P(w, w*) (w* - w) + xi D(w)` and symmetrically for `w*`.
///
/// `knowledge` carries `(x, x*)` when the kernel depends on knowledge.
#[allow(clippy::too_many_arguments)]
pub fn follower_follower(
    w: f64,
    w_star: f64,
    knowledge: Option<(f64, f64)>,
    alpha: f64,
    kernel: &KernelSpec,
    diffusion: &DiffusionSpec,
    xi: f64,
    xi_star: f64,
) -> Outcome<(f64, f64)> {
    let (w1, w2) =
        follower_pair_opinions(w, w_star, knowledge, alpha, kernel, diffusion, xi, xi_star);
    Outcome::decide(
        (w, w_star),
        (w1, w2),
        in_opinion_domain(w1) && in_opinion_domain(w2),
    )
}

#[allow(clippy::too_many_arguments)]
#[inline]
pub(crate) fn follower_pair_opinions(
    w: f64,
    w_star: f64,
    knowledge: Option<(f64, f64)>,
    alpha: f64,
    kernel: &KernelSpec,
    diffusion: &DiffusionSpec,
    xi: f64,
    xi_star: f64,
) -> (f64, f64) {
    let swapped = knowledge.map(|(x, xs)| (xs, x));
    let p = eval_p(w, w_star, knowledge, kernel);
    let p_star = eval_p(w_star, w, swapped, kernel);
    (
        w + alpha * p * (w_star - w) + xi * eval_d(w, diffusion),
        w_star + alpha * p_star * (w - w_star) + xi_star * eval_d(w_star, diffusion),
    )
}

/// Kernel of the follower-leader interaction: opinion part `H` and, in the
/// heterogeneous model, the group's credibility law.
#[derive(Debug, Clone, PartialEq)]
pub struct LeaderKernel {
    pub opinion: KernelSpec,
    pub credibility: Option<Credibility>,
}

impl LeaderKernel {
    pub fn eval(&self, w: f64, v: f64, x: Option<f64>) -> f64 {
        eval_r(w, v, x, self.credibility.as_ref(), &self.opinion)
    }
}

/// Follower-leader interaction, `w'' = w + alpha R(w, v) (v - w) + xi D(w)`;
/// the leader is unchanged.
pub fn follower_leader(
    w: f64,
    v: f64,
    x: Option<f64>,
    alpha: f64,
    kernel: &LeaderKernel,
    diffusion: &DiffusionSpec,
    xi: f64,
) -> Outcome<f64> {
    let r = kernel.eval(w, v, x);
    let post = w + alpha * r * (v - w) + xi * eval_d(w, diffusion);
    Outcome::decide(w, post, in_opinion_domain(post))
}

/// Leader-leader interaction inside one group,
/// `v' = v + alpha S(v, v*) (v* - v) + 2 alpha u + eta D(v)`.
#[allow(clippy::too_many_arguments)]
pub fn leader_leader(
    v: f64,
    v_star: f64,
    alpha: f64,
    kernel: &KernelSpec,
    diffusion: &DiffusionSpec,
    eta: f64,
    eta_star: f64,
    u_total: f64,
) -> Outcome<(f64, f64)> {
    let s = eval_p(v, v_star, None, kernel);
    let s_star = eval_p(v_star, v, None, kernel);
    let push = 2.0 * alpha * u_total;
    let v1 = v + alpha * s * (v_star - v) + push + eta * eval_d(v, diffusion);
    let v2 = v_star + alpha * s_star * (v - v_star) + push + eta_star * eval_d(v_star, diffusion);
    Outcome::decide(
        (v, v_star),
        (v1, v2),
        in_opinion_domain(v1) && in_opinion_domain(v2),
    )
}

/// Knowledge exchange rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeRates {
    /// Decay rate `lambda`.
    pub lambda: f64,
    /// Rate of absorption from the partner, `lambda_C`.
    pub lambda_c: f64,
    /// Rate of absorption from the background, `lambda_B`.
    pub lambda_b: f64,
}

/// `x' = (1 - alpha lambda) x + alpha lambda_C x* + alpha lambda_B z + kappa x`,
/// symmetrically for `x*`, with a single background draw `z`.
#[allow(clippy::too_many_arguments)]
pub fn knowledge_exchange(
    x: f64,
    x_star: f64,
    z: f64,
    alpha: f64,
    rates: &KnowledgeRates,
    kappa: f64,
    kappa_star: f64,
) -> Outcome<(f64, f64)> {
    let (x1, x2) = knowledge_pair(x, x_star, z, alpha, rates, kappa, kappa_star);
    Outcome::decide((x, x_star), (x1, x2), x1 >= 0.0 && x2 >= 0.0)
}

#[inline]
pub(crate) fn knowledge_pair(
    x: f64,
    x_star: f64,
    z: f64,
    alpha: f64,
    rates: &KnowledgeRates,
    kappa: f64,
    kappa_star: f64,
) -> (f64, f64) {
    let keep = 1.0 - alpha * rates.lambda;
    let from_partner = alpha * rates.lambda_c;
    let from_background = alpha * rates.lambda_b * z;
    (
        keep * x + from_partner * x_star + from_background + kappa * x,
        keep * x_star + from_partner * x + from_background + kappa_star * x_star,
    )
}
