//! Compromise, diffusion, knowledge-gap and credibility functions.
//!
//! Everything here is a pure function of its arguments. Kernels return values
//! in `[0, 1]` on their domain; the diffusion functions return values in
//! `[0, 1]` on `[-1, 1]` and vanish at the extremes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest magnitude of the logistic exponent; beyond this the result is 0 or 1
/// to double precision.
const LOGISTIC_CLAMP: f64 = 500.0;

/// Compromise propensity between two agents.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    #[default]
    Unit,
    /// `1` when the opinion gap is strictly below `threshold`, else `0`.
    BoundedConfidence { threshold: f64 },
    /// Logistic in the knowledge gap, `1 / (1 + exp(a (x - x*)))`.
    KnowledgeGap { a: f64 },
    /// Product of an opinion factor and a knowledge factor.
    Product {
        opinion: Box<KernelSpec>,
        knowledge: Box<KernelSpec>,
    },
}

impl KernelSpec {
    pub fn bounded_confidence(threshold: f64) -> Self {
        KernelSpec::BoundedConfidence { threshold }
    }

    pub fn knowledge_gap(a: f64) -> Self {
        KernelSpec::KnowledgeGap { a }
    }

    /// True if any factor depends on the knowledge coordinate.
    pub fn uses_knowledge(&self) -> bool {
        match self {
            KernelSpec::Unit | KernelSpec::BoundedConfidence { .. } => false,
            KernelSpec::KnowledgeGap { .. } => true,
            KernelSpec::Product { opinion, knowledge } => {
                opinion.uses_knowledge() || knowledge.uses_knowledge()
            }
        }
    }

    /// True if `H(w, w*) = H(w*, w)` for every opinion pair and the kernel
    /// ignores knowledge.
    pub fn is_symmetric(&self) -> bool {
        !self.uses_knowledge()
    }

    pub fn validate(&self, field: &str) -> Result<()> {
        match self {
            KernelSpec::Unit => Ok(()),
            KernelSpec::BoundedConfidence { threshold } => {
                if threshold.is_finite() && (0.0..=2.0).contains(threshold) {
                    Ok(())
                } else {
                    Err(Error::config(
                        field,
                        "bounded-confidence threshold must lie in [0, 2]",
                    ))
                }
            }
            KernelSpec::KnowledgeGap { a } => {
                if a.is_finite() && *a > 1.0 {
                    Ok(())
                } else {
                    Err(Error::config(
                        field,
                        "knowledge-gap sharpness a must exceed 1",
                    ))
                }
            }
            KernelSpec::Product { opinion, knowledge } => {
                opinion.validate(&format!("{field}.opinion"))?;
                knowledge.validate(&format!("{field}.knowledge"))
            }
        }
    }
}

/// Evaluates the follower compromise kernel `P(w, w*; x, x*)`.
///
/// `knowledge` carries `(x, x*)` in heterogeneous mode. When it is `None` every
/// knowledge factor evaluates to 1, so only the opinion part `H` remains.
pub fn eval_p(w: f64, w_star: f64, knowledge: Option<(f64, f64)>, spec: &KernelSpec) -> f64 {
    match spec {
        KernelSpec::Unit => 1.0,
        KernelSpec::BoundedConfidence { threshold } => {
            if (w - w_star).abs() < *threshold {
                1.0
            } else {
                0.0
            }
        }
        KernelSpec::KnowledgeGap { a } => match knowledge {
            Some((x, x_star)) => eval_k(x, x_star, *a),
            None => 1.0,
        },
        KernelSpec::Product {
            opinion,
            knowledge: k,
        } => eval_p(w, w_star, knowledge, opinion) * eval_p(w, w_star, knowledge, k),
    }
}

/// Knowledge-gap propensity `1 / (1 + exp(a (x - x*)))`.
pub fn eval_k(x: f64, x_star: f64, a: f64) -> f64 {
    let t = (a * (x - x_star)).clamp(-LOGISTIC_CLAMP, LOGISTIC_CLAMP);
    1.0 / (1.0 + t.exp())
}

/// Credibility law of one leader group: `Psi(d) = (varsigma + d)^(-gamma)`
/// with `d` the distance of a leader from the group's initial mean opinion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Credibility {
    pub varsigma: f64,
    pub gamma: f64,
    /// Sharpness of the knowledge-gap logistic comparing `x` with `Psi`.
    pub sharpness: f64,
    /// Initial mean opinion `m_L(0)` of the group.
    pub anchor: f64,
}

impl Credibility {
    pub fn index(&self, v: f64) -> f64 {
        psi(self.varsigma, self.gamma, (v - self.anchor).abs())
    }
}

/// `Psi(d) = 1 / (varsigma + d)^gamma`.
pub fn psi(varsigma: f64, gamma: f64, d: f64) -> f64 {
    (varsigma + d).powf(-gamma)
}

/// Follower-leader propensity `R(w, v; x) = H(w, v) K(x, Psi(|v - m_L(0)|))`.
///
/// Without knowledge or credibility the result is `H(w, v)`.
pub fn eval_r(
    w: f64,
    v: f64,
    x: Option<f64>,
    credibility: Option<&Credibility>,
    opinion_part: &KernelSpec,
) -> f64 {
    let h = eval_p(w, v, None, opinion_part);
    match (x, credibility) {
        (Some(x), Some(c)) if h > 0.0 => h * eval_k(x, c.index(v), c.sharpness),
        _ => h,
    }
}

/// Local relevance of diffusion.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DiffusionSpec {
    /// `D(w) = 1 - w^2`.
    #[default]
    QuadraticCap,
    /// Piecewise-linear interpolation of `values` on a uniform grid over `[-1, 1]`.
    Tabulated { values: Vec<f64> },
}

impl DiffusionSpec {
    pub fn validate(&self, field: &str) -> Result<()> {
        match self {
            DiffusionSpec::QuadraticCap => Ok(()),
            DiffusionSpec::Tabulated { values } => {
                if values.len() < 2 {
                    return Err(Error::config(
                        field,
                        "tabulated diffusion needs at least two nodes",
                    ));
                }
                if values.iter().any(|d| !(0.0..=1.0).contains(d)) {
                    return Err(Error::config(
                        field,
                        "tabulated diffusion values must lie in [0, 1]",
                    ));
                }
                Ok(())
            }
        }
    }

    fn max_value(&self) -> f64 {
        match self {
            DiffusionSpec::QuadraticCap => 1.0,
            DiffusionSpec::Tabulated { values } => values.iter().copied().fold(0.0, f64::max),
        }
    }
}

pub fn eval_d(w: f64, spec: &DiffusionSpec) -> f64 {
    match spec {
        DiffusionSpec::QuadraticCap => 1.0 - w * w,
        DiffusionSpec::Tabulated { values } => {
            let n = values.len() - 1;
            let s = ((w.clamp(-1.0, 1.0) + 1.0) * 0.5 * n as f64).min(n as f64);
            let i = (s.floor() as usize).min(n - 1);
            let frac = s - i as f64;
            values[i] * (1.0 - frac) + values[i + 1] * frac
        }
    }
}

/// Which binary rule a noise variable enters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryRule {
    FollowerFollower,
    FollowerLeader,
    LeaderLeader,
}

/// Closed interval of admissible noise values; bounds may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseInterval {
    pub lo: f64,
    pub hi: f64,
}

impl NoiseInterval {
    pub fn contains_symmetric(&self, half_width: f64) -> bool {
        self.lo <= -half_width && half_width <= self.hi
    }
}

const BOUND_GRID: usize = 20_000;

/// `(min (1 - w)/D(w), min (1 + w)/D(w))` over the points where `D` is nonzero,
/// the `(X_+, X_-)` pair. `None` when `D` vanishes identically.
fn boundary_ratios(spec: &DiffusionSpec) -> Option<(f64, f64)> {
    match spec {
        // (1 -+ w) / (1 - w^2) = 1 / (1 +- w), minimized towards the far endpoint.
        DiffusionSpec::QuadraticCap => Some((0.5, 0.5)),
        DiffusionSpec::Tabulated { .. } => {
            let mut plus = f64::INFINITY;
            let mut minus = f64::INFINITY;
            for i in 0..=BOUND_GRID {
                let w = -1.0 + 2.0 * i as f64 / BOUND_GRID as f64;
                let d = eval_d(w, spec);
                if d > 0.0 {
                    plus = plus.min((1.0 - w) / d);
                    minus = minus.min((1.0 + w) / d);
                }
            }
            plus.is_finite().then_some((plus, minus))
        }
    }
}

/// Interval of noise values for which `rule` keeps opinions inside `[-1, 1]`.
///
/// Follower rules use `[-(1-alpha) F_-, (1-alpha) F_+]`. The leader rule uses
/// `[-(d_- - c), d_+ - c]` where `c = control_bound / max D`; with
/// `control_bound = 0` this is the `d` interval alone.
pub fn admissible_noise_bounds(
    rule: BinaryRule,
    spec: &DiffusionSpec,
    alpha: f64,
    control_bound: f64,
) -> Result<NoiseInterval> {
    let Some((plus, minus)) = boundary_ratios(spec) else {
        return Ok(NoiseInterval {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        });
    };
    let interval = match rule {
        BinaryRule::FollowerFollower | BinaryRule::FollowerLeader => NoiseInterval {
            lo: -(1.0 - alpha) * minus,
            hi: (1.0 - alpha) * plus,
        },
        BinaryRule::LeaderLeader => {
            let c = control_bound.abs() / spec.max_value();
            NoiseInterval {
                lo: -(minus - c),
                hi: plus - c,
            }
        }
    };
    if interval.lo > 0.0 || interval.hi < 0.0 || interval.lo > interval.hi {
        return Err(Error::config(
            format!("{rule:?}"),
            "noise support incompatible with bound preservation",
        ));
    }
    Ok(interval)
}
