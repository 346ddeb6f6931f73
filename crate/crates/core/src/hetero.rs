//! Heterogeneous followers: opinion dynamics coupled with a knowledge
//! coordinate that is exchanged in the same binary encounters.

use rand::Rng;

use crate::binary::{follower_pair_opinions, knowledge_pair, KnowledgeRates, NoiseSpec, Outcome};
use crate::kernels::{DiffusionSpec, KernelSpec};
use crate::scenario::KnowledgeConfig;
use crate::sim::Agent;

/// Knowledge dynamics after the quasi-invariant scaling.
#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeParams {
    pub rates: KnowledgeRates,
    /// Noise on the multiplicative knowledge term, variance already scaled.
    pub noise: NoiseSpec,
    /// Background knowledge is uniform on `[0, background_max]`.
    pub background_max: f64,
}

impl KnowledgeParams {
    pub fn from_config(cfg: &KnowledgeConfig, epsilon: f64) -> Self {
        KnowledgeParams {
            rates: cfg.rates(),
            noise: NoiseSpec::from_std(cfg.noise_std).scaled(epsilon * epsilon),
            background_max: cfg.background_max,
        }
    }

    pub fn background_mean(&self) -> f64 {
        0.5 * self.background_max
    }

    pub fn sample_background<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.background_max * rng.random::<f64>()
    }
}

/// Noise and background realizations of one heterogeneous encounter.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PairDraws {
    pub xi: f64,
    pub xi_star: f64,
    pub z: f64,
    pub kappa: f64,
    pub kappa_star: f64,
}

impl PairDraws {
    pub fn sample<R: Rng + ?Sized>(
        rng: &mut R,
        opinion_noise: &NoiseSpec,
        k: &KnowledgeParams,
    ) -> Self {
        PairDraws {
            xi: opinion_noise.sample(rng),
            xi_star: opinion_noise.sample(rng),
            z: k.sample_background(rng),
            kappa: k.noise.sample(rng),
            kappa_star: k.noise.sample(rng),
        }
    }
}

/// Joint opinion and knowledge exchange between two followers. Both
/// coordinates are computed from the pre-interaction states and the pair is
/// rejected as a whole if any coordinate leaves its domain.
pub fn follower_pair(
    a: Agent,
    b: Agent,
    alpha: f64,
    kernel: &KernelSpec,
    diffusion: &DiffusionSpec,
    k: &KnowledgeParams,
    draws: &PairDraws,
) -> Outcome<(Agent, Agent)> {
    let (w1, w2) = follower_pair_opinions(
        a.w,
        b.w,
        Some((a.x, b.x)),
        alpha,
        kernel,
        diffusion,
        draws.xi,
        draws.xi_star,
    );
    let (x1, x2) = knowledge_pair(
        a.x,
        b.x,
        draws.z,
        alpha,
        &k.rates,
        draws.kappa,
        draws.kappa_star,
    );
    let ok = (-1.0..=1.0).contains(&w1) && (-1.0..=1.0).contains(&w2) && x1 >= 0.0 && x2 >= 0.0;
    if ok {
        Outcome {
            accepted: true,
            post: (Agent { w: w1, x: x1 }, Agent { w: w2, x: x2 }),
        }
    } else {
        Outcome {
            accepted: false,
            post: (a, b),
        }
    }
}

/// Opinion and knowledge averages over the knowledge quartiles, lowest first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuartileStats {
    pub mean_opinion: [f64; 4],
    pub mean_knowledge: [f64; 4],
    pub count: [usize; 4],
}

pub fn knowledge_quartile_stats(agents: &[Agent]) -> QuartileStats {
    assert!(agents.len() >= 4, "need at least four followers");
    let mut sorted = agents.to_vec();
    sorted.sort_by(|a, b| a.x.total_cmp(&b.x));
    let n = sorted.len();
    let mut stats = QuartileStats {
        mean_opinion: [0.0; 4],
        mean_knowledge: [0.0; 4],
        count: [0; 4],
    };
    for q in 0..4 {
        let part = &sorted[q * n / 4..(q + 1) * n / 4];
        let len = part.len() as f64;
        stats.count[q] = part.len();
        stats.mean_opinion[q] = part.iter().map(|a| a.w).sum::<f64>() / len;
        stats.mean_knowledge[q] = part.iter().map(|a| a.x).sum::<f64>() / len;
    }
    stats
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(lambda: f64, lambda_c: f64, lambda_b: f64) -> KnowledgeParams {
        KnowledgeParams {
            rates: KnowledgeRates {
                lambda,
                lambda_c,
                lambda_b,
            },
            noise: NoiseSpec::default(),
            background_max: 10.0,
        }
    }

    #[test]
    fn knowledgeable_agent_resists() {
        let k = params(0.01, 0.005, 0.005);
        let kernel = KernelSpec::knowledge_gap(50.0);
        let expert = Agent { w: 0.5, x: 5.0 };
        let novice = Agent { w: -0.5, x: 0.1 };
        let o = follower_pair(
            expert,
            novice,
            0.1,
            &kernel,
            &DiffusionSpec::QuadraticCap,
            &k,
            &PairDraws::default(),
        );
        assert!(o.accepted);
        assert!((o.post.0.w - 0.5).abs() < 1e-12);
        assert!((o.post.1.w - (-0.5 + 0.1)).abs() < 1e-12);
    }

    #[test]
    fn pure_decay_matches_scalar_recursion() {
        let k = params(0.2, 0.0, 0.0);
        let kernel = KernelSpec::knowledge_gap(50.0);
        let mut a = Agent { w: 0.1, x: 3.0 };
        let mut b = Agent { w: 0.2, x: 1.0 };
        for n in 1..=50 {
            let o = follower_pair(
                a,
                b,
                0.1,
                &kernel,
                &DiffusionSpec::QuadraticCap,
                &k,
                &PairDraws::default(),
            );
            (a, b) = o.post;
            let decay = 0.98f64.powi(n);
            assert!((a.x - 3.0 * decay).abs() < 1e-12);
            assert!((b.x - 1.0 * decay).abs() < 1e-12);
        }
    }

    #[test]
    fn rejection_restores_both_coordinates() {
        let k = params(0.01, 0.005, 0.005);
        let a = Agent { w: 0.99, x: 1.0 };
        let b = Agent { w: 0.0, x: 2.0 };
        let draws = PairDraws {
            xi: 0.5,
            ..PairDraws::default()
        };
        let o = follower_pair(
            a,
            b,
            0.01,
            &KernelSpec::Unit,
            &DiffusionSpec::Tabulated {
                values: vec![1.0, 1.0],
            },
            &k,
            &draws,
        );
        assert!(!o.accepted);
        assert_eq!(o.post, (a, b));
    }

    #[test]
    fn quartiles_split_by_knowledge() {
        let agents: Vec<Agent> = (0..8)
            .map(|i| Agent {
                w: if i < 4 { 0.5 } else { -0.5 },
                x: 8.0 - i as f64,
            })
            .collect();
        let s = knowledge_quartile_stats(&agents);
        assert_eq!(s.count, [2; 4]);
        assert_eq!(s.mean_opinion, [-0.5, -0.5, 0.5, 0.5]);
        assert_eq!(s.mean_knowledge[0], 1.5);
    }
}
