//! Monte Carlo time loop under the quasi-invariant scaling.
//!
//! One step of size `epsilon` runs three phases: follower pairs, follower to
//! leader encounters, and leader pairs inside each group. Within a phase the
//! particles are split into fixed-size chunks and each chunk draws from its
//! own ChaCha stream keyed by `(step, phase, chunk)`, so the outcome does not
//! depend on the number of worker threads. Shuffles and initial sampling use
//! a single master stream.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use rayon::ThreadPool;

use crate::best_reply::{limit_control, strategy_drifts, ControlSystem, StrategyParams};
use crate::binary::{follower_follower, follower_leader, leader_leader, LeaderKernel, NoiseSpec};
use crate::error::{Error, Result};
use crate::hetero::{
    follower_pair, knowledge_quartile_stats, KnowledgeParams, PairDraws, QuartileStats,
};
use crate::histogram::{Grid2D, Histogram};
use crate::kernels::{Credibility, DiffusionSpec, KernelSpec};
use crate::scenario::{ControlVariant, InitLaw, Mode, Scenario};

/// Particles handled by one random stream in the follower phases.
const CHUNK: usize = 8192;
/// Pairs handled by one random stream in the pairing phases.
const PAIR_CHUNK: usize = 4096;

const PHASE_FOLLOWERS: u64 = 0;
const PHASE_FOLLOWER_LEADER: u64 = 1;
const PHASE_LEADERS: u64 = 2;

/// A follower: opinion `w` and knowledge `x` (zero in homogeneous runs).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Agent {
    pub w: f64,
    pub x: f64,
}

#[derive(Debug, Clone)]
pub struct FollowerEnsemble {
    agents: Vec<Agent>,
    heterogeneous: bool,
}

impl FollowerEnsemble {
    pub fn new(agents: Vec<Agent>, heterogeneous: bool) -> Self {
        FollowerEnsemble {
            agents,
            heterogeneous,
        }
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn is_heterogeneous(&self) -> bool {
        self.heterogeneous
    }

    pub fn opinions(&self) -> impl Iterator<Item = f64> + '_ {
        self.agents.iter().map(|a| a.w)
    }

    pub fn mean_knowledge(&self) -> Option<f64> {
        self.heterogeneous
            .then(|| self.agents.iter().map(|a| a.x).sum::<f64>() / self.agents.len() as f64)
    }
}

/// One leader population with its runtime (scaled) parameters.
#[derive(Debug, Clone)]
pub struct LeaderGroup {
    pub opinions: Vec<f64>,
    /// Strategy with the unscaled penalization.
    pub strategy: StrategyParams,
    /// Mass `rho^k = N_k / N_F`.
    pub mass: f64,
    pub c_fl: f64,
    pub c_l: f64,
    pub kernel: KernelSpec,
    pub diffusion: DiffusionSpec,
    pub noise: NoiseSpec,
    pub follower_kernel: LeaderKernel,
    pub follower_diffusion: DiffusionSpec,
    pub follower_noise: NoiseSpec,
    /// Empirical mean opinion at `t = 0`.
    pub initial_mean: f64,
}

impl LeaderGroup {
    pub fn mean(&self) -> f64 {
        mean(self.opinions.iter().copied())
    }
}

/// The quasi-invariant scaling: `alpha = dt = epsilon`, noise variances
/// multiplied by `epsilon`, penalizations by `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingConfig {
    pub epsilon: f64,
}

impl ScalingConfig {
    pub fn alpha(&self) -> f64 {
        self.epsilon
    }

    pub fn dt(&self) -> f64 {
        self.epsilon
    }

    pub fn opinion_noise(&self, std: f64) -> NoiseSpec {
        NoiseSpec::from_std(std).scaled(self.epsilon)
    }

    pub fn scaled_nu(&self, nu: f64) -> f64 {
        self.epsilon * nu
    }
}

/// Empirical first and raw second moments.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentState {
    pub t: f64,
    pub m_f: f64,
    pub m_l: Vec<f64>,
    pub e_f: f64,
    pub e_l: Vec<f64>,
}

pub fn estimate_moments(
    t: f64,
    followers: &FollowerEnsemble,
    leaders: &[LeaderGroup],
) -> MomentState {
    let n = followers.len() as f64;
    let (s1, s2) = followers
        .agents
        .iter()
        .fold((0.0, 0.0), |(a, b), p| (a + p.w, b + p.w * p.w));
    let (m_l, e_l) = leaders
        .iter()
        .map(|g| {
            let k = g.opinions.len() as f64;
            let (a, b) = g
                .opinions
                .iter()
                .fold((0.0, 0.0), |(a, b), v| (a + v, b + v * v));
            (a / k, b / k)
        })
        .unzip();
    MomentState {
        t,
        m_f: s1 / n,
        m_l,
        e_f: s2 / n,
        e_l,
    }
}

/// Interaction attempts and rejections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Counter {
    pub attempted: u64,
    pub rejected: u64,
}

impl Counter {
    fn add(self, o: Counter) -> Counter {
        Counter {
            attempted: self.attempted + o.attempted,
            rejected: self.rejected + o.rejected,
        }
    }

    fn record(&mut self, accepted: bool) {
        self.attempted += 1;
        self.rejected += u64::from(!accepted);
    }

    pub fn rejection_rate(&self) -> f64 {
        if self.attempted == 0 {
            0.0
        } else {
            self.rejected as f64 / self.attempted as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct InteractionStats {
    pub follower_follower: Counter,
    pub follower_leader: Counter,
    pub leader_leader: Counter,
}

impl InteractionStats {
    pub fn total(&self) -> Counter {
        self.follower_follower
            .add(self.follower_leader)
            .add(self.leader_leader)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub followers: Histogram,
    pub leaders: Vec<Histogram>,
    pub grid: Option<Grid2D>,
    pub quartiles: Option<QuartileStats>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub name: String,
    /// Moments at every step, starting at `t = 0`.
    pub moments: Vec<MomentState>,
    /// Mean follower knowledge at every step, heterogeneous runs only.
    pub mean_knowledge: Option<Vec<f64>>,
    pub snapshots: Vec<Snapshot>,
    pub stats: InteractionStats,
    pub final_quartiles: Option<QuartileStats>,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    s / n as f64
}

fn sample_law<R: Rng + ?Sized>(law: &InitLaw, lo: f64, hi: f64, rng: &mut R) -> f64 {
    match *law {
        InitLaw::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
        InitLaw::Point { value } => value,
        InitLaw::Normal { mean, std } => {
            let normal = Normal::new(mean, std).expect("validated normal law");
            loop {
                let v = normal.sample(rng);
                if (lo..=hi).contains(&v) {
                    return v;
                }
            }
        }
    }
}

fn stream(seed: u64, step: u64, phase: u64, chunk: usize) -> ChaCha8Rng {
    debug_assert!(phase < 256 && chunk < (1 << 24));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((step + 1) << 32) | (phase << 24) | chunk as u64);
    rng
}

/// Number of failures before the next success of a Bernoulli(p) sequence.
fn geometric_skip<R: Rng + ?Sized>(rng: &mut R, p: f64) -> usize {
    if p >= 1.0 {
        return 0;
    }
    let u: f64 = rng.random();
    let k = ((1.0 - u).ln() / (1.0 - p).ln()).floor();
    if k >= 1e15 {
        usize::MAX / 2
    } else {
        k as usize
    }
}

fn for_chunks<T, F>(pool: Option<&ThreadPool>, data: &mut [T], size: usize, f: F) -> Counter
where
    T: Send,
    F: Fn(usize, &mut [T]) -> Counter + Sync + Send,
{
    match pool {
        None => data
            .chunks_mut(size)
            .enumerate()
            .map(|(i, c)| f(i, c))
            .fold(Counter::default(), Counter::add),
        Some(pool) => pool.install(|| {
            data.par_chunks_mut(size)
                .enumerate()
                .map(|(i, c)| f(i, c))
                .reduce(Counter::default, Counter::add)
        }),
    }
}

/// How the leaders' push is obtained in the current step.
enum Push {
    /// Fixed control per group.
    Fixed(Vec<f64>),
    /// Game control with the pair's local average replacing the own-group
    /// mean: `total + weight_k (m_L^k - local)`.
    Local {
        total: f64,
        weights: Vec<f64>,
        means: Vec<f64>,
    },
}

pub struct Simulation {
    name: String,
    seed: u64,
    scaling: ScalingConfig,
    control_variant: ControlVariant,
    steps_total: u64,
    snapshot_steps: Vec<u64>,
    bins: usize,
    display_max: f64,
    followers: FollowerEnsemble,
    leaders: Vec<LeaderGroup>,
    follower_kernel: KernelSpec,
    follower_diffusion: DiffusionSpec,
    follower_noise: NoiseSpec,
    follower_rate: f64,
    knowledge: Option<KnowledgeParams>,
    scaled_strategies: Vec<StrategyParams>,
    control: ControlSystem,
    master: ChaCha8Rng,
    step: u64,
    current: MomentState,
    stats: InteractionStats,
    pool: Option<ThreadPool>,
}

impl Simulation {
    /// Validates the scenario and samples the initial particles.
    pub fn new(scenario: &Scenario) -> Result<Self> {
        scenario.validate()?;
        let scaling = ScalingConfig {
            epsilon: scenario.epsilon,
        };
        let hetero = scenario.mode == Mode::Heterogeneous;
        let mut master = ChaCha8Rng::seed_from_u64(scenario.seed);

        let f = &scenario.follower;
        let agents: Vec<Agent> = (0..scenario.followers)
            .map(|_| {
                let w = sample_law(&f.init, -1.0, 1.0, &mut master);
                let x = match (&f.knowledge_init, hetero) {
                    (Some(law), true) => sample_law(law, 0.0, f64::INFINITY, &mut master),
                    _ => 0.0,
                };
                Agent { w, x }
            })
            .collect();

        let counts = scenario.leader_counts();
        let masses = scenario.leader_masses();
        let mut leaders = Vec::with_capacity(scenario.leaders.len());
        for ((cfg, n), mass) in scenario.leaders.iter().zip(counts).zip(masses) {
            let opinions: Vec<f64> = (0..n)
                .map(|_| sample_law(&cfg.init, -1.0, 1.0, &mut master))
                .collect();
            let initial_mean = mean(opinions.iter().copied());
            let credibility = cfg.credibility.map(|c| Credibility {
                varsigma: c.varsigma,
                gamma: c.gamma,
                sharpness: c.a,
                anchor: initial_mean,
            });
            leaders.push(LeaderGroup {
                opinions,
                strategy: cfg.strategy(),
                mass,
                c_fl: cfg.c_fl,
                c_l: cfg.c_l,
                kernel: cfg.kernel.clone(),
                diffusion: cfg.diffusion.clone(),
                noise: scaling.opinion_noise(cfg.noise_std),
                follower_kernel: LeaderKernel {
                    opinion: cfg.follower_kernel.clone(),
                    credibility,
                },
                follower_diffusion: cfg.follower_diffusion.clone(),
                follower_noise: scaling.opinion_noise(cfg.follower_noise_std),
                initial_mean,
            });
        }

        let followers = FollowerEnsemble::new(agents, hetero);
        let current = estimate_moments(0.0, &followers, &leaders);
        let knowledge = scenario
            .knowledge
            .as_ref()
            .filter(|_| hetero)
            .map(|k| KnowledgeParams::from_config(k, scenario.epsilon));
        let snapshot_steps = scenario
            .snapshot_times
            .iter()
            .map(|t| (t / scenario.epsilon).round() as u64)
            .collect();

        Ok(Simulation {
            name: scenario.name.clone(),
            seed: scenario.seed,
            scaling,
            control_variant: scenario.control,
            steps_total: scenario.steps(),
            snapshot_steps,
            bins: scenario.histogram_bins,
            display_max: scenario.knowledge.as_ref().map_or(1.0, |k| k.display_max()),
            followers,
            leaders,
            follower_kernel: f.kernel.clone(),
            follower_diffusion: f.diffusion.clone(),
            follower_noise: scaling.opinion_noise(f.noise_std),
            follower_rate: f.interaction_rate,
            knowledge,
            scaled_strategies: scenario.scaled_strategies(),
            control: scenario.control_system(),
            master,
            step: 0,
            current,
            stats: InteractionStats::default(),
            pool: None,
        })
    }

    /// Runs the phases on a pool of `threads` workers. Results are identical
    /// for every thread count.
    pub fn with_threads(mut self, threads: usize) -> Result<Self> {
        self.pool = if threads > 1 {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::config("threads", e.to_string()))?;
            Some(pool)
        } else {
            None
        };
        Ok(self)
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.scaling.dt()
    }

    pub fn step_index(&self) -> u64 {
        self.step
    }

    pub fn steps_total(&self) -> u64 {
        self.steps_total
    }

    pub fn followers(&self) -> &FollowerEnsemble {
        &self.followers
    }

    pub fn leaders(&self) -> &[LeaderGroup] {
        &self.leaders
    }

    pub fn moments(&self) -> &MomentState {
        &self.current
    }

    pub fn stats(&self) -> InteractionStats {
        self.stats
    }

    pub fn control_system(&self) -> &ControlSystem {
        &self.control
    }

    fn push(&self) -> Push {
        let m_f = self.current.m_f;
        let means = &self.current.m_l;
        let strategies = &self.scaled_strategies;
        let m = self.leaders.len();
        match self.control_variant {
            ControlVariant::Game => {
                let total = self
                    .control
                    .total_control(m_f, means, strategies)
                    .expect("well-posedness checked at construction");
                Push::Fixed(vec![total; m])
            }
            ControlVariant::ControlOnly => {
                let drifts = strategy_drifts(strategies, m_f, means);
                Push::Fixed(
                    (0..m)
                        .map(|k| self.control.isolated_control(k, drifts[k]))
                        .collect(),
                )
            }
            ControlVariant::Limit => {
                let unscaled: Vec<StrategyParams> =
                    self.leaders.iter().map(|g| g.strategy).collect();
                Push::Fixed(vec![limit_control(&unscaled, m_f, means); m])
            }
            ControlVariant::LocalAverage => {
                let total = self
                    .control
                    .total_control(m_f, means, strategies)
                    .expect("well-posedness checked at construction");
                let alpha = self.control.alpha();
                let weights = self
                    .control
                    .betas()
                    .iter()
                    .zip(self.control.col_sums())
                    .map(|(b, c)| b * c / (2.0 * alpha))
                    .collect();
                Push::Local {
                    total,
                    weights,
                    means: means.clone(),
                }
            }
        }
    }

    /// Advances one time step and returns the moments at the new time.
    pub fn step(&mut self) -> Result<&MomentState> {
        let push = self.push();
        let alpha = self.scaling.alpha();
        let step = self.step;
        let seed = self.seed;
        let pool = self.pool.as_ref();

        // follower pairs
        self.followers.agents.shuffle(&mut self.master);
        let paired = 2 * (self.followers.agents.len() / 2);
        let kernel = &self.follower_kernel;
        let diffusion = &self.follower_diffusion;
        let noise = &self.follower_noise;
        let rate = self.follower_rate;
        let knowledge = self.knowledge.as_ref();
        let c = for_chunks(
            pool,
            &mut self.followers.agents[..paired],
            2 * PAIR_CHUNK,
            |ci, chunk| {
                let mut rng = stream(seed, step, PHASE_FOLLOWERS, ci);
                let mut c = Counter::default();
                for pair in chunk.chunks_exact_mut(2) {
                    if rate < 1.0 && rng.random::<f64>() >= rate {
                        continue;
                    }
                    let (a, b) = (pair[0], pair[1]);
                    let accepted = match knowledge {
                        Some(k) => {
                            let draws = PairDraws::sample(&mut rng, noise, k);
                            let o = follower_pair(a, b, alpha, kernel, diffusion, k, &draws);
                            (pair[0], pair[1]) = o.post;
                            o.accepted
                        }
                        None => {
                            let (xi, xi_star) = (noise.sample(&mut rng), noise.sample(&mut rng));
                            let o = follower_follower(
                                a.w, b.w, None, alpha, kernel, diffusion, xi, xi_star,
                            );
                            (pair[0].w, pair[1].w) = o.post;
                            o.accepted
                        }
                    };
                    c.record(accepted);
                }
                c
            },
        );
        self.stats.follower_follower = self.stats.follower_follower.add(c);

        // followers meet leaders
        let leaders = &self.leaders;
        let hetero = self.followers.heterogeneous;
        let c = for_chunks(pool, &mut self.followers.agents, CHUNK, |ci, chunk| {
            let mut rng = stream(seed, step, PHASE_FOLLOWER_LEADER, ci);
            let mut c = Counter::default();
            for g in leaders {
                let mut i = geometric_skip(&mut rng, g.c_fl);
                while i < chunk.len() {
                    let v = g.opinions[rng.random_range(0..g.opinions.len())];
                    let xi = g.follower_noise.sample(&mut rng);
                    let a = &mut chunk[i];
                    let x = hetero.then_some(a.x);
                    let o = follower_leader(
                        a.w,
                        v,
                        x,
                        alpha,
                        &g.follower_kernel,
                        &g.follower_diffusion,
                        xi,
                    );
                    a.w = o.post;
                    c.record(o.accepted);
                    i = i.saturating_add(1 + geometric_skip(&mut rng, g.c_fl));
                }
            }
            c
        });
        self.stats.follower_leader = self.stats.follower_leader.add(c);

        // leader pairs inside each group
        for (k, g) in self.leaders.iter_mut().enumerate() {
            g.opinions.shuffle(&mut self.master);
            let paired = 2 * (g.opinions.len() / 2);
            let (kernel, diffusion, noise, rate) = (&g.kernel, &g.diffusion, &g.noise, g.c_l);
            let push = &push;
            let phase = PHASE_LEADERS + k as u64;
            let c = for_chunks(
                pool,
                &mut g.opinions[..paired],
                2 * PAIR_CHUNK,
                |ci, chunk| {
                    let mut rng = stream(seed, step, phase, ci);
                    let mut c = Counter::default();
                    for pair in chunk.chunks_exact_mut(2) {
                        if rate < 1.0 && rng.random::<f64>() >= rate {
                            continue;
                        }
                        let u = match push {
                            Push::Fixed(u) => u[k],
                            Push::Local {
                                total,
                                weights,
                                means,
                            } => total + weights[k] * (means[k] - 0.5 * (pair[0] + pair[1])),
                        };
                        let (eta, eta_star) = (noise.sample(&mut rng), noise.sample(&mut rng));
                        let o = leader_leader(
                            pair[0], pair[1], alpha, kernel, diffusion, eta, eta_star, u,
                        );
                        (pair[0], pair[1]) = o.post;
                        c.record(o.accepted);
                    }
                    c
                },
            );
            self.stats.leader_leader = self.stats.leader_leader.add(c);
        }

        self.step += 1;
        self.check_domain()?;
        self.current = estimate_moments(self.time(), &self.followers, &self.leaders);
        Ok(&self.current)
    }

    fn check_domain(&self) -> Result<()> {
        let bad_opinion = |w: f64| !(-1.0..=1.0).contains(&w);
        if let Some(a) = self
            .followers
            .agents
            .iter()
            .find(|a| bad_opinion(a.w) || !(a.x >= 0.0 && a.x.is_finite()))
        {
            return Err(Error::DomainViolation {
                step: self.step,
                what: format!("follower at (w, x) = ({}, {})", a.w, a.x),
            });
        }
        for (k, g) in self.leaders.iter().enumerate() {
            if let Some(v) = g.opinions.iter().find(|v| bad_opinion(**v)) {
                return Err(Error::DomainViolation {
                    step: self.step,
                    what: format!("leader of group {k} at {v}"),
                });
            }
        }
        Ok(())
    }

    pub fn snapshot(&self) -> Snapshot {
        let followers = Histogram::from_values(self.followers.opinions(), -1.0, 1.0, self.bins);
        let leaders = self
            .leaders
            .iter()
            .map(|g| Histogram::from_values(g.opinions.iter().copied(), -1.0, 1.0, self.bins))
            .collect();
        let (grid, quartiles) = if self.followers.heterogeneous {
            let mut grid = Grid2D::new(self.bins, self.bins, self.display_max);
            for a in &self.followers.agents {
                grid.add(a.w, a.x);
            }
            (
                Some(grid),
                Some(knowledge_quartile_stats(&self.followers.agents)),
            )
        } else {
            (None, None)
        };
        Snapshot {
            t: self.time(),
            followers,
            leaders,
            grid,
            quartiles,
        }
    }

    /// Steps to the horizon, recording moments every step and snapshots at
    /// the scheduled times.
    pub fn run(mut self) -> Result<RunRecord> {
        let hetero = self.followers.heterogeneous;
        let mut moments = vec![self.current.clone()];
        let mut knowledge = hetero.then(|| vec![self.followers.mean_knowledge().unwrap_or(0.0)]);
        let mut snapshots = Vec::new();
        if self.snapshot_steps.contains(&0) {
            snapshots.push(self.snapshot());
        }
        while self.step < self.steps_total {
            moments.push(self.step()?.clone());
            if let (Some(k), Some(m)) = (knowledge.as_mut(), self.followers.mean_knowledge()) {
                k.push(m);
            }
            if self.snapshot_steps.contains(&self.step) {
                snapshots.push(self.snapshot());
            }
        }
        Ok(RunRecord {
            name: self.name.clone(),
            moments,
            mean_knowledge: knowledge,
            snapshots,
            stats: self.stats,
            final_quartiles: hetero.then(|| knowledge_quartile_stats(&self.followers.agents)),
        })
    }
}

/// Validates, initializes and runs a scenario single-threaded.
pub fn run(scenario: &Scenario) -> Result<RunRecord> {
    Simulation::new(scenario)?.run()
}
