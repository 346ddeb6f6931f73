//! Scenario description, validation, TOML round-trip and the preset library.
//!
//! A scenario is written as TOML. Noise intensities are given as standard
//! deviations before the quasi-invariant scaling; the simulator multiplies
//! the variances by `epsilon` (and the knowledge noise variance by
//! `epsilon^2`).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::best_reply::{ControlSystem, StrategyParams};
use crate::binary::{KnowledgeRates, NoiseSpec};
use crate::error::{Error, Result};
use crate::kernels::{admissible_noise_bounds, BinaryRule, DiffusionSpec, KernelSpec};

pub const PRESET_NAMES: [&str; 4] = ["test1", "test2a", "test2b", "test3"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Homogeneous,
    Heterogeneous,
}

/// How the leaders' control is computed each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ControlVariant {
    /// Best-reply game: every group applies the total control from global means.
    #[default]
    Game,
    /// Each group applies only its own uncoupled control.
    ControlOnly,
    /// Total control with the interacting pair's average replacing the group mean.
    LocalAverage,
    /// The quasi-invariant limit controller `sum (2/nu) F`.
    Limit,
}

/// Initial law of one coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum InitLaw {
    Uniform {
        low: f64,
        high: f64,
    },
    /// Normal law truncated to the coordinate's domain.
    Normal {
        mean: f64,
        std: f64,
    },
    Point {
        value: f64,
    },
}

impl InitLaw {
    fn validate(&self, field: &str, lo: f64, hi: f64) -> Result<()> {
        let inside = |v: f64| v.is_finite() && v >= lo && v <= hi;
        match *self {
            InitLaw::Uniform { low, high } => {
                if !(inside(low) && inside(high) && low < high) {
                    return Err(Error::config(
                        field,
                        format!("uniform law needs {lo} <= low < high <= {hi}"),
                    ));
                }
            }
            InitLaw::Normal { mean, std } => {
                if !(inside(mean) && std.is_finite() && std > 0.0) {
                    return Err(Error::config(
                        field,
                        format!("normal law needs mean in [{lo}, {hi}] and std > 0"),
                    ));
                }
            }
            InitLaw::Point { value } => {
                if !inside(value) {
                    return Err(Error::config(
                        field,
                        format!("point law needs value in [{lo}, {hi}]"),
                    ));
                }
            }
        }
        Ok(())
    }
}

fn one() -> f64 {
    1.0
}

fn default_bins() -> usize {
    50
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FollowerConfig {
    /// Compromise kernel `P`.
    pub kernel: KernelSpec,
    /// Standard deviation of the follower-follower noise.
    pub noise_std: f64,
    #[serde(default)]
    pub diffusion: DiffusionSpec,
    /// Follower-follower interaction frequency `c_F` before scaling.
    #[serde(default = "one")]
    pub interaction_rate: f64,
    pub init: InitLaw,
    /// Initial knowledge law, heterogeneous mode only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub knowledge_init: Option<InitLaw>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CredibilityConfig {
    pub varsigma: f64,
    pub gamma: f64,
    /// Sharpness of the logistic comparing follower knowledge with credibility.
    pub a: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeaderConfig {
    pub target: f64,
    pub psi: f64,
    pub nu: f64,
    /// Fraction of all leaders belonging to this group; equal split if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub share: Option<f64>,
    /// Leader-leader kernel `S`.
    #[serde(default)]
    pub kernel: KernelSpec,
    pub noise_std: f64,
    #[serde(default)]
    pub diffusion: DiffusionSpec,
    /// Opinion part `H` of the follower-leader kernel `R`.
    pub follower_kernel: KernelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub credibility: Option<CredibilityConfig>,
    pub follower_noise_std: f64,
    #[serde(default)]
    pub follower_diffusion: DiffusionSpec,
    /// Follower-leader frequency `c_FL` before scaling.
    pub c_fl: f64,
    /// Leader-leader frequency `c_L` before scaling.
    #[serde(default = "one")]
    pub c_l: f64,
    pub init: InitLaw,
}

impl LeaderConfig {
    pub fn strategy(&self) -> StrategyParams {
        StrategyParams::new(self.psi, self.nu, self.target)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnowledgeConfig {
    pub lambda: f64,
    pub lambda_c: f64,
    pub lambda_b: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_max: Option<f64>,
    /// Standard deviation of the multiplicative knowledge noise.
    pub noise_std: f64,
    /// Background knowledge is uniform on `[0, background_max]`.
    pub background_max: f64,
    /// Upper end of the knowledge axis of density grids.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub display_max: Option<f64>,
}

impl KnowledgeConfig {
    pub fn rates(&self) -> KnowledgeRates {
        KnowledgeRates {
            lambda: self.lambda,
            lambda_c: self.lambda_c,
            lambda_b: self.lambda_b,
        }
    }

    pub fn background_mean(&self) -> f64 {
        0.5 * self.background_max
    }

    pub fn lambda_bounds(&self) -> (f64, f64) {
        (
            self.lambda_min.unwrap_or(self.lambda),
            self.lambda_max.unwrap_or(self.lambda),
        )
    }

    /// `lambda_B m_B / (lambda - lambda_C)`, the fixed point of the mean knowledge.
    pub fn mean_fixed_point(&self) -> Option<f64> {
        (self.lambda > self.lambda_c)
            .then(|| self.lambda_b * self.background_mean() / (self.lambda - self.lambda_c))
    }

    pub fn display_max(&self) -> f64 {
        self.display_max
            .or_else(|| self.mean_fixed_point().map(|m| 2.0 * m))
            .filter(|m| *m > 0.0)
            .unwrap_or(self.background_max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub control: ControlVariant,
    /// Quasi-invariant scaling parameter; also the time step.
    pub epsilon: f64,
    /// Final time.
    pub horizon: f64,
    /// Number of followers `N_F`.
    pub followers: usize,
    /// Fraction of the whole population made of leaders.
    pub leader_share: f64,
    pub seed: u64,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    #[serde(default = "default_bins")]
    pub histogram_bins: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub follower: FollowerConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub knowledge: Option<KnowledgeConfig>,
    pub leaders: Vec<LeaderConfig>,
}

impl Scenario {
    pub fn strategies(&self) -> Vec<StrategyParams> {
        self.leaders.iter().map(LeaderConfig::strategy).collect()
    }

    /// Strategies with `nu -> epsilon nu`.
    pub fn scaled_strategies(&self) -> Vec<StrategyParams> {
        self.strategies()
            .into_iter()
            .map(|mut s| {
                s.nu *= self.epsilon;
                s
            })
            .collect()
    }

    /// Number of time steps of size `epsilon` needed to reach the horizon.
    pub fn steps(&self) -> u64 {
        (self.horizon / self.epsilon).round() as u64
    }

    /// Particle counts per leader group.
    pub fn leader_counts(&self) -> Vec<usize> {
        let total = (self.followers as f64 * self.leader_share / (1.0 - self.leader_share)).round();
        let m = self.leaders.len() as f64;
        self.leaders
            .iter()
            .map(|l| (total * l.share.unwrap_or(1.0 / m)).round() as usize)
            .collect()
    }

    /// Mass `rho^k` of each group relative to the followers.
    pub fn leader_masses(&self) -> Vec<f64> {
        self.leader_counts()
            .iter()
            .map(|&n| n as f64 / self.followers as f64)
            .collect()
    }

    /// Control system under the quasi-invariant scaling (`alpha = epsilon`,
    /// `nu -> epsilon nu`).
    pub fn control_system(&self) -> ControlSystem {
        ControlSystem::build(&self.scaled_strategies(), self.epsilon)
    }

    pub fn validate(&self) -> Result<()> {
        let eps = self.epsilon;
        if !(eps.is_finite() && eps > 0.0 && eps <= 1.0) {
            return Err(Error::config("epsilon", "must lie in (0, 1]"));
        }
        // alpha = epsilon must be a proper compromise weight
        if eps >= 1.0 {
            return Err(Error::config("epsilon", "alpha = epsilon must be below 1"));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::config("horizon", "must be positive"));
        }
        if self.followers < 2 {
            return Err(Error::config(
                "followers",
                "at least two followers are required",
            ));
        }
        if !(self.leader_share > 0.0 && self.leader_share < 1.0) {
            return Err(Error::config("leader_share", "must lie in (0, 1)"));
        }
        if self.histogram_bins == 0 {
            return Err(Error::config("histogram_bins", "must be positive"));
        }
        for (i, &t) in self.snapshot_times.iter().enumerate() {
            if !(0.0..=self.horizon + 0.5 * eps).contains(&t) {
                return Err(Error::config(
                    format!("snapshot_times[{i}]"),
                    "must lie in [0, horizon]",
                ));
            }
        }
        if self.leaders.is_empty() {
            return Err(Error::config(
                "leaders",
                "at least one leader group is required",
            ));
        }

        let hetero = self.mode == Mode::Heterogeneous;
        let f = &self.follower;
        f.kernel.validate("follower.kernel")?;
        f.diffusion.validate("follower.diffusion")?;
        if f.kernel.uses_knowledge() && !hetero {
            return Err(Error::config(
                "follower.kernel",
                "knowledge-dependent kernels need heterogeneous mode",
            ));
        }
        check_rate("follower.interaction_rate", f.interaction_rate)?;
        f.init.validate("follower.init", -1.0, 1.0)?;
        check_std("follower.noise_std", f.noise_std)?;
        check_noise(
            "follower.noise_std",
            BinaryRule::FollowerFollower,
            &f.diffusion,
            eps,
            NoiseSpec::from_std(f.noise_std).scaled(eps),
        )?;

        if hetero {
            let Some(k) = &self.knowledge else {
                return Err(Error::config("knowledge", "required in heterogeneous mode"));
            };
            let Some(init) = &f.knowledge_init else {
                return Err(Error::config(
                    "follower.knowledge_init",
                    "required in heterogeneous mode",
                ));
            };
            init.validate("follower.knowledge_init", 0.0, f64::MAX)?;
            validate_knowledge(k, eps)?;
        } else if self.knowledge.is_some() || f.knowledge_init.is_some() {
            return Err(Error::config(
                "knowledge",
                "only allowed in heterogeneous mode",
            ));
        }

        let share_sum: f64 = self.leaders.iter().filter_map(|l| l.share).sum();
        if self.leaders.iter().any(|l| l.share.is_some()) {
            if self.leaders.iter().any(|l| l.share.is_none()) {
                return Err(Error::config(
                    "leaders.share",
                    "give a share for every group or for none",
                ));
            }
            if (share_sum - 1.0).abs() > 1e-9 {
                return Err(Error::config("leaders.share", "shares must sum to 1"));
            }
        }
        for (k, (l, n)) in self.leaders.iter().zip(self.leader_counts()).enumerate() {
            let field = |name: &str| format!("leaders[{k}].{name}");
            l.strategy().validate(&format!("leaders[{k}]"))?;
            if n < 2 {
                return Err(Error::config(
                    field("share"),
                    "every group needs at least two leaders",
                ));
            }
            l.kernel.validate(&field("kernel"))?;
            if l.kernel.uses_knowledge() {
                return Err(Error::config(field("kernel"), "leaders carry no knowledge"));
            }
            l.follower_kernel.validate(&field("follower_kernel"))?;
            if l.follower_kernel.uses_knowledge() {
                return Err(Error::config(
                    field("follower_kernel"),
                    "knowledge enters the follower-leader kernel through `credibility`",
                ));
            }
            if let Some(c) = &l.credibility {
                if !hetero {
                    return Err(Error::config(
                        field("credibility"),
                        "only allowed in heterogeneous mode",
                    ));
                }
                if !(c.varsigma > 0.0 && c.gamma > 0.0) {
                    return Err(Error::config(
                        field("credibility"),
                        "varsigma and gamma must be positive",
                    ));
                }
                if c.a.is_nan() || c.a <= 1.0 {
                    return Err(Error::config(field("credibility.a"), "must exceed 1"));
                }
            }
            l.diffusion.validate(&field("diffusion"))?;
            l.follower_diffusion
                .validate(&field("follower_diffusion"))?;
            check_rate(&field("c_fl"), l.c_fl)?;
            check_rate(&field("c_l"), l.c_l)?;
            l.init.validate(&field("init"), -1.0, 1.0)?;
            check_std(&field("noise_std"), l.noise_std)?;
            check_std(&field("follower_noise_std"), l.follower_noise_std)?;
            check_noise(
                &field("follower_noise_std"),
                BinaryRule::FollowerLeader,
                &l.follower_diffusion,
                eps,
                NoiseSpec::from_std(l.follower_noise_std).scaled(eps),
            )?;
            check_noise(
                &field("noise_std"),
                BinaryRule::LeaderLeader,
                &l.diffusion,
                eps,
                NoiseSpec::from_std(l.noise_std).scaled(eps),
            )?;
        }

        let sys = self.control_system();
        if let Err(e) = sys.ensure_well_posed() {
            return Err(Error::config("leaders.nu", e.to_string()));
        }
        // time-step bound dt < sqrt(nu / (M - 1)) on the scaled penalizations
        let m = self.leaders.len();
        if m > 1 {
            for (k, s) in self.scaled_strategies().iter().enumerate() {
                let bound = (s.nu / (m as f64 - 1.0)).sqrt();
                if eps >= bound {
                    return Err(Error::config(
                        format!("leaders[{k}].nu"),
                        format!("time step {eps} violates dt < sqrt(eps nu / (M - 1)) = {bound:e}"),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes to TOML")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_toml_string()).map_err(|e| Error::io(path, e))
    }
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let scenario = Scenario::from_toml_str(&text, path)?;
    scenario.validate()?;
    Ok(scenario)
}

fn check_rate(field: &str, c: f64) -> Result<()> {
    if c.is_finite() && c > 0.0 && c <= 1.0 {
        Ok(())
    } else {
        Err(Error::config(
            field,
            "interaction frequency must lie in (0, 1] so per-step probabilities stay below 1",
        ))
    }
}

fn check_std(field: &str, s: f64) -> Result<()> {
    if s.is_finite() && s >= 0.0 {
        Ok(())
    } else {
        Err(Error::config(field, "must be a nonnegative number"))
    }
}

fn check_noise(
    field: &str,
    rule: BinaryRule,
    d: &DiffusionSpec,
    alpha: f64,
    noise: NoiseSpec,
) -> Result<()> {
    let interval = admissible_noise_bounds(rule, d, alpha, 0.0)
        .map_err(|_| Error::config(field, "noise support incompatible with bound preservation"))?;
    if interval.contains_symmetric(noise.half_width()) {
        Ok(())
    } else {
        Err(Error::config(
            field,
            format!(
                "noise support incompatible with bound preservation: half-width {:e} exceeds [{:e}, {:e}]",
                noise.half_width(),
                interval.lo,
                interval.hi
            ),
        ))
    }
}

fn validate_knowledge(k: &KnowledgeConfig, eps: f64) -> Result<()> {
    let (lo, hi) = k.lambda_bounds();
    if !(lo > 0.0 && hi < 1.0 && lo <= hi) {
        return Err(Error::config(
            "knowledge.lambda_min",
            "need 0 < lambda_min <= lambda_max < 1",
        ));
    }
    if !(lo..=hi).contains(&k.lambda) {
        return Err(Error::config(
            "knowledge.lambda",
            "must lie in [lambda_min, lambda_max]",
        ));
    }
    for (name, v) in [
        ("knowledge.lambda_c", k.lambda_c),
        ("knowledge.lambda_b", k.lambda_b),
    ] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::config(name, "must lie in [0, 1]"));
        }
    }
    if !(k.background_max.is_finite() && k.background_max > 0.0) {
        return Err(Error::config(
            "knowledge.background_max",
            "must be positive",
        ));
    }
    check_std("knowledge.noise_std", k.noise_std)?;
    // kappa >= -1 + lambda_max keeps post-interaction knowledge nonnegative
    let kappa = NoiseSpec::from_std(k.noise_std).scaled(eps * eps);
    if -kappa.half_width() < -1.0 + hi {
        return Err(Error::config(
            "knowledge.noise_std",
            "noise support violates kappa >= -1 + lambda_max",
        ));
    }
    if let Some(d) = k.display_max {
        if d.is_nan() || d <= 0.0 {
            return Err(Error::config("knowledge.display_max", "must be positive"));
        }
    }
    Ok(())
}

fn bc(threshold: f64) -> KernelSpec {
    KernelSpec::bounded_confidence(threshold)
}

fn tabulated_leader(
    target: f64,
    psi: f64,
    nu: f64,
    kernel: KernelSpec,
    init: InitLaw,
) -> LeaderConfig {
    LeaderConfig {
        target,
        psi,
        nu,
        share: None,
        kernel: KernelSpec::Unit,
        noise_std: 0.01,
        diffusion: DiffusionSpec::QuadraticCap,
        follower_kernel: kernel,
        credibility: None,
        follower_noise_std: 0.01,
        follower_diffusion: DiffusionSpec::QuadraticCap,
        c_fl: 0.1,
        c_l: 1.0,
        init,
    }
}

fn base(name: &str, horizon: f64, kernel: KernelSpec, init: InitLaw) -> Scenario {
    Scenario {
        name: name.to_string(),
        mode: Mode::Homogeneous,
        control: ControlVariant::Game,
        epsilon: 0.01,
        horizon,
        followers: 100_000,
        leader_share: 0.1,
        seed: 2024,
        snapshot_times: Vec::new(),
        histogram_bins: 50,
        output_dir: None,
        follower: FollowerConfig {
            kernel,
            noise_std: 0.01,
            diffusion: DiffusionSpec::QuadraticCap,
            interaction_rate: 1.0,
            init,
            knowledge_init: None,
        },
        knowledge: None,
        leaders: Vec::new(),
    }
}

fn schedule(horizon: f64, count: usize) -> Vec<f64> {
    (0..=count)
        .map(|i| horizon * i as f64 / count as f64)
        .collect()
}

/// The tabulated test configurations.
pub fn preset(name: &str) -> Result<Scenario> {
    let scenario = match name {
        "test1" => {
            let mut s = base(
                "test1",
                10.0,
                bc(0.75),
                InitLaw::Uniform {
                    low: -1.0,
                    high: 1.0,
                },
            );
            s.snapshot_times = schedule(10.0, 10);
            s.leaders = [0.5, -0.5]
                .into_iter()
                .map(|target| {
                    tabulated_leader(
                        target,
                        0.5,
                        0.1,
                        bc(0.75),
                        InitLaw::Normal {
                            mean: -target,
                            std: 0.05,
                        },
                    )
                })
                .collect();
            s
        }
        "test2a" | "test2b" => {
            let nus = if name == "test2a" {
                [0.5, 0.5, 0.5]
            } else {
                [0.05, 0.15, 0.15]
            };
            let mut s = base(
                name,
                20.0,
                bc(0.25),
                InitLaw::Uniform {
                    low: 0.0,
                    high: 0.75,
                },
            );
            s.snapshot_times = schedule(20.0, 10);
            s.leaders = [(-0.5, 0.05), (0.0, 0.5), (0.5, 0.95)]
                .into_iter()
                .zip(nus)
                .map(|((target, psi), nu)| {
                    tabulated_leader(
                        target,
                        psi,
                        nu,
                        bc(0.25),
                        InitLaw::Normal {
                            mean: target,
                            std: 0.1,
                        },
                    )
                })
                .collect();
            s
        }
        "test3" => {
            let mut s = base(
                "test3",
                10.0,
                KernelSpec::knowledge_gap(50.0),
                InitLaw::Uniform {
                    low: -1.0,
                    high: 1.0,
                },
            );
            s.mode = Mode::Heterogeneous;
            s.snapshot_times = vec![0.0, 1.0, 5.0, 10.0];
            s.follower.knowledge_init = Some(InitLaw::Uniform {
                low: 0.0,
                high: 1.0,
            });
            s.knowledge = Some(KnowledgeConfig {
                lambda: 0.01,
                lambda_c: 0.005,
                lambda_b: 0.005,
                lambda_min: None,
                lambda_max: None,
                noise_std: 2.5e-3,
                background_max: 10.0,
                display_max: None,
            });
            let credibility = CredibilityConfig {
                varsigma: 0.001,
                gamma: 0.75,
                a: 50.0,
            };
            s.leaders = [(0.5, 0.1, 0.5), (-0.5, 0.75, 0.1)]
                .into_iter()
                .map(|(target, psi, nu)| {
                    let mut l = tabulated_leader(
                        target,
                        psi,
                        nu,
                        KernelSpec::Unit,
                        InitLaw::Normal {
                            mean: target,
                            std: 0.1,
                        },
                    );
                    l.credibility = Some(credibility);
                    l
                })
                .collect();
            s
        }
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    Ok(scenario)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for name in PRESET_NAMES {
            let s = preset(name).unwrap();
            s.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        assert!(matches!(preset("test4"), Err(Error::UnknownPreset(_))));
    }

    #[test]
    fn tabulated_parameters() {
        let t1 = preset("test1").unwrap();
        assert_eq!(t1.leaders.len(), 2);
        assert_eq!(t1.follower.kernel, bc(0.75));
        for (l, target) in t1.leaders.iter().zip([0.5, -0.5]) {
            assert_eq!(
                (l.target, l.psi, l.nu, l.noise_std, l.c_fl),
                (target, 0.5, 0.1, 0.01, 0.1)
            );
            assert_eq!(l.kernel, KernelSpec::Unit);
            assert_eq!(l.follower_kernel, bc(0.75));
        }
        let t2 = preset("test2b").unwrap();
        let s: Vec<_> = t2.leaders.iter().map(|l| (l.target, l.psi, l.nu)).collect();
        assert_eq!(
            s,
            vec![(-0.5, 0.05, 0.05), (0.0, 0.5, 0.15), (0.5, 0.95, 0.15)]
        );
        assert!(preset("test2a")
            .unwrap()
            .leaders
            .iter()
            .all(|l| l.nu == 0.5));
        let t3 = preset("test3").unwrap();
        let s: Vec<_> = t3.leaders.iter().map(|l| (l.target, l.psi, l.nu)).collect();
        assert_eq!(s, vec![(0.5, 0.1, 0.5), (-0.5, 0.75, 0.1)]);
        let c = t3.leaders[0].credibility.unwrap();
        assert_eq!((c.a, c.gamma, c.varsigma), (50.0, 0.75, 0.001));
        let k = t3.knowledge.as_ref().unwrap();
        assert_eq!((k.background_max, k.noise_std), (10.0, 2.5e-3));
        assert_eq!(t3.epsilon, 0.01);
    }

    #[test]
    fn leader_share_is_ten_percent() {
        let s = preset("test1").unwrap();
        let counts = s.leader_counts();
        let total: usize = counts.iter().sum();
        let frac = total as f64 / (total + s.followers) as f64;
        assert!((frac - 0.1).abs() < 1e-4);
        assert_eq!(counts[0], counts[1]);
    }

    #[test]
    fn ill_posed_rejected_with_field() {
        let mut s = preset("test2b").unwrap();
        s.epsilon = 0.2;
        let e = s.validate().unwrap_err().to_string();
        assert!(e.contains("leaders"), "{e}");
    }

    #[test]
    fn constraint_violations_name_fields() {
        let mut s = preset("test1").unwrap();
        s.leaders[1].c_fl = 1.5;
        assert!(s
            .validate()
            .unwrap_err()
            .to_string()
            .contains("leaders[1].c_fl"));

        let mut s = preset("test1").unwrap();
        s.follower.noise_std = 10.0;
        let e = s.validate().unwrap_err().to_string();
        assert!(
            e.contains("follower.noise_std") && e.contains("bound preservation"),
            "{e}"
        );

        let mut s = preset("test3").unwrap();
        s.knowledge.as_mut().unwrap().noise_std = 1e4;
        assert!(s
            .validate()
            .unwrap_err()
            .to_string()
            .contains("knowledge.noise_std"));

        let mut s = preset("test1").unwrap();
        s.follower.kernel = KernelSpec::knowledge_gap(50.0);
        assert!(s
            .validate()
            .unwrap_err()
            .to_string()
            .contains("heterogeneous"));

        let mut s = preset("test1").unwrap();
        s.leaders[0].psi = 1.2;
        assert!(s
            .validate()
            .unwrap_err()
            .to_string()
            .contains("leaders[0].psi"));
    }

    #[test]
    fn toml_round_trip() {
        for name in PRESET_NAMES {
            let s = preset(name).unwrap();
            let text = s.to_toml_string();
            let back = Scenario::from_toml_str(&text, Path::new("mem")).unwrap();
            assert_eq!(s, back, "{name}");
        }
    }

    #[test]
    fn parse_errors_are_reported() {
        let e = Scenario::from_toml_str("epsilon = 'x'", Path::new("bad.toml")).unwrap_err();
        assert_eq!(e.category(), "parse");
    }
}
