//! Best-reply controls of the leader groups.
//!
//! Minimizing each group's one-step quadratic cost, given the other groups'
//! controls, couples the `M` controls through the linear system
//!
//! ```text
//! u^k + beta^k * sum_{l != k} u^l = beta^k / (2 alpha) * F^k,
//! beta^k = 4 alpha^2 / (nu^k + 4 alpha^2),
//! F^k    = psi^k vbar^k + mu^k m_F - m_L^k.
//! ```
//!
//! The matrix does not depend on time, so its inverse and column sums are
//! computed once when the system is built.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Strategy of one leader group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategyParams {
    /// Radical weight, pull towards `target`.
    pub psi: f64,
    /// Populist weight, pull towards the followers' mean. `psi + mu = 1`.
    pub mu: f64,
    /// Control penalization.
    pub nu: f64,
    /// Desired opinion.
    pub target: f64,
}

impl StrategyParams {
    pub fn new(psi: f64, nu: f64, target: f64) -> Self {
        StrategyParams {
            psi,
            mu: 1.0 - psi,
            nu,
            target,
        }
    }

    pub fn validate(&self, field: &str) -> Result<()> {
        if !(0.0..=1.0).contains(&self.psi) {
            return Err(Error::config(format!("{field}.psi"), "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.mu) || (self.psi + self.mu - 1.0).abs() > 1e-12 {
            return Err(Error::config(
                format!("{field}.mu"),
                "psi + mu must equal 1",
            ));
        }
        if !(self.nu.is_finite() && self.nu > 0.0) {
            return Err(Error::config(format!("{field}.nu"), "must be positive"));
        }
        if !(-1.0..=1.0).contains(&self.target) {
            return Err(Error::config(
                format!("{field}.target"),
                "must lie in [-1, 1]",
            ));
        }
        Ok(())
    }

    /// `F = psi vbar + mu m_F - m_L`.
    pub fn drift(&self, m_f: f64, m_l: f64) -> f64 {
        self.psi * self.target + self.mu * m_f - m_l
    }
}

/// Drifts `F^k` of all groups given the followers' mean and the groups' means.
pub fn strategy_drifts(strategies: &[StrategyParams], m_f: f64, m_l: &[f64]) -> Vec<f64> {
    strategies
        .iter()
        .zip(m_l)
        .map(|(s, &m)| s.drift(m_f, m))
        .collect()
}

/// The assembled and inverted best-reply system.
#[derive(Debug, Clone)]
pub struct ControlSystem {
    alpha: f64,
    betas: Vec<f64>,
    /// Row-major inverse of the system matrix, empty when ill posed.
    inverse: Vec<f64>,
    col_sums: Vec<f64>,
    ill_posed: Option<(usize, f64, f64)>,
}

impl ControlSystem {
    /// Builds the system for the given strategies and `alpha = dt / 2`.
    ///
    /// The system is flagged ill posed (and refuses to solve) unless
    /// `nu^k > 4 (M - 2) alpha^2` holds strictly for every group.
    pub fn build(strategies: &[StrategyParams], alpha: f64) -> Self {
        let m = strategies.len();
        assert!(m >= 1, "at least one leader group is required");
        assert!(alpha > 0.0, "alpha must be positive");
        let four_a2 = 4.0 * alpha * alpha;
        let betas: Vec<f64> = strategies
            .iter()
            .map(|s| four_a2 / (s.nu + four_a2))
            .collect();
        let bound = 4.0 * (m as f64 - 2.0) * alpha * alpha;
        let ill_posed = strategies
            .iter()
            .enumerate()
            .find(|(_, s)| s.nu <= bound)
            .map(|(k, s)| (k, s.nu, bound));

        let mut sys = ControlSystem {
            alpha,
            betas,
            inverse: Vec::new(),
            col_sums: Vec::new(),
            ill_posed,
        };
        if sys.ill_posed.is_none() {
            sys.inverse =
                invert(&sys.matrix(), m).expect("diagonally dominant matrix is invertible");
            sys.col_sums = (0..m)
                .map(|l| (0..m).map(|k| sys.inverse[k * m + l]).sum())
                .collect();
        }
        sys
    }

    pub fn size(&self) -> usize {
        self.betas.len()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    /// Column sums of the inverse matrix, empty when ill posed.
    pub fn col_sums(&self) -> &[f64] {
        &self.col_sums
    }

    pub fn well_posed(&self) -> bool {
        self.ill_posed.is_none()
    }

    /// Fails with the first group violating the well-posedness condition.
    pub fn ensure_well_posed(&self) -> Result<()> {
        match self.ill_posed {
            None => Ok(()),
            Some((group, nu, bound)) => Err(Error::IllPosed { group, nu, bound }),
        }
    }

    /// Row-major system matrix: unit diagonal, `beta^k` across row `k`.
    pub fn matrix(&self) -> Vec<f64> {
        let m = self.size();
        let mut a = vec![0.0; m * m];
        for k in 0..m {
            for l in 0..m {
                a[k * m + l] = if k == l { 1.0 } else { self.betas[k] };
            }
        }
        a
    }

    /// Individual best replies `u^k`.
    pub fn solve_controls(&self, drifts: &[f64]) -> Result<Vec<f64>> {
        self.ensure_well_posed()?;
        let m = self.size();
        assert_eq!(drifts.len(), m);
        let rhs: Vec<f64> = self
            .betas
            .iter()
            .zip(drifts)
            .map(|(b, f)| b * f / (2.0 * self.alpha))
            .collect();
        Ok((0..m)
            .map(|k| (0..m).map(|l| self.inverse[k * m + l] * rhs[l]).sum())
            .collect())
    }

    /// `sum_k u^k` from the cached column sums.
    pub fn total_control_from_drifts(&self, drifts: &[f64]) -> Result<f64> {
        self.ensure_well_posed()?;
        let weighted: f64 = self
            .betas
            .iter()
            .zip(&self.col_sums)
            .zip(drifts)
            .map(|((b, c), f)| b * c * f)
            .sum();
        Ok(weighted / (2.0 * self.alpha))
    }

    /// Total control computed from the global group means.
    pub fn total_control(
        &self,
        m_f: f64,
        means: &[f64],
        strategies: &[StrategyParams],
    ) -> Result<f64> {
        self.total_control_from_drifts(&strategy_drifts(strategies, m_f, means))
    }

    /// Total control with each group's mean replaced by the local average of
    /// an interacting pair `(v_h, v_p)`.
    pub fn total_control_local(
        &self,
        pairs: &[(f64, f64)],
        m_f: f64,
        strategies: &[StrategyParams],
    ) -> Result<f64> {
        let local: Vec<f64> = pairs.iter().map(|(h, p)| 0.5 * (p + h)).collect();
        self.total_control(m_f, &local, strategies)
    }

    /// Control of group `k` acting alone: the off-diagonal coupling removed,
    /// `u^k = beta^k F^k / (2 alpha)`.
    pub fn isolated_control(&self, k: usize, drift: f64) -> f64 {
        self.betas[k] * drift / (2.0 * self.alpha)
    }
}

/// Closed-form total control when all groups share the same `nu`:
/// `beta / (2 alpha (1 + (M - 1) beta)) * sum F`.
pub fn equal_penalty_control(beta: f64, alpha: f64, m: usize, drifts: &[f64]) -> f64 {
    let sum: f64 = drifts.iter().sum();
    beta / (2.0 * alpha * (1.0 + (m as f64 - 1.0) * beta)) * sum
}

/// Controller reached in the quasi-invariant limit, `sum (2/nu) F`, with the
/// unscaled penalizations.
pub fn limit_control(strategies: &[StrategyParams], m_f: f64, means: &[f64]) -> f64 {
    strategies
        .iter()
        .zip(means)
        .map(|(s, &m)| 2.0 / s.nu * s.drift(m_f, m))
        .sum()
}

/// Gauss-Jordan inversion with partial pivoting of a row-major `n x n` matrix.
fn invert(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut work = a.to_vec();
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r, &s| work[r * n + col].abs().total_cmp(&work[s * n + col].abs()))?;
        if work[pivot * n + col] == 0.0 {
            return None;
        }
        if pivot != col {
            for j in 0..n {
                work.swap(pivot * n + j, col * n + j);
                inv.swap(pivot * n + j, col * n + j);
            }
        }
        let p = work[col * n + col];
        for j in 0..n {
            work[col * n + j] /= p;
            inv[col * n + j] /= p;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = work[r * n + col];
            if factor != 0.0 {
                for j in 0..n {
                    work[r * n + j] -= factor * work[col * n + j];
                    inv[r * n + j] -= factor * inv[col * n + j];
                }
            }
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(m: usize, nu: f64) -> Vec<StrategyParams> {
        vec![StrategyParams::new(0.5, nu, 0.0); m]
    }

    #[test]
    fn two_groups_always_well_posed() {
        for &alpha in &[0.01, 0.5, 10.0] {
            for &nu in &[1e-9, 0.1, 100.0] {
                assert!(ControlSystem::build(&uniform(2, nu), alpha).well_posed());
            }
        }
    }

    #[test]
    fn scalar_system() {
        let sys = ControlSystem::build(&uniform(1, 1.0), 0.5);
        assert_eq!(sys.betas(), &[0.5]);
        assert_eq!(sys.col_sums(), &[1.0]);
        let u = sys.solve_controls(&[0.3]).unwrap();
        assert!((u[0] - 0.5 / 1.0 * 0.3).abs() < 1e-15);
    }

    #[test]
    fn three_groups_ill_posed() {
        let sys = ControlSystem::build(&uniform(3, 0.9), 0.5);
        assert!(!sys.well_posed());
        assert!(matches!(
            sys.solve_controls(&[0.0; 3]),
            Err(Error::IllPosed { .. })
        ));
        assert!(sys.total_control(0.0, &[0.0; 3], &uniform(3, 0.9)).is_err());
        // equality is ill posed too
        assert!(!ControlSystem::build(&uniform(3, 1.0), 0.5).well_posed());
        assert!(ControlSystem::build(&uniform(3, 1.0 + 1e-12), 0.5).well_posed());
    }

    #[test]
    fn two_by_two_example() {
        // nu = 1, alpha = 0.5 gives beta = 0.5
        let sys = ControlSystem::build(&uniform(2, 1.0), 0.5);
        let u = sys.solve_controls(&[1.0, -1.0]).unwrap();
        // analytic inverse of [[1, b], [b, 1]] is [[1, -b], [-b, 1]] / (1 - b^2)
        let b = 0.5;
        let r = [0.5, -0.5];
        let det = 1.0 - b * b;
        let expect = [(r[0] - b * r[1]) / det, (r[1] - b * r[0]) / det];
        assert!((u[0] - expect[0]).abs() < 1e-14 && (u[1] - expect[1]).abs() < 1e-14);
        assert!((u[0] - 1.0).abs() < 1e-14 && (u[1] + 1.0).abs() < 1e-14);
        assert_eq!(sys.solve_controls(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn symmetric_test_one_total_is_zero() {
        let s = vec![
            StrategyParams::new(0.5, 0.1, 0.5),
            StrategyParams::new(0.5, 0.1, -0.5),
        ];
        let sys = ControlSystem::build(&s, 0.01);
        let drifts = strategy_drifts(&s, 0.0, &[0.5, -0.5]);
        assert_eq!(drifts, vec![-0.25, 0.25]);
        assert!(sys.total_control(0.0, &[0.5, -0.5], &s).unwrap().abs() < 1e-14);
    }

    #[test]
    fn zero_drifts_zero_control() {
        let s = vec![
            StrategyParams::new(0.2, 0.3, 0.5),
            StrategyParams::new(0.7, 0.4, -0.1),
            StrategyParams::new(0.9, 0.5, 0.8),
        ];
        let m_f = 0.17;
        let means: Vec<f64> = s.iter().map(|p| p.psi * p.target + p.mu * m_f).collect();
        let sys = ControlSystem::build(&s, 0.1);
        assert!(sys.total_control(m_f, &means, &s).unwrap().abs() < 1e-15);
    }

    #[test]
    fn equal_penalty_examples() {
        let beta: f64 = 0.37;
        let alpha = 0.2;
        assert!(
            (equal_penalty_control(beta, alpha, 1, &[0.4]) - beta / (2.0 * alpha) * 0.4).abs()
                < 1e-15
        );
        assert!((equal_penalty_control(0.5, 0.5, 2, &[0.2, 0.3]) - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn local_variant_examples() {
        let s = vec![StrategyParams::new(1.0, 1.0, 0.5)];
        let sys = ControlSystem::build(&s, 0.5);
        assert_eq!(sys.betas()[0], 0.5);
        let u = sys.total_control_local(&[(0.0, 0.0)], 0.3, &s).unwrap();
        assert!((u - 0.25).abs() < 1e-15);

        let s = vec![
            StrategyParams::new(0.4, 0.2, 0.5),
            StrategyParams::new(0.6, 0.3, -0.5),
        ];
        let sys = ControlSystem::build(&s, 0.05);
        let means = [0.1, -0.3];
        let global = sys.total_control(0.2, &means, &s).unwrap();
        let local = sys
            .total_control_local(&[(0.1, 0.1), (-0.3, -0.3)], 0.2, &s)
            .unwrap();
        assert_eq!(global, local);
    }

    #[test]
    fn limit_examples() {
        let s = vec![StrategyParams::new(1.0, 2.0, 0.5)];
        assert!((limit_control(&s, 0.9, &[0.0]) - 0.5).abs() < 1e-15);
        let s = vec![
            StrategyParams::new(0.3, 0.7, 0.4),
            StrategyParams::new(0.8, 0.2, -0.2),
        ];
        let m_f = 0.25;
        let means: Vec<f64> = s.iter().map(|p| p.psi * p.target + p.mu * m_f).collect();
        assert!(limit_control(&s, m_f, &means).abs() < 1e-15);
    }

    #[test]
    fn validation_messages_name_fields() {
        let bad = StrategyParams {
            psi: 0.5,
            mu: 0.6,
            nu: 1.0,
            target: 0.0,
        };
        let err = bad.validate("leaders[0]").unwrap_err().to_string();
        assert!(err.contains("leaders[0].mu"), "{err}");
        assert!(StrategyParams::new(0.5, 0.0, 0.0).validate("g").is_err());
        assert!(StrategyParams::new(0.5, 1.0, 1.5).validate("g").is_err());
    }
}
