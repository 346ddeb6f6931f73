//! Mean-field moment equations for equal penalizations and unit
//! follower-leader kernels, integrated with classical RK4, and the
//! asymptotic consensus value.

use crate::best_reply::StrategyParams;
use crate::error::{Error, Result};
use crate::scenario::Scenario;
use crate::sim::MomentState;

/// Parameters of the mean system
/// `m_F' = sum_l c_FL^l rho^l alpha (m_L^l - m_F)`,
/// `m_L^k' = beta / (1 + (M - 1) beta) c_L^k rho^k sum_l F^l`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanSystemParams {
    pub c_fl: Vec<f64>,
    pub c_l: Vec<f64>,
    pub rho: Vec<f64>,
    pub beta: f64,
    pub alpha: f64,
    pub strategies: Vec<StrategyParams>,
}

impl MeanSystemParams {
    /// Parameters seen by the particle simulation of `scenario`: frequencies
    /// `c / (epsilon rho)`, `alpha = epsilon`, and `beta` built from the
    /// scaled penalization. Requires a common `nu`.
    pub fn from_scenario(scenario: &Scenario) -> Result<Self> {
        let nu = scenario.leaders[0].nu;
        if scenario.leaders.iter().any(|l| l.nu != nu) {
            return Err(Error::config(
                "leaders.nu",
                "the mean-field oracle needs a common penalization",
            ));
        }
        let eps = scenario.epsilon;
        let rho = scenario.leader_masses();
        let beta = 4.0 * eps * eps / (eps * nu + 4.0 * eps * eps);
        Ok(MeanSystemParams {
            c_fl: scenario
                .leaders
                .iter()
                .zip(&rho)
                .map(|(l, r)| l.c_fl / (eps * r))
                .collect(),
            c_l: scenario
                .leaders
                .iter()
                .zip(&rho)
                .map(|(l, r)| l.c_l / (eps * r))
                .collect(),
            rho,
            beta,
            alpha: eps,
            strategies: scenario.strategies(),
        })
    }

    pub fn size(&self) -> usize {
        self.strategies.len()
    }
}

/// Right-hand side of the mean system.
pub fn mean_rhs(m_f: f64, m_l: &[f64], p: &MeanSystemParams) -> (f64, Vec<f64>) {
    let m = p.size();
    let df: f64 = (0..m)
        .map(|l| p.c_fl[l] * p.rho[l] * p.alpha * (m_l[l] - m_f))
        .sum();
    let sum_f: f64 = p
        .strategies
        .iter()
        .zip(m_l)
        .map(|(s, &ml)| s.drift(m_f, ml))
        .sum();
    let gain = p.beta / (1.0 + (m as f64 - 1.0) * p.beta);
    let dl = (0..m).map(|k| gain * p.c_l[k] * p.rho[k] * sum_f).collect();
    (df, dl)
}

/// RK4 integration from `(m_f0, m_l0)` to `horizon`, with `substeps` steps
/// per output interval `output_dt`. Second moments are reported as NaN.
pub fn integrate_means(
    m_f0: f64,
    m_l0: &[f64],
    params: &MeanSystemParams,
    horizon: f64,
    output_dt: f64,
    substeps: usize,
) -> Vec<MomentState> {
    let m = params.size();
    assert_eq!(m_l0.len(), m);
    let h = output_dt / substeps as f64;
    let outputs = (horizon / output_dt).round() as usize;
    let record = |t: f64, f: f64, l: &[f64]| MomentState {
        t,
        m_f: f,
        m_l: l.to_vec(),
        e_f: f64::NAN,
        e_l: vec![f64::NAN; m],
    };
    let mut f = m_f0;
    let mut l = m_l0.to_vec();
    let mut out = Vec::with_capacity(outputs + 1);
    out.push(record(0.0, f, &l));
    let shifted = |l: &[f64], d: &[f64], s: f64| -> Vec<f64> {
        l.iter().zip(d).map(|(a, b)| a + s * b).collect()
    };
    for i in 1..=outputs {
        for _ in 0..substeps {
            let (k1f, k1l) = mean_rhs(f, &l, params);
            let (k2f, k2l) = mean_rhs(f + 0.5 * h * k1f, &shifted(&l, &k1l, 0.5 * h), params);
            let (k3f, k3l) = mean_rhs(f + 0.5 * h * k2f, &shifted(&l, &k2l, 0.5 * h), params);
            let (k4f, k4l) = mean_rhs(f + h * k3f, &shifted(&l, &k3l, h), params);
            f += h / 6.0 * (k1f + 2.0 * k2f + 2.0 * k3f + k4f);
            for k in 0..m {
                l[k] += h / 6.0 * (k1l[k] + 2.0 * k2l[k] + 2.0 * k3l[k] + k4l[k]);
            }
        }
        out.push(record(i as f64 * output_dt, f, &l));
    }
    out
}

/// `sum psi^l vbar^l / sum psi^l`.
pub fn asymptotic_consensus(strategies: &[StrategyParams]) -> Result<f64> {
    let total: f64 = strategies.iter().map(|s| s.psi).sum();
    if total == 0.0 {
        return Err(Error::ConsensusUndetermined);
    }
    Ok(strategies.iter().map(|s| s.psi * s.target).sum::<f64>() / total)
}

/// First time in `trajectory` after which `|m_F - vbar| < tol` holds for the
/// rest of the record.
pub fn settling_time(trajectory: &[MomentState], vbar: f64, tol: f64) -> Option<f64> {
    let last_bad = trajectory.iter().rposition(|s| (s.m_f - vbar).abs() >= tol);
    match last_bad {
        None => trajectory.first().map(|s| s.t),
        Some(i) => trajectory.get(i + 1).map(|s| s.t),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::preset;

    fn params(strategies: Vec<StrategyParams>, c: f64, rho: f64) -> MeanSystemParams {
        let m = strategies.len();
        MeanSystemParams {
            c_fl: vec![c; m],
            c_l: vec![c; m],
            rho: vec![rho; m],
            beta: 0.3,
            alpha: 0.1,
            strategies,
        }
    }

    #[test]
    fn consensus_examples() {
        let s = |psi: f64, target: f64| StrategyParams::new(psi, 1.0, target);
        assert_eq!(
            asymptotic_consensus(&[s(0.5, 0.5), s(0.5, -0.5)]).unwrap(),
            0.0
        );
        let v = asymptotic_consensus(&[s(0.05, -0.5), s(0.5, 0.0), s(0.95, 0.5)]).unwrap();
        assert!((v - 0.3).abs() < 1e-15);
        assert!((asymptotic_consensus(&[s(0.7, 0.2)]).unwrap() - 0.2).abs() < 1e-15);
        assert!(matches!(
            asymptotic_consensus(&[s(0.0, 0.2), s(0.0, -0.1)]),
            Err(Error::ConsensusUndetermined)
        ));
    }

    #[test]
    fn equilibrium_is_fixed_point() {
        let p = params(vec![StrategyParams::new(0.6, 1.0, 0.4)], 1.0, 0.2);
        let (df, dl) = mean_rhs(0.4, &[0.4], &p);
        assert_eq!(df, 0.0);
        assert_eq!(dl, vec![0.0]);
    }

    #[test]
    fn pure_relaxation() {
        let p = params(vec![StrategyParams::new(1.0, 1.0, 0.5)], 1.0, 0.2);
        let (_, a) = mean_rhs(0.0, &[0.1], &p);
        let (_, b) = mean_rhs(0.7, &[0.3], &p);
        // dm_L/dt = gain c rho (vbar - m_L), independent of m_F
        assert!((a[0] / 0.4 - b[0] / 0.2).abs() < 1e-15);
    }

    #[test]
    fn averaged_equations_match_reduced_system() {
        // rho^k = rho, c = 1/M: averaging the leader equations gives
        // mbar' = M gain rho / M * sum F = gain rho (sum psi vbar + sum mu m_F - M mbar)
        let strategies = vec![
            StrategyParams::new(0.05, 1.0, -0.5),
            StrategyParams::new(0.5, 1.0, 0.0),
            StrategyParams::new(0.95, 1.0, 0.5),
        ];
        let m = 3.0;
        let p = params(strategies.clone(), 1.0 / m, 0.05);
        let m_l = [0.2, -0.1, 0.35];
        let m_f = 0.15;
        let (df, dl) = mean_rhs(m_f, &m_l, &p);
        let mbar = m_l.iter().sum::<f64>() / m;
        let avg = dl.iter().sum::<f64>() / m;
        let gain = p.beta / (1.0 + (m - 1.0) * p.beta);
        let psi_v: f64 = strategies.iter().map(|s| s.psi * s.target).sum();
        let mu: f64 = strategies.iter().map(|s| s.mu).sum();
        let expected = gain * p.rho[0] / m * (psi_v + mu * m_f - m * mbar);
        assert!((avg - expected).abs() < 1e-15);
        assert!((df - p.rho[0] * p.alpha * (mbar - m_f)).abs() < 1e-15);
    }

    #[test]
    fn integration_converges_and_is_linear() {
        let s = preset("test2a").unwrap();
        let p = MeanSystemParams::from_scenario(&s).unwrap();
        let a = integrate_means(0.375, &[-0.5, 0.0, 0.5], &p, 20.0, 0.01, 10);
        let b = integrate_means(0.375, &[-0.5, 0.0, 0.5], &p, 20.0, 0.01, 20);
        let (ea, eb) = (a.last().unwrap(), b.last().unwrap());
        assert!((ea.m_f - eb.m_f).abs() < 1e-8);
        for k in 0..3 {
            assert!((ea.m_l[k] - eb.m_l[k]).abs() < 1e-8);
        }
        let mirrored = integrate_means(
            -0.375,
            &[0.5, 0.0, -0.5],
            &MeanSystemParams {
                strategies: p
                    .strategies
                    .iter()
                    .map(|s| StrategyParams {
                        target: -s.target,
                        ..*s
                    })
                    .collect(),
                ..p.clone()
            },
            20.0,
            0.01,
            10,
        );
        for (x, y) in a.iter().zip(&mirrored) {
            assert!((x.m_f + y.m_f).abs() < 1e-14);
        }
    }

    #[test]
    fn reduced_system_reaches_consensus() {
        let mut s = preset("test2a").unwrap();
        for l in &mut s.leaders {
            l.c_fl = 1.0 / 3.0;
            l.c_l = 1.0 / 3.0;
        }
        let p = MeanSystemParams::from_scenario(&s).unwrap();
        let vbar = asymptotic_consensus(&p.strategies).unwrap();
        let traj = integrate_means(0.375, &[-0.5, 0.0, 0.5], &p, 400.0, 0.1, 10);
        let end = traj.last().unwrap();
        assert!((end.m_f - vbar).abs() < 1e-6, "{}", end.m_f);
        let t = settling_time(&traj, vbar, 0.01).unwrap();
        assert!(t > 0.0 && t < 400.0);
    }

    #[test]
    fn unequal_penalties_rejected() {
        let s = preset("test2b").unwrap();
        assert!(MeanSystemParams::from_scenario(&s).is_err());
    }
}
