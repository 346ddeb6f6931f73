//! Analytic stationary densities of the Fokker-Planck limit with diffusion
//! `D(w) = 1 - w^2`, their normalization, and a finite-difference check of
//! the stationary equation `(c - w) f = s d/dw[(1 - w^2)^2 f]`.

use crate::best_reply::StrategyParams;
use crate::error::{Error, Result};
use crate::histogram::Histogram;

/// Unnormalized log-density
/// `(-2 + c/(2 s2)) ln(1 + w) + (-2 - c/(2 s2)) ln(1 - w) - (1 - c w) / (s2 (1 - w^2))`
/// for center `c` and variance parameter `s2`. Returns `-inf` outside
/// `(-1, 1)`.
pub fn log_density(w: f64, center: f64, s2: f64) -> f64 {
    if !(w > -1.0 && w < 1.0) {
        return f64::NEG_INFINITY;
    }
    let c = center / (2.0 * s2);
    (-2.0 + c) * (1.0 + w).ln() + (-2.0 - c) * (1.0 - w).ln()
        - (1.0 - center * w) / (s2 * (1.0 - w * w))
}

/// Unnormalized follower density for consensus `vbar` and variance `sigma_f2`.
pub fn follower_density(w: f64, vbar: f64, sigma_f2: f64) -> f64 {
    log_density(w, vbar, sigma_f2).exp()
}

/// Unnormalized leader density with shift `b_l` and noise variance `sigma_eta2`.
pub fn leader_density(v: f64, b_l: f64, sigma_eta2: f64) -> f64 {
    log_density(v, b_l, sigma_eta2).exp()
}

/// `sigma_F^2 = (sigma_xi^2 + sum_l sigma_xi_l^2) / 2`.
pub fn follower_variance(sigma_xi2: f64, leader_sigma2: &[f64]) -> f64 {
    0.5 * (sigma_xi2 + leader_sigma2.iter().sum::<f64>())
}

/// Variance parameter of the follower density for general encounter
/// frequencies: the particle drift toward consensus is `(1 + sum c_FL)` times
/// faster than the follower-follower part alone, and leader noise enters in
/// proportion to `c_FL`. Reduces to [`follower_variance`] with weighted leader
/// variances when `sum c_FL = 1`.
pub fn effective_follower_variance(sigma_xi2: f64, leaders: &[(f64, f64)]) -> f64 {
    let rate: f64 = leaders.iter().map(|(c, _)| c).sum();
    let noise: f64 = leaders.iter().map(|(c, s2)| c * s2).sum();
    (sigma_xi2 + noise) / (1.0 + rate)
}

/// `b_L^k = m_L,inf^k + (1/M) sum_l psi^l (vbar^l - vbar)`.
pub fn leader_shift(m_l_inf: f64, strategies: &[StrategyParams], vbar: f64) -> f64 {
    let m = strategies.len() as f64;
    m_l_inf
        + strategies
            .iter()
            .map(|s| s.psi * (s.target - vbar))
            .sum::<f64>()
            / m
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let n = panels + panels % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// A normalized stationary density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalized {
    pub center: f64,
    pub s2: f64,
    /// `ln gamma` such that `gamma exp(log_density)` integrates to one.
    pub log_gamma: f64,
    /// Truncation used by the quadrature.
    pub delta: f64,
    /// Mass of the normalized density on the two truncated end intervals.
    pub tail_mass: f64,
    pub panels: usize,
}

impl Normalized {
    pub fn pdf(&self, w: f64) -> f64 {
        (self.log_gamma + log_density(w, self.center, self.s2)).exp()
    }

    fn integrate_with(&self, g: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        let span = (b - a).max(0.0);
        let panels = ((span / 2.0 * self.panels as f64).ceil() as usize).max(64);
        simpson(|w| g(w) * self.pdf(w), a, b, panels)
    }

    /// `int_a^b f`.
    pub fn integrate(&self, a: f64, b: f64) -> f64 {
        self.integrate_with(|_| 1.0, a, b)
    }

    pub fn mean(&self) -> f64 {
        self.integrate_with(|w| w, -1.0 + self.delta, 1.0 - self.delta)
    }
}

const TAIL_TOL: f64 = 1e-10;
const REFINE_TOL: f64 = 1e-10;
const MAX_PANELS: usize = 1 << 22;

/// Normalizes the density with composite Simpson on `[-1 + delta, 1 - delta]`,
/// starting at `delta = 1e-3`, doubling panels until successive integrals
/// agree to `1e-10` relative, and shrinking `delta` until the tail mass is
/// below `1e-10`.
pub fn normalize(center: f64, s2: f64) -> Result<Normalized> {
    if !(s2 > 0.0 && s2.is_finite()) || !(center > -1.0 && center < 1.0) {
        return Err(Error::Quadrature(format!(
            "need s2 > 0 and center in (-1, 1), got s2 = {s2}, center = {center}"
        )));
    }
    // shift by the grid maximum so exp never overflows
    let peak = (0..=20_000)
        .map(|i| log_density(-1.0 + 2.0 * i as f64 / 20_000.0, center, s2))
        .fold(f64::NEG_INFINITY, f64::max);
    let scaled = |w: f64| (log_density(w, center, s2) - peak).exp();

    let mut delta = 1e-3;
    loop {
        let (a, b) = (-1.0 + delta, 1.0 - delta);
        let mut panels = 4096;
        let mut prev = simpson(scaled, a, b, panels);
        loop {
            panels *= 2;
            let next = simpson(scaled, a, b, panels);
            let converged = (next - prev).abs() <= REFINE_TOL * next.abs();
            prev = next;
            if converged {
                break;
            }
            if panels >= MAX_PANELS {
                return Err(Error::Quadrature(format!(
                    "no convergence with {panels} panels"
                )));
            }
        }
        if !(prev > 0.0 && prev.is_finite()) {
            return Err(Error::Quadrature(format!(
                "integral {prev} is not positive"
            )));
        }
        // the density and all its derivatives vanish at the endpoints
        let tail = simpson(scaled, -1.0, a, 256) + simpson(scaled, b, 1.0, 256);
        let tail_mass = tail / prev;
        if tail_mass < TAIL_TOL {
            return Ok(Normalized {
                center,
                s2,
                log_gamma: -(peak + prev.ln()),
                delta,
                tail_mass,
                panels,
            });
        }
        delta *= 0.1;
        if delta < 1e-12 {
            return Err(Error::Quadrature(format!(
                "tail mass {tail_mass:e} does not vanish"
            )));
        }
    }
}

/// Largest relative residual of `(center - w) f - coeff d/dw[(1 - w^2)^2 f]`
/// on `n` points of `[-0.95, 0.95]`, using fourth-order central differences.
/// The scale is the largest `|(center - w) f|` on the grid.
pub fn residual(f: impl Fn(f64) -> f64, center: f64, coeff: f64, n: usize) -> f64 {
    let g = |w: f64| (1.0 - w * w).powi(2) * f(w);
    let h = 1e-4;
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for i in 0..n {
        let w = -0.95 + 1.9 * i as f64 / (n - 1) as f64;
        let dg = (-g(w + 2.0 * h) + 8.0 * g(w + h) - 8.0 * g(w - h) + g(w - 2.0 * h)) / (12.0 * h);
        let lhs = (center - w) * f(w);
        worst = worst.max((lhs - coeff * dg).abs());
        scale = scale.max(lhs.abs());
    }
    worst / scale
}

/// `sum_bins |empirical mass - int_bin f|`.
pub fn l1_distance(hist: &Histogram, density: &Normalized) -> f64 {
    hist.masses()
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let (a, b) = hist.edges(i);
            (m - density.integrate(a.max(-1.0), b.min(1.0))).abs()
        })
        .sum()
}

/// Density values on `n` equally spaced interior points, for export.
pub fn tabulate(density: &Normalized, n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let w = -1.0 + 2.0 * (i as f64 + 0.5) / n as f64;
            (w, density.pdf(w))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_at_zero_center() {
        for w in [0.1, 0.5, 0.9] {
            let a = follower_density(w, 0.0, 0.05);
            let b = follower_density(-w, 0.0, 0.05);
            assert!((a - b).abs() <= 1e-14 * a);
        }
        assert_eq!(
            leader_density(0.3, 0.0, 0.02),
            leader_density(-0.3, 0.0, 0.02)
        );
    }

    #[test]
    fn vanishes_at_endpoints() {
        assert_eq!(follower_density(1.0, 0.2, 0.1), 0.0);
        assert_eq!(follower_density(-1.0, 0.2, 0.1), 0.0);
        assert!(follower_density(0.999_999, 0.2, 0.1) < 1e-100);
    }

    #[test]
    fn normalization_and_mean() {
        for (c, s2) in [(0.0, 0.05), (0.3, 0.01), (-0.5, 0.2), (0.2, 1e-3)] {
            let d = normalize(c, s2).unwrap();
            let total = d.integrate(-1.0 + d.delta, 1.0 - d.delta);
            assert!((total - 1.0).abs() < 1e-8, "{c} {s2}: {total}");
            assert!(d.tail_mass < 1e-10);
            assert!((d.mean() - c).abs() < 1e-6, "{c} {s2}: {}", d.mean());
        }
    }

    #[test]
    fn residual_accepts_formula_and_rejects_wrong_constants() {
        let (c, s2) = (0.25, 0.08);
        let d = normalize(c, s2).unwrap();
        assert!(residual(|w| d.pdf(w), c, s2 / 2.0, 401) < 1e-6);
        // exponent denominators sigma^2 instead of 2 sigma^2
        let wrong = |w: f64| {
            let k = c / s2;
            ((-2.0 + k) * (1.0 + w).ln() + (-2.0 - k) * (1.0 - w).ln()
                - (1.0 - c * w) / (s2 * (1.0 - w * w)))
                .exp()
        };
        assert!(residual(wrong, c, s2 / 2.0, 401) > 1e-3);
        // the factor (1 + w) repeated
        let repeated = |w: f64| {
            let k = c / (2.0 * s2);
            ((-2.0 + k) * (1.0 + w).ln() + (-2.0 - k) * (1.0 + w).ln()
                - (1.0 - c * w) / (s2 * (1.0 - w * w)))
                .exp()
        };
        assert!(residual(repeated, c, s2 / 2.0, 401) > 1e-3);
    }

    #[test]
    fn effective_variance_reduces_to_weighted_form() {
        let a = effective_follower_variance(0.04, &[(0.5, 0.02), (0.5, 0.06)]);
        let b = follower_variance(0.04, &[0.5 * 0.02, 0.5 * 0.06]);
        assert!((a - b).abs() < 1e-17);
    }

    #[test]
    fn single_radical_group_shift() {
        let s = [StrategyParams::new(1.0, 1.0, 0.4)];
        assert_eq!(leader_shift(0.4, &s, 0.4), 0.4);
    }

    #[test]
    fn l1_of_exact_masses_is_small() {
        let d = normalize(0.1, 0.05).unwrap();
        let mut h = Histogram::new(-1.0, 1.0, 50);
        // deterministic quantile sample of the density
        let n = 200_000;
        let grid: Vec<(f64, f64)> = tabulate(&d, 20_000);
        let mut cdf = 0.0;
        let mut next = 0;
        for (w, p) in grid {
            cdf += p * 2.0 / 20_000.0;
            while next < n && (next as f64 + 0.5) / n as f64 <= cdf {
                h.add(w);
                next += 1;
            }
        }
        assert!(l1_distance(&h, &d) < 0.01);
    }
}
