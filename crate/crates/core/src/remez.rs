//! Remez-type inequality `sup_I |f| <= (4|I|/|omega|)^d sup_omega |f|` and
//! empirical Chebyshev degrees of univariate functions.
//!
//! Suprema are taken over uniform grids (4096 points, distributed over the
//! pieces of `omega` in proportion to their length) with one nested doubling.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SUP_GRID: usize = 4096;
/// Relative slack of [`remez_check`].
pub const HOLDS_SLACK: f64 = 1e-6;
/// Most pieces in a sampled `omega`.
pub const MAX_PIECES: usize = 4;
/// Smallest sampled `|omega| / |I|`.
pub const MIN_FRACTION: f64 = 0.05;

/// An interval `I` with a subset `omega` given as disjoint closed subintervals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalSubset {
    pub interval: (f64, f64),
    pub omega: Vec<(f64, f64)>,
}

impl IntervalSubset {
    pub fn new(interval: (f64, f64), mut omega: Vec<(f64, f64)>) -> Result<Self> {
        let (a, b) = interval;
        if !(a < b) {
            return Err(Error::Domain(format!("empty interval [{a}, {b}]")));
        }
        omega.sort_by(|x, y| x.0.total_cmp(&y.0));
        for (j, &(lo, hi)) in omega.iter().enumerate() {
            if !(lo < hi) || lo < a || hi > b {
                return Err(Error::Domain(format!(
                    "piece [{lo}, {hi}] is empty or outside [{a}, {b}]"
                )));
            }
            if j > 0 && lo <= omega[j - 1].1 {
                return Err(Error::Domain("pieces of omega overlap".into()));
            }
        }
        if omega.is_empty() {
            return Err(Error::Domain("omega has no pieces".into()));
        }
        Ok(Self { interval, omega })
    }

    pub fn interval_length(&self) -> f64 {
        self.interval.1 - self.interval.0
    }

    pub fn measure_omega(&self) -> f64 {
        self.omega.iter().map(|(lo, hi)| hi - lo).sum()
    }

    /// `4 |I| / |omega|`.
    pub fn ratio(&self) -> f64 {
        4.0 * self.interval_length() / self.measure_omega()
    }
}

fn grid_sup<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, n: usize) -> f64 {
    let n = n.max(2);
    (0..n)
        .map(|j| f(lo + (hi - lo) * j as f64 / (n - 1) as f64).abs())
        .fold(0.0, f64::max)
}

/// Supremum of `|f|` over a union of intervals: coarse grid plus the nested
/// doubled grid (the doubled grid contains the coarse one).
fn sup_over<F: Fn(f64) -> f64>(f: &F, pieces: &[(f64, f64)]) -> f64 {
    let total: f64 = pieces.iter().map(|(lo, hi)| hi - lo).sum();
    pieces
        .iter()
        .map(|&(lo, hi)| {
            let n = ((SUP_GRID as f64 * (hi - lo) / total).ceil() as usize).max(2);
            grid_sup(f, lo, hi, 2 * n - 1)
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemezCheck {
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
}

/// Checks the inequality on one pair with exponent `d`.
pub fn remez_check<F: Fn(f64) -> f64>(f: F, pair: &IntervalSubset, d: f64) -> RemezCheck {
    let lhs = sup_over(&f, &[pair.interval]);
    let rhs = pair.ratio().powf(d) * sup_over(&f, &pair.omega);
    RemezCheck {
        holds: lhs <= rhs * (1.0 + HOLDS_SLACK),
        lhs,
        rhs,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChebDegreeEstimate {
    pub d_hat: f64,
    pub trials: usize,
    pub worst_pair: IntervalSubset,
}

/// Largest exponent forced by the sampled pairs:
/// `max log(sup_I |f| / sup_omega |f|) / log(4|I|/|omega|)`, floored at 0.
pub fn estimate_cheb_degree<F: Fn(f64) -> f64>(
    f: F,
    family: &[IntervalSubset],
) -> Result<ChebDegreeEstimate> {
    let first = family
        .first()
        .ok_or_else(|| Error::Domain("empty interval family".into()))?;
    let mut best = (0.0, first);
    for pair in family {
        let sup_i = sup_over(&f, &[pair.interval]);
        let sup_w = sup_over(&f, &pair.omega);
        if !(sup_w > 0.0) {
            return Err(Error::DegenerateSup);
        }
        let d = (sup_i / sup_w).ln() / pair.ratio().ln();
        if d > best.0 {
            best = (d, pair);
        }
    }
    Ok(ChebDegreeEstimate {
        d_hat: best.0,
        trials: family.len(),
        worst_pair: best.1.clone(),
    })
}

/// Random `omega` inside `interval`: between one and four disjoint pieces
/// with total length at least 5% of the interval.
pub fn random_pair<R: Rng + ?Sized>(interval: (f64, f64), rng: &mut R) -> IntervalSubset {
    let (a, b) = interval;
    let len = b - a;
    loop {
        let pieces = rng.random_range(1..=MAX_PIECES);
        let mut cuts: Vec<f64> = (0..2 * pieces).map(|_| rng.random_range(a..b)).collect();
        cuts.sort_by(f64::total_cmp);
        let omega: Vec<(f64, f64)> = cuts
            .chunks(2)
            .map(|c| (c[0], c[1]))
            .filter(|(lo, hi)| hi > lo)
            .collect();
        let Ok(pair) = IntervalSubset::new(interval, omega) else {
            continue;
        };
        if pair.measure_omega() >= MIN_FRACTION * len {
            return pair;
        }
    }
}

pub fn random_family<R: Rng + ?Sized>(
    interval: (f64, f64),
    trials: usize,
    rng: &mut R,
) -> Vec<IntervalSubset> {
    (0..trials).map(|_| random_pair(interval, rng)).collect()
}

/// Chebyshev polynomial `T_n(x)` by the three-term recurrence.
pub fn chebyshev_t(n: usize, x: f64) -> f64 {
    match n {
        0 => 1.0,
        _ => {
            let (mut prev, mut cur) = (1.0, x);
            for _ in 1..n {
                (prev, cur) = (cur, 2.0 * x * cur - prev);
            }
            cur
        }
    }
}

/// Evaluates `sum c_j x^j`.
pub fn polynomial(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_on_half_interval() {
        let pair = IntervalSubset::new((0.0, 1.0), vec![(0.0, 0.5)]).unwrap();
        let chk = remez_check(|x| x, &pair, 1.0);
        assert_eq!(chk.lhs, 1.0);
        assert_eq!(chk.rhs, 4.0);
        assert!(chk.holds);
    }

    #[test]
    fn constant_holds_with_equality() {
        let pair = IntervalSubset::new((-2.0, 3.0), vec![(0.0, 0.3), (1.0, 1.5)]).unwrap();
        let chk = remez_check(|_| -2.5, &pair, 0.0);
        assert_eq!(chk.lhs, 2.5);
        assert_eq!(chk.rhs, 2.5);
        assert!(chk.holds);
        let est = estimate_cheb_degree(|_| 7.0, &[pair]).unwrap();
        assert_eq!(est.d_hat, 0.0);
    }

    #[test]
    fn chebyshev_t4_on_symmetric_subset() {
        let pair = IntervalSubset::new((-1.0, 1.0), vec![(-0.9, 0.9)]).unwrap();
        let chk = remez_check(|x| chebyshev_t(4, x), &pair, 4.0);
        // 10^4-point grid oracle
        let oracle = |lo: f64, hi: f64| {
            (0..10_000)
                .map(|j| chebyshev_t(4, lo + (hi - lo) * j as f64 / 9999.0).abs())
                .fold(0.0, f64::max)
        };
        assert!((chk.lhs - oracle(-1.0, 1.0)).abs() < 1e-12);
        let rhs = (8.0f64 / 1.8).powi(4) * oracle(-0.9, 0.9);
        // the grids differ, so agreement is to the O(h^2) sup error
        assert!((chk.rhs - rhs).abs() < 1e-6 * rhs);
        assert!(chk.holds);
    }

    #[test]
    fn chebyshev_recurrence_matches_cosine_form() {
        for n in 0..9 {
            for j in 0..20 {
                let x = -1.0 + 2.0 * j as f64 / 19.0;
                let t = (n as f64 * x.acos()).cos();
                assert!((chebyshev_t(n, x) - t).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn identity_degree_at_most_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let family = random_family((-1.0, 1.0), 1000, &mut rng);
        let est = estimate_cheb_degree(|x| x, &family).unwrap();
        assert!(est.d_hat <= 1.0 && est.d_hat > 0.0);
        assert_eq!(est.trials, 1000);
    }

    #[test]
    fn estimate_holds_on_its_own_family() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let f = |x: f64| polynomial(&[0.3, -0.8, 0.1, 0.9], x);
        let family = random_family((-1.0, 2.0), 300, &mut rng);
        let est = estimate_cheb_degree(f, &family).unwrap();
        for pair in &family {
            assert!(remez_check(f, pair, est.d_hat).holds);
        }
        // more pairs can only raise the estimate
        let mut bigger = family.clone();
        bigger.extend(random_family((-1.0, 2.0), 300, &mut rng));
        assert!(estimate_cheb_degree(f, &bigger).unwrap().d_hat >= est.d_hat);
    }

    #[test]
    fn vanishing_function_is_degenerate() {
        let pair = IntervalSubset::new((0.0, 1.0), vec![(0.0, 0.5)]).unwrap();
        assert!(matches!(
            estimate_cheb_degree(|x| if x <= 0.5 { 0.0 } else { x - 0.5 }, &[pair]),
            Err(Error::DegenerateSup)
        ));
        assert!(estimate_cheb_degree(|x| x, &[]).is_err());
    }

    #[test]
    fn sampled_pairs_are_well_formed() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for pair in random_family((3.0, 5.0), 500, &mut rng) {
            assert!(pair.omega.len() <= MAX_PIECES);
            assert!(pair.measure_omega() >= MIN_FRACTION * 2.0);
            assert!(pair.measure_omega() <= 2.0);
            for w in pair.omega.windows(2) {
                assert!(w[0].1 < w[1].0);
            }
        }
    }

    #[test]
    fn malformed_pairs_are_rejected() {
        assert!(IntervalSubset::new((1.0, 0.0), vec![(0.2, 0.3)]).is_err());
        assert!(IntervalSubset::new((0.0, 1.0), vec![(0.2, 1.3)]).is_err());
        assert!(IntervalSubset::new((0.0, 1.0), vec![(0.2, 0.5), (0.4, 0.6)]).is_err());
        assert!(IntervalSubset::new((0.0, 1.0), vec![]).is_err());
    }
}
