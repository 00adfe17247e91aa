//! Two-sided Mann-Whitney U test.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Pooled sample size up to which the p-value is computed by enumeration.
pub const EXACT_LIMIT: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// U statistic of the first sample: `R_a − n_a(n_a + 1)/2`.
    pub u: f64,
    pub p_value: f64,
    pub exact: bool,
}

/// Mid-ranks (1-based) of the pooled values.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        i = j;
    }
    ranks
}

fn check(a: &[f64], b: &[f64]) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Config("Mann-Whitney needs two non-empty samples".into()));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("Mann-Whitney sample".into()));
    }
    Ok(())
}

fn u_statistic(ranks_a: impl Iterator<Item = f64>, n_a: usize) -> f64 {
    ranks_a.sum::<f64>() - (n_a * (n_a + 1)) as f64 / 2.0
}

/// Exact when `n_a + n_b <= 12`, normal approximation otherwise.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    if a.len() + b.len() <= EXACT_LIMIT {
        mann_whitney_exact(a, b)
    } else {
        mann_whitney_normal(a, b)
    }
}

/// Permutation distribution of U over every way of choosing which pooled
/// observations belong to the first sample (ties keep their mid-ranks).
pub fn mann_whitney_exact(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    check(a, b)?;
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&pooled);
    let (n_a, n) = (a.len(), pooled.len());
    if n > 30 {
        return Err(Error::Config(format!("exact enumeration over {n} observations is infeasible")));
    }
    let mean = (n_a * (n - n_a)) as f64 / 2.0;
    let u = u_statistic(ranks[..n_a].iter().copied(), n_a);
    let observed = (u - mean).abs();

    let mut extreme = 0u64;
    let mut total = 0u64;
    let mut pick: Vec<usize> = (0..n_a).collect();
    loop {
        let u_perm = u_statistic(pick.iter().map(|&i| ranks[i]), n_a);
        total += 1;
        if (u_perm - mean).abs() >= observed - 1e-9 {
            extreme += 1;
        }
        // next combination in lexicographic order
        let mut i = n_a;
        while i > 0 && pick[i - 1] == n - n_a + i - 1 {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        pick[i - 1] += 1;
        for j in i..n_a {
            pick[j] = pick[j - 1] + 1;
        }
    }
    Ok(MannWhitney {
        u,
        p_value: extreme as f64 / total as f64,
        exact: true,
    })
}

/// Normal approximation with tie and continuity corrections.
pub fn mann_whitney_normal(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    check(a, b)?;
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&pooled);
    let (n_a, n_b) = (a.len() as f64, b.len() as f64);
    let n = n_a + n_b;
    let u = u_statistic(ranks[..a.len()].iter().copied(), a.len());
    let mean = n_a * n_b / 2.0;

    let mut sorted = pooled.clone();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }
    let variance = n_a * n_b / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    let p_value = if variance <= 0.0 {
        1.0
    } else {
        let z = ((u - mean).abs() - 0.5).max(0.0) / variance.sqrt();
        erfc(z / std::f64::consts::SQRT_2).min(1.0)
    };
    Ok(MannWhitney {
        u,
        p_value,
        exact: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fully_separated_three_by_three() {
        let r = mann_whitney_u(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert_eq!(r.u, 0.0);
        assert!(r.exact);
        assert!((r.p_value - 0.1).abs() < 1e-12);
    }

    #[test]
    fn identical_samples_show_no_effect() {
        let a = [0.4, 0.7, 0.7, 0.9, 0.1];
        let r = mann_whitney_u(&a, &a).unwrap();
        assert_eq!(r.u, 12.5);
        assert!(r.p_value >= 0.99);
    }

    #[test]
    fn midranks_average_ties() {
        assert_eq!(midranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn all_tied_is_not_significant() {
        let r = mann_whitney_normal(&[1.0; 10], &[1.0; 10]).unwrap();
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn empty_sample_is_an_error() {
        assert!(mann_whitney_u(&[], &[1.0]).is_err());
    }

    #[test]
    fn large_samples_use_the_approximation() {
        let a: Vec<f64> = (0..10).map(f64::from).collect();
        let b: Vec<f64> = (5..15).map(f64::from).collect();
        let r = mann_whitney_u(&a, &b).unwrap();
        assert!(!r.exact);
        assert!(r.p_value > 0.0 && r.p_value < 0.05);
    }
}
