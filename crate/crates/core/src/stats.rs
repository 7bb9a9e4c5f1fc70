//! Wilcoxon signed-rank and rank-sum (Mann-Whitney) tests.
//!
//! Zeros are dropped from signed-rank samples, ties receive midranks, and all
//! p-values are two-sided. Exact p-values count sign patterns (or rank
//! assignments) over doubled midranks, which are integers, so ties are handled
//! without approximation.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Largest sample for exact signed-rank enumeration.
pub const SIGNED_RANK_EXACT_MAX: usize = 25;
/// Largest pooled size for exact rank-sum enumeration.
pub const RANK_SUM_EXACT_MAX: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMode {
    Exact,
    NormalApprox,
    /// Exact when the sample is small enough, otherwise the normal approximation.
    #[default]
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    /// Effective sample size (after zero removal for the signed-rank test).
    pub n: usize,
    pub exact: bool,
}

/// Midranks (1-based) of `values`.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && values[idx[j]] == values[idx[i]] {
            j += 1;
        }
        // Positions i..j share the average of ranks i+1..=j.
        let r = (i + 1 + j) as f64 / 2.0;
        for &k in &idx[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    ranks
}

/// Sum of `t^3 - t` over tie groups.
fn tie_term(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mut total = 0.0;
    let mut i = 0;
    while i < v.len() {
        let mut j = i + 1;
        while j < v.len() && v[j] == v[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        total += t * t * t - t;
        i = j;
    }
    total
}

fn two_sided_normal(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0)
}

/// Two-sided p from the exact null counts of an integer statistic.
fn two_sided_from_counts(counts: &[u64], observed: usize) -> f64 {
    let total: u64 = counts.iter().sum();
    let le: u64 = counts[..=observed].iter().sum();
    let ge: u64 = counts[observed..].iter().sum();
    (2.0 * le.min(ge) as f64 / total as f64).min(1.0)
}

/// Wilcoxon signed-rank test of symmetry about zero.
pub fn wilcoxon_signed_rank(sample: &[f64], mode: TestMode) -> Result<TestResult> {
    if sample.iter().any(|v| !v.is_finite()) {
        return Err(Error::Stat("signed-rank sample contains non-finite values".into()));
    }
    let nz: Vec<f64> = sample.iter().copied().filter(|&v| v != 0.0).collect();
    let n = nz.len();
    if n == 0 {
        return Err(Error::Stat("degenerate signed-rank sample: every value is zero".into()));
    }
    let abs: Vec<f64> = nz.iter().map(|v| v.abs()).collect();
    let ranks = midranks(&abs);
    let w: f64 = nz
        .iter()
        .zip(&ranks)
        .filter(|(v, _)| **v > 0.0)
        .map(|(_, r)| r)
        .sum();

    let exact = match mode {
        TestMode::Exact if n > SIGNED_RANK_EXACT_MAX => {
            return Err(Error::Config(format!(
                "exact signed-rank needs n <= {SIGNED_RANK_EXACT_MAX}, got {n}"
            )))
        }
        TestMode::Exact => true,
        TestMode::NormalApprox => false,
        TestMode::Auto => n <= SIGNED_RANK_EXACT_MAX,
    };

    let p_value = if exact {
        let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
        let max: usize = doubled.iter().sum();
        let mut counts = vec![0u64; max + 1];
        counts[0] = 1;
        let mut reach = 0;
        for &r in &doubled {
            for s in (0..=reach).rev() {
                if counts[s] > 0 {
                    counts[s + r] += counts[s];
                }
            }
            reach += r;
        }
        two_sided_from_counts(&counts, (2.0 * w).round() as usize)
    } else {
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term(&abs) / 48.0;
        if var <= 0.0 {
            1.0
        } else {
            let d = ((w - mean).abs() - 0.5).max(0.0);
            two_sided_normal(d / var.sqrt())
        }
    };
    Ok(TestResult {
        statistic: w,
        p_value,
        n,
        exact,
    })
}

/// Wilcoxon rank-sum / Mann-Whitney test; the statistic is `U` of sample `a`.
pub fn rank_sum(a: &[f64], b: &[f64], mode: TestMode) -> Result<TestResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Stat("rank-sum test needs two non-empty samples".into()));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::Stat("rank-sum sample contains non-finite values".into()));
    }
    let (na, nb) = (a.len(), b.len());
    let n = na + nb;
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&pooled);
    let ra: f64 = ranks[..na].iter().sum();
    let u = ra - (na * (na + 1)) as f64 / 2.0;

    let exact = match mode {
        TestMode::Exact if n > RANK_SUM_EXACT_MAX => {
            return Err(Error::Config(format!(
                "exact rank-sum needs n_a + n_b <= {RANK_SUM_EXACT_MAX}, got {n}"
            )))
        }
        TestMode::Exact => true,
        TestMode::NormalApprox => false,
        TestMode::Auto => n <= RANK_SUM_EXACT_MAX,
    };

    let p_value = if exact {
        // ways[k][s]: subsets of size k whose doubled ranks sum to s.
        let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
        let max: usize = doubled.iter().sum();
        let mut ways = vec![vec![0u64; max + 1]; na + 1];
        ways[0][0] = 1;
        for &r in &doubled {
            for k in (1..=na).rev() {
                for s in (r..=max).rev() {
                    let add = ways[k - 1][s - r];
                    if add > 0 {
                        ways[k][s] += add;
                    }
                }
            }
        }
        two_sided_from_counts(&ways[na], (2.0 * ra).round() as usize)
    } else {
        let (naf, nbf, nf) = (na as f64, nb as f64, n as f64);
        let mean = naf * nbf / 2.0;
        let var = naf * nbf / 12.0 * ((nf + 1.0) - tie_term(&pooled) / (nf * (nf - 1.0)));
        if var <= 0.0 {
            1.0
        } else {
            let d = ((u - mean).abs() - 0.5).max(0.0);
            two_sided_normal(d / var.sqrt())
        }
    };
    Ok(TestResult {
        statistic: u,
        p_value,
        n,
        exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn midranks_with_ties() {
        assert_eq!(midranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn signed_rank_small_exact() {
        let r = wilcoxon_signed_rank(&[1.0, 2.0, 3.0], TestMode::Exact).unwrap();
        assert_eq!(r.statistic, 6.0);
        assert_abs_diff_eq!(r.p_value, 0.25, epsilon = 1e-15);
    }

    #[test]
    fn signed_rank_balanced_pairs() {
        let r = wilcoxon_signed_rank(&[2.5, -2.5], TestMode::Exact).unwrap();
        assert_eq!(r.p_value, 1.0);
        let r = wilcoxon_signed_rank(&[2.5, -2.5, 1.0, -1.0], TestMode::NormalApprox).unwrap();
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn signed_rank_drops_zeros_and_rejects_all_zero() {
        let a = wilcoxon_signed_rank(&[0.0, 1.0, 2.0, 3.0], TestMode::Exact).unwrap();
        assert_eq!(a.n, 3);
        assert!(matches!(
            wilcoxon_signed_rank(&[0.0, 0.0], TestMode::Auto),
            Err(Error::Stat(_))
        ));
        assert!(wilcoxon_signed_rank(&vec![1.0; 26], TestMode::Exact).is_err());
    }

    #[test]
    fn rank_sum_small_exact() {
        let r = rank_sum(&[1.0, 2.0], &[3.0, 4.0], TestMode::Exact).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_abs_diff_eq!(r.p_value, 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn rank_sum_identical_samples() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let e = rank_sum(&a, &a, TestMode::Exact).unwrap();
        let n = rank_sum(&a, &a, TestMode::NormalApprox).unwrap();
        assert_eq!(e.p_value, 1.0);
        assert_eq!(n.p_value, 1.0);
    }

    #[test]
    fn rank_sum_errors() {
        assert!(rank_sum(&[], &[1.0], TestMode::Auto).is_err());
        assert!(rank_sum(&[1.0; 11], &[2.0; 10], TestMode::Exact).is_err());
    }
}
