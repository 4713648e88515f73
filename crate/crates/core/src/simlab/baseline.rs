//! Reference detectors used as comparison columns in the power tables.
//!
//! Both baselines answer the same question as the spanning-ratio scan at
//! the central split of a window of 2n observations: do the two halves come
//! from the same distribution?
//!
//! - `hotelling_t2`: the classical two-sample location test with pooled
//!   covariance. Exact under Gaussian sampling, but it needs the covariance
//!   estimate to be invertible, so it signals `NotApplicable` once the
//!   dimension reaches the sample budget (d >= 2n - 1) or the pooled
//!   scatter is numerically singular.
//! - `edge_count_baseline`: a graph two-sample test that counts edges of
//!   the pooled minimum spanning tree joining the two halves and compares
//!   the count against its label-permutation distribution on the same tree.
//!   Few cross edges mean the halves are separated.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{build_graph, check_window, GraphKind, Observation};
use crate::specialfn::f_quantile;

/// Outcome category of a baseline test on one window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineDecision {
    /// Evidence of a change at the split.
    Reject,
    /// No evidence of a change.
    Retain,
    /// The test does not apply to this window (for example, the dimension
    /// exceeds what the covariance estimate supports).
    NotApplicable,
}

/// Decision plus the raw comparison behind it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineOutcome {
    pub decision: BaselineDecision,
    /// Test statistic: the F-transformed T-squared, or the edge-count
    /// z-score. None when not applicable.
    pub statistic: Option<f64>,
    /// What the statistic was compared against: the F critical value, or
    /// the permutation p-value. None when not applicable.
    pub reference: Option<f64>,
}

impl BaselineOutcome {
    fn not_applicable() -> Self {
        BaselineOutcome {
            decision: BaselineDecision::NotApplicable,
            statistic: None,
            reference: None,
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    Ok(())
}

/// Two-sample Hotelling test on a window of 2n observations split at the
/// middle.
///
/// The squared Mahalanobis distance between the half means, scaled by
/// (2n - 1 - d) / ((2n - 2) d), is compared against the upper-alpha
/// quantile of F(d, 2n - 1 - d). Returns `NotApplicable` when
/// d >= 2n - 1 or the pooled scatter matrix has no Cholesky factor.
pub fn hotelling_t2(points: &[Observation], alpha: f64) -> Result<BaselineOutcome> {
    check_window(points)?;
    check_alpha(alpha)?;
    let m = points.len();
    let n = m / 2;
    let d = points[0].dim();
    if d >= m - 1 {
        return Ok(BaselineOutcome::not_applicable());
    }

    let mean_of = |block: &[Observation]| -> Vec<f64> {
        let mut mu = vec![0.0; d];
        for p in block {
            for (acc, v) in mu.iter_mut().zip(p.values()) {
                *acc += v;
            }
        }
        for acc in &mut mu {
            *acc /= block.len() as f64;
        }
        mu
    };
    let mu_left = mean_of(&points[..n]);
    let mu_right = mean_of(&points[n..]);

    // Pooled scatter S = (sum of within-half outer products) / (2n - 2),
    // stored row-major; only the lower triangle is read by the factorization.
    let mut s = vec![0.0; d * d];
    let mut accumulate = |block: &[Observation], mu: &[f64]| {
        for p in block {
            for i in 0..d {
                let di = p.values()[i] - mu[i];
                for j in 0..=i {
                    s[i * d + j] += di * (p.values()[j] - mu[j]);
                }
            }
        }
    };
    accumulate(&points[..n], &mu_left);
    accumulate(&points[n..], &mu_right);
    let denom = (m - 2) as f64;
    for v in &mut s {
        *v /= denom;
    }

    let chol = match cholesky_lower(&s, d) {
        Some(l) => l,
        None => return Ok(BaselineOutcome::not_applicable()),
    };

    let diff: Vec<f64> = mu_left
        .iter()
        .zip(&mu_right)
        .map(|(a, b)| a - b)
        .collect();
    let z = solve_spd(&chol, d, &diff);
    // T^2 = (n^2 / 2n) diff' S^{-1} diff = (n / 2) diff' z.
    let t2 = 0.5 * n as f64 * diff.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>();
    let df2 = (m - 1 - d) as f64;
    let f_stat = t2 * df2 / ((m - 2) as f64 * d as f64);
    if !f_stat.is_finite() {
        return Ok(BaselineOutcome::not_applicable());
    }
    let crit = f_quantile(1.0 - alpha, d as f64, df2)?;
    let decision = if f_stat > crit {
        BaselineDecision::Reject
    } else {
        BaselineDecision::Retain
    };
    Ok(BaselineOutcome {
        decision,
        statistic: Some(f_stat),
        reference: Some(crit),
    })
}

/// Cholesky factor L (lower triangular, row-major) of a symmetric matrix
/// given by its lower triangle, or None if any pivot falls below a relative
/// tolerance, i.e. the matrix is not numerically positive definite.
fn cholesky_lower(s: &[f64], d: usize) -> Option<Vec<f64>> {
    let max_diag = (0..d).map(|i| s[i * d + i]).fold(0.0_f64, f64::max);
    if !(max_diag > 0.0) || !max_diag.is_finite() {
        return None;
    }
    let tol = 1e-12 * max_diag;
    let mut l = vec![0.0; d * d];
    for j in 0..d {
        let mut pivot = s[j * d + j];
        for k in 0..j {
            pivot -= l[j * d + k] * l[j * d + k];
        }
        if pivot <= tol {
            return None;
        }
        let root = pivot.sqrt();
        l[j * d + j] = root;
        for i in (j + 1)..d {
            let mut acc = s[i * d + j];
            for k in 0..j {
                acc -= l[i * d + k] * l[j * d + k];
            }
            l[i * d + j] = acc / root;
        }
    }
    Some(l)
}

/// Solves (L L') z = b by forward then back substitution.
fn solve_spd(l: &[f64], d: usize, b: &[f64]) -> Vec<f64> {
    let mut w = vec![0.0; d];
    for i in 0..d {
        let mut acc = b[i];
        for k in 0..i {
            acc -= l[i * d + k] * w[k];
        }
        w[i] = acc / l[i * d + i];
    }
    let mut z = vec![0.0; d];
    for i in (0..d).rev() {
        let mut acc = w[i];
        for k in (i + 1)..d {
            acc -= l[k * d + i] * z[k];
        }
        z[i] = acc / l[i * d + i];
    }
    z
}

/// Graph edge-count two-sample test at the central split.
///
/// Builds the minimum spanning tree over all 2n points once, counts the
/// edges whose endpoints fall in different halves, and compares that count
/// against `reps` random relabelings of the same tree (n points per group).
/// Small counts indicate separation, so the p-value is
/// (1 + #{permuted count <= observed}) / (reps + 1); rejection is p <= alpha.
/// The reported statistic is the z-score of the observed count under the
/// permutation distribution (0 when that distribution is constant).
pub fn edge_count_baseline<R: Rng + ?Sized>(
    points: &[Observation],
    alpha: f64,
    reps: usize,
    rng: &mut R,
) -> Result<BaselineOutcome> {
    check_window(points)?;
    check_alpha(alpha)?;
    if reps == 0 {
        return Err(Error::domain("edge-count baseline needs reps >= 1"));
    }
    let m = points.len();
    let n = m / 2;
    let tree = build_graph(points, GraphKind::Mst)?;

    let cross_count = |is_left: &[bool]| -> usize {
        tree.edges
            .iter()
            .filter(|e| is_left[e.i] != is_left[e.j])
            .count()
    };
    let mut labels: Vec<bool> = (0..m).map(|i| i < n).collect();
    let observed = cross_count(&labels);

    let mut at_most = 0usize;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..reps {
        labels.shuffle(rng);
        let c = cross_count(&labels);
        if c <= observed {
            at_most += 1;
        }
        sum += c as f64;
        sum_sq += (c * c) as f64;
    }
    let p_value = (1 + at_most) as f64 / (reps + 1) as f64;
    let mean = sum / reps as f64;
    let var = (sum_sq / reps as f64 - mean * mean).max(0.0);
    let z = if var > 0.0 {
        (observed as f64 - mean) / var.sqrt()
    } else {
        0.0
    };
    let decision = if p_value <= alpha {
        BaselineDecision::Reject
    } else {
        BaselineDecision::Retain
    };
    Ok(BaselineOutcome {
        decision,
        statistic: Some(z),
        reference: Some(p_value),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn obs(values: &[f64]) -> Observation {
        Observation::new(values.to_vec()).unwrap()
    }

    fn gauss_cloud(count: usize, d: usize, shift: f64, seed: u64) -> Vec<Observation> {
        let mut rng = stream_rng(seed, 0);
        (0..count)
            .map(|_| {
                let v: Vec<f64> = (0..d)
                    .map(|_| rng.sample::<f64, _>(StandardNormal) + shift)
                    .collect();
                Observation::new(v).unwrap()
            })
            .collect()
    }

    #[test]
    fn identical_halves_give_zero_statistic_and_retain() {
        let half = vec![
            obs(&[0.0, 1.0]),
            obs(&[2.0, -1.0]),
            obs(&[1.0, 3.0]),
            obs(&[-1.0, 0.5]),
        ];
        let mut window = half.clone();
        window.extend(half);
        let out = hotelling_t2(&window, 0.05).unwrap();
        assert_eq!(out.decision, BaselineDecision::Retain);
        assert_eq!(out.statistic.unwrap(), 0.0);
    }

    #[test]
    fn dimension_at_sample_budget_is_not_applicable() {
        // 2n = 8, so d = 7 hits d >= 2n - 1.
        let window = gauss_cloud(8, 7, 0.0, 11);
        let out = hotelling_t2(&window, 0.05).unwrap();
        assert_eq!(out.decision, BaselineDecision::NotApplicable);
        assert!(out.statistic.is_none());
    }

    #[test]
    fn singular_scatter_is_not_applicable() {
        // Second coordinate duplicates the first, so the pooled scatter has
        // rank 1 in d = 2.
        let window: Vec<Observation> = gauss_cloud(12, 1, 0.0, 5)
            .into_iter()
            .map(|p| {
                let x = p.values()[0];
                obs(&[x, x])
            })
            .collect();
        let out = hotelling_t2(&window, 0.05).unwrap();
        assert_eq!(out.decision, BaselineDecision::NotApplicable);
    }

    #[test]
    fn univariate_case_matches_pooled_t_squared() {
        let window = gauss_cloud(20, 1, 0.0, 42);
        let n = 10;
        let xs: Vec<f64> = window[..n].iter().map(|p| p.values()[0]).collect();
        let ys: Vec<f64> = window[n..].iter().map(|p| p.values()[0]).collect();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let mx = mean(&xs);
        let my = mean(&ys);
        let ss = |v: &[f64], mu: f64| v.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>();
        let pooled_var = (ss(&xs, mx) + ss(&ys, my)) / (2.0 * n as f64 - 2.0);
        let t = (mx - my) / (pooled_var * 2.0 / n as f64).sqrt();
        // With d = 1 the F transform reduces to the squared pooled t, on
        // F(1, 2n - 2).
        let out = hotelling_t2(&window, 0.05).unwrap();
        let f_stat = out.statistic.unwrap();
        assert!(
            (f_stat - t * t).abs() <= 1e-10 * t.powi(2).max(1.0),
            "F = {f_stat}, t^2 = {}",
            t * t
        );
        let crit = f_quantile(0.95, 1.0, 18.0).unwrap();
        assert_eq!(out.reference.unwrap(), crit);
    }

    #[test]
    fn separated_means_reject() {
        let mut window = gauss_cloud(10, 3, 0.0, 7);
        window.extend(gauss_cloud(10, 3, 6.0, 8));
        let out = hotelling_t2(&window, 0.01).unwrap();
        assert_eq!(out.decision, BaselineDecision::Reject);
        assert!(out.statistic.unwrap() > out.reference.unwrap());
    }

    #[test]
    fn edge_count_rejects_separated_clusters() {
        // Two tight clusters far apart: the pooled tree crosses the halves
        // exactly once, which no balanced relabeling can beat.
        let mut window = gauss_cloud(8, 2, 0.0, 21);
        window.extend(gauss_cloud(8, 2, 50.0, 22));
        let mut rng = stream_rng(99, 0);
        let out = edge_count_baseline(&window, 0.05, 400, &mut rng).unwrap();
        assert_eq!(out.decision, BaselineDecision::Reject);
        assert!(out.reference.unwrap() <= 0.05);
        assert!(out.statistic.unwrap() < 0.0, "observed count below average");
    }

    #[test]
    fn edge_count_retains_homogeneous_window() {
        let window = gauss_cloud(24, 2, 0.0, 31);
        let mut rng = stream_rng(17, 0);
        let out = edge_count_baseline(&window, 0.01, 400, &mut rng).unwrap();
        assert_eq!(out.decision, BaselineDecision::Retain);
    }

    #[test]
    fn edge_count_is_deterministic_for_a_seeded_rng() {
        let window = gauss_cloud(16, 3, 0.0, 55);
        let mut a = stream_rng(123, 4);
        let mut b = stream_rng(123, 4);
        let out_a = edge_count_baseline(&window, 0.05, 100, &mut a).unwrap();
        let out_b = edge_count_baseline(&window, 0.05, 100, &mut b).unwrap();
        assert_eq!(out_a, out_b);
    }

    #[test]
    fn rejects_bad_inputs() {
        let window = gauss_cloud(8, 2, 0.0, 1);
        assert!(hotelling_t2(&window, 0.0).is_err());
        assert!(hotelling_t2(&window[..7], 0.05).is_err());
        let mut rng = stream_rng(1, 0);
        assert!(edge_count_baseline(&window, 0.05, 0, &mut rng).is_err());
    }
}
