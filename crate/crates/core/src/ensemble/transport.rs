use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest atom count solved by exact assignment.
pub const EXACT_ASSIGNMENT_LIMIT: usize = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransportMode {
    ExactAssignment,
    /// Entropic approximation: the cost of the regularized plan, an upper
    /// bound on the exact value.
    Entropic,
}

/// Optimal transport between two equal-weight empirical measures.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransportResult {
    pub distance: f64,
    /// Atom i of the first measure is sent to atom assignment[i].
    pub assignment: Option<Vec<usize>>,
    pub coupling: Option<Vec<Vec<f64>>>,
    pub mode: TransportMode,
    pub regularization: Option<f64>,
    /// Entropic mode: summed row-marginal error of the plan.
    pub marginal_error: Option<f64>,
}

fn check_square(cost: &[Vec<f64>]) -> Result<usize> {
    let n = cost.len();
    if n == 0 {
        return Err(Error::Transport("empty cost matrix".into()));
    }
    for (i, r) in cost.iter().enumerate() {
        if r.len() != n {
            return Err(Error::Transport(format!(
                "cost row {i} has {} entries, expected {n}",
                r.len()
            )));
        }
        if r.iter().any(|c| !c.is_finite()) {
            return Err(Error::Transport(format!("cost row {i} is not finite")));
        }
    }
    Ok(n)
}

/// Minimum-cost perfect matching (Hungarian method with potentials,
/// O(n³)). Returns the assignment and its total cost.
pub fn optimal_assignment(cost: &[Vec<f64>]) -> Result<(Vec<usize>, f64)> {
    let n = check_square(cost)?;
    // 1-based arrays; column 0 is a virtual start.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        assignment[p[j] - 1] = j - 1;
    }
    let total = assignment.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
    Ok((assignment, total))
}

fn logsumexp(it: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = it.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + it.map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Sinkhorn sweeps at fixed `eps` from the given potentials; returns the
/// final summed row-marginal error.
fn sinkhorn_sweeps(cost: &[Vec<f64>], eps: f64, f: &mut [f64], g: &mut [f64], tol: f64, max_iter: usize) -> f64 {
    let n = cost.len();
    let loga = -(n as f64).ln();
    let mut err = f64::INFINITY;
    for _ in 0..max_iter {
        for i in 0..n {
            f[i] = -eps * logsumexp((0..n).map(|j| (g[j] - cost[i][j]) / eps + loga));
        }
        for j in 0..n {
            g[j] = -eps * logsumexp((0..n).map(|i| (f[i] - cost[i][j]) / eps + loga));
        }
        // Columns are exact after the g update; check the rows.
        err = (0..n)
            .map(|i| {
                let r: f64 = (0..n)
                    .map(|j| ((f[i] + g[j] - cost[i][j]) / eps + 2.0 * loga).exp())
                    .sum();
                (r - 1.0 / n as f64).abs()
            })
            .sum::<f64>();
        if err < tol {
            break;
        }
    }
    err
}

/// Log-domain Sinkhorn for uniform marginals with regularization `eps`,
/// reached by halving ε from the largest cost with warm-started potentials.
/// The final stage stops once the summed row-marginal error is below `tol`
/// or after `max_iter` sweeps.
pub fn sinkhorn(cost: &[Vec<f64>], eps: f64, tol: f64, max_iter: usize) -> Result<SinkhornResult> {
    let n = check_square(cost)?;
    if !(eps > 0.0) {
        return Err(Error::Transport(format!("regularization must be positive (got {eps})")));
    }
    let loga = -(n as f64).ln();
    let mut f = vec![0.0; n];
    let mut g = vec![0.0; n];
    let cmax = cost.iter().flatten().cloned().fold(0.0, f64::max);
    let mut stage = cmax;
    while stage > eps {
        sinkhorn_sweeps(cost, stage, &mut f, &mut g, 1e-6, 1000);
        stage *= 0.5;
    }
    let err = sinkhorn_sweeps(cost, eps, &mut f, &mut g, tol, max_iter);
    let plan: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| ((f[i] + g[j] - cost[i][j]) / eps + 2.0 * loga).exp())
                .collect()
        })
        .collect();
    let total = (0..n)
        .map(|i| (0..n).map(|j| plan[i][j] * cost[i][j]).sum::<f64>())
        .sum();
    Ok(SinkhornResult {
        plan,
        cost: total,
        marginal_error: err,
    })
}

/// Entropic plan, its transport cost Σ P_ij C_ij and the summed
/// row-marginal error it reached.
#[derive(Clone, Debug)]
pub struct SinkhornResult {
    pub plan: Vec<Vec<f64>>,
    pub cost: f64,
    pub marginal_error: f64,
}

/// Kantorovich distance between equal-weight measures from their cost
/// matrix: exact assignment up to [`EXACT_ASSIGNMENT_LIMIT`] atoms,
/// entropic otherwise with ε = 10⁻²·max cost.
pub fn transport(cost: &[Vec<f64>]) -> Result<TransportResult> {
    let n = check_square(cost)?;
    if n <= EXACT_ASSIGNMENT_LIMIT {
        let (assignment, total) = optimal_assignment(cost)?;
        return Ok(TransportResult {
            distance: total / n as f64,
            assignment: Some(assignment),
            coupling: None,
            mode: TransportMode::ExactAssignment,
            regularization: None,
            marginal_error: None,
        });
    }
    let cmax = cost.iter().flatten().cloned().fold(0.0, f64::max);
    let eps = 1e-2 * cmax.max(f64::MIN_POSITIVE);
    let tol = 1e-8;
    let r = sinkhorn(cost, eps, tol, 100_000)?;
    log::warn!("{n} atoms: entropic transport (approximate, eps = {eps:.3e})");
    if r.marginal_error > tol {
        log::warn!(
            "Sinkhorn stopped with marginal error {:.3e} > {tol:e}",
            r.marginal_error
        );
    }
    Ok(TransportResult {
        distance: r.cost,
        assignment: None,
        coupling: Some(r.plan),
        mode: TransportMode::Entropic,
        regularization: Some(eps),
        marginal_error: Some(r.marginal_error),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use itertools::Itertools;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute(cost: &[Vec<f64>]) -> f64 {
        let n = cost.len();
        (0..n)
            .permutations(n)
            .map(|p| p.iter().enumerate().map(|(i, &j)| cost[i][j]).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    }

    fn random_cost(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        (0..n).map(|_| (0..n).map(|_| rng.random::<f64>()).collect()).collect()
    }

    #[test]
    fn assignment_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..=6 {
            for _ in 0..10 {
                let c = random_cost(n, &mut rng);
                let (a, total) = optimal_assignment(&c).unwrap();
                assert!((total - brute(&c)).abs() < 1e-12);
                assert_eq!(
                    a.iter().sorted().cloned().collect::<Vec<_>>(),
                    (0..n).collect::<Vec<_>>()
                );
            }
        }
    }

    #[test]
    fn sinkhorn_approaches_exact_from_above() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let c = random_cost(12, &mut rng);
        let exact = optimal_assignment(&c).unwrap().1 / 12.0;
        let eps = 2e-2;
        let r = sinkhorn(&c, eps, 1e-9, 200_000).unwrap();
        assert!(r.marginal_error < 1e-9, "{}", r.marginal_error);
        assert!(r.cost >= exact - 1e-9);
        // Entropic bias is at most eps·ln(n²).
        assert!(r.cost - exact <= eps * (144f64).ln(), "{} vs {exact}", r.cost);
        for row in &r.plan {
            assert!((row.iter().sum::<f64>() - 1.0 / 12.0).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_ragged_and_empty() {
        assert!(optimal_assignment(&[]).is_err());
        assert!(optimal_assignment(&[vec![1.0, 2.0], vec![1.0]]).is_err());
    }
}
