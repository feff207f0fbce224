//! Exact minimum-cost perfect matching on a square cost matrix.
//!
//! Shortest-augmenting-path method with dual potentials, O(n³) time and
//! O(n) extra memory per augmentation. Used for optimal transport between
//! equal-size uniformly weighted sets, where the optimal plan is a
//! permutation.

use crate::error::{Error, Result};

/// Returns `(row_to_col, total_cost)` minimizing `Σ_i cost[i][σ(i)]` over
/// permutations σ. `entries` is row-major `n × n`.
pub fn min_cost_assignment(entries: &[f64], n: usize) -> Result<(Vec<usize>, f64)> {
    if n == 0 {
        return Err(Error::InvalidArgument("empty assignment problem".into()));
    }
    if entries.len() != n * n {
        return Err(Error::InvalidArgument(format!(
            "cost matrix has {} entries, expected {}",
            entries.len(),
            n * n
        )));
    }
    if entries.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidArgument(
            "cost matrix contains non-finite entries".into(),
        ));
    }

    // 1-based internals: p[j] is the row matched to column j, 0 meaning free;
    // u/v are the dual potentials.
    let mut u = vec![0.0_f64; n + 1];
    let mut v = vec![0.0_f64; n + 1];
    let mut p = vec![0_usize; n + 1];
    let mut way = vec![0_usize; n + 1];
    let mut minv = vec![0.0_f64; n + 1];
    let mut used = vec![false; n + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0_usize;
        minv.iter_mut().for_each(|m| *m = f64::INFINITY);
        used.iter_mut().for_each(|f| *f = false);
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0_usize;
            let row = &entries[(i0 - 1) * n..i0 * n];
            let u_i0 = u[i0];
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = row[j - 1] - u_i0 - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
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

    let mut row_to_col = vec![0_usize; n];
    let mut total = 0.0;
    for j in 1..=n {
        let i = p[j];
        row_to_col[i - 1] = j - 1;
        total += entries[(i - 1) * n + (j - 1)];
    }
    Ok((row_to_col, total))
}
