//! Exact balanced transportation solver.
//!
//! Primal transportation simplex on the dense bipartite problem: northwest-
//! corner start, spanning-tree basis, dual potentials, most-negative-
//! reduced-cost pivoting with a Bland-rule fallback against cycling. Exact
//! up to floating-point roundoff; no entropic regularization.

use crate::error::{Error, Result};

const REDUCED_EPSILON: f64 = 1e-12;
const BALANCE_TOLERANCE: f64 = 1e-9;
const FLOW_SNAP: f64 = 1e-15;

#[derive(Clone, Copy, Debug)]
struct Arc {
    row: usize,
    col: usize,
    flow: f64,
}

/// Minimizes `Σ_{ij} plan[i][j] * cost[i][j]` subject to `Σ_j plan[i][j] =
/// supply[i]`, `Σ_i plan[i][j] = demand[j]`, `plan ≥ 0`. Supplies and
/// demands must be non-negative and balanced within `1e-9`; rows or columns
/// with zero mass simply receive no flow. Returns the dense row-major plan
/// and its objective value.
pub fn min_cost_transport(
    entries: &[f64],
    rows: usize,
    cols: usize,
    supply: &[f64],
    demand: &[f64],
) -> Result<(Vec<f64>, f64)> {
    if rows == 0 || cols == 0 || entries.len() != rows * cols {
        return Err(Error::InvalidArgument(format!(
            "cost matrix shaped {rows}x{cols} with {} entries",
            entries.len()
        )));
    }
    if supply.len() != rows || demand.len() != cols {
        return Err(Error::InvalidArgument(format!(
            "marginal lengths {}x{} do not match cost shape {rows}x{cols}",
            supply.len(),
            demand.len()
        )));
    }
    if entries.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidArgument(
            "cost matrix contains non-finite entries".into(),
        ));
    }
    for &s in supply.iter().chain(demand) {
        if !s.is_finite() || s < 0.0 {
            return Err(Error::InvalidArgument(format!("invalid marginal {s}")));
        }
    }
    let total_supply: f64 = supply.iter().sum();
    let total_demand: f64 = demand.iter().sum();
    if (total_supply - total_demand).abs() > BALANCE_TOLERANCE {
        return Err(Error::InvalidArgument(format!(
            "unbalanced problem: supply {total_supply}, demand {total_demand}"
        )));
    }
    if total_supply <= 0.0 {
        return Err(Error::InvalidArgument("zero total mass".into()));
    }

    // Work on the rows/columns that actually carry mass; rescale demands so
    // the active problem balances exactly.
    let active_rows: Vec<usize> = (0..rows).filter(|&r| supply[r] > 0.0).collect();
    let active_cols: Vec<usize> = (0..cols).filter(|&c| demand[c] > 0.0).collect();
    let r = active_rows.len();
    let c = active_cols.len();
    let scale = total_supply / total_demand;
    let s: Vec<f64> = active_rows.iter().map(|&i| supply[i]).collect();
    let d: Vec<f64> = active_cols.iter().map(|&j| demand[j] * scale).collect();
    let cost = |i: usize, j: usize| entries[active_rows[i] * cols + active_cols[j]];

    // Northwest-corner initial basis: exactly r + c - 1 arcs forming a
    // spanning tree (degenerate zero-flow arcs included on ties).
    let mut basis: Vec<Arc> = Vec::with_capacity(r + c - 1);
    let mut in_basis = vec![false; r * c];
    {
        let mut s_rem = s.clone();
        let mut d_rem = d.clone();
        let (mut i, mut j) = (0usize, 0usize);
        loop {
            let flow = s_rem[i].min(d_rem[j]);
            basis.push(Arc { row: i, col: j, flow });
            in_basis[i * c + j] = true;
            s_rem[i] -= flow;
            d_rem[j] -= flow;
            if i == r - 1 && j == c - 1 {
                break;
            }
            if s_rem[i] <= d_rem[j] && i < r - 1 || j == c - 1 {
                i += 1;
            } else {
                j += 1;
            }
        }
    }

    let mut u = vec![0.0_f64; r];
    let mut v = vec![0.0_f64; c];
    // Node ids: rows are 0..r, columns are r..r+c.
    let mut parent_arc = vec![usize::MAX; r + c];
    let mut visited = vec![false; r + c];
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); r + c];
    let mut queue: Vec<usize> = Vec::with_capacity(r + c);

    let dantzig_budget = 50 * (r + c) * (r + c) + 1_000;
    let hard_budget = 4 * dantzig_budget + 100_000;
    let mut iterations = 0usize;

    loop {
        iterations += 1;
        if iterations > hard_budget {
            return Err(Error::Numeric(format!(
                "transport simplex exceeded {hard_budget} pivots"
            )));
        }

        // Potentials from the basis tree.
        for list in &mut adjacency {
            list.clear();
        }
        for (k, arc) in basis.iter().enumerate() {
            adjacency[arc.row].push(k);
            adjacency[r + arc.col].push(k);
        }
        visited.iter_mut().for_each(|f| *f = false);
        queue.clear();
        queue.push(0);
        visited[0] = true;
        u[0] = 0.0;
        let mut head = 0;
        while head < queue.len() {
            let node = queue[head];
            head += 1;
            for &k in &adjacency[node] {
                let arc = basis[k];
                let other = if node < r { r + arc.col } else { arc.row };
                if visited[other] {
                    continue;
                }
                if other < r {
                    u[other] = cost(arc.row, arc.col) - v[arc.col];
                } else {
                    v[other - r] = cost(arc.row, arc.col) - u[arc.row];
                }
                visited[other] = true;
                queue.push(other);
            }
        }
        if queue.len() != r + c {
            return Err(Error::Numeric(
                "transport basis lost its spanning-tree structure".into(),
            ));
        }

        // Entering arc: most negative reduced cost (Dantzig) early on, first
        // negative in index order (Bland) if the pivot budget runs long.
        let bland = iterations > dantzig_budget;
        let mut entering: Option<(usize, usize)> = None;
        let mut best = -REDUCED_EPSILON;
        'scan: for i in 0..r {
            let ui = u[i];
            for j in 0..c {
                if in_basis[i * c + j] {
                    continue;
                }
                let reduced = cost(i, j) - ui - v[j];
                if reduced < best {
                    entering = Some((i, j));
                    if bland {
                        break 'scan;
                    }
                    best = reduced;
                }
            }
        }
        let Some((enter_row, enter_col)) = entering else {
            break;
        };

        // Unique tree path from the entering column back to the entering row.
        visited.iter_mut().for_each(|f| *f = false);
        parent_arc.iter_mut().for_each(|p| *p = usize::MAX);
        queue.clear();
        let start = r + enter_col;
        let goal = enter_row;
        queue.push(start);
        visited[start] = true;
        let mut head = 0;
        while head < queue.len() && !visited[goal] {
            let node = queue[head];
            head += 1;
            for &k in &adjacency[node] {
                let arc = basis[k];
                let other = if node < r { r + arc.col } else { arc.row };
                if visited[other] {
                    continue;
                }
                visited[other] = true;
                parent_arc[other] = k;
                queue.push(other);
            }
        }
        if !visited[goal] {
            return Err(Error::Numeric(
                "transport basis lost connectivity during pivoting".into(),
            ));
        }

        // Walk goal → start collecting the path, then assign alternating
        // signs along the cycle; the entering arc takes +t.
        let mut path: Vec<usize> = Vec::new();
        let mut node = goal;
        while node != start {
            let k = parent_arc[node];
            path.push(k);
            let arc = basis[k];
            node = if node < r { r + arc.col } else { arc.row };
        }
        path.reverse();
        // path[0] touches the entering column; signs alternate -, +, -, …
        let mut t = f64::INFINITY;
        let mut leaving: Option<usize> = None;
        for (pos, &k) in path.iter().enumerate() {
            if pos % 2 == 0 {
                let flow = basis[k].flow;
                if flow < t || (flow == t && leaving.is_none()) {
                    t = flow;
                    leaving = Some(k);
                }
            }
        }
        let leaving = leaving.ok_or_else(|| {
            Error::Numeric("transport pivot found no leaving arc".into())
        })?;

        for (pos, &k) in path.iter().enumerate() {
            if pos % 2 == 0 {
                basis[k].flow -= t;
            } else {
                basis[k].flow += t;
            }
            if basis[k].flow.abs() < FLOW_SNAP {
                basis[k].flow = 0.0;
            }
        }
        let leave = basis[leaving];
        in_basis[leave.row * c + leave.col] = false;
        basis[leaving] = Arc {
            row: enter_row,
            col: enter_col,
            flow: t,
        };
        in_basis[enter_row * c + enter_col] = true;
    }

    let mut plan = vec![0.0_f64; rows * cols];
    let mut objective = 0.0;
    for arc in &basis {
        let flow = arc.flow.max(0.0);
        plan[active_rows[arc.row] * cols + active_cols[arc.col]] = flow;
        objective += flow * cost(arc.row, arc.col);
    }
    Ok((plan, objective))
}
