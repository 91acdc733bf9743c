//! Exact discrete optimal transport by the transportation simplex.
//!
//! The basis is a spanning tree of the bipartite supply/demand graph,
//! seeded by the northwest-corner rule. Pivoting uses floating-point
//! arithmetic with a fixed reduced-cost tolerance; no scaling tricks, the
//! solver targets oracle-scale inputs (supports up to a few hundred atoms).

use crate::error::{Error, Result};

/// Reduced costs above `-PIVOT_TOL` are treated as nonnegative.
pub const PIVOT_TOL: f64 = 1e-11;

#[derive(Debug, Clone, Copy)]
struct Arc {
    src: usize,
    sink: usize,
    flow: f64,
}

/// Solve `min <f, cost>` over couplings of `supply` and `demand`.
///
/// `cost` is row-major `m x n`. Both mass vectors must sum to the same
/// total (the caller guarantees probability vectors). Returns the optimal
/// objective and the dense plan.
pub fn solve_transport(supply: &[f64], demand: &[f64], cost: &[f64]) -> Result<(f64, Vec<f64>)> {
    let m = supply.len();
    let n = demand.len();
    debug_assert_eq!(cost.len(), m * n);

    let mut arcs = northwest_corner(supply, demand);
    let nodes = m + n;
    let max_pivots = 1000 + 200 * nodes * ((nodes as f64).log2().ceil() as usize + 1);

    let mut parent = vec![usize::MAX; nodes];
    let mut parent_arc = vec![usize::MAX; nodes];
    let mut depth = vec![0usize; nodes];
    let mut potential = vec![0.0f64; nodes];
    let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nodes];

    for pivot in 0.. {
        if pivot > max_pivots {
            return Err(Error::LpStalled {
                iterations: max_pivots,
            });
        }

        // Rebuild the rooted tree and node potentials from the basis arcs.
        for adj in adjacency.iter_mut() {
            adj.clear();
        }
        for (id, arc) in arcs.iter().enumerate() {
            adjacency[arc.src].push((m + arc.sink, id));
            adjacency[m + arc.sink].push((arc.src, id));
        }
        parent[0] = 0;
        depth[0] = 0;
        potential[0] = 0.0;
        let mut stack = vec![0usize];
        let mut seen = vec![false; nodes];
        seen[0] = true;
        while let Some(node) = stack.pop() {
            for &(next, id) in &adjacency[node] {
                if seen[next] {
                    continue;
                }
                seen[next] = true;
                parent[next] = node;
                parent_arc[next] = id;
                depth[next] = depth[node] + 1;
                let arc = arcs[id];
                let c = cost[arc.src * n + arc.sink];
                // potentials satisfy u_src + v_sink = c on basic arcs
                potential[next] = c - potential[node];
                stack.push(next);
            }
        }

        // Entering arc: most negative reduced cost.
        let mut best = -PIVOT_TOL;
        let mut entering: Option<(usize, usize)> = None;
        for i in 0..m {
            let u = potential[i];
            let row = &cost[i * n..(i + 1) * n];
            for (j, &c) in row.iter().enumerate() {
                let reduced = c - u - potential[m + j];
                if reduced < best {
                    best = reduced;
                    entering = Some((i, j));
                }
            }
        }
        let Some((ei, ej)) = entering else {
            break;
        };

        // The unique tree cycle through the entering arc: walk both
        // endpoints to their lowest common ancestor.
        let mut left = ei; // source side
        let mut right = m + ej; // sink side
        let mut left_path: Vec<usize> = Vec::new(); // arc ids from ei upward
        let mut right_path: Vec<usize> = Vec::new(); // arc ids from ej upward
        while depth[left] > depth[right] {
            left_path.push(parent_arc[left]);
            left = parent[left];
        }
        while depth[right] > depth[left] {
            right_path.push(parent_arc[right]);
            right = parent[right];
        }
        while left != right {
            left_path.push(parent_arc[left]);
            left = parent[left];
            right_path.push(parent_arc[right]);
            right = parent[right];
        }
        // Ordered arc path from the entering source to the entering sink.
        let mut path = left_path;
        path.extend(right_path.into_iter().rev());

        // Alternate -theta, +theta along the path starting at the source.
        let mut theta = f64::INFINITY;
        let mut leaving = usize::MAX;
        for (k, &arc_id) in path.iter().enumerate() {
            if k % 2 == 0 {
                let f = arcs[arc_id].flow;
                if f < theta {
                    theta = f;
                    leaving = arc_id;
                }
            }
        }
        debug_assert!(leaving != usize::MAX);
        for (k, &arc_id) in path.iter().enumerate() {
            if k % 2 == 0 {
                arcs[arc_id].flow -= theta;
            } else {
                arcs[arc_id].flow += theta;
            }
        }
        arcs[leaving] = Arc {
            src: ei,
            sink: ej,
            flow: theta,
        };
    }

    let mut plan = vec![0.0f64; m * n];
    let mut objective = 0.0;
    for arc in &arcs {
        let f = arc.flow.max(0.0);
        plan[arc.src * n + arc.sink] += f;
        objective += f * cost[arc.src * n + arc.sink];
    }
    Ok((objective, plan))
}

/// Northwest-corner initial basic feasible solution: exactly `m + n - 1`
/// arcs forming a spanning tree (degenerate zero flows allowed).
fn northwest_corner(supply: &[f64], demand: &[f64]) -> Vec<Arc> {
    let m = supply.len();
    let n = demand.len();
    let mut arcs = Vec::with_capacity(m + n - 1);
    let (mut i, mut j) = (0usize, 0usize);
    let mut ra = supply[0];
    let mut rb = demand[0];
    loop {
        let f = ra.min(rb).max(0.0);
        arcs.push(Arc {
            src: i,
            sink: j,
            flow: f,
        });
        ra -= f;
        rb -= f;
        if i == m - 1 && j == n - 1 {
            break;
        }
        if i + 1 < m && (ra <= rb || j + 1 >= n) {
            i += 1;
            ra = supply[i];
        } else {
            j += 1;
            rb = demand[j];
        }
    }
    debug_assert_eq!(arcs.len(), m + n - 1);
    arcs
}
