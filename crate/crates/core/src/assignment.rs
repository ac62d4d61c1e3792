//! Minimum-cost bipartite assignment (Hungarian method with potentials, O(n²m)).
//!
//! Works on rectangular matrices directly: every element of the smaller side is
//! assigned, the surplus on the larger side stays unassigned. This is equivalent to
//! padding the smaller side with dummy entries whose cost is constant across the
//! larger side.

/// Result of [`solve`]: `row_to_col[i]` is the column assigned to row `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub row_to_col: Vec<Option<usize>>,
    pub cost: f64,
}

impl Assignment {
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.row_to_col
            .iter()
            .enumerate()
            .filter_map(|(i, j)| j.map(|j| (i, j)))
    }
}

/// Minimum-cost assignment for `cost[i][j]` (all rows must have equal length, costs finite).
pub fn solve(cost: &[Vec<f64>]) -> Assignment {
    let n_rows = cost.len();
    let n_cols = cost.first().map_or(0, Vec::len);
    if n_rows == 0 || n_cols == 0 {
        return Assignment {
            row_to_col: vec![None; n_rows],
            cost: 0.0,
        };
    }
    debug_assert!(cost.iter().all(|r| r.len() == n_cols));

    if n_rows <= n_cols {
        let col_of_row = solve_wide(n_rows, n_cols, |i, j| cost[i][j]);
        finish(cost, col_of_row.into_iter().map(Some).collect())
    } else {
        let row_of_col = solve_wide(n_cols, n_rows, |j, i| cost[i][j]);
        let mut row_to_col = vec![None; n_rows];
        for (j, i) in row_of_col.into_iter().enumerate() {
            row_to_col[i] = Some(j);
        }
        finish(cost, row_to_col)
    }
}

fn finish(cost: &[Vec<f64>], row_to_col: Vec<Option<usize>>) -> Assignment {
    let total = row_to_col
        .iter()
        .enumerate()
        .filter_map(|(i, j)| j.map(|j| cost[i][j]))
        .sum();
    Assignment {
        row_to_col,
        cost: total,
    }
}

/// Core routine for `n <= m`; returns the column assigned to each of the `n` rows.
fn solve_wide(n: usize, m: usize, cost: impl Fn(usize, usize) -> f64) -> Vec<usize> {
    let inf = f64::INFINITY;
    // 1-based with index 0 as the virtual root.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
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

    let mut col_of_row = vec![0usize; n];
    for j in 1..=m {
        if p[j] > 0 {
            col_of_row[p[j] - 1] = j - 1;
        }
    }
    col_of_row
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Exhaustive minimum over injective maps from the smaller side into the larger.
    fn brute_force(cost: &[Vec<f64>]) -> f64 {
        let n = cost.len();
        let m = cost.first().map_or(0, Vec::len);
        if n == 0 || m == 0 {
            return 0.0;
        }
        type Cost<'a> = Box<dyn Fn(usize, usize) -> f64 + 'a>;
        let (small, large, at): (usize, usize, Cost) = if n <= m {
            (n, m, Box::new(|a, b| cost[a][b]))
        } else {
            (m, n, Box::new(|a, b| cost[b][a]))
        };
        fn rec(k: usize, small: usize, large: usize, used: &mut Vec<bool>, at: &dyn Fn(usize, usize) -> f64) -> f64 {
            if k == small {
                return 0.0;
            }
            let mut best = f64::INFINITY;
            for j in 0..large {
                if !used[j] {
                    used[j] = true;
                    best = best.min(at(k, j) + rec(k + 1, small, large, used, at));
                    used[j] = false;
                }
            }
            best
        }
        rec(0, small, large, &mut vec![false; large], &*at)
    }

    #[test]
    fn square_known_case() {
        let cost = vec![
            vec![4.0, 1.0, 3.0],
            vec![2.0, 0.0, 5.0],
            vec![3.0, 2.0, 2.0],
        ];
        let a = solve(&cost);
        assert_eq!(a.cost, 5.0);
        assert_eq!(a.row_to_col, vec![Some(1), Some(0), Some(2)]);
    }

    #[test]
    fn tall_matrix_leaves_rows_unassigned() {
        let cost = vec![vec![1.0], vec![0.2], vec![0.7]];
        let a = solve(&cost);
        assert_eq!(a.row_to_col, vec![None, Some(0), None]);
        assert!((a.cost - 0.2).abs() < 1e-12);
    }

    #[test]
    fn empty_sides() {
        assert_eq!(solve(&[]).cost, 0.0);
        let a = solve(&[vec![], vec![]]);
        assert_eq!(a.row_to_col, vec![None, None]);
    }

    proptest! {
        #[test]
        fn matches_exhaustive_minimum(
            (n, m, flat) in (1usize..=6, 1usize..=6).prop_flat_map(|(n, m)| {
                (Just(n), Just(m), proptest::collection::vec(0.0f64..1.0, n * m))
            })
        ) {
            let cost: Vec<Vec<f64>> = flat.chunks(m).map(<[f64]>::to_vec).collect();
            let a = solve(&cost);
            prop_assert!((a.cost - brute_force(&cost)).abs() < 1e-9);
            let assigned: Vec<usize> = a.pairs().map(|(_, j)| j).collect();
            prop_assert_eq!(assigned.len(), n.min(m));
            let mut dedup = assigned.clone();
            dedup.sort_unstable();
            dedup.dedup();
            prop_assert_eq!(dedup.len(), assigned.len());
        }
    }
}
