//! Minimum-cost assignment (Hungarian algorithm, potentials form, O(n³)).

/// Solves min-cost assignment on an n×m cost matrix, returning min(n, m)
/// (row, col) pairs with each row and column used at most once and the total
/// cost minimal over all maximal matchings. Costs must be finite; negatives
/// are fine. Ties resolve deterministically for identical input.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let n = cost.len();
    let m = cost.first().map_or(0, Vec::len);
    if n == 0 || m == 0 {
        return Vec::new();
    }
    debug_assert!(cost.iter().all(|row| row.len() == m), "ragged cost matrix");
    debug_assert!(cost.iter().flatten().all(|c| c.is_finite()), "non-finite cost");

    // The sweep below wants rows <= cols; transpose and swap pairs back
    // otherwise.
    if n > m {
        let transposed: Vec<Vec<f64>> =
            (0..m).map(|j| (0..n).map(|i| cost[i][j]).collect()).collect();
        let mut pairs: Vec<(usize, usize)> =
            hungarian(&transposed).into_iter().map(|(r, c)| (c, r)).collect();
        pairs.sort_unstable();
        return pairs;
    }

    // Potentials u (rows), v (cols), 1-indexed with column 0 as a virtual
    // staging slot. p[j] is the row assigned to column j.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
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
        // Walk the augmenting path back, shifting assignments.
        while j0 != 0 {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        }
    }

    let mut pairs: Vec<(usize, usize)> =
        (1..=m).filter(|&j| p[j] != 0).map(|j| (p[j] - 1, j - 1)).collect();
    pairs.sort_unstable();
    pairs
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn total(cost: &[Vec<f64>], pairs: &[(usize, usize)]) -> f64 {
        pairs.iter().map(|&(r, c)| cost[r][c]).sum()
    }

    /// Cheapest maximal matching by trying every way to pick and order the
    /// assigned rows/columns. Only viable for tiny matrices.
    fn brute_force(cost: &[Vec<f64>]) -> f64 {
        let n = cost.len();
        let m = cost[0].len();
        let k = n.min(m);
        fn rec(cost: &[Vec<f64>], row: usize, left: usize, used: &mut Vec<bool>) -> f64 {
            if left == 0 {
                return 0.0;
            }
            let n = cost.len();
            // Rows beyond n - left can't all be skipped and still place `left`.
            if n - row == left {
                let mut best = f64::INFINITY;
                for c in 0..used.len() {
                    if !used[c] {
                        used[c] = true;
                        let rest = rec(cost, row + 1, left - 1, used);
                        used[c] = false;
                        best = best.min(cost[row][c] + rest);
                    }
                }
                return best;
            }
            let mut best = rec(cost, row + 1, left, used);
            for c in 0..used.len() {
                if !used[c] {
                    used[c] = true;
                    let rest = rec(cost, row + 1, left - 1, used);
                    used[c] = false;
                    best = best.min(cost[row][c] + rest);
                }
            }
            best
        }
        rec(cost, 0, k, &mut vec![false; m])
    }

    #[test]
    fn zero_diagonal_picks_diagonal() {
        let cost = vec![
            vec![0.0, 5.0, 5.0],
            vec![5.0, 0.0, 5.0],
            vec![5.0, 5.0, 0.0],
        ];
        let pairs = hungarian(&cost);
        assert_eq!(pairs, vec![(0, 0), (1, 1), (2, 2)]);
        assert_eq!(total(&cost, &pairs), 0.0);
    }

    #[test]
    fn two_by_two_off_diagonal() {
        let cost = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        let pairs = hungarian(&cost);
        assert_eq!(pairs, vec![(0, 1), (1, 0)]);
        assert_eq!(total(&cost, &pairs), 4.0);
    }

    #[test]
    fn rectangular_wide_assigns_every_row() {
        let cost = vec![vec![9.0, 1.0, 9.0, 9.0], vec![9.0, 9.0, 9.0, 2.0]];
        let pairs = hungarian(&cost);
        assert_eq!(pairs, vec![(0, 1), (1, 3)]);
    }

    #[test]
    fn rectangular_tall_assigns_every_column() {
        let cost = vec![vec![5.0, 9.0], vec![1.0, 9.0], vec![9.0, 1.0]];
        let pairs = hungarian(&cost);
        assert_eq!(pairs, vec![(1, 0), (2, 1)]);
    }

    #[test]
    fn negative_costs() {
        let cost = vec![vec![-5.0, 0.0], vec![0.0, -5.0]];
        let pairs = hungarian(&cost);
        assert_eq!(total(&cost, &pairs), -10.0);
    }

    #[test]
    fn empty_inputs() {
        assert!(hungarian(&[]).is_empty());
        assert!(hungarian(&[vec![], vec![]]).is_empty());
    }

    #[test]
    fn single_cell() {
        assert_eq!(hungarian(&[vec![3.0]]), vec![(0, 0)]);
    }

    fn pairs_are_matching(pairs: &[(usize, usize)], n: usize, m: usize) -> bool {
        let mut rows = vec![false; n];
        let mut cols = vec![false; m];
        for &(r, c) in pairs {
            if r >= n || c >= m || rows[r] || cols[c] {
                return false;
            }
            rows[r] = true;
            cols[c] = true;
        }
        pairs.len() == n.min(m)
    }

    proptest! {
        // Integer-valued costs keep every candidate total exact in f64, so
        // optimality can be asserted with equality.
        #[test]
        fn matches_brute_force(
            n in 1usize..=5, m in 1usize..=5,
            seed in proptest::collection::vec(-20i32..=20, 25),
        ) {
            let cost: Vec<Vec<f64>> =
                (0..n).map(|i| (0..m).map(|j| seed[i * 5 + j] as f64).collect()).collect();
            let pairs = hungarian(&cost);
            prop_assert!(pairs_are_matching(&pairs, n, m));
            prop_assert_eq!(total(&cost, &pairs), brute_force(&cost));
        }
    }
}
