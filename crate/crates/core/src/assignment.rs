//! Minimum-cost assignment (Hungarian method, shortest augmenting paths).
//!
//! Generic over any totally ordered additive group so that scores can be
//! compared exactly (rationals, lexicographic pairs) instead of in floats.

use std::ops::{Add, Sub};

use num_traits::Zero;

/// Solves the rectangular assignment problem with `rows <= cols`.
/// Returns, for each row, the column assigned to it.
pub fn min_cost_assignment<T>(cost: &[Vec<T>]) -> Vec<usize>
where
    T: Clone + Ord + Zero + Add<Output = T> + Sub<Output = T>,
{
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    let m = cost[0].len();
    assert!(n <= m, "assignment needs rows <= cols ({n} > {m})");
    debug_assert!(cost.iter().all(|r| r.len() == m));

    // 1-based potentials; column 0 is the virtual source.
    let mut u = vec![T::zero(); n + 1];
    let mut v = vec![T::zero(); m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];

    for row in 1..=n {
        owner[0] = row;
        let mut col0 = 0usize;
        let mut min_slack: Vec<Option<T>> = vec![None; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[col0] = true;
            let r0 = owner[col0];
            let mut delta: Option<T> = None;
            let mut col1 = 0usize;
            for col in 1..=m {
                if used[col] {
                    continue;
                }
                let slack = cost[r0 - 1][col - 1].clone() - u[r0].clone() - v[col].clone();
                if min_slack[col].as_ref().is_none_or(|s| slack < *s) {
                    min_slack[col] = Some(slack);
                    way[col] = col0;
                }
                let s = min_slack[col].as_ref().expect("set above");
                if delta.as_ref().is_none_or(|d| s < d) {
                    delta = Some(s.clone());
                    col1 = col;
                }
            }
            let delta = delta.expect("an unused column exists while rows <= cols");
            for col in 0..=m {
                if used[col] {
                    let r = owner[col];
                    u[r] = u[r].clone() + delta.clone();
                    v[col] = v[col].clone() - delta.clone();
                } else if let Some(s) = min_slack[col].take() {
                    min_slack[col] = Some(s - delta.clone());
                }
            }
            col0 = col1;
            if owner[col0] == 0 {
                break;
            }
        }
        loop {
            let prev = way[col0];
            owner[col0] = owner[prev];
            col0 = prev;
            if col0 == 0 {
                break;
            }
        }
    }

    let mut assigned = vec![usize::MAX; n];
    for col in 1..=m {
        if owner[col] != 0 {
            assigned[owner[col] - 1] = col - 1;
        }
    }
    assigned
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(cost: &[Vec<i64>]) -> i64 {
        fn go(cost: &[Vec<i64>], row: usize, used: &mut Vec<bool>) -> i64 {
            if row == cost.len() {
                return 0;
            }
            let mut best = i64::MAX;
            for c in 0..used.len() {
                if !used[c] {
                    used[c] = true;
                    best = best.min(cost[row][c] + go(cost, row + 1, used));
                    used[c] = false;
                }
            }
            best
        }
        go(cost, 0, &mut vec![false; cost[0].len()])
    }

    #[test]
    fn square_example() {
        let cost = vec![vec![8, 4, 7], vec![5, 2, 3], vec![9, 4, 8]];
        let a = min_cost_assignment(&cost);
        let total: i64 = a.iter().enumerate().map(|(r, &c)| cost[r][c]).sum();
        assert_eq!(total, 15);
    }

    #[test]
    fn rectangular_matches_brute_force() {
        let mut state = 12345u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) % 20) as i64 - 5
        };
        for rows in 1..=4 {
            for cols in rows..=5 {
                for _ in 0..20 {
                    let cost: Vec<Vec<i64>> =
                        (0..rows).map(|_| (0..cols).map(|_| next()).collect()).collect();
                    let a = min_cost_assignment(&cost);
                    let mut seen = a.clone();
                    seen.sort_unstable();
                    seen.dedup();
                    assert_eq!(seen.len(), rows);
                    let total: i64 = a.iter().enumerate().map(|(r, &c)| cost[r][c]).sum();
                    assert_eq!(total, brute(&cost));
                }
            }
        }
    }

    #[test]
    fn empty() {
        assert!(min_cost_assignment::<i64>(&[]).is_empty());
    }
}
