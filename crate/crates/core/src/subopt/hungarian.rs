use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum AssignError {
    #[error("cost matrix is empty")]
    Empty,
    #[error("cost matrix rows have different lengths")]
    Ragged,
    #[error("{rows} rows cannot cover {cols} columns")]
    TooFewRows { rows: usize, cols: usize },
}

/// Minimum-cost assignment of every column to a distinct row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    /// `col_to_row[c]` is the row chosen for column `c`.
    pub col_to_row: Vec<usize>,
    pub total: u64,
}

/// Hungarian method with potentials, `O(cols² · rows)`.
///
/// `matrix[r][c]` is the cost of giving column `c` to row `r`; there must be
/// at least as many rows as columns.
pub fn hungarian_min_assign(matrix: &[Vec<u64>]) -> Result<Assignment, AssignError> {
    let rows = matrix.len();
    let cols = matrix.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Err(AssignError::Empty);
    }
    if matrix.iter().any(|r| r.len() != cols) {
        return Err(AssignError::Ragged);
    }
    if rows < cols {
        return Err(AssignError::TooFewRows { rows, cols });
    }

    // Columns are the side that gets fully matched; rows are the "jobs".
    // Everything is 1-indexed, index 0 is the virtual start.
    let cost = |c: usize, r: usize| matrix[r - 1][c - 1] as i64;
    let mut u = vec![0i64; cols + 1];
    let mut v = vec![0i64; rows + 1];
    let mut owner = vec![0usize; rows + 1];
    let mut way = vec![0usize; rows + 1];
    for c in 1..=cols {
        owner[0] = c;
        let mut r0 = 0;
        let mut minv = vec![i64::MAX; rows + 1];
        let mut used = vec![false; rows + 1];
        loop {
            used[r0] = true;
            let c0 = owner[r0];
            let mut delta = i64::MAX;
            let mut r1 = 0;
            for r in 1..=rows {
                if used[r] {
                    continue;
                }
                let cur = cost(c0, r) - u[c0] - v[r];
                if cur < minv[r] {
                    minv[r] = cur;
                    way[r] = r0;
                }
                if minv[r] < delta {
                    delta = minv[r];
                    r1 = r;
                }
            }
            for r in 0..=rows {
                if used[r] {
                    u[owner[r]] += delta;
                    v[r] -= delta;
                } else {
                    minv[r] -= delta;
                }
            }
            r0 = r1;
            if owner[r0] == 0 {
                break;
            }
        }
        loop {
            let r1 = way[r0];
            owner[r0] = owner[r1];
            r0 = r1;
            if r0 == 0 {
                break;
            }
        }
    }

    let mut col_to_row = vec![0; cols];
    for r in 1..=rows {
        if owner[r] != 0 {
            col_to_row[owner[r] - 1] = r - 1;
        }
    }
    let total = col_to_row
        .iter()
        .enumerate()
        .map(|(c, &r)| matrix[r][c])
        .sum();
    Ok(Assignment { col_to_row, total })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Minimum over every injection of columns into rows.
    fn brute_force(matrix: &[Vec<u64>]) -> u64 {
        fn go(m: &[Vec<u64>], c: usize, used: &mut Vec<bool>) -> u64 {
            if c == m[0].len() {
                return 0;
            }
            let mut best = u64::MAX;
            for r in 0..m.len() {
                if !used[r] {
                    used[r] = true;
                    best = best.min(m[r][c] + go(m, c + 1, used));
                    used[r] = false;
                }
            }
            best
        }
        go(matrix, 0, &mut vec![false; matrix.len()])
    }

    #[test]
    fn two_by_two() {
        let a = hungarian_min_assign(&[vec![1, 2], vec![3, 1]]).unwrap();
        assert_eq!(a.col_to_row, vec![0, 1]);
        assert_eq!(a.total, 2);
    }

    #[test]
    fn zero_diagonal() {
        let m: Vec<Vec<u64>> = (0..4)
            .map(|r| (0..4).map(|c| if r == c { 0 } else { 7 }).collect())
            .collect();
        let a = hungarian_min_assign(&m).unwrap();
        assert_eq!(a.col_to_row, vec![0, 1, 2, 3]);
        assert_eq!(a.total, 0);
    }

    #[test]
    fn tall_matrix_picks_the_best_rows() {
        let m = vec![vec![9, 9], vec![1, 5], vec![4, 2]];
        let a = hungarian_min_assign(&m).unwrap();
        assert_eq!(a.total, 3);
        assert_eq!(a.total, brute_force(&m));
        assert_eq!(a.col_to_row, vec![1, 2]);
    }

    #[test]
    fn malformed_input_is_rejected() {
        assert_eq!(hungarian_min_assign(&[]), Err(AssignError::Empty));
        assert_eq!(
            hungarian_min_assign(&[vec![1, 2]]),
            Err(AssignError::TooFewRows { rows: 1, cols: 2 })
        );
        assert_eq!(
            hungarian_min_assign(&[vec![1, 2], vec![3]]),
            Err(AssignError::Ragged)
        );
    }

    fn matrices() -> impl Strategy<Value = Vec<Vec<u64>>> {
        (1usize..=6, 1usize..=6).prop_flat_map(|(a, b)| {
            let (rows, cols) = (a.max(b), a.min(b));
            prop::collection::vec(prop::collection::vec(0u64..=100, cols), rows)
        })
    }

    proptest! {
        #[test]
        fn matches_permutation_search(m in matrices()) {
            let a = hungarian_min_assign(&m).unwrap();
            prop_assert_eq!(a.total, brute_force(&m));
            let mut rows = a.col_to_row.clone();
            rows.sort();
            rows.dedup();
            prop_assert_eq!(rows.len(), a.col_to_row.len());
        }
    }
}
