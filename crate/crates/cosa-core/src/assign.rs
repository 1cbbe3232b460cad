//! Minimum-cost assignment (Hungarian algorithm).
//!
//! Shortest-augmenting-path formulation with potentials, `O(n^2 m)`. Costs
//! are accumulated in `f64`. The matrix may be rectangular with
//! `rows <= cols`; callers that need the transposed case or padding (e.g.
//! matching point sets of different sizes) pad the cost matrix themselves.
//! Ties are broken toward the lowest column index, so results are
//! deterministic.

use crate::error::{CosaError, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Returns `assign[row] = col` minimizing the total cost.
pub fn hungarian<S: Scalar>(cost: &Tensor<S>) -> Result<Vec<usize>> {
    if cost.rank() != 2 {
        return Err(CosaError::Shape {
            op: "hungarian",
            detail: format!("expected 2-D cost matrix, got {:?}", cost.shape()),
        });
    }
    let (n, m) = (cost.rows(), cost.cols());
    if n == 0 {
        return Ok(Vec::new());
    }
    if n > m {
        return Err(CosaError::Invalid {
            op: "hungarian",
            detail: format!("{} rows > {} cols; pad the cost matrix to at least square", n, m),
        });
    }
    if !cost.is_finite() {
        return Err(CosaError::Invalid { op: "hungarian", detail: "non-finite cost".into() });
    }
    let a: Vec<f64> = cost.data().iter().map(|x| x.as_f64()).collect();

    // 1-based potentials / matching, column 0 is the virtual source.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut matched = vec![0usize; m + 1]; // row matched to each column
    let mut way = vec![0usize; m + 1];

    for i in 1..=n {
        matched[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = matched[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = a[(i0 - 1) * m + (j - 1)] - u[i0] - v[j];
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
                    u[matched[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched[j0] = matched[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assign = vec![usize::MAX; n];
    for j in 1..=m {
        if matched[j] > 0 {
            assign[matched[j] - 1] = j - 1;
        }
    }
    Ok(assign)
}

/// Total cost of an assignment, accumulated in f64.
pub fn assignment_cost<S: Scalar>(cost: &Tensor<S>, assign: &[usize]) -> f64 {
    assign
        .iter()
        .enumerate()
        .map(|(i, &j)| cost.data()[i * cost.cols() + j].as_f64())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    /// Exhaustive minimum over all row-to-column injections.
    fn brute_force(cost: &Tensor<f64>) -> f64 {
        let (n, m) = (cost.rows(), cost.cols());
        let mut cols: Vec<usize> = (0..m).collect();
        let mut best = f64::INFINITY;
        fn rec(
            cost: &Tensor<f64>,
            row: usize,
            n: usize,
            cols: &mut Vec<usize>,
            used: &mut Vec<bool>,
            acc: f64,
            best: &mut f64,
        ) {
            if row == n {
                if acc < *best {
                    *best = acc;
                }
                return;
            }
            for ci in 0..cols.len() {
                if used[ci] {
                    continue;
                }
                used[ci] = true;
                rec(cost, row + 1, n, cols, used, acc + cost.row(row)[cols[ci]], best);
                used[ci] = false;
            }
        }
        let mut used = vec![false; m];
        rec(cost, 0, n, &mut cols, &mut used, 0.0, &mut best);
        best
    }

    #[test]
    fn known_three_by_three() {
        let c = Tensor::<f64>::new(
            vec![3, 3],
            vec![4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0],
        )
        .unwrap();
        let a = hungarian(&c).unwrap();
        assert_eq!(a, vec![1, 0, 2]); // cost 1 + 2 + 2 = 5
        assert!((assignment_cost(&c, &a) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn identity_cost_prefers_diagonal() {
        // cost[i][j] = 0 if i == j else 1
        let n = 5;
        let mut data = vec![1.0f64; n * n];
        for i in 0..n {
            data[i * n + i] = 0.0;
        }
        let c = Tensor::new(vec![n, n], data).unwrap();
        let a = hungarian(&c).unwrap();
        assert_eq!(a, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn matches_brute_force_on_random_instances() {
        for inst in 0..40u64 {
            let n = 1 + (inst % 5) as usize;
            let m = n + (inst % 3) as usize;
            let data: Vec<f64> =
                rng::uniform_vec(&mut rng::stream(99, "hung", inst), n * m, -4.0, 4.0);
            let c = Tensor::new(vec![n, m], data).unwrap();
            let a = hungarian(&c).unwrap();
            // Valid injection.
            let mut seen = vec![false; m];
            for &j in &a {
                assert!(j < m && !seen[j]);
                seen[j] = true;
            }
            let got = assignment_cost(&c, &a);
            let want = brute_force(&c);
            assert!((got - want).abs() < 1e-9, "inst {}: {} vs {}", inst, got, want);
        }
    }

    #[test]
    fn rejects_nan_and_too_many_rows() {
        let c = Tensor::<f64>::new(vec![2, 2], vec![0.0, f64::NAN, 1.0, 0.0]).unwrap();
        assert!(hungarian(&c).is_err());
        let c = Tensor::<f64>::zeros(&[3, 2]);
        assert!(hungarian(&c).is_err());
    }

    #[test]
    fn empty_matrix_is_fine() {
        let c = Tensor::<f64>::zeros(&[0, 0]);
        assert_eq!(hungarian(&c).unwrap(), Vec::<usize>::new());
    }
}
