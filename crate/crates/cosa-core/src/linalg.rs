//! Symmetric eigendecomposition via cyclic Jacobi rotations.
//!
//! The solver always works in `f64` internally, whatever the tensor element
//! type. No gradient flows through it: callers treat the decomposition as a
//! detached, gradient-free operation.
//!
//! Conventions:
//! * input is symmetrized as `(A + A^T) / 2` before decomposition;
//! * eigenvalues are returned in descending order;
//! * eigenvectors are the *columns* of the returned matrix, each scaled so
//!   its largest-magnitude component (lowest index on ties) is nonnegative;
//! * eigenvalues that are negative by less than numerical noise are clamped
//!   to zero, so Gram matrices always report nonnegative spectra.

use crate::error::{CosaError, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Absolute off-diagonal Frobenius norm at which iteration stops.
const OFF_DIAG_TOL: f64 = 1e-9;
/// Relative floor for large-magnitude matrices where the absolute threshold
/// is below attainable f64 precision.
const OFF_DIAG_REL_TOL: f64 = 1e-14;
const MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone)]
pub struct EigenResult<S> {
    /// Descending eigenvalues.
    pub eigenvalues: Vec<S>,
    /// `n x n` matrix whose columns are the corresponding eigenvectors.
    pub eigenvectors: Tensor<S>,
}

pub fn sym_eig<S: Scalar>(a: &Tensor<S>) -> Result<EigenResult<S>> {
    if a.rank() != 2 || a.shape()[0] != a.shape()[1] {
        return Err(CosaError::Shape {
            op: "sym_eig",
            detail: format!("expected square matrix, got {:?}", a.shape()),
        });
    }
    if !a.is_finite() {
        return Err(CosaError::Invalid { op: "sym_eig", detail: "non-finite entries".into() });
    }
    let n = a.shape()[0];
    let data: Vec<f64> = a.data().iter().map(|x| x.as_f64()).collect();
    let (vals, vecs) = sym_eig_f64(&data, n)?;
    Ok(EigenResult {
        eigenvalues: vals.iter().map(|&x| S::from_f64(x)).collect(),
        eigenvectors: Tensor::new(vec![n, n], vecs.iter().map(|&x| S::from_f64(x)).collect())?,
    })
}

fn off_diag_frobenius(w: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for p in 0..n {
        for q in (p + 1)..n {
            s += w[p * n + q] * w[p * n + q];
        }
    }
    (2.0 * s).sqrt()
}

/// Plain-`f64` core: returns `(descending eigenvalues, column eigenvectors)`.
pub fn sym_eig_f64(a: &[f64], n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    assert_eq!(a.len(), n * n);
    if n == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    // Symmetrize once; the rotations below then preserve symmetry exactly
    // because both triangles are updated.
    let mut w = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..n {
            w[i * n + j] = 0.5 * (a[i * n + j] + a[j * n + i]);
        }
    }
    let fro = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut v = vec![0.0f64; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    let mut converged = false;
    for _sweep in 0..MAX_SWEEPS {
        let off = off_diag_frobenius(&w, n);
        if off < OFF_DIAG_TOL || off <= fro * OFF_DIAG_REL_TOL {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = w[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (w[q * n + q] - w[p * n + p]) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                    sign / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);
                let h = t * apq;
                w[p * n + p] -= h;
                w[q * n + q] += h;
                w[p * n + q] = 0.0;
                w[q * n + p] = 0.0;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let g = w[r * n + p];
                    let hh = w[r * n + q];
                    let np = g - s * (hh + g * tau);
                    let nq = hh + s * (g - hh * tau);
                    w[r * n + p] = np;
                    w[p * n + r] = np;
                    w[r * n + q] = nq;
                    w[q * n + r] = nq;
                }
                for r in 0..n {
                    let g = v[r * n + p];
                    let hh = v[r * n + q];
                    v[r * n + p] = g - s * (hh + g * tau);
                    v[r * n + q] = hh + s * (g - hh * tau);
                }
            }
        }
    }
    if !converged {
        let off = off_diag_frobenius(&w, n);
        if off >= OFF_DIAG_TOL && off > fro * OFF_DIAG_REL_TOL {
            return Err(CosaError::NoConvergence {
                op: "sym_eig",
                detail: format!("off-diagonal norm {:.3e} after {} sweeps", off, MAX_SWEEPS),
            });
        }
    }

    let mut vals: Vec<f64> = (0..n).map(|i| w[i * n + i]).collect();
    // Descending sort; stable on ties so the output is deterministic.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| vals[j].partial_cmp(&vals[i]).unwrap().then(i.cmp(&j)));

    let clamp = OFF_DIAG_TOL * vals.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let mut out_vals = Vec::with_capacity(n);
    let mut out_vecs = vec![0.0f64; n * n];
    for (dst, &src) in order.iter().enumerate() {
        let mut lam = vals[src];
        if lam < 0.0 && lam > -clamp {
            lam = 0.0;
        }
        out_vals.push(lam);
        // Sign convention: make the largest-magnitude component nonnegative.
        let mut arg = 0;
        let mut best = -1.0f64;
        for r in 0..n {
            let mag = v[r * n + src].abs();
            if mag > best {
                best = mag;
                arg = r;
            }
        }
        let flip = if v[arg * n + src] < 0.0 { -1.0 } else { 1.0 };
        for r in 0..n {
            out_vecs[r * n + dst] = flip * v[r * n + src];
        }
    }
    vals = out_vals;
    Ok((vals, out_vecs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn reconstruct(vals: &[f64], vecs: &[f64], n: usize) -> Vec<f64> {
        // V * diag(vals) * V^T with plain loops (independent of the tensor
        // kernels under test).
        let mut out = vec![0.0f64; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for l in 0..n {
                    acc += vecs[i * n + l] * vals[l] * vecs[j * n + l];
                }
                out[i * n + j] = acc;
            }
        }
        out
    }

    #[test]
    fn diagonal_matrix_is_its_own_spectrum() {
        let a = Tensor::<f64>::new(vec![2, 2], vec![3.0, 0.0, 0.0, 1.0]).unwrap();
        let r = sym_eig(&a).unwrap();
        assert!((r.eigenvalues[0] - 3.0).abs() < 1e-12);
        assert!((r.eigenvalues[1] - 1.0).abs() < 1e-12);
        assert_eq!(r.eigenvectors.data(), &[1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn two_by_two_closed_form() {
        // [[2, 1], [1, 2]] has eigenvalues 3 and 1 with eigenvectors
        // [1, 1]/sqrt(2) and (after the sign convention) [1, -1]/sqrt(2).
        let a = Tensor::<f64>::new(vec![2, 2], vec![2.0, 1.0, 1.0, 2.0]).unwrap();
        let r = sym_eig(&a).unwrap();
        let s = 1.0 / 2.0f64.sqrt();
        assert!((r.eigenvalues[0] - 3.0).abs() < 1e-12);
        assert!((r.eigenvalues[1] - 1.0).abs() < 1e-12);
        let v = r.eigenvectors.data();
        assert!((v[0] - s).abs() < 1e-10 && (v[2] - s).abs() < 1e-10);
        assert!((v[1] - s).abs() < 1e-10 && (v[3] + s).abs() < 1e-10);
    }

    #[test]
    fn random_matrices_reconstruct_and_are_orthonormal() {
        for (k, n) in [(0u64, 4usize), (1, 8), (2, 16), (3, 33)] {
            let raw: Vec<f64> =
                rng::randn_vec(&mut rng::stream(42, "eig", k), n * n, 1.0);
            let mut sym = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    sym[i * n + j] = 0.5 * (raw[i * n + j] + raw[j * n + i]);
                }
            }
            let (vals, vecs) = sym_eig_f64(&sym, n).unwrap();
            // Descending order.
            for w in vals.windows(2) {
                assert!(w[0] >= w[1] - 1e-12);
            }
            // Reconstruction.
            let rec = reconstruct(&vals, &vecs, n);
            for (x, y) in rec.iter().zip(&sym) {
                assert!((x - y).abs() < 1e-9, "{} vs {}", x, y);
            }
            // Orthonormal columns.
            for c1 in 0..n {
                for c2 in 0..n {
                    let dot: f64 =
                        (0..n).map(|r| vecs[r * n + c1] * vecs[r * n + c2]).sum();
                    let expect = if c1 == c2 { 1.0 } else { 0.0 };
                    assert!((dot - expect).abs() < 1e-10);
                }
            }
            // Trace identity.
            let trace: f64 = (0..n).map(|i| sym[i * n + i]).sum();
            let sum: f64 = vals.iter().sum();
            assert!((trace - sum).abs() < 1e-5 * trace.abs().max(1.0));
        }
    }

    #[test]
    fn asymmetric_input_is_symmetrized() {
        let a = Tensor::<f64>::new(vec![2, 2], vec![0.0, 2.0, 0.0, 0.0]).unwrap();
        let b = Tensor::<f64>::new(vec![2, 2], vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let ra = sym_eig(&a).unwrap();
        let rb = sym_eig(&b).unwrap();
        assert_eq!(ra.eigenvalues, rb.eigenvalues);
        assert_eq!(ra.eigenvectors.data(), rb.eigenvectors.data());
    }

    #[test]
    fn gram_spectra_are_nonnegative() {
        // Rank-deficient Gram matrix: z has 3 rows in a 2-D subspace.
        let z = [1.0f64, 2.0, 0.5, -1.0, 1.0, 0.0, 0.0, 1.0, 0.25];
        let n = 3;
        let mut g = vec![0.0; 9];
        for i in 0..n {
            for j in 0..n {
                g[i * n + j] = (0..3).map(|c| z[i * 3 + c] * z[j * 3 + c]).sum();
            }
        }
        let (vals, _) = sym_eig_f64(&g, n).unwrap();
        for &l in &vals {
            assert!(l >= 0.0, "eigenvalue {} < 0", l);
        }
    }

    #[test]
    fn rejects_non_square_and_non_finite() {
        assert!(sym_eig(&Tensor::<f64>::zeros(&[2, 3])).is_err());
        let bad = Tensor::<f64>::new(vec![2, 2], vec![1.0, f64::NAN, 0.0, 1.0]).unwrap();
        assert!(sym_eig(&bad).is_err());
    }

    #[test]
    fn sign_convention_is_deterministic() {
        let raw: Vec<f64> = rng::randn_vec(&mut rng::stream(7, "sign", 0), 25, 1.0);
        let mut sym = vec![0.0; 25];
        for i in 0..5 {
            for j in 0..5 {
                sym[i * 5 + j] = 0.5 * (raw[i * 5 + j] + raw[j * 5 + i]);
            }
        }
        let (_, v1) = sym_eig_f64(&sym, 5).unwrap();
        let (_, v2) = sym_eig_f64(&sym, 5).unwrap();
        assert_eq!(v1, v2);
        // Largest-magnitude component of every column is nonnegative.
        for c in 0..5 {
            let mut arg = 0;
            let mut best = -1.0;
            for r in 0..5 {
                if v1[r * 5 + c].abs() > best {
                    best = v1[r * 5 + c].abs();
                    arg = r;
                }
            }
            assert!(v1[arg * 5 + c] >= 0.0);
        }
    }
}
