//! Dense symmetric eigendecomposition via cyclic Jacobi rotations.
//!
//! Gram matrices in this crate are small (one row per basis term), so a
//! full Jacobi sweep is fast, simple, and accurate: every rotation is
//! orthogonal, which keeps the eigenvector matrix orthonormal to
//! rounding. Iteration stops when the off-diagonal Frobenius norm drops
//! below 1e-12 times the Frobenius norm of the input, or after 64 sweeps.

const MAX_SWEEPS: usize = 64;
const RELATIVE_OFF_DIAG_TOL: f64 = 1e-12;

/// Full eigendecomposition of a symmetric matrix given in row-major
/// order. Returns eigenvalues in ascending order (ties kept in scan
/// order) and one eigenvector per eigenvalue, paired by position.
pub(crate) fn symmetric_eigen(matrix: &[f64], n: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    assert_eq!(matrix.len(), n * n, "matrix must be n x n");
    let mut a = matrix.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    let frobenius: f64 = matrix.iter().map(|x| x * x).sum::<f64>().sqrt();
    let tol = RELATIVE_OFF_DIAG_TOL * frobenius;

    let mut d: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    let mut b = d.clone();
    let mut z = vec![0.0; n];

    for sweep in 0..MAX_SWEEPS {
        let sm: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| a[p * n + q] * a[p * n + q])
            .sum();
        if (2.0 * sm).sqrt() <= tol {
            break;
        }
        // Skip rotations on negligible entries during the first sweeps;
        // afterwards rotate on anything nonzero.
        let tresh = if sweep < 3 { 0.2 * sm / (n * n) as f64 } else { 0.0 };

        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                let g = 100.0 * apq.abs();
                if sweep > 3
                    && d[p].abs() + g == d[p].abs()
                    && d[q].abs() + g == d[q].abs()
                {
                    a[p * n + q] = 0.0;
                } else if apq.abs() > tresh {
                    let h = d[q] - d[p];
                    let t = if h.abs() + g == h.abs() {
                        apq / h
                    } else {
                        let theta = 0.5 * h / apq;
                        let t = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
                        if theta < 0.0 {
                            -t
                        } else {
                            t
                        }
                    };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    let tau = s / (1.0 + c);
                    let h = t * apq;
                    z[p] -= h;
                    z[q] += h;
                    d[p] -= h;
                    d[q] += h;
                    a[p * n + q] = 0.0;
                    for j in 0..p {
                        rotate(&mut a, n, s, tau, j, p, j, q);
                    }
                    for j in (p + 1)..q {
                        rotate(&mut a, n, s, tau, p, j, j, q);
                    }
                    for j in (q + 1)..n {
                        rotate(&mut a, n, s, tau, p, j, q, j);
                    }
                    for j in 0..n {
                        rotate(&mut v, n, s, tau, j, p, j, q);
                    }
                }
            }
        }

        for i in 0..n {
            b[i] += z[i];
            d[i] = b[i];
            z[i] = 0.0;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).expect("eigenvalues are finite").then(i.cmp(&j)));
    let values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let vectors: Vec<Vec<f64>> = order
        .iter()
        .map(|&col| (0..n).map(|row| v[row * n + col]).collect())
        .collect();
    (values, vectors)
}

#[inline]
fn rotate(m: &mut [f64], n: usize, s: f64, tau: f64, i: usize, j: usize, k: usize, l: usize) {
    let g = m[i * n + j];
    let h = m[k * n + l];
    m[i * n + j] = g - s * (h + g * tau);
    m[k * n + l] = h + s * (g - h * tau);
}
