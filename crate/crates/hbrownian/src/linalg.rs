//! Small dense vector and matrix helpers.
//!
//! Ambient dimensions in this crate never exceed four, so everything here is
//! plain `Vec<f64>` / row-major `Vec<Vec<f64>>` with no BLAS behind it.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

pub fn scale(v: &[f64], s: f64) -> Vec<f64> {
    v.iter().map(|x| x * s).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `y += s * x` in place.
pub fn axpy(y: &mut [f64], s: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}

pub fn normalize(v: &[f64]) -> Option<Vec<f64>> {
    let n = norm(v);
    if n < 1e-300 {
        None
    } else {
        Some(scale(v, 1.0 / n))
    }
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Symmetric matrix-vector product for a row-major square matrix.
pub fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| dot(row, v)).collect()
}

/// Quadratic form `v^T M v`.
pub fn quad_form(m: &[Vec<f64>], v: &[f64]) -> f64 {
    dot(&mat_vec(m, v), v)
}

pub fn zeros_mat(n: usize) -> Vec<Vec<f64>> {
    vec![vec![0.0; n]; n]
}

/// Gram-Schmidt with pivoting: extends `fixed` (assumed orthonormal) to an
/// orthonormal set spanning the projections of `candidates` orthogonal to
/// `fixed`, returning at most `want` new vectors. Candidates are consumed in
/// order of largest residual norm, which makes the output deterministic.
pub fn orthonormal_complement(
    fixed: &[Vec<f64>],
    candidates: &[Vec<f64>],
    want: usize,
) -> Vec<Vec<f64>> {
    let mut residuals: Vec<Vec<f64>> = candidates.to_vec();
    for r in residuals.iter_mut() {
        for f in fixed {
            let c = dot(r, f);
            axpy(r, -c, f);
        }
    }
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(want);
    while basis.len() < want {
        // Pivot on the largest remaining residual.
        let (best, best_norm) = residuals
            .iter()
            .enumerate()
            .map(|(i, r)| (i, norm(r)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("candidate pool exhausted before basis completed");
        if best_norm < 1e-12 {
            panic!("degenerate candidate set in orthonormal_complement");
        }
        let e = scale(&residuals[best], 1.0 / best_norm);
        for r in residuals.iter_mut() {
            let c = dot(r, &e);
            axpy(r, -c, &e);
        }
        basis.push(e);
    }
    basis
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
///
/// Exact to machine precision for the tiny (n <= 4) matrices used here.
pub fn symmetric_eigenvalues(m: &[Vec<f64>]) -> Vec<f64> {
    let n = m.len();
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![m[0][0]];
    }
    let mut a: Vec<Vec<f64>> = m.to_vec();
    for _sweep in 0..64 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[i][j].abs();
            }
        }
        if off < 1e-15 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() < 1e-18 {
                    continue;
                }
                let theta = if (a[p][p] - a[q][q]).abs() < 1e-300 {
                    std::f64::consts::FRAC_PI_4
                } else {
                    0.5 * (2.0 * a[p][q] / (a[p][p] - a[q][q])).atan()
                };
                let (s, c) = theta.sin_cos();
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp + s * akq;
                    a[k][q] = -s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk + s * aqk;
                    a[q][k] = -s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    eig.sort_by(|x, y| x.total_cmp(y));
    eig
}

/// Golden-section maximization of a unimodal function on `[a, b]`.
pub fn golden_max(mut a: f64, mut b: f64, rel_tol: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let scale = 1.0 + a.abs().max(b.abs());
    while (b - a).abs() > rel_tol * scale {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Ordinary least squares fit `y = intercept + slope * x`.
///
/// Returns `(slope, intercept, slope_stderr)`. At least three points are
/// required for a finite standard error.
pub fn ols_line(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    assert!(xs.len() >= 2, "need at least two points for a line fit");
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = if xs.len() > 2 {
        let ss_res: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| {
                let r = y - (intercept + slope * x);
                r * r
            })
            .sum();
        (ss_res / (n - 2.0) / sxx).sqrt()
    } else {
        f64::INFINITY
    };
    (slope, intercept, stderr)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_matches_closed_form_2x2() {
        let m = vec![vec![2.0, 1.0], vec![1.0, 2.0]];
        let eig = symmetric_eigenvalues(&m);
        assert!((eig[0] - 1.0).abs() < 1e-12);
        assert!((eig[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn jacobi_3x3_diagonal_plus_rank_one() {
        // eigenvalues of diag(1,2,3) + 0.5 * ones
        let mut m = vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 2.0, 0.0],
            vec![0.0, 0.0, 3.0],
        ];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += 0.5;
            }
        }
        let eig = symmetric_eigenvalues(&m);
        // brute-force check against characteristic polynomial roots via sampling
        let charpoly = |l: f64| {
            let a = [
                [m[0][0] - l, m[0][1], m[0][2]],
                [m[1][0], m[1][1] - l, m[1][2]],
                [m[2][0], m[2][1], m[2][2] - l],
            ];
            a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
                - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
        };
        for l in &eig {
            assert!(charpoly(*l).abs() < 1e-9, "not a root: {l}");
        }
    }

    #[test]
    fn gram_schmidt_completes_tangent_basis() {
        let normal = vec![vec![0.0, 0.0, 1.0]];
        let ambient: Vec<Vec<f64>> = (0..3)
            .map(|i| (0..3).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let basis = orthonormal_complement(&normal, &ambient, 2);
        assert_eq!(basis.len(), 2);
        for b in &basis {
            assert!(dot(b, &normal[0]).abs() < 1e-14);
            assert!((norm(b) - 1.0).abs() < 1e-14);
        }
        assert!(dot(&basis[0], &basis[1]).abs() < 1e-14);
    }

    #[test]
    fn golden_finds_quadratic_peak() {
        let (x, fx) = golden_max(-2.0, 3.0, 1e-12, |x| 1.0 - (x - 0.7) * (x - 0.7));
        assert!((x - 0.7).abs() < 1e-6);
        assert!((fx - 1.0).abs() < 1e-10);
    }

    #[test]
    fn ols_recovers_exact_line() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.25).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 0.7 * x).collect();
        let (slope, intercept, se) = ols_line(&xs, &ys);
        assert!((slope + 0.7).abs() < 1e-12);
        assert!((intercept - 3.0).abs() < 1e-12);
        assert!(se < 1e-12);
    }
}
