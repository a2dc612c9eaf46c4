//! Small dense helpers on top of nalgebra.

use nalgebra::DMatrix;

/// Full SVD `m = U Σ Vᵀ` by one-sided Jacobi rotations, singular values in
/// decreasing order.
///
/// nalgebra 0.35 returns wrong factors for some matrices with clustered
/// singular values (reconstruction errors of order 1e-2), so all
/// decompositions in this crate go through this routine. Inputs here are
/// small (at most a few dozen columns), where Jacobi is accurate to working
/// precision.
#[derive(Debug, Clone)]
pub(crate) struct Svd {
    pub sigma: Vec<f64>,
    /// `rows × rows` orthogonal.
    pub u: DMatrix<f64>,
    /// `cols × cols` orthogonal.
    pub v: DMatrix<f64>,
}

/// Jacobi SVD of a matrix with at least as many rows as columns; returns
/// `(sigma, U thin, V)` unsorted.
fn jacobi_tall(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>, DMatrix<f64>) {
    let (r, n) = m.shape();
    let mut a = m.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _ in 0..80 {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for k in 0..r {
                    alpha += a[(k, i)] * a[(k, i)];
                    beta += a[(k, j)] * a[(k, j)];
                    gamma += a[(k, i)] * a[(k, j)];
                }
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for k in 0..r {
                    let (x, y) = (a[(k, i)], a[(k, j)]);
                    a[(k, i)] = c * x - s * y;
                    a[(k, j)] = s * x + c * y;
                }
                for k in 0..n {
                    let (x, y) = (v[(k, i)], v[(k, j)]);
                    v[(k, i)] = c * x - s * y;
                    v[(k, j)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let sigma: Vec<f64> = (0..n).map(|k| a.column(k).norm()).collect();
    (sigma, a, v)
}

/// Extends orthonormal columns (zero columns are replaced) to an orthonormal
/// basis of `R^rows`.
fn complete_basis(cols: Vec<Vec<f64>>, rows: usize) -> DMatrix<f64> {
    let mut span = Span::default();
    let mut out = Vec::with_capacity(rows);
    for c in cols.iter() {
        let w = span.project_out(c);
        let n = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.5 {
            span.basis.push(w.iter().map(|x| x / n).collect());
            out.push(Some(span.basis.len() - 1));
        } else {
            out.push(None);
        }
    }
    // fill the gaps and the remaining columns from coordinate axes
    let mut axis = 0;
    let mut next_axis = |span: &mut Span| loop {
        let mut e = vec![0.0; rows];
        e[axis] = 1.0;
        axis += 1;
        let w = span.project_out(&e);
        let n = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-3 {
            span.basis.push(w.iter().map(|x| x / n).collect());
            return span.basis.len() - 1;
        }
    };
    let mut order: Vec<usize> = Vec::with_capacity(rows);
    for slot in out {
        let k = match slot {
            Some(k) => k,
            None => next_axis(&mut span),
        };
        order.push(k);
    }
    while order.len() < rows {
        let k = next_axis(&mut span);
        order.push(k);
    }
    DMatrix::from_fn(rows, rows, |r, c| span.basis[order[c]][r])
}

pub(crate) fn svd(m: &DMatrix<f64>) -> Svd {
    let wide = m.nrows() < m.ncols();
    let t = if wide { m.transpose() } else { m.clone() };
    let (sigma, us, v) = jacobi_tall(&t);
    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]));
    let top = sigma.iter().cloned().fold(0.0, f64::max);
    let left: Vec<Vec<f64>> = order
        .iter()
        .map(|&k| {
            if sigma[k] > 1e-300 && sigma[k] > f64::EPSILON * 1e-3 * top {
                us.column(k).iter().map(|x| x / sigma[k]).collect()
            } else {
                vec![0.0; t.nrows()]
            }
        })
        .collect();
    let u_full = complete_basis(left, t.nrows());
    let v_full = complete_basis(order.iter().map(|&k| v.column(k).iter().cloned().collect()).collect(), t.ncols());
    let sigma: Vec<f64> = order.iter().map(|&k| sigma[k]).collect();
    if wide {
        Svd { sigma, u: v_full, v: u_full }
    } else {
        Svd { sigma, u: u_full, v: v_full }
    }
}

/// Singular values in decreasing order with the matching left singular
/// vectors as the leading columns of `u`.
pub(crate) fn svd_sorted(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let d = svd(&m);
    (d.sigma, d.u)
}

/// Singular values in decreasing order, without forming the factors.
pub(crate) fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let (mut sigma, _, _) = if m.nrows() < m.ncols() { jacobi_tall(&m.transpose()) } else { jacobi_tall(m) };
    sigma.sort_by(|a, b| b.total_cmp(a));
    sigma
}

/// Closest orthogonal matrix in the Frobenius norm (polar factor `U Vᵀ`).
pub(crate) fn polar_orthogonal(m: &DMatrix<f64>) -> DMatrix<f64> {
    let d = svd(m);
    d.u * d.v.transpose()
}

/// Spectral norm.
pub(crate) fn operator_norm(m: &DMatrix<f64>) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// `‖MᵀM − I‖_max`.
pub(crate) fn orthogonality_defect(m: &DMatrix<f64>) -> f64 {
    let n = m.ncols();
    let g = m.transpose() * m - DMatrix::<f64>::identity(n, n);
    g.amax()
}

/// Orthonormal basis of a growing subspace of `R^n`.
#[derive(Debug, Clone, Default)]
pub(crate) struct Span {
    pub basis: Vec<Vec<f64>>,
}

impl Span {
    pub fn project_out(&self, v: &[f64]) -> Vec<f64> {
        let mut w = v.to_vec();
        // two passes keep the result orthogonal to working precision
        for _ in 0..2 {
            for b in &self.basis {
                let c: f64 = w.iter().zip(b).map(|(x, y)| x * y).sum();
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= c * bi;
                }
            }
        }
        w
    }

    pub fn push_normalized(&mut self, v: &[f64]) {
        let w = self.project_out(v);
        let n = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        self.basis.push(w.iter().map(|x| x / n).collect());
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}


#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn wide_ellipse_samples_keep_equal_singular_values() {
        // circle samples on which the left-vector SVD path of a wide matrix
        // returned 1.1944 for the larger singular value
        let xi1 = [-0.1273483053949162, -0.15281796647389947, 0.04453711226926032, -0.05344453472311238];
        let xi2 = [0.15281796647389947, -0.12734830539491623, 0.053444534723112384, 0.04453711226926032];
        let m = DMatrix::from_fn(4, 64, |r, c| {
            let p = std::f64::consts::TAU * c as f64 / 64.0;
            (2.0 * p).cos() * xi1[r] + (2.0 * p).sin() * xi2[r] + 1e-17 * (c % 3) as f64
        });
        let (sigma, u) = svd_sorted(m.clone());
        let sv = singular_values(&m);
        assert!((sigma[0] - sigma[1]).abs() < 1e-12);
        assert!((sigma[0] - sv[0]).abs() < 1e-12 && (sigma[3] - sv[3]).abs() < 1e-12);
        assert!(orthogonality_defect(&u) < 1e-12);
    }

    fn reconstruction_error(m: &DMatrix<f64>) -> f64 {
        let d = svd(m);
        let mut s = DMatrix::zeros(m.nrows(), m.ncols());
        for (k, x) in d.sigma.iter().enumerate() {
            s[(k, k)] = *x;
        }
        assert!(orthogonality_defect(&d.u) < 1e-13);
        assert!(orthogonality_defect(&d.v) < 1e-13);
        (&d.u * s * d.v.transpose() - m).amax()
    }

    #[test]
    fn clustered_columns_reconstruct() {
        // second-order form values (α11, α12, α22 = -α11) on which nalgebra
        // 0.35 reconstructs with an error of 1.5e-2
        let a = [
            [0.12013124405109568, -0.26249155707486277, 0.3119436817358312, 0.48582349959268967, 0.2857862172031556, 0.0407378373205759],
            [-0.2080734182734885, 0.4546487134126814, -1.9917526300841354e-14, -4.746167945018269e-14, 0.4949962482999938, 0.07056000402990995],
            [-0.12013124405060427, 0.2624915570737949, -0.3119436817346063, -0.48582349959078647, -0.2857862172020792, -0.04073783732042],
        ];
        let m = DMatrix::from_fn(6, 3, |r, c| a[c][r]);
        assert!(reconstruction_error(&m) < 1e-14);
        assert!(reconstruction_error(&m.transpose()) < 1e-14);
        let sv = singular_values(&m);
        assert!((sv[0] - 1.0).abs() < 1e-10 && (sv[1] - FRAC_1_SQRT_2).abs() < 1e-10 && sv[2] < 1e-12, "{sv:?}");
    }

    #[test]
    fn random_matrices_reconstruct() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for (r, c) in [(3, 3), (5, 2), (2, 7), (8, 8), (6, 1)] {
            let m = DMatrix::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0));
            assert!(reconstruction_error(&m) < 1e-13);
        }
    }

    #[test]
    fn polar_factor_of_rotation_is_itself() {
        let (s, c) = 0.3f64.sin_cos();
        let q = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        assert!((polar_orthogonal(&(&q * 2.0)) - &q).amax() < 1e-15);
        assert!((operator_norm(&(&q * 3.0)) - 3.0).abs() < 1e-14);
    }
}
