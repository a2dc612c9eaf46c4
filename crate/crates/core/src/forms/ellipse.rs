//! Curvature ellipses `E_k = { α^{k+1}(Z^φ, …, Z^φ) : Z^φ = cos φ e1 + sin φ e2 }`.

use nalgebra::DMatrix;
use serde::Serialize;

use super::flag::{higher_form_apply, OsculatingFlag};
use crate::error::{Error, Result};
use crate::linalg::singular_values;
use crate::surface::{dot, norm};

pub const DEFAULT_PHI_SAMPLES: usize = 64;

/// Constant relating the conjugate-diameter test to the fitted deviation:
/// `(a-b)/a < ε` implies `q < C ε` and `q < ε` implies `(a-b)/a < C ε`, where
/// `q = (||ξ1|² - |ξ2|²| + |⟨ξ1, ξ2⟩|) / a²`. Follows from
/// `(a² - b²)² = (|ξ1|² - |ξ2|²)² + 4⟨ξ1, ξ2⟩²`.
pub const CIRCULARITY_EQUIVALENCE_C: f64 = 2.0 * std::f64::consts::SQRT_2;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EllipseData {
    pub order: usize,
    /// `ξ_1 = α^{k+1}(e1, …, e1)`.
    pub xi1: Vec<f64>,
    /// `ξ_2 = α^{k+1}(e2, e1, …, e1)`.
    pub xi2: Vec<f64>,
    #[serde(skip)]
    pub samples: Vec<Vec<f64>>,
    pub center: Vec<f64>,
    /// `(a, b)` with `a >= b`.
    pub semi_axes: [f64; 2],
    /// `(a - b) / a`.
    pub circularity_dev: f64,
    /// Conjugate-diameter form of the same test, see
    /// [`CIRCULARITY_EQUIVALENCE_C`].
    pub conjugate_dev: f64,
    /// Radius `κ_k`; the major semi-axis.
    pub radius: f64,
}

/// Samples and fits the `k`-th order curvature ellipse.
pub fn curvature_ellipse(flag: &OsculatingFlag, k: usize, phi_samples: usize) -> Result<EllipseData> {
    let m = flag.ranks.len();
    if k < 1 || k > m {
        return Err(Error::OutOfRange(format!("ellipse order {k} outside 1..={m}")));
    }
    if phi_samples < 8 {
        return Err(Error::OutOfRange(format!("need at least 8 φ samples, got {phi_samples}")));
    }
    let s = k + 1;
    let xi1 = flag.alpha[s - 2][0].clone();
    let xi2 = flag.alpha[s - 2][1].clone();
    let samples: Vec<Vec<f64>> = (0..phi_samples)
        .map(|i| {
            let phi = std::f64::consts::TAU * i as f64 / phi_samples as f64;
            let z = [phi.cos(), phi.sin()];
            higher_form_apply(flag, s, &vec![z; s])
        })
        .collect::<Result<_>>()?;
    let dim = xi1.len();
    let mut center = vec![0.0; dim];
    for x in &samples {
        for (c, xi) in center.iter_mut().zip(x) {
            *c += xi / phi_samples as f64;
        }
    }
    let centered = DMatrix::from_fn(dim, phi_samples, |r, c| samples[c][r] - center[r]);
    let sigma = singular_values(&centered);
    let factor = (2.0 / phi_samples as f64).sqrt();
    let a = sigma.first().copied().unwrap_or(0.0) * factor;
    let b = sigma.get(1).copied().unwrap_or(0.0) * factor;
    let scale = norm(&flag.tangent.e1).max(1.0);
    if !(a > 1e-12 * scale) {
        return Err(Error::DegenerateEllipse { u: flag.point[0], v: flag.point[1], order: k });
    }
    let conjugate_dev = ((dot(&xi1, &xi1) - dot(&xi2, &xi2)).abs() + dot(&xi1, &xi2).abs()) / (a * a);
    Ok(EllipseData {
        order: k,
        xi1,
        xi2,
        samples,
        center,
        semi_axes: [a, b],
        circularity_dev: (a - b) / a,
        conjugate_dev,
        radius: a,
    })
}
