//! Surface charts, ambient spaces, parameter grids and the first-order
//! tangent geometry: metric, oriented orthonormal frame, complex structure
//! and the Hodge operator on 1-forms.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::jets::Jet2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmbientKind {
    /// Unit sphere `S^N` inside `R^{N+1}`.
    Sphere,
    Euclidean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AmbientSpace {
    pub kind: AmbientKind,
    /// Dimension `N` of the space form.
    pub dim: usize,
}

impl AmbientSpace {
    pub fn sphere(dim: usize) -> Self {
        AmbientSpace { kind: AmbientKind::Sphere, dim }
    }

    pub fn euclidean(dim: usize) -> Self {
        AmbientSpace { kind: AmbientKind::Euclidean, dim }
    }

    pub fn is_sphere(&self) -> bool {
        self.kind == AmbientKind::Sphere
    }

    pub fn embedding_dim(&self) -> usize {
        match self.kind {
            AmbientKind::Sphere => self.dim + 1,
            AmbientKind::Euclidean => self.dim,
        }
    }

    /// Number `m = ⌊(N-1)/2⌋` of higher normal bundles.
    pub fn normal_levels(&self) -> usize {
        (self.dim - 1) / 2
    }

    /// Codimension of a surface in this space.
    pub fn codim(&self) -> usize {
        self.dim - 2
    }

    /// Ranks of `N_1, …, N_m` at a regular point of a substantial minimal
    /// surface: all two except a final one when `N` is odd.
    pub fn generic_ranks(&self) -> Vec<usize> {
        let m = self.normal_levels();
        (1..=m)
            .map(|k| if k == m && self.dim % 2 == 1 { 1 } else { 2 })
            .collect()
    }

    /// Size of the frame matrices used by the moving-frame integrator.
    pub fn frame_size(&self) -> usize {
        self.dim + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub u: [f64; 2],
    pub v: [f64; 2],
}

impl Domain {
    pub fn new(u: [f64; 2], v: [f64; 2]) -> Self {
        Domain { u, v }
    }

    /// Membership with a slack of 1% of the side length, so that finite
    /// difference stencils centred on boundary nodes remain admissible.
    pub fn contains(&self, p: [f64; 2]) -> bool {
        let su = 1e-2 * (self.u[1] - self.u[0]).abs();
        let sv = 1e-2 * (self.v[1] - self.v[0]).abs();
        p[0] >= self.u[0] - su && p[0] <= self.u[1] + su && p[1] >= self.v[0] - sv && p[1] <= self.v[1] + sv
    }

    pub fn center(&self) -> [f64; 2] {
        [0.5 * (self.u[0] + self.u[1]), 0.5 * (self.v[0] + self.v[1])]
    }
}

/// Serializable chart definition, the on-disk chart format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartDef {
    pub label: String,
    pub ambient: AmbientDef,
    pub domain: Domain,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub periods: Vec<[f64; 2]>,
    /// Coordinate formulas before the optional linear map.
    pub coords: Vec<Expr>,
    /// Optional matrix applied to the coordinate vector (row-major).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmbientDef {
    pub kind: String,
    pub dim: usize,
}

/// A parametrized surface patch with exact jet access.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceChart {
    label: String,
    ambient: AmbientSpace,
    domain: Domain,
    periods: Vec<[f64; 2]>,
    coords: Vec<Expr>,
    linear: Option<Vec<Vec<f64>>>,
}

impl SurfaceChart {
    pub fn new(
        label: impl Into<String>,
        ambient: AmbientSpace,
        domain: Domain,
        periods: Vec<[f64; 2]>,
        coords: Vec<Expr>,
    ) -> Result<Self> {
        Self::build(label.into(), ambient, domain, periods, coords, None)
    }

    fn build(
        label: String,
        ambient: AmbientSpace,
        domain: Domain,
        periods: Vec<[f64; 2]>,
        coords: Vec<Expr>,
        linear: Option<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        if ambient.dim < 3 {
            return Err(Error::ChartDefinition(format!(
                "ambient dimension {} too small for a surface with normal bundle",
                ambient.dim
            )));
        }
        let out_dim = match &linear {
            Some(m) => {
                if m.iter().any(|row| row.len() != coords.len()) {
                    return Err(Error::ChartDefinition("linear map has wrong column count".into()));
                }
                m.len()
            }
            None => coords.len(),
        };
        if out_dim != ambient.embedding_dim() {
            return Err(Error::ChartDefinition(format!(
                "chart has {} coordinates, ambient needs {}",
                out_dim,
                ambient.embedding_dim()
            )));
        }
        if !(domain.u[0] < domain.u[1] && domain.v[0] < domain.v[1]) {
            return Err(Error::ChartDefinition("empty parameter domain".into()));
        }
        if periods.len() > 2 {
            return Err(Error::ChartDefinition("at most two period generators".into()));
        }
        let chart = SurfaceChart { label, ambient, domain, periods, coords, linear };
        if ambient.is_sphere() {
            let [u0, u1] = domain.u;
            let [v0, v1] = domain.v;
            for p in [[u0, v0], [u1, v1], domain.center(), [0.3 * u0 + 0.7 * u1, 0.6 * v0 + 0.4 * v1]] {
                let x = chart.point(p)?;
                let n: f64 = x.iter().map(|c| c * c).sum::<f64>().sqrt();
                if (n - 1.0).abs() > 1e-10 {
                    return Err(Error::ChartDefinition(format!(
                        "sphere chart value at ({}, {}) has norm {}",
                        p[0], p[1], n
                    )));
                }
            }
        }
        Ok(chart)
    }

    pub fn from_def(def: ChartDef) -> Result<Self> {
        let ambient = match def.ambient.kind.as_str() {
            "sphere" => AmbientSpace::sphere(def.ambient.dim),
            "euclidean" => AmbientSpace::euclidean(def.ambient.dim),
            "hyperbolic" => {
                return Err(Error::ChartDefinition("hyperbolic ambient spaces are not supported".into()))
            }
            other => return Err(Error::ChartDefinition(format!("unknown ambient kind `{other}`"))),
        };
        Self::build(def.label, ambient, def.domain, def.periods, def.coords, def.linear)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let def: ChartDef = serde_json::from_str(text).map_err(|e| Error::ChartDefinition(e.to_string()))?;
        Self::from_def(def)
    }

    pub fn to_def(&self) -> ChartDef {
        ChartDef {
            label: self.label.clone(),
            ambient: AmbientDef {
                kind: match self.ambient.kind {
                    AmbientKind::Sphere => "sphere".into(),
                    AmbientKind::Euclidean => "euclidean".into(),
                },
                dim: self.ambient.dim,
            },
            domain: self.domain,
            periods: self.periods.clone(),
            coords: self.coords.clone(),
            linear: self.linear.clone(),
        }
    }

    /// Same chart followed by an ambient linear map (e.g. a rotation).
    pub fn transformed(&self, matrix: Vec<Vec<f64>>, label: impl Into<String>) -> Result<Self> {
        let composed = match &self.linear {
            None => matrix,
            Some(inner) => matrix
                .iter()
                .map(|row| {
                    (0..inner[0].len())
                        .map(|c| row.iter().zip(inner).map(|(a, r)| a * r[c]).sum())
                        .collect()
                })
                .collect(),
        };
        Self::build(
            label.into(),
            self.ambient,
            self.domain,
            self.periods.clone(),
            self.coords.clone(),
            Some(composed),
        )
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn ambient(&self) -> AmbientSpace {
        self.ambient
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn periods(&self) -> &[[f64; 2]] {
        &self.periods
    }

    fn apply_linear<T: Clone>(&self, raw: Vec<T>, combine: impl Fn(&[f64], &[T]) -> T) -> Vec<T> {
        match &self.linear {
            None => raw,
            Some(m) => m.iter().map(|row| combine(row, &raw)).collect(),
        }
    }

    /// Ambient coordinates of the immersion expanded to total degree `order`
    /// about `point`.
    pub fn jet_eval(&self, point: [f64; 2], order: usize) -> Result<Vec<Jet2>> {
        if !self.domain.contains(point) {
            return Err(Error::OutsideDomain { u: point[0], v: point[1] });
        }
        self.jet_unchecked(point, order)
    }

    pub(crate) fn jet_unchecked(&self, point: [f64; 2], order: usize) -> Result<Vec<Jet2>> {
        let raw: Vec<Jet2> = self.coords.iter().map(|e| e.jet(point[0], point[1], order)).collect();
        let out = self.apply_linear(raw, |row, raw| {
            let mut acc = Jet2::zero(order);
            for (a, j) in row.iter().zip(raw) {
                if *a != 0.0 {
                    acc += &j.scale(*a);
                }
            }
            acc
        });
        if out.iter().any(|j| j.coeffs().iter().any(|c| !c.is_finite())) {
            return Err(Error::NotSmooth {
                u: point[0],
                v: point[1],
                detail: "non-finite Taylor coefficient".into(),
            });
        }
        Ok(out)
    }

    /// Plain ambient position.
    pub fn point(&self, p: [f64; 2]) -> Result<Vec<f64>> {
        let raw: Vec<f64> = self.coords.iter().map(|e| e.eval(p[0], p[1])).collect();
        let out = self.apply_linear(raw, |row, raw| row.iter().zip(raw).map(|(a, x)| a * x).sum());
        if out.iter().any(|c| !c.is_finite()) {
            return Err(Error::NotSmooth { u: p[0], v: p[1], detail: "non-finite value".into() });
        }
        Ok(out)
    }
}

/// Inclusive rectangular parameter grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub u: [f64; 2],
    pub v: [f64; 2],
    pub nu: usize,
    pub nv: usize,
}

impl Grid {
    pub fn new(u: [f64; 2], v: [f64; 2], nu: usize, nv: usize) -> Self {
        assert!(nu >= 2 && nv >= 2, "grid needs at least two nodes per side");
        Grid { u, v, nu, nv }
    }

    pub fn over(domain: Domain, nu: usize, nv: usize) -> Self {
        Self::new(domain.u, domain.v, nu, nv)
    }

    pub fn du(&self) -> f64 {
        (self.u[1] - self.u[0]) / (self.nu - 1) as f64
    }

    pub fn dv(&self) -> f64 {
        (self.v[1] - self.v[0]) / (self.nv - 1) as f64
    }

    pub fn node(&self, i: usize, j: usize) -> [f64; 2] {
        [self.u[0] + i as f64 * self.du(), self.v[0] + j as f64 * self.dv()]
    }

    pub fn len(&self) -> usize {
        self.nu * self.nv
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat index, `u` fastest.
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nu + i
    }

    pub fn nodes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.nv).flat_map(move |j| (0..self.nu).map(move |i| (i, j)))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// First-order tangent geometry at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentData {
    pub point: [f64; 2],
    /// `[[E, F], [F, G]]` in the coordinate basis `(∂_u, ∂_v)`.
    pub metric: [[f64; 2]; 2],
    pub e1: Vec<f64>,
    pub e2: Vec<f64>,
    /// Matrix of `J` in the frame `(e1, e2)`.
    pub j_matrix: [[f64; 2]; 2],
    /// `E = e1 - i e2`.
    pub e: Vec<Complex64>,
    /// `coframe[i][j] = θ^i(∂_j) = ⟨∂_j x, e_i⟩`; upper triangular.
    pub coframe: [[f64; 2]; 2],
}

impl TangentData {
    /// Expresses the coordinate vector `(a, b) = a ∂_u + b ∂_v` in the frame.
    pub fn to_frame(&self, coord: [f64; 2]) -> [f64; 2] {
        let c = &self.coframe;
        [c[0][0] * coord[0] + c[0][1] * coord[1], c[1][0] * coord[0] + c[1][1] * coord[1]]
    }

    /// Inverse of [`to_frame`](Self::to_frame).
    pub fn to_coords(&self, frame: [f64; 2]) -> [f64; 2] {
        let c = &self.coframe;
        let b = frame[1] / c[1][1];
        let a = (frame[0] - c[0][1] * b) / c[0][0];
        [a, b]
    }
}

pub const J_MATRIX: [[f64; 2]; 2] = [[0.0, -1.0], [1.0, 0.0]];

pub(crate) fn metric_from_derivatives(xu: &[f64], xv: &[f64]) -> [[f64; 2]; 2] {
    let e = dot(xu, xu);
    let f = dot(xu, xv);
    let g = dot(xv, xv);
    [[e, f], [f, g]]
}

pub(crate) fn tangent_from_derivatives(point: [f64; 2], xu: &[f64], xv: &[f64]) -> Result<TangentData> {
    let metric = metric_from_derivatives(xu, xv);
    let det = metric[0][0] * metric[1][1] - metric[0][1] * metric[0][1];
    let scale = metric[0][0].max(metric[1][1]).max(f64::MIN_POSITIVE);
    if !(det > 1e-12 * scale * scale) {
        return Err(Error::DegenerateMetric { u: point[0], v: point[1], det });
    }
    let nu = metric[0][0].sqrt();
    let e1: Vec<f64> = xu.iter().map(|c| c / nu).collect();
    let mut w = xv.to_vec();
    let p = dot(xv, &e1);
    axpy(-p, &e1, &mut w);
    let nw = norm(&w);
    let e2: Vec<f64> = w.iter().map(|c| c / nw).collect();
    let e = e1.iter().zip(&e2).map(|(a, b)| Complex64::new(*a, -*b)).collect();
    Ok(TangentData {
        point,
        metric,
        e1,
        e2,
        j_matrix: J_MATRIX,
        e,
        coframe: [[nu, p], [0.0, nw]],
    })
}

/// First fundamental form `[[⟨x_u,x_u⟩, ⟨x_u,x_v⟩], [·, ⟨x_v,x_v⟩]]`.
pub fn first_fundamental_form(chart: &SurfaceChart, point: [f64; 2]) -> Result<[[f64; 2]; 2]> {
    let jets = chart.jet_eval(point, 1)?;
    let xu: Vec<f64> = jets.iter().map(|j| j.derivative(1, 0)).collect();
    let xv: Vec<f64> = jets.iter().map(|j| j.derivative(0, 1)).collect();
    let m = metric_from_derivatives(&xu, &xv);
    let det = m[0][0] * m[1][1] - m[0][1] * m[0][1];
    if !(det > 1e-12 * m[0][0].max(m[1][1]).powi(2)) {
        return Err(Error::DegenerateMetric { u: point[0], v: point[1], det });
    }
    Ok(m)
}

/// Gram–Schmidt frame of `(∂_u x, ∂_v x)`, positively oriented with respect
/// to the parameter order.
///
/// The Gram–Schmidt gauge is continuous wherever the metric is
/// nondegenerate. When a reference frame is supplied (the previous frame of a
/// sweep) the new frame must satisfy `⟨e_i, ref_i⟩ > 0`, otherwise a gauge
/// error is reported.
pub fn tangent_data(chart: &SurfaceChart, point: [f64; 2], gauge: Option<&TangentData>) -> Result<TangentData> {
    let jets = chart.jet_eval(point, 1)?;
    let xu: Vec<f64> = jets.iter().map(|j| j.derivative(1, 0)).collect();
    let xv: Vec<f64> = jets.iter().map(|j| j.derivative(0, 1)).collect();
    let t = tangent_from_derivatives(point, &xu, &xv)?;
    if let Some(g) = gauge {
        if dot(&t.e1, &g.e1) <= 0.0 || dot(&t.e2, &g.e2) <= 0.0 {
            return Err(Error::Gauge {
                u: point[0],
                v: point[1],
                detail: "tangent frame flips relative to reference".into(),
            });
        }
    }
    Ok(t)
}

/// `(*ω)(X) = -ω(JX)` on a 1-form given by its values on `(e1, e2)`.
pub fn hodge_star(form: [f64; 2]) -> [f64; 2] {
    [-form[1], form[0]]
}

/// Complex-linear extension `ω(E) = ω(e1) - i ω(e2)`.
pub fn eval_on_e(form: [f64; 2]) -> Complex64 {
    Complex64::new(form[0], -form[1])
}
