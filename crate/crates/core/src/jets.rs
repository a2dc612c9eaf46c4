//! Truncated Taylor series in two variables.
//!
//! A [`Jet2`] of order `p` stores the coefficients `c_ab` of the monomials
//! `du^a dv^b` with `a + b <= p` of a smooth function expanded about a base
//! point. Arithmetic is the exact truncation of formal power series, so
//! composing primitives on jets yields exact partial derivatives up to order
//! `p` (floating round-off only).

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

/// Index of the monomial `du^a dv^b` in the coefficient vector.
///
/// Coefficients are laid out by total degree, then by the power of `dv`.
#[inline]
pub fn monomial_index(a: usize, b: usize) -> usize {
    let d = a + b;
    d * (d + 1) / 2 + b
}

/// Number of monomials of total degree `<= order`.
#[inline]
pub fn monomial_count(order: usize) -> usize {
    (order + 1) * (order + 2) / 2
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    order: usize,
    coeffs: Vec<f64>,
}

impl Jet2 {
    pub fn constant(value: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; monomial_count(order)];
        coeffs[0] = value;
        Jet2 { order, coeffs }
    }

    pub fn zero(order: usize) -> Self {
        Self::constant(0.0, order)
    }

    /// The coordinate function `u` expanded about `u0`.
    pub fn var_u(u0: f64, order: usize) -> Self {
        let mut j = Self::constant(u0, order);
        if order >= 1 {
            j.coeffs[monomial_index(1, 0)] = 1.0;
        }
        j
    }

    /// The coordinate function `v` expanded about `v0`.
    pub fn var_v(v0: f64, order: usize) -> Self {
        let mut j = Self::constant(v0, order);
        if order >= 1 {
            j.coeffs[monomial_index(0, 1)] = 1.0;
        }
        j
    }

    /// Builds a jet from the partial derivatives `d[a][b] = ∂_u^a ∂_v^b f`,
    /// where `d` is indexed by [`monomial_index`].
    pub fn from_derivatives(order: usize, derivs: &[f64]) -> Self {
        assert_eq!(derivs.len(), monomial_count(order));
        let mut coeffs = vec![0.0; derivs.len()];
        for d in 0..=order {
            for b in 0..=d {
                let a = d - b;
                let k = monomial_index(a, b);
                coeffs[k] = derivs[k] / (factorial(a) * factorial(b));
            }
        }
        Jet2 { order, coeffs }
    }

    pub fn from_coeffs(order: usize, coeffs: Vec<f64>) -> Self {
        assert_eq!(coeffs.len(), monomial_count(order));
        Jet2 { order, coeffs }
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    #[inline]
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of `du^a dv^b`, zero beyond the truncation order.
    pub fn coeff(&self, a: usize, b: usize) -> f64 {
        if a + b > self.order {
            0.0
        } else {
            self.coeffs[monomial_index(a, b)]
        }
    }

    /// `∂_u^a ∂_v^b` at the base point, i.e. `a! b! c_ab`.
    pub fn derivative(&self, a: usize, b: usize) -> f64 {
        factorial(a) * factorial(b) * self.coeff(a, b)
    }

    /// The jet of the partial derivative `∂_u^a ∂_v^b f`, of order `order - a - b`.
    pub fn differentiate(&self, a: usize, b: usize) -> Jet2 {
        assert!(a + b <= self.order, "derivative order exceeds jet order");
        let order = self.order - a - b;
        let mut coeffs = vec![0.0; monomial_count(order)];
        for d in 0..=order {
            for j in 0..=d {
                let i = d - j;
                let fa = factorial(i + a) / factorial(i);
                let fb = factorial(j + b) / factorial(j);
                coeffs[monomial_index(i, j)] = fa * fb * self.coeff(i + a, j + b);
            }
        }
        Jet2 { order, coeffs }
    }

    /// Drops all coefficients of total degree above `order`.
    pub fn truncate(&self, order: usize) -> Jet2 {
        let order = order.min(self.order);
        Jet2 {
            order,
            coeffs: self.coeffs[..monomial_count(order)].to_vec(),
        }
    }

    /// Evaluates the truncated polynomial at the displacement `(du, dv)`.
    pub fn eval_at(&self, du: f64, dv: f64) -> f64 {
        let mut acc = 0.0;
        for d in 0..=self.order {
            for b in 0..=d {
                let a = d - b;
                acc += self.coeffs[monomial_index(a, b)] * du.powi(a as i32) * dv.powi(b as i32);
            }
        }
        acc
    }

    pub fn scale(&self, s: f64) -> Jet2 {
        Jet2 {
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    fn common_order(&self, other: &Jet2) -> usize {
        self.order.min(other.order)
    }

    /// Sum of `f(x0) * t^k / k!`-type series in the nilpotent part `t`.
    fn compose_series(&self, series: impl Fn(usize) -> f64) -> Jet2 {
        let order = self.order;
        let mut t = self.clone();
        t.coeffs[0] = 0.0;
        let mut out = Jet2::constant(series(0), order);
        let mut power = Jet2::constant(1.0, order);
        for k in 1..=order {
            power = &power * &t;
            let s = series(k);
            if s != 0.0 {
                for (o, p) in out.coeffs.iter_mut().zip(&power.coeffs) {
                    *o += s * p;
                }
            }
        }
        out
    }

    pub fn sin(&self) -> Jet2 {
        let (s0, c0) = self.value().sin_cos();
        // d^k/dx^k sin at x0 cycles through sin, cos, -sin, -cos.
        self.compose_series(|k| {
            let d = match k % 4 {
                0 => s0,
                1 => c0,
                2 => -s0,
                _ => -c0,
            };
            d / factorial(k)
        })
    }

    pub fn cos(&self) -> Jet2 {
        let (s0, c0) = self.value().sin_cos();
        self.compose_series(|k| {
            let d = match k % 4 {
                0 => c0,
                1 => -s0,
                2 => -c0,
                _ => s0,
            };
            d / factorial(k)
        })
    }

    pub fn exp(&self) -> Jet2 {
        let e0 = self.value().exp();
        self.compose_series(|k| e0 / factorial(k))
    }

    /// Multiplicative inverse; the base value must be nonzero.
    pub fn recip(&self) -> Jet2 {
        let x0 = self.value();
        self.compose_series(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign / x0.powi(k as i32 + 1)
        })
    }

    /// Square root; the base value must be positive.
    pub fn sqrt(&self) -> Jet2 {
        let x0 = self.value();
        let r0 = x0.sqrt();
        // binom(1/2, k) x0^(1/2 - k)
        self.compose_series(|k| {
            let mut binom = 1.0;
            for j in 0..k {
                binom *= (0.5 - j as f64) / (j as f64 + 1.0);
            }
            binom * r0 / x0.powi(k as i32)
        })
    }

    pub fn powi(&self, n: u32) -> Jet2 {
        let mut out = Jet2::constant(1.0, self.order);
        for _ in 0..n {
            out = &out * self;
        }
        out
    }
}

impl Add for &Jet2 {
    type Output = Jet2;
    fn add(self, rhs: &Jet2) -> Jet2 {
        let order = self.common_order(rhs);
        let n = monomial_count(order);
        Jet2 {
            order,
            coeffs: (0..n).map(|k| self.coeffs[k] + rhs.coeffs[k]).collect(),
        }
    }
}

impl Sub for &Jet2 {
    type Output = Jet2;
    fn sub(self, rhs: &Jet2) -> Jet2 {
        let order = self.common_order(rhs);
        let n = monomial_count(order);
        Jet2 {
            order,
            coeffs: (0..n).map(|k| self.coeffs[k] - rhs.coeffs[k]).collect(),
        }
    }
}

impl Mul for &Jet2 {
    type Output = Jet2;
    fn mul(self, rhs: &Jet2) -> Jet2 {
        let order = self.common_order(rhs);
        let mut coeffs = vec![0.0; monomial_count(order)];
        for d1 in 0..=order {
            for b1 in 0..=d1 {
                let x = self.coeffs[monomial_index(d1 - b1, b1)];
                if x == 0.0 {
                    continue;
                }
                for d2 in 0..=(order - d1) {
                    let base = monomial_index(d1 + d2 - b1, b1);
                    let src = d2 * (d2 + 1) / 2;
                    for b2 in 0..=d2 {
                        // monomial_index(d1+d2-(b1+b2), b1+b2) = base + b2
                        coeffs[base + b2] += x * rhs.coeffs[src + b2];
                    }
                }
            }
        }
        Jet2 { order, coeffs }
    }
}

impl Div for &Jet2 {
    type Output = Jet2;
    fn div(self, rhs: &Jet2) -> Jet2 {
        self * &rhs.recip()
    }
}

impl Neg for &Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Jet2 {
            type Output = Jet2;
            fn $m(self, rhs: Jet2) -> Jet2 {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Jet2> for Jet2 {
            type Output = Jet2;
            fn $m(self, rhs: &Jet2) -> Jet2 {
                (&self).$m(rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self.scale(-1.0)
    }
}

impl AddAssign<&Jet2> for Jet2 {
    fn add_assign(&mut self, rhs: &Jet2) {
        if rhs.order < self.order {
            self.order = rhs.order;
            self.coeffs.truncate(monomial_count(rhs.order));
        }
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a += b;
        }
    }
}

impl SubAssign<&Jet2> for Jet2 {
    fn sub_assign(&mut self, rhs: &Jet2) {
        if rhs.order < self.order {
            self.order = rhs.order;
            self.coeffs.truncate(monomial_count(rhs.order));
        }
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a -= b;
        }
    }
}

/// Euclidean inner product of two jet-valued vectors.
pub fn dot(a: &[Jet2], b: &[Jet2]) -> Jet2 {
    let order = a.iter().chain(b).map(Jet2::order).min().unwrap_or(0);
    let mut acc = Jet2::zero(order);
    for (x, y) in a.iter().zip(b) {
        acc += &(x * y);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn monomial_layout() {
        assert_eq!(monomial_index(0, 0), 0);
        assert_eq!(monomial_index(1, 0), 1);
        assert_eq!(monomial_index(0, 1), 2);
        assert_eq!(monomial_index(2, 0), 3);
        assert_eq!(monomial_index(0, 3), 9);
        assert_eq!(monomial_count(3), 10);
    }

    #[test]
    fn polynomial_product_is_exact() {
        // (1 + 2u + v)(3 - u + 4uv) = 3 + 5u + 3v - 2u^2 + 3uv + 8u^2 v + 4 u v^2
        let order = 4;
        let u = Jet2::var_u(0.0, order);
        let v = Jet2::var_v(0.0, order);
        let one = Jet2::constant(1.0, order);
        let p = &(&one + &u.scale(2.0)) + &v;
        let q = &(&Jet2::constant(3.0, order) - &u) + &(&u * &v).scale(4.0);
        let r = &p * &q;
        let expect = [
            ((0, 0), 3.0),
            ((1, 0), 5.0),
            ((0, 1), 3.0),
            ((2, 0), -2.0),
            ((1, 1), 3.0),
            ((0, 2), 0.0),
            ((2, 1), 8.0),
            ((1, 2), 4.0),
            ((3, 0), 0.0),
        ];
        for ((a, b), c) in expect {
            assert_eq!(r.coeff(a, b), c, "coefficient ({a},{b})");
        }
    }

    #[test]
    fn derivative_extraction_uses_factorials() {
        // f = u^3 v^2 -> ∂_u^3 ∂_v^2 f = 3! 2! = 12
        let order = 5;
        let u = Jet2::var_u(0.0, order);
        let v = Jet2::var_v(0.0, order);
        let f = &u.powi(3) * &v.powi(2);
        assert_eq!(f.derivative(3, 2), 12.0);
        assert_eq!(f.coeff(3, 2), 1.0);
    }

    #[test]
    fn cos_second_derivative_at_zero() {
        let u = Jet2::var_u(0.0, 4);
        let f = u.cos().scale(std::f64::consts::FRAC_1_SQRT_2);
        assert!(close(f.derivative(2, 0), -std::f64::consts::FRAC_1_SQRT_2, 1e-15));
    }

    #[test]
    fn sin_of_linear_combination_matches_closed_form() {
        // sin(a u + b v) about (u0, v0): ∂_u^i ∂_v^j = a^i b^j sin^{(i+j)}(x0)
        let (a, b, u0, v0) = (0.7, -1.3, 0.4, 2.1);
        let order = 6;
        let x = &Jet2::var_u(u0, order).scale(a) + &Jet2::var_v(v0, order).scale(b);
        let s = x.sin();
        let x0 = a * u0 + b * v0;
        for d in 0..=order {
            for j in 0..=d {
                let i = d - j;
                let deriv = match d % 4 {
                    0 => x0.sin(),
                    1 => x0.cos(),
                    2 => -x0.sin(),
                    _ => -x0.cos(),
                };
                let expect = a.powi(i as i32) * b.powi(j as i32) * deriv;
                assert!(close(s.derivative(i, j), expect, 1e-13), "({i},{j})");
            }
        }
    }

    #[test]
    fn exp_recip_sqrt_identities() {
        let order = 5;
        let x = &Jet2::var_u(0.3, order) + &(&Jet2::var_v(-0.2, order) * &Jet2::var_u(0.3, order));
        let e = x.exp();
        let back = &e * &(-&x).exp();
        assert!(close(back.value(), 1.0, 1e-14));
        for c in &back.coeffs()[1..] {
            assert!(c.abs() < 1e-13);
        }
        let y = &x + &Jet2::constant(2.0, order);
        let r = &y * &y.recip();
        assert!(close(r.value(), 1.0, 1e-14));
        assert!(r.coeffs()[1..].iter().all(|c| c.abs() < 1e-13));
        let s = y.sqrt();
        let sq = &s * &s;
        for (a, b) in sq.coeffs().iter().zip(y.coeffs()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn differentiate_shifts_coefficients() {
        let order = 4;
        let u = Jet2::var_u(1.0, order);
        let v = Jet2::var_v(2.0, order);
        // f = u^2 v, f_u = 2uv, f_uv = 2u
        let f = &u.powi(2) * &v;
        let fu = f.differentiate(1, 0);
        assert_eq!(fu.order(), 3);
        assert!(close(fu.value(), 4.0, 1e-15));
        let fuv = f.differentiate(1, 1);
        assert!(close(fuv.value(), 2.0, 1e-15));
        assert!(close(fuv.derivative(1, 0), 2.0, 1e-15));
    }
}
