//! Truncated multivariate Taylor jets.
//!
//! A [`Jet3`] carries the value of a scalar function of `n` variables together
//! with its gradient, Hessian and fully symmetric third-derivative tensor at a
//! point. Arithmetic propagates all four levels exactly (up to round-off).
//!
//! Jets obtained by differentiating another jet ([`Jet3::partial`]) lose one
//! level; the [`Jet3::order`] field records how many derivative levels are
//! meaningful and binary operations truncate to the lower order of their
//! operands. Entries above the order are stored as zero.
//!
//! Symmetric tensors are stored densely, but only the canonical entries
//! (`a <= b <= c`) are ever computed; the remaining entries are mirror copies, so
//! the symmetry invariants hold bit-exactly.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Highest derivative order tracked by a jet.
pub const MAX_ORDER: u8 = 3;

#[derive(Clone, PartialEq)]
pub struct Jet3 {
    n: usize,
    order: u8,
    value: f64,
    grad: Vec<f64>,
    hess: Vec<f64>,
    third: Vec<f64>,
}

fn fill2(n: usize, f: impl Fn(usize, usize) -> f64) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for a in 0..n {
        for b in a..n {
            let v = f(a, b);
            out[a * n + b] = v;
            out[b * n + a] = v;
        }
    }
    out
}

fn fill3(n: usize, f: impl Fn(usize, usize, usize) -> f64) -> Vec<f64> {
    let mut out = vec![0.0; n * n * n];
    for a in 0..n {
        for b in a..n {
            for c in b..n {
                let v = f(a, b, c);
                for (i, j, k) in [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)] {
                    out[(i * n + j) * n + k] = v;
                }
            }
        }
    }
    out
}

impl Jet3 {
    /// Jet of a constant function; exact at every order.
    pub fn constant(n: usize, value: f64) -> Self {
        Self {
            n,
            order: MAX_ORDER,
            value,
            grad: vec![0.0; n],
            hess: vec![0.0; n * n],
            third: vec![0.0; n * n * n],
        }
    }

    /// Jet of the coordinate function `u^index` evaluated at `value`.
    pub fn variable(n: usize, index: usize, value: f64) -> Self {
        assert!(index < n, "variable index {index} out of range for {n} variables");
        let mut jet = Self::constant(n, value);
        jet.grad[index] = 1.0;
        jet
    }

    /// Builds a jet from explicit derivative data. The Hessian and third
    /// tensor are symmetrised by reading only their canonical entries.
    pub fn from_derivatives(
        value: f64,
        grad: &[f64],
        hess: impl Fn(usize, usize) -> f64,
        third: impl Fn(usize, usize, usize) -> f64,
    ) -> Self {
        let n = grad.len();
        Self {
            n,
            order: MAX_ORDER,
            value,
            grad: grad.to_vec(),
            hess: fill2(n, hess),
            third: fill3(n, third),
        }
    }

    pub fn nvars(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> u8 {
        self.order
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn grad(&self, a: usize) -> f64 {
        self.grad[a]
    }

    pub fn gradient(&self) -> &[f64] {
        &self.grad
    }

    pub fn hess(&self, a: usize, b: usize) -> f64 {
        self.hess[a * self.n + b]
    }

    pub fn third(&self, a: usize, b: usize, c: usize) -> f64 {
        self.third[(a * self.n + b) * self.n + c]
    }

    /// Returns a copy with every level above `order` discarded.
    pub fn truncate(&self, order: u8) -> Self {
        let mut out = self.clone();
        if order < out.order {
            out.order = order;
            out.zero_above_order();
        }
        out
    }

    fn zero_above_order(&mut self) {
        if self.order < 1 {
            self.grad.iter_mut().for_each(|x| *x = 0.0);
        }
        if self.order < 2 {
            self.hess.iter_mut().for_each(|x| *x = 0.0);
        }
        if self.order < 3 {
            self.third.iter_mut().for_each(|x| *x = 0.0);
        }
    }

    /// Jet of the partial derivative with respect to `u^a`; one order lower.
    ///
    /// Panics if the jet carries no first derivatives.
    pub fn partial(&self, a: usize) -> Self {
        assert!(self.order >= 1, "cannot differentiate an order-0 jet");
        let n = self.n;
        let order = self.order - 1;
        let mut out = Self {
            n,
            order,
            value: self.grad[a],
            grad: (0..n).map(|b| self.hess(a, b)).collect(),
            hess: fill2(n, |b, c| self.third(a, b, c)),
            third: vec![0.0; n * n * n],
        };
        out.zero_above_order();
        out
    }

    /// Re-expresses the jet in a larger variable set where old variable `i`
    /// becomes new variable `i + offset`. The new variables it does not see
    /// have zero derivatives.
    pub fn embed(&self, new_n: usize, offset: usize) -> Self {
        assert!(offset + self.n <= new_n, "embedding does not fit");
        let n = self.n;
        let lift = |i: usize| i.checked_sub(offset).filter(|&j| j < n);
        let mut grad = vec![0.0; new_n];
        for (i, g) in grad.iter_mut().enumerate() {
            if let Some(j) = lift(i) {
                *g = self.grad[j];
            }
        }
        let hess = fill2(new_n, |a, b| match (lift(a), lift(b)) {
            (Some(i), Some(j)) => self.hess(i, j),
            _ => 0.0,
        });
        let third = fill3(new_n, |a, b, c| match (lift(a), lift(b), lift(c)) {
            (Some(i), Some(j), Some(k)) => self.third(i, j, k),
            _ => 0.0,
        });
        Self {
            n: new_n,
            order: self.order,
            value: self.value,
            grad,
            hess,
            third,
        }
    }

    /// Jet of `phi(self)` for a univariate `phi` given by its value and first
    /// three derivatives at `self.value()`.
    pub fn compose(&self, outer: [f64; 4]) -> Self {
        jet_compose_chain(outer, self)
    }

    pub fn recip(&self) -> Self {
        let x = self.value;
        let r = 1.0 / x;
        self.compose([r, -r * r, 2.0 * r * r * r, -6.0 * r * r * r * r])
    }

    /// `sqrt`, or `None` when the value is not strictly positive.
    pub fn try_sqrt(&self) -> Option<Self> {
        let x = self.value;
        if !(x > 0.0) {
            return None;
        }
        let s = x.sqrt();
        Some(self.compose([
            s,
            0.5 / s,
            -0.25 / (x * s),
            0.375 / (x * x * s),
        ]))
    }

    /// Integer power, or `None` for a negative exponent at zero.
    pub fn try_powi(&self, k: i32) -> Option<Self> {
        let x = self.value;
        if k < 0 && x == 0.0 {
            return None;
        }
        // d^j/dx^j x^k = k (k-1) ... (k-j+1) x^(k-j), zero once the falling
        // factorial passes through zero.
        let mut outer = [0.0; 4];
        let mut coeff = 1.0;
        for (j, slot) in outer.iter_mut().enumerate() {
            let power = k - j as i32;
            *slot = if coeff == 0.0 { 0.0 } else { coeff * x.powi(power) };
            coeff *= power as f64;
        }
        Some(self.compose(outer))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            n: self.n,
            order: self.order,
            value: self.value * s,
            grad: self.grad.iter().map(|x| x * s).collect(),
            hess: self.hess.iter().map(|x| x * s).collect(),
            third: self.third.iter().map(|x| x * s).collect(),
        }
    }

    fn zip(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.n, other.n, "jets over different variable counts");
        let mut out = Self {
            n: self.n,
            order: self.order.min(other.order),
            value: f(self.value, other.value),
            grad: self.grad.iter().zip(&other.grad).map(|(a, b)| f(*a, *b)).collect(),
            hess: self.hess.iter().zip(&other.hess).map(|(a, b)| f(*a, *b)).collect(),
            third: self.third.iter().zip(&other.third).map(|(a, b)| f(*a, *b)).collect(),
        };
        out.zero_above_order();
        out
    }

    fn product(&self, g: &Self) -> Self {
        assert_eq!(self.n, g.n, "jets over different variable counts");
        let f = self;
        let n = f.n;
        let order = f.order.min(g.order);
        let fv = f.value;
        let gv = g.value;
        let grad = if order >= 1 {
            (0..n).map(|a| f.grad[a] * gv + fv * g.grad[a]).collect()
        } else {
            vec![0.0; n]
        };
        let hess = if order >= 2 {
            fill2(n, |a, b| {
                f.hess(a, b) * gv + f.grad[a] * g.grad[b] + f.grad[b] * g.grad[a] + fv * g.hess(a, b)
            })
        } else {
            vec![0.0; n * n]
        };
        let third = if order >= 3 {
            fill3(n, |a, b, c| {
                f.third(a, b, c) * gv
                    + f.hess(a, b) * g.grad[c]
                    + f.hess(a, c) * g.grad[b]
                    + f.hess(b, c) * g.grad[a]
                    + f.grad[a] * g.hess(b, c)
                    + f.grad[b] * g.hess(a, c)
                    + f.grad[c] * g.hess(a, b)
                    + fv * g.third(a, b, c)
            })
        } else {
            vec![0.0; n * n * n]
        };
        Self {
            n,
            order,
            value: fv * gv,
            grad,
            hess,
            third,
        }
    }

    /// Largest absolute entry over all tracked levels.
    pub fn max_abs(&self) -> f64 {
        std::iter::once(&self.value)
            .chain(&self.grad)
            .chain(&self.hess)
            .chain(&self.third)
            .fold(0.0_f64, |m, x| m.max(x.abs()))
    }
}

/// Faà di Bruno to third order: the jet of `phi(inner)` where
/// `outer = [phi, phi', phi'', phi''']` evaluated at `inner.value()`.
pub fn jet_compose_chain(outer: [f64; 4], inner: &Jet3) -> Jet3 {
    let [p0, p1, p2, p3] = outer;
    let u = inner;
    let n = u.n;
    let grad = u.grad.iter().map(|x| p1 * x).collect();
    let hess = if u.order >= 2 {
        fill2(n, |a, b| p2 * u.grad[a] * u.grad[b] + p1 * u.hess(a, b))
    } else {
        vec![0.0; n * n]
    };
    let third = if u.order >= 3 {
        fill3(n, |a, b, c| {
            p3 * u.grad[a] * u.grad[b] * u.grad[c]
                + p2 * (u.hess(a, b) * u.grad[c] + u.hess(a, c) * u.grad[b] + u.hess(b, c) * u.grad[a])
                + p1 * u.third(a, b, c)
        })
    } else {
        vec![0.0; n * n * n]
    };
    let mut out = Jet3 {
        n,
        order: u.order,
        value: p0,
        grad,
        hess,
        third,
    };
    out.zero_above_order();
    out
}

impl fmt::Debug for Jet3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet3")
            .field("order", &self.order)
            .field("value", &self.value)
            .field("grad", &self.grad)
            .field("hess", &self.hess)
            .field("third", &self.third)
            .finish()
    }
}

macro_rules! jet_binop {
    ($trait:ident, $method:ident, $body:expr) => {
        impl $trait<&Jet3> for &Jet3 {
            type Output = Jet3;
            fn $method(self, rhs: &Jet3) -> Jet3 {
                let f: fn(&Jet3, &Jet3) -> Jet3 = $body;
                f(self, rhs)
            }
        }
        impl $trait<Jet3> for Jet3 {
            type Output = Jet3;
            fn $method(self, rhs: Jet3) -> Jet3 {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Jet3> for Jet3 {
            type Output = Jet3;
            fn $method(self, rhs: &Jet3) -> Jet3 {
                (&self).$method(rhs)
            }
        }
        impl $trait<Jet3> for &Jet3 {
            type Output = Jet3;
            fn $method(self, rhs: Jet3) -> Jet3 {
                self.$method(&rhs)
            }
        }
    };
}

jet_binop!(Add, add, |a, b| a.zip(b, |x, y| x + y));
jet_binop!(Sub, sub, |a, b| a.zip(b, |x, y| x - y));
jet_binop!(Mul, mul, |a, b| a.product(b));
jet_binop!(Div, div, |a, b| a.product(&b.recip()));

impl Neg for &Jet3 {
    type Output = Jet3;
    fn neg(self) -> Jet3 {
        self.scale(-1.0)
    }
}

impl Neg for Jet3 {
    type Output = Jet3;
    fn neg(self) -> Jet3 {
        self.scale(-1.0)
    }
}

impl Mul<f64> for &Jet3 {
    type Output = Jet3;
    fn mul(self, s: f64) -> Jet3 {
        self.scale(s)
    }
}

impl Mul<f64> for Jet3 {
    type Output = Jet3;
    fn mul(self, s: f64) -> Jet3 {
        self.scale(s)
    }
}

impl Add<f64> for &Jet3 {
    type Output = Jet3;
    fn add(self, s: f64) -> Jet3 {
        let mut out = self.clone();
        out.value += s;
        out
    }
}

impl Add<f64> for Jet3 {
    type Output = Jet3;
    fn add(mut self, s: f64) -> Jet3 {
        self.value += s;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn var2(i: usize, x: f64) -> Jet3 {
        Jet3::variable(2, i, x)
    }

    #[test]
    fn constant_has_zero_derivatives() {
        let c = Jet3::constant(3, 4.5);
        assert_eq!(c.value(), 4.5);
        assert!(c.gradient().iter().all(|&g| g == 0.0));
        assert_eq!(c.max_abs(), 4.5);
    }

    #[test]
    fn identity_composition_is_noop() {
        let x = var2(0, 0.7);
        let y = var2(1, -1.3);
        let j = &(&x * &x) * &y + &y * 2.0;
        let id = j.compose([j.value(), 1.0, 0.0, 0.0]);
        assert_eq!(id, j);
    }

    #[test]
    fn square_via_chain_rule() {
        let x = Jet3::variable(3, 0, 2.0);
        let sq = jet_compose_chain([4.0, 4.0, 2.0, 0.0], &x);
        assert_eq!(sq.value(), 4.0);
        assert_eq!(sq.grad(0), 4.0);
        assert_eq!(sq.grad(1), 0.0);
        assert_eq!(sq.hess(0, 0), 2.0);
        assert_eq!(sq.third(0, 0, 0), 0.0);
        assert_eq!(sq, &x * &x);
    }

    #[test]
    fn partial_lowers_order() {
        let x = var2(0, 1.5);
        let cube = x.try_powi(3).unwrap();
        let d = cube.partial(0);
        assert_eq!(d.order(), 2);
        assert!((d.value() - 3.0 * 1.5 * 1.5).abs() < 1e-15);
        assert!((d.grad(0) - 6.0 * 1.5).abs() < 1e-15);
        assert!((d.hess(0, 0) - 6.0).abs() < 1e-15);
        let dd = d.partial(0).partial(0);
        assert_eq!(dd.order(), 0);
        assert!((dd.value() - 6.0).abs() < 1e-15);
        assert_eq!(dd.grad(0), 0.0);
    }

    #[test]
    fn mixed_order_operations_truncate() {
        let x = var2(0, 1.0);
        let d = (&x * &x).partial(0);
        let s = &x + &d;
        assert_eq!(s.order(), 2);
        assert_eq!(s.third(0, 0, 0), 0.0);
    }

    #[test]
    fn powi_handles_zero_base() {
        let x = var2(0, 0.0);
        let sq = x.try_powi(2).unwrap();
        assert_eq!(sq.value(), 0.0);
        assert_eq!(sq.hess(0, 0), 2.0);
        assert!(x.try_powi(-1).is_none());
        let zero = x.try_powi(0).unwrap();
        assert_eq!(zero.value(), 1.0);
        assert_eq!(zero.grad(0), 0.0);
    }

    #[test]
    fn sqrt_rejects_nonpositive() {
        assert!(var2(0, 0.0).try_sqrt().is_none());
        assert!(var2(0, -1.0).try_sqrt().is_none());
        let s = var2(0, 4.0).try_sqrt().unwrap();
        assert_eq!(s.value(), 2.0);
        assert_eq!(s.grad(0), 0.25);
    }

    #[test]
    fn division_matches_reciprocal_identity() {
        let x = var2(0, 0.8);
        let y = var2(1, 1.7);
        let q = &x / &y;
        let back = &q * &y;
        assert!((back.value() - 0.8).abs() < 1e-15);
        assert!((back.grad(0) - 1.0).abs() < 1e-15);
        assert!(back.grad(1).abs() < 1e-15);
        assert!(back.hess(1, 1).abs() < 1e-14);
        assert!(back.third(1, 1, 1).abs() < 1e-14);
    }

    #[test]
    fn embed_shifts_variables() {
        let x = var2(0, 0.5);
        let y = var2(1, 2.0);
        let j = &x * &y;
        let e = j.embed(3, 1);
        assert_eq!(e.nvars(), 3);
        assert_eq!(e.grad(0), 0.0);
        assert_eq!(e.grad(1), 2.0);
        assert_eq!(e.grad(2), 0.5);
        assert_eq!(e.hess(1, 2), 1.0);
        assert_eq!(e.hess(0, 1), 0.0);
    }
}
