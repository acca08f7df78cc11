//! Truncated multivariate Taylor arithmetic.
//!
//! A [`Jet`] holds the Taylor coefficients of a smooth function of `n`
//! chart coordinates around a base point, truncated at some total degree.
//! Arithmetic and the elementary functions propagate those coefficients
//! exactly up to rounding, which is the same information a tower of nested
//! forward-mode dual numbers carries, without the duplicated mixed slots.
//!
//! Every jet tracks the degree up to which its coefficients are valid.
//! Binary operations produce the smaller of the two degrees and
//! differentiation lowers it by one, so a value computed from metric jets
//! of degree 4 automatically knows how many of its own derivatives are
//! trustworthy.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::sync::Arc;

/// Monomial bookkeeping shared by every jet of a given shape.
pub struct JetLayout {
    nvars: usize,
    order: usize,
    exponents: Vec<Vec<u8>>,
    // number of monomials with total degree <= d
    degree_end: Vec<usize>,
    index: HashMap<Vec<u8>, usize>,
    // (lhs, rhs, out) triples sorted by the degree of `out`
    products: Vec<(u32, u32, u32)>,
    product_end: Vec<usize>,
    // derivs[var][target] = (source, factor) for targets of degree < order
    derivs: Vec<Vec<(u32, f64)>>,
}

impl fmt::Debug for JetLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("JetLayout")
            .field("nvars", &self.nvars)
            .field("order", &self.order)
            .field("len", &self.exponents.len())
            .finish()
    }
}

fn monomials_of_degree(nvars: usize, degree: usize) -> Vec<Vec<u8>> {
    fn rec(var: usize, left: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if var + 1 == cur.len() {
            cur[var] = left as u8;
            out.push(cur.clone());
            return;
        }
        for e in (0..=left).rev() {
            cur[var] = e as u8;
            rec(var + 1, left - e, cur, out);
        }
    }
    let mut out = Vec::new();
    let mut cur = vec![0u8; nvars];
    rec(0, degree, &mut cur, &mut out);
    out
}

thread_local! {
    static LAYOUTS: std::cell::RefCell<HashMap<(usize, usize), Arc<JetLayout>>> =
        std::cell::RefCell::new(HashMap::new());
}

impl JetLayout {
    /// Shared layout for `nvars` variables truncated at total degree `order`.
    pub fn new(nvars: usize, order: usize) -> Arc<Self> {
        LAYOUTS.with(|cache| {
            cache
                .borrow_mut()
                .entry((nvars, order))
                .or_insert_with(|| Self::build(nvars, order))
                .clone()
        })
    }

    fn build(nvars: usize, order: usize) -> Arc<Self> {
        assert!(nvars >= 1, "a jet needs at least one variable");
        let mut exponents = Vec::new();
        let mut degree = Vec::new();
        let mut degree_end = Vec::with_capacity(order + 1);
        for d in 0..=order {
            for m in monomials_of_degree(nvars, d) {
                exponents.push(m);
                degree.push(d);
            }
            degree_end.push(exponents.len());
        }
        let index: HashMap<Vec<u8>, usize> = exponents
            .iter()
            .enumerate()
            .map(|(i, e)| (e.clone(), i))
            .collect();

        let mut products = Vec::new();
        for (out, e) in exponents.iter().enumerate() {
            // every split e = a + b
            let mut a = vec![0u8; nvars];
            loop {
                let b: Vec<u8> = e.iter().zip(&a).map(|(x, y)| x - y).collect();
                products.push((index[&a] as u32, index[&b] as u32, out as u32));
                // odometer over a <= e
                let mut k = 0;
                while k < nvars {
                    if a[k] < e[k] {
                        a[k] += 1;
                        break;
                    }
                    a[k] = 0;
                    k += 1;
                }
                if k == nvars {
                    break;
                }
            }
        }
        // exponents are already grouped by degree, so products are too
        let mut product_end = vec![0; order + 1];
        for (i, &(_, _, out)) in products.iter().enumerate() {
            product_end[degree[out as usize]] = i + 1;
        }
        for d in 1..=order {
            product_end[d] = product_end[d].max(product_end[d - 1]);
        }

        let limit = if order == 0 { 0 } else { degree_end[order - 1] };
        let derivs = (0..nvars)
            .map(|var| {
                (0..limit)
                    .map(|t| {
                        let mut src = exponents[t].clone();
                        src[var] += 1;
                        (index[&src] as u32, src[var] as f64)
                    })
                    .collect()
            })
            .collect();

        Arc::new(Self {
            nvars,
            order,
            exponents,
            degree_end,
            index,
            products,
            product_end,
            derivs,
        })
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    fn index_of_multi(&self, multi_index: &[usize]) -> Option<(usize, f64)> {
        let mut e = vec![0u8; self.nvars];
        for &v in multi_index {
            if v >= self.nvars {
                return None;
            }
            e[v] += 1;
        }
        let factorial: f64 = e
            .iter()
            .map(|&k| (1..=k as u64).product::<u64>() as f64)
            .product();
        self.index.get(&e).map(|&i| (i, factorial))
    }
}

/// A truncated Taylor expansion of a scalar function of the chart coordinates.
#[derive(Clone)]
pub struct Jet {
    layout: Arc<JetLayout>,
    order: usize,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("order", &self.order)
            .field("coeffs", &&self.coeffs[..self.layout.degree_end[self.order]])
            .finish()
    }
}

impl Jet {
    /// Exact constant; valid to the layout's full order.
    pub fn constant(layout: &Arc<JetLayout>, value: f64) -> Self {
        let mut coeffs = vec![0.0; layout.len()];
        coeffs[0] = value;
        Self {
            layout: layout.clone(),
            order: layout.order,
            coeffs,
        }
    }

    /// The coordinate function `x_var` expanded around `at`.
    pub fn variable(layout: &Arc<JetLayout>, var: usize, at: f64) -> Self {
        assert!(var < layout.nvars, "variable index out of range");
        let mut jet = Self::constant(layout, at);
        if layout.order >= 1 {
            let mut e = vec![0u8; layout.nvars];
            e[var] = 1;
            jet.coeffs[layout.index[&e]] = 1.0;
        }
        jet
    }

    pub fn layout(&self) -> &Arc<JetLayout> {
        &self.layout
    }

    pub fn zero_like(&self) -> Self {
        Self::constant(&self.layout, 0.0)
    }

    pub fn constant_like(&self, value: f64) -> Self {
        Self::constant(&self.layout, value)
    }

    /// Degree up to which the coefficients are valid.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Mixed partial derivative for a list of coordinate indices.
    ///
    /// Returns `None` when the requested order exceeds what the jet carries.
    pub fn partial(&self, multi_index: &[usize]) -> Option<f64> {
        if multi_index.len() > self.order {
            return None;
        }
        let (i, factorial) = self.layout.index_of_multi(multi_index)?;
        Some(self.coeffs[i] * factorial)
    }

    /// Raw Taylor coefficient of the monomial with the given exponents.
    pub fn coefficient(&self, exponents: &[u8]) -> Option<f64> {
        let d: usize = exponents.iter().map(|&e| e as usize).sum();
        if d > self.order {
            return None;
        }
        self.layout.index.get(exponents).map(|&i| self.coeffs[i])
    }

    /// Drops everything above degree `order`.
    pub fn truncate(mut self, order: usize) -> Self {
        if order < self.order {
            let end = self.layout.degree_end[order];
            self.coeffs[end..].iter_mut().for_each(|c| *c = 0.0);
            self.order = order;
        }
        self
    }

    /// Partial derivative along one coordinate, as a jet one degree shorter.
    pub fn diff(&self, var: usize) -> Self {
        assert!(self.order >= 1, "cannot differentiate a degree-0 jet");
        let order = self.order - 1;
        let end = self.layout.degree_end[order];
        let table = &self.layout.derivs[var];
        let mut coeffs = vec![0.0; self.layout.len()];
        for (t, c) in coeffs.iter_mut().enumerate().take(end) {
            let (src, factor) = table[t];
            *c = factor * self.coeffs[src as usize];
        }
        Self {
            layout: self.layout.clone(),
            order,
            coeffs,
        }
    }

    pub fn gradient(&self) -> Vec<Jet> {
        (0..self.layout.nvars).map(|v| self.diff(v)).collect()
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= s);
        out
    }

    fn zip_with(&self, rhs: &Jet, op: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert!(Arc::ptr_eq(&self.layout, &rhs.layout), "mixed jet layouts");
        let order = self.order.min(rhs.order);
        let end = self.layout.degree_end[order];
        let mut coeffs = vec![0.0; self.layout.len()];
        for i in 0..end {
            coeffs[i] = op(self.coeffs[i], rhs.coeffs[i]);
        }
        Self {
            layout: self.layout.clone(),
            order,
            coeffs,
        }
    }

    fn mul_jet(&self, rhs: &Jet) -> Self {
        debug_assert!(Arc::ptr_eq(&self.layout, &rhs.layout), "mixed jet layouts");
        let order = self.order.min(rhs.order);
        let mut coeffs = vec![0.0; self.layout.len()];
        for &(a, b, out) in &self.layout.products[..self.layout.product_end[order]] {
            coeffs[out as usize] += self.coeffs[a as usize] * rhs.coeffs[b as usize];
        }
        Self {
            layout: self.layout.clone(),
            order,
            coeffs,
        }
    }

    /// Evaluates `sum_m taylor[m] * (self - self.value())^m`.
    ///
    /// `taylor[m]` must be the m-th derivative of the outer function at
    /// `self.value()` divided by `m!`; entries past `self.order()` are unused.
    pub fn compose(&self, taylor: &[f64]) -> Self {
        let k = self.order.min(taylor.len().saturating_sub(1));
        let mut h = self.clone();
        h.coeffs[0] = 0.0;
        let mut acc = self.constant_like(taylor[k]);
        for m in (0..k).rev() {
            acc = acc.mul_jet(&h);
            acc.coeffs[0] += taylor[m];
        }
        acc.truncate(self.order)
    }

    pub fn exp(&self) -> Self {
        let e = self.value().exp();
        let mut t = Vec::with_capacity(self.order + 1);
        let mut fact = 1.0;
        for m in 0..=self.order {
            if m > 0 {
                fact *= m as f64;
            }
            t.push(e / fact);
        }
        self.compose(&t)
    }

    pub fn ln(&self) -> Self {
        let a = self.value();
        let mut t = vec![a.ln()];
        for m in 1..=self.order {
            let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
            t.push(sign / (m as f64 * a.powi(m as i32)));
        }
        self.compose(&t)
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.compose(&trig_taylor(s, c, self.order))
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        // cos(a + h) = sin(a + pi/2 + h)
        self.compose(&trig_taylor(c, -s, self.order))
    }

    pub fn sinh(&self) -> Self {
        let a = self.value();
        self.compose(&hyp_taylor(a.sinh(), a.cosh(), self.order))
    }

    pub fn cosh(&self) -> Self {
        let a = self.value();
        self.compose(&hyp_taylor(a.cosh(), a.sinh(), self.order))
    }

    /// Real power with the generalized binomial series.
    pub fn powf(&self, p: f64) -> Self {
        let a = self.value();
        let mut t = Vec::with_capacity(self.order + 1);
        let mut binom = 1.0;
        for m in 0..=self.order {
            if m > 0 {
                binom *= (p - (m - 1) as f64) / m as f64;
            }
            t.push(binom * a.powf(p - m as f64));
        }
        self.compose(&t)
    }

    pub fn sqrt(&self) -> Self {
        self.powf(0.5)
    }

    pub fn recip(&self) -> Self {
        let a = self.value();
        let inv = 1.0 / a;
        let mut t = Vec::with_capacity(self.order + 1);
        let mut term = inv;
        for _ in 0..=self.order {
            t.push(term);
            term *= -inv;
        }
        self.compose(&t)
    }

    /// Integer power by repeated multiplication; negative powers go through `recip`.
    pub fn powi(&self, k: i32) -> Self {
        let base = if k < 0 { self.recip() } else { self.clone() };
        let mut acc = self.constant_like(1.0);
        for _ in 0..k.unsigned_abs() {
            acc = acc.mul_jet(&base);
        }
        acc
    }

    pub fn square(&self) -> Self {
        self.mul_jet(self)
    }
}

fn trig_taylor(s: f64, c: f64, order: usize) -> Vec<f64> {
    // derivatives of sin at a cycle through s, c, -s, -c
    let cycle = [s, c, -s, -c];
    let mut fact = 1.0;
    (0..=order)
        .map(|m| {
            if m > 0 {
                fact *= m as f64;
            }
            cycle[m % 4] / fact
        })
        .collect()
}

fn hyp_taylor(even: f64, odd: f64, order: usize) -> Vec<f64> {
    let mut fact = 1.0;
    (0..=order)
        .map(|m| {
            if m > 0 {
                fact *= m as f64;
            }
            if m % 2 == 0 {
                even / fact
            } else {
                odd / fact
            }
        })
        .collect()
}

macro_rules! jet_binop {
    ($trait:ident, $method:ident, $body:expr) => {
        impl $trait<&Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                let f: fn(&Jet, &Jet) -> Jet = $body;
                f(self, rhs)
            }
        }
        impl $trait<Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                (&self).$method(rhs)
            }
        }
        impl $trait<Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                self.$method(&rhs)
            }
        }
    };
}

jet_binop!(Add, add, |a, b| a.zip_with(b, |x, y| x + y));
jet_binop!(Sub, sub, |a, b| a.zip_with(b, |x, y| x - y));
jet_binop!(Mul, mul, |a, b| a.mul_jet(b));
jet_binop!(Div, div, |a, b| a.mul_jet(&b.recip()));

macro_rules! jet_scalar_op {
    ($trait:ident, $method:ident, $jet_scalar:expr, $scalar_jet:expr) => {
        impl $trait<f64> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: f64) -> Jet {
                let f: fn(&Jet, f64) -> Jet = $jet_scalar;
                f(self, rhs)
            }
        }
        impl $trait<f64> for Jet {
            type Output = Jet;
            fn $method(self, rhs: f64) -> Jet {
                (&self).$method(rhs)
            }
        }
        impl $trait<&Jet> for f64 {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                let f: fn(f64, &Jet) -> Jet = $scalar_jet;
                f(self, rhs)
            }
        }
        impl $trait<Jet> for f64 {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                self.$method(&rhs)
            }
        }
    };
}

jet_scalar_op!(
    Add,
    add,
    |a, s| {
        let mut out = a.clone();
        out.coeffs[0] += s;
        out
    },
    |s, a| a + s
);
jet_scalar_op!(
    Sub,
    sub,
    |a, s| {
        let mut out = a.clone();
        out.coeffs[0] -= s;
        out
    },
    |s, a| -a + s
);
jet_scalar_op!(Mul, mul, |a, s| a.scale(s), |s, a| a.scale(s));
jet_scalar_op!(Div, div, |a, s| a.scale(1.0 / s), |s, a| a.recip().scale(s));

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl AddAssign<&Jet> for Jet {
    fn add_assign(&mut self, rhs: &Jet) {
        *self = &*self + rhs;
    }
}

impl AddAssign<Jet> for Jet {
    fn add_assign(&mut self, rhs: Jet) {
        *self = &*self + &rhs;
    }
}

impl SubAssign<&Jet> for Jet {
    fn sub_assign(&mut self, rhs: &Jet) {
        *self = &*self - rhs;
    }
}

impl SubAssign<Jet> for Jet {
    fn sub_assign(&mut self, rhs: Jet) {
        *self = &*self - &rhs;
    }
}

impl MulAssign<f64> for Jet {
    fn mul_assign(&mut self, rhs: f64) {
        self.coeffs.iter_mut().for_each(|c| *c *= rhs);
    }
}

/// Sum of jets; `None` for an empty iterator.
pub fn sum<'a>(mut terms: impl Iterator<Item = &'a Jet>) -> Option<Jet> {
    let first = terms.next()?.clone();
    Some(terms.fold(first, |acc, t| acc + t))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn layout_sizes_match_binomials() {
        // C(n + d, d) monomials of degree <= d
        assert_eq!(JetLayout::new(3, 4).len(), 35);
        assert_eq!(JetLayout::new(4, 4).len(), 70);
        assert_eq!(JetLayout::new(2, 0).len(), 1);
    }

    #[test]
    fn polynomial_partials_are_exact() {
        let l = JetLayout::new(3, 4);
        let x = Jet::variable(&l, 0, 1.0);
        let y = Jet::variable(&l, 1, 2.0);
        let f = &x * &x * &y;
        assert_eq!(f.value(), 2.0);
        assert_eq!(f.partial(&[0, 0]).unwrap(), 4.0);
        assert_eq!(f.partial(&[0, 1]).unwrap(), 2.0);
        assert_eq!(f.partial(&[0, 0, 1]).unwrap(), 2.0);
        assert_eq!(f.partial(&[0, 0, 1, 1]).unwrap(), 0.0);
    }

    #[test]
    fn elementary_functions_match_closed_forms() {
        let l = JetLayout::new(1, 4);
        let a = 0.7;
        let x = Jet::variable(&l, 0, a);
        let e = x.exp();
        let s = x.sin();
        let c = x.cos();
        let lg = x.ln();
        let r = x.recip();
        let sq = x.sqrt();
        for k in 0..=4 {
            let idx = vec![0; k];
            assert!(close(e.partial(&idx).unwrap(), a.exp(), 1e-14));
            let ds = [a.sin(), a.cos(), -a.sin(), -a.cos()][k % 4];
            assert!(close(s.partial(&idx).unwrap(), ds, 1e-14));
            let dc = [a.cos(), -a.sin(), -a.cos(), a.sin()][k % 4];
            assert!(close(c.partial(&idx).unwrap(), dc, 1e-14));
            let kf: f64 = (1..=k).map(|v| v as f64).product();
            let dr = if k % 2 == 0 { 1.0 } else { -1.0 } * kf / a.powi(k as i32 + 1);
            assert!(close(r.partial(&idx).unwrap(), dr, 1e-13));
            if k >= 1 {
                let km1: f64 = (1..k).map(|v| v as f64).product();
                let dl = if k % 2 == 1 { 1.0 } else { -1.0 } * km1 / a.powi(k as i32);
                assert!(close(lg.partial(&idx).unwrap(), dl, 1e-13));
            }
        }
        // d^3/dx^3 sqrt(x) = 3/8 x^(-5/2)
        assert!(close(sq.partial(&[0, 0, 0]).unwrap(), 0.375 * a.powf(-2.5), 1e-13));
    }

    #[test]
    fn differentiation_lowers_order() {
        let l = JetLayout::new(2, 3);
        let x = Jet::variable(&l, 0, 0.3);
        let y = Jet::variable(&l, 1, -0.4);
        let f = (&x * &y).sin();
        let fx = f.diff(0);
        assert_eq!(fx.order(), 2);
        assert!(close(
            fx.partial(&[1]).unwrap(),
            f.partial(&[0, 1]).unwrap(),
            1e-14
        ));
        assert!(fx.partial(&[0, 0, 1]).is_none());
    }

    #[test]
    fn powi_and_division_agree() {
        let l = JetLayout::new(2, 4);
        let x = Jet::variable(&l, 0, 1.3);
        let y = Jet::variable(&l, 1, 0.2);
        let d = 1.0 + &x * &x + &y * &y;
        let a = d.powi(-2);
        let b = 1.0 / (&d * &d);
        for idx in [&[][..], &[0], &[0, 1], &[1, 1, 0], &[0, 0, 1, 1]] {
            assert!(close(a.partial(idx).unwrap(), b.partial(idx).unwrap(), 1e-13));
        }
    }
}
