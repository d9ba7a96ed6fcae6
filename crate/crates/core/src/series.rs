//! Dense truncated power series in one variable and in up to four variables.
//!
//! A `UniSeries` of precision N is known mod t^N. A `MultiSeries` of degree D is
//! known in all total degrees <= D; its coefficients are stored degree by degree,
//! each degree in lex order (first variable's exponent descending).

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::One;

use crate::base_rings::{Coeff, PadicInt};
use crate::error::{Error, Result};

pub const MAX_VARS: usize = 4;

pub type Exps = [u16; MAX_VARS];

// ---------------------------------------------------------------------------
// univariate

#[derive(Clone, PartialEq)]
pub struct UniSeries<C> {
    c: Vec<C>,
}

impl<C: Coeff> UniSeries<C> {
    /// Series known mod t^coeffs.len().
    pub fn new(coeffs: Vec<C>) -> Self {
        UniSeries { c: coeffs }
    }

    /// Pads with zeros or truncates to the given precision.
    pub fn from_coeffs(mut coeffs: Vec<C>, prec: usize) -> Self {
        coeffs.resize(prec, C::zero());
        UniSeries { c: coeffs }
    }

    pub fn zero(prec: usize) -> Self {
        UniSeries { c: vec![C::zero(); prec] }
    }

    pub fn one(prec: usize) -> Self {
        Self::constant(C::one(), prec)
    }

    pub fn constant(a: C, prec: usize) -> Self {
        let mut s = Self::zero(prec);
        if prec > 0 {
            s.c[0] = a;
        }
        s
    }

    /// The series t.
    pub fn var(prec: usize) -> Self {
        Self::monomial(C::one(), 1, prec)
    }

    pub fn monomial(a: C, k: usize, prec: usize) -> Self {
        let mut s = Self::zero(prec);
        if k < prec {
            s.c[k] = a;
        }
        s
    }

    pub fn from_terms(terms: &[(usize, C)], prec: usize) -> Self {
        let mut s = Self::zero(prec);
        for &(k, a) in terms {
            if k < prec {
                s.c[k] = s.c[k] + a;
            }
        }
        s
    }

    pub fn prec(&self) -> usize {
        self.c.len()
    }

    pub fn coeffs(&self) -> &[C] {
        &self.c
    }

    /// Coefficient of t^i; panics past the precision.
    pub fn coeff(&self, i: usize) -> C {
        assert!(i < self.c.len(), "coefficient t^{i} is beyond precision {}", self.c.len());
        self.c[i]
    }

    pub fn get(&self, i: usize) -> Option<C> {
        self.c.get(i).copied()
    }

    pub fn set(&mut self, i: usize, a: C) {
        self.c[i] = a;
    }

    pub fn truncate(&self, prec: usize) -> Self {
        assert!(prec <= self.prec(), "cannot raise precision {} to {prec}", self.prec());
        UniSeries { c: self.c[..prec].to_vec() }
    }

    /// Index of the first nonzero coefficient, if any is known.
    pub fn valuation(&self) -> Option<usize> {
        self.c.iter().position(|a| !a.is_zero())
    }

    pub fn is_zero(&self) -> bool {
        self.valuation().is_none()
    }

    pub fn scale(&self, a: C) -> Self {
        UniSeries { c: self.c.iter().map(|&x| x * a).collect() }
    }

    /// Multiplication by t^k.
    pub fn shift(&self, k: usize) -> Self {
        let mut c = vec![C::zero(); k.min(self.prec() + k)];
        c.extend_from_slice(&self.c);
        UniSeries { c }
    }

    pub fn inverse(&self) -> Result<Self> {
        let n = self.prec();
        if n == 0 {
            return Ok(self.clone());
        }
        let inv0 = self.c[0]
            .try_inv()
            .ok_or_else(|| Error::Domain("constant term is not a unit".into()))?;
        let mut q = vec![C::zero(); n];
        q[0] = inv0;
        for i in 1..n {
            let mut acc = C::zero();
            for k in 1..=i {
                if !self.c[k].is_zero() {
                    acc = acc + self.c[k] * q[i - k];
                }
            }
            q[i] = -(acc * inv0);
        }
        Ok(UniSeries { c: q })
    }

    /// Exact quotient self / b; fails with `NotDivisible` on a nonzero remainder.
    pub fn exact_div(&self, b: &Self) -> Result<Self> {
        let v = b
            .valuation()
            .ok_or_else(|| Error::NotDivisible("divisor is zero to its precision".into()))?;
        if self.prec() <= v {
            return Err(Error::Precision("dividend too short".into()));
        }
        if let Some(i) = self.c[..v].iter().position(|a| !a.is_zero()) {
            return Err(Error::NotDivisible(format!("nonzero remainder at t^{i}")));
        }
        let prec = (self.prec() - v).min(b.prec() - v);
        let num = UniSeries { c: self.c[v..v + prec].to_vec() };
        let den = UniSeries { c: b.c[v..v + prec].to_vec() };
        if den.c[0].try_inv().is_none() {
            return Err(Error::NotDivisible("leading coefficient of divisor is not a unit".into()));
        }
        Ok(&num * &den.inverse()?)
    }

    /// outer(inner); inner must have zero constant term.
    pub fn compose(&self, inner: &Self) -> Result<Self> {
        if inner.prec() > 0 && !inner.c[0].is_zero() {
            return Err(Error::Domain("inner series has nonzero constant term".into()));
        }
        let v = inner.valuation().unwrap_or(inner.prec()).max(1);
        let prec = inner.prec().min(self.prec().saturating_mul(v));
        let inner = inner.truncate(prec);
        let mut acc = UniSeries::zero(prec);
        for i in (0..self.prec()).rev() {
            acc = (&acc * &inner).truncate(prec);
            if prec > 0 {
                acc.c[0] = acc.c[0] + self.c[i];
            }
        }
        Ok(acc)
    }

    /// outer(inner) for a multivariate inner series with zero constant term.
    pub fn compose_multi(&self, inner: &MultiSeries<C>) -> Result<MultiSeries<C>> {
        if !inner.constant_term().is_zero() {
            return Err(Error::Domain("inner series has nonzero constant term".into()));
        }
        let v = inner.lowest_degree().unwrap_or(inner.deg() + 1).max(1);
        let bound = self.prec().saturating_mul(v);
        let deg = if bound == 0 { 0 } else { inner.deg().min(bound - 1) };
        let inner = inner.truncate(deg);
        let mut acc = MultiSeries::zero(inner.nvars(), deg);
        for i in (0..self.prec()).rev() {
            acc = (&acc * &inner).truncate(deg);
            let c0 = acc.constant_term();
            acc.c[0] = c0 + self.c[i];
        }
        Ok(acc)
    }

    pub fn derivative(&self) -> Self {
        let n = self.prec();
        if n == 0 {
            return self.clone();
        }
        UniSeries { c: (1..n).map(|i| self.c[i] * C::from_i64(i as i64)).collect() }
    }

    /// Compositional inverse: g with self(g(t)) = t = g(self(t)).
    pub fn reversion(&self) -> Result<Self> {
        let n = self.prec();
        if n < 2 {
            return Err(Error::Precision("need at least the linear coefficient".into()));
        }
        if !self.c[0].is_zero() {
            return Err(Error::Domain("series has nonzero constant term".into()));
        }
        let a1_inv = self.c[1]
            .try_inv()
            .ok_or_else(|| Error::Domain("linear coefficient is not a unit".into()))?;
        let t = UniSeries::var(n);
        let mut g = t.scale(a1_inv);
        // g <- g - a1^-1 (f(g) - t) fixes at least one further coefficient per round.
        for _ in 0..n {
            let err = &self.compose(&g)? - &t;
            if err.is_zero() {
                break;
            }
            g = &g - &err.scale(a1_inv);
        }
        Ok(g)
    }

    pub fn pow(&self, mut e: u64) -> Self {
        let mut base = self.clone();
        let mut acc = UniSeries::one(self.prec());
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Square computed by reindexing c_i^2 to position 2i; valid in characteristic 2.
    pub fn square_frobenius(&self) -> Result<Self> {
        if !C::CHAR_TWO {
            return Err(Error::Domain("Frobenius squaring needs characteristic 2".into()));
        }
        let mut out = UniSeries::zero(self.prec());
        for (i, a) in self.c.iter().enumerate() {
            if 2 * i < self.prec() {
                out.c[2 * i] = a.square();
            }
        }
        Ok(out)
    }

    /// u^e for a 1-unit u and a 2-adic exponent e, in characteristic 2.
    pub fn two_adic_power(&self, e: PadicInt) -> Result<Self> {
        two_adic_power_impl(self, e, self.prec())
    }

    /// Canonical sparse text in the given variable, lowest degree first.
    pub fn to_text(&self, var: &str) -> String {
        let terms: Vec<String> = self
            .c
            .iter()
            .enumerate()
            .filter(|(_, a)| !a.is_zero())
            .map(|(i, a)| term_text(*a, &monomial_text(&[i as u16], &[var])))
            .collect();
        if terms.is_empty() {
            "0".to_string()
        } else {
            terms.join("+")
        }
    }
}

fn monomial_text(exps: &[u16], names: &[&str]) -> String {
    let parts: Vec<String> = exps
        .iter()
        .zip(names)
        .filter(|(e, _)| **e > 0)
        .map(|(e, n)| if *e == 1 { n.to_string() } else { format!("{n}^{e}") })
        .collect();
    parts.join("*")
}

fn term_text<C: Coeff>(a: C, mono: &str) -> String {
    if mono.is_empty() {
        a.fmt_coeff()
    } else if a == C::one() {
        mono.to_string()
    } else {
        format!("{}*{mono}", a.fmt_coeff())
    }
}

impl<C: Coeff> fmt::Debug for UniSeries<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + O(t^{})", self.to_text("t"), self.prec())
    }
}

impl<C: Coeff> fmt::Display for UniSeries<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl<'a, C: Coeff> Add for &'a UniSeries<C> {
    type Output = UniSeries<C>;
    fn add(self, o: &UniSeries<C>) -> UniSeries<C> {
        let n = self.prec().min(o.prec());
        UniSeries { c: (0..n).map(|i| self.c[i] + o.c[i]).collect() }
    }
}

impl<'a, C: Coeff> Sub for &'a UniSeries<C> {
    type Output = UniSeries<C>;
    fn sub(self, o: &UniSeries<C>) -> UniSeries<C> {
        let n = self.prec().min(o.prec());
        UniSeries { c: (0..n).map(|i| self.c[i] - o.c[i]).collect() }
    }
}

impl<'a, C: Coeff> Neg for &'a UniSeries<C> {
    type Output = UniSeries<C>;
    fn neg(self) -> UniSeries<C> {
        UniSeries { c: self.c.iter().map(|&a| -a).collect() }
    }
}

impl<'a, C: Coeff> Mul for &'a UniSeries<C> {
    type Output = UniSeries<C>;
    fn mul(self, o: &UniSeries<C>) -> UniSeries<C> {
        // a t^i known mod t^N_a, b known mod t^N_b: the product is known mod
        // t^min(N_a + v_b, N_b + v_a).
        let va = self.valuation().unwrap_or(self.prec());
        let vb = o.valuation().unwrap_or(o.prec());
        let n = (self.prec() + vb).min(o.prec() + va);
        let mut c = vec![C::zero(); n];
        for (i, &a) in self.c.iter().enumerate() {
            if a.is_zero() || i >= n {
                continue;
            }
            for (j, &b) in o.c.iter().enumerate().take(n - i) {
                if !b.is_zero() {
                    c[i + j] = c[i + j] + a * b;
                }
            }
        }
        UniSeries { c }
    }
}

// ---------------------------------------------------------------------------
// multivariate layout

const BINOM_ROWS: usize = 512;

fn binom_small(n: usize, k: usize) -> usize {
    match k {
        0 => 1,
        1 => n,
        2 => n * n.saturating_sub(1) / 2,
        3 => n * n.saturating_sub(1) * n.saturating_sub(2) / 6,
        4 => n * n.saturating_sub(1) * n.saturating_sub(2) * n.saturating_sub(3) / 24,
        _ => unreachable!("at most {MAX_VARS} variables"),
    }
}

/// Number of monomials in k variables of total degree < d.
#[inline]
fn count_below(k: usize, d: usize) -> usize {
    if d == 0 {
        0
    } else {
        binom_small(d + k - 1, k)
    }
}

/// Number of monomials in k variables of total degree <= d.
pub fn monomial_count(k: usize, d: usize) -> usize {
    count_below(k, d + 1)
}

/// Flat index of an exponent vector in a k-variable table.
#[inline]
pub fn flat_index(k: usize, e: &Exps) -> usize {
    let mut tail = [0usize; MAX_VARS + 1];
    for i in (0..k).rev() {
        tail[i] = tail[i + 1] + e[i] as usize;
    }
    let mut idx = count_below(k, tail[0]);
    for i in 1..k {
        idx += binom_small(tail[i] + k - i - 1, k - i);
    }
    idx
}

/// Exponent vectors of a k-variable table of degree <= d, in storage order.
pub fn exps_table(k: usize, d: usize) -> Vec<Exps> {
    let mut out = Vec::with_capacity(monomial_count(k, d));
    for deg in 0..=d {
        push_exps(k, deg, 0, &mut [0; MAX_VARS], &mut out);
    }
    out
}

fn push_exps(k: usize, rem: usize, i: usize, cur: &mut Exps, out: &mut Vec<Exps>) {
    if i + 1 == k {
        cur[i] = rem as u16;
        out.push(*cur);
        cur[i] = 0;
        return;
    }
    for e in (0..=rem).rev() {
        cur[i] = e as u16;
        push_exps(k, rem - e, i + 1, cur, out);
    }
    cur[i] = 0;
}

fn total(e: &Exps) -> usize {
    e.iter().map(|&x| x as usize).sum()
}

// ---------------------------------------------------------------------------
// multivariate

#[derive(Clone, PartialEq)]
pub struct MultiSeries<C> {
    k: usize,
    d: usize,
    c: Vec<C>,
}

impl<C: Coeff> MultiSeries<C> {
    pub fn zero(nvars: usize, deg: usize) -> Self {
        assert!((1..=MAX_VARS).contains(&nvars), "unsupported variable count {nvars}");
        assert!(deg < BINOM_ROWS, "degree bound {deg} too large");
        MultiSeries { k: nvars, d: deg, c: vec![C::zero(); monomial_count(nvars, deg)] }
    }

    pub fn constant(a: C, nvars: usize, deg: usize) -> Self {
        let mut s = Self::zero(nvars, deg);
        s.c[0] = a;
        s
    }

    pub fn one(nvars: usize, deg: usize) -> Self {
        Self::constant(C::one(), nvars, deg)
    }

    /// The variable with index i.
    pub fn var(i: usize, nvars: usize, deg: usize) -> Self {
        let mut e = [0; MAX_VARS];
        e[i] = 1;
        Self::monomial(C::one(), &e, nvars, deg)
    }

    pub fn monomial(a: C, e: &Exps, nvars: usize, deg: usize) -> Self {
        let mut s = Self::zero(nvars, deg);
        if total(e) <= deg {
            s.c[flat_index(nvars, e)] = a;
        }
        s
    }

    pub fn from_terms(nvars: usize, deg: usize, terms: &[(Exps, C)]) -> Self {
        let mut s = Self::zero(nvars, deg);
        for (e, a) in terms {
            if total(e) <= deg {
                let i = flat_index(nvars, e);
                s.c[i] = s.c[i] + *a;
            }
        }
        s
    }

    pub fn nvars(&self) -> usize {
        self.k
    }

    /// Total-degree bound through which coefficients are known.
    pub fn deg(&self) -> usize {
        self.d
    }

    pub fn coeffs(&self) -> &[C] {
        &self.c
    }

    pub fn get(&self, e: &Exps) -> C {
        assert!(total(e) <= self.d, "monomial beyond degree bound {}", self.d);
        self.c[flat_index(self.k, e)]
    }

    pub fn set(&mut self, e: &Exps, a: C) {
        let i = flat_index(self.k, e);
        self.c[i] = a;
    }

    pub fn constant_term(&self) -> C {
        self.c[0]
    }

    /// Nonzero terms in storage order.
    pub fn terms(&self) -> Vec<(Exps, C)> {
        exps_table(self.k, self.d)
            .into_iter()
            .zip(self.c.iter())
            .filter(|(_, a)| !a.is_zero())
            .map(|(e, a)| (e, *a))
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|a| a.is_zero())
    }

    pub fn lowest_degree(&self) -> Option<usize> {
        let i = self.c.iter().position(|a| !a.is_zero())?;
        (0..=self.d).find(|&deg| count_below(self.k, deg + 1) > i)
    }

    fn degree_range(&self, deg: usize) -> std::ops::Range<usize> {
        count_below(self.k, deg)..count_below(self.k, deg + 1)
    }

    /// Coefficients of the homogeneous part of the given degree, in storage order.
    pub fn homogeneous(&self, deg: usize) -> &[C] {
        &self.c[self.degree_range(deg)]
    }

    pub fn truncate(&self, deg: usize) -> Self {
        assert!(deg <= self.d, "cannot raise degree bound {} to {deg}", self.d);
        MultiSeries { k: self.k, d: deg, c: self.c[..monomial_count(self.k, deg)].to_vec() }
    }

    pub fn scale(&self, a: C) -> Self {
        MultiSeries { k: self.k, d: self.d, c: self.c.iter().map(|&x| x * a).collect() }
    }

    fn check_vars(&self, o: &Self) {
        assert_eq!(self.k, o.k, "variable count mismatch");
    }

    pub fn inverse(&self) -> Result<Self> {
        let inv0 = self.c[0]
            .try_inv()
            .ok_or_else(|| Error::Domain("constant term is not a unit".into()))?;
        let exps = exps_table(self.k, self.d);
        let mut q: MultiSeries<C> = MultiSeries::zero(self.k, self.d);
        q.c[0] = inv0;
        // acc holds sum_{e<deg} q_e * self_{deg-e} for the degrees still to come.
        let mut acc = vec![C::zero(); self.c.len()];
        for deg in 1..=self.d {
            let prev = self.degree_range(deg - 1);
            for qi in prev {
                let qa = q.c[qi];
                if qa.is_zero() {
                    continue;
                }
                let qe = exps[qi];
                let qdeg = deg - 1;
                for (si, se) in exps.iter().enumerate().skip(1) {
                    let sd = total(se);
                    if qdeg + sd > self.d {
                        break;
                    }
                    let sa = self.c[si];
                    if sa.is_zero() {
                        continue;
                    }
                    let idx = flat_index(self.k, &add_exps(&qe, se));
                    acc[idx] = acc[idx] + qa * sa;
                }
            }
            for i in self.degree_range(deg) {
                q.c[i] = -(acc[i] * inv0);
            }
        }
        Ok(q)
    }

    /// Exact quotient self / b, computed degree by degree with leading-form division.
    pub fn exact_div(&self, b: &Self) -> Result<Self> {
        self.check_vars(b);
        let k = self.k;
        let v = b
            .lowest_degree()
            .ok_or_else(|| Error::NotDivisible("divisor is zero to its precision".into()))?;
        for deg in 0..v.min(self.d + 1) {
            if self.homogeneous(deg).iter().any(|a| !a.is_zero()) {
                return Err(Error::NotDivisible(format!("nonzero remainder in degree {deg}")));
            }
        }
        let top = self.d.min(b.d);
        if top < v {
            return Err(Error::Precision("operands too short for the divisor's order".into()));
        }
        let qd = top - v;
        let exps = exps_table(k, top);
        let lead: Vec<(Exps, C)> = b
            .degree_range(v)
            .filter(|&i| !b.c[i].is_zero())
            .map(|i| (exps[i], b.c[i]))
            .collect();
        let (lead_e, lead_c) = lead[0];
        let lc_inv = lead_c.try_inv().ok_or_else(|| {
            Error::NotDivisible("leading coefficient of divisor is not a unit".into())
        })?;
        let mut rem = self.truncate(top).c;
        let mut q: MultiSeries<C> = MultiSeries::zero(k, qd);
        for deg in 0..=qd {
            let range = count_below(k, deg + v)..count_below(k, deg + v + 1);
            for i in range.clone() {
                let a = rem[i];
                if a.is_zero() {
                    continue;
                }
                let e = exps[i];
                if (0..k).any(|j| e[j] < lead_e[j]) {
                    return Err(Error::NotDivisible(format!(
                        "leading-form division fails in degree {}",
                        deg + v
                    )));
                }
                let mut m = e;
                for j in 0..k {
                    m[j] -= lead_e[j];
                }
                let factor = a * lc_inv;
                let qi = flat_index(k, &m);
                q.c[qi] = q.c[qi] + factor;
                for (le, lc) in &lead {
                    let idx = flat_index(k, &add_exps(&m, le));
                    rem[idx] = rem[idx] - factor * *lc;
                }
            }
            // subtract q_deg * (b - lead) from the higher degrees
            for qi in count_below(k, deg)..count_below(k, deg + 1) {
                let qa = q.c[qi];
                if qa.is_zero() {
                    continue;
                }
                let qe = exps[qi];
                for bi in count_below(k, v + 1)..monomial_count(k, top - deg) {
                    let ba = b.c[bi];
                    if ba.is_zero() {
                        continue;
                    }
                    let idx = flat_index(k, &add_exps(&qe, &exps[bi]));
                    rem[idx] = rem[idx] - qa * ba;
                }
            }
        }
        Ok(q)
    }

    /// Re-labels variable i as variable var_map[i] of an nvars-variable ring.
    pub fn embed(&self, nvars: usize, var_map: &[usize]) -> Self {
        assert_eq!(var_map.len(), self.k);
        let mut out = MultiSeries::zero(nvars, self.d);
        for (e, a) in self.terms() {
            let mut f = [0; MAX_VARS];
            for i in 0..self.k {
                f[var_map[i]] += e[i];
            }
            let idx = flat_index(nvars, &f);
            out.c[idx] = out.c[idx] + a;
        }
        out
    }

    /// Permutes variables: variable i becomes variable perm[i].
    pub fn permute(&self, perm: &[usize]) -> Self {
        self.embed(self.k, perm)
    }

    /// Sets variable i to zero.
    pub fn set_var_zero(&self, i: usize) -> Self {
        let mut out = self.clone();
        for (idx, e) in exps_table(self.k, self.d).iter().enumerate() {
            if e[i] > 0 {
                out.c[idx] = C::zero();
            }
        }
        out
    }

    /// Substitutes x_i -> g_i(x_i) for univariate g_i with zero constant term.
    pub fn map_each_var(&self, gs: &[UniSeries<C>]) -> Result<Self> {
        assert_eq!(gs.len(), self.k);
        for g in gs {
            if g.prec() > 0 && !g.coeff(0).is_zero() {
                return Err(Error::Domain("substituted series has nonzero constant term".into()));
            }
            if g.prec() <= self.d {
                return Err(Error::Precision("substituted series too short".into()));
            }
        }
        // one axis at a time: c'_{..p..} = sum_a c_{..a..} [x^p] g^a
        let mut cur = self.clone();
        let exps = exps_table(self.k, self.d);
        for (axis, g) in gs.iter().enumerate() {
            let powers = power_table(g, self.d);
            let mut next = MultiSeries::zero(self.k, self.d);
            for (idx, e) in exps.iter().enumerate() {
                let a = cur.c[idx];
                if a.is_zero() {
                    continue;
                }
                let room = self.d - total(e) + e[axis] as usize;
                let pw = &powers[e[axis] as usize];
                for p in (e[axis] as usize)..=room {
                    let gp = pw[p];
                    if gp.is_zero() {
                        continue;
                    }
                    let mut f = *e;
                    f[axis] = p as u16;
                    let j = flat_index(self.k, &f);
                    next.c[j] = next.c[j] + a * gp;
                }
            }
            cur = next;
        }
        Ok(cur)
    }

    /// Substitutes the series p for variable j.
    ///
    /// The result lives in an `nvars`-variable ring: variable i != j of self goes to
    /// `var_map[i]`, and p's variable r goes to `p_map[r]`. The two target sets must be
    /// disjoint, which lets products of powers be formed by placement. p must have zero
    /// constant term.
    pub fn substitute_var(
        &self,
        j: usize,
        p: &MultiSeries<C>,
        nvars: usize,
        var_map: &[usize],
        p_map: &[usize],
    ) -> Result<Self> {
        if !p.constant_term().is_zero() {
            return Err(Error::Domain("substituted series has nonzero constant term".into()));
        }
        let deg = self.d.min(p.d);
        let mut powers = vec![MultiSeries::one(p.k, deg)];
        let pt = p.truncate(deg);
        for _ in 1..=deg {
            let next = powers.last().expect("nonempty") * &pt;
            powers.push(next);
        }
        let power_terms: Vec<Vec<(Exps, C)>> = powers.iter().map(|s| s.terms()).collect();
        let mut out = MultiSeries::zero(nvars, deg);
        for (e, a) in self.terms() {
            let base_deg = total(&e) - e[j] as usize;
            if base_deg > deg {
                continue;
            }
            let mut f = [0; MAX_VARS];
            for i in 0..self.k {
                if i != j {
                    f[var_map[i]] += e[i];
                }
            }
            for (pe, pa) in &power_terms[e[j] as usize] {
                if base_deg + total(pe) > deg {
                    continue;
                }
                let mut g = f;
                for r in 0..p.k {
                    g[p_map[r]] += pe[r];
                }
                let idx = flat_index(nvars, &g);
                out.c[idx] = out.c[idx] + a * *pa;
            }
        }
        Ok(out)
    }

    pub fn pow(&self, mut e: u64) -> Self {
        let mut base = self.clone();
        let mut acc = MultiSeries::one(self.k, self.d);
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Square by reindexing exponents and squaring coefficients; characteristic 2 only.
    pub fn square_frobenius(&self) -> Result<Self> {
        if !C::CHAR_TWO {
            return Err(Error::Domain("Frobenius squaring needs characteristic 2".into()));
        }
        let mut out = MultiSeries::zero(self.k, self.d);
        for (e, a) in self.terms() {
            if 2 * total(&e) <= self.d {
                let f: Exps = std::array::from_fn(|i| 2 * e[i]);
                out.c[flat_index(self.k, &f)] = a.square();
            }
        }
        Ok(out)
    }

    pub fn two_adic_power(&self, e: PadicInt) -> Result<Self> {
        two_adic_power_impl(self, e, self.d + 1)
    }

    /// Canonical sparse text, degree-lex order, with the given variable names.
    pub fn to_text(&self, names: &[&str]) -> String {
        let terms: Vec<String> = self
            .terms()
            .iter()
            .map(|(e, a)| term_text(*a, &monomial_text(&e[..self.k], names)))
            .collect();
        if terms.is_empty() {
            "0".to_string()
        } else {
            terms.join(" + ")
        }
    }
}

fn add_exps(a: &Exps, b: &Exps) -> Exps {
    std::array::from_fn(|i| a[i] + b[i])
}

/// Coefficient tables of g^0 .. g^d mod t^(d+1).
fn power_table<C: Coeff>(g: &UniSeries<C>, d: usize) -> Vec<Vec<C>> {
    let g = g.truncate(d + 1);
    let mut out = vec![UniSeries::one(d + 1).coeffs().to_vec()];
    let mut cur = UniSeries::one(d + 1);
    for _ in 1..=d {
        cur = &cur * &g;
        let mut row = cur.coeffs().to_vec();
        row.resize(d + 1, C::zero());
        out.push(row);
    }
    out
}

impl<C: Coeff> fmt::Debug for MultiSeries<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = ["x", "y", "z", "w"];
        write!(f, "{} + O(deg {})", self.to_text(&names[..self.k]), self.d + 1)
    }
}

impl<'a, C: Coeff> Add for &'a MultiSeries<C> {
    type Output = MultiSeries<C>;
    fn add(self, o: &MultiSeries<C>) -> MultiSeries<C> {
        self.check_vars(o);
        let d = self.d.min(o.d);
        let n = monomial_count(self.k, d);
        MultiSeries { k: self.k, d, c: (0..n).map(|i| self.c[i] + o.c[i]).collect() }
    }
}

impl<'a, C: Coeff> Sub for &'a MultiSeries<C> {
    type Output = MultiSeries<C>;
    fn sub(self, o: &MultiSeries<C>) -> MultiSeries<C> {
        self.check_vars(o);
        let d = self.d.min(o.d);
        let n = monomial_count(self.k, d);
        MultiSeries { k: self.k, d, c: (0..n).map(|i| self.c[i] - o.c[i]).collect() }
    }
}

impl<'a, C: Coeff> Neg for &'a MultiSeries<C> {
    type Output = MultiSeries<C>;
    fn neg(self) -> MultiSeries<C> {
        MultiSeries { k: self.k, d: self.d, c: self.c.iter().map(|&a| -a).collect() }
    }
}

impl<'a, C: Coeff> Mul for &'a MultiSeries<C> {
    type Output = MultiSeries<C>;
    fn mul(self, o: &MultiSeries<C>) -> MultiSeries<C> {
        self.check_vars(o);
        let k = self.k;
        let va = self.lowest_degree().unwrap_or(self.d + 1);
        let vb = o.lowest_degree().unwrap_or(o.d + 1);
        let d = (self.d + vb).min(o.d + va).min(BINOM_ROWS - 1);
        let exps = exps_table(k, d.max(self.d).max(o.d));
        let mut c = vec![C::zero(); monomial_count(k, d)];
        let b_terms: Vec<(usize, Exps, C)> = o
            .c
            .iter()
            .enumerate()
            .filter(|(_, b)| !b.is_zero())
            .map(|(i, b)| (total(&exps[i]), exps[i], *b))
            .collect();
        for (i, &a) in self.c.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let ea = exps[i];
            let da = total(&ea);
            if da > d {
                break;
            }
            for &(db, eb, b) in &b_terms {
                if da + db > d {
                    break;
                }
                let idx = flat_index(k, &add_exps(&ea, &eb));
                c[idx] = c[idx] + a * b;
            }
        }
        MultiSeries { k, d, c }
    }
}

// ---------------------------------------------------------------------------
// shared algorithms

/// Operations shared by the two series types.
pub trait SeriesRing: Clone {
    type Scalar: Coeff;
    fn constant_coeff(&self) -> Self::Scalar;
    fn one_like(&self) -> Self;
    fn times(&self, o: &Self) -> Self;
    fn plus(&self, o: &Self) -> Self;
    fn minus(&self, o: &Self) -> Self;
    fn scaled(&self, a: Self::Scalar) -> Self;
    fn invert(&self) -> Result<Self>;
    fn frobenius_square(&self) -> Result<Self>;
}

impl<C: Coeff> SeriesRing for UniSeries<C> {
    type Scalar = C;
    fn constant_coeff(&self) -> C {
        self.get(0).unwrap_or_else(C::zero)
    }
    fn one_like(&self) -> Self {
        UniSeries::one(self.prec())
    }
    fn times(&self, o: &Self) -> Self {
        self * o
    }
    fn plus(&self, o: &Self) -> Self {
        self + o
    }
    fn minus(&self, o: &Self) -> Self {
        self - o
    }
    fn scaled(&self, a: C) -> Self {
        self.scale(a)
    }
    fn invert(&self) -> Result<Self> {
        self.inverse()
    }
    fn frobenius_square(&self) -> Result<Self> {
        self.square_frobenius()
    }
}

impl<C: Coeff> SeriesRing for MultiSeries<C> {
    type Scalar = C;
    fn constant_coeff(&self) -> C {
        self.constant_term()
    }
    fn one_like(&self) -> Self {
        MultiSeries::one(self.k, self.d)
    }
    fn times(&self, o: &Self) -> Self {
        self * o
    }
    fn plus(&self, o: &Self) -> Self {
        self + o
    }
    fn minus(&self, o: &Self) -> Self {
        self - o
    }
    fn scaled(&self, a: C) -> Self {
        self.scale(a)
    }
    fn invert(&self) -> Result<Self> {
        self.inverse()
    }
    fn frobenius_square(&self) -> Result<Self> {
        self.square_frobenius()
    }
}

/// u^e = prod_i (u^(2^i))^(e_i); `order_bound` is the degree at which u^(2^i) - 1
/// is guaranteed to vanish once 2^i reaches it.
fn two_adic_power_impl<S: SeriesRing>(u: &S, e: PadicInt, order_bound: usize) -> Result<S> {
    if !S::Scalar::CHAR_TWO {
        return Err(Error::Domain("2-adic powers need characteristic 2".into()));
    }
    if u.constant_coeff() != S::Scalar::one() {
        return Err(Error::Domain("2-adic powers need constant term 1".into()));
    }
    let mut bits = 0u32;
    while (1usize << bits) < order_bound {
        bits += 1;
    }
    if e.precision() < bits {
        return Err(Error::Precision(format!(
            "exponent known mod 2^{} but 2^{bits} needed",
            e.precision()
        )));
    }
    let mut acc = u.one_like();
    let mut sq = u.clone();
    for i in 0..bits {
        if e.bit(i) == Some(true) {
            acc = acc.times(&sq);
        }
        if i + 1 < bits {
            sq = sq.frobenius_square()?;
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base_rings::GF4;

    type U = UniSeries<GF4>;
    type M = MultiSeries<GF4>;

    fn uni_i(c: &[i64], prec: usize) -> UniSeries<i64> {
        UniSeries::from_coeffs(c.to_vec(), prec)
    }

    #[test]
    fn layout_is_consistent() {
        for k in 1..=4 {
            let table = exps_table(k, 9);
            assert_eq!(table.len(), monomial_count(k, 9));
            for (i, e) in table.iter().enumerate() {
                assert_eq!(flat_index(k, e), i, "k={k} e={e:?}");
            }
        }
        assert_eq!(monomial_count(3, 34), 7770);
    }

    #[test]
    fn exact_division_examples() {
        let a = uni_i(&[0, 0, 1, 1], 8);
        let b = uni_i(&[0, 0, 1], 8);
        assert_eq!(a.exact_div(&b).unwrap(), uni_i(&[1, 1], 6));
        // t / (1+t) by long division: t - t^2 + t^3 - ...
        let q = uni_i(&[0, 1], 8).exact_div(&uni_i(&[1, 1], 8)).unwrap();
        let mut long = vec![0i64; 8];
        let mut rem = vec![0i64, 1, 0, 0, 0, 0, 0, 0];
        for i in 0..8 {
            long[i] = rem[i];
            if i + 1 < 8 {
                rem[i + 1] -= long[i];
            }
        }
        assert_eq!(q.coeffs(), &long[..]);
        assert!(matches!(
            uni_i(&[1, 1], 5).exact_div(&b),
            Err(Error::NotDivisible(_))
        ));
    }

    #[test]
    fn char_two_geometric_series() {
        let one_plus_t = U::from_coeffs(vec![GF4::ONE, GF4::ONE], 20);
        let geo = U::new(vec![GF4::ONE; 20]);
        assert_eq!(&one_plus_t * &geo, U::one(20));
        assert_eq!(one_plus_t.inverse().unwrap(), geo);
    }

    #[test]
    fn compose_examples() {
        let f = U::from_terms(&[(1, GF4::ONE), (2, GF4::ONE)], 12);
        let t2 = U::monomial(GF4::ONE, 2, 12);
        assert_eq!(f.compose(&t2).unwrap(), U::from_terms(&[(2, GF4::ONE), (4, GF4::ONE)], 12));
        let l = U::from_terms(&[(0, GF4::ONE), (2, GF4::ONE)], 12);
        let iota = U::from_terms(&[(1, GF4::ONE), (4, GF4::ONE)], 12);
        assert_eq!(
            l.compose(&iota).unwrap(),
            U::from_terms(&[(0, GF4::ONE), (2, GF4::ONE), (8, GF4::ONE)], 12)
        );
        assert!(f.compose(&U::one(12)).is_err());
        // 1 + z at x + y
        let lin = U::from_terms(&[(0, GF4::ONE), (1, GF4::ONE)], 10);
        let xy = &M::var(0, 2, 6) + &M::var(1, 2, 6);
        let r = lin.compose_multi(&xy).unwrap();
        assert_eq!(r, &M::one(2, 6) + &xy);
    }

    #[test]
    fn reversion_examples() {
        let t = U::var(10);
        assert_eq!(t.reversion().unwrap(), t);
        let zt = U::monomial(GF4::ZETA, 1, 10);
        assert_eq!(zt.reversion().unwrap(), U::monomial(GF4::ZETA2, 1, 10));
        // t + t^2 over Z: Lagrange inversion gives (-1)^(n-1) Catalan(n-1)
        let f = uni_i(&[0, 1, 1], 9);
        let g = f.reversion().unwrap();
        let catalan = [1i64, 1, 2, 5, 14, 42, 132, 429];
        let expect: Vec<i64> = std::iter::once(0)
            .chain((1..9).map(|n| if n % 2 == 1 { catalan[n - 1] } else { -catalan[n - 1] }))
            .collect();
        assert_eq!(g.coeffs(), &expect[..]);
        assert!(uni_i(&[0, 2, 1], 5).reversion().is_err());
    }

    #[test]
    fn two_adic_power_examples() {
        let u = U::from_coeffs(vec![GF4::ONE, GF4::ONE], 24);
        assert_eq!(u.two_adic_power(PadicInt::exact(0)).unwrap(), U::one(24));
        assert_eq!(u.two_adic_power(PadicInt::exact(-1)).unwrap(), U::new(vec![GF4::ONE; 24]));
        let third = PadicInt::exact(3).inv().unwrap();
        let v = u.two_adic_power(third).unwrap();
        assert_eq!(v.pow(3), u);
    }

    #[test]
    fn frobenius_square_matches_product() {
        let f = U::from_terms(&[(0, GF4::ONE), (1, GF4::ZETA), (3, GF4::ZETA2), (5, GF4::ONE)], 16);
        assert_eq!(f.square_frobenius().unwrap(), &f * &f);
        let x = M::var(0, 3, 8);
        let y = M::var(1, 3, 8);
        let g = &(&M::one(3, 8) + &x.scale(GF4::ZETA)) + &(&x * &y);
        assert_eq!(g.square_frobenius().unwrap(), &g * &g);
    }

    #[test]
    fn multivariate_exact_division() {
        let x = M::var(0, 3, 10);
        let y = M::var(1, 3, 10);
        let z = M::var(2, 3, 10);
        let b = &(&x + &y) + &(&(&x * &x) * &z);
        let q = &M::one(3, 10) + &(&y * &z).scale(GF4::ZETA);
        let a = &b * &q;
        let back = a.exact_div(&b).unwrap();
        assert_eq!(back, q.truncate(9));
        let bad = &a + &(&y * &y).scale(GF4::ONE).truncate(10);
        assert!(matches!(bad.exact_div(&(&x * &y)), Err(Error::NotDivisible(_))));
    }

    #[test]
    fn multivariate_inverse() {
        let x = M::var(0, 2, 12);
        let y = M::var(1, 2, 12);
        let u = &(&M::one(2, 12) + &x) + &(&x * &y).scale(GF4::ZETA);
        assert_eq!(&u * &u.inverse().unwrap(), M::one(2, 12));
    }

    #[test]
    fn map_each_var_and_substitute() {
        let x = M::var(0, 2, 8);
        let y = M::var(1, 2, 8);
        let f = &(&x * &y) + &x;
        let g = U::from_terms(&[(1, GF4::ONE), (2, GF4::ONE)], 9);
        let mapped = f.map_each_var(&[g.clone(), g.clone()]).unwrap();
        let gx = g.compose_multi(&x).unwrap();
        let gy = g.compose_multi(&y).unwrap();
        assert_eq!(mapped, &(&gx * &gy) + &gx);
        // f(x + y + xy, z) in three variables
        let p = &(&x + &y) + &(&x * &y);
        let s = f.substitute_var(0, &p, 3, &[0, 2], &[0, 1]).unwrap();
        let p3 = p.embed(3, &[0, 1]);
        let z3 = M::var(2, 3, 8);
        assert_eq!(s, &(&p3 * &z3) + &p3);
    }

    #[test]
    fn canonical_text() {
        let l = U::from_terms(&[(0, GF4::ONE), (6, GF4::ONE), (2, GF4::ZETA)], 8);
        assert_eq!(l.to_text("z"), "1+zeta*z^2+z^6");
        let x = M::var(0, 3, 4);
        let z = M::var(2, 3, 4);
        let s = &(&x * &z) + &(&x * &x);
        assert_eq!(s.to_text(&["x", "y", "z"]), "x^2 + x*z");
    }
}
