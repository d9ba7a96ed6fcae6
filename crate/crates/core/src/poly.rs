//! Sparse polynomials in up to four variables.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use crate::base_rings::Coeff;
use crate::series::{Exps, MultiSeries, MAX_VARS};

#[derive(Clone, PartialEq, Debug)]
pub struct Poly<C> {
    k: usize,
    terms: BTreeMap<Exps, C>,
}

impl<C: Coeff> Poly<C> {
    pub fn zero(nvars: usize) -> Self {
        assert!((1..=MAX_VARS).contains(&nvars));
        Poly { k: nvars, terms: BTreeMap::new() }
    }

    pub fn constant(a: C, nvars: usize) -> Self {
        Self::monomial(a, [0; MAX_VARS], nvars)
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(C::one(), nvars)
    }

    pub fn var(i: usize, nvars: usize) -> Self {
        let mut e = [0; MAX_VARS];
        e[i] = 1;
        Self::monomial(C::one(), e, nvars)
    }

    pub fn monomial(a: C, e: Exps, nvars: usize) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(e, a);
        p
    }

    pub fn from_terms(nvars: usize, terms: &[(Exps, C)]) -> Self {
        let mut p = Self::zero(nvars);
        for &(e, a) in terms {
            p.add_term(e, a);
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.k
    }

    pub fn add_term(&mut self, e: Exps, a: C) {
        let slot = self.terms.entry(e).or_insert_with(C::zero);
        *slot = *slot + a;
        if slot.is_zero() {
            self.terms.remove(&e);
        }
    }

    pub fn coeff(&self, e: &Exps) -> C {
        self.terms.get(e).copied().unwrap_or_else(C::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exps, &C)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn total_degree(&self) -> Option<usize> {
        self.terms.keys().map(|e| e.iter().map(|&x| x as usize).sum()).max()
    }

    pub fn scale(&self, a: C) -> Self {
        let mut p = Self::zero(self.k);
        for (e, c) in &self.terms {
            p.add_term(*e, *c * a);
        }
        p
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::one(self.k);
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    /// Substitutes subs[i] for variable i; the result lives in subs' ring.
    pub fn compose(&self, subs: &[Poly<C>]) -> Self {
        assert_eq!(subs.len(), self.k);
        let k = subs[0].k;
        let mut out = Self::zero(k);
        for (e, c) in &self.terms {
            let mut term = Self::constant(*c, k);
            for (i, s) in subs.iter().enumerate() {
                term = &term * &s.pow(e[i] as u32);
            }
            out = &out + &term;
        }
        out
    }

    pub fn eval(&self, point: &[C]) -> C {
        let mut acc = C::zero();
        for (e, c) in &self.terms {
            let mut t = *c;
            for i in 0..self.k {
                for _ in 0..e[i] {
                    t = t * point[i];
                }
            }
            acc = acc + t;
        }
        acc
    }

    /// Truncated power series with the same terms.
    pub fn to_series(&self, deg: usize) -> MultiSeries<C> {
        let terms: Vec<(Exps, C)> = self.terms.iter().map(|(e, c)| (*e, *c)).collect();
        MultiSeries::from_terms(self.k, deg, &terms)
    }

    /// Canonical text: degree-lex, within a degree by descending exponent of the
    /// first variable.
    pub fn to_text(&self, names: &[&str]) -> String {
        let mut keys: Vec<&Exps> = self.terms.keys().collect();
        keys.sort_by(|a, b| {
            let da: u32 = a.iter().map(|&x| x as u32).sum();
            let db: u32 = b.iter().map(|&x| x as u32).sum();
            da.cmp(&db).then(b.cmp(a))
        });
        let parts: Vec<String> = keys
            .into_iter()
            .map(|e| {
                let c = self.terms[e];
                let mono: Vec<String> = (0..self.k)
                    .filter(|&i| e[i] > 0)
                    .map(|i| {
                        if e[i] == 1 {
                            names[i].to_string()
                        } else {
                            format!("{}^{}", names[i], e[i])
                        }
                    })
                    .collect();
                let mono = mono.join("*");
                if mono.is_empty() {
                    c.fmt_coeff()
                } else if c == C::one() {
                    mono
                } else {
                    format!("{}*{mono}", c.fmt_coeff())
                }
            })
            .collect();
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join(" + ")
        }
    }
}

impl<'a, C: Coeff> Add for &'a Poly<C> {
    type Output = Poly<C>;
    fn add(self, o: &Poly<C>) -> Poly<C> {
        assert_eq!(self.k, o.k);
        let mut p = self.clone();
        for (e, c) in &o.terms {
            p.add_term(*e, *c);
        }
        p
    }
}

impl<'a, C: Coeff> Sub for &'a Poly<C> {
    type Output = Poly<C>;
    fn sub(self, o: &Poly<C>) -> Poly<C> {
        self + &(-o)
    }
}

impl<'a, C: Coeff> Neg for &'a Poly<C> {
    type Output = Poly<C>;
    fn neg(self) -> Poly<C> {
        self.scale(-C::one())
    }
}

impl<'a, C: Coeff> Mul for &'a Poly<C> {
    type Output = Poly<C>;
    fn mul(self, o: &Poly<C>) -> Poly<C> {
        assert_eq!(self.k, o.k);
        let mut p = Poly::zero(self.k);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &o.terms {
                let e: Exps = std::array::from_fn(|i| ea[i] + eb[i]);
                p.add_term(e, *ca * *cb);
            }
        }
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base_rings::GF4;

    #[test]
    fn arithmetic_and_compose() {
        let x = Poly::<GF4>::var(0, 2);
        let y = Poly::<GF4>::var(1, 2);
        let s = &x + &y;
        let sq = &s * &s;
        assert_eq!(sq, &(&x * &x) + &(&y * &y));
        let shifted = sq.compose(&[&x + &Poly::one(2), y.clone()]);
        assert_eq!(shifted.eval(&[GF4::ZETA, GF4::ONE]), sq.eval(&[GF4::ZETA2, GF4::ONE]));
        assert_eq!(sq.to_text(&["x", "y"]), "x^2 + y^2");
    }
}
