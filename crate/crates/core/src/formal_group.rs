//! Formal group law of a Weierstrass curve in the coordinate t = -x/y.
//!
//! With w = -1/y the curve reads w = t^3 + a1 t w + a2 t^2 w + a3 w^2 + a4 t w^2 + a6 w^3.
//! Two points are added by the chord through them: the slope is a divided
//! difference of w, the third intersection comes from the sum of roots, and the
//! sum is its negative.

use num_traits::{One, Zero};

use crate::base_rings::{Coeff, GF4};
use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::series::{MultiSeries, SeriesRing, UniSeries, MAX_VARS};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeierstrassCurve<C> {
    pub a1: C,
    pub a2: C,
    pub a3: C,
    pub a4: C,
    pub a6: C,
}

impl WeierstrassCurve<GF4> {
    /// y^2 + y = x^3 over F4.
    pub fn c0() -> Self {
        WeierstrassCurve { a1: GF4::ZERO, a2: GF4::ZERO, a3: GF4::ONE, a4: GF4::ZERO, a6: GF4::ZERO }
    }
}

impl<C: Coeff> WeierstrassCurve<C> {
    /// y^2 + a1 xy + a3 y - x^3 - a2 x^2 - a4 x - a6 in variables (x, y).
    pub fn equation(&self) -> Poly<C> {
        let t = |a: C, ex: u16, ey: u16| Poly::monomial(a, [ex, ey, 0, 0], 2);
        let one = C::one();
        let terms = [
            t(one, 0, 2),
            t(self.a1, 1, 1),
            t(self.a3, 0, 1),
            t(-one, 3, 0),
            t(-self.a2, 2, 0),
            t(-self.a4, 1, 0),
            t(-self.a6, 0, 0),
        ];
        terms.iter().fold(Poly::zero(2), |acc, p| &acc + p)
    }

    /// The elliptic inverse (x, y) -> (x, -y - a1 x - a3).
    pub fn negation_map(&self) -> (Poly<C>, Poly<C>) {
        let x = Poly::var(0, 2);
        let y = Poly::var(1, 2);
        let q = &(&(-&y) - &x.scale(self.a1)) - &Poly::constant(self.a3, 2);
        (x, q)
    }
}

#[derive(Clone)]
pub struct FormalGroup<C> {
    curve: WeierstrassCurve<C>,
    n: usize,
    w: UniSeries<C>,
    iota: UniSeries<C>,
    law: MultiSeries<C>,
}

/// Extra precision carried by w so that slopes are known to the full precision.
const W_MARGIN: usize = 2;

impl<C: Coeff> FormalGroup<C> {
    /// Builds the law to precision n (univariate) and total degree n (bivariate),
    /// checking the group-law invariants on the way.
    pub fn build(curve: WeierstrassCurve<C>, n: usize) -> Result<Self> {
        if n < 4 {
            return Err(Error::InvalidArgument("formal group precision must be at least 4".into()));
        }
        let w = solve_w(&curve, n + W_MARGIN)?;
        let t = UniSeries::var(n);
        let den = &(&t.scale(curve.a1) + &w.truncate(n).scale(curve.a3)) - &UniSeries::one(n);
        let iota = t.exact_div(&den)?.truncate(n);
        let law = bivariate_law(&curve, &w, n)?;
        let fg = FormalGroup { curve, n, w, iota, law };
        fg.check_invariants()?;
        Ok(fg)
    }

    fn check_invariants(&self) -> Result<()> {
        let n = self.n;
        if self.w.valuation() != Some(3) || !(self.w.coeff(3) - C::one()).is_zero() {
            return Err(Error::Axiom("w(t) is not t^3 times a unit".into()));
        }
        let x = MultiSeries::var(0, 2, n);
        if !(&self.law.set_var_zero(1) - &x).is_zero() {
            return Err(Error::Axiom("F(t, 0) != t".into()));
        }
        if !(&self.law.permute(&[1, 0]) - &self.law).is_zero() {
            return Err(Error::Axiom("F is not symmetric".into()));
        }
        let t = UniSeries::var(n);
        if !self.add(&t, &self.iota)?.is_zero() {
            return Err(Error::Axiom("F(t, iota(t)) != 0".into()));
        }
        Ok(())
    }

    pub fn curve(&self) -> &WeierstrassCurve<C> {
        &self.curve
    }

    pub fn precision(&self) -> usize {
        self.n
    }

    /// w(t), known to a little more than the group's precision.
    pub fn w(&self) -> &UniSeries<C> {
        &self.w
    }

    /// The inverse series [-1](t).
    pub fn iota(&self) -> &UniSeries<C> {
        &self.iota
    }

    /// F(t1, t2) to total degree n.
    pub fn law(&self) -> &MultiSeries<C> {
        &self.law
    }

    /// F(a, b) for univariate a, b with zero constant term.
    pub fn add(&self, a: &UniSeries<C>, b: &UniSeries<C>) -> Result<UniSeries<C>> {
        for s in [a, b] {
            if s.get(0).is_some_and(|c| !c.is_zero()) {
                return Err(Error::Domain("F-summand has nonzero constant term".into()));
            }
        }
        let prec = a.prec().min(b.prec()).min(self.n);
        let (a, b) = (a.truncate(prec), b.truncate(prec));
        // lambda = sum_n w_n h_{n-1}(a, b), nu = w(a) - lambda a
        let mut h = UniSeries::one(prec);
        let mut b_pow = UniSeries::one(prec);
        let mut a_pow = UniSeries::one(prec);
        let mut lambda = UniSeries::zero(prec);
        let mut wa = UniSeries::zero(prec);
        for k in 1..self.w.prec() {
            if k > 1 {
                b_pow = (&b_pow * &b).truncate(prec);
                h = &(&h * &a).truncate(prec) + &b_pow;
            }
            a_pow = (&a_pow * &a).truncate(prec);
            let wk = self.w.coeff(k);
            if !wk.is_zero() {
                lambda = &lambda + &h.scale(wk);
                wa = &wa + &a_pow.scale(wk);
            }
            if h.is_zero() && a_pow.is_zero() {
                break;
            }
        }
        let nu = &wa - &(&lambda * &a).truncate(prec);
        chord_finish(&self.curve, &a, &b, &lambda, &nu)
    }

    /// Left fold of F over univariate summands.
    pub fn f_sum(&self, summands: &[UniSeries<C>]) -> Result<UniSeries<C>> {
        let mut acc = UniSeries::zero(self.n);
        for s in summands {
            acc = self.add(&acc, s)?;
        }
        Ok(acc)
    }

    /// F(a, b) for multivariate a, b by Horner evaluation of the bivariate law.
    pub fn add_multi(&self, a: &MultiSeries<C>, b: &MultiSeries<C>) -> Result<MultiSeries<C>> {
        if !a.constant_term().is_zero() || !b.constant_term().is_zero() {
            return Err(Error::Domain("F-summand has nonzero constant term".into()));
        }
        let deg = a.deg().min(b.deg());
        if deg > self.n {
            return Err(Error::Precision(format!(
                "law known to degree {} but {deg} requested",
                self.n
            )));
        }
        let (a, b) = (a.truncate(deg), b.truncate(deg));
        let k = a.nvars();
        let mut b_pows = vec![MultiSeries::one(k, deg)];
        for _ in 1..=deg {
            let next = b_pows.last().expect("nonempty") * &b;
            b_pows.push(next);
        }
        let mut acc = MultiSeries::zero(k, deg);
        for i in (0..=deg).rev() {
            let mut g = MultiSeries::zero(k, deg);
            for (j, bp) in b_pows.iter().enumerate().take(deg + 1 - i) {
                let c = self.law.get(&[i as u16, j as u16, 0, 0]);
                if !c.is_zero() {
                    g = &g + &bp.scale(c);
                }
            }
            acc = &(&acc * &a) + &g;
        }
        Ok(acc)
    }

    /// x_1 +_F x_2 +_F ... +_F x_k as a k-variable series of total degree deg.
    pub fn sum_of_vars(&self, k: usize, deg: usize) -> Result<MultiSeries<C>> {
        if deg > self.n {
            return Err(Error::Precision(format!(
                "law known to degree {} but {deg} requested",
                self.n
            )));
        }
        assert!((1..=MAX_VARS).contains(&k));
        let law = self.law.truncate(deg);
        let mut acc = MultiSeries::var(0, 1, deg);
        for j in 1..k {
            // F(acc(x_0..x_{j-1}), x_j)
            let p_map: Vec<usize> = (0..j).collect();
            acc = law.substitute_var(0, &acc, j + 1, &[0, j], &p_map)?;
        }
        Ok(acc)
    }

    /// The multiplication-by-m series.
    pub fn m_series(&self, m: i64) -> Result<UniSeries<C>> {
        let base = if m < 0 { self.iota.clone() } else { UniSeries::var(self.n) };
        let mut acc = UniSeries::zero(self.n);
        let mag = m.unsigned_abs();
        for bit in (0..64).rev() {
            if acc.is_zero() && (mag >> bit) & 1 == 0 {
                continue;
            }
            acc = self.add(&acc, &acc)?;
            if (mag >> bit) & 1 == 1 {
                acc = self.add(&acc, &base)?;
            }
        }
        Ok(acc)
    }

    /// Series on t = -x/y induced by the curve map (x, y) -> (p, q).
    pub fn automorphism_to_series(&self, p: &Poly<C>, q: &Poly<C>) -> Result<UniSeries<C>> {
        self.check_curve_map(p, q)?;
        // x = t/w, y = -1/w: clear denominators with w^m, m the top degree
        let m = p.total_degree().unwrap_or(0).max(q.total_degree().unwrap_or(0));
        let prec = self.n + W_MARGIN;
        let t = UniSeries::var(prec);
        let mut w_pows = vec![UniSeries::one(prec)];
        let mut t_pows = vec![UniSeries::one(prec)];
        for _ in 1..=m {
            w_pows.push(w_pows.last().expect("nonempty") * &self.w);
            t_pows.push(t_pows.last().expect("nonempty") * &t);
        }
        let cleared = |f: &Poly<C>| {
            let mut acc = UniSeries::zero(prec);
            for (e, c) in f.terms() {
                let (a, b) = (e[0] as usize, e[1] as usize);
                let sign = if b % 2 == 0 { *c } else { -*c };
                let term = &t_pows[a] * &w_pows[m - a - b];
                acc = &acc + &term.scale(sign);
            }
            acc
        };
        let num = -&cleared(p);
        let den = cleared(q);
        let s = num.exact_div(&den).map_err(|e| match e {
            Error::NotDivisible(msg) => Error::NotEndomorphism(format!("denominator: {msg}")),
            other => other,
        })?;
        if s.prec() < self.n {
            return Err(Error::Precision("map loses precision in the t-coordinate".into()));
        }
        let s = s.truncate(self.n);
        if !s.coeff(0).is_zero() {
            return Err(Error::NotEndomorphism("map does not fix the point at infinity".into()));
        }
        Ok(s)
    }

    /// Accepts (p, q) when the curve equation pulls back to a unit multiple of itself.
    pub fn check_curve_map(&self, p: &Poly<C>, q: &Poly<C>) -> Result<()> {
        if p.nvars() != 2 || q.nvars() != 2 {
            return Err(Error::InvalidArgument("curve maps are polynomials in x, y".into()));
        }
        let e = self.curve.equation();
        let pulled = e.compose(&[p.clone(), q.clone()]);
        let u = pulled.coeff(&[0, 2, 0, 0]);
        let ok = u.try_inv().is_some() && pulled == e.scale(u);
        if ok {
            Ok(())
        } else {
            Err(Error::NotEndomorphism("map does not preserve the curve equation".into()))
        }
    }
}

/// Fixed-point iteration for w(t) to precision prec.
fn solve_w<C: Coeff>(curve: &WeierstrassCurve<C>, prec: usize) -> Result<UniSeries<C>> {
    let t = UniSeries::var(prec);
    let t2 = &t * &t;
    let t3 = &t2 * &t;
    let mut w = UniSeries::zero(prec);
    for _ in 0..=prec {
        let w2 = &w * &w;
        let rhs = [
            t3.clone(),
            (&t * &w).scale(curve.a1),
            (&t2 * &w).scale(curve.a2),
            w2.scale(curve.a3),
            (&t * &w2).scale(curve.a4),
            (&w2 * &w).scale(curve.a6),
        ];
        let next = rhs.iter().skip(1).fold(rhs[0].clone(), |acc, s| &acc + s);
        if next == w {
            return Ok(w);
        }
        w = next;
    }
    Err(Error::Inconsistent("w-iteration did not converge".into()))
}

/// F(t1, t2) to total degree n from the divided-difference slope.
fn bivariate_law<C: Coeff>(
    curve: &WeierstrassCurve<C>,
    w: &UniSeries<C>,
    n: usize,
) -> Result<MultiSeries<C>> {
    // lambda has coefficient w_{i+j+1} at x^i y^j; nu = w(x) - lambda x
    let mut lambda = MultiSeries::zero(2, n);
    let mut wx = MultiSeries::zero(2, n);
    for d in 0..=n {
        if d + 1 < w.prec() {
            let c = w.coeff(d + 1);
            if !c.is_zero() {
                for i in 0..=d {
                    lambda.set(&[i as u16, (d - i) as u16, 0, 0], c);
                }
            }
        }
        if d < w.prec() {
            wx.set(&[d as u16, 0, 0, 0], w.coeff(d));
        }
    }
    let x = MultiSeries::var(0, 2, n);
    let y = MultiSeries::var(1, 2, n);
    let nu = &wx - &(&lambda * &x).truncate(n);
    chord_finish(curve, &x, &y, &lambda, &nu)
}

/// Given two points on the line w = lambda t + nu, returns their F-sum.
fn chord_finish<S: SeriesRing>(
    curve: &WeierstrassCurve<S::Scalar>,
    t1: &S,
    t2: &S,
    lambda: &S,
    nu: &S,
) -> Result<S> {
    let c = |k: i64| S::Scalar::from_i64(k);
    let lam2 = lambda.times(lambda);
    let mut a = t1.one_like();
    let mut b = t1.minus(t1);
    let acc = |target: &mut S, coeff: S::Scalar, make: &dyn Fn() -> S| {
        if !coeff.is_zero() {
            *target = target.plus(&make().scaled(coeff));
        }
    };
    // cubic in t after substituting the line: leading coefficient a, next b
    acc(&mut a, curve.a2, &|| lambda.clone());
    acc(&mut a, curve.a4, &|| lam2.clone());
    acc(&mut a, curve.a6, &|| lam2.times(lambda));
    acc(&mut b, curve.a1, &|| lambda.clone());
    acc(&mut b, curve.a2, &|| nu.clone());
    acc(&mut b, curve.a3, &|| lam2.clone());
    acc(&mut b, curve.a4 * c(2), &|| lambda.times(nu));
    acc(&mut b, curve.a6 * c(3), &|| lam2.times(nu));
    let third = t1.plus(t2).plus(&b.times(&a.invert()?));
    let t3 = t1.minus(t1).minus(&third);
    let w3 = lambda.times(&t3).plus(nu);
    // negation: t -> t / (-1 + a1 t + a3 w)
    let mut den = t1.one_like().scaled(-S::Scalar::one());
    acc(&mut den, curve.a1, &|| t3.clone());
    acc(&mut den, curve.a3, &|| w3.clone());
    Ok(t3.times(&den.invert()?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fg(n: usize) -> FormalGroup<GF4> {
        FormalGroup::build(WeierstrassCurve::c0(), n).unwrap()
    }

    #[test]
    fn low_degree_law() {
        let g = fg(16);
        let x = MultiSeries::var(0, 2, 4);
        let y = MultiSeries::var(1, 2, 4);
        let xy = &x * &y;
        let expect = &(&x + &y) + &(&xy * &xy);
        assert_eq!(g.law().truncate(4), expect);
    }

    #[test]
    fn w_series_over_c0() {
        // w = t^3 + w^2 gives w = sum_k t^(3 2^k)
        let g = fg(64);
        let expect: Vec<(usize, GF4)> = [3, 6, 12, 24, 48].iter().map(|&e| (e, GF4::ONE)).collect();
        assert_eq!(g.w().truncate(64), UniSeries::from_terms(&expect, 64));
    }

    #[test]
    fn inverse_series() {
        let g = fg(64);
        let expect: Vec<(usize, GF4)> = [1, 4, 10, 22, 46].iter().map(|&e| (e, GF4::ONE)).collect();
        assert_eq!(g.iota().truncate(48), UniSeries::from_terms(&expect, 48));
        assert_eq!(g.iota().compose(g.iota()).unwrap(), UniSeries::var(64));
    }

    #[test]
    fn minus_two_series() {
        let g = fg(64);
        assert_eq!(g.m_series(-2).unwrap(), UniSeries::monomial(GF4::ONE, 4, 64));
        assert_eq!(g.m_series(1).unwrap(), UniSeries::var(64));
        assert!(g.m_series(0).unwrap().is_zero());
    }

    #[test]
    fn f_sum_examples() {
        let g = fg(32);
        let t = UniSeries::var(32);
        assert!(g.f_sum(&[t.clone(), g.iota().clone()]).unwrap().is_zero());
        let t4 = UniSeries::monomial(GF4::ONE, 4, 32);
        let s = g.f_sum(&[t.clone(), t4.clone()]).unwrap();
        assert_eq!(s.truncate(6), (&t + &t4).truncate(6));
    }

    #[test]
    fn univariate_sum_matches_bivariate_law() {
        let g = fg(24);
        let a = UniSeries::from_terms(&[(1, GF4::ZETA), (3, GF4::ONE)], 24);
        let b = UniSeries::from_terms(&[(2, GF4::ONE), (5, GF4::ZETA2)], 24);
        let direct = g.add(&a, &b).unwrap();
        let mut acc = UniSeries::zero(24);
        for (e, c) in g.law().terms() {
            let term = &a.pow(e[0] as u64) * &b.pow(e[1] as u64);
            acc = &acc + &term.scale(c);
        }
        assert_eq!(direct, acc);
    }

    #[test]
    fn curve_maps() {
        let g = fg(32);
        let x = Poly::var(0, 2);
        let y = Poly::var(1, 2);
        assert_eq!(g.automorphism_to_series(&x, &y).unwrap(), UniSeries::var(32));
        let (p, q) = g.curve().negation_map();
        assert_eq!(&g.automorphism_to_series(&p, &q).unwrap(), g.iota());
        let bad = &y + &Poly::one(2);
        assert!(matches!(
            g.automorphism_to_series(&x, &bad.scale(GF4::ZETA)),
            Err(Error::NotEndomorphism(_))
        ));
    }

    #[test]
    fn sum_of_vars_low_degree() {
        let g = fg(16);
        let s = g.sum_of_vars(3, 5).unwrap();
        let x = MultiSeries::var(0, 3, 5);
        let y = MultiSeries::var(1, 3, 5);
        let z = MultiSeries::var(2, 3, 5);
        let xy = g.add_multi(&x, &y).unwrap();
        assert_eq!(s, g.add_multi(&xy, &z).unwrap());
    }

    #[test]
    fn two_times_minus_two() {
        let g = fg(48);
        let prod = &g.m_series(2).unwrap() * &g.m_series(-2).unwrap();
        let expect: Vec<(usize, GF4)> = [8, 20, 44].iter().map(|&e| (e, GF4::ONE)).collect();
        assert_eq!(prod.truncate(48), UniSeries::from_terms(&expect, 48));
    }

    #[test]
    fn order_four_automorphism() {
        let g = fg(64);
        let x = Poly::var(0, 2);
        let y = Poly::var(1, 2);
        let p = &x + &Poly::one(2);
        let q = &(&y + &x) + &Poly::constant(GF4::ZETA, 2);
        let i = g.automorphism_to_series(&p, &q).unwrap();
        assert_eq!(i.coeff(1), GF4::ONE);
        let i2 = i.compose(&i).unwrap();
        assert_eq!(&i2, g.iota());
        assert_eq!(i2.compose(&i2).unwrap(), UniSeries::var(64));
    }
}
