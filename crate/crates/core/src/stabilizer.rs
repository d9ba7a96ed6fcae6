//! Endomorphisms x + yT of the formal group over F4, the stabilizer group with its
//! Galois bit, T-adic digits, filtration levels and finite quotients.
//!
//! T^2 = -2 and T a = sigma(a) T. Products compose series with the outer factor
//! applied last: (gh)(t) = g(h(t)).

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::ops::Mul;

use rand::Rng;

use crate::base_rings::{hensel_sqrt, teichmuller, PadicInt, WittInt, GF4};
use crate::error::{Error, Result};
use crate::formal_group::FormalGroup;
use crate::poly::Poly;
use crate::series::UniSeries;

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Quaternion {
    x: WittInt,
    y: WittInt,
}

impl Quaternion {
    pub fn new(x: WittInt, y: WittInt) -> Self {
        let n = x.precision().min(y.precision());
        Quaternion { x: x.reduce(n), y: y.reduce(n) }
    }

    pub fn scalar(x: WittInt) -> Self {
        Self::new(x, WittInt::new(0, 0, x.precision()))
    }

    pub fn one(n: u32) -> Self {
        Self::scalar(WittInt::new(1, 0, n))
    }

    /// The Frobenius endomorphism T.
    pub fn t(n: u32) -> Self {
        Self::new(WittInt::new(0, 0, n), WittInt::new(1, 0, n))
    }

    pub fn x(&self) -> WittInt {
        self.x
    }

    pub fn y(&self) -> WittInt {
        self.y
    }

    pub fn precision(&self) -> u32 {
        self.x.precision()
    }

    pub fn reduce(&self, n: u32) -> Self {
        Self::new(self.x.reduce(n), self.y.reduce(n))
    }

    /// sigma applied to both entries.
    pub fn sigma(&self) -> Self {
        Self::new(self.x.conj(), self.y.conj())
    }

    /// (sigma(x), -y), so that g * g.bar() = |g|.
    pub fn bar(&self) -> Self {
        Self::new(self.x.conj(), -self.y)
    }

    /// Reduced norm x sigma(x) + 2 y sigma(y).
    pub fn det(&self) -> PadicInt {
        self.x.norm() + PadicInt::exact(2) * self.y.norm()
    }

    pub fn is_unit(&self) -> bool {
        self.x.is_unit()
    }

    pub fn inv(&self) -> Result<Self> {
        let d = self.det();
        let d_inv = d.inv().map_err(|_| Error::Domain(format!("{self} is not a unit")))?;
        let b = self.bar();
        Ok(Self::new(b.x.scale(d_inv), b.y.scale(d_inv)))
    }

    pub fn pow(&self, e: i64) -> Result<Self> {
        let base = if e < 0 { self.inv()? } else { *self };
        let mut acc = Self::one(self.precision());
        for _ in 0..e.unsigned_abs() {
            acc = acc * base;
        }
        Ok(acc)
    }

    pub fn random_unit<R: Rng + ?Sized>(rng: &mut R, n: u32) -> Self {
        loop {
            let x = WittInt::random(rng, n);
            if x.is_unit() {
                return Self::new(x, WittInt::random(rng, n));
            }
        }
    }

    /// Left T-adic digits a_0 .. a_{m-1} with gamma = sum a_n T^n.
    pub fn digits(&self, m: usize) -> Result<TDigits> {
        let need = m.div_ceil(2) as u32 + 1;
        if self.precision() < need {
            return Err(Error::Precision(format!(
                "{m} digits need Witt precision {need}, have {}",
                self.precision()
            )));
        }
        // gamma = a_0 + gamma' T with gamma' = (y, (a_0 - x) / 2)
        let (mut x, mut y) = (self.x, self.y);
        let mut out = Vec::with_capacity(m);
        for _ in 0..m {
            let a = x.reduce_mod2();
            out.push(a);
            let next_y = (teichmuller(a, x.precision()) - x).shr_exact(1)?;
            x = y;
            y = next_y;
        }
        Ok(TDigits(out))
    }

    /// Sum of Teichmuller digits times powers of T, at Witt precision n.
    pub fn from_digits(d: &TDigits, n: u32) -> Self {
        let mut x = WittInt::new(0, 0, n);
        let mut y = WittInt::new(0, 0, n);
        let mut pow = PadicInt::new(1, n);
        for (i, a) in d.0.iter().enumerate() {
            let term = teichmuller(*a, n).scale(pow);
            if i % 2 == 0 {
                x = x + term;
            } else {
                y = y + term;
                pow = pow * PadicInt::new(-2, n);
            }
        }
        Self::new(x, y)
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;
    fn mul(self, o: Quaternion) -> Quaternion {
        let two = PadicInt::exact(2);
        let x = self.x * o.x - (self.y * o.y.conj()).scale(two);
        let y = self.x * o.y + self.y * o.x.conj();
        Quaternion::new(x, y)
    }
}

impl fmt::Display for Quaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) + ({})T", self.x, self.y)
    }
}

impl fmt::Debug for Quaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct TDigits(pub Vec<GF4>);

impl TDigits {
    pub fn parse(s: &str) -> Result<Self> {
        s.split(',').map(|p| GF4::parse(p.trim())).collect::<Result<Vec<_>>>().map(TDigits)
    }
}

impl fmt::Display for TDigits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|a| a.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// An element (gamma, eps) of the stabilizer group extended by Galois.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct GaloisElement {
    pub gamma: Quaternion,
    pub eps: bool,
}

impl GaloisElement {
    pub fn new(gamma: Quaternion, eps: bool) -> Self {
        GaloisElement { gamma, eps }
    }

    pub fn from_quaternion(gamma: Quaternion) -> Self {
        GaloisElement { gamma, eps: false }
    }

    pub fn one(n: u32) -> Self {
        Self::from_quaternion(Quaternion::one(n))
    }

    pub fn det(&self) -> PadicInt {
        self.gamma.det()
    }

    pub fn inv(&self) -> Result<Self> {
        let g = self.gamma.inv()?;
        Ok(GaloisElement { gamma: if self.eps { g.sigma() } else { g }, eps: self.eps })
    }

    pub fn pow(&self, e: i64) -> Result<Self> {
        let base = if e < 0 { self.inv()? } else { *self };
        let mut acc = Self::one(self.gamma.precision());
        for _ in 0..e.unsigned_abs() {
            acc = acc * base;
        }
        Ok(acc)
    }

    pub fn digits(&self, m: usize) -> Result<TDigits> {
        self.gamma.digits(m)
    }

    /// "a0,a1,...;eps"
    pub fn to_digit_string(&self, m: usize) -> Result<String> {
        Ok(format!("{};{}", self.digits(m)?, self.eps as u8))
    }

    pub fn parse(s: &str, n: u32) -> Result<Self> {
        let (d, e) = s
            .split_once(';')
            .ok_or_else(|| Error::Parse(format!("expected digits;eps, got {s:?}")))?;
        let eps = match e.trim() {
            "0" => false,
            "1" => true,
            other => return Err(Error::Parse(format!("bad Galois bit {other:?}"))),
        };
        Ok(GaloisElement::new(Quaternion::from_digits(&TDigits::parse(d)?, n), eps))
    }
}

impl Mul for GaloisElement {
    type Output = GaloisElement;
    fn mul(self, o: GaloisElement) -> GaloisElement {
        let g2 = if self.eps { o.gamma.sigma() } else { o.gamma };
        GaloisElement { gamma: self.gamma * g2, eps: self.eps ^ o.eps }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CommutatorConvention {
    /// [g, h] = g h g^-1 h^-1
    Standard,
    /// [g, h] = g^-1 h^-1 g h
    Alternate,
}

impl CommutatorConvention {
    pub fn name(&self) -> &'static str {
        match self {
            CommutatorConvention::Standard => "ghg^-1h^-1",
            CommutatorConvention::Alternate => "g^-1h^-1gh",
        }
    }
}

pub fn commutator(
    g: &GaloisElement,
    h: &GaloisElement,
    conv: CommutatorConvention,
) -> Result<GaloisElement> {
    let (gi, hi) = (g.inv()?, h.inv()?);
    Ok(match conv {
        CommutatorConvention::Standard => *g * *h * gi * hi,
        CommutatorConvention::Alternate => gi * hi * *g * *h,
    })
}

/// Number of digits that influence a series mod t^prec.
pub fn digits_for_precision(prec: usize) -> usize {
    let mut m = 0;
    while (1usize << m) < prec {
        m += 1;
    }
    m
}

/// The mod-m reduction of g as a series: the F-sum of a_i t^(2^i).
pub fn quaternion_to_series(
    g: &GaloisElement,
    fg: &FormalGroup<GF4>,
    prec: usize,
) -> Result<UniSeries<GF4>> {
    if prec > fg.precision() {
        return Err(Error::Precision(format!(
            "formal group known to precision {}, {prec} requested",
            fg.precision()
        )));
    }
    let m = digits_for_precision(prec);
    let d = g.digits(m)?;
    let terms: Vec<UniSeries<GF4>> = d
        .0
        .iter()
        .enumerate()
        .filter(|(_, a)| **a != GF4::ZERO)
        .map(|(i, a)| UniSeries::monomial(*a, 1 << i, prec))
        .collect();
    Ok(fg.f_sum(&terms)?.truncate(prec))
}

/// Reads m digits off an endomorphism series by F-subtracting a_n t^(2^n) in turn.
pub fn series_to_digits(
    phi: &UniSeries<GF4>,
    fg: &FormalGroup<GF4>,
    m: usize,
) -> Result<TDigits> {
    let top = 1usize << m;
    if phi.prec() < top {
        return Err(Error::Precision(format!(
            "{m} digits need the series mod t^{top}, have t^{}",
            phi.prec()
        )));
    }
    if phi.coeff(1) == GF4::ZERO {
        return Err(Error::Domain("series has zero linear coefficient".into()));
    }
    let mut rest = phi.truncate(top.min(fg.precision()));
    let prec = rest.prec();
    let mut digits = Vec::with_capacity(m);
    for n in 0..m {
        let pos = 1usize << n;
        if let Some(v) = rest.valuation() {
            if v < pos {
                return Err(Error::NotEndomorphism(format!(
                    "coefficient at t^{v} off the 2-power positions"
                )));
            }
        }
        let a = rest.coeff(pos);
        digits.push(a);
        if a != GF4::ZERO {
            let term = UniSeries::monomial(a, pos, prec);
            let neg = fg.iota().truncate(prec).compose(&term)?;
            rest = fg.add(&rest, &neg)?;
        }
    }
    if let Some(v) = rest.valuation() {
        return Err(Error::NotEndomorphism(format!(
            "coefficient at t^{v} off the 2-power positions"
        )));
    }
    Ok(TDigits(digits))
}

/// Quaternion determined by m digits of an endomorphism series; precision floor(m/2).
pub fn series_to_quaternion(
    phi: &UniSeries<GF4>,
    fg: &FormalGroup<GF4>,
    m: usize,
) -> Result<Quaternion> {
    let d = series_to_digits(phi, fg, m)?;
    Ok(Quaternion::from_digits(&d, (m / 2) as u32))
}

/// Largest n with g in F_{n/2}, or None when g agrees with 1 to all known digits.
pub fn filtration_level(g: &GaloisElement, horizon: usize) -> Result<Option<usize>> {
    let d = g.digits(horizon)?;
    if d.0[0] != GF4::ONE {
        return Ok(Some(0));
    }
    Ok(d.0.iter().skip(1).position(|a| *a != GF4::ZERO).map(|p| p + 1))
}

/// (eps, a0, a1/a0^2, a2/a0) in F4.
pub fn digit_profile(g: &GaloisElement) -> Result<(bool, GF4, GF4, GF4)> {
    let d = g.digits(3)?;
    let a0 = d.0[0];
    let inv = a0.inv()?;
    Ok((g.eps, a0, d.0[1] * inv * inv, d.0[2] * inv))
}

/// sqrt(-7) in Z_2 at precision n with the given residue mod 4.
pub fn sqrt_minus_seven(n: u32, residue: u8) -> Result<PadicInt> {
    hensel_sqrt(PadicInt::new(-7, n + 1), residue)
}

/// The order-4 curve automorphism x -> x + 1, y -> y + x + zeta.
pub fn i_automorphism() -> (Poly<GF4>, Poly<GF4>) {
    let x = Poly::var(0, 2);
    let y = Poly::var(1, 2);
    let p = &x + &Poly::one(2);
    let q = &(&y + &x) + &Poly::constant(GF4::ZETA, 2);
    (p, q)
}

/// Lifts the element read off the series of i to full Witt precision.
///
/// An element of trace 0 and norm 1 of the form x + yT with x, y in Z[zeta] has
/// x = +-1/(1 + 2 zeta) and y = u/(1 + 2 zeta) for a sixth root of unity u. The
/// digits read from the series single out one of these twelve; the candidate is
/// accepted only if it matches every digit the series determines.
pub fn lift_order_four(observed: &TDigits, n: u32) -> Result<Quaternion> {
    let s_inv = WittInt::new(1, 2, n).inv()?;
    let zeta = WittInt::new(0, 1, n);
    let mut roots = Vec::new();
    let mut u = WittInt::new(1, 0, n);
    for _ in 0..3 {
        roots.push(u);
        roots.push(-u);
        u = u * zeta;
    }
    let mut found = Vec::new();
    for sign in [1i64, -1] {
        for &u in &roots {
            let x = s_inv.scale(PadicInt::new(sign, n));
            let cand = Quaternion::new(x, u * s_inv);
            if cand.digits(observed.0.len()).ok().as_ref() == Some(observed) {
                found.push(cand);
            }
        }
    }
    match found.as_slice() {
        [one] => Ok(*one),
        [] => Err(Error::Inconsistent("no order-4 lift matches the observed digits".into())),
        _ => Err(Error::Inconsistent("observed digits do not determine the lift".into())),
    }
}

#[derive(Clone, Debug)]
pub struct NamedElements {
    pub convention: CommutatorConvention,
    pub pi: GaloisElement,
    pub alpha: GaloisElement,
    pub omega: GaloisElement,
    pub sigma: GaloisElement,
    pub i: GaloisElement,
    pub j: GaloisElement,
    pub k: GaloisElement,
    pub alpha2: GaloisElement,
    pub comm_i_alpha: GaloisElement,
    pub comm_j_alpha: GaloisElement,
    pub comm_i_alpha_sq: GaloisElement,
    pub comm_j_alpha_sq: GaloisElement,
    pub pi_over_alpha: GaloisElement,
}

impl NamedElements {
    /// All named elements at Witt precision n; i is read off the series of the
    /// curve automorphism at the formal group's precision.
    pub fn build(
        fg: &FormalGroup<GF4>,
        n: u32,
        conv: CommutatorConvention,
        sqrt_residue: u8,
    ) -> Result<Self> {
        let e = |x: WittInt, y: WittInt| GaloisElement::from_quaternion(Quaternion::new(x, y));
        let zero = WittInt::new(0, 0, n);
        let pi = e(WittInt::new(1, 2, n), zero);
        let s = WittInt::from_padic(sqrt_minus_seven(n, sqrt_residue)?);
        let alpha = e(WittInt::new(1, -2, n) * s.inv()?, zero);
        let omega = e(WittInt::new(0, 1, n), zero);
        let sigma = GaloisElement::new(Quaternion::one(n), true);
        let (p, q) = i_automorphism();
        let series = fg.automorphism_to_series(&p, &q)?;
        let m = digits_for_precision(fg.precision());
        let observed = series_to_digits(&series, fg, m)?;
        let i = GaloisElement::from_quaternion(lift_order_four(&observed, n)?);
        let omega2 = omega * omega;
        let j = omega * i * omega2;
        let k = omega * j * omega2;
        let alpha2 = alpha * alpha;
        let comm_i_alpha = commutator(&i, &alpha, conv)?;
        let comm_j_alpha = commutator(&j, &alpha, conv)?;
        Ok(NamedElements {
            convention: conv,
            pi,
            alpha,
            omega,
            sigma,
            i,
            j,
            k,
            alpha2,
            comm_i_alpha,
            comm_j_alpha,
            comm_i_alpha_sq: comm_i_alpha * comm_i_alpha,
            comm_j_alpha_sq: comm_j_alpha * comm_j_alpha,
            pi_over_alpha: pi * alpha.inv()?,
        })
    }

    pub fn table(&self) -> Vec<(&'static str, GaloisElement)> {
        vec![
            ("pi", self.pi),
            ("alpha", self.alpha),
            ("omega", self.omega),
            ("sigma", self.sigma),
            ("i", self.i),
            ("j", self.j),
            ("k", self.k),
            ("alpha^2", self.alpha2),
            ("[i,alpha]", self.comm_i_alpha),
            ("[j,alpha]", self.comm_j_alpha),
            ("[i,alpha]^2", self.comm_i_alpha_sq),
            ("[j,alpha]^2", self.comm_j_alpha_sq),
            ("pi/alpha", self.pi_over_alpha),
        ]
    }

    pub fn get(&self, name: &str) -> Result<GaloisElement> {
        self.table()
            .into_iter()
            .find(|(k, _)| *k == name)
            .map(|(_, g)| g)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown element {name:?}")))
    }
}

/// The quotient of the stabilizer group by F_{m/2}, with elements stored as digit
/// tuples and products computed in the quaternion order.
#[derive(Clone, Copy, Debug)]
pub struct FiniteQuotient {
    depth: usize,
    witt_prec: u32,
}

pub const MAX_QUOTIENT_DEPTH: usize = 8;

impl FiniteQuotient {
    pub fn new(depth: usize) -> Result<Self> {
        if depth == 0 || depth > MAX_QUOTIENT_DEPTH {
            return Err(Error::InvalidArgument(format!(
                "quotient depth must be 1..={MAX_QUOTIENT_DEPTH}, got {depth}"
            )));
        }
        Ok(FiniteQuotient { depth, witt_prec: depth.div_ceil(2) as u32 + 1 })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn project(&self, g: &Quaternion) -> Result<TDigits> {
        g.reduce(self.witt_prec).digits(self.depth)
    }

    pub fn lift(&self, d: &TDigits) -> Quaternion {
        Quaternion::from_digits(d, self.witt_prec)
    }

    pub fn mul(&self, a: &TDigits, b: &TDigits) -> Result<TDigits> {
        self.project(&(self.lift(a) * self.lift(b)))
    }

    pub fn identity(&self) -> TDigits {
        let mut v = vec![GF4::ZERO; self.depth];
        v[0] = GF4::ONE;
        TDigits(v)
    }

    /// Subgroup generated by the given elements (finite, so closure under products suffices).
    pub fn closure(&self, gens: &[TDigits]) -> Result<BTreeSet<TDigits>> {
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::new();
        let id = self.identity();
        seen.insert(id.clone());
        queue.push_back(id);
        while let Some(g) = queue.pop_front() {
            for h in gens {
                let p = self.mul(&g, h)?;
                if seen.insert(p.clone()) {
                    queue.push_back(p);
                }
            }
        }
        Ok(seen)
    }

    /// All elements of F_{level/2} / F_{depth/2}.
    pub fn filtration_subgroup(&self, level: usize) -> BTreeSet<TDigits> {
        let free = self.depth.saturating_sub(level.max(1));
        let mut out = BTreeSet::new();
        for code in 0..(1usize << (2 * free)) {
            let mut v = self.identity().0;
            for s in 0..free {
                v[self.depth - free + s] = GF4::from_bits(((code >> (2 * s)) & 3) as u8);
            }
            out.insert(TDigits(v));
        }
        out
    }

    /// Bits to which the determinant is well defined on the quotient.
    pub fn det_bits(&self) -> u32 {
        self.depth.div_ceil(2) as u32
    }

    pub fn det(&self, d: &TDigits) -> PadicInt {
        self.lift(d).det().reduce(self.det_bits())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formal_group::WeierstrassCurve;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const N: u32 = 8;

    fn q(a: i64, b: i64, c: i64, d: i64) -> Quaternion {
        Quaternion::new(WittInt::new(a, b, N), WittInt::new(c, d, N))
    }

    #[test]
    fn t_squared_is_minus_two() {
        let t = Quaternion::t(N);
        assert_eq!(t * t, q(-2, 0, 0, 0));
        let z = q(0, 1, 0, 0);
        assert_eq!(z * t, t * z.sigma());
    }

    #[test]
    fn determinants() {
        let pi = q(1, 2, 0, 0);
        assert_eq!(pi.det(), PadicInt::new(3, N));
        assert_eq!(Quaternion::one(N).det(), PadicInt::new(1, N));
        let s = WittInt::from_padic(sqrt_minus_seven(N, 1).unwrap());
        let alpha = Quaternion::scalar(WittInt::new(1, -2, N) * s.inv().unwrap());
        assert_eq!(alpha.det(), PadicInt::new(-1, N));
    }

    #[test]
    fn digit_examples() {
        let d = |g: Quaternion| g.digits(7).unwrap().to_string();
        assert_eq!(d(Quaternion::one(N)), "1,0,0,0,0,0,0");
        assert_eq!(d(q(1, 2, 0, 0)), "1,0,z,0,z,0,0");
        assert_eq!(d(q(0, 1, 0, 0)), "z,0,0,0,0,0,0");
        assert!(q(1, 0, 0, 0).digits(16).is_err());
    }

    #[test]
    fn digits_round_trip_and_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let g = Quaternion::random_unit(&mut rng, N);
            let d = g.digits(12).unwrap();
            let back = Quaternion::from_digits(&d, 6);
            assert_eq!(back, g.reduce(6));
            let gi = g.inv().unwrap();
            assert_eq!(g * gi, Quaternion::one(N));
            assert_eq!(gi * g, Quaternion::one(N));
        }
    }

    #[test]
    fn series_examples() {
        let fg = FormalGroup::build(WeierstrassCurve::c0(), 32).unwrap();
        let ser = |g: Quaternion| {
            quaternion_to_series(&GaloisElement::from_quaternion(g), &fg, 32).unwrap()
        };
        assert_eq!(ser(Quaternion::one(N)), UniSeries::var(32));
        assert_eq!(ser(q(0, 1, 0, 0)), UniSeries::monomial(GF4::ZETA, 1, 32));
        let pi = ser(q(1, 2, 0, 0));
        let expect = UniSeries::from_terms(&[(1, GF4::ONE), (4, GF4::ZETA)], 5);
        assert_eq!(pi.truncate(5), expect);
        let bad = UniSeries::from_terms(&[(1, GF4::ONE), (3, GF4::ONE)], 32);
        assert!(matches!(series_to_digits(&bad, &fg, 5), Err(Error::NotEndomorphism(_))));
    }

    #[test]
    fn quotient_orders() {
        let fq = FiniteQuotient::new(4).unwrap();
        assert_eq!(fq.filtration_subgroup(3).len(), 4);
        let fq6 = FiniteQuotient::new(6).unwrap();
        assert_eq!(fq6.filtration_subgroup(4).len(), 16);
        let gens: Vec<TDigits> = fq6.filtration_subgroup(4).into_iter().collect();
        assert_eq!(fq6.closure(&gens).unwrap().len(), 16);
    }

    #[test]
    fn profiles() {
        let one = GaloisElement::one(N);
        assert_eq!(digit_profile(&one).unwrap(), (false, GF4::ONE, GF4::ZERO, GF4::ZERO));
        let omega = GaloisElement::from_quaternion(q(0, 1, 0, 0));
        assert_eq!(digit_profile(&omega).unwrap(), (false, GF4::ZETA, GF4::ZERO, GF4::ZERO));
    }

    #[test]
    fn galois_product_rule() {
        let omega = GaloisElement::from_quaternion(q(0, 1, 0, 0));
        let sigma = GaloisElement::new(Quaternion::one(N), true);
        let lhs = sigma * omega * sigma.inv().unwrap();
        assert_eq!(lhs.gamma, q(0, 1, 0, 0).sigma());
        assert!(!lhs.eps);
    }

    fn named(conv: CommutatorConvention) -> NamedElements {
        let fg = FormalGroup::build(WeierstrassCurve::c0(), 128).unwrap();
        NamedElements::build(&fg, N, conv, 1).unwrap()
    }

    #[test]
    fn quaternion_group_relations() {
        let ne = named(CommutatorConvention::Standard);
        let minus_one = GaloisElement::from_quaternion(q(-1, 0, 0, 0));
        for g in [ne.i, ne.j, ne.k] {
            assert_eq!(g * g, minus_one);
            assert_eq!(g.det(), PadicInt::new(1, N));
        }
        assert_eq!(ne.i * ne.j * ne.k, minus_one);
        assert_eq!(ne.omega.pow(3).unwrap(), GaloisElement::one(N));
    }

    #[test]
    fn levels_and_quotients() {
        for conv in [CommutatorConvention::Standard, CommutatorConvention::Alternate] {
            let ne = named(conv);
            for g in [ne.pi * ne.pi, ne.alpha2, ne.pi * ne.alpha, ne.comm_i_alpha, ne.comm_j_alpha] {
                let lvl = filtration_level(&g, 12).unwrap();
                assert!(lvl.map_or(true, |l| l >= 3), "{conv:?} {:?}", g.digits(12));
            }
            let fq = FiniteQuotient::new(6).unwrap();
            let gens: Vec<TDigits> = [ne.alpha2, ne.comm_i_alpha_sq, ne.comm_j_alpha_sq, ne.pi_over_alpha]
                .iter()
                .map(|g| fq.project(&g.gamma).unwrap())
                .collect();
            let closure = fq.closure(&gens).unwrap();
            assert_eq!(closure, fq.filtration_subgroup(4), "{conv:?}");
            let fq7 = FiniteQuotient::new(7).unwrap();
            let gens: Vec<TDigits> = [ne.alpha2, ne.comm_i_alpha, ne.comm_j_alpha]
                .iter()
                .map(|g| fq7.project(&g.gamma).unwrap())
                .collect();
            let closure = fq7.closure(&gens).unwrap();
            let det_one: BTreeSet<TDigits> = fq7
                .filtration_subgroup(3)
                .into_iter()
                .filter(|d| fq7.det(d) == PadicInt::new(1, fq7.det_bits()))
                .collect();
            eprintln!("{conv:?}: closure {} det-one {}", closure.len(), det_one.len());
            assert_eq!(closure, det_one);
        }
    }
}
