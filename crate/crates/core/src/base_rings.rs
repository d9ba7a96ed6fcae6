//! Exact scalar rings: F4, W(F4)/2^n presented as (Z/2^n)[z]/(z^2+z+1), and Z/2^n.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};
use rand::Rng;

use crate::error::{Error, Result};

/// Largest supported 2-adic precision. Values built from integer literals carry it,
/// so they never limit the precision of a computation they take part in.
pub const EXACT_BITS: u32 = 64;

fn mask(n: u32) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Scalar ring usable as a power-series coefficient.
pub trait Coeff:
    Copy
    + PartialEq
    + fmt::Debug
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    /// True when 2 = 0 in the ring, so squaring is additive.
    const CHAR_TWO: bool;

    fn try_inv(&self) -> Option<Self>;

    fn from_i64(n: i64) -> Self;

    /// Text used by the canonical series format.
    fn fmt_coeff(&self) -> String;

    fn square(&self) -> Self {
        *self * *self
    }
}

// ---------------------------------------------------------------------------
// F4

/// Element c0 + c1*z of F4, with z^2 + z + 1 = 0, packed as bits (c1 c0).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct GF4(u8);

const GF4_MUL: [[u8; 4]; 4] = [[0, 0, 0, 0], [0, 1, 2, 3], [0, 2, 3, 1], [0, 3, 1, 2]];

impl GF4 {
    pub const ZERO: GF4 = GF4(0);
    pub const ONE: GF4 = GF4(1);
    /// The generator z.
    pub const ZETA: GF4 = GF4(2);
    /// z^2 = 1 + z.
    pub const ZETA2: GF4 = GF4(3);
    pub const ALL: [GF4; 4] = [GF4(0), GF4(1), GF4(2), GF4(3)];
    pub const UNITS: [GF4; 3] = [GF4(1), GF4(2), GF4(3)];

    pub fn new(c0: u8, c1: u8) -> Self {
        GF4((c0 & 1) | ((c1 & 1) << 1))
    }

    pub fn from_bits(bits: u8) -> Self {
        GF4(bits & 3)
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn c0(self) -> u8 {
        self.0 & 1
    }

    pub fn c1(self) -> u8 {
        self.0 >> 1
    }

    pub fn inv(self) -> Result<Self> {
        match self.0 {
            0 => Err(Error::Domain("inverse of 0 in F4".into())),
            1 => Ok(GF4(1)),
            2 => Ok(GF4(3)),
            _ => Ok(GF4(2)),
        }
    }

    pub fn frobenius(self) -> Self {
        self * self
    }

    pub fn pow(self, e: u64) -> Self {
        if self.0 == 0 {
            return if e == 0 { GF4::ONE } else { GF4::ZERO };
        }
        let mut r = GF4::ONE;
        for _ in 0..(e % 3) {
            r = r * self;
        }
        r
    }

    /// Parses the digit alphabet {0, 1, z, z2}.
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "0" => Ok(GF4::ZERO),
            "1" => Ok(GF4::ONE),
            "z" => Ok(GF4::ZETA),
            "z2" => Ok(GF4::ZETA2),
            other => Err(Error::Parse(format!("not an F4 digit: {other:?}"))),
        }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        GF4(rng.gen_range(0..4))
    }

    pub fn random_unit<R: Rng + ?Sized>(rng: &mut R) -> Self {
        GF4(rng.gen_range(1..4))
    }
}

impl fmt::Display for GF4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(["0", "1", "z", "z2"][self.0 as usize])
    }
}

impl fmt::Debug for GF4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Add for GF4 {
    type Output = GF4;
    #[inline]
    fn add(self, o: GF4) -> GF4 {
        GF4(self.0 ^ o.0)
    }
}

impl Sub for GF4 {
    type Output = GF4;
    #[inline]
    fn sub(self, o: GF4) -> GF4 {
        GF4(self.0 ^ o.0)
    }
}

impl Neg for GF4 {
    type Output = GF4;
    #[inline]
    fn neg(self) -> GF4 {
        self
    }
}

impl Mul for GF4 {
    type Output = GF4;
    #[inline]
    fn mul(self, o: GF4) -> GF4 {
        GF4(GF4_MUL[self.0 as usize][o.0 as usize])
    }
}

impl Zero for GF4 {
    fn zero() -> Self {
        GF4::ZERO
    }
    fn is_zero(&self) -> bool {
        self.0 == 0
    }
}

impl One for GF4 {
    fn one() -> Self {
        GF4::ONE
    }
}

impl Coeff for GF4 {
    const CHAR_TWO: bool = true;

    fn try_inv(&self) -> Option<Self> {
        self.inv().ok()
    }

    fn from_i64(n: i64) -> Self {
        GF4((n & 1) as u8)
    }

    fn fmt_coeff(&self) -> String {
        ["0", "1", "zeta", "zeta^2"][self.0 as usize].to_string()
    }
}

/// Field operation selector for [`gf4_arith`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gf4Op {
    Add,
    Mul,
    Inv,
    Frobenius,
}

/// Unary operations ignore `b`.
pub fn gf4_arith(a: GF4, b: GF4, which: Gf4Op) -> Result<GF4> {
    match which {
        Gf4Op::Add => Ok(a + b),
        Gf4Op::Mul => Ok(a * b),
        Gf4Op::Inv => a.inv(),
        Gf4Op::Frobenius => Ok(a.frobenius()),
    }
}

// ---------------------------------------------------------------------------
// Z/2^n

/// Residue mod 2^n. Arithmetic between different precisions keeps the smaller one.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct PadicInt {
    v: u64,
    n: u32,
}

impl PadicInt {
    pub fn new(v: i64, n: u32) -> Self {
        assert!((1..=EXACT_BITS).contains(&n), "precision out of range: {n}");
        PadicInt { v: (v as u64) & mask(n), n }
    }

    pub fn from_u64(v: u64, n: u32) -> Self {
        assert!((1..=EXACT_BITS).contains(&n), "precision out of range: {n}");
        PadicInt { v: v & mask(n), n }
    }

    /// An integer known to full working precision.
    pub fn exact(v: i64) -> Self {
        PadicInt::new(v, EXACT_BITS)
    }

    pub fn precision(&self) -> u32 {
        self.n
    }

    /// Residue in [0, 2^n).
    pub fn residue(&self) -> u64 {
        self.v
    }

    /// Representative in (-2^(n-1), 2^(n-1)].
    pub fn signed(&self) -> i64 {
        if self.n >= 64 {
            return self.v as i64;
        }
        let half = 1u64 << (self.n - 1);
        if self.v > half {
            (self.v as i128 - (1i128 << self.n)) as i64
        } else {
            self.v as i64
        }
    }

    pub fn reduce(&self, n: u32) -> Self {
        PadicInt::from_u64(self.v, n.min(self.n))
    }

    pub fn is_unit(&self) -> bool {
        self.v & 1 == 1
    }

    /// 2-adic valuation, or the precision if the residue is 0.
    pub fn valuation(&self) -> u32 {
        if self.v == 0 {
            self.n
        } else {
            self.v.trailing_zeros()
        }
    }

    /// Bit i of the residue; None past the precision.
    pub fn bit(&self, i: u32) -> Option<bool> {
        if i >= self.n {
            None
        } else {
            Some((self.v >> i) & 1 == 1)
        }
    }

    pub fn inv(&self) -> Result<Self> {
        if !self.is_unit() {
            return Err(Error::Domain(format!("{self} is not a unit")));
        }
        // Newton iteration x <- x(2 - ax) doubles the number of correct bits.
        let a = self.v;
        let mut x: u64 = 1;
        for _ in 0..6 {
            x = x.wrapping_mul(2u64.wrapping_sub(a.wrapping_mul(x)));
        }
        Ok(PadicInt::from_u64(x, self.n))
    }

    /// Exact division by 2^k, losing k bits of precision.
    pub fn shr_exact(&self, k: u32) -> Result<Self> {
        if k == 0 {
            return Ok(*self);
        }
        if k >= self.n {
            return Err(Error::Precision(format!("cannot divide {self} by 2^{k}")));
        }
        if self.v & mask(k) != 0 {
            return Err(Error::NotDivisible(format!("{self} by 2^{k}")));
        }
        Ok(PadicInt::from_u64(self.v >> k, self.n - k))
    }

    pub fn pow(&self, mut e: u64) -> Self {
        let mut base = *self;
        let mut acc = PadicInt::from_u64(1, self.n);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R, n: u32) -> Self {
        PadicInt::from_u64(rng.gen(), n)
    }
}

impl fmt::Display for PadicInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} mod 2^{}", self.signed(), self.n)
    }
}

impl fmt::Debug for PadicInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Add for PadicInt {
    type Output = PadicInt;
    fn add(self, o: PadicInt) -> PadicInt {
        PadicInt::from_u64(self.v.wrapping_add(o.v), self.n.min(o.n))
    }
}

impl Sub for PadicInt {
    type Output = PadicInt;
    fn sub(self, o: PadicInt) -> PadicInt {
        PadicInt::from_u64(self.v.wrapping_sub(o.v), self.n.min(o.n))
    }
}

impl Mul for PadicInt {
    type Output = PadicInt;
    fn mul(self, o: PadicInt) -> PadicInt {
        PadicInt::from_u64(self.v.wrapping_mul(o.v), self.n.min(o.n))
    }
}

impl Neg for PadicInt {
    type Output = PadicInt;
    fn neg(self) -> PadicInt {
        PadicInt::from_u64(self.v.wrapping_neg(), self.n)
    }
}

impl Zero for PadicInt {
    fn zero() -> Self {
        PadicInt::exact(0)
    }
    fn is_zero(&self) -> bool {
        self.v == 0
    }
}

impl One for PadicInt {
    fn one() -> Self {
        PadicInt::exact(1)
    }
}

impl Coeff for PadicInt {
    const CHAR_TWO: bool = false;

    fn try_inv(&self) -> Option<Self> {
        self.inv().ok()
    }

    fn from_i64(n: i64) -> Self {
        PadicInt::exact(n)
    }

    fn fmt_coeff(&self) -> String {
        self.signed().to_string()
    }
}

/// Square root of `target` in Z_2 with the given residue mod 4.
///
/// The root is determined mod 2^(n-1) by the target mod 2^n, so the result
/// has one bit less precision than the input.
pub fn hensel_sqrt(target: PadicInt, residue_condition: u8) -> Result<PadicInt> {
    if residue_condition != 1 && residue_condition != 3 {
        return Err(Error::Domain(format!(
            "residue condition must be 1 or 3, got {residue_condition}"
        )));
    }
    let n = target.precision();
    if n < 4 {
        return Err(Error::Precision(format!(
            "need the target mod 16 at least, got {target}"
        )));
    }
    if target.residue() & 7 != 1 {
        return Err(Error::Domain(format!("{target} is not a square mod 8")));
    }
    let t = target.residue();
    let mut r = residue_condition as u64;
    for k in 3..n {
        // r^2 = t mod 2^k; fix bit k-1 of r to get agreement mod 2^(k+1).
        let m = mask(k + 1);
        if r.wrapping_mul(r) & m != t & m {
            r = r.wrapping_add(1u64 << (k - 1));
        }
    }
    let out = PadicInt::from_u64(r, n - 1);
    if out.residue() & 3 != residue_condition as u64 {
        return Err(Error::Domain("no root with the requested residue".into()));
    }
    Ok(out)
}

/// Binomial coefficient C(n, k) evaluated 2-adically.
///
/// The result has precision `n.precision() - v2(k!)`.
pub fn mahler_binomial(k: u64, n: PadicInt) -> Result<PadicInt> {
    let v = k - k.count_ones() as u64;
    let p = n.precision() as u64;
    if v >= p {
        return Err(Error::Precision(format!(
            "C(n, {k}) needs more than {p} bits of n"
        )));
    }
    let mut num: u64 = 1;
    let mut den_odd: u64 = 1;
    for i in 0..k {
        num = num.wrapping_mul(n.residue().wrapping_sub(i));
        let mut d = i + 1;
        d >>= d.trailing_zeros();
        den_odd = den_odd.wrapping_mul(d);
    }
    let num = PadicInt::from_u64(num, p as u32).shr_exact(v as u32)?;
    let den = PadicInt::from_u64(den_odd, num.precision()).inv()?;
    Ok(num * den)
}

// ---------------------------------------------------------------------------
// (Z/2^n)[z]/(z^2+z+1)

/// a + b*z in W(F4)/2^n.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct WittInt {
    a: u64,
    b: u64,
    n: u32,
}

impl WittInt {
    pub fn new(a: i64, b: i64, n: u32) -> Self {
        assert!((1..=EXACT_BITS).contains(&n), "precision out of range: {n}");
        WittInt { a: (a as u64) & mask(n), b: (b as u64) & mask(n), n }
    }

    pub fn exact(a: i64, b: i64) -> Self {
        WittInt::new(a, b, EXACT_BITS)
    }

    pub fn from_padic(p: PadicInt) -> Self {
        WittInt { a: p.residue(), b: 0, n: p.precision() }
    }

    pub fn zeta() -> Self {
        WittInt::exact(0, 1)
    }

    pub fn precision(&self) -> u32 {
        self.n
    }

    pub fn a(&self) -> PadicInt {
        PadicInt::from_u64(self.a, self.n)
    }

    pub fn b(&self) -> PadicInt {
        PadicInt::from_u64(self.b, self.n)
    }

    pub fn reduce(&self, n: u32) -> Self {
        let n = n.min(self.n);
        WittInt { a: self.a & mask(n), b: self.b & mask(n), n }
    }

    /// Frobenius conjugation a + b z -> a + b z^2 = (a - b) - b z.
    pub fn conj(&self) -> Self {
        WittInt {
            a: self.a.wrapping_sub(self.b) & mask(self.n),
            b: self.b.wrapping_neg() & mask(self.n),
            n: self.n,
        }
    }

    pub fn conj_pow(&self, e: u8) -> Self {
        if e & 1 == 1 {
            self.conj()
        } else {
            *self
        }
    }

    /// x * conj(x), an element of Z/2^n.
    pub fn norm(&self) -> PadicInt {
        let (a, b) = (self.a, self.b);
        let v = a.wrapping_mul(a).wrapping_sub(a.wrapping_mul(b)).wrapping_add(b.wrapping_mul(b));
        PadicInt::from_u64(v, self.n)
    }

    /// x + conj(x) = 2a - b.
    pub fn trace(&self) -> PadicInt {
        PadicInt::from_u64(self.a.wrapping_mul(2).wrapping_sub(self.b), self.n)
    }

    pub fn reduce_mod2(&self) -> GF4 {
        GF4::new((self.a & 1) as u8, (self.b & 1) as u8)
    }

    pub fn is_unit(&self) -> bool {
        self.reduce_mod2() != GF4::ZERO
    }

    pub fn is_zero(&self) -> bool {
        self.a == 0 && self.b == 0
    }

    pub fn inv(&self) -> Result<Self> {
        let nrm = self.norm();
        if !nrm.is_unit() {
            return Err(Error::Domain(format!("{self} is not a unit")));
        }
        Ok(self.conj().scale(nrm.inv()?))
    }

    pub fn scale(&self, p: PadicInt) -> Self {
        let n = self.n.min(p.precision());
        WittInt {
            a: self.a.wrapping_mul(p.residue()) & mask(n),
            b: self.b.wrapping_mul(p.residue()) & mask(n),
            n,
        }
    }

    /// Exact division by 2^k, losing k bits of precision.
    pub fn shr_exact(&self, k: u32) -> Result<Self> {
        let a = self.a().shr_exact(k)?;
        let b = self.b().shr_exact(k)?;
        Ok(WittInt { a: a.residue(), b: b.residue(), n: a.precision() })
    }

    /// 2-adic valuation, or the precision if zero.
    pub fn valuation(&self) -> u32 {
        self.a().valuation().min(self.b().valuation())
    }

    pub fn pow(&self, mut e: u64) -> Self {
        let mut base = *self;
        let mut acc = WittInt::new(1, 0, self.n);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R, n: u32) -> Self {
        WittInt { a: rng.gen::<u64>() & mask(n), b: rng.gen::<u64>() & mask(n), n }
    }
}

impl fmt::Display for WittInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+{}*z mod 2^{}", self.a().signed(), self.b().signed(), self.n)
    }
}

impl fmt::Debug for WittInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Add for WittInt {
    type Output = WittInt;
    fn add(self, o: WittInt) -> WittInt {
        let n = self.n.min(o.n);
        WittInt { a: self.a.wrapping_add(o.a) & mask(n), b: self.b.wrapping_add(o.b) & mask(n), n }
    }
}

impl Sub for WittInt {
    type Output = WittInt;
    fn sub(self, o: WittInt) -> WittInt {
        let n = self.n.min(o.n);
        WittInt { a: self.a.wrapping_sub(o.a) & mask(n), b: self.b.wrapping_sub(o.b) & mask(n), n }
    }
}

impl Neg for WittInt {
    type Output = WittInt;
    fn neg(self) -> WittInt {
        WittInt { a: self.a.wrapping_neg() & mask(self.n), b: self.b.wrapping_neg() & mask(self.n), n: self.n }
    }
}

impl Mul for WittInt {
    type Output = WittInt;
    fn mul(self, o: WittInt) -> WittInt {
        // (a + bz)(c + dz) = (ac - bd) + (ad + bc - bd) z, using z^2 = -1 - z.
        let n = self.n.min(o.n);
        let ac = self.a.wrapping_mul(o.a);
        let bd = self.b.wrapping_mul(o.b);
        let ad = self.a.wrapping_mul(o.b);
        let bc = self.b.wrapping_mul(o.a);
        WittInt {
            a: ac.wrapping_sub(bd) & mask(n),
            b: ad.wrapping_add(bc).wrapping_sub(bd) & mask(n),
            n,
        }
    }
}

impl Zero for WittInt {
    fn zero() -> Self {
        WittInt::exact(0, 0)
    }
    fn is_zero(&self) -> bool {
        self.a == 0 && self.b == 0
    }
}

impl One for WittInt {
    fn one() -> Self {
        WittInt::exact(1, 0)
    }
}

impl Coeff for WittInt {
    const CHAR_TWO: bool = false;

    fn try_inv(&self) -> Option<Self> {
        self.inv().ok()
    }

    fn from_i64(n: i64) -> Self {
        WittInt::exact(n, 0)
    }

    fn fmt_coeff(&self) -> String {
        format!("({}+{}*zeta)", self.a().signed(), self.b().signed())
    }
}

/// Ring operation selector for [`witt_arith`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WittOp {
    Add,
    Mul,
    Neg,
    Inv,
    Conj,
}

/// Checked arithmetic: operands must share precision. Unary operations ignore `y`.
pub fn witt_arith(x: WittInt, y: WittInt, which: WittOp) -> Result<WittInt> {
    let binary = matches!(which, WittOp::Add | WittOp::Mul);
    if binary && x.precision() != y.precision() {
        return Err(Error::PrecisionMismatch(x.precision(), y.precision()));
    }
    match which {
        WittOp::Add => Ok(x + y),
        WittOp::Mul => Ok(x * y),
        WittOp::Neg => Ok(-x),
        WittOp::Inv => x.inv(),
        WittOp::Conj => Ok(x.conj()),
    }
}

/// Teichmuller lift: 0, 1, z, z^2 are their own lifts in this presentation.
pub fn teichmuller(c: GF4, n: u32) -> WittInt {
    match c.bits() {
        0 => WittInt::new(0, 0, n),
        1 => WittInt::new(1, 0, n),
        2 => WittInt::new(0, 1, n),
        _ => WittInt::new(-1, -1, n),
    }
}

impl Coeff for i64 {
    const CHAR_TWO: bool = false;

    fn try_inv(&self) -> Option<Self> {
        match *self {
            1 => Some(1),
            -1 => Some(-1),
            _ => None,
        }
    }

    fn from_i64(n: i64) -> Self {
        n
    }

    fn fmt_coeff(&self) -> String {
        self.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gf4_field_tables() {
        let z = GF4::ZETA;
        assert_eq!(z * GF4::ZETA2, GF4::ONE);
        assert_eq!(z.frobenius(), GF4::ZETA2);
        assert_eq!(z.inv().unwrap(), GF4::ZETA2);
        assert_eq!(z * z + z + GF4::ONE, GF4::ZERO);
        assert!(GF4::ZERO.inv().is_err());
        for a in GF4::ALL {
            assert_eq!(a.frobenius().frobenius(), a);
            for b in GF4::ALL {
                assert_eq!((a + b).frobenius(), a.frobenius() + b.frobenius());
                assert_eq!((a * b).frobenius(), a.frobenius() * b.frobenius());
            }
        }
        assert_eq!(GF4::parse("z2").unwrap(), GF4::ZETA2);
    }

    #[test]
    fn witt_examples() {
        let x = WittInt::new(1, 2, 8);
        assert_eq!(x.conj(), WittInt::new(-1, -2, 8));
        let z = WittInt::new(0, 1, 8);
        assert_eq!(z * z, WittInt::new(-1, -1, 8));
        assert_eq!(z * z * z, WittInt::new(1, 0, 8));
    }

    #[test]
    fn witt_inverse_matches_brute_force() {
        let x = WittInt::new(1, 2, 4);
        let mut found = Vec::new();
        for a in 0..16 {
            for b in 0..16 {
                let u = WittInt::new(a, b, 4);
                if u * x == WittInt::new(1, 0, 4) {
                    found.push(u);
                }
            }
        }
        assert_eq!(found, vec![x.inv().unwrap()]);
    }

    #[test]
    fn witt_precision_mismatch_is_reported() {
        let x = WittInt::new(1, 0, 8);
        let y = WittInt::new(1, 0, 6);
        assert!(matches!(witt_arith(x, y, WittOp::Add), Err(Error::PrecisionMismatch(8, 6))));
        assert!(witt_arith(WittInt::new(2, 0, 8), x, WittOp::Inv).is_err());
    }

    #[test]
    fn hensel_matches_brute_force() {
        fn brute(modulus: i64) -> Vec<i64> {
            // roots mod 2*modulus, reported mod modulus
            let mut out: Vec<i64> = (0..2 * modulus)
                .filter(|x| (x * x + 7).rem_euclid(2 * modulus) == 0 && x % 4 == 1)
                .map(|x| x % modulus)
                .collect();
            out.sort();
            out.dedup();
            out
        }
        let r16 = hensel_sqrt(PadicInt::new(-7, 5), 1).unwrap();
        assert_eq!(brute(16), vec![r16.residue() as i64]);
        assert_eq!(r16.residue(), 5);
        let r32 = hensel_sqrt(PadicInt::new(-7, 6), 1).unwrap();
        assert_eq!(brute(32), vec![r32.residue() as i64]);
        assert_eq!(r32.residue(), 21);
        assert_eq!(hensel_sqrt(PadicInt::exact(1), 1).unwrap(), PadicInt::new(1, 63));
    }

    #[test]
    fn hensel_branches_are_negatives() {
        let t = PadicInt::new(-7, 20);
        let r1 = hensel_sqrt(t, 1).unwrap();
        let r3 = hensel_sqrt(t, 3).unwrap();
        assert_eq!(r1, -r3);
        assert_eq!(r1 * r1, t.reduce(19));
        assert!(hensel_sqrt(PadicInt::exact(5), 1).is_err());
    }

    #[test]
    fn teichmuller_is_multiplicative_section() {
        for a in GF4::ALL {
            assert_eq!(teichmuller(a, 8).reduce_mod2(), a);
            for b in GF4::ALL {
                assert_eq!(teichmuller(a * b, 8), teichmuller(a, 8) * teichmuller(b, 8));
            }
        }
    }

    #[test]
    fn mahler_examples() {
        assert_eq!(mahler_binomial(2, PadicInt::exact(5)).unwrap().signed(), 10);
        assert_eq!(mahler_binomial(3, PadicInt::exact(2)).unwrap().signed(), 0);
        assert_eq!(mahler_binomial(3, PadicInt::exact(-1)).unwrap().signed(), -1);
        assert!(mahler_binomial(8, PadicInt::new(3, 4)).is_err());
    }
}
