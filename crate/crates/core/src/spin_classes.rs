//! The action on F4[x, y, z] = F4[b~2, b~4, b~6], its invariants c, d, e, pairings
//! with Pontryagin classes, the detection matrix and the Klein group determinant.

use std::collections::{BTreeSet, VecDeque};

use rand::Rng;

use crate::base_rings::{Coeff, GF4};
use crate::cubical::{twisted_action, BPoly, Cannibalistic, DeltaReading, RealityRelations};
use crate::error::{Error, Result};
use crate::formal_group::FormalGroup;
use crate::linalg::{determinant, rank};
use crate::poly::Poly;
use crate::series::{Exps, UniSeries};
use crate::stabilizer::{quaternion_to_series, GaloisElement, NamedElements};

pub const NAMES: [&str; 3] = ["x", "y", "z"];

fn var(i: usize) -> Poly<GF4> {
    Poly::var(i, 3)
}

fn cst(c: GF4) -> Poly<GF4> {
    Poly::constant(c, 3)
}

/// A ring endomorphism of F4[x, y, z] given by the images of x, y, z.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineSubstitution {
    pub images: [Poly<GF4>; 3],
}

impl AffineSubstitution {
    pub fn new(images: [Poly<GF4>; 3]) -> Self {
        AffineSubstitution { images }
    }

    pub fn identity() -> Self {
        Self::new([var(0), var(1), var(2)])
    }

    pub fn apply(&self, p: &Poly<GF4>) -> Poly<GF4> {
        p.compose(&self.images)
    }

    /// The substitution P -> self(other(P)).
    pub fn then(&self, other: &AffineSubstitution) -> AffineSubstitution {
        let imgs = other.images.clone().map(|p| self.apply(&p));
        AffineSubstitution::new(imgs)
    }

    /// Matrix and translation when every image has degree at most one.
    pub fn as_affine(&self) -> Option<([[GF4; 3]; 3], [GF4; 3])> {
        let mut a = [[GF4::ZERO; 3]; 3];
        let mut b = [GF4::ZERO; 3];
        for (i, p) in self.images.iter().enumerate() {
            if p.total_degree().unwrap_or(0) > 1 {
                return None;
            }
            b[i] = p.coeff(&[0; 4]);
            for (j, row) in a[i].iter_mut().enumerate() {
                let mut e: Exps = [0; 4];
                e[j] = 1;
                *row = p.coeff(&e);
            }
        }
        Some((a, b))
    }

    pub fn is_invertible_affine(&self) -> bool {
        match self.as_affine() {
            Some((a, _)) => determinant(&a.iter().map(|r| r.to_vec()).collect::<Vec<_>>()) != GF4::ZERO,
            None => false,
        }
    }

    pub fn to_text(&self) -> String {
        let parts: Vec<String> = self.images.iter().map(|p| poly_text(p)).collect();
        format!("({})", parts.join(", "))
    }
}

/// Compact text with "+" joins and no spaces, e.g. "z+zeta*y+1".
pub fn poly_text(p: &Poly<GF4>) -> String {
    let mut keys: Vec<(Exps, GF4)> = p.terms().map(|(e, c)| (*e, *c)).collect();
    keys.sort_by(|a, b| (b.0[2], b.0[1], b.0[0]).cmp(&(a.0[2], a.0[1], a.0[0])));
    if keys.is_empty() {
        return "0".into();
    }
    keys.iter()
        .map(|(e, c)| {
            let mono = Poly::monomial(GF4::ONE, *e, 3).to_text(&NAMES);
            if mono == "1" {
                c.fmt_coeff()
            } else if *c == GF4::ONE {
                mono
            } else {
                format!("{}*{mono}", c.fmt_coeff())
            }
        })
        .collect::<Vec<_>>()
        .join("+")
}

/// The reference table, keyed by the acting element.
pub fn reference_action_table() -> Vec<(&'static str, AffineSubstitution)> {
    let (x, y, z) = (var(0), var(1), var(2));
    let one = cst(GF4::ONE);
    let zt = cst(GF4::ZETA);
    let zt2 = cst(GF4::ZETA2);
    let s = |ps: &[&Poly<GF4>]| ps.iter().fold(Poly::zero(3), |acc, p| &acc + *p);
    vec![
        ("alpha^-2", AffineSubstitution::new([x.clone(), y.clone(), s(&[&z, &one])])),
        (
            "[i,alpha]^-1",
            AffineSubstitution::new([
                s(&[&x, &one]),
                s(&[&y, &x, &one]),
                s(&[&z, &y, &x, &one]),
            ]),
        ),
        (
            "[j,alpha]^-1",
            AffineSubstitution::new([
                s(&[&x, &zt]),
                s(&[&y, &(&zt * &x), &zt2]),
                s(&[&z, &(&zt * &y), &(&zt2 * &x), &one]),
            ]),
        ),
    ]
}

/// Converts a b-polynomial in b_1..b_6 with only even generators left into F4[x, y, z].
pub fn bpoly_to_xyz(p: &BPoly) -> Result<Poly<GF4>> {
    let mut out = Poly::zero(3);
    for (e, c) in p.terms() {
        let mut x: Exps = [0; 4];
        for (i, &k) in e.iter().enumerate() {
            if k == 0 {
                continue;
            }
            let idx = i + 1;
            if idx % 2 == 1 || idx > 6 {
                return Err(Error::Domain(format!("b_{idx} survives the reduction")));
            }
            x[idx / 2 - 1] = k;
        }
        out.add_term(x, *c);
    }
    Ok(out)
}

/// The substitution b~_{2i} -> re_*([z^{2i}] l(z) l_b(g(z))), i = 1, 2, 3; this is the
/// action of g^-1 when l = l_g.
pub fn substitution_from(l: &UniSeries<GF4>, g: &UniSeries<GF4>, rel: &RealityRelations) -> Result<AffineSubstitution> {
    let mut imgs = Vec::new();
    for i in 1..=3 {
        let b = twisted_action(l, g, 2 * i, rel)?;
        let padded = pad_bpoly(&b, 6);
        imgs.push(bpoly_to_xyz(&padded)?);
    }
    Ok(AffineSubstitution::new([imgs[0].clone(), imgs[1].clone(), imgs[2].clone()]))
}

fn pad_bpoly(p: &BPoly, n: usize) -> BPoly {
    let mut out = BPoly::zero(n);
    for (e, c) in p.terms() {
        let mut v = e.clone();
        v.resize(n, 0);
        out.add_term(v, *c);
    }
    out
}

/// The action table computed from the cannibalistic series: g^-1 for g in
/// alpha^2, [i,alpha], [j,alpha].
pub fn derive_action_table(
    fg: &FormalGroup<GF4>,
    can: &Cannibalistic,
    named: &NamedElements,
) -> Result<Vec<(&'static str, AffineSubstitution)>> {
    let rel = RealityRelations::build(fg, 12)?;
    let mut out = Vec::new();
    for (label, g) in [
        ("alpha^-2", named.alpha2),
        ("[i,alpha]^-1", named.comm_i_alpha),
        ("[j,alpha]^-1", named.comm_j_alpha),
    ] {
        let l = can.l_series(fg, &g, 8, DeltaReading::Normalized)?;
        let series = quaternion_to_series(&g, fg, 8)?;
        out.push((label, substitution_from(&l.l, &series, &rel)?));
    }
    Ok(out)
}

/// The untwisted action of h on F4[x, y, z], read from the series of h^-1.
pub fn plain_action(h: &GaloisElement, fg: &FormalGroup<GF4>, rel: &RealityRelations) -> Result<AffineSubstitution> {
    let series = quaternion_to_series(&h.inv()?, fg, 8)?;
    substitution_from(&UniSeries::one(8), &series, rel)
}

/// c = x^4+x, d = y^4+y+x^5+x^2, e = z^2+z+y^2x^2+yx+x^6+x^3.
pub fn invariants_cde() -> [Poly<GF4>; 3] {
    let m = |a: u16, b: u16, c: u16| Poly::monomial(GF4::ONE, [a, b, c, 0], 3);
    let sum = |ms: &[Poly<GF4>]| ms.iter().fold(Poly::zero(3), |acc, p| &acc + p);
    [
        sum(&[m(4, 0, 0), m(1, 0, 0)]),
        sum(&[m(0, 4, 0), m(0, 1, 0), m(5, 0, 0), m(2, 0, 0)]),
        sum(&[m(0, 0, 2), m(0, 0, 1), m(2, 2, 0), m(1, 1, 0), m(6, 0, 0), m(3, 0, 0)]),
    ]
}

/// Leading monomial in lex order with z > y > x.
pub fn leading_monomial(p: &Poly<GF4>) -> Option<Exps> {
    p.terms().map(|(e, _)| *e).max_by_key(|e| (e[2], e[1], e[0]))
}

/// Closure of a set of invertible affine substitutions under composition.
pub fn affine_closure(gens: &[AffineSubstitution], bound: usize) -> Result<usize> {
    type Key = ([[GF4; 3]; 3], [GF4; 3]);
    let key = |s: &AffineSubstitution| -> Result<Key> {
        s.as_affine().ok_or_else(|| Error::Domain("substitution is not affine".into()))
    };
    let mut seen: BTreeSet<Key> = BTreeSet::new();
    let mut queue = VecDeque::new();
    let id = AffineSubstitution::identity();
    seen.insert(key(&id)?);
    queue.push_back(id);
    while let Some(s) = queue.pop_front() {
        for g in gens {
            let t = g.then(&s);
            if seen.insert(key(&t)?) {
                if seen.len() > bound {
                    return Err(Error::Inconsistent(format!("closure exceeds {bound} elements")));
                }
                queue.push_back(t);
            }
        }
    }
    Ok(seen.len())
}

fn monomials_up_to(d: usize) -> Vec<Exps> {
    let mut out = Vec::new();
    for t in 0..=d as u16 {
        for a in (0..=t).rev() {
            for b in (0..=(t - a)).rev() {
                out.push([a, b, t - a - b, 0]);
            }
        }
    }
    out
}

fn coords(p: &Poly<GF4>, basis: &[Exps]) -> Vec<GF4> {
    basis.iter().map(|e| p.coeff(e)).collect()
}

/// Result of the finite-degree generation check.
#[derive(Clone, Debug, PartialEq)]
pub struct DimensionReport {
    pub max_degree: usize,
    pub group_order: usize,
    pub fixed_dim: usize,
    pub span_dim: usize,
}

/// Dimension of the fixed space in F4[x,y,z]_{<=d} against that of F4[c,d,e]_{<=d}.
pub fn invariant_dimension_check(gens: &[AffineSubstitution], d: usize, bound: usize) -> Result<DimensionReport> {
    if d > 10 {
        return Err(Error::InvalidArgument("maximal degree is 10".into()));
    }
    let group_order = affine_closure(gens, bound)?;
    let basis = monomials_up_to(d);
    let n = basis.len();
    let mut rows: Vec<Vec<GF4>> = Vec::new();
    for g in gens {
        // column j of (g - id) is the image of monomial j
        let cols: Vec<Vec<GF4>> = basis
            .iter()
            .map(|e| {
                let m = Poly::monomial(GF4::ONE, *e, 3);
                coords(&(&g.apply(&m) - &m), &basis)
            })
            .collect();
        for r in 0..n {
            rows.push(cols.iter().map(|c| c[r]).collect());
        }
    }
    let fixed_dim = n - rank(&rows, n);
    // elements of F4[c,d,e] of degree <= d are combinations of products whose
    // higher-degree parts cancel; products of degree up to 3d are taken, which are
    // independent (distinct lex-leading monomials), so the intersection dimension is
    // the count minus the rank of their parts above degree d
    let [c, dd, e] = invariants_cde();
    let bound = 3 * d;
    let mut high: Vec<Vec<GF4>> = Vec::new();
    let mut count = 0;
    let mut above: Vec<Exps> = Vec::new();
    let mut products = Vec::new();
    for a in 0..=bound / 4 {
        for b in 0..=bound / 5 {
            for k in 0..=bound / 6 {
                if 4 * a + 5 * b + 6 * k <= bound {
                    let p = &(&c.pow(a as u32) * &dd.pow(b as u32)) * &e.pow(k as u32);
                    for (m, _) in p.terms() {
                        let deg: u16 = m.iter().sum();
                        if deg as usize > d && !above.contains(m) {
                            above.push(*m);
                        }
                    }
                    products.push(p);
                    count += 1;
                }
            }
        }
    }
    for p in &products {
        high.push(coords(p, &above));
    }
    let span_dim = count - rank(&high, above.len());
    Ok(DimensionReport { max_degree: d, group_order, fixed_dim, span_dim })
}

/// <b~_{2i}, p_k> for a single generator (i >= 1): nonzero only for i = k = 1.
pub fn pair_generator(i: usize, k: usize) -> GF4 {
    if i == 1 && k == 1 {
        GF4::ONE
    } else {
        GF4::ZERO
    }
}

/// <monomial, p_k> from the generator pairings, augmentation at k = 0, and the
/// coproduct of p_k.
fn pair_monomial(e: &Exps, k: usize) -> GF4 {
    let factors: Vec<usize> = (0..3).flat_map(|i| std::iter::repeat(i).take(e[i] as usize)).collect();
    // ways[t] = sum over splittings of p_t among the factors seen so far
    let mut ways = vec![GF4::ZERO; k + 1];
    ways[0] = GF4::ONE;
    for &f in &factors {
        let mut next = vec![GF4::ZERO; k + 1];
        for (t, w) in ways.iter().enumerate() {
            if *w == GF4::ZERO {
                continue;
            }
            for (kk, slot) in next.iter_mut().enumerate().skip(t) {
                let single = if kk == t { GF4::ZERO } else { pair_generator(f + 1, kk - t) };
                *slot = *slot + *w * single;
            }
        }
        ways = next;
    }
    ways[k]
}

/// <m, p_k>, extended linearly.
pub fn pair_with_p(m: &Poly<GF4>, k: usize) -> GF4 {
    m.terms().fold(GF4::ZERO, |acc, (e, c)| acc + *c * pair_monomial(e, k))
}

/// The plain actions of i, j, k together with the identity, indexed e, i, j, k.
#[derive(Clone, Debug)]
pub struct KleinAction {
    pub subs: [AffineSubstitution; 4],
}

/// Index of the product in Q8/{+-1} = {e, i, j, k}.
pub fn klein_mul(a: usize, b: usize) -> usize {
    a ^ b
}

impl KleinAction {
    pub fn build(fg: &FormalGroup<GF4>, named: &NamedElements) -> Result<Self> {
        let rel = RealityRelations::build(fg, 12)?;
        Ok(KleinAction {
            subs: [
                AffineSubstitution::identity(),
                plain_action(&named.i, fg, &rel)?,
                plain_action(&named.j, fg, &rel)?,
                plain_action(&named.k, fg, &rel)?,
            ],
        })
    }

    pub fn act(&self, g: usize, a: &Poly<GF4>) -> Poly<GF4> {
        self.subs[g].apply(a)
    }

    /// w.a for w in the group algebra.
    pub fn act_algebra(&self, w: &GroupAlgebraElt, a: &Poly<GF4>) -> Poly<GF4> {
        (0..4).fold(Poly::zero(3), |acc, g| &acc + &self.act(g, a).scale(w.c[g]))
    }

    /// <a, w.p_k> = sum_g w_g <g^-1.a, p_k>; every element is its own inverse mod +-1.
    pub fn pair_against(&self, a: &Poly<GF4>, w: &GroupAlgebraElt, k: usize) -> GF4 {
        (0..4).fold(GF4::ZERO, |acc, g| acc + w.c[g] * pair_with_p(&self.act(g, a), k))
    }
}

/// F4-linear combination of e, i, j, k in F4[Q8/{+-1}].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroupAlgebraElt {
    pub c: [GF4; 4],
}

impl GroupAlgebraElt {
    pub fn basis(g: usize) -> Self {
        let mut c = [GF4::ZERO; 4];
        c[g] = GF4::ONE;
        GroupAlgebraElt { c }
    }

    pub fn mul(&self, o: &GroupAlgebraElt) -> Self {
        let mut c = [GF4::ZERO; 4];
        for a in 0..4 {
            for b in 0..4 {
                c[klein_mul(a, b)] = c[klein_mul(a, b)] + self.c[a] * o.c[b];
            }
        }
        GroupAlgebraElt { c }
    }

    /// i + j + k, i + zeta j + zeta^2 k, i + zeta^2 j + zeta k.
    pub fn xyz() -> [GroupAlgebraElt; 3] {
        let (o, z1, z2) = (GF4::ONE, GF4::ZETA, GF4::ZETA2);
        [
            GroupAlgebraElt { c: [GF4::ZERO, o, o, o] },
            GroupAlgebraElt { c: [GF4::ZERO, o, z1, z2] },
            GroupAlgebraElt { c: [GF4::ZERO, o, z2, z1] },
        ]
    }
}

/// The 5x5 matrix of <a_r, P_c> for a = (1, m, i.m, j.m, k.m), P = (1, p_k, i.p_k, j.p_k, k.p_k).
pub fn detection_matrix(act: &KleinAction, m: &Poly<GF4>, k: usize) -> Vec<Vec<GF4>> {
    let mut rows: Vec<Poly<GF4>> = vec![Poly::one(3)];
    for g in 0..4 {
        rows.push(act.act(g, m));
    }
    rows.iter()
        .map(|a| {
            let mut r = vec![pair_with_p(a, 0)];
            for g in 0..4 {
                r.push(act.pair_against(a, &GroupAlgebraElt::basis(g), k));
            }
            r
        })
        .collect()
}

/// Both sides of det <{a, x.a, y.a, z.a}, {p, x.p, y.p, z.p}> = <a, p> + <x.a, p>.
pub fn q8_det_identity(act: &KleinAction, a: &Poly<GF4>, k: usize) -> (GF4, GF4) {
    let one = GroupAlgebraElt::basis(0);
    let [x, y, z] = GroupAlgebraElt::xyz();
    let ws = [one, x, y, z];
    let rows: Vec<Poly<GF4>> = ws.iter().map(|w| act.act_algebra(w, a)).collect();
    let m: Vec<Vec<GF4>> = rows
        .iter()
        .map(|r| ws.iter().map(|w| act.pair_against(r, w, k)).collect())
        .collect();
    let lhs = determinant(&m);
    let rhs = pair_with_p(a, k) + pair_with_p(&act.act_algebra(&x, a), k);
    (lhs, rhs)
}

pub fn random_poly<R: Rng + ?Sized>(rng: &mut R, max_degree: usize) -> Poly<GF4> {
    let mut p = Poly::zero(3);
    for e in monomials_up_to(max_degree) {
        if rng.gen_bool(0.3) {
            p.add_term(e, GF4::random(rng));
        }
    }
    p
}

/// (coefficient of z^i in phi(z)^j) for j = 0..=i.
pub fn pushforward_beta(phi: &UniSeries<GF4>, i: usize) -> Result<Vec<GF4>> {
    if phi.coeff(0) != GF4::ZERO {
        return Err(Error::Domain("phi(0) must vanish".into()));
    }
    if phi.prec() <= i {
        return Err(Error::Precision(format!("phi needed mod z^{}", i + 1)));
    }
    let phi = phi.truncate(i + 1);
    let mut p = UniSeries::one(i + 1);
    let mut out = Vec::with_capacity(i + 1);
    for _ in 0..=i {
        out.push(p.coeff(i));
        p = &p * &phi;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invariants_under_reference_table() {
        let inv = invariants_cde();
        for (_, s) in reference_action_table() {
            assert!(s.is_invertible_affine());
            for p in &inv {
                assert_eq!(&s.apply(p), p);
            }
        }
        let lead: Vec<Exps> = inv.iter().map(|p| leading_monomial(p).unwrap()).collect();
        assert_eq!(lead, vec![[4, 0, 0, 0], [0, 4, 0, 0], [0, 0, 2, 0]]);
    }

    #[test]
    fn low_degree_dimensions() {
        let gens: Vec<_> = reference_action_table().into_iter().map(|(_, s)| s).collect();
        let r3 = invariant_dimension_check(&gens, 3, 10_000).unwrap();
        assert_eq!((r3.fixed_dim, r3.span_dim), (1, 1));
        let r4 = invariant_dimension_check(&gens, 4, 10_000).unwrap();
        assert_eq!((r4.fixed_dim, r4.span_dim), (2, 2));
    }

    #[test]
    fn pairing_examples() {
        let x = var(0);
        assert_eq!(pair_with_p(&x, 1), GF4::ONE);
        assert_eq!(pair_with_p(&var(1), 1), GF4::ZERO);
        assert_eq!(pair_with_p(&x.pow(4), 4), GF4::ONE);
        assert_eq!(pair_with_p(&x.pow(3), 4), GF4::ZERO);
        assert_eq!(pair_with_p(&Poly::one(3), 0), GF4::ONE);
        let [c, d, _] = invariants_cde();
        assert_eq!(pair_with_p(&(&c * &d.pow(3)), 4), GF4::ZERO);
    }

    #[test]
    fn pushforward_examples() {
        let z4 = UniSeries::monomial(GF4::ONE, 4, 30);
        let v = pushforward_beta(&z4, 8).unwrap();
        assert_eq!(v.iter().filter(|c| **c != GF4::ZERO).count(), 1);
        assert_eq!(v[2], GF4::ONE);
        assert!(pushforward_beta(&z4, 6).unwrap().iter().all(|c| *c == GF4::ZERO));
        let z = UniSeries::var(30);
        assert_eq!(pushforward_beta(&z, 5).unwrap()[5], GF4::ONE);
    }

    #[test]
    fn klein_group_algebra() {
        let [x, _, _] = GroupAlgebraElt::xyz();
        assert_eq!(x.mul(&x), GroupAlgebraElt::basis(0));
    }
}
