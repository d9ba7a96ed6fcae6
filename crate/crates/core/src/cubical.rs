//! k-structures, the delta operator, the cubical structure of a Weierstrass curve,
//! real 1-structures and the twisted action on the b-generators.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::base_rings::{Coeff, PadicInt, GF4};
use crate::error::{Error, Result};
use crate::formal_group::FormalGroup;
use crate::linalg::solve_affine;
use crate::series::{Exps, MultiSeries, UniSeries};
use crate::stabilizer::{quaternion_to_series, GaloisElement};

/// A power series in k variables together with the outcome of the axiom checks.
#[derive(Clone)]
pub struct KStructure<C> {
    pub f: MultiSeries<C>,
    pub verified: bool,
}

/// Which reading of delta^2(g / g'(0)) enters the cannibalistic expression.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DeltaReading {
    /// delta^2 of the unit series g(t) / (g'(0) t).
    Normalized,
    /// delta^2 of g(t) / g'(0) itself, which carries the extra factor delta^2(t).
    Raw,
}

impl DeltaReading {
    pub fn name(&self) -> &'static str {
        match self {
            DeltaReading::Normalized => "g(t)/(g'(0)t)",
            DeltaReading::Raw => "g(t)/g'(0)",
        }
    }
}

fn uni_as_multi<C: Coeff>(l: &UniSeries<C>, deg: usize) -> MultiSeries<C> {
    let terms: Vec<(Exps, C)> = l
        .coeffs()
        .iter()
        .enumerate()
        .take(deg + 1)
        .map(|(i, c)| ([i as u16, 0, 0, 0], *c))
        .collect();
    MultiSeries::from_terms(1, deg, &terms)
}

/// delta f (x_1, .., x_{k+1}) = f(x_1, x_3, ..) f(x_2, x_3, ..) / f(x_1 +_F x_2, x_3, ..).
pub fn delta<C: Coeff>(f: &MultiSeries<C>, fg: &FormalGroup<C>) -> Result<MultiSeries<C>> {
    let k = f.nvars();
    let deg = f.deg();
    let rest: Vec<usize> = (2..=k).collect();
    let mut map1 = vec![0];
    map1.extend(&rest);
    let mut map2 = vec![1];
    map2.extend(&rest);
    let a = f.embed(k + 1, &map1);
    let b = f.embed(k + 1, &map2);
    let law = fg.law().truncate(deg.min(fg.law().deg()));
    let mut var_map = vec![0];
    var_map.extend(&rest);
    let c = f.substitute_var(0, &law, k + 1, &var_map, &[0, 1])?;
    (&a * &b).exact_div(&c)
}

/// Structural checks: f(0, ..) = 1, symmetry, and for k >= 2 the cocycle identity.
pub fn check_k_structure<C: Coeff>(f: &MultiSeries<C>, fg: &FormalGroup<C>) -> Result<()> {
    let k = f.nvars();
    let one = MultiSeries::one(k, f.deg());
    if f.set_var_zero(0) != one {
        return Err(Error::Axiom("f(0, ..) != 1".into()));
    }
    for i in 1..k {
        let mut perm: Vec<usize> = (0..k).collect();
        perm.swap(0, i);
        if f.permute(&perm) != *f {
            return Err(Error::Axiom(format!("f is not symmetric in x1, x{}", i + 1)));
        }
    }
    if k >= 2 {
        let r = cocycle_residual(f, fg)?;
        if !r.is_zero() {
            return Err(Error::Axiom("cocycle identity fails".into()));
        }
    }
    Ok(())
}

/// f(x1, x2, ..) f(x0, x1 +_F x2, ..) - f(x0, x1, ..) f(x0 +_F x1, x2, ..) in k+1 variables.
pub fn cocycle_residual<C: Coeff>(f: &MultiSeries<C>, fg: &FormalGroup<C>) -> Result<MultiSeries<C>> {
    let k = f.nvars();
    let n = k + 1;
    let deg = f.deg();
    let law = fg.law().truncate(deg.min(fg.law().deg()));
    let tail: Vec<usize> = (3..n).collect();
    // variables x0 .. xk are indices 0 .. k
    let mut m_a = vec![1, 2];
    m_a.extend(&tail);
    let a = f.embed(n, &m_a);
    let mut m_b = vec![0, 0];
    m_b.extend(&tail);
    let b = f.substitute_var(1, &law, n, &m_b, &[1, 2])?;
    let mut m_c = vec![0, 1];
    m_c.extend(&tail);
    let c = f.embed(n, &m_c);
    let mut m_d = vec![0, 2];
    m_d.extend(&tail);
    let d = f.substitute_var(0, &law, n, &m_d, &[0, 1])?;
    Ok(&(&a * &b) - &(&c * &d))
}

/// Precomputed compositions for delta^2 of univariate series at a fixed degree.
pub struct Delta2Context<C> {
    deg: usize,
    s3_pows: Vec<MultiSeries<C>>,
    f_pows: Vec<MultiSeries<C>>,
}

impl<C: Coeff> Delta2Context<C> {
    pub fn new(fg: &FormalGroup<C>, deg: usize) -> Result<Self> {
        let law = fg.law().truncate(deg.min(fg.law().deg()));
        if law.deg() < deg {
            return Err(Error::Precision(format!("law known to degree {}", law.deg())));
        }
        let s3 = fg.sum_of_vars(3, deg)?;
        let mut s3_pows = vec![MultiSeries::one(3, deg)];
        let mut f_pows = vec![MultiSeries::one(2, deg)];
        for _ in 1..=deg {
            s3_pows.push(s3_pows.last().expect("nonempty") * &s3);
            f_pows.push(f_pows.last().expect("nonempty") * &law);
        }
        Ok(Delta2Context { deg, s3_pows, f_pows })
    }

    pub fn deg(&self) -> usize {
        self.deg
    }

    fn combine(pows: &[MultiSeries<C>], l: &UniSeries<C>, deg: usize) -> Result<MultiSeries<C>> {
        if l.prec() <= deg {
            return Err(Error::Precision(format!(
                "series known mod z^{} but degree {deg} needed",
                l.prec()
            )));
        }
        let mut acc = MultiSeries::zero(pows[0].nvars(), deg);
        let mut c = acc.coeffs().to_vec();
        for (j, p) in pows.iter().enumerate() {
            let a = l.coeff(j);
            if a.is_zero() {
                continue;
            }
            for (dst, src) in c.iter_mut().zip(p.coeffs()) {
                if !src.is_zero() {
                    *dst = *dst + a * *src;
                }
            }
        }
        for (i, e) in crate::series::exps_table(acc.nvars(), deg).iter().enumerate() {
            acc.set(e, c[i]);
        }
        Ok(acc)
    }

    /// The seven substitutions l(x), l(y), l(z), l(x+y+z), l(x+y), l(x+z), l(y+z).
    fn pieces(&self, l: &UniSeries<C>) -> Result<[MultiSeries<C>; 7]> {
        let d = self.deg;
        let single = uni_as_multi(l, d);
        let lf = Self::combine(&self.f_pows, l, d)?;
        Ok([
            single.embed(3, &[0]),
            single.embed(3, &[1]),
            single.embed(3, &[2]),
            Self::combine(&self.s3_pows, l, d)?,
            lf.embed(3, &[0, 1]),
            lf.embed(3, &[0, 2]),
            lf.embed(3, &[1, 2]),
        ])
    }

    /// delta^2 l = l(x) l(y) l(z) l(x+y+z) / (l(x+y) l(x+z) l(y+z)), sums taken in F.
    pub fn delta2(&self, l: &UniSeries<C>) -> Result<MultiSeries<C>> {
        let [a, b, c, s, xy, xz, yz] = self.pieces(l)?;
        let num = &(&(&a * &b) * &c) * &s;
        let den = &(&xy * &xz) * &yz;
        num.exact_div(&den)
    }

    /// Linear part of delta^2 at 1: f(x)+f(y)+f(z)+f(x+y+z)-f(x+y)-f(x+z)-f(y+z).
    pub fn linear(&self, f: &UniSeries<C>) -> Result<MultiSeries<C>> {
        let [a, b, c, s, xy, xz, yz] = self.pieces(f)?;
        Ok(&(&(&(&a + &b) + &c) + &s) - &(&(&xy + &xz) + &yz))
    }
}

/// The cubical structure of the curve, normalized by its constant term.
///
/// Uses det[[1, t_i, w_i]] = V h(t) and t_i w_j - t_j w_i = t_i t_j (t_j - t_i) D(t_i, t_j),
/// V the Vandermonde product, so the determinant over Vandermonde quotient times
/// the pole-clearing factors becomes H u1 u2 u3 F12 F13 F23 / (D12 D13 D23 S) with
/// H = sum_n w_n h_{n-2}, D = divided difference of w/t, u = w/t^3, S = t1+t2+t3 in F.
pub fn canonical_three_structure<C: Coeff>(fg: &FormalGroup<C>, deg: usize) -> Result<KStructure<C>> {
    if deg < 8 {
        return Err(Error::InvalidArgument("degree must be at least 8".into()));
    }
    let work = deg + 4;
    if work > fg.precision() {
        return Err(Error::Precision(format!(
            "degree {deg} needs the formal group to precision {work}"
        )));
    }
    let w = fg.w();
    let wc = |n: usize| if n < w.prec() { w.coeff(n) } else { C::zero() };
    let table = crate::series::exps_table(3, work);
    let mut h = MultiSeries::zero(3, work);
    for e in &table {
        let d = (e[0] + e[1] + e[2]) as usize;
        h.set(e, wc(d + 2));
    }
    let mut dphi = MultiSeries::zero(2, work);
    for e in &crate::series::exps_table(2, work) {
        let d = (e[0] + e[1]) as usize;
        dphi.set(e, wc(d + 2));
    }
    let u = UniSeries::from_coeffs((0..=work).map(|n| wc(n + 3)).collect(), work + 1);
    let um = uni_as_multi(&u, work);
    let law = fg.law().truncate(work);
    let pairs = [[0usize, 1], [0, 2], [1, 2]];
    let mut num = &(&h * &um.embed(3, &[0])) * &(&um.embed(3, &[1]) * &um.embed(3, &[2]));
    let mut den = fg.sum_of_vars(3, work)?;
    for p in pairs {
        num = &num * &law.embed(3, &p);
        den = &den * &dphi.embed(3, &p);
    }
    let raw = num.exact_div(&den)?;
    let c0 = raw
        .constant_term()
        .try_inv()
        .ok_or_else(|| Error::Inconsistent("3-structure has non-unit constant term".into()))?;
    let f = raw.scale(c0).truncate(deg);
    check_k_structure(&f, fg)?;
    Ok(KStructure { f, verified: true })
}

/// The cannibalistic expression for an element with series g and determinant det:
/// s(gx, gy, gz) delta^2(g/g'(0)) / (s^((det+1)/2) s(ix, iy, iz)^((det-1)/2)).
pub fn cannibalistic_rhs(
    g: &UniSeries<GF4>,
    det: PadicInt,
    s: &MultiSeries<GF4>,
    fg: &FormalGroup<GF4>,
    ctx: &Delta2Context<GF4>,
    reading: DeltaReading,
) -> Result<MultiSeries<GF4>> {
    let deg = s.deg();
    if ctx.deg() != deg {
        return Err(Error::InvalidArgument("context and structure degrees differ".into()));
    }
    if g.prec() < deg + 2 {
        return Err(Error::Precision(format!("series of g needed mod z^{}", deg + 2)));
    }
    let g1 = g.coeff(1);
    let g1_inv = g1
        .try_inv()
        .ok_or_else(|| Error::Domain("series has zero linear coefficient".into()))?;
    let gs = g.truncate(deg + 1);
    let sg = s.map_each_var(&[gs.clone(), gs.clone(), gs])?;
    // g(t) / (g'(0) t)
    let ghat = UniSeries::new(g.coeffs()[1..].to_vec()).scale(g1_inv).truncate(deg + 1);
    let mut d2 = ctx.delta2(&ghat)?;
    if reading == DeltaReading::Raw {
        let t = UniSeries::var(deg + 5);
        d2 = &d2 * &delta2_of_coordinate(fg, &t, deg)?;
    }
    let num = &sg * &d2;
    if !det.is_unit() {
        return Err(Error::Domain("determinant is not a unit".into()));
    }
    let one = PadicInt::exact(1);
    let e_plus = (det + one).shr_exact(1)?;
    let e_minus = (det - one).shr_exact(1)?;
    let iota = fg.iota().truncate(deg + 1);
    let s_bar = s.map_each_var(&[iota.clone(), iota.clone(), iota])?;
    let den = &s.two_adic_power(e_plus)? * &s_bar.two_adic_power(e_minus)?;
    num.exact_div(&den)
}

/// delta^2 of the coordinate t itself: xyz (x+y+z) / ((x+y)(x+z)(y+z)), sums in F.
fn delta2_of_coordinate(
    fg: &FormalGroup<GF4>,
    _t: &UniSeries<GF4>,
    deg: usize,
) -> Result<MultiSeries<GF4>> {
    let work = deg + 1;
    let x = MultiSeries::var(0, 3, work);
    let y = MultiSeries::var(1, 3, work);
    let z = MultiSeries::var(2, 3, work);
    let s = fg.sum_of_vars(3, work)?;
    let law = fg.law().truncate(work);
    let num = &(&(&x * &y) * &z) * &s;
    let den = &(&law.embed(3, &[0, 1]) * &law.embed(3, &[0, 2])) * &law.embed(3, &[1, 2]);
    let q = num.exact_div(&den)?;
    Ok(q)
}

/// A solved real 1-structure, known mod z^order.
#[derive(Clone, Debug, PartialEq)]
pub struct RealOneStructure {
    pub l: UniSeries<GF4>,
    pub order: usize,
}

impl RealOneStructure {
    pub fn to_text(&self) -> String {
        self.l.to_text("z")
    }
}

/// Bound on explored branches of the solver.
const MAX_SOLVER_NODES: usize = 20_000;

/// Finds the real 1-structure l with delta^2 l = rhs to the working degree and returns
/// it mod z^order; fails if none exists or if the data leave l mod z^order ambiguous.
///
/// With l = l0 + nu, nu = O(z^n), delta^2(l) = delta^2(l0) (1 + L(nu/l0)) mod degree 2n,
/// L the linear part, so each step is an affine system over F4 together with the
/// (linear) reality conditions. Unknowns the system does not fix are branched on.
pub fn solve_real_one_structure(
    rhs: &MultiSeries<GF4>,
    fg: &FormalGroup<GF4>,
    ctx: &Delta2Context<GF4>,
    order: usize,
) -> Result<RealOneStructure> {
    let d = ctx.deg();
    if rhs.deg() != d || rhs.nvars() != 3 {
        return Err(Error::InvalidArgument("right-hand side must be trivariate at the context degree".into()));
    }
    if rhs.constant_term() != GF4::ONE {
        return Err(Error::Domain("right-hand side must have constant term 1".into()));
    }
    if order > d + 1 {
        return Err(Error::Precision(format!("order {order} exceeds working degree {d}")));
    }
    let mut solver = Solver {
        rhs,
        ctx,
        iota: fg.iota().truncate(d + 1),
        d,
        order,
        leaves: BTreeSet::new(),
        nodes: 0,
        iota_pows: Vec::new(),
    };
    solver.iota_pows = iota_power_table(&solver.iota, d);
    solver.explore(UniSeries::one(d + 1), 1)?;
    let mut leaves = solver.leaves.into_iter();
    match (leaves.next(), leaves.next()) {
        (Some(l), None) => Ok(RealOneStructure {
            l: UniSeries::from_coeffs(l.into_iter().map(GF4::from_bits).collect(), order),
            order,
        }),
        (None, _) => Err(Error::Inconsistent(
            "no real 1-structure has this delta^2 at the working degree".into(),
        )),
        (Some(_), Some(_)) => Err(Error::Inconsistent(format!(
            "working degree {d} does not determine l mod z^{order}"
        ))),
    }
}

/// Rows j of [z^j](iota^i - z^i) for i, j <= d.
fn iota_power_table(iota: &UniSeries<GF4>, d: usize) -> Vec<Vec<GF4>> {
    let mut out = vec![vec![GF4::ZERO; d + 1]];
    let mut p = UniSeries::one(d + 1);
    for i in 1..=d {
        p = &p * iota;
        let mut row: Vec<GF4> = p.coeffs().to_vec();
        row.resize(d + 1, GF4::ZERO);
        row[i] = row[i] - GF4::ONE;
        out.push(row);
    }
    out
}

struct Solver<'a> {
    rhs: &'a MultiSeries<GF4>,
    ctx: &'a Delta2Context<GF4>,
    iota: UniSeries<GF4>,
    iota_pows: Vec<Vec<GF4>>,
    d: usize,
    order: usize,
    leaves: BTreeSet<Vec<u8>>,
    nodes: usize,
}

impl Solver<'_> {
    fn explore(&mut self, l0: UniSeries<GF4>, n: usize) -> Result<()> {
        self.nodes += 1;
        if self.nodes > MAX_SOLVER_NODES {
            return Err(Error::Inconsistent("real 1-structure search exceeded its node budget".into()));
        }
        let d = self.d;
        if n > d {
            self.leaves.insert(l0.coeffs()[..self.order].iter().map(|c| c.bits()).collect());
            return Ok(());
        }
        let q = self.rhs.exact_div(&self.ctx.delta2(&l0)?)?;
        let table = crate::series::exps_table(3, d);
        for (idx, e) in table.iter().enumerate() {
            let deg = (e[0] + e[1] + e[2]) as usize;
            if deg >= n {
                break;
            }
            let want = if idx == 0 { GF4::ONE } else { GF4::ZERO };
            if q.coeffs()[idx] != want {
                return Ok(());
            }
        }
        let hi = (2 * n).min(d + 1);
        let unknowns: Vec<usize> = (n..hi).collect();
        let l0_inv = l0.inverse()?;
        let mut rows: Vec<(Vec<GF4>, GF4)> = Vec::new();
        let cols: Vec<MultiSeries<GF4>> = unknowns
            .iter()
            .map(|&m| self.ctx.linear(&(&UniSeries::monomial(GF4::ONE, m, d + 1) * &l0_inv)))
            .collect::<Result<_>>()?;
        for (idx, e) in table.iter().enumerate() {
            let deg = (e[0] + e[1] + e[2]) as usize;
            if deg < n {
                continue;
            }
            if deg >= hi {
                break;
            }
            let row: Vec<GF4> = cols.iter().map(|c| c.coeffs()[idx]).collect();
            rows.push((row, q.coeffs()[idx]));
        }
        // reality: [z^j](l(iota) - l) = 0 for j < hi + 3
        let l0_iota = l0.compose(&self.iota)?;
        let diff = &l0_iota - &l0;
        for j in 1..=(hi + 2).min(d) {
            let row: Vec<GF4> = unknowns.iter().map(|&m| self.iota_pows[m][j]).collect();
            rows.push((row, -diff.coeff(j)));
        }
        let sol = match solve_affine(&rows, unknowns.len()) {
            Some(s) => s,
            None => return Ok(()),
        };
        let fixed = sol.fixed_values();
        let first_free = fixed.iter().position(|v| v.is_none()).unwrap_or(unknowns.len());
        let mut l1 = l0.clone();
        for (k, v) in fixed.iter().enumerate().take(first_free) {
            l1.set(unknowns[k], v.expect("fixed"));
        }
        let m0 = n + first_free;
        if m0 == hi && hi == d + 1 {
            return self.explore(l1, d + 1);
        }
        if m0 > n {
            return self.explore(l1, m0);
        }
        if hi == d + 1 && m0 >= self.order {
            // the remaining system is exact and consistent; the unknowns left free do
            // not affect l mod z^order
            return self.explore(l1, d + 1);
        }
        for v in GF4::ALL {
            let mut l2 = l1.clone();
            l2.set(m0, v);
            self.explore(l2, m0 + 1)?;
        }
        Ok(())
    }
}

impl fmt::Debug for Solver<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Solver(d={}, nodes={})", self.d, self.nodes)
    }
}

/// The canonical 3-structure and delta^2 context at a working degree, for computing
/// cannibalistic series of stabilizer elements.
pub struct Cannibalistic {
    s: KStructure<GF4>,
    ctx: Delta2Context<GF4>,
}

impl Cannibalistic {
    pub fn new(fg: &FormalGroup<GF4>, degree: usize) -> Result<Self> {
        let s = canonical_three_structure(fg, degree)?;
        let ctx = Delta2Context::new(fg, degree)?;
        Ok(Cannibalistic { s, ctx })
    }

    pub fn degree(&self) -> usize {
        self.ctx.deg()
    }

    pub fn structure(&self) -> &KStructure<GF4> {
        &self.s
    }

    pub fn context(&self) -> &Delta2Context<GF4> {
        &self.ctx
    }

    pub fn rhs(
        &self,
        fg: &FormalGroup<GF4>,
        g: &GaloisElement,
        reading: DeltaReading,
    ) -> Result<MultiSeries<GF4>> {
        if g.eps {
            return Err(Error::Domain("Galois-twisted elements do not act F4-linearly".into()));
        }
        let series = quaternion_to_series(g, fg, self.degree() + 2)?;
        cannibalistic_rhs(&series, g.det(), &self.s.f, fg, &self.ctx, reading)
    }

    /// l_g mod z^order.
    pub fn l_series(
        &self,
        fg: &FormalGroup<GF4>,
        g: &GaloisElement,
        order: usize,
        reading: DeltaReading,
    ) -> Result<RealOneStructure> {
        let rhs = self.rhs(fg, g, reading)?;
        solve_real_one_structure(&rhs, fg, &self.ctx, order)
    }
}

/// True when l(z) = l(iota(z)) to the precision of l.
pub fn is_real<C: Coeff>(l: &UniSeries<C>, fg: &FormalGroup<C>) -> Result<bool> {
    let iota = fg.iota().truncate(l.prec().min(fg.precision()));
    Ok(l.compose(&iota)? == l.truncate(iota.prec()))
}

// ---------------------------------------------------------------------------
// b-polynomials and the reality relations

/// A polynomial over F4 in b_1, .., b_n.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BPoly {
    n: usize,
    terms: BTreeMap<Vec<u16>, GF4>,
}

impl BPoly {
    pub fn zero(n: usize) -> Self {
        BPoly { n, terms: BTreeMap::new() }
    }

    pub fn constant(c: GF4, n: usize) -> Self {
        let mut p = Self::zero(n);
        p.add_term(vec![0; n], c);
        p
    }

    /// The generator b_i, 1-based.
    pub fn b(i: usize, n: usize) -> Self {
        let mut e = vec![0; n];
        e[i - 1] = 1;
        let mut p = Self::zero(n);
        p.add_term(e, GF4::ONE);
        p
    }

    pub fn nvars(&self) -> usize {
        self.n
    }

    pub fn add_term(&mut self, e: Vec<u16>, c: GF4) {
        let slot = self.terms.entry(e.clone()).or_insert(GF4::ZERO);
        *slot = *slot + c;
        if *slot == GF4::ZERO {
            self.terms.remove(&e);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u16>, &GF4)> {
        self.terms.iter()
    }

    pub fn add(&self, o: &BPoly) -> BPoly {
        let mut p = self.clone();
        for (e, c) in &o.terms {
            p.add_term(e.clone(), *c);
        }
        p
    }

    pub fn scale(&self, c: GF4) -> BPoly {
        let mut p = Self::zero(self.n);
        for (e, a) in &self.terms {
            p.add_term(e.clone(), *a * c);
        }
        p
    }

    pub fn mul(&self, o: &BPoly) -> BPoly {
        let mut p = Self::zero(self.n);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &o.terms {
                let e: Vec<u16> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                p.add_term(e, *ca * *cb);
            }
        }
        p
    }

    /// Substitutes subs[i] for b_{i+1}.
    pub fn substitute(&self, subs: &[BPoly]) -> BPoly {
        let mut out = Self::zero(subs[0].n);
        for (e, c) in &self.terms {
            let mut t = BPoly::constant(*c, out.n);
            for (i, &k) in e.iter().enumerate() {
                for _ in 0..k {
                    t = t.mul(&subs[i]);
                }
            }
            out = out.add(&t);
        }
        out
    }

    /// Linear coefficient of b_i (1-based) and the constant term, for linear polynomials.
    pub fn linear_parts(&self) -> Result<(GF4, Vec<GF4>)> {
        let mut constant = GF4::ZERO;
        let mut lin = vec![GF4::ZERO; self.n];
        for (e, c) in &self.terms {
            let deg: u16 = e.iter().sum();
            match deg {
                0 => constant = *c,
                1 => lin[e.iter().position(|&k| k == 1).expect("degree one")] = *c,
                _ => return Err(Error::Domain("polynomial is not linear".into())),
            }
        }
        Ok((constant, lin))
    }

    /// Text in the given variable names, degree-lex with higher indices first.
    pub fn to_text(&self, name: &dyn Fn(usize) -> String) -> String {
        let mut keys: Vec<&Vec<u16>> = self.terms.keys().collect();
        keys.sort_by(|a, b| {
            let da: u16 = a.iter().sum();
            let db: u16 = b.iter().sum();
            db.cmp(&da).then_with(|| a.iter().rev().cmp(b.iter().rev()).reverse())
        });
        let parts: Vec<String> = keys
            .into_iter()
            .map(|e| {
                let c = self.terms[e];
                let mono: Vec<String> = e
                    .iter()
                    .enumerate()
                    .filter(|(_, &k)| k > 0)
                    .map(|(i, &k)| if k == 1 { name(i + 1) } else { format!("{}^{k}", name(i + 1)) })
                    .collect();
                let mono = mono.join("*");
                if mono.is_empty() {
                    c.fmt_coeff()
                } else if c == GF4::ONE {
                    mono
                } else {
                    format!("{}*{mono}", c.fmt_coeff())
                }
            })
            .collect();
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join("+")
        }
    }
}

/// Triangular relations b_odd = (linear form in the even b's) from l_b(iota(z)) = l_b(z).
#[derive(Clone, Debug)]
pub struct RealityRelations {
    pub degree: usize,
    /// For each solved odd index, its expression in b_1 .. b_degree (even ones only).
    pub solved: BTreeMap<usize, Vec<GF4>>,
}

impl RealityRelations {
    pub fn build(fg: &FormalGroup<GF4>, d: usize) -> Result<Self> {
        let iota = fg.iota().truncate(d + 1);
        let table = iota_power_table(&iota, d);
        // pivots keyed by leading (highest) index; each row is a linear form on b_1..b_d
        let mut pivots: BTreeMap<usize, Vec<GF4>> = BTreeMap::new();
        for j in 1..=d {
            let mut row: Vec<GF4> = (0..=d).map(|i| if i == 0 { GF4::ZERO } else { table[i][j] }).collect();
            loop {
                let lead = match (1..=d).rev().find(|&i| row[i] != GF4::ZERO) {
                    Some(i) => i,
                    None => break,
                };
                if let Some(p) = pivots.get(&lead) {
                    let f = row[lead] * p[lead].inv()?;
                    for i in 0..=d {
                        row[i] = row[i] - f * p[i];
                    }
                    continue;
                }
                if lead % 2 == 0 {
                    return Err(Error::Inconsistent(format!(
                        "relation from z^{j} leads with the even generator b_{lead}"
                    )));
                }
                pivots.insert(lead, row.clone());
                break;
            }
        }
        // back-substitute so every solved odd b is a form in even b's
        let mut solved: BTreeMap<usize, Vec<GF4>> = BTreeMap::new();
        for (&lead, row) in &pivots {
            let inv = row[lead].inv()?;
            let mut expr = vec![GF4::ZERO; d + 1];
            for i in 1..lead {
                if row[i] == GF4::ZERO {
                    continue;
                }
                let c = -(row[i] * inv);
                if let Some(sub) = solved.get(&i) {
                    for k in 1..=d {
                        expr[k] = expr[k] + c * sub[k];
                    }
                } else {
                    expr[i] = expr[i] + c;
                }
            }
            solved.insert(lead, expr);
        }
        Ok(RealityRelations { degree: d, solved })
    }

    /// The reduction re_*: solved odd generators replaced by their expressions.
    pub fn reduce(&self, p: &BPoly) -> BPoly {
        let n = p.nvars();
        let subs: Vec<BPoly> = (1..=n)
            .map(|i| match self.solved.get(&i) {
                Some(expr) => {
                    let mut q = BPoly::zero(n);
                    for (k, c) in expr.iter().enumerate().skip(1).take(n) {
                        if *c != GF4::ZERO {
                            q = q.add(&BPoly::b(k, n).scale(*c));
                        }
                    }
                    q
                }
                None => BPoly::b(i, n),
            })
            .collect();
        p.substitute(&subs)
    }
}

/// pr_*(g^-1 |> b~_{2i}) = re_*(coefficient of z^{2i} in l_g(z) l_b(g(z))).
pub fn twisted_action(
    l_g: &UniSeries<GF4>,
    g: &UniSeries<GF4>,
    two_i: usize,
    rel: &RealityRelations,
) -> Result<BPoly> {
    if l_g.prec() <= two_i || g.prec() <= two_i {
        return Err(Error::Precision(format!("series needed mod z^{}", two_i + 1)));
    }
    if two_i + 3 > rel.degree {
        return Err(Error::Precision(format!("reality relations needed through z^{}", two_i + 3)));
    }
    let n = two_i;
    let prec = two_i + 1;
    let g = g.truncate(prec);
    let mut out = BPoly::zero(n);
    let mut gp = UniSeries::one(prec);
    let mut g_pows = vec![gp.clone()];
    for _ in 1..=n {
        gp = &gp * &g;
        g_pows.push(gp.clone());
    }
    for a in 0..=two_i {
        let la = l_g.coeff(a);
        if la == GF4::ZERO {
            continue;
        }
        let k = two_i - a;
        if k == 0 {
            out = out.add(&BPoly::constant(la, n));
        }
        for (j, gj) in g_pows.iter().enumerate().skip(1) {
            let c = gj.coeff(k);
            if c != GF4::ZERO {
                out = out.add(&BPoly::b(j, n).scale(la * c));
            }
        }
    }
    Ok(rel.reduce(&out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formal_group::WeierstrassCurve;

    fn fg(n: usize) -> FormalGroup<GF4> {
        FormalGroup::build(WeierstrassCurve::c0(), n).unwrap()
    }

    #[test]
    fn delta_of_one_is_one() {
        let g = fg(16);
        let one = MultiSeries::one(1, 10);
        assert_eq!(delta(&one, &g).unwrap(), MultiSeries::one(2, 10));
    }

    #[test]
    fn delta2_agrees_with_iterated_delta() {
        let g = fg(24);
        let ctx = Delta2Context::new(&g, 12).unwrap();
        let l = UniSeries::from_terms(&[(0, GF4::ONE), (6, GF4::ONE)], 13);
        let direct = ctx.delta2(&l).unwrap();
        let lm = uni_as_multi(&l, 12);
        let iterated = delta(&delta(&lm, &g).unwrap(), &g).unwrap();
        assert_eq!(direct, iterated);
        assert_eq!(direct.permute(&[1, 0, 2]), direct);
        assert_eq!(direct.permute(&[2, 1, 0]), direct);
    }

    #[test]
    fn first_reality_relation() {
        let g = fg(32);
        let rel = RealityRelations::build(&g, 12).unwrap();
        assert!(rel.solved.contains_key(&3) && rel.solved.contains_key(&5));
        assert!(rel.solved[&1].iter().all(|c| *c == GF4::ZERO));
        let b2 = BPoly::b(2, 6);
        assert_eq!(rel.reduce(&b2), b2);
        let p = BPoly::b(3, 6).add(&BPoly::b(5, 6));
        assert_eq!(rel.reduce(&rel.reduce(&p)), rel.reduce(&p));
    }
}
