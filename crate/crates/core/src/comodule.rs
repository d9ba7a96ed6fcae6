//! Finite pointed coalgebras C^0(G, F4), comodules over them and the Milnor-Moore splitting.
//!
//! A comodule M is stored as the right F4[G]-module it is equivalent to: row vectors with
//! m.g = m * A_g, A_{xy} = A_x A_y and psi(m) = sum_g delta_g (x) m.g.  The group-likes of
//! C are the characters chi: G -> F4^x; they act on M through matrices X_chi.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::Rng;

use crate::base_rings::GF4;
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::stabilizer::{FiniteQuotient, NamedElements, TDigits};

pub type Mat = Matrix<GF4>;

/// Largest comodule dimension handled by the packed kernels.
pub const MAX_DIM: usize = 128;

// ---------------------------------------------------------------------------
// Packed GF4 matrices: bit planes (c0, c1) of a0 + a1*zeta, one u128 per row.

pub type PVec = (u128, u128);

#[inline]
fn smul(c: u8, (lo, hi): PVec) -> PVec {
    match c {
        0 => (0, 0),
        1 => (lo, hi),
        2 => (hi, lo ^ hi),
        _ => (lo ^ hi, lo),
    }
}

#[inline]
fn pxor(a: PVec, b: PVec) -> PVec {
    (a.0 ^ b.0, a.1 ^ b.1)
}

#[inline]
fn pget((lo, hi): PVec, j: usize) -> u8 {
    (((lo >> j) & 1) | (((hi >> j) & 1) << 1)) as u8
}

pub fn pack(v: &[GF4]) -> PVec {
    v.iter().enumerate().fold((0, 0), |(lo, hi), (j, c)| {
        (lo | (((c.bits() & 1) as u128) << j), hi | ((((c.bits() >> 1) & 1) as u128) << j))
    })
}

pub fn unpack(v: PVec, n: usize) -> Vec<GF4> {
    (0..n).map(|j| GF4::from_bits(pget(v, j))).collect()
}

fn pconj((lo, hi): PVec) -> PVec {
    (lo ^ hi, hi)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PackedMat {
    cols: usize,
    rows: Vec<PVec>,
}

impl PackedMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(cols <= MAX_DIM);
        PackedMat { cols, rows: vec![(0, 0); rows] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for (i, r) in m.rows.iter_mut().enumerate() {
            r.0 = 1u128 << i;
        }
        m
    }

    pub fn from_mat(m: &[Vec<GF4>], cols: usize) -> Self {
        assert!(cols <= MAX_DIM);
        PackedMat { cols, rows: m.iter().map(|r| pack(r)).collect() }
    }

    pub fn to_mat(&self) -> Mat {
        self.rows.iter().map(|&r| unpack(r, self.cols)).collect()
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> PVec {
        self.rows[i]
    }

    pub fn get(&self, i: usize, j: usize) -> GF4 {
        GF4::from_bits(pget(self.rows[i], j))
    }

    pub fn set(&mut self, i: usize, j: usize, c: GF4) {
        let (lo, hi) = &mut self.rows[i];
        let m = 1u128 << j;
        *lo = (*lo & !m) | (((c.bits() & 1) as u128) << j);
        *hi = (*hi & !m) | ((((c.bits() >> 1) & 1) as u128) << j);
    }

    /// Row vector times this matrix.
    pub fn apply(&self, v: PVec) -> PVec {
        let mut acc = (0, 0);
        let mut bits = v.0 | v.1;
        while bits != 0 {
            let k = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            acc = pxor(acc, smul(pget(v, k), self.rows[k]));
        }
        acc
    }

    pub fn mul(&self, o: &PackedMat) -> PackedMat {
        PackedMat { cols: o.cols, rows: self.rows.iter().map(|&r| o.apply(r)).collect() }
    }

    pub fn add(&self, o: &PackedMat) -> PackedMat {
        PackedMat { cols: self.cols, rows: self.rows.iter().zip(&o.rows).map(|(&a, &b)| pxor(a, b)).collect() }
    }

    pub fn scale(&self, c: GF4) -> PackedMat {
        PackedMat { cols: self.cols, rows: self.rows.iter().map(|&r| smul(c.bits(), r)).collect() }
    }

    /// Entrywise Frobenius.
    pub fn conj(&self) -> PackedMat {
        PackedMat { cols: self.cols, rows: self.rows.iter().map(|&r| pconj(r)).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(|&(a, b)| a == 0 && b == 0)
    }

    pub fn inverse(&self) -> Option<PackedMat> {
        linalg::inverse(&self.to_mat()).map(|m| PackedMat::from_mat(&m, self.cols))
    }

    pub fn transpose(&self) -> PackedMat {
        PackedMat::from_mat(&linalg::transpose(&self.to_mat(), self.cols), self.rows.len())
    }
}

/// Horizontal concatenation as a plain matrix.
fn hcat(blocks: &[Mat], nrows: usize) -> Mat {
    (0..nrows).map(|i| blocks.iter().flat_map(|b| b[i].iter().copied()).collect()).collect()
}

fn random_invertible<R: Rng + ?Sized>(rng: &mut R, n: usize) -> (PackedMat, PackedMat) {
    loop {
        let m: Mat = (0..n).map(|_| (0..n).map(|_| GF4::random(rng)).collect()).collect();
        if let Some(inv) = linalg::inverse(&m) {
            return (PackedMat::from_mat(&m, n), PackedMat::from_mat(&inv, n));
        }
    }
}

// ---------------------------------------------------------------------------
// Finite groups.

#[derive(Clone, Debug)]
pub struct FiniteGroup {
    labels: Vec<String>,
    mul: Vec<Vec<usize>>,
    inv: Vec<usize>,
}

/// G = P x| K with P the normal Sylow 2-subgroup and K cyclic of odd order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decomposition {
    pub p: Vec<usize>,
    pub complement: Vec<usize>,
}

impl FiniteGroup {
    /// Element 0 must be the identity.
    pub fn from_table(labels: Vec<String>, mul: Vec<Vec<usize>>) -> Result<Self> {
        let n = mul.len();
        if n == 0 || labels.len() != n || mul.iter().any(|r| r.len() != n || r.iter().any(|&x| x >= n)) {
            return Err(Error::Axiom("malformed multiplication table".into()));
        }
        if (0..n).any(|g| mul[0][g] != g || mul[g][0] != g) {
            return Err(Error::Axiom("element 0 is not the identity".into()));
        }
        let mut inv = vec![0; n];
        for g in 0..n {
            match (0..n).find(|&h| mul[g][h] == 0) {
                Some(h) if mul[h][g] == 0 => inv[g] = h,
                _ => return Err(Error::Axiom(format!("{} has no two-sided inverse", labels[g]))),
            }
        }
        let grp = FiniteGroup { labels, mul, inv };
        // exhaustive associativity up to 800 elements; beyond, against a generating set
        let thirds: Vec<usize> = if n <= 800 { (0..n).collect() } else { grp.generators() };
        for a in 0..n {
            for b in 0..n {
                let ab = grp.mul[a][b];
                for &c in &thirds {
                    if grp.mul[ab][c] != grp.mul[a][grp.mul[b][c]] {
                        return Err(Error::Axiom("multiplication is not associative".into()));
                    }
                }
            }
        }
        Ok(grp)
    }

    /// Builds the table from an element list whose first entry is the identity.
    pub fn from_elements<T: Ord + Clone>(
        elems: &[T],
        mul: impl Fn(&T, &T) -> Result<T>,
        label: impl Fn(&T) -> String,
    ) -> Result<Self> {
        let index: BTreeMap<T, usize> = elems.iter().cloned().enumerate().map(|(i, e)| (e, i)).collect();
        if index.len() != elems.len() {
            return Err(Error::Axiom("repeated group elements".into()));
        }
        let mut table = vec![vec![0; elems.len()]; elems.len()];
        for (a, x) in elems.iter().enumerate() {
            for (b, y) in elems.iter().enumerate() {
                let p = mul(x, y)?;
                table[a][b] = *index.get(&p).ok_or_else(|| Error::Axiom("element set is not closed".into()))?;
            }
        }
        Self::from_table(elems.iter().map(label).collect(), table)
    }

    pub fn cyclic(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("cyclic group of order 0".into()));
        }
        let mul = (0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect();
        Self::from_table((0..n).map(|k| format!("g^{k}")).collect(), mul)
    }

    pub fn order(&self) -> usize {
        self.mul.len()
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.mul[a][b]
    }

    pub fn inv(&self, a: usize) -> usize {
        self.inv[a]
    }

    pub fn label(&self, a: usize) -> &str {
        &self.labels[a]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn element_order(&self, g: usize) -> usize {
        let (mut x, mut k) = (g, 1);
        while x != 0 {
            x = self.mul[x][g];
            k += 1;
        }
        k
    }

    /// Subgroup generated by `gens`, sorted.
    pub fn closure(&self, gens: &[usize]) -> Vec<usize> {
        let mut seen = vec![false; self.order()];
        seen[0] = true;
        let mut queue = VecDeque::from([0]);
        while let Some(g) = queue.pop_front() {
            for &s in gens {
                let h = self.mul[g][s];
                if !seen[h] {
                    seen[h] = true;
                    queue.push_back(h);
                }
            }
        }
        (0..self.order()).filter(|&g| seen[g]).collect()
    }

    /// Greedy generating set of the subgroup `sub` (the whole group when None).
    pub fn generators_of(&self, sub: &[usize]) -> Vec<usize> {
        let mut gens = Vec::new();
        let mut span = vec![0];
        for &g in sub {
            if span.binary_search(&g).is_err() {
                gens.push(g);
                span = self.closure(&gens);
            }
        }
        gens
    }

    pub fn generators(&self) -> Vec<usize> {
        self.generators_of(&(0..self.order()).collect::<Vec<_>>())
    }

    pub fn is_normal(&self, sub: &[usize]) -> bool {
        let set: BTreeSet<usize> = sub.iter().copied().collect();
        (0..self.order()).all(|g| sub.iter().all(|&h| set.contains(&self.mul[self.mul[g][h]][self.inv[g]])))
    }

    /// The normal Sylow 2-subgroup, when the 2-elements form one.
    pub fn normal_sylow2(&self) -> Option<Vec<usize>> {
        let n = self.order();
        let two_part = n & n.wrapping_neg();
        let twos: Vec<usize> = (0..n).filter(|&g| self.element_order(g).is_power_of_two()).collect();
        (twos.len() == two_part && self.closure(&twos) == twos).then_some(twos)
    }

    pub fn decomposition(&self) -> Option<Decomposition> {
        let p = self.normal_sylow2()?;
        let q = self.order() / p.len();
        let g = (0..self.order()).find(|&g| self.element_order(g) == q)?;
        Some(Decomposition { p, complement: self.closure(&[g]) })
    }

    /// The homomorphism G -> F4^x taking the given values on `gens`, if one exists.
    fn extend_hom(&self, gens: &[usize], vals: &[GF4]) -> Option<Vec<GF4>> {
        let mut val: Vec<Option<GF4>> = vec![None; self.order()];
        val[0] = Some(GF4::ONE);
        let mut queue = VecDeque::from([0]);
        while let Some(g) = queue.pop_front() {
            let vg = val[g]?;
            for (&s, &v) in gens.iter().zip(vals) {
                let h = self.mul[g][s];
                let w = vg * v;
                match val[h] {
                    None => {
                        val[h] = Some(w);
                        queue.push_back(h);
                    }
                    Some(x) if x != w => return None,
                    _ => {}
                }
            }
        }
        val.into_iter().collect()
    }

    /// All characters G -> F4^x as value vectors, the trivial one first.
    pub fn characters(&self) -> Vec<Vec<GF4>> {
        let gens = self.generators();
        let k = gens.len() as u32;
        (0..3usize.pow(k))
            .filter_map(|code| {
                let vals: Vec<GF4> =
                    (0..k).map(|i| GF4::UNITS[(code / 3usize.pow(i)) % 3]).collect();
                self.extend_hom(&gens, &vals)
            })
            .collect()
    }
}

fn sorted_with_identity_first<T: Ord + Clone>(set: BTreeSet<T>, id: &T) -> Vec<T> {
    let mut v = vec![id.clone()];
    v.extend(set.into_iter().filter(|x| x != id));
    v
}

/// The subgroup of a stabilizer quotient generated by digit tuples, with its digit labels.
pub fn quotient_subgroup(depth: usize, gens: &[TDigits]) -> Result<(FiniteGroup, Vec<TDigits>)> {
    let q = FiniteQuotient::new(depth)?;
    let elems = sorted_with_identity_first(q.closure(gens)?, &q.identity());
    let g = FiniteGroup::from_elements(&elems, |a, b| q.mul(a, b), |d| d.to_string())?;
    Ok((g, elems))
}

/// The whole quotient of the stabilizer group by F_{depth/2}.
pub fn stabilizer_quotient(depth: usize) -> Result<(FiniteGroup, Vec<TDigits>)> {
    let q = FiniteQuotient::new(depth)?;
    let mut set = BTreeSet::new();
    for code in 0..3 * (1usize << (2 * (depth - 1))) {
        let mut v = vec![GF4::UNITS[code % 3]];
        let mut rest = code / 3;
        for _ in 1..depth {
            v.push(GF4::from_bits((rest & 3) as u8));
            rest >>= 2;
        }
        set.insert(TDigits(v));
    }
    let elems = sorted_with_identity_first(set, &q.identity());
    let g = FiniteGroup::from_elements(&elems, |a, b| q.mul(a, b), |d| d.to_string())?;
    Ok((g, elems))
}

/// (F_{3/2} / F_{5/2}) x| F4^x inside the depth 5 quotient; order 48.
pub fn filtration_semidirect_group() -> Result<FiniteGroup> {
    let q = FiniteQuotient::new(5)?;
    let mut gens: Vec<TDigits> = q.filtration_subgroup(3).into_iter().collect();
    let mut w = q.identity();
    w.0[0] = GF4::ZETA;
    gens.push(w);
    Ok(quotient_subgroup(5, &gens)?.0)
}

// ---------------------------------------------------------------------------
// The coalgebra C^0(G, F4) and its dual group algebra.

fn ga_times_group(g: &FiniteGroup, x: &[GF4], s: usize) -> Vec<GF4> {
    let mut out = vec![GF4::ZERO; x.len()];
    for (h, &c) in x.iter().enumerate() {
        out[g.mul(h, s)] = out[g.mul(h, s)] + c;
    }
    out
}

/// Dual of the coproduct: the functional c -> <a (x) b, Delta c>.
fn coproduct_dual(g: &FiniteGroup, a: &[GF4], b: &[GF4]) -> Vec<GF4> {
    let mut out = vec![GF4::ZERO; a.len()];
    for (x, &ax) in a.iter().enumerate() {
        if ax == GF4::ZERO {
            continue;
        }
        for (y, &by) in b.iter().enumerate() {
            out[g.mul(x, y)] = out[g.mul(x, y)] + ax * by;
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct GroupCoalgebra {
    group: FiniteGroup,
    sylow: Vec<usize>,
    sylow_gens: Vec<usize>,
    gens: Vec<usize>,
    characters: Vec<Vec<GF4>>,
    char_mul: Vec<Vec<usize>>,
    char_inv: Vec<usize>,
    radical_powers: Vec<Mat>,
    levels: Vec<Mat>,
    adapted: Mat,
    level_of: Vec<usize>,
    dual: Mat,
}

impl GroupCoalgebra {
    pub fn new(group: FiniteGroup) -> Result<Self> {
        let n = group.order();
        let sylow = group.normal_sylow2().ok_or_else(|| {
            Error::Domain("no normal Sylow 2-subgroup: the augmentation-ideal radical does not apply".into())
        })?;
        let sylow_gens = group.generators_of(&sylow);
        let gens = group.generators();
        let characters = group.characters();
        let find = |v: &Vec<GF4>| characters.iter().position(|c| c == v).expect("characters form a group");
        let char_mul: Vec<Vec<usize>> = characters
            .iter()
            .map(|a| characters.iter().map(|b| find(&a.iter().zip(b).map(|(x, y)| *x * *y).collect())).collect())
            .collect();
        let char_inv: Vec<usize> =
            characters.iter().map(|a| find(&a.iter().map(|x| x.inv().expect("unit")).collect())).collect();

        // J = I(P) F[G], J^{k+1} = J^k I(P)
        let unit_vec = |g: usize| {
            let mut v = vec![GF4::ZERO; n];
            v[g] = GF4::ONE;
            v
        };
        let mut j1 = Vec::new();
        for &p in sylow.iter().filter(|&&p| p != 0) {
            for g in 0..n {
                let mut v = unit_vec(g);
                let pg = group.mul(p, g);
                v[pg] = v[pg] + GF4::ONE;
                j1.push(v);
            }
        }
        let mut radical_powers = Vec::new();
        let mut cur = linalg::row_basis(&j1, n);
        while !cur.is_empty() {
            radical_powers.push(cur.clone());
            let mut next = Vec::new();
            for x in &cur {
                for &p in sylow.iter().filter(|&&p| p != 0) {
                    let mut y = ga_times_group(&group, x, p);
                    for (a, b) in y.iter_mut().zip(x) {
                        *a = *a + *b;
                    }
                    next.push(y);
                }
            }
            cur = linalg::row_basis(&next, n);
            if radical_powers.len() > n {
                return Err(Error::Axiom("radical is not nilpotent".into()));
            }
        }
        // F_k(C) = (J^{k+1})^perp
        let levels: Vec<Mat> = (0..=radical_powers.len())
            .map(|k| {
                let ann = radical_powers.get(k).cloned().unwrap_or_default();
                linalg::row_basis(&linalg::right_kernel(&ann, n), n)
            })
            .collect();

        if linalg::rank(&characters, n) != levels[0].len()
            || !linalg::contains_all(&levels[0], &characters, n)
        {
            return Err(Error::Axiom("the coradical is not spanned by group-likes".into()));
        }
        let mut adapted = characters.clone();
        let mut level_of = vec![0; characters.len()];
        for (k, lvl) in levels.iter().enumerate().skip(1) {
            for v in lvl {
                if !linalg::in_span(&adapted, v, n) {
                    adapted.push(v.clone());
                    level_of.push(k);
                }
            }
        }
        let inv = linalg::inverse(&adapted).ok_or_else(|| Error::Axiom("filtration not exhaustive".into()))?;
        let dual = linalg::transpose(&inv, n);
        Ok(GroupCoalgebra {
            group,
            sylow,
            sylow_gens,
            gens,
            characters,
            char_mul,
            char_inv,
            radical_powers,
            levels,
            adapted,
            level_of,
            dual,
        })
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }

    pub fn order(&self) -> usize {
        self.group.order()
    }

    pub fn sylow(&self) -> &[usize] {
        &self.sylow
    }

    pub fn characters(&self) -> &[Vec<GF4>] {
        &self.characters
    }

    pub fn char_mul(&self, a: usize, b: usize) -> usize {
        self.char_mul[a][b]
    }

    pub fn char_inv(&self, a: usize) -> usize {
        self.char_inv[a]
    }

    /// Bases of J, J^2, ... (nonzero powers only).
    pub fn radical_powers(&self) -> &[Mat] {
        &self.radical_powers
    }

    /// Bases of F_0(C), ..., F_L(C) = C.
    pub fn levels(&self) -> &[Mat] {
        &self.levels
    }

    pub fn level_dims(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.len()).collect()
    }

    /// Basis of C adapted to the filtration, the characters first.
    pub fn adapted_basis(&self) -> (&Mat, &[usize]) {
        (&self.adapted, &self.level_of)
    }

    /// Functionals dual to the adapted basis, as elements of F[G].
    pub fn dual_functionals(&self) -> &Mat {
        &self.dual
    }

    pub fn is_cosemisimple(&self) -> bool {
        self.radical_powers.is_empty()
    }

    /// The filtration computed from the coproduct alone:
    /// F_0 = span of group-likes, F_{n+1} = Delta^{-1}(F_n (x) C + C (x) F_0).
    pub fn coalgebraic_filtration(&self) -> Vec<Mat> {
        let n = self.order();
        let f0 = linalg::row_basis(&self.characters, n);
        let ann0 = linalg::right_kernel(&f0, n);
        let mut out = vec![f0];
        while out.last().map(|l| l.len()) != Some(n) && out.len() <= n {
            let ann = linalg::right_kernel(out.last().expect("nonempty"), n);
            let mut conds = Vec::new();
            for a in &ann {
                for b in &ann0 {
                    conds.push(coproduct_dual(&self.group, a, b));
                }
            }
            let conds = linalg::row_basis(&conds, n);
            out.push(linalg::row_basis(&linalg::right_kernel(&conds, n), n));
        }
        out
    }

    /// Whether the coalgebraic filtration equals the annihilators of the radical powers.
    pub fn duality_holds(&self) -> bool {
        let n = self.order();
        let co = self.coalgebraic_filtration();
        co.len() == self.levels.len()
            && co.iter().zip(&self.levels).all(|(a, b)| {
                a.len() == b.len() && linalg::contains_all(a, b, n) && linalg::contains_all(b, a, n)
            })
    }

    /// C as a comodule over itself.
    pub fn regular_comodule(&self) -> FiniteComodule {
        let g = &self.group;
        let n = g.order();
        let action = (0..n)
            .map(|h| {
                let hi = g.inv(h);
                let mut m = PackedMat::zeros(n, n);
                for x in 0..n {
                    m.set(x, g.mul(hi, x), GF4::ONE);
                }
                m
            })
            .collect();
        let grouplike = self
            .characters
            .iter()
            .map(|chi| {
                let mut m = PackedMat::zeros(n, n);
                for (x, &v) in chi.iter().enumerate() {
                    m.set(x, x, v);
                }
                m
            })
            .collect();
        FiniteComodule { dim: n, action, grouplike, algebra: Some(FunctionAlgebra::points(n)) }
    }

    /// The comodule C^0(G/H) of functions constant on left cosets xH, with H inside P.
    pub fn coset_comodule(&self, h: &[usize]) -> Result<(FiniteComodule, Vec<Vec<usize>>)> {
        let g = &self.group;
        let hs: BTreeSet<usize> = h.iter().copied().collect();
        if !hs.iter().all(|x| self.sylow.contains(x)) || g.closure(h).len() != hs.len() {
            return Err(Error::InvalidArgument("H must be a subgroup of the Sylow 2-subgroup".into()));
        }
        let mut coset_of = vec![usize::MAX; g.order()];
        let mut cosets: Vec<Vec<usize>> = Vec::new();
        for x in 0..g.order() {
            if coset_of[x] == usize::MAX {
                let c: Vec<usize> = hs.iter().map(|&y| g.mul(x, y)).collect();
                for &y in &c {
                    coset_of[y] = cosets.len();
                }
                cosets.push(c);
            }
        }
        let d = cosets.len();
        let action = (0..g.order())
            .map(|hh| {
                let hi = g.inv(hh);
                let mut m = PackedMat::zeros(d, d);
                for (c, elems) in cosets.iter().enumerate() {
                    m.set(c, coset_of[g.mul(hi, elems[0])], GF4::ONE);
                }
                m
            })
            .collect();
        let grouplike = self
            .characters
            .iter()
            .map(|chi| {
                let mut m = PackedMat::zeros(d, d);
                for (c, elems) in cosets.iter().enumerate() {
                    m.set(c, c, chi[elems[0]]);
                }
                m
            })
            .collect();
        Ok((FiniteComodule { dim: d, action, grouplike, algebra: Some(FunctionAlgebra::points(d)) }, cosets))
    }

    /// The trivial comodule F4 with psi(m) = 1 (x) m.
    pub fn trivial_comodule(&self) -> FiniteComodule {
        FiniteComodule {
            dim: 1,
            action: vec![PackedMat::identity(1); self.order()],
            grouplike: vec![PackedMat::identity(1); self.characters.len()],
            algebra: Some(FunctionAlgebra::points(1)),
        }
    }
}

// ---------------------------------------------------------------------------
// Comodules.

/// A commutative algebra of functions on a finite set, in a possibly scrambled basis:
/// values = m * to_points, m = values * from_points.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionAlgebra {
    to_points: PackedMat,
    from_points: PackedMat,
}

impl FunctionAlgebra {
    pub fn points(n: usize) -> Self {
        FunctionAlgebra { to_points: PackedMat::identity(n), from_points: PackedMat::identity(n) }
    }

    pub fn unit(&self) -> PVec {
        let n = self.to_points.ncols();
        let ones = if n == MAX_DIM { u128::MAX } else { (1u128 << n) - 1 };
        self.from_points.apply((ones, 0))
    }

    pub fn product(&self, a: PVec, b: PVec) -> PVec {
        let (x, y) = (self.to_points.apply(a), self.to_points.apply(b));
        // pointwise product in bit planes
        let lo = (x.0 & y.0) ^ (x.1 & y.1);
        let hi = (x.0 & y.1) ^ (x.1 & y.0) ^ (x.1 & y.1);
        self.from_points.apply((lo, hi))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteComodule {
    dim: usize,
    action: Vec<PackedMat>,
    grouplike: Vec<PackedMat>,
    algebra: Option<FunctionAlgebra>,
}

/// Per-level data of the coradical filtration of a comodule.
#[derive(Clone, Debug)]
pub struct ComoduleFiltration {
    /// Bases of F_0(M), F_1(M), ..., up to the top level of C.
    pub bases: Vec<Mat>,
    /// Columns annihilating each F_k(M): m lies in F_k(M) iff m * ann = 0.
    ann: Vec<PackedMat>,
}

impl ComoduleFiltration {
    pub fn dims(&self) -> Vec<usize> {
        self.bases.iter().map(|b| b.len()).collect()
    }

    pub fn contains(&self, k: usize, v: PVec) -> bool {
        let a = &self.ann[k.min(self.ann.len() - 1)];
        a.nrows() == 0 || a.apply(v) == (0, 0)
    }
}

/// Ranks of q_n for one level.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QLevel {
    pub n: usize,
    pub source_dim: usize,
    pub target_dim: usize,
    pub rank: usize,
}

impl QLevel {
    pub fn injective(&self) -> bool {
        self.rank == self.source_dim
    }

    pub fn surjective(&self) -> bool {
        self.rank == self.target_dim
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitReport {
    pub primitives_dim: usize,
    pub filtration_dims: Vec<usize>,
    pub levels: Vec<QLevel>,
}

impl SplitReport {
    pub fn splittable(&self) -> bool {
        self.levels.iter().all(|l| l.surjective())
    }

    pub fn injective(&self) -> bool {
        self.levels.iter().all(|l| l.injective())
    }

    pub fn witness(&self) -> Option<&QLevel> {
        self.levels.iter().find(|l| !l.surjective())
    }
}

/// The Milnor-Moore isomorphism h_r: M -> C (x) P_1(M), coordinates (g, a) at g * k + a.
#[derive(Clone, Debug)]
pub struct MilnorMoore {
    pub primitives: Mat,
    pub matrix: Mat,
}

impl FiniteComodule {
    pub fn new(
        dim: usize,
        action: Vec<Mat>,
        grouplike: Vec<Mat>,
        unit_algebra: Option<(Mat, Mat)>,
    ) -> Result<Self> {
        if dim > MAX_DIM {
            return Err(Error::InvalidArgument(format!("dimension {dim} exceeds {MAX_DIM}")));
        }
        let pk = |m: &Mat| -> Result<PackedMat> {
            if m.len() != dim || m.iter().any(|r| r.len() != dim) {
                return Err(Error::InvalidArgument("action matrices must be square of the module dimension".into()));
            }
            Ok(PackedMat::from_mat(m, dim))
        };
        Ok(FiniteComodule {
            dim,
            action: action.iter().map(pk).collect::<Result<_>>()?,
            grouplike: grouplike.iter().map(pk).collect::<Result<_>>()?,
            algebra: match unit_algebra {
                Some((t, f)) => Some(FunctionAlgebra { to_points: pk(&t)?, from_points: pk(&f)? }),
                None => None,
            },
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn action(&self, g: usize) -> &PackedMat {
        &self.action[g]
    }

    pub fn grouplike_action(&self, chi: usize) -> &PackedMat {
        &self.grouplike[chi]
    }

    pub fn algebra(&self) -> Option<&FunctionAlgebra> {
        self.algebra.as_ref()
    }

    /// The coaction psi(m) as its components m.g for every g.
    pub fn coaction(&self, m: &[GF4]) -> Vec<Vec<GF4>> {
        let v = pack(m);
        self.action.iter().map(|a| unpack(a.apply(v), self.dim)).collect()
    }

    /// Direct sum (product of algebras).
    pub fn direct_sum(&self, o: &FiniteComodule) -> FiniteComodule {
        let d = self.dim + o.dim;
        assert!(d <= MAX_DIM);
        let blk = |a: &PackedMat, b: &PackedMat| {
            let mut m = PackedMat::zeros(d, d);
            for (i, &(lo, hi)) in a.rows.iter().enumerate() {
                m.rows[i] = (lo, hi);
            }
            for (i, &(lo, hi)) in b.rows.iter().enumerate() {
                m.rows[self.dim + i] = (lo << self.dim, hi << self.dim);
            }
            m
        };
        FiniteComodule {
            dim: d,
            action: self.action.iter().zip(&o.action).map(|(a, b)| blk(a, b)).collect(),
            grouplike: self.grouplike.iter().zip(&o.grouplike).map(|(a, b)| blk(a, b)).collect(),
            algebra: match (&self.algebra, &o.algebra) {
                (Some(a), Some(b)) => Some(FunctionAlgebra {
                    to_points: blk(&a.to_points, &b.to_points),
                    from_points: blk(&a.from_points, &b.from_points),
                }),
                _ => None,
            },
        }
    }

    /// The same comodule in new coordinates m' = m * p.
    pub fn change_basis(&self, p: &PackedMat, p_inv: &PackedMat) -> FiniteComodule {
        let conj = |a: &PackedMat| p_inv.mul(a).mul(p);
        FiniteComodule {
            dim: self.dim,
            action: self.action.iter().map(conj).collect(),
            grouplike: self.grouplike.iter().map(conj).collect(),
            algebra: self.algebra.as_ref().map(|a| FunctionAlgebra {
                to_points: p_inv.mul(&a.to_points),
                from_points: a.from_points.mul(p),
            }),
        }
    }

    /// Action associativity and the module-in-comodules condition
    /// X_chi A_h = chi(h) A_h X_chi, X_chi X_eta = X_{chi eta}.
    pub fn validate(&self, c: &GroupCoalgebra) -> Result<()> {
        let g = c.group();
        if self.action.len() != g.order() || self.grouplike.len() != c.characters.len() {
            return Err(Error::InvalidArgument("wrong number of structure matrices".into()));
        }
        let id = PackedMat::identity(self.dim);
        if self.action[0] != id || self.grouplike[0] != id {
            return Err(Error::Axiom("identity must act trivially".into()));
        }
        for x in 0..g.order() {
            for &s in &c.gens {
                if self.action[g.mul(x, s)] != self.action[x].mul(&self.action[s]) {
                    return Err(Error::Axiom(format!("A_(xs) != A_x A_s at x = {}", g.label(x))));
                }
            }
        }
        for (a, xa) in self.grouplike.iter().enumerate() {
            for (b, xb) in self.grouplike.iter().enumerate() {
                if xa.mul(xb) != self.grouplike[c.char_mul(a, b)] {
                    return Err(Error::Axiom("group-like action is not multiplicative".into()));
                }
            }
            for &s in &c.gens {
                let lhs = xa.mul(&self.action[s]);
                let rhs = self.action[s].mul(xa).scale(c.characters[a][s]);
                if lhs != rhs {
                    return Err(Error::Axiom("group-like action is not compatible with the coaction".into()));
                }
            }
        }
        Ok(())
    }

    /// P_1(M) = {m : psi(m) = 1 (x) m}, the joint fixed space of the generators.
    pub fn primitives(&self, c: &GroupCoalgebra) -> Mat {
        let id = PackedMat::identity(self.dim);
        let blocks: Vec<Mat> = c.gens.iter().map(|&s| self.action[s].add(&id).to_mat()).collect();
        if blocks.is_empty() {
            return linalg::identity(self.dim);
        }
        linalg::row_basis(&linalg::left_kernel(&hcat(&blocks, self.dim), blocks.len() * self.dim), self.dim)
    }

    /// F_n(M) = J^{n+1}-torsion, built as F_n = {m : m(A_p - 1) in F_{n-1} for p in P}.
    pub fn coradical_filtration(&self, c: &GroupCoalgebra) -> ComoduleFiltration {
        let d = self.dim;
        let id = PackedMat::identity(d);
        let top = c.levels().len() - 1;
        let mut bases = Vec::new();
        let mut ann = Vec::new();
        // columns annihilating F_{-1} = 0
        let mut prev = PackedMat::identity(d);
        for _ in 0..=top {
            let blocks: Vec<Mat> = c
                .sylow_gens
                .iter()
                .map(|&s| self.action[s].add(&id).mul(&prev).to_mat())
                .collect();
            let basis = if blocks.is_empty() || prev.ncols() == 0 {
                linalg::identity(d)
            } else {
                let w: usize = blocks.iter().map(|b| b.first().map_or(0, |r| r.len())).sum();
                linalg::row_basis(&linalg::left_kernel(&hcat(&blocks, d), w), d)
            };
            let kernel = linalg::right_kernel(&basis, d);
            prev = if kernel.is_empty() {
                PackedMat::zeros(d, 0)
            } else {
                PackedMat::from_mat(&linalg::transpose(&kernel, d), kernel.len())
            };
            ann.push(prev.clone());
            bases.push(basis);
        }
        ComoduleFiltration { bases, ann }
    }

    /// A(phi_j) for the functionals dual to the adapted basis of C.
    pub fn dual_actions(&self, c: &GroupCoalgebra) -> Vec<PackedMat> {
        c.dual
            .iter()
            .map(|phi| {
                let mut acc = PackedMat::zeros(self.dim, self.dim);
                for (g, &x) in phi.iter().enumerate() {
                    if x != GF4::ZERO {
                        acc = acc.add(&self.action[g].scale(x));
                    }
                }
                acc
            })
            .collect()
    }

    /// Components m_chi of an element of F_0(M), psi(m) = sum_chi chi (x) m_chi, folded
    /// back into P_1(M) as sum_chi chi^{-1}.m_chi.
    fn lambda(&self, c: &GroupCoalgebra, phis: &[PackedMat], m: PVec) -> PVec {
        (0..c.characters.len()).fold((0, 0), |acc, chi| {
            let part = phis[chi].apply(m);
            pxor(acc, self.grouplike[c.char_inv(chi)].apply(part))
        })
    }

    /// Image of the map F[group-likes] (x) P_1(M) -> M, chi (x) p -> chi.p, row per (chi, p).
    pub fn lemma_a_image(&self, primitives: &Mat) -> Mat {
        let mut rows = Vec::new();
        for x in &self.grouplike {
            for p in primitives {
                rows.push(unpack(x.apply(pack(p)), self.dim));
            }
        }
        rows
    }

    /// Whether that map is injective with image exactly F_0(M).
    pub fn lemma_a_holds(&self, c: &GroupCoalgebra, filt: &ComoduleFiltration) -> bool {
        let prim = self.primitives(c);
        let img = self.lemma_a_image(&prim);
        let d = self.dim;
        let f0 = &filt.bases[0];
        linalg::rank(&img, d) == img.len()
            && img.len() == f0.len()
            && linalg::contains_all(f0, &img, d)
    }

    /// Checks psi(F_n(M)) inside sum_k F_{n-k}(C) (x) F_k(M).
    pub fn filtration_lemma_holds(
        &self,
        c: &GroupCoalgebra,
        filt: &ComoduleFiltration,
        phis: &[PackedMat],
    ) -> bool {
        let (_, level_of) = c.adapted_basis();
        filt.bases.iter().enumerate().all(|(n, basis)| {
            basis.iter().all(|m| {
                let v = pack(m);
                phis.iter().zip(level_of).all(|(a, &l)| {
                    let w = a.apply(v);
                    if l > n {
                        w == (0, 0)
                    } else {
                        filt.contains(n - l, w)
                    }
                })
            })
        })
    }

    /// The maps q_n: F_n(M)/F_{n-1}(M) -> F_n(C)/F_{n-1}(C) (x) P_1(M).
    pub fn splittability(&self, c: &GroupCoalgebra) -> Result<SplitReport> {
        self.validate(c)?;
        let filt = self.coradical_filtration(c);
        let phis = self.dual_actions(c);
        let prim = self.primitives(c);
        let (_, level_of) = c.adapted_basis();
        let mut levels = Vec::new();
        for (n, basis) in filt.bases.iter().enumerate() {
            let idx: Vec<usize> = (0..level_of.len()).filter(|&j| level_of[j] == n).collect();
            let rows: Mat = basis
                .iter()
                .map(|m| {
                    let v = pack(m);
                    idx.iter()
                        .flat_map(|&j| {
                            let piece = self.lambda(c, &phis, phis[j].apply(v));
                            unpack(piece, self.dim)
                        })
                        .collect()
                })
                .collect();
            let prev = if n == 0 { 0 } else { filt.bases[n - 1].len() };
            levels.push(QLevel {
                n,
                source_dim: basis.len() - prev,
                target_dim: idx.len() * prim.len(),
                rank: linalg::rank(&rows, idx.len() * self.dim),
            });
        }
        Ok(SplitReport { primitives_dim: prim.len(), filtration_dims: filt.dims(), levels })
    }

    /// The matrix of the Lemma-A map F[group-likes] (x) P_1 -> M, rows indexed chi * k + a.
    pub fn lemma_a_matrix(&self, c: &GroupCoalgebra) -> (Mat, Mat) {
        let prim = self.primitives(c);
        (self.lemma_a_image(&prim), prim)
    }

    /// A random linear retraction r: M -> F[group-likes] (x) P_1 of the Lemma-A map.
    pub fn random_retraction<R: Rng + ?Sized>(&self, c: &GroupCoalgebra, rng: &mut R, canonical: bool) -> Result<Mat> {
        let (iota, _) = self.lemma_a_matrix(c);
        let d = self.dim;
        let w = iota.len();
        if linalg::rank(&iota, d) != w {
            return Err(Error::Axiom("the Lemma-A map is not injective".into()));
        }
        let mut basis = iota.clone();
        let mut targets: Mat = (0..w).map(|i| (0..w).map(|j| if i == j { GF4::ONE } else { GF4::ZERO }).collect()).collect();
        for e in linalg::identity::<GF4>(d) {
            if !linalg::in_span(&basis, &e, d) {
                basis.push(e);
                targets.push((0..w).map(|_| if canonical { GF4::ZERO } else { GF4::random(rng) }).collect());
            }
        }
        let inv = linalg::inverse(&basis).ok_or_else(|| Error::Axiom("basis completion failed".into()))?;
        Ok(linalg::mat_mul(&inv, &targets, w))
    }

    /// h_r = (id (x) eps (x) id)(id (x) r) psi, refused when M is not splittable.
    pub fn milnor_moore_split(&self, c: &GroupCoalgebra, r: &Mat) -> Result<MilnorMoore> {
        let report = self.splittability(c)?;
        if let Some(w) = report.witness() {
            return Err(Error::Domain(format!(
                "not splittable: q_{} has rank {} but target dimension {}",
                w.n, w.rank, w.target_dim
            )));
        }
        let h = self.h_matrix(c, r)?;
        if !self.is_comodule_map_to_cofree(c, &h.matrix, h.primitives.len()) {
            return Err(Error::Axiom("h_r does not intertwine the coactions".into()));
        }
        if h.matrix.len() != h.matrix[0].len() || linalg::rank(&h.matrix, h.matrix[0].len()) != self.dim {
            return Err(Error::Axiom("h_r is not invertible".into()));
        }
        Ok(h)
    }

    /// h_r without the splittability precondition.
    pub fn h_matrix(&self, c: &GroupCoalgebra, r: &Mat) -> Result<MilnorMoore> {
        let (iota, prim) = self.lemma_a_matrix(c);
        let (d, k, ng) = (self.dim, prim.len(), c.characters.len());
        let w = ng * k;
        if r.len() != d || r.iter().any(|row| row.len() != w) {
            return Err(Error::InvalidArgument("retraction has the wrong shape".into()));
        }
        if linalg::mat_mul(&iota, r, w) != linalg::identity::<GF4>(w) {
            return Err(Error::InvalidArgument("r is not a retraction of the Lemma-A map".into()));
        }
        // rho = (eps (x) id) r: sum over the group-like blocks
        let rho: Mat = r
            .iter()
            .map(|row| (0..k).map(|a| (0..ng).fold(GF4::ZERO, |s, chi| s + row[chi * k + a])).collect())
            .collect();
        let blocks: Vec<Mat> =
            self.action.iter().map(|a| linalg::mat_mul(&a.to_mat(), &rho, k)).collect();
        Ok(MilnorMoore { primitives: prim, matrix: hcat(&blocks, d) })
    }

    /// Whether a map M -> C (x) V (V of dimension k) satisfies h(m.x) = h(m).x.
    pub fn is_comodule_map_to_cofree(&self, c: &GroupCoalgebra, h: &Mat, k: usize) -> bool {
        let g = c.group();
        c.gens.iter().all(|&x| {
            let lhs = linalg::mat_mul(&self.action[x].to_mat(), h, g.order() * k);
            let rhs: Mat = h.iter().map(|row| cofree_act(g, row, x, k)).collect();
            lhs == rhs
        })
    }

    /// Graded right primitives at level n: m in F_n(M) with m.phi_j in F * 1 for l_j = n.
    pub fn graded_right_primitives(
        &self,
        c: &GroupCoalgebra,
        filt: &ComoduleFiltration,
        phis: &[PackedMat],
        n: usize,
    ) -> Result<Mat> {
        let alg = self.algebra.as_ref().ok_or_else(|| Error::InvalidArgument("comodule has no algebra structure".into()))?;
        let d = self.dim;
        let one = unpack(alg.unit(), d);
        let q = linalg::right_kernel(&[one], d);
        let basis = &filt.bases[n];
        if basis.is_empty() {
            return Ok(Vec::new());
        }
        let (_, level_of) = c.adapted_basis();
        let qmat = linalg::transpose(&q, d);
        let blocks: Vec<Mat> = (0..level_of.len())
            .filter(|&j| level_of[j] == n)
            .map(|j| {
                let rows: Mat = basis.iter().map(|m| unpack(phis[j].apply(pack(m)), d)).collect();
                linalg::mat_mul(&rows, &qmat, q.len())
            })
            .collect();
        if blocks.is_empty() || q.is_empty() {
            return Ok(basis.clone());
        }
        let w = blocks.len() * q.len();
        let coeffs = linalg::left_kernel(&hcat(&blocks, basis.len()), w);
        Ok(linalg::mat_mul(&coeffs, basis, d))
    }
}

/// Row vector of C (x) V acted on by x: (delta_g (x) v).x = delta_{x^{-1} g} (x) v.
fn cofree_act(g: &FiniteGroup, row: &[GF4], x: usize, k: usize) -> Vec<GF4> {
    let xi = g.inv(x);
    let mut out = vec![GF4::ZERO; row.len()];
    for h in 0..g.order() {
        let t = g.mul(xi, h);
        out[t * k..(t + 1) * k].copy_from_slice(&row[h * k..(h + 1) * k]);
    }
    out
}

// ---------------------------------------------------------------------------
// Splitting criteria.

/// The comodule map s: C -> M with s(delta_h) = v.h^{-1}; unital iff v N = 1 for N = sum_g A_g.
pub fn unital_section(m: &FiniteComodule, c: &GroupCoalgebra) -> Result<Option<Mat>> {
    let alg = m.algebra.as_ref().ok_or_else(|| Error::InvalidArgument("comodule has no algebra structure".into()))?;
    let d = m.dim;
    let norm = m.action.iter().fold(PackedMat::zeros(d, d), |acc, a| acc.add(a)).to_mat();
    let one = unpack(alg.unit(), d);
    let rows: Vec<(Vec<GF4>, GF4)> = (0..d).map(|j| (norm.iter().map(|r| r[j]).collect(), one[j])).collect();
    let Some(sol) = linalg::solve_affine(&rows, d) else {
        return Ok(None);
    };
    let v = pack(&sol.particular);
    let g = c.group();
    let s: Mat = (0..g.order()).map(|h| unpack(m.action[g.inv(h)].apply(v), d)).collect();
    Ok(Some(s))
}

/// Whether s: C -> M (rows s(delta_h)) is a unital comodule map.
pub fn is_unital_section(m: &FiniteComodule, c: &GroupCoalgebra, s: &Mat) -> bool {
    let Some(alg) = m.algebra.as_ref() else { return false };
    if s.len() != c.order() || s.iter().any(|r| r.len() != m.dim) {
        return false;
    }
    let sp = PackedMat::from_mat(s, m.dim);
    let image_of_one = sp.rows.iter().fold((0, 0), |acc, &r| pxor(acc, r));
    let regular = c.regular_comodule();
    image_of_one == alg.unit() && c.gens.iter().all(|&x| regular.action[x].mul(&sp) == sp.mul(&m.action[x]))
}

/// Whether A: M -> C (rows A(e_i)) is a unital algebra map of comodules.
pub fn is_algebra_comodule_map<R: Rng + ?Sized>(
    m: &FiniteComodule,
    c: &GroupCoalgebra,
    a: &PackedMat,
    rng: &mut R,
) -> bool {
    let regular = c.regular_comodule();
    let (Some(am), Some(ac)) = (m.algebra.as_ref(), regular.algebra.as_ref()) else { return false };
    if a.apply(am.unit()) != ac.unit() {
        return false;
    }
    let mult = (0..16).all(|_| {
        let x = pack(&(0..m.dim).map(|_| GF4::random(rng)).collect::<Vec<_>>());
        let y = pack(&(0..m.dim).map(|_| GF4::random(rng)).collect::<Vec<_>>());
        a.apply(am.product(x, y)) == ac.product(a.apply(x), a.apply(y))
    });
    mult && c.gens.iter().all(|&x| m.action[x].mul(a) == a.mul(&regular.action[x]))
}

/// Whether A induces surjections on all graded right primitives.
pub fn star_surjective(m: &FiniteComodule, c: &GroupCoalgebra, a: &PackedMat) -> Result<bool> {
    let regular = c.regular_comodule();
    let (fm, fc) = (m.coradical_filtration(c), regular.coradical_filtration(c));
    let (pm, pc) = (m.dual_actions(c), regular.dual_actions(c));
    let n = c.order();
    for lvl in 0..c.levels().len() {
        let src = m.graded_right_primitives(c, &fm, &pm, lvl)?;
        let tgt = regular.graded_right_primitives(c, &fc, &pc, lvl)?;
        let mut span: Mat = src.iter().map(|v| unpack(a.apply(pack(v)), n)).collect();
        if lvl > 0 {
            span.extend(fc.bases[lvl - 1].iter().cloned());
        }
        if !linalg::contains_all(&span, &tgt, n) {
            return Ok(false);
        }
    }
    Ok(true)
}

// ---------------------------------------------------------------------------
// Randomized instances and trials.

/// A product of coset algebras C^0(G/H_i), optionally in a scrambled basis.
#[derive(Clone, Debug)]
pub struct Instance {
    pub comodule: FiniteComodule,
    pub subgroup_orders: Vec<usize>,
    /// Projection to one factor followed by its inclusion into C, rows A(e_i).
    pub to_c: PackedMat,
}

impl Instance {
    pub fn cofree(&self) -> bool {
        self.subgroup_orders.iter().all(|&o| o == 1)
    }
}

pub fn random_subgroup_of_sylow<R: Rng + ?Sized>(c: &GroupCoalgebra, rng: &mut R) -> Vec<usize> {
    let p = c.sylow();
    match rng.gen_range(0..5) {
        0 | 1 => vec![0],
        2 => p.to_vec(),
        k => {
            let gens: Vec<usize> = (0..k - 2).map(|_| p[rng.gen_range(0..p.len())]).collect();
            c.group().closure(&gens)
        }
    }
}

pub fn build_instance(c: &GroupCoalgebra, subgroups: &[Vec<usize>], factor: usize, scramble: Option<(PackedMat, PackedMat)>) -> Result<Instance> {
    let n = c.order();
    let mut total: Option<FiniteComodule> = None;
    let mut to_c_rows: Vec<PVec> = Vec::new();
    for (i, h) in subgroups.iter().enumerate() {
        let (m, cosets) = c.coset_comodule(h)?;
        if total.as_ref().map_or(0, |t| t.dim) + m.dim > MAX_DIM {
            return Err(Error::InvalidArgument("instance too large".into()));
        }
        for coset in &cosets {
            let mut v = vec![GF4::ZERO; n];
            if i == factor {
                for &y in coset {
                    v[y] = GF4::ONE;
                }
            }
            to_c_rows.push(pack(&v));
        }
        total = Some(match total {
            None => m,
            Some(t) => t.direct_sum(&m),
        });
    }
    let mut comodule = total.ok_or_else(|| Error::InvalidArgument("no factors".into()))?;
    let mut to_c = PackedMat { cols: n, rows: to_c_rows };
    if let Some((p, pi)) = scramble {
        comodule = comodule.change_basis(&p, &pi);
        to_c = pi.mul(&to_c);
    }
    Ok(Instance { comodule, subgroup_orders: subgroups.iter().map(|h| h.len()).collect(), to_c })
}

pub fn random_instance<R: Rng + ?Sized>(c: &GroupCoalgebra, rng: &mut R, max_dim: usize) -> Result<Instance> {
    let n = c.order();
    loop {
        let factors = rng.gen_range(1..=3);
        let subs: Vec<Vec<usize>> = (0..factors).map(|_| random_subgroup_of_sylow(c, rng)).collect();
        let dim: usize = subs.iter().map(|h| n / h.len()).sum();
        if dim > max_dim.min(MAX_DIM) {
            continue;
        }
        let factor = rng.gen_range(0..factors);
        let scramble = rng.gen_bool(0.5).then(|| random_invertible(rng, dim));
        return build_instance(c, &subs, factor, scramble);
    }
}

/// Outcome of one randomized Milnor-Moore trial.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrialOutcome {
    pub dim: usize,
    pub cofree: bool,
    pub splittable: bool,
    pub injective: bool,
    pub lemma_a: bool,
    pub filtration_lemma: bool,
    pub h_invertible: bool,
    pub h_linear: bool,
    pub h_independent: bool,
    pub section_exists: bool,
    pub section_valid: bool,
    pub star: bool,
    pub star_map_valid: bool,
}

impl TrialOutcome {
    /// Every check that must hold on a valid instance.
    pub fn consistent(&self) -> bool {
        self.injective
            && self.lemma_a
            && self.filtration_lemma
            && self.splittable == self.cofree
            && self.h_invertible == self.splittable
            && self.h_linear
            && self.h_independent
            && (!self.section_exists || (self.section_valid && self.splittable))
            && self.star_map_valid
            && (!self.star || self.splittable)
    }
}

pub fn run_trial<R: Rng + ?Sized>(c: &GroupCoalgebra, inst: &Instance, rng: &mut R) -> Result<TrialOutcome> {
    let m = &inst.comodule;
    let report = m.splittability(c)?;
    let filt = m.coradical_filtration(c);
    let phis = m.dual_actions(c);
    let r1 = m.random_retraction(c, rng, false)?;
    let r2 = m.random_retraction(c, rng, false)?;
    let h1 = m.h_matrix(c, &r1)?;
    let h2 = m.h_matrix(c, &r2)?;
    let k = h1.primitives.len();
    let cols = c.order() * k;
    let square = cols == m.dim;
    let h_invertible = square && linalg::rank(&h1.matrix, cols) == m.dim;
    let h_linear = m.is_comodule_map_to_cofree(c, &h1.matrix, k) && m.is_comodule_map_to_cofree(c, &h2.matrix, k);
    let h_independent = !h_invertible || {
        let inv = linalg::inverse(&h1.matrix).expect("invertible");
        let phi = linalg::mat_mul(&inv, &h2.matrix, cols);
        let g = c.group();
        linalg::rank(&phi, cols) == cols
            && c.gens.iter().all(|&x| {
                let ax: Mat = linalg::identity::<GF4>(cols).iter().map(|row| cofree_act(g, row, x, k)).collect();
                linalg::mat_mul(&ax, &phi, cols) == phi.iter().map(|row| cofree_act(g, row, x, k)).collect::<Mat>()
            })
    };
    let section = unital_section(m, c)?;
    let section_valid = section.as_ref().is_some_and(|s| is_unital_section(m, c, s));
    let star_map_valid = is_algebra_comodule_map(m, c, &inst.to_c, rng);
    let star = star_map_valid && star_surjective(m, c, &inst.to_c)?;
    Ok(TrialOutcome {
        dim: m.dim,
        cofree: inst.cofree(),
        splittable: report.splittable(),
        injective: report.injective(),
        lemma_a: m.lemma_a_holds(c, &filt),
        filtration_lemma: m.filtration_lemma_holds(c, &filt, &phis),
        h_invertible,
        h_linear,
        h_independent,
        section_exists: section.is_some(),
        section_valid,
        star,
        star_map_valid,
    })
}

/// Checks that inflation along G -> G/N carries F_n(C^0(G/N)) into F_n(C^0(G)).
pub fn tower_compatible(big: &GroupCoalgebra, small: &GroupCoalgebra, proj: &[usize]) -> bool {
    let n = big.order();
    small.levels().iter().enumerate().all(|(k, lvl)| {
        let target = &big.levels()[k.min(big.levels().len() - 1)];
        let pulled: Mat = lvl.iter().map(|f| (0..n).map(|g| f[proj[g]]).collect()).collect();
        linalg::contains_all(target, &pulled, n)
    })
}

// ---------------------------------------------------------------------------
// Sigma versus Sigma' with an involution.

/// The finite group S-bar x| Gal with its antilinear elements marked.
#[derive(Clone, Debug)]
pub struct GaloisQuotient {
    group: FiniteGroup,
    anti: Vec<bool>,
    /// Positions of the elements of S-bar, in order.
    sub: Vec<usize>,
    pos_in_sub: Vec<Option<usize>>,
    sigma: usize,
}

impl GaloisQuotient {
    pub fn new(depth: usize) -> Result<Self> {
        let q = FiniteQuotient::new(depth)?;
        let (_, digits) = stabilizer_quotient(depth)?;
        let elems: Vec<(TDigits, bool)> =
            digits.iter().map(|d| (d.clone(), false)).chain(digits.iter().map(|d| (d.clone(), true))).collect();
        let group = FiniteGroup::from_elements(
            &elems,
            |(a, e), (b, f)| {
                let lb = q.lift(b);
                let lb = if *e { lb.sigma() } else { lb };
                Ok((q.project(&(q.lift(a) * lb))?, e ^ f))
            },
            |(d, e)| format!("{d};{}", *e as u8),
        )?;
        let anti: Vec<bool> = elems.iter().map(|(_, e)| *e).collect();
        let sub: Vec<usize> = (0..elems.len()).filter(|&i| !anti[i]).collect();
        let mut pos_in_sub = vec![None; elems.len()];
        for (p, &i) in sub.iter().enumerate() {
            pos_in_sub[i] = Some(p);
        }
        let sigma = elems.iter().position(|(d, e)| *e && *d == q.identity()).expect("sigma present");
        Ok(GaloisQuotient { group, anti, sub, pos_in_sub, sigma })
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }

    pub fn sub_order(&self) -> usize {
        self.sub.len()
    }

    pub fn sigma(&self) -> usize {
        self.sigma
    }

    /// gamma-bar = sigma gamma sigma^{-1}, as a position in S-bar.
    pub fn bar(&self, p: usize) -> usize {
        let g = &self.group;
        let x = g.mul(g.mul(self.sigma, self.sub[p]), g.inv(self.sigma));
        self.pos_in_sub[x].expect("conjugation preserves S-bar")
    }
}

/// A Sigma-comodule as a semilinear representation: g.m = phi_g(m) L_g with phi_g the
/// Frobenius on antilinear elements.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SigmaComodule {
    pub dim: usize,
    pub l: Vec<PackedMat>,
}

/// A Sigma'-comodule (linear S-bar representation, gamma.m = m L_gamma) with
/// tau(m) = conj(m) T.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SigmaPrimePair {
    pub dim: usize,
    pub l: Vec<PackedMat>,
    pub t: PackedMat,
}

impl SigmaComodule {
    pub fn validate(&self, gq: &GaloisQuotient) -> Result<()> {
        let g = &gq.group;
        if self.l[0] != PackedMat::identity(self.dim) {
            return Err(Error::Axiom("identity acts nontrivially".into()));
        }
        for a in 0..g.order() {
            for b in 0..g.order() {
                let lb = if gq.anti[a] { self.l[b].conj() } else { self.l[b].clone() };
                if self.l[g.mul(a, b)] != lb.mul(&self.l[a]) {
                    return Err(Error::Axiom("semilinear action is not associative".into()));
                }
            }
        }
        Ok(())
    }

    /// Component of psi_Sigma at delta_g: m -> g^{-1}.m, as (matrix, antilinear).
    pub fn coaction_component(&self, gq: &GaloisQuotient, g: usize) -> (PackedMat, bool) {
        let gi = gq.group.inv(g);
        (self.l[gi].clone(), gq.anti[gi])
    }

    /// Permutation representation on left cosets of a subgroup of S-bar x| Gal.
    pub fn cosets(gq: &GaloisQuotient, h: &[usize]) -> Self {
        let g = &gq.group;
        let mut coset_of = vec![usize::MAX; g.order()];
        let mut reps = Vec::new();
        for x in 0..g.order() {
            if coset_of[x] == usize::MAX {
                for &y in h {
                    coset_of[g.mul(x, y)] = reps.len();
                }
                reps.push(x);
            }
        }
        let d = reps.len();
        let l = (0..g.order())
            .map(|a| {
                let mut m = PackedMat::zeros(d, d);
                for (c, &x) in reps.iter().enumerate() {
                    m.set(c, coset_of[g.mul(a, x)], GF4::ONE);
                }
                m
            })
            .collect();
        SigmaComodule { dim: d, l }
    }

    /// Sigma as a comodule over itself.
    pub fn regular(gq: &GaloisQuotient) -> Self {
        Self::cosets(gq, &[0])
    }

    pub fn direct_sum(&self, o: &SigmaComodule) -> SigmaComodule {
        let d = self.dim + o.dim;
        let l = self
            .l
            .iter()
            .zip(&o.l)
            .map(|(a, b)| {
                let mut m = PackedMat::zeros(d, d);
                for (i, &r) in a.rows.iter().enumerate() {
                    m.rows[i] = r;
                }
                for (i, &(lo, hi)) in b.rows.iter().enumerate() {
                    m.rows[self.dim + i] = (lo << self.dim, hi << self.dim);
                }
                m
            })
            .collect();
        SigmaComodule { dim: d, l }
    }

    /// New coordinates m' = m P: L'_g = phi_g(P^{-1}) L_g P.
    pub fn change_basis(&self, gq: &GaloisQuotient, p: &PackedMat, pi: &PackedMat) -> SigmaComodule {
        let l = self
            .l
            .iter()
            .enumerate()
            .map(|(g, a)| {
                let left = if gq.anti[g] { pi.conj() } else { pi.clone() };
                left.mul(a).mul(p)
            })
            .collect();
        SigmaComodule { dim: self.dim, l }
    }

    /// Restriction to S-bar with tau = (sigma o ev_sigma (x) id) psi_Sigma.
    pub fn to_pair(&self, gq: &GaloisQuotient) -> SigmaPrimePair {
        let l = gq.sub.iter().map(|&g| self.l[g].clone()).collect();
        // the delta_sigma component of psi is m -> sigma^{-1}.m, antilinear
        let (t, anti) = self.coaction_component(gq, gq.sigma);
        debug_assert!(anti);
        SigmaPrimePair { dim: self.dim, l, t }
    }

    /// psi_Sigma(m) = sum_gamma delta_gamma (x) gamma^{-1}.m + delta_{sigma gamma} (x) gamma^{-1}.tau(m).
    pub fn from_pair(gq: &GaloisQuotient, p: &SigmaPrimePair) -> SigmaComodule {
        let g = &gq.group;
        let mut l = vec![PackedMat::zeros(p.dim, p.dim); g.order()];
        for &gamma in &gq.sub {
            let gi = g.inv(gamma);
            let lgi = &p.l[gq.pos_in_sub[gi].expect("S-bar is a subgroup")];
            // component at delta_gamma gives the action of gamma^{-1}
            l[gi] = lgi.clone();
            // component at delta_{sigma gamma} gives the action of (sigma gamma)^{-1}
            let sg = g.mul(gq.sigma, gamma);
            l[g.inv(sg)] = p.t.mul(lgi);
        }
        SigmaComodule { dim: p.dim, l }
    }
}

impl SigmaPrimePair {
    /// Extracts T from a map assumed antilinear, checking antilinearity on basis data.
    pub fn from_tau(
        dim: usize,
        l: Vec<PackedMat>,
        tau: &dyn Fn(&[GF4]) -> Vec<GF4>,
    ) -> Result<Self> {
        let basis = linalg::identity::<GF4>(dim);
        let t: Mat = basis.iter().map(|e| tau(e)).collect();
        for (i, e) in basis.iter().enumerate() {
            let ze: Vec<GF4> = e.iter().map(|&x| x * GF4::ZETA).collect();
            let expect: Vec<GF4> = t[i].iter().map(|&x| x * GF4::ZETA2).collect();
            if tau(&ze) != expect {
                return Err(Error::Axiom("tau is not antilinear".into()));
            }
            for (j, f) in basis.iter().enumerate().skip(i + 1) {
                let s: Vec<GF4> = e.iter().zip(f).map(|(a, b)| *a + *b).collect();
                let sum: Vec<GF4> = t[i].iter().zip(&t[j]).map(|(a, b)| *a + *b).collect();
                if tau(&s) != sum {
                    return Err(Error::Axiom("tau is not additive".into()));
                }
            }
        }
        Ok(SigmaPrimePair { dim, l, t: PackedMat::from_mat(&t, dim) })
    }

    pub fn tau(&self, m: &[GF4]) -> Vec<GF4> {
        unpack(self.t.apply(pconj(pack(m))), self.dim)
    }

    /// tau is an involution and tau(gamma.m) = gamma-bar.tau(m).
    pub fn validate(&self, gq: &GaloisQuotient) -> Result<()> {
        let g = &gq.group;
        let s = gq.sub_order();
        for a in 0..s {
            for b in 0..s {
                let ab = gq.pos_in_sub[g.mul(gq.sub[a], gq.sub[b])].expect("subgroup");
                if self.l[ab] != self.l[b].mul(&self.l[a]) {
                    return Err(Error::Axiom("S-bar action is not associative".into()));
                }
            }
        }
        if self.t.conj().mul(&self.t) != PackedMat::identity(self.dim) {
            return Err(Error::Axiom("tau is not an involution".into()));
        }
        for p in 0..s {
            if self.l[p].conj().mul(&self.t) != self.t.mul(&self.l[gq.bar(p)]) {
                return Err(Error::Axiom("tau does not intertwine the action".into()));
            }
        }
        Ok(())
    }
}

/// Checks that Sigma' (x)_{F2} F4 with (tau f)(gamma) = conj f(gamma-bar) maps isomorphically
/// onto the image of Sigma via delta_gamma (x) x -> x delta_gamma + conj(x) delta_{gamma sigma}.
pub fn sigma_image_check(gq: &GaloisQuotient) -> Result<bool> {
    let g = &gq.group;
    let sigma_pair = SigmaComodule::regular(gq).to_pair(gq);
    let s = gq.sub_order();
    let d = 2 * s;
    // source basis e_(gamma, x) at 2 * pos + (x == zeta)
    let xs = [GF4::ONE, GF4::ZETA];
    let mut theta = PackedMat::zeros(d, d);
    for (p, &gamma) in gq.sub.iter().enumerate() {
        for (b, &x) in xs.iter().enumerate() {
            let row = 2 * p + b;
            theta.set(row, gamma, x);
            theta.set(row, g.mul(gamma, gq.sigma), x.frobenius());
        }
    }
    let src_l: Vec<PackedMat> = (0..s)
        .map(|p| {
            let mut m = PackedMat::zeros(d, d);
            for q in 0..s {
                let target = gq.pos_in_sub[g.mul(gq.sub[p], gq.sub[q])].expect("subgroup");
                for b in 0..2 {
                    m.set(2 * q + b, 2 * target + b, GF4::ONE);
                }
            }
            m
        })
        .collect();
    let src = SigmaPrimePair::from_tau(d, src_l, &|v: &[GF4]| {
        let mut out = vec![GF4::ZERO; d];
        for q in 0..s {
            for b in 0..2 {
                out[2 * gq.bar(q) + b] = out[2 * gq.bar(q) + b] + v[2 * q + b].frobenius();
            }
        }
        out
    })?;
    src.validate(gq)?;
    sigma_pair.validate(gq)?;
    let invertible = theta.inverse().is_some();
    let equivariant = (0..s).all(|p| src.l[p].mul(&theta) == theta.mul(&sigma_pair.l[p]));
    let intertwines = src.t.mul(&theta) == theta.conj().mul(&sigma_pair.t);
    Ok(invertible && equivariant && intertwines)
}

pub fn random_sigma_comodule<R: Rng + ?Sized>(gq: &GaloisQuotient, rng: &mut R, dim: usize) -> SigmaComodule {
    let g = &gq.group;
    let mut total: Option<SigmaComodule> = None;
    let mut left = dim;
    while left > 0 {
        let gens: Vec<usize> = (0..rng.gen_range(1..=2)).map(|_| rng.gen_range(0..g.order())).collect();
        let h = g.closure(&gens);
        let idx = g.order() / h.len();
        if idx > left {
            continue;
        }
        let piece = SigmaComodule::cosets(gq, &h);
        left -= idx;
        total = Some(match total {
            None => piece,
            Some(t) => t.direct_sum(&piece),
        });
    }
    let m = total.expect("dimension is positive");
    let (p, pi) = random_invertible(rng, dim);
    m.change_basis(gq, &p, &pi)
}

/// Both composites are identities on M and on its image pair; returns false on mismatch.
pub fn sigma_round_trip(gq: &GaloisQuotient, m: &SigmaComodule) -> Result<bool> {
    m.validate(gq)?;
    let pair = m.to_pair(gq);
    pair.validate(gq)?;
    let back = SigmaComodule::from_pair(gq, &pair);
    back.validate(gq)?;
    let again = back.to_pair(gq);
    Ok(back == *m && again == pair)
}

// ---------------------------------------------------------------------------
// Group-likes of C^0(S-bar, F4).

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrouplikeReport {
    pub depth: usize,
    pub group_order: usize,
    pub characters: usize,
    pub span_dim: usize,
    pub kernel_order: usize,
    pub generated_order: usize,
    pub kernel_matches: bool,
}

/// Characters of S-bar, their span and common kernel versus the image of
/// <F_{3/2}, pi, Q8>.
pub fn grouplike_span(depth: usize, named: &NamedElements) -> Result<GrouplikeReport> {
    if depth < 4 {
        return Err(Error::InvalidArgument(format!("group-like span needs depth >= 4, got {depth}")));
    }
    let q = FiniteQuotient::new(depth)?;
    let (g, digits) = stabilizer_quotient(depth)?;
    let chars = g.characters();
    let span_dim = linalg::rank(&chars, g.order());
    let kernel: Vec<usize> = (0..g.order()).filter(|&x| chars.iter().all(|c| c[x] == GF4::ONE)).collect();
    let index: BTreeMap<&TDigits, usize> = digits.iter().enumerate().map(|(i, d)| (d, i)).collect();
    let mut gens: Vec<usize> = q.filtration_subgroup(3).iter().map(|d| index[d]).collect();
    for name in ["pi", "i", "j", "k"] {
        let d = q.project(&named.get(name)?.gamma)?;
        gens.push(*index.get(&d).ok_or_else(|| Error::Inconsistent(format!("{name} not in quotient")))?);
    }
    let generated = g.closure(&gens);
    Ok(GrouplikeReport {
        depth,
        group_order: g.order(),
        characters: chars.len(),
        span_dim,
        kernel_order: kernel.len(),
        generated_order: generated.len(),
        kernel_matches: generated == kernel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn packed_arithmetic_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a: Mat = (0..5).map(|_| (0..5).map(|_| GF4::random(&mut rng)).collect()).collect();
        let b: Mat = (0..5).map(|_| (0..5).map(|_| GF4::random(&mut rng)).collect()).collect();
        let pa = PackedMat::from_mat(&a, 5);
        let pb = PackedMat::from_mat(&b, 5);
        assert_eq!(pa.mul(&pb).to_mat(), linalg::mat_mul(&a, &b, 5));
        let conj: Mat = a.iter().map(|r| r.iter().map(|x| x.frobenius()).collect()).collect();
        assert_eq!(pa.conj().to_mat(), conj);
    }

    #[test]
    fn cyclic_three_is_cosemisimple() {
        let c = GroupCoalgebra::new(FiniteGroup::cyclic(3).unwrap()).unwrap();
        assert!(c.is_cosemisimple());
        assert_eq!(c.characters().len(), 3);
        assert_eq!(c.level_dims(), vec![3]);
        assert!(c.duality_holds());
    }

    #[test]
    fn cyclic_two_trivial_module_is_not_splittable() {
        let c = GroupCoalgebra::new(FiniteGroup::cyclic(2).unwrap()).unwrap();
        assert_eq!(c.radical_powers().len(), 1);
        assert_eq!(c.radical_powers()[0].len(), 1);
        assert_eq!(c.level_dims(), vec![1, 2]);
        let triv = c.trivial_comodule();
        let rep = triv.splittability(&c).unwrap();
        assert!(!rep.splittable());
        let w = rep.witness().unwrap();
        assert_eq!((w.n, w.source_dim, w.target_dim), (1, 0, 1));
        let r = triv.random_retraction(&c, &mut ChaCha8Rng::seed_from_u64(1), true).unwrap();
        assert!(matches!(triv.milnor_moore_split(&c, &r), Err(Error::Domain(_))));
    }

    #[test]
    fn regular_comodule_splits() {
        let g = filtration_semidirect_group().unwrap();
        assert_eq!(g.order(), 48);
        assert!(g.decomposition().is_some());
        let c = GroupCoalgebra::new(g).unwrap();
        assert!(c.duality_holds());
        let m = c.regular_comodule();
        let rep = m.splittability(&c).unwrap();
        assert!(rep.splittable() && rep.injective());
        assert_eq!(rep.primitives_dim, 1);
        let r = m.random_retraction(&c, &mut ChaCha8Rng::seed_from_u64(2), true).unwrap();
        let h = m.milnor_moore_split(&c, &r).unwrap();
        assert_eq!(h.matrix.len(), 48);
        let s = unital_section(&m, &c).unwrap().unwrap();
        assert!(is_unital_section(&m, &c, &s));
    }

    #[test]
    fn sigma_equivalence_small() {
        let gq = GaloisQuotient::new(1).unwrap();
        assert_eq!(gq.group().order(), 6);
        assert!(sigma_image_check(&gq).unwrap());
        let reg = SigmaComodule::regular(&gq);
        assert!(sigma_round_trip(&gq, &reg).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random_sigma_comodule(&gq, &mut rng, 6);
        assert!(sigma_round_trip(&gq, &m).unwrap());
    }
}
