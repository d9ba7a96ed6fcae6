//! Dense linear algebra over a field given by `Coeff::try_inv`.

use crate::base_rings::Coeff;

/// Reduced row echelon form; returns the pivot columns.
pub fn rref<C: Coeff>(m: &mut [Vec<C>], ncols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == m.len() {
            break;
        }
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][c].try_inv().expect("coefficients form a field");
        for x in m[r].iter_mut() {
            *x = *x * inv;
        }
        for i in 0..m.len() {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c];
                let (src, dst) = if i < r {
                    let (a, b) = m.split_at_mut(r);
                    (&b[0], &mut a[i])
                } else {
                    let (a, b) = m.split_at_mut(i);
                    (&a[r], &mut b[0])
                };
                for (d, s) in dst.iter_mut().zip(src.iter()) {
                    *d = *d - f * *s;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank<C: Coeff>(m: &[Vec<C>], ncols: usize) -> usize {
    let mut a = m.to_vec();
    rref(&mut a, ncols).len()
}

pub fn determinant<C: Coeff>(m: &[Vec<C>]) -> C {
    let n = m.len();
    let mut a = m.to_vec();
    let mut det = C::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !a[i][c].is_zero()) else {
            return C::zero();
        };
        if p != c {
            a.swap(p, c);
            det = -det;
        }
        det = det * a[c][c];
        let inv = a[c][c].try_inv().expect("coefficients form a field");
        for i in (c + 1)..n {
            let f = a[i][c] * inv;
            if f.is_zero() {
                continue;
            }
            for j in c..n {
                let v = a[c][j];
                a[i][j] = a[i][j] - f * v;
            }
        }
    }
    det
}

pub type Matrix<C> = Vec<Vec<C>>;

pub fn identity<C: Coeff>(n: usize) -> Matrix<C> {
    (0..n).map(|i| (0..n).map(|j| if i == j { C::one() } else { C::zero() }).collect()).collect()
}

pub fn zeros<C: Coeff>(r: usize, c: usize) -> Matrix<C> {
    vec![vec![C::zero(); c]; r]
}

pub fn mat_mul<C: Coeff>(a: &[Vec<C>], b: &[Vec<C>], bcols: usize) -> Matrix<C> {
    a.iter()
        .map(|row| {
            let mut out = vec![C::zero(); bcols];
            for (k, x) in row.iter().enumerate() {
                if x.is_zero() {
                    continue;
                }
                for (o, y) in out.iter_mut().zip(b[k].iter()) {
                    *o = *o + *x * *y;
                }
            }
            out
        })
        .collect()
}

/// Row vector times matrix.
pub fn vec_mul<C: Coeff>(v: &[C], m: &[Vec<C>], cols: usize) -> Vec<C> {
    mat_mul(&[v.to_vec()], m, cols).pop().unwrap_or_default()
}

pub fn transpose<C: Coeff>(m: &[Vec<C>], cols: usize) -> Matrix<C> {
    (0..cols).map(|j| m.iter().map(|r| r[j]).collect()).collect()
}

pub fn inverse<C: Coeff>(m: &[Vec<C>]) -> Option<Matrix<C>> {
    let n = m.len();
    let mut a: Matrix<C> = m
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut v = r.clone();
            v.extend((0..n).map(|j| if i == j { C::one() } else { C::zero() }));
            v
        })
        .collect();
    let piv = rref(&mut a, n);
    if piv.len() < n || piv[n - 1] != n - 1 {
        return None;
    }
    Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Reduced basis of the row space.
pub fn row_basis<C: Coeff>(rows: &[Vec<C>], ncols: usize) -> Matrix<C> {
    let mut a = rows.to_vec();
    let k = rref(&mut a, ncols).len();
    a.truncate(k);
    a
}

/// Basis of {v : v m = 0} for an r x c matrix m.
pub fn left_kernel<C: Coeff>(m: &[Vec<C>], cols: usize) -> Matrix<C> {
    let t = transpose(m, cols);
    right_kernel(&t, m.len())
}

/// Basis of {x : m x = 0}.
pub fn right_kernel<C: Coeff>(m: &[Vec<C>], cols: usize) -> Matrix<C> {
    let mut a = m.to_vec();
    let piv = rref(&mut a, cols);
    (0..cols)
        .filter(|c| !piv.contains(c))
        .map(|f| {
            let mut v = vec![C::zero(); cols];
            v[f] = C::one();
            for (r, &c) in piv.iter().enumerate() {
                v[c] = -a[r][f];
            }
            v
        })
        .collect()
}

/// Whether v lies in the row space of `basis`.
pub fn in_span<C: Coeff>(basis: &[Vec<C>], v: &[C], ncols: usize) -> bool {
    let mut a = basis.to_vec();
    a.push(v.to_vec());
    rank(&a, ncols) == rank(basis, ncols)
}

/// Whether every row of `sub` lies in the row space of `sup`.
pub fn contains_all<C: Coeff>(sup: &[Vec<C>], sub: &[Vec<C>], ncols: usize) -> bool {
    let mut a = sup.to_vec();
    a.extend(sub.iter().cloned());
    rank(&a, ncols) == rank(sup, ncols)
}

/// Coordinates of v in a basis of independent rows, if v is in their span.
pub fn coordinates<C: Coeff>(basis: &[Vec<C>], v: &[C], ncols: usize) -> Option<Vec<C>> {
    let rows: Vec<(Vec<C>, C)> =
        (0..ncols).map(|j| (basis.iter().map(|b| b[j]).collect(), v[j])).collect();
    solve_affine(&rows, basis.len()).map(|s| s.particular)
}

/// Solutions of an affine system: a particular solution plus a kernel basis.
#[derive(Clone, Debug)]
pub struct AffineSolution<C> {
    pub particular: Vec<C>,
    pub kernel: Vec<Vec<C>>,
}

impl<C: Coeff> AffineSolution<C> {
    /// Values of the unknowns that are the same for every solution.
    pub fn fixed_values(&self) -> Vec<Option<C>> {
        (0..self.particular.len())
            .map(|i| {
                if self.kernel.iter().all(|k| k[i].is_zero()) {
                    Some(self.particular[i])
                } else {
                    None
                }
            })
            .collect()
    }
}

/// Solves sum_j row[j] x_j = rhs for every (row, rhs); None when inconsistent.
pub fn solve_affine<C: Coeff>(rows: &[(Vec<C>, C)], ncols: usize) -> Option<AffineSolution<C>> {
    let mut m: Vec<Vec<C>> = rows
        .iter()
        .filter(|(r, b)| !(r.iter().all(|x| x.is_zero()) && b.is_zero()))
        .map(|(r, b)| {
            let mut v = r.clone();
            v.push(*b);
            v
        })
        .collect();
    let pivots = rref(&mut m, ncols + 1);
    if pivots.last() == Some(&ncols) {
        return None;
    }
    let mut particular = vec![C::zero(); ncols];
    for (r, &c) in pivots.iter().enumerate() {
        particular[c] = m[r][ncols];
    }
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    let kernel = free
        .iter()
        .map(|&f| {
            let mut v = vec![C::zero(); ncols];
            v[f] = C::one();
            for (r, &c) in pivots.iter().enumerate() {
                v[c] = -m[r][f];
            }
            v
        })
        .collect();
    Some(AffineSolution { particular, kernel })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base_rings::GF4;

    #[test]
    fn solves_and_reports_fixed() {
        let o = GF4::ONE;
        let z = GF4::ZERO;
        let rows = vec![(vec![o, o, z], GF4::ZETA), (vec![z, z, o], o)];
        let s = solve_affine(&rows, 3).unwrap();
        assert_eq!(s.kernel.len(), 1);
        assert_eq!(s.fixed_values(), vec![None, None, Some(o)]);
        let bad = vec![(vec![o], o), (vec![o], z)];
        assert!(solve_affine(&bad, 1).is_none());
    }

    #[test]
    fn determinant_matches_rank() {
        let m = vec![vec![GF4::ONE, GF4::ZETA], vec![GF4::ZETA, GF4::ZETA2]];
        assert_eq!(determinant(&m), GF4::ZETA2 + GF4::ZETA2);
        assert_eq!(rank(&m, 2), 1);
    }

    #[test]
    fn inverse_and_kernels() {
        let (o, z, w) = (GF4::ONE, GF4::ZERO, GF4::ZETA);
        let m = vec![vec![o, w, z], vec![z, o, o], vec![o, z, o]];
        let inv = inverse(&m).unwrap();
        assert_eq!(mat_mul(&m, &inv, 3), identity::<GF4>(3));
        let sing = vec![vec![o, w], vec![w, GF4::ZETA2]];
        assert!(inverse(&sing).is_none());
        let lk = left_kernel(&sing, 2);
        assert_eq!(lk.len(), 1);
        assert!(vec_mul(&lk[0], &sing, 2).iter().all(|x| *x == GF4::ZERO));
        let rk = right_kernel(&sing, 2);
        assert_eq!(rk.len(), 1);
    }
}
