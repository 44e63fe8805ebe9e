//! Small exact integer and rational linear algebra.
//!
//! Fans, cones, and polytopes in this crate live in lattices of rank at most
//! six or so; everything here is written for that regime — exact arithmetic
//! and simplicity over asymptotics. Integer matrices are `Vec` of rows;
//! rational elimination underlies inversion, rank, kernels, and solving.

use num_integer::Integer;
use num_traits::Zero;

use crate::rat::{rat_int, Rat};

/// An integer lattice vector.
pub type IntVec = Vec<i64>;

/// An integer matrix as a list of rows.
pub type IntMat = Vec<IntVec>;

/// Dot product (panics on length mismatch; overflow checked in debug builds).
pub fn dot(a: &[i64], b: &[i64]) -> i64 {
    assert_eq!(a.len(), b.len(), "dot product dimension mismatch");
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Determinant of a square integer matrix, by fraction-free elimination.
pub fn det(m: &[IntVec]) -> i128 {
    let n = m.len();
    if n == 0 {
        return 1;
    }
    let mut a: Vec<Vec<i128>> = m
        .iter()
        .map(|row| {
            assert_eq!(row.len(), n, "determinant of a non-square matrix");
            row.iter().map(|&x| i128::from(x)).collect()
        })
        .collect();
    let mut sign: i128 = 1;
    let mut prev: i128 = 1;
    for k in 0..n {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&i| a[i][k] != 0) {
                Some(i) => {
                    a.swap(k, i);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
            a[i][k] = 0;
        }
        prev = a[k][k];
    }
    sign * a[n - 1][n - 1]
}

/// Reduced row echelon form; returns the matrix and the pivot column of each
/// pivot row.
fn rref(mut m: Vec<Vec<Rat>>) -> (Vec<Vec<Rat>>, Vec<usize>) {
    let rows = m.len();
    let cols = if rows == 0 { 0 } else { m[0].len() };
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][c].clone();
        for x in m[r].iter_mut() {
            *x /= inv.clone();
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in 0..cols {
                    let s = m[r][j].clone() * f.clone();
                    m[i][j] -= s;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    (m, pivots)
}

fn to_rat_matrix(m: &[IntVec]) -> Vec<Vec<Rat>> {
    m.iter()
        .map(|row| row.iter().map(|&x| rat_int(x)).collect())
        .collect()
}

/// Rank of an integer matrix.
pub fn rank(m: &[IntVec]) -> usize {
    rref(to_rat_matrix(m)).1.len()
}

/// Inverse of a square integer matrix over the rationals, if nonsingular.
pub fn inverse_rat(m: &[IntVec]) -> Option<Vec<Vec<Rat>>> {
    let n = m.len();
    let mut aug = Vec::with_capacity(n);
    for (i, row) in m.iter().enumerate() {
        assert_eq!(row.len(), n, "inverse of a non-square matrix");
        let mut r: Vec<Rat> = row.iter().map(|&x| rat_int(x)).collect();
        for j in 0..n {
            r.push(rat_int(i64::from(i == j)));
        }
        aug.push(r);
    }
    let (red, pivots) = rref(aug);
    if pivots.len() != n || pivots.iter().enumerate().any(|(i, &c)| c != i) {
        return None;
    }
    Some(red.into_iter().map(|row| row[n..].to_vec()).collect())
}

/// Solves `M x = rhs` for square nonsingular integer `M`.
pub fn solve_rat(m: &[IntVec], rhs: &[Rat]) -> Option<Vec<Rat>> {
    let inv = inverse_rat(m)?;
    Some(
        inv.iter()
            .map(|row| {
                row.iter()
                    .zip(rhs)
                    .map(|(a, b)| a.clone() * b.clone())
                    .sum()
            })
            .collect(),
    )
}

/// Basis of the kernel `{ x : M x = 0 }` of an integer matrix, over the
/// rationals.
pub fn kernel_rat(m: &[IntVec]) -> Vec<Vec<Rat>> {
    let rows = m.len();
    let cols = if rows == 0 { 0 } else { m[0].len() };
    let (red, pivots) = rref(to_rat_matrix(m));
    let mut basis = Vec::new();
    for c in 0..cols {
        if pivots.contains(&c) {
            continue;
        }
        let mut v = vec![Rat::zero(); cols];
        v[c] = rat_int(1);
        for (r, &pc) in pivots.iter().enumerate() {
            v[pc] = -red[r][c].clone();
        }
        basis.push(v);
    }
    basis
}

/// Divides out the content (gcd of entries); the zero vector stays zero.
pub fn primitive(v: &[i64]) -> IntVec {
    let g = v.iter().fold(0i64, |acc, &x| acc.gcd(&x));
    if g <= 1 {
        return v.to_vec();
    }
    v.iter().map(|&x| x / g).collect()
}

/// Clears denominators of a rational vector and divides out the content,
/// producing a primitive integer vector in the same direction.
pub fn primitive_from_rat(v: &[Rat]) -> IntVec {
    let mut den: i64 = 1;
    for x in v {
        let d = i64::try_from(x.denom().clone()).expect("denominator fits i64");
        den = den.lcm(&d);
    }
    let ints: IntVec = v
        .iter()
        .map(|x| {
            let scaled = x * rat_int(den);
            i64::try_from(scaled.numer().clone()).expect("numerator fits i64")
        })
        .collect();
    primitive(&ints)
}

/// For rays `n_0 .. n_{k-1}` forming a square nonsingular matrix, the dual
/// vectors `m_0 .. m_{k-1}` with `m_i · n_j = delta_ij`.
pub fn dual_basis(rays: &[IntVec]) -> Option<Vec<Vec<Rat>>> {
    let inv = inverse_rat(rays)?;
    let n = rays.len();
    Some(
        (0..n)
            .map(|j| (0..n).map(|i| inv[i][j].clone()).collect())
            .collect(),
    )
}

/// Dot product of a rational vector with an integer vector.
pub fn dot_rat(a: &[Rat], b: &[i64]) -> Rat {
    assert_eq!(a.len(), b.len(), "dot product dimension mismatch");
    a.iter().zip(b).map(|(x, &y)| x.clone() * rat_int(y)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;

    #[test]
    fn determinants() {
        assert_eq!(det(&[vec![2]]), 2);
        assert_eq!(det(&[vec![1, 2], vec![3, 4]]), -2);
        assert_eq!(det(&[vec![0, 1], vec![-1, -1]]), 1);
        assert_eq!(
            det(&[vec![2, 0, 0], vec![0, 3, 0], vec![0, 0, 5]]),
            30
        );
        assert_eq!(det(&[vec![1, 2], vec![2, 4]]), 0);
        // Rank-5 example with unit determinant: small elementary product.
        let m = vec![
            vec![1, 0, 0, 0, 1],
            vec![0, 1, 0, 0, 1],
            vec![0, 0, 1, 0, 1],
            vec![0, 0, 0, 1, 1],
            vec![-1, -1, -1, -1, 1],
        ];
        assert_eq!(det(&m), 5);
    }

    #[test]
    fn inversion_round_trip() {
        let m = vec![vec![2, 1], vec![7, 4]];
        let inv = inverse_rat(&m).unwrap();
        assert_eq!(inv[0], vec![rat_int(4), rat_int(-1)]);
        assert_eq!(inv[1], vec![rat_int(-7), rat_int(2)]);
        assert!(inverse_rat(&[vec![1, 2], vec![2, 4]]).is_none());
        let odd = vec![vec![0, 1], vec![-1, -1]];
        let inv = inverse_rat(&odd).unwrap();
        // Columns of the inverse are the duals; see dual_basis below.
        assert_eq!(inv[0], vec![rat_int(-1), rat_int(-1)]);
        assert_eq!(inv[1], vec![rat_int(1), rat_int(0)]);
    }

    #[test]
    fn dual_basis_delta_property() {
        let rays = vec![vec![0, 1], vec![-1, -1]];
        let duals = dual_basis(&rays).unwrap();
        assert_eq!(duals[0], vec![rat_int(-1), rat_int(1)]);
        assert_eq!(duals[1], vec![rat_int(-1), rat_int(0)]);
        for (i, m) in duals.iter().enumerate() {
            for (j, n) in rays.iter().enumerate() {
                assert_eq!(dot_rat(m, n), rat_int(i64::from(i == j)));
            }
        }
    }

    #[test]
    fn kernel_and_rank() {
        let m = vec![vec![1, 1, 0], vec![0, 1, 1]];
        assert_eq!(rank(&m), 2);
        let k = kernel_rat(&m);
        assert_eq!(k.len(), 1);
        assert_eq!(k[0], vec![rat_int(1), rat_int(-1), rat_int(1)]);
        assert_eq!(rank(&[vec![1, 2], vec![2, 4]]), 1);
    }

    #[test]
    fn solving() {
        let m = vec![vec![1, 1], vec![1, -1]];
        let x = solve_rat(&m, &[rat_int(3), rat_int(1)]).unwrap();
        assert_eq!(x, vec![rat_int(2), rat_int(1)]);
    }

    #[test]
    fn primitive_vectors() {
        assert_eq!(primitive(&[2, 4, -6]), vec![1, 2, -3]);
        assert_eq!(primitive(&[0, 0]), vec![0, 0]);
        assert_eq!(primitive(&[-3, 0]), vec![-1, 0]);
        assert_eq!(
            primitive_from_rat(&[rat(1, 2), rat(-1, 3)]),
            vec![3, -2]
        );
    }
}
