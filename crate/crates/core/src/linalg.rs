//! Dense matrices over the rationals: Kronecker products, rank, determinant.

use std::fmt;

use num_traits::{One, Zero};

use crate::rational::{fmt_q, Q};

#[derive(Clone, PartialEq, Eq)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Q>,
}

impl RationalMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Q::zero(); rows * cols] }
    }

    pub fn from_rows(rows: Vec<Vec<Q>>) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged matrix");
        let n = rows.len();
        Self { rows: n, cols, data: rows.into_iter().flatten().collect() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &Q {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Q) {
        self.data[r * self.cols + c] = v;
    }

    pub fn entries(&self) -> &[Q] {
        &self.data
    }

    pub fn kron(&self, other: &Self) -> Self {
        let mut out = Self::zeros(self.rows * other.rows, self.cols * other.cols);
        for r1 in 0..self.rows {
            for c1 in 0..self.cols {
                let a = self.get(r1, c1);
                if a.is_zero() {
                    continue;
                }
                for r2 in 0..other.rows {
                    for c2 in 0..other.cols {
                        let b = other.get(r2, c2);
                        if !b.is_zero() {
                            out.set(r1 * other.rows + r2, c1 * other.cols + c2, a * b);
                        }
                    }
                }
            }
        }
        out
    }

    /// `self ⊗ self ⊗ … ⊗ self` (`n` factors, `n ≥ 1`).
    pub fn kron_power(&self, n: usize) -> Self {
        assert!(n >= 1, "kronecker power needs at least one factor");
        (1..n).fold(self.clone(), |acc, _| acc.kron(self))
    }

    pub fn mul_vec(&self, v: &[Q]) -> Vec<Q> {
        assert_eq!(v.len(), self.cols, "dimension mismatch");
        (0..self.rows)
            .map(|r| {
                self.data[r * self.cols..(r + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .filter(|(a, _)| !a.is_zero())
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.get(r, c).clone());
            }
        }
        out
    }

    /// Row echelon reduction; returns the rank and, for square input, the determinant.
    fn eliminate(&self) -> (usize, Q) {
        let mut m = self.data.clone();
        let cols = self.cols;
        let mut rank = 0;
        let mut det = Q::one();
        for col in 0..cols {
            if rank == self.rows {
                break;
            }
            let Some(pivot) = (rank..self.rows).find(|&r| !m[r * cols + col].is_zero()) else {
                det = Q::zero();
                continue;
            };
            if pivot != rank {
                for c in 0..cols {
                    m.swap(pivot * cols + c, rank * cols + c);
                }
                det = -det;
            }
            let p = m[rank * cols + col].clone();
            det *= &p;
            let pivot_row: Vec<Q> = m[rank * cols + col..(rank + 1) * cols].to_vec();
            for r in rank + 1..self.rows {
                let entry = &m[r * cols + col];
                if entry.is_zero() {
                    continue;
                }
                let factor = entry / &p;
                for (offset, pv) in pivot_row.iter().enumerate() {
                    if !pv.is_zero() {
                        let idx = r * cols + col + offset;
                        m[idx] -= &factor * pv;
                    }
                }
            }
            rank += 1;
        }
        if rank < self.rows || self.rows != self.cols {
            det = Q::zero();
        }
        (rank, det)
    }

    pub fn rank(&self) -> usize {
        self.eliminate().0
    }

    /// Determinant; zero for non-square matrices.
    pub fn determinant(&self) -> Q {
        if self.rows != self.cols {
            return Q::zero();
        }
        self.eliminate().1
    }

    pub fn rank_and_determinant(&self) -> (usize, Q) {
        self.eliminate()
    }
}

impl fmt::Debug for RationalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|c| fmt_q(self.get(r, c))).collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};
    use proptest::prelude::*;

    fn m(rows: &[&[i64]]) -> RationalMatrix {
        RationalMatrix::from_rows(rows.iter().map(|r| r.iter().map(|&x| qi(x)).collect()).collect())
    }

    #[test]
    fn small_ranks_and_dets() {
        assert_eq!(m(&[&[1, 2], &[2, 4]]).rank(), 1);
        assert_eq!(m(&[&[0, 1], &[1, 0]]).determinant(), qi(-1));
        assert_eq!(m(&[&[2, 0, 1], &[1, 3, 2], &[1, 1, 2]]).determinant(), qi(6));
        assert_eq!(m(&[&[1, 2, 3], &[2, 4, 6]]).rank(), 1);
        assert_eq!(m(&[&[0, 0], &[0, 0]]).rank(), 0);
        assert_eq!(m(&[&[1, 2, 3]]).determinant(), qi(0));
    }

    #[test]
    fn kron_layout() {
        let a = m(&[&[1, 2], &[3, 4]]);
        let b = m(&[&[0, 5], &[6, 7]]);
        let k = a.kron(&b);
        assert_eq!(k.get(0, 1), &qi(5));
        assert_eq!(k.get(3, 2), &qi(4 * 6));
        assert_eq!(k.get(2, 3), &qi(4 * 5));
        assert_eq!(a.kron_power(1), a);
    }

    #[test]
    fn mul_vec_matches_definition() {
        let a = RationalMatrix::from_rows(vec![vec![q(1, 2), q(1, 3)], vec![qi(0), qi(2)]]);
        assert_eq!(a.mul_vec(&[qi(6), qi(3)]), vec![qi(4), qi(6)]);
    }

    proptest! {
        // det(A ⊗ B) = det(A)^n det(B)^m for A m×m and B n×n
        #[test]
        fn kron_determinant_identity(a in prop::collection::vec(-4i64..5, 4), b in prop::collection::vec(-4i64..5, 9)) {
            let a = RationalMatrix::from_rows(a.chunks(2).map(|r| r.iter().map(|&x| qi(x)).collect()).collect());
            let b = RationalMatrix::from_rows(b.chunks(3).map(|r| r.iter().map(|&x| qi(x)).collect()).collect());
            let lhs = a.kron(&b).determinant();
            let da = a.determinant();
            let db = b.determinant();
            let rhs = num_traits::pow(da, 3) * num_traits::pow(db, 2);
            prop_assert_eq!(lhs, rhs);
            prop_assert_eq!(a.kron(&b).rank(), a.rank() * b.rank());
        }
    }
}
