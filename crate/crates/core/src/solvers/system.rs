use serde::Serialize;

use super::SolverError;
use crate::Scalar;

/// Coefficient matrix `a` (row-major, `rows × cols`) with right-hand side `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem<T> {
    rows: usize,
    cols: usize,
    a: Vec<T>,
    y: Vec<T>,
}

impl<T: Scalar> LinearSystem<T> {
    /// Builds a system from a list of rows. All rows must share one length.
    pub fn new(rows: Vec<Vec<T>>, y: Vec<T>) -> Result<Self, SolverError> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != m) {
            return Err(SolverError::Dimension(format!(
                "row {i} has {} columns, expected {m}",
                r.len()
            )));
        }
        Self::from_row_major(n, m, rows.into_iter().flatten().collect(), y)
    }

    pub fn from_row_major(
        rows: usize,
        cols: usize,
        a: Vec<T>,
        y: Vec<T>,
    ) -> Result<Self, SolverError> {
        if rows == 0 || cols == 0 {
            return Err(SolverError::Dimension(format!(
                "system must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if a.len() != rows * cols {
            return Err(SolverError::Dimension(format!(
                "coefficient buffer holds {} entries, expected {}",
                a.len(),
                rows * cols
            )));
        }
        if y.len() != rows {
            return Err(SolverError::Dimension(format!(
                "right-hand side has length {}, expected {rows}",
                y.len()
            )));
        }
        if let Some(index) = a.iter().position(|v| !v.is_finite()) {
            return Err(SolverError::NonFinite { what: "matrix", index });
        }
        if let Some(index) = y.iter().position(|v| !v.is_finite()) {
            return Err(SolverError::NonFinite { what: "rhs", index });
        }
        Ok(Self { rows, cols, a, y })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.a[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.a[i * self.cols..(i + 1) * self.cols]
    }

    pub fn matrix(&self) -> &[T] {
        &self.a
    }

    pub fn rhs(&self) -> &[T] {
        &self.y
    }

    /// Euclidean norm of `A·x − y`.
    pub fn residual_norm(&self, x: &[T]) -> T {
        debug_assert_eq!(x.len(), self.cols);
        let mut acc = T::zero();
        for i in 0..self.rows {
            let r = dot(self.row(i), x) - self.y[i];
            acc += r * r;
        }
        acc.sqrt()
    }

    /// Normal equations `AᵀA x = Aᵀy` as a square system.
    pub fn normal_equations(&self) -> Self {
        let m = self.cols;
        let mut ata = vec![T::zero(); m * m];
        let mut aty = vec![T::zero(); m];
        for i in 0..self.rows {
            let row = self.row(i);
            for p in 0..m {
                aty[p] += row[p] * self.y[i];
                for q in 0..m {
                    ata[p * m + q] += row[p] * row[q];
                }
            }
        }
        Self {
            rows: m,
            cols: m,
            a: ata,
            y: aty,
        }
    }

    /// Applies the same row permutation to `a` and `y`: new row `k` is old row `perm[k]`.
    pub fn permute_rows(&self, perm: &[usize]) -> Result<Self, SolverError> {
        let mut seen = vec![false; self.rows];
        if perm.len() != self.rows || perm.iter().any(|&p| p >= self.rows || std::mem::replace(&mut seen[p], true)) {
            return Err(SolverError::Dimension("not a permutation of the row indices".into()));
        }
        let mut a = Vec::with_capacity(self.a.len());
        for &p in perm {
            a.extend_from_slice(self.row(p));
        }
        let y = perm.iter().map(|&p| self.y[p]).collect();
        Ok(Self { a, y, ..*self })
    }

    pub(crate) fn require_square(&self) -> Result<(), SolverError> {
        if self.is_square() {
            Ok(())
        } else {
            Err(SolverError::Dimension(format!(
                "square system required, got {}x{}",
                self.rows, self.cols
            )))
        }
    }
}

#[inline]
pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&p, &q)| acc + p * q)
}

/// Output of any solver. `iterations` is 0 for direct methods.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveResult<T> {
    pub x: Vec<T>,
    pub residual_norm: T,
    pub iterations: usize,
    pub converged: bool,
}

/// Weak row dominance `|a_ii| ≥ Σ_{j≠i} |a_ij|` on every row, strict on at least one.
pub fn is_diagonally_dominant<T: Scalar>(system: &LinearSystem<T>) -> Result<bool, SolverError> {
    system.require_square()?;
    let mut any_strict = false;
    for i in 0..system.rows() {
        let row = system.row(i);
        let diag = row[i].abs();
        let off: T = row
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, v)| v.abs())
            .sum();
        if diag < off {
            return Ok(false);
        }
        any_strict |= diag > off;
    }
    Ok(any_strict)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys(rows: Vec<Vec<f64>>) -> LinearSystem<f64> {
        let n = rows.len();
        LinearSystem::new(rows, vec![0.0; n]).unwrap()
    }

    #[test]
    fn dominance_examples() {
        assert!(is_diagonally_dominant(&sys(vec![vec![4.0, 1.0], vec![1.0, 3.0]])).unwrap());
        assert!(!is_diagonally_dominant(&sys(vec![vec![1.0, 2.0], vec![2.0, 1.0]])).unwrap());
        let mixed = sys(vec![
            vec![2.0, 1.0, 1.0],
            vec![1.0, 3.0, 1.0],
            vec![0.0, 1.0, 2.0],
        ]);
        assert!(is_diagonally_dominant(&mixed).unwrap());
    }

    #[test]
    fn dominance_needs_one_strict_row() {
        let weak = sys(vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
        assert!(!is_diagonally_dominant(&weak).unwrap());
    }

    #[test]
    fn dominance_rejects_rectangular() {
        let rect = LinearSystem::new(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]], vec![0.0; 3]).unwrap();
        assert!(matches!(is_diagonally_dominant(&rect), Err(SolverError::Dimension(_))));
    }

    #[test]
    fn construction_validates() {
        assert!(LinearSystem::<f64>::new(vec![], vec![]).is_err());
        assert!(LinearSystem::new(vec![vec![1.0, 2.0], vec![1.0]], vec![0.0, 0.0]).is_err());
        assert!(LinearSystem::new(vec![vec![1.0]], vec![0.0, 1.0]).is_err());
        assert!(matches!(
            LinearSystem::new(vec![vec![f64::NAN]], vec![0.0]),
            Err(SolverError::NonFinite { what: "matrix", .. })
        ));
        assert!(matches!(
            LinearSystem::new(vec![vec![1.0]], vec![f64::INFINITY]),
            Err(SolverError::NonFinite { what: "rhs", .. })
        ));
    }

    #[test]
    fn normal_equations_of_rectangular() {
        let s = LinearSystem::new(
            vec![vec![1.0, 0.0], vec![0.0, 2.0], vec![1.0, 1.0]],
            vec![1.0, 2.0, 3.0],
        )
        .unwrap();
        let ne = s.normal_equations();
        assert_eq!(ne.matrix(), &[2.0, 1.0, 1.0, 5.0]);
        assert_eq!(ne.rhs(), &[4.0, 7.0]);
    }
}
