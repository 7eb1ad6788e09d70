use super::exec::Executor;
use super::system::{LinearSystem, SolveResult};
use super::SolverError;
use crate::Scalar;

/// Pivots smaller than this after row exchange mark the matrix singular.
pub const PIVOT_THRESHOLD: f64 = 1e-12;

/// Gaussian elimination with partial pivoting, single-threaded.
pub fn gauss_eliminate<T: Scalar>(system: &LinearSystem<T>) -> Result<SolveResult<T>, SolverError> {
    eliminate(system, &Executor::new(1)?)
}

/// Same as [`gauss_eliminate`], with the row updates below each pivot split across `workers`.
pub fn gauss_eliminate_with_workers<T: Scalar>(
    system: &LinearSystem<T>,
    workers: usize,
) -> Result<SolveResult<T>, SolverError> {
    eliminate(system, &Executor::new(workers)?)
}

pub(crate) fn eliminate<T: Scalar>(
    system: &LinearSystem<T>,
    exec: &Executor,
) -> Result<SolveResult<T>, SolverError> {
    system.require_square()?;
    let n = system.rows();
    let w = n + 1;
    // Augmented rows [a_i | y_i].
    let mut aug = Vec::with_capacity(n * w);
    for i in 0..n {
        aug.extend_from_slice(system.row(i));
        aug.push(system.rhs()[i]);
    }
    let threshold = T::of(PIVOT_THRESHOLD);

    for k in 0..n {
        let (p, pivot) = (k..n)
            .map(|i| (i, aug[i * w + k].abs()))
            .fold((k, T::neg_infinity()), |best, cur| if cur.1 > best.1 { cur } else { best });
        if !(pivot >= threshold) {
            return Err(SolverError::Singular {
                column: k,
                pivot: pivot.to_f64_lossy(),
            });
        }
        if p != k {
            for j in k..w {
                aug.swap(k * w + j, p * w + j);
            }
        }

        let (upper, lower) = aug.split_at_mut((k + 1) * w);
        let pivot_row = &upper[k * w..];
        exec.for_row_blocks(lower, w, |_, block| {
            for row in block.chunks_mut(w) {
                let factor = row[k] / pivot_row[k];
                if factor == T::zero() {
                    continue;
                }
                row[k] = T::zero();
                for (dst, &src) in row[k + 1..].iter_mut().zip(&pivot_row[k + 1..]) {
                    *dst -= factor * src;
                }
            }
        });
    }

    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let row = &aug[i * w..(i + 1) * w];
        let tail: T = (i + 1..n).map(|j| row[j] * x[j]).sum();
        x[i] = (row[n] - tail) / row[i];
    }

    let residual_norm = system.residual_norm(&x);
    Ok(SolveResult {
        x,
        residual_norm,
        iterations: 0,
        converged: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_passthrough() {
        let s = LinearSystem::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![3.0, -1.0]).unwrap();
        let r = gauss_eliminate(&s).unwrap();
        assert_eq!(r.x, vec![3.0, -1.0]);
        assert_eq!(r.residual_norm, 0.0);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn two_by_two_matches_substitution() {
        // 4x + y = 1, x + 3y = 2  =>  x = 1/11, y = 7/11
        let s = LinearSystem::new(vec![vec![4.0f64, 1.0], vec![1.0, 3.0]], vec![1.0, 2.0]).unwrap();
        let r = gauss_eliminate(&s).unwrap();
        assert!((r.x[0] - 1.0 / 11.0).abs() < 1e-15);
        assert!((r.x[1] - 7.0 / 11.0).abs() < 1e-15);
        assert!(r.residual_norm <= 1e-9);
    }

    #[test]
    fn zero_column_is_singular() {
        let s = LinearSystem::new(vec![vec![0.0, 1.0], vec![0.0, 2.0]], vec![1.0, 2.0]).unwrap();
        assert!(matches!(
            gauss_eliminate(&s),
            Err(SolverError::Singular { column: 0, .. })
        ));
    }

    #[test]
    fn needs_pivoting() {
        let s = LinearSystem::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![2.0, 5.0]).unwrap();
        assert_eq!(gauss_eliminate(&s).unwrap().x, vec![5.0, 2.0]);
    }

    #[test]
    fn rejects_rectangular() {
        let s = LinearSystem::new(vec![vec![1.0, 0.0]], vec![1.0]).unwrap();
        assert!(matches!(gauss_eliminate(&s), Err(SolverError::Dimension(_))));
    }

    #[test]
    fn f32_solves() {
        let s = LinearSystem::new(vec![vec![4.0f32, 1.0], vec![1.0, 3.0]], vec![1.0, 2.0]).unwrap();
        let r = gauss_eliminate(&s).unwrap();
        assert!((r.x[0] - 1.0 / 11.0).abs() < 1e-6);
    }

    #[test]
    fn worker_split_matches_serial() {
        let s = super::super::dominant_system::<f64>(40, 11);
        let serial = gauss_eliminate(&s).unwrap();
        for w in [2, 3, 8] {
            assert_eq!(gauss_eliminate_with_workers(&s, w).unwrap().x, serial.x);
        }
    }
}
