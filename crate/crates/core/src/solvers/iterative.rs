use super::exec::Executor;
use super::system::{dot, LinearSystem, SolveResult};
use super::SolverError;
use crate::Scalar;

fn check_inputs<T: Scalar>(
    system: &LinearSystem<T>,
    tol: T,
    max_iter: usize,
) -> Result<(), SolverError> {
    system.require_square()?;
    if !(tol > T::zero()) {
        return Err(SolverError::InvalidParameter(format!("tol must be positive, got {tol}")));
    }
    if max_iter == 0 {
        return Err(SolverError::InvalidParameter("max_iter must be at least 1".into()));
    }
    if let Some(row) = (0..system.rows()).find(|&i| system.get(i, i) == T::zero()) {
        return Err(SolverError::ZeroDiagonal { row });
    }
    Ok(())
}

/// Shared driver: starts from x = 0, stops once `‖A·x − y‖₂ ≤ tol`, after
/// `max_iter` sweeps, or when the iterate stops being finite.
fn iterate<T: Scalar>(
    system: &LinearSystem<T>,
    tol: T,
    max_iter: usize,
    mut sweep: impl FnMut(&mut Vec<T>),
) -> SolveResult<T> {
    let mut x = vec![T::zero(); system.cols()];
    let mut iterations = 0;
    loop {
        let residual_norm = system.residual_norm(&x);
        let converged = residual_norm <= tol;
        if converged || iterations == max_iter || !residual_norm.is_finite() {
            return SolveResult {
                x,
                residual_norm,
                iterations,
                converged,
            };
        }
        sweep(&mut x);
        iterations += 1;
    }
}

#[inline]
fn jacobi_row<T: Scalar>(system: &LinearSystem<T>, i: usize, x: &[T]) -> T {
    let row = system.row(i);
    let off = dot(row, x) - row[i] * x[i];
    (system.rhs()[i] - off) / row[i]
}

/// Jacobi iteration. Every sweep reads only the previous iterate, so the
/// result is bit-identical for any `workers` value.
pub fn jacobi<T: Scalar>(
    system: &LinearSystem<T>,
    tol: T,
    max_iter: usize,
    workers: usize,
) -> Result<SolveResult<T>, SolverError> {
    let exec = Executor::new(workers)?;
    jacobi_in(system, tol, max_iter, &exec)
}

pub(crate) fn jacobi_in<T: Scalar>(
    system: &LinearSystem<T>,
    tol: T,
    max_iter: usize,
    exec: &Executor,
) -> Result<SolveResult<T>, SolverError> {
    check_inputs(system, tol, max_iter)?;
    let mut next = vec![T::zero(); system.cols()];
    Ok(iterate(system, tol, max_iter, |x| {
        let prev: &[T] = x;
        exec.for_row_blocks(&mut next, 1, |first, block| {
            for (r, out) in block.iter_mut().enumerate() {
                // Row-wise evaluation order is fixed, independent of block layout.
                *out = jacobi_row(system, first + r, prev);
            }
        });
        std::mem::swap(x, &mut next);
    }))
}

/// Gauss-Seidel iteration, strictly sequential ascending sweeps.
pub fn gauss_seidel<T: Scalar>(
    system: &LinearSystem<T>,
    tol: T,
    max_iter: usize,
) -> Result<SolveResult<T>, SolverError> {
    check_inputs(system, tol, max_iter)?;
    Ok(iterate(system, tol, max_iter, |x| {
        for i in 0..system.rows() {
            x[i] = jacobi_row(system, i, x);
        }
    }))
}
