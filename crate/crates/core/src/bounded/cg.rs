use crate::error::SolverError;
use crate::scalar::Scalar;

/// Conjugate gradients for `A x = b`, starting from the contents of `x`.
///
/// Stops once `max|b − A x| ≤ tol`. `project` is applied to the right-hand
/// side and every residual; pass a mean-removal for singular Neumann problems.
pub(crate) fn conjugate_gradient<T: Scalar>(
    name: &'static str,
    apply: impl Fn(&[T], &mut [T]),
    b: &[T],
    x: &mut [T],
    tol: f64,
    max_iters: usize,
    project: impl Fn(&mut [T]),
) -> Result<usize, SolverError> {
    let n = b.len();
    let dot = |a: &[T], c: &[T]| a.iter().zip(c).fold(T::zero(), |s, (p, q)| s + *p * *q);
    let max_abs = |a: &[T]| a.iter().fold(0.0f64, |m, v| m.max(v.abs().to_f64_lossy()));
    let mut ax = vec![T::zero(); n];
    apply(x, &mut ax);
    let mut r: Vec<T> = b.iter().zip(&ax).map(|(p, q)| *p - *q).collect();
    project(&mut r);
    let mut res = max_abs(&r);
    if res <= tol {
        return Ok(0);
    }
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    for it in 1..=max_iters {
        apply(&p, &mut ax);
        let pap = dot(&p, &ax);
        if !(pap > T::zero()) {
            break;
        }
        let a = rr / pap;
        for k in 0..n {
            x[k] = x[k] + a * p[k];
            r[k] = r[k] - a * ax[k];
        }
        project(&mut r);
        res = max_abs(&r);
        if res <= tol {
            return Ok(it);
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for k in 0..n {
            p[k] = r[k] + beta * p[k];
        }
    }
    Err(SolverError::LinearSolver { solver: name, iters: max_iters, residual: res })
}

/// Subtracts the mean.
pub(crate) fn remove_mean<T: Scalar>(v: &mut [T]) {
    let m = v.iter().copied().sum::<T>() / T::of_usize(v.len());
    v.iter_mut().for_each(|x| *x = *x - m);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_tridiagonal_system() {
        let n = 50;
        let apply = |x: &[f64], out: &mut [f64]| {
            for i in 0..n {
                let l = if i > 0 { x[i - 1] } else { 0.0 };
                let r = if i + 1 < n { x[i + 1] } else { 0.0 };
                out[i] = 3.0 * x[i] - l - r;
            }
        };
        let want: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let mut b = vec![0.0; n];
        apply(&want, &mut b);
        let mut x = vec![0.0; n];
        conjugate_gradient("test", apply, &b, &mut x, 1e-13, 200, |_| {}).unwrap();
        for (a, w) in x.iter().zip(&want) {
            assert!((a - w).abs() < 1e-12);
        }
    }

    #[test]
    fn reports_non_convergence() {
        let apply = |x: &[f64], out: &mut [f64]| {
            for i in 0..x.len() {
                out[i] = (i + 1) as f64 * x[i];
            }
        };
        let b = vec![1.0; 20];
        let mut x = vec![0.0; 20];
        let err = conjugate_gradient("diag", apply, &b, &mut x, 1e-14, 3, |_| {}).unwrap_err();
        assert!(matches!(err, SolverError::LinearSolver { solver: "diag", iters: 3, .. }));
    }
}
