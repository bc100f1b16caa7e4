//! Conjugate gradients for symmetric positive-definite operators.
//!
//! Reductions run in a fixed sequential order, so repeated solves on the same
//! platform are bitwise identical.

/// Anything that can apply a symmetric positive-(semi)definite matrix.
pub trait LinearOperator {
    fn size(&self) -> usize;
    /// `y = A x`.
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

/// Outcome of a CG run.
#[derive(Debug, Clone, Copy)]
pub struct CgReport {
    pub iterations: usize,
    /// True relative residual `|b - Ax| / |b|` at exit.
    pub relative_residual: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Preconditioned CG with optional Jacobi preconditioner.
///
/// Convergence is claimed on the recurrence residual and then verified
/// against the true residual `b - Ax`; if the recurrence drifted, iteration
/// restarts from the current point, still bounded by `max_iter` total.
pub fn conjugate_gradient(
    op: &dyn LinearOperator,
    b: &[f64],
    rel_tol: f64,
    max_iter: usize,
    jacobi_diag: Option<&[f64]>,
) -> (Vec<f64>, CgReport) {
    let m = op.size();
    assert_eq!(b.len(), m);
    let b_norm = dot(b, b).sqrt();
    let mut x = vec![0.0; m];
    if b_norm == 0.0 {
        return (
            x,
            CgReport {
                iterations: 0,
                relative_residual: 0.0,
                converged: true,
            },
        );
    }
    let tol = rel_tol * b_norm;

    let precond = |r: &[f64], z: &mut [f64]| match jacobi_diag {
        Some(d) => {
            for i in 0..m {
                z[i] = r[i] / d[i];
            }
        }
        None => z.copy_from_slice(r),
    };

    let mut r = b.to_vec();
    let mut z = vec![0.0; m];
    precond(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; m];
    let mut iterations = 0;

    while iterations < max_iter {
        iterations += 1;
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            break; // lost positive definiteness numerically
        }
        let alpha = rz / pap;
        for i in 0..m {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if dot(&r, &r).sqrt() <= tol {
            // verify with the true residual before accepting
            op.apply(&x, &mut ap);
            for i in 0..m {
                r[i] = b[i] - ap[i];
            }
            if dot(&r, &r).sqrt() <= tol {
                break;
            }
            // restart from the verified residual
            precond(&r, &mut z);
            p.copy_from_slice(&z);
            rz = dot(&r, &z);
            continue;
        }
        precond(&r, &mut z);
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..m {
            p[i] = z[i] + beta * p[i];
        }
    }

    op.apply(&x, &mut ap);
    let mut true_sq = 0.0;
    for i in 0..m {
        let ri = b[i] - ap[i];
        true_sq += ri * ri;
    }
    let relative_residual = true_sq.sqrt() / b_norm;
    (
        x,
        CgReport {
            iterations,
            relative_residual,
            converged: relative_residual <= rel_tol,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Dense(Vec<Vec<f64>>);
    impl LinearOperator for Dense {
        fn size(&self) -> usize {
            self.0.len()
        }
        fn apply(&self, x: &[f64], y: &mut [f64]) {
            for (i, row) in self.0.iter().enumerate() {
                y[i] = row.iter().zip(x).map(|(&a, &b)| a * b).sum();
            }
        }
    }

    #[test]
    fn solves_small_spd_system() {
        let a = Dense(vec![
            vec![4.0, 1.0, 0.0],
            vec![1.0, 3.0, 1.0],
            vec![0.0, 1.0, 2.0],
        ]);
        let b = vec![1.0, 2.0, 3.0];
        let (x, rep) = conjugate_gradient(&a, &b, 1e-12, 100, None);
        assert!(rep.converged);
        let mut ax = vec![0.0; 3];
        a.apply(&x, &mut ax);
        for i in 0..3 {
            assert!((ax[i] - b[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_rhs_returns_zero() {
        let a = Dense(vec![vec![2.0, 0.0], vec![0.0, 2.0]]);
        let (x, rep) = conjugate_gradient(&a, &[0.0, 0.0], 1e-10, 10, None);
        assert!(rep.converged);
        assert_eq!(x, vec![0.0, 0.0]);
        assert_eq!(rep.iterations, 0);
    }

    #[test]
    fn jacobi_preconditioning_converges() {
        let a = Dense(vec![
            vec![100.0, 1.0, 0.0],
            vec![1.0, 10.0, 1.0],
            vec![0.0, 1.0, 1.0],
        ]);
        let diag = vec![100.0, 10.0, 1.0];
        let b = vec![1.0, -1.0, 0.5];
        let (x, rep) = conjugate_gradient(&a, &b, 1e-12, 100, Some(&diag));
        assert!(rep.converged);
        let mut ax = vec![0.0; 3];
        a.apply(&x, &mut ax);
        for i in 0..3 {
            assert!((ax[i] - b[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn deterministic_across_runs() {
        let a = Dense(vec![
            vec![4.0, 1.0, 0.5],
            vec![1.0, 3.0, 1.0],
            vec![0.5, 1.0, 2.0],
        ]);
        let b = vec![0.3, -0.7, 1.1];
        let (x1, _) = conjugate_gradient(&a, &b, 1e-13, 100, None);
        let (x2, _) = conjugate_gradient(&a, &b, 1e-13, 100, None);
        assert_eq!(x1, x2);
    }
}
