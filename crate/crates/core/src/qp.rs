//! Dense strictly convex quadratic programming.
//!
//! Solves `min ½ xᵀHx + cᵀx  s.t.  Ax >= b` with `H` positive definite using
//! the Goldfarb-Idnani dual active-set method: start from the unconstrained
//! minimiser and add violated constraints one at a time while keeping the
//! active multipliers nonnegative. The active-set projections are recomputed
//! from `H⁻¹` at each step, which is adequate for the few hundred variables
//! the interpolation problems have.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Scalar};

#[derive(Debug, Clone)]
pub struct QpProblem<T: Scalar> {
    pub hessian: DMatrix<T>,
    pub linear: DVector<T>,
    /// One constraint per row.
    pub constraints: DMatrix<T>,
    pub bounds: DVector<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpOptions {
    /// Feasibility and KKT tolerance, scaled by the problem data.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for QpOptions {
    fn default() -> Self {
        QpOptions {
            tolerance: 1e-9,
            max_iterations: 10_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QpSolution<T: Scalar> {
    pub x: DVector<T>,
    /// Lagrange multipliers, one per constraint (zero when inactive).
    pub multipliers: DVector<T>,
    pub active: Vec<usize>,
    pub iterations: usize,
    pub objective: T,
    pub kkt_residual: T,
}

impl<T: Scalar> QpProblem<T> {
    pub fn objective(&self, x: &DVector<T>) -> T {
        lit::<T>(0.5) * x.dot(&(&self.hessian * x)) + self.linear.dot(x)
    }

    /// Worst of stationarity, primal feasibility, dual feasibility and
    /// complementarity violations.
    pub fn kkt_residual(&self, x: &DVector<T>, multipliers: &DVector<T>) -> T {
        let stationarity = &self.hessian * x + &self.linear - self.constraints.transpose() * multipliers;
        let slack = &self.constraints * x - &self.bounds;
        let mut worst = stationarity.amax();
        for (s, u) in slack.iter().zip(multipliers.iter()) {
            worst = worst.max(-*s).max(-*u).max((*s * *u).abs());
        }
        worst
    }

    fn check(&self) -> Result<()> {
        let n = self.hessian.nrows();
        if self.hessian.ncols() != n || self.linear.len() != n {
            return Err(Error::Dimension("QP hessian/linear term".into()));
        }
        if self.constraints.ncols() != n || self.constraints.nrows() != self.bounds.len() {
            return Err(Error::Dimension("QP constraint block".into()));
        }
        Ok(())
    }
}

pub fn solve<T: Scalar>(problem: &QpProblem<T>, options: &QpOptions) -> Result<QpSolution<T>> {
    problem.check()?;
    let m = problem.bounds.len();
    let a = &problem.constraints;
    let tol = lit::<T>(options.tolerance);

    let h_inv = problem
        .hessian
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Config("QP hessian is not positive definite".into()))?
        .inverse();

    let mut x = -(&h_inv * &problem.linear);
    let mut active: Vec<usize> = Vec::new();
    let mut u: Vec<T> = Vec::new();
    let mut iterations = 0;

    // Violation threshold per constraint, relative to the row scale.
    let scale: Vec<T> = (0..m)
        .map(|i| T::one() + a.row(i).amax() + problem.bounds[i].abs())
        .collect();

    loop {
        let slack = a * &x - &problem.bounds;
        let candidate = (0..m)
            .filter(|i| !active.contains(i))
            .map(|i| (i, slack[i] / scale[i]))
            .filter(|&(_, s)| s < -tol)
            .min_by(|l, r| l.1.partial_cmp(&r.1).unwrap_or(std::cmp::Ordering::Equal));
        let Some((p, _)) = candidate else { break };

        let n_p: DVector<T> = a.row(p).transpose();
        let mut u_p = T::zero();
        loop {
            iterations += 1;
            if iterations > options.max_iterations {
                let mut full = DVector::zeros(m);
                for (&i, &ui) in active.iter().zip(&u) {
                    full[i] = ui;
                }
                return Err(Error::QpNoConvergence {
                    iterations,
                    residual: to_f64(problem.kkt_residual(&x, &full)),
                });
            }

            let hn = &h_inv * &n_p;
            let (z, r) = if active.is_empty() {
                (hn, DVector::zeros(0))
            } else {
                let n_act = a.select_rows(active.iter());
                let hn_act = &h_inv * n_act.transpose();
                let schur = &n_act * &hn_act;
                let rhs = &n_act * &hn;
                let r = schur
                    .cholesky()
                    .ok_or_else(|| Error::Infeasible("dependent active constraints".into()))?
                    .solve(&rhs);
                (hn - hn_act * &r, r)
            };

            // Partial step: largest dual step keeping active multipliers >= 0.
            let mut t_partial: Option<(T, usize)> = None;
            for (j, (&rj, &uj)) in r.iter().zip(&u).enumerate() {
                if rj > T::zero() {
                    let t = uj / rj;
                    if t_partial.is_none_or(|(best, _)| t < best) {
                        t_partial = Some((t, j));
                    }
                }
            }

            let curvature = z.dot(&n_p);
            let reference = n_p.dot(&(&h_inv * &n_p));
            let s_p = n_p.dot(&x) - problem.bounds[p];
            let t_full = if curvature > lit::<T>(1e-13) * reference {
                Some(-s_p / curvature)
            } else {
                None
            };

            match (t_full, t_partial) {
                (None, None) => {
                    return Err(Error::Infeasible(format!(
                        "constraint {p} cannot be satisfied together with the active set"
                    )))
                }
                (None, Some((t, j))) => {
                    for (ui, &ri) in u.iter_mut().zip(r.iter()) {
                        *ui -= t * ri;
                    }
                    u_p += t;
                    active.remove(j);
                    u.remove(j);
                }
                (Some(tf), partial) => {
                    let (t, drop) = match partial {
                        Some((tp, j)) if tp < tf => (tp, Some(j)),
                        _ => (tf, None),
                    };
                    x += &z * t;
                    for (ui, &ri) in u.iter_mut().zip(r.iter()) {
                        *ui -= t * ri;
                    }
                    u_p += t;
                    match drop {
                        Some(j) => {
                            active.remove(j);
                            u.remove(j);
                        }
                        None => {
                            active.push(p);
                            u.push(u_p);
                            break;
                        }
                    }
                }
            }
        }
    }

    let mut multipliers = DVector::zeros(m);
    for (&i, &ui) in active.iter().zip(&u) {
        multipliers[i] = ui.max(T::zero());
    }
    let kkt_residual = problem.kkt_residual(&x, &multipliers);
    let objective = problem.objective(&x);
    Ok(QpSolution {
        x,
        multipliers,
        active,
        iterations,
        objective,
        kkt_residual,
    })
}
