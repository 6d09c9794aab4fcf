//! Ergodic Hamilton-Jacobi-Bellman solver: find `(u, lambda)` with
//!
//! ```text
//!   -div grad u + C_H |grad u|^gamma + lambda = f,   integral of u = 0,
//! ```
//!
//! zero-flux box boundary. The gradient magnitude inside the Hamiltonian is
//! the Godunov upwind selection, per axis
//!
//! ```text
//!   |grad u|^2 ~ max(D-u, 0)^2 + max(-D+u, 0)^2
//! ```
//!
//! with one-sided differences `D-`/`D+` (zero across the boundary). That
//! choice keeps the scheme monotone: raising `f` anywhere never lowers
//! `lambda`.
//!
//! `lambda` is treated as an extra unknown of an augmented Newton system:
//! one row per cell for the equation, one final row pinning the mean of `u`
//! to zero, one final column for `d/d lambda = 1`. Damping is plain
//! backtracking on the residual max-norm; for `gamma < 2` the Jacobian is
//! only Hoelder near flat regions of `u`, and the derivative block at an
//! exactly flat cell is set to zero (the same continuous extension as
//! `grad H(0) = 0`).

use crate::grid::{ScalarField, VectorField};
use crate::hamiltonian::MFGParams;
use crate::linalg::DenseMatrix;
use crate::{real, Error, Real, Result};

/// Converged HJB state.
#[derive(Debug, Clone)]
pub struct HJBSolution<T> {
    /// Value function, mean zero to rounding.
    pub u: ScalarField<T>,
    /// Ergodic constant.
    pub lambda: T,
    /// Newton iterations consumed.
    pub iterations: usize,
    /// Final max-norm of the discrete equation.
    pub residual: T,
}

/// Per-cell Godunov data: the upwind square `s` and the active one-sided
/// slopes `(a, b)` per axis, with `a = max(D-u, 0)` and `b = max(-D+u, 0)`.
struct UpwindState<T> {
    s: Vec<T>,
    slopes: Vec<[T; 4]>,
}

fn upwind_state<T: Real>(u: &ScalarField<T>) -> UpwindState<T> {
    let spec = u.spec();
    let n = spec.cells_per_axis();
    let g = u.gradient();
    let count = spec.cell_count();
    let mut s = vec![T::zero(); count];
    let mut slopes = vec![[T::zero(); 4]; count];
    for idx in 0..count {
        let (ix, iy) = spec.cell_coords_index(idx);
        let gx = g.component(0);
        let (lf, rf) = match spec.dim() {
            1 => (gx[ix], gx[ix + 1]),
            _ => (gx[spec.xface_index(ix, iy)], gx[spec.xface_index(ix + 1, iy)]),
        };
        let a = lf.max(T::zero());
        let b = (-rf).max(T::zero());
        slopes[idx][0] = a;
        slopes[idx][1] = b;
        s[idx] = a * a + b * b;
        if spec.dim() == 2 {
            let gy = g.component(1);
            let lf = gy[spec.yface_index(ix, iy)];
            let rf = gy[spec.yface_index(ix, iy + 1)];
            let a = lf.max(T::zero());
            let b = (-rf).max(T::zero());
            slopes[idx][2] = a;
            slopes[idx][3] = b;
            s[idx] += a * a + b * b;
        }
        let _ = n;
    }
    UpwindState { s, slopes }
}

/// Pointwise residual `-div grad u + C_H G(u) + lambda - f` of the upwind
/// discretization; its max-norm is what the solver drives below tolerance.
pub fn hjb_residual_field<T: Real>(
    u: &ScalarField<T>,
    lambda: T,
    f_rhs: &ScalarField<T>,
    params: &MFGParams<T>,
) -> ScalarField<T> {
    let up = upwind_state(u);
    let half_gamma = params.gamma / real::<T>(2.0);
    let lap = u.laplacian();
    let mut out = ScalarField::zeros(u.spec());
    for idx in 0..u.spec().cell_count() {
        out.values_mut()[idx] = -lap.values()[idx] + params.c_h * up.s[idx].powf(half_gamma)
            + lambda
            - f_rhs.values()[idx];
    }
    out
}

fn godunov_mean<T: Real>(u: &ScalarField<T>, params: &MFGParams<T>) -> T {
    let up = upwind_state(u);
    let half_gamma = params.gamma / real::<T>(2.0);
    let vol = u.spec().cell_volume::<T>();
    up.s.iter().map(|&s| vol * s.powf(half_gamma)).sum()
}

/// Solves the HJB system from the flat initial guess `u = 0`.
pub fn solve_hjb<T: Real>(
    f_rhs: &ScalarField<T>,
    params: &MFGParams<T>,
    tol: T,
    max_iter: usize,
) -> Result<HJBSolution<T>> {
    let zero = ScalarField::zeros(f_rhs.spec());
    solve_hjb_from(&zero, f_rhs, params, tol, max_iter)
}

/// Solves the HJB system warm-started at `u_init` (projected to mean zero);
/// `lambda` starts at the compatibility value `mean(f) - C_H mean(G(u))`.
pub fn solve_hjb_from<T: Real>(
    u_init: &ScalarField<T>,
    f_rhs: &ScalarField<T>,
    params: &MFGParams<T>,
    tol: T,
    max_iter: usize,
) -> Result<HJBSolution<T>> {
    let spec = f_rhs.spec();
    if u_init.spec() != spec {
        return Err(Error::GridMismatch {
            context: "solve_hjb: initial guess and right-hand side grids differ",
        });
    }
    if spec.dim() != params.dim {
        return Err(Error::GridMismatch {
            context: "solve_hjb: grid dimension disagrees with parameters",
        });
    }
    if !f_rhs.max_norm().is_finite() {
        return Err(Error::InvalidParameter {
            name: "f_rhs",
            message: "right-hand side must be finite".to_string(),
        });
    }
    if !(tol > T::zero()) {
        return Err(Error::InvalidParameter {
            name: "tol",
            message: format!("tolerance must be positive, got {tol}"),
        });
    }

    let count = spec.cell_count();
    let vol = spec.cell_volume::<T>();
    let h = spec.spacing::<T>();
    let inv_h = T::one() / h;
    let inv_h2 = inv_h * inv_h;
    let half_gamma = params.gamma / real::<T>(2.0);

    let mut u = u_init.without_mean();
    let mut lambda = f_rhs.mean() - params.c_h * godunov_mean(&u, params);
    let mut res_norm = hjb_residual_field(&u, lambda, f_rhs, params).max_norm();
    let mut stalls = 0usize;

    for iter in 1..=max_iter {
        if res_norm <= tol {
            return Ok(HJBSolution {
                u,
                lambda,
                iterations: iter - 1,
                residual: res_norm,
            });
        }

        let up = upwind_state(&u);
        let res = hjb_residual_field(&u, lambda, f_rhs, params);

        let mut delta: Option<Vec<T>> = None;
        for mu in [0.0f64, 1e-10, 1e-8, 1e-6] {
            let mut jac = DenseMatrix::zeros(count + 1);
            // Diffusion block: one pass over interior faces per axis.
            for idx in 0..count {
                let (ix, iy) = spec.cell_coords_index(idx);
                let nper = spec.cells_per_axis();
                if ix + 1 < nper {
                    let right = spec.cell_index(ix + 1, iy);
                    jac.add_to(idx, idx, inv_h2);
                    jac.add_to(idx, right, -inv_h2);
                    jac.add_to(right, right, inv_h2);
                    jac.add_to(right, idx, -inv_h2);
                }
                if spec.dim() == 2 && iy + 1 < nper {
                    let upc = spec.cell_index(ix, iy + 1);
                    jac.add_to(idx, idx, inv_h2);
                    jac.add_to(idx, upc, -inv_h2);
                    jac.add_to(upc, upc, inv_h2);
                    jac.add_to(upc, idx, -inv_h2);
                }
            }
            // Hamiltonian block; zero at exactly flat cells.
            for idx in 0..count {
                let s = up.s[idx];
                if s == T::zero() {
                    continue;
                }
                let c = params.c_h * params.gamma * s.powf(half_gamma - T::one());
                let (ix, iy) = spec.cell_coords_index(idx);
                let nper = spec.cells_per_axis();
                let [ax, bx, ay, by] = up.slopes[idx];
                jac.add_to(idx, idx, c * (ax + bx) * inv_h);
                if ax > T::zero() {
                    jac.add_to(idx, spec.cell_index(ix - 1, iy), -c * ax * inv_h);
                }
                if bx > T::zero() {
                    jac.add_to(idx, spec.cell_index(ix + 1, iy), -c * bx * inv_h);
                }
                if spec.dim() == 2 {
                    jac.add_to(idx, idx, c * (ay + by) * inv_h);
                    if ay > T::zero() {
                        jac.add_to(idx, spec.cell_index(ix, iy - 1), -c * ay * inv_h);
                    }
                    if by > T::zero() {
                        jac.add_to(idx, spec.cell_index(ix, iy + 1), -c * by * inv_h);
                    }
                }
                let _ = nper;
            }
            // lambda column and mean row.
            for idx in 0..count {
                jac.add_to(idx, count, T::one());
                jac.add_to(count, idx, vol);
            }
            if mu > 0.0 {
                for k in 0..=count {
                    jac.add_to(k, k, real::<T>(mu));
                }
            }

            let mut rhs = vec![T::zero(); count + 1];
            for idx in 0..count {
                rhs[idx] = -res.values()[idx];
            }
            rhs[count] = -u.integrate();

            match jac.solve_in_place(&mut rhs, "hjb newton step") {
                Ok(()) => {
                    delta = Some(rhs);
                    break;
                }
                Err(_) => continue,
            }
        }
        let delta = delta.ok_or(Error::SingularSystem {
            context: "hjb newton step stayed singular after regularization",
        })?;

        // Backtracking on the max-norm.
        let mut step = T::one();
        let mut accepted = false;
        let mut trial_u = u.clone();
        let mut trial_lambda = lambda;
        let mut trial_norm = res_norm;
        for _ in 0..=30 {
            let mut cand = u.clone();
            for (idx, v) in cand.values_mut().iter_mut().enumerate() {
                *v += step * delta[idx];
            }
            let cand = cand.without_mean();
            let cand_lambda = lambda + step * delta[count];
            let norm = hjb_residual_field(&cand, cand_lambda, f_rhs, params).max_norm();
            trial_u = cand.clone();
            trial_lambda = cand_lambda;
            trial_norm = norm;
            if norm < res_norm {
                accepted = true;
                break;
            }
            step = step / real::<T>(2.0);
        }
        u = trial_u;
        lambda = trial_lambda;
        res_norm = trial_norm;
        if accepted {
            stalls = 0;
        } else {
            stalls += 1;
            if stalls >= 3 {
                return Err(Error::NewtonDiverged {
                    iterations: iter,
                    residual: res_norm.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
    }

    if res_norm <= tol {
        return Ok(HJBSolution {
            u,
            lambda,
            iterations: max_iter,
            residual: res_norm,
        });
    }
    Err(Error::NewtonDiverged {
        iterations: max_iter,
        residual: res_norm.to_f64().unwrap_or(f64::NAN),
    })
}

/// Face-centered velocity factor `b = C_H gamma |grad u|^{gamma-2} grad u`;
/// the transport flux is `w = -m b`. Boundary faces stay zero, and exactly
/// flat faces map to zero drift (the `grad H(0) = 0` convention).
pub fn drift_from_u<T: Real>(u: &ScalarField<T>, params: &MFGParams<T>) -> VectorField<T> {
    let g = u.gradient();
    let spec = u.spec();
    let mut b = VectorField::zeros(spec);
    for axis in 0..spec.dim() {
        let src = g.component(axis);
        let dst = b.component_mut(axis);
        for (d, &s) in dst.iter_mut().zip(src.iter()) {
            *d = params.drift_closure(s);
        }
    }
    b
}
