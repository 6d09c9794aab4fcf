//! The variational side of the system: energy of a density/flux pair, its
//! mollified version, the linearized functional used by the duality audit,
//! and the norm bookkeeping for constrained minimization.
//!
//! An [`AdmissiblePair`] is a probability density `m` together with a flux
//! `w` whose boundary faces vanish. The continuity constraint is the weak
//! identity `div grad m = div w`; its discrete residual is recorded at
//! construction rather than enforced, because the functionals below are also
//! evaluated on deliberately perturbed pairs.
//!
//! The functionals:
//!
//! ```text
//!   E(m,w)     = sum_i h^n L(m_i, w_i)  -  (C_f/2) <K m, m>
//!   E_eps(m,w) = sum_i h^n L(m_i, w_i)  -  (C_f/2) <K eta(m), m>
//!   J(m,w)     = sum_i h^n L(m_i, w_i)  -   C_f    <K eta(m_frozen), m>
//! ```
//!
//! where `L` is the kinetic density (see the Hamiltonian module), `K` the
//! Riesz interaction and `eta` the mollifier. The placement of `eta` inside
//! the quadratic form is immaterial: both matrices are symmetric, so
//! `<K eta(m), m> = <K m, eta(m)>` holds exactly.

use crate::grid::{ScalarField, VectorField};
use crate::hamiltonian::MFGParams;
use crate::riesz::{Mollifier, RieszOperator};
use crate::{real, Error, Real, Result};

/// Density/flux pair with cached admissibility diagnostics.
///
/// Construction validates unit mass and nonnegativity of `m` and zero
/// boundary flux of `w`, then caches the continuity residual, the
/// interaction norm `|m|_{q_alpha}`, and the kinetic integral.
#[derive(Debug, Clone)]
pub struct AdmissiblePair<T> {
    m: ScalarField<T>,
    w: VectorField<T>,
    params: MFGParams<T>,
    constraint_residual: T,
    q_norm: T,
    kinetic: T,
}

impl<T: Real> AdmissiblePair<T> {
    /// Validates `(m, w)` against the admissible-set invariants and caches
    /// the derived quantities.
    pub fn new(m: ScalarField<T>, w: VectorField<T>, params: &MFGParams<T>) -> Result<Self> {
        if m.spec() != w.spec() {
            return Err(Error::GridMismatch {
                context: "AdmissiblePair: density and flux live on different grids",
            });
        }
        if m.spec().dim() != params.dim {
            return Err(Error::GridMismatch {
                context: "AdmissiblePair: grid dimension disagrees with parameters",
            });
        }
        let mass = m.integrate();
        if (mass - T::one()).abs() > real::<T>(1e-12) {
            return Err(Error::InvalidParameter {
                name: "m",
                message: format!("density mass is {mass}, must be 1 to 1e-12"),
            });
        }
        let min = m.min_value();
        if min < T::zero() {
            return Err(Error::NonPositiveDensity {
                min_value: min.to_f64().unwrap_or(f64::NAN),
            });
        }
        if !w.boundary_faces_are_zero() {
            return Err(Error::InvalidParameter {
                name: "w",
                message: "flux must vanish on boundary faces".to_string(),
            });
        }

        let residual_field = m.laplacian().zip_with(&w.divergence(), |a, b| a - b);
        let constraint_residual = residual_field.norm_lp(real::<T>(2.0))?;
        let q_norm = m.norm_lp(params.q_alpha)?;

        let vol = m.spec().cell_volume::<T>();
        let mut kinetic = T::zero();
        for idx in 0..m.spec().cell_count() {
            let wc = w.at_cell(idx);
            kinetic += vol * params.kinetic_density(m.values()[idx], &wc)?;
        }

        Ok(AdmissiblePair {
            m,
            w,
            params: *params,
            constraint_residual,
            q_norm,
            kinetic,
        })
    }

    /// The density.
    pub fn m(&self) -> &ScalarField<T> {
        &self.m
    }

    /// The flux.
    pub fn w(&self) -> &VectorField<T> {
        &self.w
    }

    /// Parameters the cached quantities were computed with.
    pub fn params(&self) -> &MFGParams<T> {
        &self.params
    }

    /// L2 norm of `div grad m - div w`, the discrete continuity defect.
    pub fn constraint_residual(&self) -> T {
        self.constraint_residual
    }

    /// Whether the continuity constraint holds to `tol`.
    pub fn is_admissible(&self, tol: T) -> bool {
        self.constraint_residual <= tol
    }

    /// Cached `|m|_{q_alpha}`.
    pub fn q_norm(&self) -> T {
        self.q_norm
    }

    /// Kinetic integral `sum h^n L(m_i, w_i)`; IEEE `+inf` when some cell
    /// has `m = 0` with nonzero flux.
    pub fn kinetic_total(&self) -> T {
        self.kinetic
    }

    /// `Lambda = integral of m |w/m|^{gamma'}`, the kinetic integral with the
    /// Legendre constant divided out.
    pub fn lambda_quantity(&self) -> T {
        self.kinetic / self.params.c_l
    }

    /// Unregularized energy `kinetic - (C_f/2) <K m, m>`.
    pub fn energy(&self, kernel: &RieszOperator<T>) -> T {
        let half = real::<T>(0.5);
        self.kinetic - half * self.params.c_f * kernel.bilinear(&self.m, &self.m)
    }

    /// Mollified energy `kinetic - (C_f/2) <K eta(m), m>`. Identical to
    /// [`Self::energy`] whenever the mollifier degenerates to the identity.
    pub fn energy_regularized(&self, kernel: &RieszOperator<T>, eta: &Mollifier<T>) -> T {
        if eta.is_identity() {
            return self.energy(kernel);
        }
        let half = real::<T>(0.5);
        let smoothed = eta.apply(&self.m);
        self.kinetic - half * self.params.c_f * kernel.bilinear(&smoothed, &self.m)
    }

    /// Linearized functional `kinetic - C_f <K eta(frozen_m), m>`: the
    /// interaction is frozen at `frozen_m`, so the whole expression is
    /// convex in `(m, w)`.
    pub fn linearized_j(
        &self,
        frozen_m: &ScalarField<T>,
        kernel: &RieszOperator<T>,
        eta: &Mollifier<T>,
    ) -> T {
        let smoothed = eta.apply(frozen_m);
        self.kinetic - self.params.c_f * kernel.bilinear(&smoothed, &self.m)
    }

    /// Whether `|m|_{q_alpha} <= r`.
    pub fn in_ball(&self, r: T) -> bool {
        self.q_norm <= r
    }

    /// Whether `|m|_{q_alpha}` equals `r` to `tol`.
    pub fn on_sphere(&self, r: T, tol: T) -> bool {
        (self.q_norm - r).abs() <= tol
    }
}

/// Interpolation defect `|m|_{q_alpha}^{1/gamma} |m|_1^{1/gamma'} - |m|_beta`.
///
/// Since `1/beta = 1/gamma' + 1/(gamma q_alpha)` this is the Lyapunov
/// interpolation between L1 and L^{q_alpha}; it holds with the same constants
/// for the discrete quadrature measure, so the result is `>= -1e-12` for any
/// nonnegative field (exactly 0 for constants).
pub fn interpolation_slack<T: Real>(m: &ScalarField<T>, params: &MFGParams<T>) -> Result<T> {
    if m.spec().dim() != params.dim {
        return Err(Error::GridMismatch {
            context: "interpolation_slack: grid dimension disagrees with parameters",
        });
    }
    let min = m.min_value();
    if min < T::zero() {
        return Err(Error::NonPositiveDensity {
            min_value: min.to_f64().unwrap_or(f64::NAN),
        });
    }
    if m.max_norm() == T::zero() {
        return Err(Error::InvalidParameter {
            name: "m",
            message: "interpolation slack of the zero field is undefined".to_string(),
        });
    }
    let one = T::one();
    let lhs = m.norm_lp(params.q_alpha)?.powf(one / params.gamma)
        * m.norm_lp(one)?.powf(one / params.gamma_prime);
    Ok(lhs - m.norm_lp(params.beta)?)
}
