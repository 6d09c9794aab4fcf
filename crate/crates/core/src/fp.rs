//! Stationary Fokker-Planck solver: find the unit-mass density `m` with
//!
//! ```text
//!   div grad m + div(m b) = 0,   zero total flux through the boundary.
//! ```
//!
//! The discretization is flux-form: per interior face, `F = (m_R - m_L)/h +
//! m_up b`, where the donor value `m_up` is taken from the cell the flow
//! `-b` comes from (`m_R` when `b >= 0`, `m_L` otherwise). Assembling
//! `A = -div F` cell by cell gives a singular irreducible matrix with
//! nonpositive off-diagonals and zero column sums: mass conservation and
//! strict positivity of the kernel vector are structural, not accidental.
//!
//! The kernel is extracted by the bordered solve `(A + ones . c^T) m = ones`
//! with `c = h^n ones`: the rank-one term pins the quadrature mass to 1,
//! which in exact arithmetic forces `A m = 0` simultaneously.

use crate::grid::{ScalarField, VectorField};
use crate::linalg::DenseMatrix;
use crate::{Error, Real, Result};

/// Positive stationary density with solve diagnostics.
#[derive(Debug, Clone)]
pub struct FPSolution<T> {
    /// Stationary density, unit mass, strictly positive.
    pub m: ScalarField<T>,
    /// `max |A m|` after normalization.
    pub residual: T,
    /// Smallest density value.
    pub min_value: T,
}

fn validate_drift<T: Real>(b: &VectorField<T>) -> Result<()> {
    if !b.max_norm().is_finite() {
        return Err(Error::InvalidParameter {
            name: "b",
            message: "drift must be finite on every face".to_string(),
        });
    }
    if !b.boundary_faces_are_zero() {
        return Err(Error::InvalidParameter {
            name: "b",
            message: "drift must vanish on boundary-normal faces".to_string(),
        });
    }
    Ok(())
}

/// Dense assembly of `A = -div F`: nonpositive off-diagonals, positive
/// diagonal, column sums zero up to entry rounding.
pub fn fp_operator<T: Real>(b: &VectorField<T>) -> Result<DenseMatrix<T>> {
    validate_drift(b)?;
    let spec = b.spec();
    let count = spec.cell_count();
    let n = spec.cells_per_axis();
    let h = spec.spacing::<T>();
    let inv_h = T::one() / h;
    let inv_h2 = inv_h * inv_h;
    let mut a = DenseMatrix::zeros(count);

    let add_face = |left: usize, right: usize, b_face: T, a: &mut DenseMatrix<T>| {
        // Diffusive flux (m_R - m_L)/h, then -div.
        a.add_to(left, left, inv_h2);
        a.add_to(left, right, -inv_h2);
        a.add_to(right, right, inv_h2);
        a.add_to(right, left, -inv_h2);
        // Advective flux m_up b: donor cell w.r.t. the flow -b.
        if b_face != T::zero() {
            let up = if b_face >= T::zero() { right } else { left };
            let bh = b_face * inv_h;
            a.add_to(left, up, -bh);
            a.add_to(right, up, bh);
        }
    };

    match spec.dim() {
        1 => {
            let bx = b.component(0);
            for fi in 1..n {
                add_face(fi - 1, fi, bx[fi], &mut a);
            }
        }
        _ => {
            let bx = b.component(0);
            let by = b.component(1);
            for j in 0..n {
                for fi in 1..n {
                    add_face(
                        spec.cell_index(fi - 1, j),
                        spec.cell_index(fi, j),
                        bx[spec.xface_index(fi, j)],
                        &mut a,
                    );
                }
            }
            for fj in 1..n {
                for i in 0..n {
                    add_face(
                        spec.cell_index(i, fj - 1),
                        spec.cell_index(i, fj),
                        by[spec.yface_index(i, fj)],
                        &mut a,
                    );
                }
            }
        }
    }
    Ok(a)
}

/// Solves the stationary equation for the drift `b`; `tol` bounds the
/// accepted `max |A m|` after normalization.
pub fn solve_fp<T: Real>(b: &VectorField<T>, tol: T) -> Result<FPSolution<T>> {
    if !(tol > T::zero()) {
        return Err(Error::InvalidParameter {
            name: "tol",
            message: format!("tolerance must be positive, got {tol}"),
        });
    }
    let spec = b.spec();
    let count = spec.cell_count();
    let vol = spec.cell_volume::<T>();
    let a = fp_operator(b)?;

    // Bordered system: every entry shifted by vol pins the mass row-for-row.
    let mut bordered = DenseMatrix::zeros(count);
    for i in 0..count {
        for j in 0..count {
            bordered.set(i, j, a.at(i, j) + vol);
        }
    }
    let mut m_vals = vec![T::one(); count];
    bordered.solve_in_place(&mut m_vals, "fp kernel extraction")?;

    let mut m = ScalarField::from_values(spec, m_vals)?;
    let mass = m.integrate();
    if mass <= T::zero() {
        return Err(Error::NonPositiveDensity {
            min_value: m.min_value().to_f64().unwrap_or(f64::NAN),
        });
    }
    m.scale(T::one() / mass);

    let min_value = m.min_value();
    if min_value <= T::zero() {
        return Err(Error::NonPositiveDensity {
            min_value: min_value.to_f64().unwrap_or(f64::NAN),
        });
    }

    let mut residual = T::zero();
    for i in 0..count {
        let mut row = T::zero();
        for j in 0..count {
            row += a.at(i, j) * m.values()[j];
        }
        residual = residual.max(row.abs());
    }
    if residual > tol {
        return Err(Error::ResidualAboveTolerance {
            context: "fp stationary residual",
            residual: residual.to_f64().unwrap_or(f64::NAN),
            tol: tol.to_f64().unwrap_or(f64::NAN),
        });
    }

    Ok(FPSolution {
        m,
        residual,
        min_value,
    })
}

/// Transport flux `w = -m_up b` on faces, with the same donor selection as
/// the solver, so that the pair `(m, w)` satisfies the discrete continuity
/// relation `div grad m = div w` at an FP solution.
pub fn flux_from_solution<T: Real>(
    m: &ScalarField<T>,
    b: &VectorField<T>,
) -> Result<VectorField<T>> {
    if m.spec() != b.spec() {
        return Err(Error::GridMismatch {
            context: "flux_from_solution: density and drift grids differ",
        });
    }
    let spec = m.spec();
    let n = spec.cells_per_axis();
    let mut w = VectorField::zeros(spec);

    let donor = |left: usize, right: usize, b_face: T| {
        if b_face >= T::zero() {
            m.values()[right]
        } else {
            m.values()[left]
        }
    };

    match spec.dim() {
        1 => {
            let bx = b.component(0);
            let wx = w.component_mut(0);
            for fi in 1..n {
                wx[fi] = -donor(fi - 1, fi, bx[fi]) * bx[fi];
            }
        }
        _ => {
            let bx = b.component(0).to_vec();
            let by = b.component(1).to_vec();
            let wx = w.component_mut(0);
            for j in 0..n {
                for fi in 1..n {
                    let idx = spec.xface_index(fi, j);
                    wx[idx] =
                        -donor(spec.cell_index(fi - 1, j), spec.cell_index(fi, j), bx[idx])
                            * bx[idx];
                }
            }
            let wy = w.component_mut(1);
            for fj in 1..n {
                for i in 0..n {
                    let idx = spec.yface_index(i, fj);
                    wy[idx] =
                        -donor(spec.cell_index(i, fj - 1), spec.cell_index(i, fj), by[idx])
                            * by[idx];
                }
            }
        }
    }
    Ok(w)
}
