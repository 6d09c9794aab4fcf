//! Criticality diagnostics
//!
//! Everything here measures rather than proves: where the coupling strength
//! and interaction exponent place the system relative to the mass- and
//! Sobolev-critical thresholds, whether the energy is bounded below along a
//! shrinking concentration family, how far a converged density is from
//! solving the equivalent quasilinear eigenvalue equation, and how stable
//! the discrete interaction-inequality ratio is under grid and width
//! changes.

use crate::energy::AdmissiblePair;
use crate::grid::{GridSpec, ScalarField};
use crate::hamiltonian::MFGParams;
use crate::riesz::RieszOperator;
use crate::solver::{solve_mfg, MFGSolution, SolveConfig};
use crate::{real, Error, Real, Result};

/// Position of the interaction exponent relative to the two critical values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeClass {
    /// `0 < alpha < alpha_sc`: concentration beats even the Sobolev rate.
    SobolevSupercritical,
    /// `alpha = alpha_sc > 0`.
    SobolevCritical,
    /// `alpha_sc < alpha < alpha_mc`: energy unbounded below, local
    /// structure only.
    MassSupercritical,
    /// `alpha = alpha_mc > 0`: boundedness decided by the coupling size.
    MassCritical,
    /// `alpha_mc < alpha < n`: energy coercive, global minimizer.
    MassSubcritical,
}

/// Classification result together with the thresholds it was measured
/// against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regime<T> {
    pub class: RegimeClass,
    /// `n - gamma'` when positive, else zero.
    pub alpha_mc: T,
    /// `n - 2 gamma'` when positive, else zero.
    pub alpha_sc: T,
}

/// Places `alpha` against the critical exponents for ambient dimension `n`.
/// Accepts any `n >= 1`, not only the grid dimensions, so threshold
/// arithmetic can be cross-checked against known higher-dimensional cases.
pub fn classify_regime<T: Real>(n: usize, gamma: T, alpha: T) -> Result<Regime<T>> {
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            message: "ambient dimension must be at least 1".to_string(),
        });
    }
    if !(gamma > T::one()) {
        return Err(Error::InvalidParameter {
            name: "gamma",
            message: format!("exponent must exceed 1, got {gamma}"),
        });
    }
    let nf = real::<T>(n as f64);
    if !(alpha > T::zero() && alpha < nf) {
        return Err(Error::InvalidParameter {
            name: "alpha",
            message: format!("interaction exponent must lie in (0, {n}), got {alpha}"),
        });
    }
    let gamma_prime = gamma / (gamma - T::one());
    let alpha_mc = (nf - gamma_prime).max(T::zero());
    let alpha_sc = (nf - gamma_prime - gamma_prime).max(T::zero());

    let class = if alpha_sc > T::zero() && alpha < alpha_sc {
        RegimeClass::SobolevSupercritical
    } else if alpha_sc > T::zero() && alpha == alpha_sc {
        RegimeClass::SobolevCritical
    } else if alpha_mc > T::zero() && alpha == alpha_mc {
        RegimeClass::MassCritical
    } else if alpha < alpha_mc {
        RegimeClass::MassSupercritical
    } else {
        RegimeClass::MassSubcritical
    };
    Ok(Regime {
        class,
        alpha_mc,
        alpha_sc,
    })
}

/// Normalized strictly positive bump of width `sigma` centered at `center`,
/// paired with its exact continuity flux `w = grad m`.
///
/// The profile is a clipped Gaussian rather than a compactly supported
/// bump: a compact support boundary would put zero-density cells next to
/// nonzero flux faces and the kinetic term would evaluate to its infinite
/// sentinel there, poisoning every scaling measurement.
pub fn concentration_family<T: Real>(
    params: &MFGParams<T>,
    spec: GridSpec,
    sigma: T,
    center: &[T],
) -> Result<AdmissiblePair<T>> {
    let h = spec.spacing::<T>();
    if !(sigma > h + h && sigma < real::<T>(0.25)) {
        return Err(Error::InvalidParameter {
            name: "sigma",
            message: format!(
                "width must lie in (2h, 0.25) = ({}, 0.25), got {sigma}",
                h + h
            ),
        });
    }
    if center.len() != spec.dim() {
        return Err(Error::GridMismatch {
            context: "concentration_family: center dimension disagrees with grid",
        });
    }
    let margin = real::<T>(4.0) * sigma;
    for &c in center {
        if !(c >= margin && c <= T::one() - margin) {
            return Err(Error::InvalidParameter {
                name: "center",
                message: format!("center coordinate {c} is closer than 4 sigma to the boundary"),
            });
        }
    }

    let two_sigma2 = real::<T>(2.0) * sigma * sigma;
    let floor = real::<T>(-700.0);
    let raw = ScalarField::from_fn(spec, |x: &[T]| {
        let mut r2 = T::zero();
        for (xi, ci) in x.iter().zip(center) {
            let d = *xi - *ci;
            r2 += d * d;
        }
        // Clipping the exponent keeps the profile strictly positive in
        // double precision far into the tail.
        (-r2 / two_sigma2).max(floor).exp()
    });
    let mut m = raw;
    m.scale(T::one() / m.integrate());
    // Second pass absorbs the summation rounding of the first.
    m.scale(T::one() / m.integrate());
    let w = m.gradient();
    AdmissiblePair::new(m, w, params)
}

/// Whether the energy dropped along the shrinking family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergyTrend {
    /// Potential gain outpaces kinetic cost as the width shrinks.
    UnboundedBelow,
    /// Kinetic cost dominates; the family cannot drive the energy down.
    BoundedBelow,
}

/// Measured scaling of the energy terms along a concentration family.
#[derive(Debug, Clone)]
pub struct ScalingReport<T> {
    pub sigma_list: Vec<T>,
    pub kinetic_values: Vec<T>,
    pub potential_values: Vec<T>,
    pub energy_values: Vec<T>,
    /// Log-log slope of the kinetic term; continuum value `-gamma'`.
    pub kinetic_slope: T,
    /// Log-log slope of the potential magnitude; continuum value
    /// `-(n - alpha)`. Zero when the coupling is switched off.
    pub potential_slope: T,
    pub energy_sign_trend: EnergyTrend,
}

fn log_log_slope<T: Real>(xs: &[T], ys: &[T]) -> T {
    let n = real::<T>(xs.len() as f64);
    let lx: Vec<T> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<T> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().copied().sum::<T>() / n;
    let my = ly.iter().copied().sum::<T>() / n;
    let mut num = T::zero();
    let mut den = T::zero();
    for (x, y) in lx.iter().zip(&ly) {
        num += (*x - mx) * (*y - my);
        den += (*x - mx) * (*x - mx);
    }
    num / den
}

/// Evaluates kinetic and potential terms on `concentration_family` pairs
/// and fits their log-log slopes against the width.
///
/// Widths below `4h` are evaluated but left out of the fits: at that point
/// the bump spans a couple of cells and the measured decay reflects the
/// resolution floor, not the family.
pub fn scaling_sweep<T: Real>(
    params: &MFGParams<T>,
    kernel: &RieszOperator<T>,
    sigma_list: &[T],
) -> Result<ScalingReport<T>> {
    if kernel.spec().dim() != params.dim {
        return Err(Error::GridMismatch {
            context: "scaling_sweep: kernel grid dimension disagrees with parameters",
        });
    }
    if sigma_list.len() < 5 {
        return Err(Error::InvalidParameter {
            name: "sigma_list",
            message: format!("need at least 5 widths, got {}", sigma_list.len()),
        });
    }
    let spec = kernel.spec();
    let center = vec![real::<T>(0.5); spec.dim()];
    let half = real::<T>(0.5);

    let mut kinetic_values = Vec::with_capacity(sigma_list.len());
    let mut potential_values = Vec::with_capacity(sigma_list.len());
    let mut energy_values = Vec::with_capacity(sigma_list.len());
    for &sigma in sigma_list {
        let pair = concentration_family(params, spec, sigma, &center)?;
        let kinetic = pair.kinetic_total();
        let potential = half * params.c_f * kernel.bilinear(pair.m(), pair.m());
        kinetic_values.push(kinetic);
        potential_values.push(potential);
        energy_values.push(kinetic - potential);
    }

    let fit_floor = real::<T>(4.0) * spec.spacing::<T>();
    let mut fit_sigma = Vec::new();
    let mut fit_kinetic = Vec::new();
    let mut fit_potential = Vec::new();
    for (i, &sigma) in sigma_list.iter().enumerate() {
        if sigma >= fit_floor {
            fit_sigma.push(sigma);
            fit_kinetic.push(kinetic_values[i]);
            fit_potential.push(potential_values[i]);
        }
    }
    if fit_sigma.len() < 3 {
        return Err(Error::InconclusiveCheck {
            context: "scaling_sweep: fewer than 3 widths survive the resolution floor".to_string(),
        });
    }

    let kinetic_slope = log_log_slope(&fit_sigma, &fit_kinetic);
    let coupled = params.c_f > T::zero();
    let potential_slope = if coupled {
        log_log_slope(&fit_sigma, &fit_potential)
    } else {
        T::zero()
    };
    let energy_sign_trend = if coupled && potential_slope < kinetic_slope {
        EnergyTrend::UnboundedBelow
    } else {
        EnergyTrend::BoundedBelow
    };
    if !(kinetic_slope.is_finite() && potential_slope.is_finite()) {
        return Err(Error::InconclusiveCheck {
            context: "scaling_sweep: slope fit produced a nonfinite value".to_string(),
        });
    }
    Ok(ScalingReport {
        sigma_list: sigma_list.to_vec(),
        kinetic_values,
        potential_values,
        energy_values,
        kinetic_slope,
        potential_slope,
        energy_sign_trend,
    })
}

/// Max-norm defect, over interior cells, of the quasilinear eigenvalue
/// equation satisfied by `v = m^{1/gamma'}`:
///
/// ```text
///   -mu div(|grad v|^{gamma'-2} grad v) + (f - lambda) v^{gamma'-1} = 0,
///   mu = ((gamma'-1)/C_H)^{gamma'-1},  f = -C_f K(m).
/// ```
///
/// The interaction is applied unmollified, matching the final continuation
/// stage. Boundary-adjacent cells are excluded: the one-sided stencils
/// there measure the Neumann closure, not the equation.
pub fn schrodinger_residual<T: Real>(
    sol: &MFGSolution<T>,
    kernel: &RieszOperator<T>,
    params: &MFGParams<T>,
) -> Result<T> {
    let m = &sol.m;
    if m.spec() != kernel.spec() {
        return Err(Error::GridMismatch {
            context: "schrodinger_residual: solution grid disagrees with kernel",
        });
    }
    if m.min_value() <= T::zero() {
        return Err(Error::NonPositiveDensity {
            min_value: m.min_value().to_f64().unwrap_or(f64::NAN),
        });
    }
    let gp = params.gamma_prime;
    let mu = ((gp - T::one()) / params.c_h).powf(gp - T::one());
    let v = m.map(|x| x.powf(T::one() / gp));

    // gamma'-Laplacian by face fluxes; a zero face gradient carries zero
    // flux even when gamma' < 2 makes the raw power singular there.
    let mut flux = v.gradient();
    for axis in 0..m.spec().dim() {
        for g in flux.component_mut(axis) {
            let gv = *g;
            *g = if gv == T::zero() {
                T::zero()
            } else {
                gv.abs().powf(gp - real::<T>(2.0)) * gv
            };
        }
    }
    let p_laplacian = flux.divergence();

    let f = {
        let mut f = kernel.apply(m);
        f.scale(-params.c_f);
        f
    };
    let vpow = v.map(|x| x.powf(gp - T::one()));
    let residual_field = ScalarField::from_values(
        m.spec(),
        (0..m.spec().cell_count())
            .map(|idx| {
                -mu * p_laplacian.values()[idx]
                    + (f.values()[idx] - sol.lambda) * vpow.values()[idx]
            })
            .collect(),
    )?;

    let n = m.spec().cells_per_axis();
    let interior = |idx: usize| -> bool {
        let ix = idx % n;
        let rest = idx / n;
        let inner_x = ix >= 1 && ix + 1 < n;
        if m.spec().dim() == 1 {
            inner_x
        } else {
            let iy = rest;
            inner_x && iy >= 1 && iy + 1 < n
        }
    };
    let mut worst = T::zero();
    for idx in 0..m.spec().cell_count() {
        if interior(idx) {
            worst = worst.max(residual_field.values()[idx].abs());
        }
    }
    Ok(worst)
}

/// One coupling strength probed by [`threshold_probe`].
#[derive(Debug, Clone)]
pub struct ThresholdRow<T> {
    pub c_f: T,
    pub converged: bool,
    /// Interaction norm of the final density, when one was assembled.
    pub q_norm: Option<T>,
    pub sup_norm: Option<T>,
    pub lambda: Option<T>,
}

/// Sweep record; the largest convergent coupling is a lower proxy for the
/// true existence threshold, with no claim of equality.
#[derive(Debug, Clone)]
pub struct ThresholdReport<T> {
    pub rows: Vec<ThresholdRow<T>>,
    pub largest_convergent_c_f: Option<T>,
}

/// Reruns the coupled solve across an increasing grid of coupling
/// strengths, recording outcomes. Solver failures are data here, not
/// errors.
pub fn threshold_probe<T: Real>(
    params_base: &MFGParams<T>,
    kernel: &RieszOperator<T>,
    c_f_grid: &[T],
    config: &SolveConfig<T>,
) -> Result<ThresholdReport<T>> {
    if c_f_grid.is_empty() {
        return Err(Error::InvalidParameter {
            name: "c_f_grid",
            message: "need at least one coupling strength".to_string(),
        });
    }
    for pair in c_f_grid.windows(2) {
        if !(pair[1] > pair[0]) {
            return Err(Error::InvalidParameter {
                name: "c_f_grid",
                message: "coupling grid must be strictly increasing".to_string(),
            });
        }
    }
    if !(c_f_grid[0] >= T::zero()) {
        return Err(Error::InvalidParameter {
            name: "c_f_grid",
            message: "coupling strengths must be nonnegative".to_string(),
        });
    }

    let mut rows = Vec::with_capacity(c_f_grid.len());
    let mut largest = None;
    for &c_f in c_f_grid {
        let params = params_base.with_c_f(c_f)?;
        let describe = |sol: &MFGSolution<T>| {
            (
                sol.m.norm_lp(params.q_alpha).ok(),
                Some(sol.m.max_norm()),
                Some(sol.lambda),
            )
        };
        let row = match solve_mfg(&params, config, kernel) {
            Ok(sol) => {
                largest = Some(c_f);
                let (q_norm, sup_norm, lambda) = describe(&sol);
                ThresholdRow {
                    c_f,
                    converged: true,
                    q_norm,
                    sup_norm,
                    lambda,
                }
            }
            Err(failure) => {
                let (q_norm, sup_norm, lambda) = failure
                    .last
                    .as_ref()
                    .map(&describe)
                    .unwrap_or((None, None, None));
                ThresholdRow {
                    c_f,
                    converged: false,
                    q_norm,
                    sup_norm,
                    lambda,
                }
            }
        };
        rows.push(row);
    }
    Ok(ThresholdReport {
        rows,
        largest_convergent_c_f: largest,
    })
}

/// One interaction-inequality measurement.
#[derive(Debug, Clone)]
pub struct HlsRow<T> {
    pub cells_per_axis: usize,
    pub sigma: T,
    pub ratio: T,
}

/// Ratio spread observed on one grid.
#[derive(Debug, Clone)]
pub struct HlsGridSummary<T> {
    pub cells_per_axis: usize,
    pub min_ratio: T,
    pub max_ratio: T,
}

impl<T: Real> HlsGridSummary<T> {
    /// Relative spread `(max - min) / max`.
    pub fn spread_fraction(&self) -> T {
        (self.max_ratio - self.min_ratio) / self.max_ratio
    }
}

/// Scale-invariance audit of the discrete interaction-inequality ratio.
#[derive(Debug, Clone)]
pub struct HlsReport<T> {
    pub rows: Vec<HlsRow<T>>,
    pub grids: Vec<HlsGridSummary<T>>,
}

impl<T: Real> HlsReport<T> {
    /// Largest per-grid relative spread.
    pub fn max_spread_fraction(&self) -> T {
        self.grids
            .iter()
            .map(|g| g.spread_fraction())
            .fold(T::zero(), T::max)
    }

    /// Relative change of the per-grid maximum ratio between consecutive
    /// grids, an empirical view of how the discrete constant drifts under
    /// refinement.
    pub fn refinement_drift(&self) -> Vec<T> {
        self.grids
            .windows(2)
            .map(|pair| ((pair[1].max_ratio - pair[0].max_ratio) / pair[0].max_ratio).abs())
            .collect()
    }
}

/// Evaluates `bilinear(f, f) / ||f||_q^2` over a compactly supported
/// polynomial bump family on each listed grid. The ratio is invariant
/// under rescaling of `f`, so the bumps are used unnormalized.
pub fn hls_invariance_audit<T: Real>(
    spec_list: &[GridSpec],
    alpha: T,
    sigma_list: &[T],
) -> Result<HlsReport<T>> {
    if spec_list.is_empty() || sigma_list.is_empty() {
        return Err(Error::InvalidParameter {
            name: "spec_list",
            message: "need at least one grid and one width".to_string(),
        });
    }
    for &sigma in sigma_list {
        if !(sigma > T::zero() && sigma < real::<T>(0.5)) {
            return Err(Error::InvalidParameter {
                name: "sigma_list",
                message: format!("bump width must lie in (0, 0.5), got {sigma}"),
            });
        }
    }
    let mut rows = Vec::new();
    let mut grids = Vec::new();
    for &spec in spec_list {
        let kernel = RieszOperator::new(spec, alpha)?;
        let center = vec![real::<T>(0.5); spec.dim()];
        let mut min_ratio = T::infinity();
        let mut max_ratio = T::zero();
        for &sigma in sigma_list {
            let bump = ScalarField::from_fn(spec, |x: &[T]| {
                let mut r2 = T::zero();
                for (xi, ci) in x.iter().zip(&center) {
                    let d = *xi - *ci;
                    r2 += d * d;
                }
                let t = T::one() - r2 / (sigma * sigma);
                if t > T::zero() {
                    t * t * t
                } else {
                    T::zero()
                }
            });
            let ratio = kernel.hls_ratio(&bump)?;
            if !(ratio.is_finite() && ratio > T::zero()) {
                return Err(Error::InconclusiveCheck {
                    context: "hls_invariance_audit: ratio must be positive and finite".to_string(),
                });
            }
            min_ratio = min_ratio.min(ratio);
            max_ratio = max_ratio.max(ratio);
            rows.push(HlsRow {
                cells_per_axis: spec.cells_per_axis(),
                sigma,
                ratio,
            });
        }
        grids.push(HlsGridSummary {
            cells_per_axis: spec.cells_per_axis(),
            min_ratio,
            max_ratio,
        });
    }
    Ok(HlsReport { rows, grids })
}
