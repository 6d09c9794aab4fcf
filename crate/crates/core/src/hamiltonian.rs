//! Model parameters, Hamiltonian/Lagrangian closed forms, and the kinetic
//! density of the variational formulation.
//!
//! The Hamiltonian is `H(p) = C_H |p|^gamma` with `gamma > 1`. Its Legendre
//! transform is `L(q) = sup_p (q.p - H(p)) = C_L |q|^{gamma'}` with
//!
//! ```text
//!   gamma' = gamma/(gamma-1),
//!   C_L    = (gamma C_H)^{-(gamma'-1)} / gamma'.
//! ```
//!
//! That closed form for `C_L` is not taken on faith anywhere: energies are only
//! trusted after [`legendre_check`] has verified it against a brute-force
//! maximization of `q.p - H(p)` over a fine grid of momenta (the maximizer
//! `|p*| = (|q|/(gamma C_H))^{1/(gamma-1)}` must land strictly inside the
//! search box, otherwise the check reports itself inconclusive instead of
//! passing).
//!
//! The kinetic (Benamou-Brenier) density is the perspective function
//!
//! ```text
//!   (m, w) -> C_L |w/m|^{gamma'} m     (m > 0)
//!             0                        (m = 0, w = 0)
//!             +inf                     (m = 0, w != 0)
//! ```
//!
//! jointly convex in `(m, w)`; the infinite branch uses IEEE infinity so that
//! it poisons any quadrature sum it enters.

use crate::{real, Error, Real, Result};

/// Parameter pack for the coupled system; derived exponents are computed once
/// at construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MFGParams<T> {
    /// Spatial dimension of the box, 1 or 2.
    pub dim: usize,
    /// Hamiltonian growth exponent, `gamma > 1`.
    pub gamma: T,
    /// Hamiltonian strength `C_H > 0`.
    pub c_h: T,
    /// Coupling strength `C_f >= 0` in front of the Riesz interaction.
    pub c_f: T,
    /// Riesz exponent, `0 < alpha < dim`.
    pub alpha: T,
    /// Mollification radius for the regularized problem, `>= 0`.
    pub epsilon: T,
    /// Conjugate exponent `gamma/(gamma-1)`.
    pub gamma_prime: T,
    /// Legendre constant of the Lagrangian.
    pub c_l: T,
    /// Interaction Lebesgue exponent `2 dim/(dim+alpha)`, always in (1, 2).
    pub q_alpha: T,
    /// Flux integrability exponent: `1/beta = 1/gamma' + 1/(gamma q_alpha)`.
    pub beta: T,
    /// Mass-critical Riesz exponent `dim - gamma'` (0 when not attained).
    pub alpha_mc: T,
    /// Sobolev-critical Riesz exponent `dim - 2 gamma'` (0 when not attained).
    pub alpha_sc: T,
}

impl<T: Real> MFGParams<T> {
    /// Validates the primitive parameters and derives the exponent family.
    pub fn new(dim: usize, gamma: T, c_h: T, c_f: T, alpha: T, epsilon: T) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidParameter {
                name: "dim",
                message: format!("must be 1 or 2, got {dim}"),
            });
        }
        if !(gamma > T::one()) {
            return Err(Error::InvalidParameter {
                name: "gamma",
                message: format!("Hamiltonian exponent must exceed 1, got {gamma}"),
            });
        }
        if !(c_h > T::zero()) {
            return Err(Error::InvalidParameter {
                name: "c_h",
                message: format!("Hamiltonian strength must be positive, got {c_h}"),
            });
        }
        if !(c_f >= T::zero()) {
            return Err(Error::InvalidParameter {
                name: "c_f",
                message: format!("coupling strength must be nonnegative, got {c_f}"),
            });
        }
        let n = T::from_usize(dim).unwrap();
        if !(alpha > T::zero() && alpha < n) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                message: format!("Riesz exponent must satisfy 0 < alpha < {dim}, got {alpha}"),
            });
        }
        if !(epsilon >= T::zero()) {
            return Err(Error::InvalidParameter {
                name: "epsilon",
                message: format!("mollification radius must be nonnegative, got {epsilon}"),
            });
        }

        let one = T::one();
        let two = real::<T>(2.0);
        let gamma_prime = gamma / (gamma - one);
        let c_l = (gamma * c_h).powf(-(gamma_prime - one)) / gamma_prime;
        let q_alpha = two * n / (n + alpha);
        let beta = one / (one / gamma_prime + one / (gamma * q_alpha));
        let alpha_mc = if n > gamma_prime { n - gamma_prime } else { T::zero() };
        let alpha_sc = if n > two * gamma_prime {
            n - two * gamma_prime
        } else {
            T::zero()
        };
        debug_assert!(q_alpha > one && q_alpha < two);
        debug_assert!(beta > one && beta < gamma_prime);

        Ok(MFGParams {
            dim,
            gamma,
            c_h,
            c_f,
            alpha,
            epsilon,
            gamma_prime,
            c_l,
            q_alpha,
            beta,
            alpha_mc,
            alpha_sc,
        })
    }

    /// Same parameters with another mollification radius.
    pub fn with_epsilon(&self, epsilon: T) -> Result<Self> {
        Self::new(self.dim, self.gamma, self.c_h, self.c_f, self.alpha, epsilon)
    }

    /// Same parameters with another coupling strength.
    pub fn with_c_f(&self, c_f: T) -> Result<Self> {
        Self::new(self.dim, self.gamma, self.c_h, c_f, self.alpha, self.epsilon)
    }

    /// `H(p) = C_H |p|^gamma`; only the first `dim` entries of `p` are read.
    #[must_use]
    pub fn hamiltonian_value(&self, p: &[T]) -> T {
        self.c_h * self.norm(p).powf(self.gamma)
    }

    /// `grad H(p) = C_H gamma |p|^{gamma-2} p`, with `grad H(0) = 0` (the
    /// subgradient selection that keeps the drift continuous at rest).
    #[must_use]
    pub fn hamiltonian_grad(&self, p: &[T]) -> [T; 2] {
        let r = self.norm(p);
        let mut out = [T::zero(); 2];
        if r == T::zero() {
            return out;
        }
        let factor = self.c_h * self.gamma * r.powf(self.gamma - real::<T>(2.0));
        for (o, &pi) in out.iter_mut().zip(p.iter().take(self.dim)) {
            *o = factor * pi;
        }
        out
    }

    /// Scalar face version of the drift closure `C_H gamma |g|^{gamma-2} g`.
    #[inline]
    #[must_use]
    pub fn drift_closure(&self, g: T) -> T {
        if g == T::zero() {
            T::zero()
        } else {
            self.c_h * self.gamma * g.abs().powf(self.gamma - real::<T>(2.0)) * g
        }
    }

    /// `L(q) = C_L |q|^{gamma'}`.
    #[must_use]
    pub fn lagrangian_value(&self, q: &[T]) -> T {
        self.c_l * self.norm(q).powf(self.gamma_prime)
    }

    /// Kinetic density at one cell. `m` must be nonnegative; the `(0, w != 0)`
    /// branch returns IEEE `+inf`, which poisons any sum containing it.
    pub fn kinetic_density(&self, m: T, w: &[T]) -> Result<T> {
        if m < T::zero() {
            return Err(Error::NonPositiveDensity {
                min_value: m.to_f64().unwrap_or(f64::NAN),
            });
        }
        let speed = self.norm(w);
        if m == T::zero() {
            return Ok(if speed == T::zero() {
                T::zero()
            } else {
                T::infinity()
            });
        }
        Ok(self.c_l * m * (speed / m).powf(self.gamma_prime))
    }

    #[inline]
    fn norm(&self, v: &[T]) -> T {
        match self.dim {
            1 => v[0].abs(),
            _ => (v[0] * v[0] + v[1] * v[1]).sqrt(),
        }
    }
}

/// Largest gap `|sup_p (q.p - H(p)) - C_L |q|^{gamma'}|` over the sample
/// momenta, with the supremum taken by brute force over a uniform grid of
/// side `2 * p_grid_radius` and `p_grid_count` points per axis.
///
/// Fails with [`Error::InconclusiveCheck`] if any maximizer touches the search
/// boundary: the gap then says nothing about the closed form.
pub fn legendre_check<T: Real>(
    params: &MFGParams<T>,
    q_samples: &[Vec<T>],
    p_grid_radius: T,
    p_grid_count: usize,
) -> Result<T> {
    if p_grid_count < 3 {
        return Err(Error::InvalidParameter {
            name: "p_grid_count",
            message: "need at least 3 grid points per axis".to_string(),
        });
    }
    if !(p_grid_radius > T::zero()) {
        return Err(Error::InvalidParameter {
            name: "p_grid_radius",
            message: "search radius must be positive".to_string(),
        });
    }
    let count = p_grid_count;
    let step = real::<T>(2.0) * p_grid_radius / T::from_usize(count - 1).unwrap();
    let coord = |k: usize| -p_grid_radius + step * T::from_usize(k).unwrap();

    let mut worst_gap = T::zero();
    for q in q_samples {
        if q.len() < params.dim {
            return Err(Error::InvalidParameter {
                name: "q_samples",
                message: format!("sample has {} entries, need {}", q.len(), params.dim),
            });
        }
        let mut best = T::neg_infinity();
        let mut best_on_boundary = false;
        match params.dim {
            1 => {
                for k in 0..count {
                    let p = coord(k);
                    let v = q[0] * p - params.hamiltonian_value(&[p]);
                    if v > best {
                        best = v;
                        best_on_boundary = k == 0 || k + 1 == count;
                    }
                }
            }
            _ => {
                for ky in 0..count {
                    let py = coord(ky);
                    for kx in 0..count {
                        let px = coord(kx);
                        let v = q[0] * px + q[1] * py - params.hamiltonian_value(&[px, py]);
                        if v > best {
                            best = v;
                            best_on_boundary =
                                kx == 0 || kx + 1 == count || ky == 0 || ky + 1 == count;
                        }
                    }
                }
            }
        }
        if best_on_boundary {
            return Err(Error::InconclusiveCheck {
                context: format!(
                    "Legendre maximizer for |q| = {} sits on the search boundary (radius {})",
                    params.norm(q),
                    p_grid_radius
                ),
            });
        }
        let closed_form = params.lagrangian_value(q);
        let gap = (best - closed_form).abs();
        if gap > worst_gap {
            worst_gap = gap;
        }
    }
    Ok(worst_gap)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(dim: usize, gamma: f64, c_h: f64) -> MFGParams<f64> {
        MFGParams::new(dim, gamma, c_h, 0.1, 0.5, 0.0).unwrap()
    }

    #[test]
    fn construction_rejects_out_of_range_parameters() {
        assert!(MFGParams::<f64>::new(3, 2.0, 1.0, 0.1, 0.5, 0.0).is_err());
        assert!(MFGParams::<f64>::new(1, 1.0, 1.0, 0.1, 0.5, 0.0).is_err());
        assert!(MFGParams::<f64>::new(1, 2.0, 0.0, 0.1, 0.5, 0.0).is_err());
        assert!(MFGParams::<f64>::new(1, 2.0, 1.0, -0.1, 0.5, 0.0).is_err());
        assert!(MFGParams::<f64>::new(1, 2.0, 1.0, 0.1, 1.0, 0.0).is_err());
        assert!(MFGParams::<f64>::new(1, 2.0, 1.0, 0.1, 0.5, -1.0).is_err());
        assert!(MFGParams::<f64>::new(2, 2.0, 1.0, 0.1, 1.5, 0.0).is_ok());
    }

    #[test]
    fn derived_exponents_match_hand_computation() {
        // gamma = 3: gamma' = 1.5, C_L = 3^{-1/2}/1.5.
        let p = params(2, 3.0, 1.0);
        assert!((p.gamma_prime - 1.5).abs() < 1e-15);
        assert!((p.c_l - 1.0 / 3.0f64.sqrt() / 1.5).abs() < 1e-15);
        assert!((p.c_l - 0.384_900_179_459_750_5).abs() < 1e-12);
        // q_alpha = 2*2/(2+0.5) = 1.6.
        assert!((p.q_alpha - 1.6).abs() < 1e-15);
        // 1/beta = 1/1.5 + 1/(3*1.6).
        assert!((1.0 / p.beta - (1.0 / 1.5 + 1.0 / 4.8)).abs() < 1e-15);
        assert!(p.beta > 1.0 && p.beta < p.gamma_prime);
        // n = 2 > gamma' = 1.5: mass-critical at 0.5; Sobolev never (2 < 3).
        assert!((p.alpha_mc - 0.5).abs() < 1e-15);
        assert_eq!(p.alpha_sc, 0.0);

        // gamma = 2: gamma' = 2, C_L = 1/(2 C_H)^1 / 2 = 1/4 at C_H = 1.
        let p = params(1, 2.0, 1.0);
        assert!((p.c_l - 0.25).abs() < 1e-15);
        assert_eq!(p.alpha_mc, 0.0, "1 < gamma' = 2 leaves no mass-critical alpha");
    }

    #[test]
    fn q_alpha_stays_in_the_open_interval() {
        for dim in [1usize, 2] {
            for t in 1..20 {
                let alpha = dim as f64 * t as f64 / 20.0;
                let p = MFGParams::<f64>::new(dim, 1.7, 0.8, 0.0, alpha, 0.0).unwrap();
                assert!(p.q_alpha > 1.0 && p.q_alpha < 2.0, "q_alpha = {}", p.q_alpha);
            }
        }
    }

    #[test]
    fn hamiltonian_and_gradient_closed_forms() {
        let p = params(2, 3.0, 0.7);
        let v = p.hamiltonian_value(&[0.3, -0.4]);
        assert!((v - 0.7 * 0.5f64.powi(3)).abs() < 1e-15);
        let g = p.hamiltonian_grad(&[0.3, -0.4]);
        // C_H gamma |p| p at gamma = 3.
        assert!((g[0] - 0.7 * 3.0 * 0.5 * 0.3).abs() < 1e-15);
        assert!((g[1] + 0.7 * 3.0 * 0.5 * 0.4).abs() < 1e-15);
        // Zero momentum: the gamma < 2 singular factor must not produce NaN.
        let p15 = params(1, 1.5, 1.0);
        let g0 = p15.hamiltonian_grad(&[0.0]);
        assert_eq!(g0[0], 0.0);
        assert_eq!(p15.drift_closure(0.0), 0.0);
    }

    #[test]
    fn kinetic_density_conventions() {
        let p = params(1, 2.0, 1.0);
        // C_L = 1/4: m = 1, w = 1 gives 0.25.
        assert!((p.kinetic_density(1.0, &[1.0]).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(p.kinetic_density(0.0, &[0.0]).unwrap(), 0.0);
        let inf = p.kinetic_density(0.0, &[0.5]).unwrap();
        assert!(inf.is_infinite() && inf > 0.0);
        // The sentinel poisons sums.
        assert!((1.0 + inf).is_infinite());
        assert!(p.kinetic_density(-0.1, &[0.0]).is_err());
        // 2D magnitude is Euclidean.
        let p2 = params(2, 2.0, 1.0);
        let d = p2.kinetic_density(2.0, &[3.0, 4.0]).unwrap();
        assert!((d - 0.25 * 2.0 * (2.5f64).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn kinetic_density_is_one_homogeneous_and_convex() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let p = params(2, 2.5, 0.9);
        for _ in 0..200 {
            let m = rng.random_range(0.05..3.0);
            let w = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            let t = rng.random_range(0.1..5.0);
            let a = p.kinetic_density(t * m, &[t * w[0], t * w[1]]).unwrap();
            let b = t * p.kinetic_density(m, &w).unwrap();
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "homogeneity: {a} vs {b}");

            let m2 = rng.random_range(0.05..3.0);
            let w2 = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            let mid = p
                .kinetic_density(
                    0.5 * (m + m2),
                    &[0.5 * (w[0] + w2[0]), 0.5 * (w[1] + w2[1])],
                )
                .unwrap();
            let avg = 0.5 * (p.kinetic_density(m, &w).unwrap()
                + p.kinetic_density(m2, &w2).unwrap());
            assert!(mid <= avg + 1e-12, "midpoint convexity: {mid} vs {avg}");
        }
    }

    #[test]
    fn legendre_gap_is_small_for_the_gate_parameters() {
        for (gamma, c_h) in [(2.0, 1.0), (1.5, 1.0), (3.0, 1.0), (2.0, 0.5)] {
            let p = MFGParams::<f64>::new(1, gamma, c_h, 0.0, 0.5, 0.0).unwrap();
            let q_samples = vec![vec![1.0], vec![-1.0]];
            let gap = legendre_check(&p, &q_samples, 4.0, 4001).unwrap();
            assert!(
                gap < 1e-6,
                "gamma={gamma}, C_H={c_h}: Legendre gap {gap:.3e} too large"
            );
        }
    }

    #[test]
    fn legendre_check_flags_boundary_maximizers() {
        // gamma = 2, C_H = 1: maximizer |p*| = |q|/2 = 5 sits outside a radius-2
        // search box, so the check must refuse to certify.
        let p = params(1, 2.0, 1.0);
        let err = legendre_check(&p, &[vec![10.0]], 2.0, 101).unwrap_err();
        assert!(matches!(err, Error::InconclusiveCheck { .. }));
    }

    #[test]
    fn legendre_check_works_in_two_dimensions() {
        let p = params(2, 2.0, 1.0);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let gap = legendre_check(&p, &[vec![s, s], vec![1.0, 0.0]], 2.0, 801).unwrap();
        assert!(gap < 1e-5, "2D Legendre gap {gap:.3e}");
    }
}
