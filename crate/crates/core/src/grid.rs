//! Staggered finite-volume calculus on the unit box.
//!
//! Scalars live at cell centers `x_i = (i + 1/2) h`, vector components live on
//! the faces normal to their axis, and every boundary-normal face value is
//! zero. With that convention the discrete operators satisfy, exactly in
//! arithmetic,
//!
//! ```text
//!   integrate(u . divergence(F)) = - sum_faces F . gradient(u) h^n
//! ```
//!
//! so `laplacian = divergence(gradient(.))` is symmetric with zero row sums and
//! `integrate(laplacian(u)) = 0` to rounding. All quadrature is the midpoint
//! rule `h^n * sum`.

use crate::{real, Error, Real, Result};

/// Uniform grid over `[0,1]^n`: `n` in {1, 2}, `N` cells per axis.
///
/// The spacing is never stored; it is always derived as `1/N`, so `N * h = 1`
/// holds in the stored representation by construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    dim: usize,
    cells_per_axis: usize,
}

impl GridSpec {
    /// A `dim`-dimensional grid with `cells_per_axis` cells per axis.
    ///
    /// `dim` must be 1 or 2 and `cells_per_axis` at least 2.
    pub fn new(dim: usize, cells_per_axis: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidParameter {
                name: "dim",
                message: format!("must be 1 or 2, got {dim}"),
            });
        }
        if cells_per_axis < 2 {
            return Err(Error::InvalidParameter {
                name: "cells_per_axis",
                message: format!("must be at least 2, got {cells_per_axis}"),
            });
        }
        Ok(GridSpec {
            dim,
            cells_per_axis,
        })
    }

    #[inline]
    #[must_use]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    #[must_use]
    pub fn cells_per_axis(&self) -> usize {
        self.cells_per_axis
    }

    /// Total number of cells, `N^n`.
    #[inline]
    #[must_use]
    pub fn cell_count(&self) -> usize {
        self.cells_per_axis.pow(self.dim as u32)
    }

    /// Mesh width `h = 1/N`.
    #[inline]
    #[must_use]
    pub fn spacing<T: Real>(&self) -> T {
        T::one() / T::from_usize(self.cells_per_axis).expect("cell count fits the scalar")
    }

    /// Cell measure `h^n`.
    #[inline]
    #[must_use]
    pub fn cell_volume<T: Real>(&self) -> T {
        self.spacing::<T>().powi(self.dim as i32)
    }

    /// Number of faces normal to `axis` (boundary faces included).
    #[inline]
    #[must_use]
    pub fn face_count(&self, axis: usize) -> usize {
        debug_assert!(axis < self.dim);
        let n = self.cells_per_axis;
        match self.dim {
            1 => n + 1,
            _ => (n + 1) * n,
        }
    }

    /// Flat cell index from per-axis indices; `iy` is ignored in 1D.
    #[inline]
    #[must_use]
    pub fn cell_index(&self, ix: usize, iy: usize) -> usize {
        debug_assert!(ix < self.cells_per_axis);
        match self.dim {
            1 => ix,
            _ => {
                debug_assert!(iy < self.cells_per_axis);
                iy * self.cells_per_axis + ix
            }
        }
    }

    /// Per-axis indices of a flat cell index, `(ix, iy)`; `iy = 0` in 1D.
    #[inline]
    #[must_use]
    pub fn cell_coords_index(&self, idx: usize) -> (usize, usize) {
        match self.dim {
            1 => (idx, 0),
            _ => (idx % self.cells_per_axis, idx / self.cells_per_axis),
        }
    }

    /// Center coordinates of a cell; the second entry is 0 in 1D.
    #[inline]
    #[must_use]
    pub fn cell_center<T: Real>(&self, idx: usize) -> [T; 2] {
        let h = self.spacing::<T>();
        let half = real::<T>(0.5);
        let (ix, iy) = self.cell_coords_index(idx);
        let x = (T::from_usize(ix).unwrap() + half) * h;
        let y = if self.dim == 2 {
            (T::from_usize(iy).unwrap() + half) * h
        } else {
            T::zero()
        };
        [x, y]
    }

    /// Flat index of an x-normal face: `fi` in `0..=N`, row `j` (0 in 1D).
    #[inline]
    #[must_use]
    pub fn xface_index(&self, fi: usize, j: usize) -> usize {
        debug_assert!(fi <= self.cells_per_axis);
        match self.dim {
            1 => fi,
            _ => j * (self.cells_per_axis + 1) + fi,
        }
    }

    /// Flat index of a y-normal face (2D only): column `i`, `fj` in `0..=N`.
    #[inline]
    #[must_use]
    pub fn yface_index(&self, i: usize, fj: usize) -> usize {
        debug_assert!(self.dim == 2 && fj <= self.cells_per_axis);
        fj * self.cells_per_axis + i
    }

    /// True when every per-axis index is at least one cell from the boundary.
    #[inline]
    #[must_use]
    pub fn is_interior(&self, idx: usize) -> bool {
        let n = self.cells_per_axis;
        let (ix, iy) = self.cell_coords_index(idx);
        let x_ok = ix >= 1 && ix + 1 < n;
        match self.dim {
            1 => x_ok,
            _ => x_ok && iy >= 1 && iy + 1 < n,
        }
    }
}

/// Cell-centered scalar field.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField<T> {
    spec: GridSpec,
    values: Vec<T>,
}

impl<T: Real> ScalarField<T> {
    #[must_use]
    pub fn zeros(spec: GridSpec) -> Self {
        ScalarField {
            spec,
            values: vec![T::zero(); spec.cell_count()],
        }
    }

    #[must_use]
    pub fn constant(spec: GridSpec, value: T) -> Self {
        ScalarField {
            spec,
            values: vec![value; spec.cell_count()],
        }
    }

    /// Builds a field by evaluating `f` at cell centers.
    #[must_use]
    pub fn from_fn(spec: GridSpec, mut f: impl FnMut(&[T]) -> T) -> Self {
        let mut values = Vec::with_capacity(spec.cell_count());
        for idx in 0..spec.cell_count() {
            let c = spec.cell_center::<T>(idx);
            values.push(f(&c[..spec.dim()]));
        }
        ScalarField { spec, values }
    }

    /// Wraps raw cell values; the length must match the grid.
    pub fn from_values(spec: GridSpec, values: Vec<T>) -> Result<Self> {
        if values.len() != spec.cell_count() {
            return Err(Error::GridMismatch {
                context: "ScalarField::from_values",
            });
        }
        Ok(ScalarField { spec, values })
    }

    #[inline]
    #[must_use]
    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    #[inline]
    #[must_use]
    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    /// Midpoint-rule integral `h^n * sum`.
    #[must_use]
    pub fn integrate(&self) -> T {
        let sum: T = self.values.iter().copied().sum();
        sum * self.spec.cell_volume::<T>()
    }

    /// Mean value; equals the integral because the box has unit measure.
    #[must_use]
    pub fn mean(&self) -> T {
        self.integrate()
    }

    /// Discrete `L^p` norm `(h^n sum |f|^p)^{1/p}`; `p` must be at least 1.
    pub fn norm_lp(&self, p: T) -> Result<T> {
        if !(p >= T::one()) {
            return Err(Error::InvalidParameter {
                name: "p",
                message: format!("L^p norms require p >= 1, got {p}"),
            });
        }
        let sum: T = self.values.iter().map(|v| v.abs().powf(p)).sum();
        Ok((sum * self.spec.cell_volume::<T>()).powf(T::one() / p))
    }

    /// Max-norm over cells.
    #[must_use]
    pub fn max_norm(&self) -> T {
        self.values
            .iter()
            .fold(T::zero(), |acc, v| acc.max(v.abs()))
    }

    #[must_use]
    pub fn min_value(&self) -> T {
        self.values
            .iter()
            .fold(T::infinity(), |acc, v| acc.min(*v))
    }

    /// Face-centered gradient; boundary-normal faces are zero.
    #[must_use]
    pub fn gradient(&self) -> VectorField<T> {
        let spec = self.spec;
        let n = spec.cells_per_axis();
        let h = spec.spacing::<T>();
        let mut out = VectorField::zeros(spec);
        match spec.dim() {
            1 => {
                let comp = &mut out.components[0];
                for fi in 1..n {
                    comp[fi] = (self.values[fi] - self.values[fi - 1]) / h;
                }
            }
            _ => {
                for j in 0..n {
                    for fi in 1..n {
                        let l = spec.cell_index(fi - 1, j);
                        let r = spec.cell_index(fi, j);
                        out.components[0][spec.xface_index(fi, j)] =
                            (self.values[r] - self.values[l]) / h;
                    }
                }
                for fj in 1..n {
                    for i in 0..n {
                        let b = spec.cell_index(i, fj - 1);
                        let t = spec.cell_index(i, fj);
                        out.components[1][spec.yface_index(i, fj)] =
                            (self.values[t] - self.values[b]) / h;
                    }
                }
            }
        }
        out
    }

    /// `divergence(gradient(self))`: the Neumann five-point (three-point)
    /// Laplacian, assembled literally as the composition so the discrete
    /// identities hold exactly.
    #[must_use]
    pub fn laplacian(&self) -> ScalarField<T> {
        self.gradient().divergence()
    }

    /// Pointwise map.
    #[must_use]
    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        ScalarField {
            spec: self.spec,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination with another field on the same grid.
    #[must_use]
    pub fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        assert_eq!(self.spec, other.spec, "fields must share a grid");
        ScalarField {
            spec: self.spec,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// In-place `self += a * x`.
    pub fn axpy(&mut self, a: T, x: &Self) {
        assert_eq!(self.spec, x.spec, "fields must share a grid");
        for (s, v) in self.values.iter_mut().zip(&x.values) {
            *s += a * *v;
        }
    }

    pub fn scale(&mut self, a: T) {
        for v in self.values.iter_mut() {
            *v *= a;
        }
    }

    pub fn add_constant(&mut self, c: T) {
        for v in self.values.iter_mut() {
            *v += c;
        }
    }

    /// Copy with the mean subtracted, so the integral is zero to rounding.
    #[must_use]
    pub fn without_mean(&self) -> Self {
        let mut out = self.clone();
        let mean = self.mean();
        out.add_constant(-mean);
        out
    }

    /// `||self - other||_{L^2}`.
    #[must_use]
    pub fn l2_distance(&self, other: &Self) -> T {
        assert_eq!(self.spec, other.spec, "fields must share a grid");
        let sum: T = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum();
        (sum * self.spec.cell_volume::<T>()).sqrt()
    }
}

/// Face-centered vector field; component `d` lives on faces normal to axis `d`
/// and boundary-normal faces are kept at zero by every operator here.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField<T> {
    spec: GridSpec,
    components: Vec<Vec<T>>,
}

impl<T: Real> VectorField<T> {
    #[must_use]
    pub fn zeros(spec: GridSpec) -> Self {
        let components = (0..spec.dim())
            .map(|axis| vec![T::zero(); spec.face_count(axis)])
            .collect();
        VectorField { spec, components }
    }

    /// Builds a field by evaluating `f(axis, face_center)` at interior faces;
    /// boundary-normal faces stay zero.
    #[must_use]
    pub fn from_fn(spec: GridSpec, mut f: impl FnMut(usize, &[T]) -> T) -> Self {
        let mut out = Self::zeros(spec);
        let n = spec.cells_per_axis();
        let h = spec.spacing::<T>();
        let half = real::<T>(0.5);
        match spec.dim() {
            1 => {
                for fi in 1..n {
                    let x = T::from_usize(fi).unwrap() * h;
                    out.components[0][fi] = f(0, &[x]);
                }
            }
            _ => {
                for j in 0..n {
                    let y = (T::from_usize(j).unwrap() + half) * h;
                    for fi in 1..n {
                        let x = T::from_usize(fi).unwrap() * h;
                        out.components[0][spec.xface_index(fi, j)] = f(0, &[x, y]);
                    }
                }
                for fj in 1..n {
                    let y = T::from_usize(fj).unwrap() * h;
                    for i in 0..n {
                        let x = (T::from_usize(i).unwrap() + half) * h;
                        out.components[1][spec.yface_index(i, fj)] = f(1, &[x, y]);
                    }
                }
            }
        }
        out
    }

    #[inline]
    #[must_use]
    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    #[inline]
    #[must_use]
    pub fn component(&self, axis: usize) -> &[T] {
        &self.components[axis]
    }

    #[inline]
    pub fn component_mut(&mut self, axis: usize) -> &mut [T] {
        &mut self.components[axis]
    }

    /// Cell-centered divergence `sum_d (F_right - F_left)/h`.
    #[must_use]
    pub fn divergence(&self) -> ScalarField<T> {
        let spec = self.spec;
        let n = spec.cells_per_axis();
        let h = spec.spacing::<T>();
        let mut out = ScalarField::zeros(spec);
        match spec.dim() {
            1 => {
                let c = &self.components[0];
                for i in 0..n {
                    out.values[i] = (c[i + 1] - c[i]) / h;
                }
            }
            _ => {
                for j in 0..n {
                    for i in 0..n {
                        let cx = &self.components[0];
                        let cy = &self.components[1];
                        let dx = (cx[spec.xface_index(i + 1, j)] - cx[spec.xface_index(i, j)]) / h;
                        let dy = (cy[spec.yface_index(i, j + 1)] - cy[spec.yface_index(i, j)]) / h;
                        out.values[spec.cell_index(i, j)] = dx + dy;
                    }
                }
            }
        }
        out
    }

    /// Per-axis arithmetic average of the two faces of a cell.
    #[inline]
    #[must_use]
    pub fn at_cell(&self, idx: usize) -> [T; 2] {
        let spec = self.spec;
        let half = real::<T>(0.5);
        let (ix, iy) = spec.cell_coords_index(idx);
        match spec.dim() {
            1 => {
                let c = &self.components[0];
                [(c[ix] + c[ix + 1]) * half, T::zero()]
            }
            _ => {
                let cx = &self.components[0];
                let cy = &self.components[1];
                [
                    (cx[spec.xface_index(ix, iy)] + cx[spec.xface_index(ix + 1, iy)]) * half,
                    (cy[spec.yface_index(ix, iy)] + cy[spec.yface_index(ix, iy + 1)]) * half,
                ]
            }
        }
    }

    /// In-place `self += a * x`.
    pub fn axpy(&mut self, a: T, x: &Self) {
        assert_eq!(self.spec, x.spec, "fields must share a grid");
        for (c, xc) in self.components.iter_mut().zip(&x.components) {
            for (v, xv) in c.iter_mut().zip(xc) {
                *v += a * *xv;
            }
        }
    }

    pub fn scale(&mut self, a: T) {
        for c in self.components.iter_mut() {
            for v in c.iter_mut() {
                *v *= a;
            }
        }
    }

    /// Largest face magnitude.
    #[must_use]
    pub fn max_norm(&self) -> T {
        self.components
            .iter()
            .flat_map(|c| c.iter())
            .fold(T::zero(), |acc, v| acc.max(v.abs()))
    }

    /// True when every boundary-normal face is exactly zero.
    #[must_use]
    pub fn boundary_faces_are_zero(&self) -> bool {
        let spec = self.spec;
        let n = spec.cells_per_axis();
        match spec.dim() {
            1 => {
                let c = &self.components[0];
                c[0] == T::zero() && c[n] == T::zero()
            }
            _ => {
                let cx = &self.components[0];
                let cy = &self.components[1];
                (0..n).all(|j| {
                    cx[spec.xface_index(0, j)] == T::zero()
                        && cx[spec.xface_index(n, j)] == T::zero()
                }) && (0..n).all(|i| {
                    cy[spec.yface_index(i, 0)] == T::zero()
                        && cy[spec.yface_index(i, n)] == T::zero()
                })
            }
        }
    }

    /// Sum over faces of `self . gradient(u)` times `h^n`; the pairing that
    /// makes the summation-by-parts identity exact.
    #[must_use]
    pub fn pair_with_gradient(&self, u: &ScalarField<T>) -> T {
        assert_eq!(self.spec, u.spec, "fields must share a grid");
        let g = u.gradient();
        let mut sum = T::zero();
        for (c, gc) in self.components.iter().zip(&g.components) {
            for (&f, &gv) in c.iter().zip(gc) {
                sum += f * gv;
            }
        }
        sum * self.spec.cell_volume::<T>()
    }
}
