//! Discretized half-space geometry and the field containers used by every
//! other module.
//!
//! The half space `{x_n > 0}` is truncated to a tangential torus `[0, L)^{n-1}`
//! times a normal interval `[0, H]`, with a uniform time grid on `[0, T]`.
//!
//! Conventions used throughout the crate:
//! * vector components are ordered `(tangential_1, [tangential_2,] normal)`,
//!   so component `dim - 1` is the wall-normal one;
//! * tensor components `F_{ki}` are stored row-major as `c = k * dim + i`;
//! * slice storage is row-major `[x_n][tangential axes][component]`, matching
//!   the on-disk layout `(time, x_n, tangential axes, component)`.

use crate::error::{HsError, Result};
use serde::{Deserialize, Serialize};

/// Truncated half-space/time discretization parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Spatial dimension n, 2 or 3.
    pub dim: usize,
    /// Tangential box length L; each tangential axis is a torus [0, L).
    pub period_l: f64,
    /// Wall-normal extent H; nodes live on [0, H].
    pub height_h: f64,
    /// Points per tangential axis (power of two).
    pub n_tangential: usize,
    /// Points on [0, H], endpoints included.
    pub n_normal: usize,
    /// Time horizon T.
    pub t_final: f64,
    /// Time slices on [0, T], endpoints included.
    pub n_time: usize,
}

impl GridSpec {
    /// Validating constructor; see the crate-level conventions for
    /// the meaning of each parameter.
    pub fn new(
        dim: usize,
        period_l: f64,
        height_h: f64,
        n_tangential: usize,
        n_normal: usize,
        t_final: f64,
        n_time: usize,
    ) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(HsError::InvalidGrid(format!("dim must be 2 or 3, got {dim}")));
        }
        if !(period_l > 0.0) || !(height_h > 0.0) || !(t_final > 0.0) {
            return Err(HsError::InvalidGrid(format!(
                "extents must be positive: L = {period_l}, H = {height_h}, T = {t_final}"
            )));
        }
        if n_tangential < 2 || n_normal < 2 || n_time < 2 {
            return Err(HsError::InvalidGrid(format!(
                "all sizes must be >= 2: n_tangential = {n_tangential}, n_normal = {n_normal}, n_time = {n_time}"
            )));
        }
        if !n_tangential.is_power_of_two() {
            return Err(HsError::InvalidGrid(format!(
                "n_tangential must be a power of two, got {n_tangential}"
            )));
        }
        Ok(GridSpec {
            dim,
            period_l,
            height_h,
            n_tangential,
            n_normal,
            t_final,
            n_time,
        })
    }

    pub fn dx_tangential(&self) -> f64 {
        self.period_l / self.n_tangential as f64
    }

    pub fn dx_normal(&self) -> f64 {
        self.height_h / (self.n_normal - 1) as f64
    }

    pub fn dt(&self) -> f64 {
        self.t_final / (self.n_time - 1) as f64
    }

    /// Number of tangential axes, `dim - 1`.
    pub fn n_tangential_axes(&self) -> usize {
        self.dim - 1
    }

    /// Points in one tangential plane, `n_tangential^(dim-1)`.
    pub fn tangential_points(&self) -> usize {
        self.n_tangential.pow(self.n_tangential_axes() as u32)
    }

    /// Points in one time slice of the half grid.
    pub fn points_per_slice(&self) -> usize {
        self.tangential_points() * self.n_normal
    }

    pub fn time(&self, l: usize) -> f64 {
        self.dt() * l as f64
    }

    pub fn normal(&self, k: usize) -> f64 {
        self.dx_normal() * k as f64
    }

    /// Decode a flat tangential index into per-axis indices.
    pub fn tangential_multi_index(&self, flat: usize) -> [usize; 2] {
        if self.dim == 2 {
            [flat, 0]
        } else {
            [flat / self.n_tangential, flat % self.n_tangential]
        }
    }

    /// Tangential coordinates of a flat tangential index.
    pub fn tangential_coords(&self, flat: usize) -> [f64; 2] {
        let mi = self.tangential_multi_index(flat);
        let dx = self.dx_tangential();
        [mi[0] as f64 * dx, mi[1] as f64 * dx]
    }

    /// Same grid with a new time horizon (used when the Picard loop
    /// shrinks the horizon; slice spacing is preserved by the caller).
    pub fn with_horizon(&self, t_final: f64, n_time: usize) -> Result<Self> {
        GridSpec::new(
            self.dim,
            self.period_l,
            self.height_h,
            self.n_tangential,
            self.n_normal,
            t_final,
            n_time,
        )
    }

    /// Same grid with the normal/time resolution scaled (tangential count
    /// unchanged); used by refinement studies and oracle configs.
    pub fn refined(&self, normal_factor: usize, time_factor: usize) -> Result<Self> {
        GridSpec::new(
            self.dim,
            self.period_l,
            self.height_h,
            self.n_tangential,
            (self.n_normal - 1) * normal_factor + 1,
            self.t_final,
            (self.n_time - 1) * time_factor + 1,
        )
    }
}

/// One time slice of scalar/vector/tensor samples on the half grid.
///
/// `components` is 1 for scalars, `dim` for vectors, `dim*dim` for tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: GridSpec,
    pub components: usize,
    pub values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: &GridSpec, components: usize) -> Self {
        Field {
            grid: *grid,
            components,
            values: vec![0.0; grid.points_per_slice() * components],
        }
    }

    #[inline]
    pub fn idx(&self, k_normal: usize, flat_tangential: usize, c: usize) -> usize {
        (k_normal * self.grid.tangential_points() + flat_tangential) * self.components + c
    }

    #[inline]
    pub fn at(&self, k_normal: usize, flat_tangential: usize, c: usize) -> f64 {
        self.values[self.idx(k_normal, flat_tangential, c)]
    }

    #[inline]
    pub fn at_mut(&mut self, k_normal: usize, flat_tangential: usize, c: usize) -> &mut f64 {
        let i = self.idx(k_normal, flat_tangential, c);
        &mut self.values[i]
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn assert_finite(&self, what: &str) -> Result<()> {
        if self.values.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(HsError::NonFinite(what.to_string()))
        }
    }

    /// Component-wise `self + scale * other`; shapes must agree.
    pub fn add_scaled(&mut self, other: &Field, scale: f64) {
        assert_eq!(self.values.len(), other.values.len(), "field shape mismatch");
        for (a, b) in self.values.iter_mut().zip(other.values.iter()) {
            *a += scale * b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.values {
            *v *= s;
        }
    }
}

/// Time-indexed sequence of slices sharing one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    pub grid: GridSpec,
    pub components: usize,
    pub slices: Vec<Field>,
}

impl SpaceTimeField {
    pub fn zeros(grid: &GridSpec, components: usize) -> Self {
        SpaceTimeField {
            grid: *grid,
            components,
            slices: (0..grid.n_time).map(|_| Field::zeros(grid, components)).collect(),
        }
    }

    pub fn from_slices(grid: &GridSpec, slices: Vec<Field>) -> Result<Self> {
        if slices.len() != grid.n_time {
            return Err(HsError::ShapeMismatch(format!(
                "expected {} time slices, got {}",
                grid.n_time,
                slices.len()
            )));
        }
        let components = slices[0].components;
        for s in &slices {
            if s.components != components || s.values.len() != grid.points_per_slice() * components {
                return Err(HsError::ShapeMismatch("slice shape differs from grid".into()));
            }
        }
        Ok(SpaceTimeField {
            grid: *grid,
            components,
            slices,
        })
    }

    pub fn linf(&self) -> f64 {
        self.slices.iter().fold(0.0, |m, s| m.max(s.linf()))
    }

    pub fn add_scaled(&mut self, other: &SpaceTimeField, scale: f64) {
        assert_eq!(self.slices.len(), other.slices.len(), "time slice count mismatch");
        for (a, b) in self.slices.iter_mut().zip(other.slices.iter()) {
            a.add_scaled(b, scale);
        }
    }

    pub fn scale(&mut self, s: f64) {
        for sl in &mut self.slices {
            sl.scale(s);
        }
    }

    /// Pointwise difference `self - other`.
    pub fn diff(&self, other: &SpaceTimeField) -> SpaceTimeField {
        let mut d = self.clone();
        d.add_scaled(other, -1.0);
        d
    }

    /// Restriction to the first `n_time` slices with horizon `t_final`
    /// (slice spacing unchanged).
    pub fn truncate_time(&self, n_time: usize, t_final: f64) -> Result<SpaceTimeField> {
        let grid = self.grid.with_horizon(t_final, n_time)?;
        let slices: Vec<Field> = self.slices[..n_time]
            .iter()
            .map(|s| {
                let mut s = s.clone();
                s.grid = grid;
                s
            })
            .collect();
        SpaceTimeField::from_slices(&grid, slices)
    }

    pub fn assert_finite(&self, what: &str) -> Result<()> {
        for s in &self.slices {
            s.assert_finite(what)?;
        }
        Ok(())
    }
}

/// Data on the wall `{x_n = 0}` times the time grid.
///
/// Storage: `slices[t]` is a flat `[tangential][component]` array.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryField {
    pub grid: GridSpec,
    pub components: usize,
    pub slices: Vec<Vec<f64>>,
}

impl BoundaryField {
    pub fn zeros(grid: &GridSpec, components: usize) -> Self {
        BoundaryField {
            grid: *grid,
            components,
            slices: (0..grid.n_time)
                .map(|_| vec![0.0; grid.tangential_points() * components])
                .collect(),
        }
    }

    #[inline]
    pub fn at(&self, l_time: usize, flat_tangential: usize, c: usize) -> f64 {
        self.slices[l_time][flat_tangential * self.components + c]
    }

    #[inline]
    pub fn at_mut(&mut self, l_time: usize, flat_tangential: usize, c: usize) -> &mut f64 {
        &mut self.slices[l_time][flat_tangential * self.components + c]
    }

    pub fn linf(&self) -> f64 {
        self.slices
            .iter()
            .flat_map(|s| s.iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Extract one component as a scalar boundary field.
    pub fn component(&self, c: usize) -> BoundaryField {
        let mut out = BoundaryField::zeros(&self.grid, 1);
        for l in 0..self.grid.n_time {
            for p in 0..self.grid.tangential_points() {
                *out.at_mut(l, p, 0) = self.at(l, p, c);
            }
        }
        out
    }

    pub fn add_scaled(&mut self, other: &BoundaryField, scale: f64) {
        assert_eq!(self.slices.len(), other.slices.len());
        for (a, b) in self.slices.iter_mut().zip(other.slices.iter()) {
            for (x, y) in a.iter_mut().zip(b.iter()) {
                *x += scale * y;
            }
        }
    }

    pub fn truncate_time(&self, n_time: usize, t_final: f64) -> Result<BoundaryField> {
        let grid = self.grid.with_horizon(t_final, n_time)?;
        Ok(BoundaryField {
            grid,
            components: self.components,
            slices: self.slices[..n_time].to_vec(),
        })
    }

    pub fn assert_finite(&self, what: &str) -> Result<()> {
        if self.slices.iter().flat_map(|s| s.iter()).all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(HsError::NonFinite(what.to_string()))
        }
    }
}

/// Pointwise sampling of a closure `(x_tangential, x_n, t, component) -> value`
/// at grid nodes and time slices.
pub fn sample(
    grid: &GridSpec,
    components: usize,
    f: impl Fn(&[f64], f64, f64, usize) -> f64,
) -> Result<SpaceTimeField> {
    let nta = grid.n_tangential_axes();
    let mut out = SpaceTimeField::zeros(grid, components);
    for (l, slice) in out.slices.iter_mut().enumerate() {
        let t = grid.time(l);
        for k in 0..grid.n_normal {
            let xn = grid.normal(k);
            for p in 0..grid.tangential_points() {
                let xt = grid.tangential_coords(p);
                for c in 0..components {
                    let v = f(&xt[..nta], xn, t, c);
                    if !v.is_finite() {
                        return Err(HsError::NonFinite("sample closure".into()));
                    }
                    *slice.at_mut(k, p, c) = v;
                }
            }
        }
    }
    Ok(out)
}

/// Scalar convenience wrapper around [`sample`].
pub fn sample_scalar(
    grid: &GridSpec,
    f: impl Fn(&[f64], f64, f64) -> f64,
) -> Result<SpaceTimeField> {
    sample(grid, 1, |xt, xn, t, _| f(xt, xn, t))
}

/// Sample a closure on the wall grid into a [`BoundaryField`].
pub fn sample_boundary(
    grid: &GridSpec,
    components: usize,
    f: impl Fn(&[f64], f64, usize) -> f64,
) -> Result<BoundaryField> {
    let nta = grid.n_tangential_axes();
    let mut out = BoundaryField::zeros(grid, components);
    for l in 0..grid.n_time {
        let t = grid.time(l);
        for p in 0..grid.tangential_points() {
            let xt = grid.tangential_coords(p);
            for c in 0..components {
                let v = f(&xt[..nta], t, c);
                if !v.is_finite() {
                    return Err(HsError::NonFinite("boundary sample closure".into()));
                }
                *out.at_mut(l, p, c) = v;
            }
        }
    }
    Ok(out)
}

/// Sample a time-independent field (one slice at t = 0).
pub fn sample_initial(
    grid: &GridSpec,
    components: usize,
    f: impl Fn(&[f64], f64, usize) -> f64,
) -> Result<Field> {
    let nta = grid.n_tangential_axes();
    let mut out = Field::zeros(grid, components);
    for k in 0..grid.n_normal {
        let xn = grid.normal(k);
        for p in 0..grid.tangential_points() {
            let xt = grid.tangential_coords(p);
            for c in 0..components {
                let v = f(&xt[..nta], xn, c);
                if !v.is_finite() {
                    return Err(HsError::NonFinite("initial sample closure".into()));
                }
                *out.at_mut(k, p, c) = v;
            }
        }
    }
    Ok(out)
}

/// The `x_n = 0` row of every slice, exactly (no interpolation).
pub fn boundary_trace(field: &SpaceTimeField) -> BoundaryField {
    trace_row(field, 0)
}

/// The row at the first interior node, used for trace-limit studies.
pub fn boundary_trace_first_interior(field: &SpaceTimeField) -> BoundaryField {
    trace_row(field, 1)
}

fn trace_row(field: &SpaceTimeField, k_normal: usize) -> BoundaryField {
    let grid = field.grid;
    let mut out = BoundaryField::zeros(&grid, field.components);
    for (l, slice) in field.slices.iter().enumerate() {
        for p in 0..grid.tangential_points() {
            for c in 0..field.components {
                *out.at_mut(l, p, c) = slice.at(k_normal, p, c);
            }
        }
    }
    out
}
