//! Fourier-multiplier realizations of the nonlocal operators: Riesz
//! transforms, Leray/Helmholtz projection, harmonic (Poisson) extension and
//! heat propagation.
//!
//! All operators act on fully periodic tori. Half-grid data reaches them
//! through the reflection extensions in [`crate::extension`], which double the
//! normal interval `[0, H]` into a torus of extent `2H`.
//!
//! Torus axis order is `(normal, tangential_1[, tangential_2])` for the
//! doubled domain and `(tangential_1[, tangential_2])` for wall tori. Vector
//! components keep the half-grid order `(tangential..., normal)`; the fixed
//! mapping between the two lives in [`TorusGrid::axis_of_component`].
//!
//! Mode conventions: wavevector `xi = 2 pi m / extent` with signed `m`; the
//! zero mode passes through even multipliers and is annihilated by odd ones.
//! Bins with any axis at the Nyquist frequency carry no sign information for
//! odd symbols, so odd multipliers zero them and the Leray projector zeroes
//! them; this keeps every output real and every projected field exactly
//! divergence-free in the discrete symbol algebra.

use crate::domain::{BoundaryField, Field, GridSpec};
use crate::error::{HsError, Result};
use num_complex::Complex64;
use rustfft::FftPlanner;

/// Fully periodic box: per-axis sizes and extents.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusGrid {
    pub shape: Vec<usize>,
    pub extents: Vec<f64>,
    /// Spatial dimension of the underlying problem (2 or 3). For a doubled
    /// half-space torus `shape.len() == dim`; for a wall torus it is `dim - 1`.
    pub dim: usize,
}

impl TorusGrid {
    pub fn points(&self) -> usize {
        self.shape.iter().product()
    }

    /// Torus covering the doubled normal interval: axis 0 has extent `2H`
    /// with `2 (n_normal - 1)` points, tangential axes follow.
    pub fn doubled(grid: &GridSpec) -> TorusGrid {
        let mut shape = vec![2 * (grid.n_normal - 1)];
        let mut extents = vec![2.0 * grid.height_h];
        for _ in 0..grid.n_tangential_axes() {
            shape.push(grid.n_tangential);
            extents.push(grid.period_l);
        }
        TorusGrid {
            shape,
            extents,
            dim: grid.dim,
        }
    }

    /// Wall torus: tangential axes only.
    pub fn tangential(grid: &GridSpec) -> TorusGrid {
        TorusGrid {
            shape: vec![grid.n_tangential; grid.n_tangential_axes()],
            extents: vec![grid.period_l; grid.n_tangential_axes()],
            dim: grid.dim,
        }
    }

    /// Torus axis carrying vector component `c` (components are ordered
    /// tangential-first, normal last; axes are normal-first).
    pub fn axis_of_component(&self, c: usize) -> usize {
        debug_assert_eq!(self.shape.len(), self.dim, "component mapping needs a full torus");
        if c == self.dim - 1 {
            0
        } else {
            c + 1
        }
    }

    /// Signed integer mode for bin `k` on axis `axis`.
    #[inline]
    pub fn signed_mode(&self, axis: usize, k: usize) -> i64 {
        let n = self.shape[axis];
        if k < n.div_ceil(2) {
            k as i64
        } else {
            k as i64 - n as i64
        }
    }

    /// Wavevector component for bin `k` on axis `axis`.
    #[inline]
    pub fn wavevector(&self, axis: usize, k: usize) -> f64 {
        std::f64::consts::TAU * self.signed_mode(axis, k) as f64 / self.extents[axis]
    }

    #[inline]
    pub fn is_nyquist(&self, axis: usize, k: usize) -> bool {
        let n = self.shape[axis];
        n % 2 == 0 && k == n / 2
    }

    /// Decode a flat (component-free) grid index into per-axis indices.
    pub fn decode(&self, flat: usize, out: &mut [usize]) {
        let mut rem = flat;
        for a in (0..self.shape.len()).rev() {
            out[a] = rem % self.shape[a];
            rem /= self.shape[a];
        }
    }
}

/// Real samples on a torus; layout `[axis0][axis1]...[component]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusField {
    pub grid: TorusGrid,
    pub components: usize,
    pub values: Vec<f64>,
}

impl TorusField {
    pub fn zeros(grid: &TorusGrid, components: usize) -> Self {
        TorusField {
            grid: grid.clone(),
            components,
            values: vec![0.0; grid.points() * components],
        }
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn add_scaled(&mut self, other: &TorusField, scale: f64) {
        assert_eq!(self.values.len(), other.values.len());
        for (a, b) in self.values.iter_mut().zip(other.values.iter()) {
            *a += scale * b;
        }
    }
}

/// Time-indexed torus slices with uniform spacing `dt`.
#[derive(Debug, Clone)]
pub struct TorusSpaceTime {
    pub grid: TorusGrid,
    pub components: usize,
    pub dt: f64,
    pub slices: Vec<TorusField>,
}

/// Complex mode coefficients, same layout as the physical field.
#[derive(Debug, Clone)]
pub struct SpectralField {
    pub grid: TorusGrid,
    pub components: usize,
    pub modes: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: &TorusGrid, components: usize) -> Self {
        SpectralField {
            grid: grid.clone(),
            components,
            modes: vec![Complex64::new(0.0, 0.0); grid.points() * components],
        }
    }
}

fn fft_along_axis(
    data: &mut [Complex64],
    shape: &[usize],
    components: usize,
    axis: usize,
    inverse: bool,
    planner: &mut FftPlanner<f64>,
) {
    let n = shape[axis];
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    // stride of one step along `axis` in the flattened [shape..., components] array
    let mut stride = components;
    for d in shape[axis + 1..].iter() {
        stride *= d;
    }
    let outer: usize = shape[..axis].iter().product();
    let block = n * stride;
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for o in 0..outer {
        let base = o * block;
        for inner in 0..stride {
            for (k, v) in line.iter_mut().enumerate() {
                *v = data[base + k * stride + inner];
            }
            fft.process(&mut line);
            for (k, v) in line.iter().enumerate() {
                data[base + k * stride + inner] = *v;
            }
        }
    }
}

/// Forward DFT along every torus axis (unnormalized).
pub fn fft_forward(field: &TorusField) -> SpectralField {
    let mut modes: Vec<Complex64> = field
        .values
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    let mut planner = FftPlanner::new();
    for axis in 0..field.grid.shape.len() {
        fft_along_axis(
            &mut modes,
            &field.grid.shape,
            field.components,
            axis,
            false,
            &mut planner,
        );
    }
    SpectralField {
        grid: field.grid.clone(),
        components: field.components,
        modes,
    }
}

/// Inverse DFT; scales by `1 / points` and takes real parts.
pub fn fft_inverse(spec: &SpectralField) -> TorusField {
    let mut modes = spec.modes.clone();
    let mut planner = FftPlanner::new();
    for axis in 0..spec.grid.shape.len() {
        fft_along_axis(
            &mut modes,
            &spec.grid.shape,
            spec.components,
            axis,
            true,
            &mut planner,
        );
    }
    let scale = 1.0 / spec.grid.points() as f64;
    TorusField {
        grid: spec.grid.clone(),
        components: spec.components,
        values: modes.iter().map(|z| z.re * scale).collect(),
    }
}

/// Apply `f(mode_indices, xi, component, value)` to every mode in place.
pub fn map_modes(
    spec: &mut SpectralField,
    mut f: impl FnMut(&[usize], &[f64], usize, Complex64) -> Complex64,
) {
    let n_axes = spec.grid.shape.len();
    let mut idx = vec![0usize; n_axes];
    let mut xi = vec![0.0f64; n_axes];
    let points = spec.grid.points();
    for flat in 0..points {
        spec.grid.decode(flat, &mut idx);
        for a in 0..n_axes {
            xi[a] = spec.grid.wavevector(a, idx[a]);
        }
        for c in 0..spec.components {
            let i = flat * spec.components + c;
            spec.modes[i] = f(&idx, &xi, c, spec.modes[i]);
        }
    }
}

fn any_nyquist(grid: &TorusGrid, idx: &[usize]) -> bool {
    idx.iter()
        .enumerate()
        .any(|(a, &k)| grid.is_nyquist(a, k))
}

/// Riesz transform along torus axis `j`: multiplier `-i xi_j / |xi|`.
///
/// The zero mode maps to 0; bins with axis `j` at Nyquist carry no sign for
/// the odd symbol and map to 0 as well. Components are transformed
/// independently.
pub fn riesz(field: &TorusField, j: usize) -> TorusField {
    let mut spec = fft_forward(field);
    let grid = spec.grid.clone();
    map_modes(&mut spec, |idx, xi, _c, v| {
        let norm2: f64 = xi.iter().map(|x| x * x).sum();
        if norm2 == 0.0 || grid.is_nyquist(j, idx[j]) {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, -xi[j] / norm2.sqrt()) * v
        }
    });
    fft_inverse(&spec)
}

/// Tangential Riesz transform `R'_j` applied slice-by-slice to a boundary
/// field; `j` indexes the tangential axes.
pub fn riesz_boundary(bf: &BoundaryField, j: usize) -> BoundaryField {
    let torus = TorusGrid::tangential(&bf.grid);
    let mut out = bf.clone();
    for l in 0..bf.grid.n_time {
        let slice = TorusField {
            grid: torus.clone(),
            components: bf.components,
            values: bf.slices[l].clone(),
        };
        out.slices[l] = riesz(&slice, j).values;
    }
    out
}

/// Leray/Helmholtz projection on the full torus: mode-wise
/// `delta_ij - xi_i xi_j / |xi|^2`.
///
/// The zero mode passes through unchanged; bins with any axis at Nyquist are
/// zeroed (see module docs). Output is discretely divergence-free.
pub fn leray_project(field: &TorusField) -> TorusField {
    let dim = field.grid.dim;
    assert_eq!(field.components, dim, "leray_project expects a vector field");
    let mut spec = fft_forward(field);
    let grid = spec.grid.clone();
    let points = grid.points();
    let n_axes = grid.shape.len();
    let mut idx = vec![0usize; n_axes];
    let mut xi = vec![0.0f64; n_axes];
    let mut comp_xi = vec![0.0f64; dim];
    for flat in 0..points {
        grid.decode(flat, &mut idx);
        for a in 0..n_axes {
            xi[a] = grid.wavevector(a, idx[a]);
        }
        let norm2: f64 = xi.iter().map(|x| x * x).sum();
        let base = flat * dim;
        if norm2 == 0.0 {
            continue; // zero mode passes through
        }
        if any_nyquist(&grid, &idx) {
            for c in 0..dim {
                spec.modes[base + c] = Complex64::new(0.0, 0.0);
            }
            continue;
        }
        for (c, cx) in comp_xi.iter_mut().enumerate() {
            *cx = xi[grid.axis_of_component(c)];
        }
        let old: Vec<Complex64> = (0..dim).map(|c| spec.modes[base + c]).collect();
        for i in 0..dim {
            let mut acc = old[i];
            for (j, &oj) in old.iter().enumerate() {
                acc -= oj * (comp_xi[i] * comp_xi[j] / norm2);
            }
            spec.modes[base + i] = acc;
        }
    }
    fft_inverse(&spec)
}

/// Spectral divergence of a vector field on the full torus (odd symbol, so
/// Nyquist terms are dropped).
pub fn divergence_torus(field: &TorusField) -> TorusField {
    let dim = field.grid.dim;
    assert_eq!(field.components, dim);
    let spec = fft_forward(field);
    let grid = spec.grid.clone();
    let mut div = SpectralField::zeros(&grid, 1);
    let points = grid.points();
    let n_axes = grid.shape.len();
    let mut idx = vec![0usize; n_axes];
    for flat in 0..points {
        grid.decode(flat, &mut idx);
        let mut acc = Complex64::new(0.0, 0.0);
        for c in 0..dim {
            let a = grid.axis_of_component(c);
            if grid.is_nyquist(a, idx[a]) {
                continue;
            }
            let xi = grid.wavevector(a, idx[a]);
            acc += Complex64::new(0.0, xi) * spec.modes[flat * dim + c];
        }
        div.modes[flat] = acc;
    }
    fft_inverse(&div)
}

/// Harmonic (Poisson) extension of wall data to the half grid: per tangential
/// mode `exp(-|xi'| x_n) * b_hat`; the zero mode is constant in `x_n`.
///
/// Components are extended independently.
pub fn harmonic_extension(b: &TorusField, grid: &GridSpec) -> Field {
    let spec = fft_forward(b);
    let torus = &spec.grid;
    let n_axes = torus.shape.len();
    debug_assert_eq!(n_axes, grid.n_tangential_axes());
    let nt = grid.tangential_points();
    let comps = b.components;
    let mut out = Field::zeros(grid, comps);
    let mut idx = vec![0usize; n_axes];
    // one inverse FFT per normal row, with the decayed spectrum
    let mut row_spec = SpectralField::zeros(torus, comps);
    for k in 0..grid.n_normal {
        let xn = grid.normal(k);
        for flat in 0..nt {
            torus.decode(flat, &mut idx);
            let mut q2 = 0.0;
            for a in 0..n_axes {
                let xi = torus.wavevector(a, idx[a]);
                q2 += xi * xi;
            }
            let decay = (-q2.sqrt() * xn).exp();
            for c in 0..comps {
                row_spec.modes[flat * comps + c] = spec.modes[flat * comps + c] * decay;
            }
        }
        let row = fft_inverse(&row_spec);
        for flat in 0..nt {
            for c in 0..comps {
                *out.at_mut(k, flat, c) = row.values[flat * comps + c];
            }
        }
    }
    out
}

/// Heat semigroup in Fourier space: multiplier `exp(-|xi|^2 t)`.
pub fn heat_propagate(spec: &SpectralField, t: f64) -> Result<SpectralField> {
    if t < 0.0 {
        return Err(HsError::InvalidData(format!(
            "heat propagation requires t >= 0, got {t}"
        )));
    }
    let mut out = spec.clone();
    map_modes(&mut out, |_idx, xi, _c, v| {
        let norm2: f64 = xi.iter().map(|x| x * x).sum();
        v * (-norm2 * t).exp()
    });
    Ok(out)
}

/// Tangential spectral derivative along tangential axis `j` of a half-grid
/// slice (row-by-row on the wall torus; Nyquist bins dropped).
pub fn tangential_derivative(field: &Field, j: usize) -> Field {
    let grid = field.grid;
    let torus = TorusGrid::tangential(&grid);
    let nt = grid.tangential_points();
    let comps = field.components;
    let mut out = Field::zeros(&grid, comps);
    let mut row = TorusField::zeros(&torus, comps);
    let n_axes = torus.shape.len();
    let mut idx = vec![0usize; n_axes];
    for k in 0..grid.n_normal {
        for flat in 0..nt {
            for c in 0..comps {
                row.values[flat * comps + c] = field.at(k, flat, c);
            }
        }
        let mut spec = fft_forward(&row);
        for flat in 0..nt {
            torus.decode(flat, &mut idx);
            let factor = if torus.is_nyquist(j, idx[j]) {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, torus.wavevector(j, idx[j]))
            };
            for c in 0..comps {
                spec.modes[flat * comps + c] *= factor;
            }
        }
        let der = fft_inverse(&spec);
        for flat in 0..nt {
            for c in 0..comps {
                *out.at_mut(k, flat, c) = der.values[flat * comps + c];
            }
        }
    }
    out
}

/// Restrict a doubled-torus field to the half grid `[0, H]`.
pub fn restrict_to_half(field: &TorusField, grid: &GridSpec) -> Field {
    let nt = grid.tangential_points();
    let comps = field.components;
    let mut out = Field::zeros(grid, comps);
    for k in 0..grid.n_normal {
        for p in 0..nt {
            for c in 0..comps {
                let i = out.idx(k, p, c);
                out.values[i] = field.values[(k * nt + p) * comps + c];
            }
        }
    }
    out
}

/// View one time slice of a boundary field as a wall-torus field.
pub fn boundary_slice_as_torus(bf: &BoundaryField, l: usize) -> TorusField {
    TorusField {
        grid: TorusGrid::tangential(&bf.grid),
        components: bf.components,
        values: bf.slices[l].clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::sample_boundary;

    const TAU: f64 = std::f64::consts::TAU;

    fn wall_grid(nt: usize) -> GridSpec {
        GridSpec::new(2, TAU, 4.0, nt, 17, 0.5, 5).unwrap()
    }

    fn tangential_field(grid: &GridSpec, f: impl Fn(f64) -> f64) -> TorusField {
        let torus = TorusGrid::tangential(grid);
        let dx = grid.dx_tangential();
        let values = (0..torus.points()).map(|i| f(i as f64 * dx)).collect();
        TorusField {
            grid: torus,
            components: 1,
            values,
        }
    }

    /// Dense O(N^2) DFT used as an independent oracle for the fast path.
    fn dense_multiplier_1d(values: &[f64], extent: f64, sym: impl Fn(f64) -> Complex64) -> Vec<f64> {
        let n = values.len();
        let mut modes = vec![Complex64::new(0.0, 0.0); n];
        for (k, m) in modes.iter_mut().enumerate() {
            for (r, &v) in values.iter().enumerate() {
                let phase = -TAU * (k * r) as f64 / n as f64;
                *m += Complex64::from_polar(v, phase);
            }
        }
        let mut out = vec![0.0; n];
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, m) in modes.iter().enumerate() {
                let signed = if k < n.div_ceil(2) { k as i64 } else { k as i64 - n as i64 };
                let xi = TAU * signed as f64 / extent;
                let nyq = n % 2 == 0 && k == n / 2;
                let s = if nyq { Complex64::new(0.0, 0.0) } else { sym(xi) };
                let phase = TAU * (k * r) as f64 / n as f64;
                acc += s * *m * Complex64::from_polar(1.0, phase);
            }
            *o = acc.re / n as f64;
        }
        out
    }

    #[test]
    fn riesz_single_mode_identity() {
        let g = wall_grid(64);
        let f = tangential_field(&g, |x| x.sin());
        let r = riesz(&f, 0);
        let dx = g.dx_tangential();
        for i in 0..64 {
            let x = i as f64 * dx;
            assert!((r.values[i] - (-x.cos())).abs() < 1e-12, "at {x}");
        }
    }

    #[test]
    fn riesz_annihilates_constants() {
        let g = wall_grid(32);
        let f = tangential_field(&g, |_| 3.25);
        assert!(riesz(&f, 0).linf() < 1e-13);
    }

    #[test]
    fn riesz_matches_dense_dft_oracle() {
        let g = wall_grid(32);
        // fixed band-limited sample
        let f = tangential_field(&g, |x| {
            0.7 * x.sin() + 0.3 * (3.0 * x).cos() - 0.45 * (5.0 * x).sin()
        });
        let fast = riesz(&f, 0);
        let dense = dense_multiplier_1d(&f.values, TAU, |xi| {
            let q = xi.abs();
            if q == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, -xi / q)
            }
        });
        for (a, b) in fast.values.iter().zip(dense.iter()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn riesz_boundary_matches_dense_oracle() {
        let g = wall_grid(32);
        let bf = sample_boundary(&g, 1, |xt, t, _| (1.0 + t) * (2.0 * xt[0]).sin() + 0.2 * xt[0].cos())
            .unwrap();
        let r = riesz_boundary(&bf, 0);
        for l in 0..g.n_time {
            let dense = dense_multiplier_1d(&bf.slices[l], TAU, |xi| {
                let q = xi.abs();
                if q == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, -xi / q)
                }
            });
            for (a, b) in r.slices[l].iter().zip(dense.iter()) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn riesz_squares_sum_to_minus_identity_off_mean() {
        let g = wall_grid(32);
        let grid3 = GridSpec::new(3, TAU, 4.0, 16, 9, 0.5, 3).unwrap();
        let torus = TorusGrid::tangential(&grid3);
        let dx = grid3.dx_tangential();
        let mut f = TorusField::zeros(&torus, 1);
        for i in 0..16 {
            for j in 0..16 {
                f.values[i * 16 + j] =
                    1.3 + (i as f64 * dx).sin() + 0.5 * (2.0 * j as f64 * dx).cos();
            }
        }
        let mean = f.values.iter().sum::<f64>() / f.values.len() as f64;
        let mut acc = TorusField::zeros(&torus, 1);
        for j in 0..2 {
            let rr = riesz(&riesz(&f, j), j);
            acc.add_scaled(&rr, 1.0);
        }
        for (i, v) in acc.values.iter().enumerate() {
            let expected = -(f.values[i] - mean);
            assert!((v - expected).abs() < 1e-12, "RR = -Id + mean failed");
        }
        let _ = g;
    }

    #[test]
    fn leray_annihilates_gradients() {
        let grid = GridSpec::new(2, TAU, TAU / 2.0, 16, 9, 0.5, 3).unwrap();
        let torus = TorusGrid::doubled(&grid);
        // gradient of sin(x_1) sin(x_n * 2pi / (2H)) on the doubled torus
        let mut v = TorusField::zeros(&torus, 2);
        let kx = TAU / torus.extents[1];
        let kn = TAU / torus.extents[0];
        for a0 in 0..torus.shape[0] {
            for a1 in 0..torus.shape[1] {
                let xn = a0 as f64 * torus.extents[0] / torus.shape[0] as f64;
                let x1 = a1 as f64 * torus.extents[1] / torus.shape[1] as f64;
                let base = (a0 * torus.shape[1] + a1) * 2;
                v.values[base] = kx * (kx * x1).cos() * (kn * xn).sin(); // d/dx_1
                v.values[base + 1] = kn * (kx * x1).sin() * (kn * xn).cos(); // d/dx_n
            }
        }
        let p = leray_project(&v);
        assert!(p.linf() < 1e-12 * v.linf().max(1.0));
    }

    #[test]
    fn leray_fixes_divergence_free_fields() {
        let grid = GridSpec::new(2, TAU, TAU / 2.0, 16, 9, 0.5, 3).unwrap();
        let torus = TorusGrid::doubled(&grid);
        // (sin(x_n-mode), 0): divergence-free since it only varies along x_n
        let mut v = TorusField::zeros(&torus, 2);
        let kn = TAU / torus.extents[0];
        for a0 in 0..torus.shape[0] {
            for a1 in 0..torus.shape[1] {
                let xn = a0 as f64 * torus.extents[0] / torus.shape[0] as f64;
                v.values[(a0 * torus.shape[1] + a1) * 2] = (kn * xn).sin();
            }
        }
        let p = leray_project(&v);
        for (a, b) in p.values.iter().zip(v.values.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn leray_idempotent_and_divergence_free() {
        let grid = GridSpec::new(2, TAU, TAU / 2.0, 16, 9, 0.5, 3).unwrap();
        let torus = TorusGrid::doubled(&grid);
        let mut v = TorusField::zeros(&torus, 2);
        // band-limited pseudo-random field from fixed trigonometric data
        for a0 in 0..torus.shape[0] {
            for a1 in 0..torus.shape[1] {
                let xn = a0 as f64 * TAU / torus.shape[0] as f64;
                let x1 = a1 as f64 * TAU / torus.shape[1] as f64;
                let base = (a0 * torus.shape[1] + a1) * 2;
                v.values[base] = (x1 + 0.3).sin() * (2.0 * xn).cos() + 0.4 * (3.0 * x1).cos();
                v.values[base + 1] = (2.0 * x1).cos() * xn.sin() - 0.2 * (x1 - 1.0).sin();
            }
        }
        let p1 = leray_project(&v);
        let p2 = leray_project(&p1);
        let scale = v.linf();
        for (a, b) in p1.values.iter().zip(p2.values.iter()) {
            assert!((a - b).abs() < 1e-12 * scale);
        }
        assert!(divergence_torus(&p1).linf() < 1e-12 * scale / grid.dx_normal());
    }

    #[test]
    fn harmonic_extension_single_mode() {
        let g = wall_grid(64);
        let b = tangential_field(&g, |x| x.sin());
        let ext = harmonic_extension(&b, &g);
        for k in 0..g.n_normal {
            let xn = g.normal(k);
            for p in 0..16 {
                let x = g.tangential_coords(p)[0];
                let expect = (-xn).exp() * x.sin();
                assert!(
                    (ext.at(k, p, 0) - expect).abs() < 1e-12,
                    "k={k} p={p}: {} vs {expect}",
                    ext.at(k, p, 0)
                );
            }
        }
    }

    #[test]
    fn harmonic_extension_constant() {
        let g = wall_grid(16);
        let b = tangential_field(&g, |_| 1.0);
        let ext = harmonic_extension(&b, &g);
        for k in 0..g.n_normal {
            assert!((ext.at(k, 3, 0) - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn harmonic_extension_linf_bound_on_band_limited_data() {
        let g = wall_grid(64);
        let b = tangential_field(&g, |x| {
            0.9 * (x + 0.12).sin() + 0.4 * (2.0 * x - 0.5).cos() + 0.25 * (4.0 * x).sin()
        });
        let ext = harmonic_extension(&b, &g);
        let wall_sup = b.linf();
        let mut ext_sup: f64 = 0.0;
        for k in 0..g.n_normal {
            for p in 0..64 {
                ext_sup = ext_sup.max(ext.at(k, p, 0).abs());
            }
        }
        assert!(ext_sup <= wall_sup * (1.0 + 1e-12));
    }

    #[test]
    fn harmonic_extension_satisfies_modewise_ode() {
        // second finite difference of exp(-q x_n) matches q^2 exp(-q x_n) to O(dx^2)
        let g = GridSpec::new(2, TAU, 4.0, 16, 129, 0.5, 3).unwrap();
        let b = tangential_field(&g, |x| (2.0 * x).sin());
        let ext = harmonic_extension(&b, &g);
        let dx = g.dx_normal();
        let q: f64 = 2.0;
        let mut max_rel: f64 = 0.0;
        for k in 1..g.n_normal - 1 {
            for p in 0..16 {
                let dd = (ext.at(k + 1, p, 0) - 2.0 * ext.at(k, p, 0) + ext.at(k - 1, p, 0))
                    / (dx * dx);
                let rhs = q * q * ext.at(k, p, 0);
                max_rel = max_rel.max((dd - rhs).abs());
            }
        }
        // second-order accuracy: error ~ q^4 dx^2 / 12 * amplitude
        assert!(max_rel < q.powi(4) * dx * dx / 6.0);
    }

    #[test]
    fn heat_propagate_identity_at_zero() {
        let g = wall_grid(32);
        let f = tangential_field(&g, |x| x.sin() + 0.3 * (3.0 * x).cos());
        let spec = fft_forward(&f);
        let back = fft_inverse(&heat_propagate(&spec, 0.0).unwrap());
        for (a, b) in back.values.iter().zip(f.values.iter()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn heat_propagate_single_mode_decay() {
        let g = wall_grid(32);
        let f = tangential_field(&g, |x| x.sin());
        let spec = fft_forward(&f);
        let out = fft_inverse(&heat_propagate(&spec, 1.0).unwrap());
        let dx = g.dx_tangential();
        for i in 0..32 {
            let expect = (-1.0f64).exp() * (i as f64 * dx).sin();
            assert!((out.values[i] - expect).abs() < 1e-13);
        }
    }

    #[test]
    fn heat_propagate_semigroup_composition() {
        let g = wall_grid(32);
        let f = tangential_field(&g, |x| x.sin() - 0.7 * (4.0 * x).cos());
        let spec = fft_forward(&f);
        let one = heat_propagate(&heat_propagate(&spec, 0.15).unwrap(), 0.27).unwrap();
        let two = heat_propagate(&spec, 0.42).unwrap();
        for (a, b) in one.modes.iter().zip(two.modes.iter()) {
            assert!((a - b).norm() < 1e-12 * f.linf().max(1.0) * 32.0);
        }
    }

    #[test]
    fn heat_propagate_rejects_negative_time() {
        let g = wall_grid(16);
        let f = tangential_field(&g, |x| x.sin());
        assert!(heat_propagate(&fft_forward(&f), -0.1).is_err());
    }

    #[test]
    fn parseval_identity() {
        let g = wall_grid(32);
        let f = tangential_field(&g, |x| 0.3 + x.sin() + 0.2 * (5.0 * x).cos());
        let spec = fft_forward(&f);
        let phys: f64 = f.values.iter().map(|v| v * v).sum();
        let freq: f64 = spec.modes.iter().map(|z| z.norm_sqr()).sum::<f64>() / 32.0;
        assert!((phys - freq).abs() < 1e-12 * phys.max(1.0));
    }

    #[test]
    fn hermitian_symmetry_of_real_field_spectrum() {
        let g = wall_grid(16);
        let f = tangential_field(&g, |x| (2.0 * x).sin() + 0.1);
        let spec = fft_forward(&f);
        for k in 1..16 {
            let conj = spec.modes[16 - k].conj();
            assert!((spec.modes[k] - conj).norm() < 1e-12);
        }
    }
}
