//! Uniform Cartesian grids on truncated boxes [-L, L]^d carrying standard
//! Gaussian quadrature weights, plus scalar and vector fields on their nodes.
//!
//! A grid node at x contributes the weight G_d(x) h^d, so that
//! sum_nodes f(x) w(x) approximates int f dgamma with the truncated tail
//! reported separately as `tail_mass`.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use crate::convex::ConvexBody;
use crate::error::{Error, Result};
use crate::special;

/// Points are fixed-size with trailing unused components set to zero.
pub type Point = [f64; 3];

/// Memory cap on node counts (a grid stores one f64 weight per node; fields
/// store one or `dim` values per node).
pub const MAX_GRID_NODES: usize = 1 << 24;

/// Standard Gaussian density G_d(x) = (2 pi)^{-d/2} exp(-|x|^2 / 2).
pub fn gaussian_density(x: &Point, dim: usize) -> f64 {
    debug_assert!((1..=3).contains(&dim));
    let mut q = 0.0;
    for v in x.iter().take(dim) {
        q += v * v;
    }
    let c = (2.0 * std::f64::consts::PI).sqrt().recip().powi(dim as i32);
    c * (-0.5 * q).exp()
}

#[derive(Debug)]
pub struct GaussianGrid {
    dim: usize,
    half_width: f64,
    spacing: f64,
    half_steps: usize,
    nodes_per_axis: usize,
    len: usize,
    weights: Vec<f64>,
    weight_sum: f64,
    tail_mass: f64,
}

impl GaussianGrid {
    /// Builds the grid on [-L, L]^dim with spacing h, snapping L so that
    /// 2L/h is an integer (and therefore 0 is a node).
    pub fn new(dim: usize, half_width: f64, spacing: f64) -> Result<Arc<Self>> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dim = {dim} not in 1..=3")));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!("half width L = {half_width}")));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidGrid(format!("spacing h = {spacing}")));
        }
        if spacing > half_width {
            return Err(Error::InvalidGrid(format!(
                "spacing h = {spacing} exceeds half width L = {half_width}"
            )));
        }
        let half_steps = (half_width / spacing).round() as usize;
        let half_width = half_steps as f64 * spacing;
        let nodes_per_axis = 2 * half_steps + 1;
        let len = nodes_per_axis.pow(dim as u32);
        if len > MAX_GRID_NODES {
            return Err(Error::GridTooLarge {
                requested: len,
                cap: MAX_GRID_NODES,
            });
        }

        let mut grid = GaussianGrid {
            dim,
            half_width,
            spacing,
            half_steps,
            nodes_per_axis,
            len,
            weights: Vec::new(),
            weight_sum: 0.0,
            tail_mass: special::box_tail_mass(dim, half_width),
        };
        // Separable weights: the d-dimensional node weight is the product of
        // 1-d factors G_1(x_k) h.
        let axis: Vec<f64> = (0..nodes_per_axis)
            .map(|i| {
                let x = grid.axis_coord(i);
                gaussian_density(&[x, 0.0, 0.0], 1) * spacing
            })
            .collect();
        let mut weights = vec![0.0; len];
        for (flat, w) in weights.iter_mut().enumerate() {
            let idx = grid.multi_index(flat);
            let mut prod = 1.0;
            for k in 0..dim {
                prod *= axis[idx[k]];
            }
            *w = prod;
        }
        grid.weights = weights;
        // the node sum factorizes over axes; the factored form keeps the
        // rounding error at the per-axis scale even on multi-million-node
        // grids, where a flat sweep would drift past the invariant slack
        let axis_sum: f64 = axis.iter().sum();
        grid.weight_sum = axis_sum.powi(dim as i32);
        // Lattice sums of the Gaussian exceed the integral by at most the
        // Poisson correction; anything beyond that is a bug.
        let excess = (1.0 + special::lattice_excess_1d(spacing)).powi(dim as i32) - 1.0;
        debug_assert!(grid.weight_sum <= 1.0 + excess + 1e-12);
        debug_assert!(grid.weight_sum >= 1.0 - grid.tail_mass - 1e-12);
        Ok(Arc::new(grid))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.nodes_per_axis
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight_sum(&self) -> f64 {
        self.weight_sum
    }

    /// Gaussian mass outside the truncated box, computable from the 1-d tail.
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// Coordinate of the i-th node along one axis; exact zero at the center.
    pub fn axis_coord(&self, i: usize) -> f64 {
        (i as f64 - self.half_steps as f64) * self.spacing
    }

    pub fn multi_index(&self, flat: usize) -> [usize; 3] {
        let n = self.nodes_per_axis;
        match self.dim {
            1 => [flat, 0, 0],
            2 => [flat % n, flat / n, 0],
            _ => [flat % n, (flat / n) % n, flat / (n * n)],
        }
    }

    pub fn flat_index(&self, idx: [usize; 3]) -> usize {
        let n = self.nodes_per_axis;
        match self.dim {
            1 => idx[0],
            2 => idx[0] + n * idx[1],
            _ => idx[0] + n * (idx[1] + n * idx[2]),
        }
    }

    pub fn node(&self, flat: usize) -> Point {
        let idx = self.multi_index(flat);
        let mut p = [0.0; 3];
        for k in 0..self.dim {
            p[k] = self.axis_coord(idx[k]);
        }
        p
    }

    pub fn same_grid(&self, other: &GaussianGrid) -> bool {
        std::ptr::eq(self, other)
            || (self.dim == other.dim
                && self.half_steps == other.half_steps
                && self.spacing == other.spacing)
    }
}

#[derive(Clone)]
pub struct ScalarField {
    grid: Arc<GaussianGrid>,
    values: Vec<f64>,
    mask: Option<Arc<Vec<bool>>>,
}

impl ScalarField {
    pub fn from_fn(grid: &Arc<GaussianGrid>, f: impl Fn(&Point) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.node(i))).collect();
        ScalarField {
            grid: grid.clone(),
            values,
            mask: None,
        }
    }

    pub fn constant(grid: &Arc<GaussianGrid>, c: f64) -> Self {
        ScalarField {
            grid: grid.clone(),
            values: vec![c; grid.len()],
            mask: None,
        }
    }

    pub fn from_values(grid: &Arc<GaussianGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::FieldLength {
                got: values.len(),
                expected: grid.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue(i));
        }
        Ok(ScalarField {
            grid: grid.clone(),
            values,
            mask: None,
        })
    }

    pub fn grid(&self) -> &Arc<GaussianGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn mask(&self) -> Option<&[bool]> {
        self.mask.as_deref().map(|m| m.as_slice())
    }

    pub fn with_mask(mut self, mask: Arc<Vec<bool>>) -> Self {
        debug_assert_eq!(mask.len(), self.values.len());
        self.mask = Some(mask);
        self
    }

    pub fn without_mask(mut self) -> Self {
        self.mask = None;
        self
    }

    /// Multilinear interpolation with constant extension beyond the box.
    pub fn interpolate(&self, p: &Point) -> f64 {
        let g = &self.grid;
        let n = g.nodes_per_axis();
        let mut cell = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for k in 0..g.dim() {
            let t = (p[k] + g.half_width()) / g.spacing();
            if t <= 0.0 {
                cell[k] = 0;
                frac[k] = 0.0;
            } else if t >= (n - 1) as f64 {
                cell[k] = n - 2;
                frac[k] = 1.0;
            } else {
                let i = t.floor() as usize;
                cell[k] = i.min(n - 2);
                frac[k] = t - cell[k] as f64;
            }
        }
        match g.dim() {
            1 => {
                let i = cell[0];
                let f = frac[0];
                self.values[i] * (1.0 - f) + self.values[i + 1] * f
            }
            2 => {
                let (i, j) = (cell[0], cell[1]);
                let (fx, fy) = (frac[0], frac[1]);
                let v00 = self.values[g.flat_index([i, j, 0])];
                let v10 = self.values[g.flat_index([i + 1, j, 0])];
                let v01 = self.values[g.flat_index([i, j + 1, 0])];
                let v11 = self.values[g.flat_index([i + 1, j + 1, 0])];
                let a = v00 * (1.0 - fx) + v10 * fx;
                let b = v01 * (1.0 - fx) + v11 * fx;
                a * (1.0 - fy) + b * fy
            }
            _ => {
                let mut acc = 0.0;
                for corner in 0..8usize {
                    let mut idx = [0usize; 3];
                    let mut w = 1.0;
                    for k in 0..3 {
                        if corner >> k & 1 == 1 {
                            idx[k] = cell[k] + 1;
                            w *= frac[k];
                        } else {
                            idx[k] = cell[k];
                            w *= 1.0 - frac[k];
                        }
                    }
                    acc += w * self.values[g.flat_index(idx)];
                }
                acc
            }
        }
    }

    /// Writes `x1[,x2[,x3]],value` rows for every node.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        let d = self.grid.dim();
        let header: &str = match d {
            1 => "x1,value",
            2 => "x1,x2,value",
            _ => "x1,x2,x3,value",
        };
        out.push_str(header);
        out.push('\n');
        for i in 0..self.grid.len() {
            let p = self.grid.node(i);
            for k in 0..d {
                let _ = write!(out, "{:.12e},", p[k]);
            }
            let _ = writeln!(out, "{:.12e}", self.values[i]);
        }
        std::fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
    }

    /// Reads a field written by `write_csv`; node order and coordinates must
    /// match the grid.
    pub fn read_csv(grid: &Arc<GaussianGrid>, path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut values = Vec::with_capacity(grid.len());
        for (lineno, line) in text.lines().enumerate() {
            if lineno == 0 || line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != grid.dim() + 1 {
                return Err(Error::Config(format!(
                    "{}:{}: expected {} columns",
                    path.display(),
                    lineno + 1,
                    grid.dim() + 1
                )));
            }
            let flat = values.len();
            if flat >= grid.len() {
                return Err(Error::FieldLength {
                    got: flat + 1,
                    expected: grid.len(),
                });
            }
            let node = grid.node(flat);
            for k in 0..grid.dim() {
                let x: f64 = cols[k]
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("bad coordinate at line {}", lineno + 1)))?;
                if (x - node[k]).abs() > 1e-9 * (1.0 + node[k].abs()) {
                    return Err(Error::Config(format!(
                        "node coordinate mismatch at line {}: got {x}, grid has {}",
                        lineno + 1,
                        node[k]
                    )));
                }
            }
            let v: f64 = cols[grid.dim()]
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad value at line {}", lineno + 1)))?;
            values.push(v);
        }
        Self::from_values(grid, values)
    }
}

pub struct VectorField {
    grid: Arc<GaussianGrid>,
    /// Structure-of-arrays: component k occupies [k*len, (k+1)*len).
    comps: Vec<f64>,
}

impl VectorField {
    pub fn zeros(grid: &Arc<GaussianGrid>) -> Self {
        VectorField {
            grid: grid.clone(),
            comps: vec![0.0; grid.len() * grid.dim()],
        }
    }

    pub fn from_fn(grid: &Arc<GaussianGrid>, f: impl Fn(&Point) -> Point) -> Self {
        let mut v = Self::zeros(grid);
        for i in 0..grid.len() {
            let val = f(&grid.node(i));
            for k in 0..grid.dim() {
                v.comps[k * grid.len() + i] = val[k];
            }
        }
        v
    }

    pub fn grid(&self) -> &Arc<GaussianGrid> {
        &self.grid
    }

    pub fn component(&self, k: usize) -> &[f64] {
        let n = self.grid.len();
        &self.comps[k * n..(k + 1) * n]
    }

    pub fn component_mut(&mut self, k: usize) -> &mut [f64] {
        let n = self.grid.len();
        &mut self.comps[k * n..(k + 1) * n]
    }

    pub fn norm_at(&self, i: usize) -> f64 {
        let n = self.grid.len();
        let mut q = 0.0;
        for k in 0..self.grid.dim() {
            let v = self.comps[k * n + i];
            q += v * v;
        }
        q.sqrt()
    }

    pub fn max_norm(&self) -> f64 {
        (0..self.grid.len())
            .map(|i| self.norm_at(i))
            .fold(0.0, f64::max)
    }
}

/// Quadrature of `f` against the Gaussian measure, optionally restricted to
/// the nodes of a convex body (closed membership). Nodes excluded by the
/// field's own mask never contribute.
pub fn gaussian_integrate(f: &ScalarField, body: Option<&ConvexBody>) -> Result<f64> {
    let grid = f.grid();
    if let Some(b) = body {
        if b.dim() != grid.dim() {
            return Err(Error::DimensionMismatch(format!(
                "body dim {} vs grid dim {}",
                b.dim(),
                grid.dim()
            )));
        }
    }
    let mask = f.mask();
    // compensated summation: quadratures feed 1e-10-level assertions and a
    // flat sweep over multi-million-node grids would drift past that
    let mut sum = 0.0;
    let mut comp = 0.0;
    for i in 0..grid.len() {
        if let Some(m) = mask {
            if !m[i] {
                continue;
            }
        }
        if let Some(b) = body {
            if !b.contains(&grid.node(i)) {
                continue;
            }
        }
        let term = f.values()[i] * grid.weights()[i] - comp;
        let next = sum + term;
        comp = (next - sum) - term;
        sum = next;
    }
    Ok(sum)
}

/// Discrete derivative of `values` along `axis`: central differences in the
/// interior, second-order one-sided stencils where a neighbor is missing
/// (lattice edge or mask boundary), first-order with a single neighbor.
pub(crate) fn axis_derivative(
    grid: &GaussianGrid,
    values: &[f64],
    axis: usize,
    mask: Option<&[bool]>,
    out: &mut [f64],
) {
    let n = grid.nodes_per_axis();
    let h = grid.spacing();
    let stride = match axis {
        0 => 1,
        1 => n,
        _ => n * n,
    };
    let admissible = |flat: usize| -> bool { mask.map_or(true, |m| m[flat]) };
    for flat in 0..grid.len() {
        if !admissible(flat) {
            out[flat] = 0.0;
            continue;
        }
        let idx = grid.multi_index(flat)[axis];
        let minus = idx > 0 && admissible(flat - stride);
        let plus = idx + 1 < n && admissible(flat + stride);
        out[flat] = match (minus, plus) {
            (true, true) => (values[flat + stride] - values[flat - stride]) / (2.0 * h),
            (false, true) => {
                if idx + 2 < n && admissible(flat + 2 * stride) {
                    (-3.0 * values[flat] + 4.0 * values[flat + stride]
                        - values[flat + 2 * stride])
                        / (2.0 * h)
                } else {
                    (values[flat + stride] - values[flat]) / h
                }
            }
            (true, false) => {
                if idx >= 2 && admissible(flat - 2 * stride) {
                    (3.0 * values[flat] - 4.0 * values[flat - stride] + values[flat - 2 * stride])
                        / (2.0 * h)
                } else {
                    (values[flat] - values[flat - stride]) / h
                }
            }
            (false, false) => 0.0,
        };
    }
}

/// Discrete gradient of a scalar field. Where `mask` is given, nodes outside
/// it neither receive values nor serve as stencil neighbors.
pub fn gradient(u: &ScalarField, mask: Option<&[bool]>) -> VectorField {
    let grid = u.grid();
    let mut g = VectorField::zeros(grid);
    for k in 0..grid.dim() {
        // borrow split: compute into a scratch then move in
        let mut comp = vec![0.0; grid.len()];
        axis_derivative(grid, u.values(), k, mask, &mut comp);
        g.component_mut(k).copy_from_slice(&comp);
    }
    g
}
