//! Whole-space Ornstein-Uhlenbeck semigroup by the Mehler formula,
//!
//! ```text
//! T_t u(x) = int u(e^{-t} x + sqrt(1 - e^{-2t}) y) dgamma(y)
//! ```
//!
//! evaluated with the grid's own quadrature for the inner integral and
//! multilinear interpolation (constant extension) for off-grid arguments.
//! Serves as the exact-oracle counterpart of the Dirichlet-form evolution.

use crate::error::{Error, Result};
use crate::grid::{gaussian_integrate, ScalarField};

pub fn mehler_apply(f: &ScalarField, t: f64) -> Result<ScalarField> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    if f.mask().is_some() {
        return Err(Error::MaskedField);
    }
    if t == 0.0 {
        return Ok(f.clone());
    }
    let grid = f.grid().clone();
    let decay = (-t).exp();
    // 1 - e^{-2t} via expm1 keeps small times accurate
    let spread = (-(-2.0 * t).exp_m1()).sqrt();

    let n = grid.len();
    let mut out = vec![0.0; n];
    if grid.dim() == 1 {
        // 1-d fast path: interpolation by direct index arithmetic
        let vals = f.values();
        let w = grid.weights();
        let npa = grid.nodes_per_axis();
        let h = grid.spacing();
        let l = grid.half_width();
        let coords: Vec<f64> = (0..npa).map(|i| grid.axis_coord(i)).collect();
        for (i, o) in out.iter_mut().enumerate() {
            let cx = decay * coords[i];
            let mut acc = 0.0;
            for j in 0..npa {
                let arg = cx + spread * coords[j];
                let tpos = (arg + l) / h;
                let v = if tpos <= 0.0 {
                    vals[0]
                } else if tpos >= (npa - 1) as f64 {
                    vals[npa - 1]
                } else {
                    let c = (tpos.floor() as usize).min(npa - 2);
                    let fr = tpos - c as f64;
                    vals[c] * (1.0 - fr) + vals[c + 1] * fr
                };
                acc += v * w[j];
            }
            *o = acc;
        }
    } else {
        for (i, o) in out.iter_mut().enumerate() {
            let x = grid.node(i);
            let mut acc = 0.0;
            for j in 0..n {
                let y = grid.node(j);
                let mut arg = [0.0; 3];
                for k in 0..grid.dim() {
                    arg[k] = decay * x[k] + spread * y[k];
                }
                acc += f.interpolate(&arg) * grid.weights()[j];
            }
            *o = acc;
        }
    }
    ScalarField::from_values(&grid, out)
}

/// L2(gamma) norm over the whole grid.
pub fn l2_norm(f: &ScalarField) -> f64 {
    let mut s = 0.0;
    for (v, w) in f.values().iter().zip(f.grid().weights()) {
        s += v * v * w;
    }
    s.sqrt()
}

/// L2(gamma) distance between two fields on the same grid.
pub fn l2_distance(a: &ScalarField, b: &ScalarField) -> Result<f64> {
    if !a.grid().same_grid(b.grid()) {
        return Err(Error::DimensionMismatch("fields on different grids".into()));
    }
    let mut s = 0.0;
    for i in 0..a.grid().len() {
        let d = a.values()[i] - b.values()[i];
        s += d * d * a.grid().weights()[i];
    }
    Ok(s.sqrt())
}

/// Gaussian mass of a field (integral against gamma over the whole grid).
pub fn mass(f: &ScalarField) -> f64 {
    gaussian_integrate(f, None).expect("unrestricted integration cannot fail")
}
