//! Gaussian bounded-variation calculus on grids: the Gaussian divergence
//! div_F phi = sum_j (d_j phi_j - y_j phi_j), total-variation estimators
//! (Sobolev form, exact jump form, dual lower bound, regularized form),
//! smooth approximation in variation, and cylindrical conditional
//! expectations with their variation contraction.

use std::path::PathBuf;
use std::sync::Arc;

use crate::convex::ConvexBody;
use crate::error::{Error, Result};
use crate::grid::{
    axis_derivative, gaussian_density, gaussian_integrate, gradient, GaussianGrid, Point,
    ScalarField, VectorField,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariationMethod {
    Sobolev,
    Jump,
    Dual,
    Regularized,
}

impl VariationMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            VariationMethod::Sobolev => "sobolev",
            VariationMethod::Jump => "jump",
            VariationMethod::Dual => "dual",
            VariationMethod::Regularized => "regularized",
        }
    }
}

/// A total-variation figure together with how it was produced.
#[derive(Debug, Clone)]
pub struct VariationEstimate {
    pub value: f64,
    pub method: VariationMethod,
    /// Grid spacing (or interface subdivision length for the jump method).
    pub resolution: f64,
    /// Gaussian mass lost to truncation on the grid that produced the value.
    pub tail: f64,
}

/// Intersection of the field mask (if any) with the body membership mask.
fn combined_mask(u: &ScalarField, body: Option<&ConvexBody>) -> Result<Option<Vec<bool>>> {
    let grid = u.grid();
    let body_mask = match body {
        Some(b) => Some(b.mask(grid)?),
        None => None,
    };
    match (u.mask(), body_mask) {
        (None, None) => Ok(None),
        (Some(m), None) => Ok(Some(m.to_vec())),
        (None, Some(b)) => Ok(Some(b)),
        (Some(m), Some(b)) => Ok(Some(
            m.iter().zip(&b).map(|(x, y)| *x && *y).collect(),
        )),
    }
}

fn masked_integral(grid: &GaussianGrid, integrand: &[f64], mask: Option<&[bool]>) -> f64 {
    let mut s = 0.0;
    let mut comp = 0.0;
    for i in 0..grid.len() {
        if mask.map_or(true, |m| m[i]) {
            let term = integrand[i] * grid.weights()[i] - comp;
            let next = s + term;
            comp = (next - s) - term;
            s = next;
        }
    }
    s
}

/// Gaussian divergence div_F phi = sum_j (d_j phi_j(y) - y_j phi_j(y)),
/// with derivatives by central differences (one-sided at lattice or mask
/// edges).
pub fn gaussian_divergence(phi: &VectorField) -> ScalarField {
    let grid = phi.grid().clone();
    let mut out = vec![0.0; grid.len()];
    let mut deriv = vec![0.0; grid.len()];
    for k in 0..grid.dim() {
        axis_derivative(&grid, phi.component(k), k, None, &mut deriv);
        let comp = phi.component(k);
        for i in 0..grid.len() {
            let y = grid.node(i);
            out[i] += deriv[i] - y[k] * comp[i];
        }
    }
    ScalarField::from_values(&grid, out).expect("divergence of finite field is finite")
}

/// int_body |grad u| dgamma with the discrete gradient (central differences,
/// second-order one-sided at the mask boundary).
pub fn sobolev_variation(
    u: &ScalarField,
    body: Option<&ConvexBody>,
) -> Result<VariationEstimate> {
    let grid = u.grid();
    let mask = combined_mask(u, body)?;
    let grad = gradient(u, mask.as_deref());
    let integrand: Vec<f64> = (0..grid.len()).map(|i| grad.norm_at(i)).collect();
    let value = masked_integral(grid, &integrand, mask.as_deref());
    Ok(VariationEstimate {
        value,
        method: VariationMethod::Sobolev,
        resolution: grid.spacing(),
        tail: grid.tail_mass(),
    })
}

/// Jump sets of piecewise-constant data.
#[derive(Debug, Clone)]
pub enum JumpSet {
    /// d = 1: jump locations with signed heights.
    Points(Vec<(f64, f64)>),
    /// d = 2: a polyline with one height per segment.
    Polyline {
        vertices: Vec<[f64; 2]>,
        heights: Vec<f64>,
    },
}

/// Subdivision length for polyline interfaces (composite midpoint rule).
const INTERFACE_DS: f64 = 1.0 / 4096.0;

/// Exact Gaussian-weighted variation of a piecewise-constant field: the
/// surface density G_d integrated over the interface, times |height|.
/// In d = 1 this is sum |height| G_1(location).
pub fn jump_variation(jumps: &JumpSet, body: &ConvexBody) -> Result<VariationEstimate> {
    match jumps {
        JumpSet::Points(points) => {
            if body.dim() != 1 {
                return Err(Error::DimensionMismatch(
                    "point jump set needs a 1-d body".into(),
                ));
            }
            let mut value = 0.0;
            for &(loc, height) in points {
                let p = [loc, 0.0, 0.0];
                if body.minkowski(&p) > 1.0 + 1e-9 {
                    return Err(Error::InterfaceOutsideBody(p));
                }
                value += height.abs() * gaussian_density(&p, 1);
            }
            Ok(VariationEstimate {
                value,
                method: VariationMethod::Jump,
                resolution: 0.0,
                tail: 0.0,
            })
        }
        JumpSet::Polyline { vertices, heights } => {
            if body.dim() != 2 {
                return Err(Error::DimensionMismatch(
                    "polyline jump set needs a 2-d body".into(),
                ));
            }
            if vertices.len() < 2 || heights.len() + 1 != vertices.len() {
                return Err(Error::Config(
                    "polyline needs n vertices and n-1 heights".into(),
                ));
            }
            let mut value = 0.0;
            for (seg, height) in heights.iter().enumerate() {
                let a = vertices[seg];
                let b = vertices[seg + 1];
                let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
                if len == 0.0 {
                    continue;
                }
                let pieces = (len / INTERFACE_DS).ceil() as usize;
                let ds = len / pieces as f64;
                for p in 0..pieces {
                    let s = (p as f64 + 0.5) / pieces as f64;
                    let mid = [
                        a[0] + s * (b[0] - a[0]),
                        a[1] + s * (b[1] - a[1]),
                        0.0,
                    ];
                    if body.minkowski(&mid) > 1.0 + 1e-9 {
                        return Err(Error::InterfaceOutsideBody(mid));
                    }
                    value += height.abs() * gaussian_density(&mid, 2) * ds;
                }
            }
            Ok(VariationEstimate {
                value,
                method: VariationMethod::Jump,
                resolution: INTERFACE_DS,
                tail: 0.0,
            })
        }
    }
}

/// Certified lower bound sup_phi int u div_F phi dgamma over the supplied
/// test fields. Each phi must satisfy |phi| <= 1 at every node and vanish
/// within two cells of the mask boundary.
pub fn dual_variation_lower_bound(
    u: &ScalarField,
    body: Option<&ConvexBody>,
    phis: &[VectorField],
) -> Result<VariationEstimate> {
    if phis.is_empty() {
        return Err(Error::InvalidTestField("no test fields supplied".into()));
    }
    let grid = u.grid();
    let mask = combined_mask(u, body)?;
    let deep = deep_interior(grid, mask.as_deref());
    let mut best = f64::NEG_INFINITY;
    for (pi, phi) in phis.iter().enumerate() {
        if !phi.grid().same_grid(grid) {
            return Err(Error::DimensionMismatch(format!(
                "test field {pi} lives on a different grid"
            )));
        }
        for i in 0..grid.len() {
            let n = phi.norm_at(i);
            if n > 1.0 + 1e-12 {
                return Err(Error::InvalidTestField(format!(
                    "field {pi} has |phi| = {n} > 1 at node {i}"
                )));
            }
            if !deep[i] && n > 1e-12 {
                return Err(Error::InvalidTestField(format!(
                    "field {pi} does not vanish near the boundary (node {i})"
                )));
            }
        }
        let div = gaussian_divergence(phi);
        let integrand: Vec<f64> = (0..grid.len())
            .map(|i| u.values()[i] * div.values()[i])
            .collect();
        best = best.max(masked_integral(grid, &integrand, mask.as_deref()));
    }
    Ok(VariationEstimate {
        value: best,
        method: VariationMethod::Dual,
        resolution: grid.spacing(),
        tail: grid.tail_mass(),
    })
}

/// Nodes whose full Chebyshev-2 lattice neighborhood stays inside the mask
/// (and inside the lattice).
fn deep_interior(grid: &GaussianGrid, mask: Option<&[bool]>) -> Vec<bool> {
    let n = grid.nodes_per_axis() as isize;
    let d = grid.dim();
    (0..grid.len())
        .map(|flat| {
            let idx = grid.multi_index(flat);
            let mut offsets = vec![-2isize; d];
            loop {
                let mut probe = [0usize; 3];
                let mut ok = true;
                for k in 0..d {
                    let j = idx[k] as isize + offsets[k];
                    if j < 0 || j >= n {
                        ok = false;
                        break;
                    }
                    probe[k] = j as usize;
                }
                if ok {
                    if let Some(m) = mask {
                        if !m[grid.flat_index(probe)] {
                            return false;
                        }
                    }
                } else {
                    return false;
                }
                // advance the offset counter over {-2..2}^d
                let mut carry = true;
                for o in offsets.iter_mut() {
                    if carry {
                        *o += 1;
                        if *o > 2 {
                            *o = -2;
                        } else {
                            carry = false;
                        }
                    }
                }
                if carry {
                    break;
                }
            }
            true
        })
        .collect()
}

/// Smooth capped bump directed along `axis`, admissible for the dual
/// estimator: profile exp(1 - 1/(1 - rho^2)) at rho = |x - center| / width
/// (so |phi| <= 1 with phi(center) = orientation), tapered to zero over a few
/// cells inside the mask boundary.
pub fn bump_test_field(
    grid: &Arc<GaussianGrid>,
    body: Option<&ConvexBody>,
    center: &Point,
    width: f64,
    axis: usize,
    orientation: f64,
) -> VectorField {
    let h = grid.spacing();
    let l = grid.half_width();
    let d = grid.dim();
    let smoothstep = |t: f64| {
        let t = t.clamp(0.0, 1.0);
        t * t * (3.0 - 2.0 * t)
    };
    let mut phi = VectorField::zeros(grid);
    for i in 0..grid.len() {
        let p = grid.node(i);
        let mut q = 0.0;
        for k in 0..d {
            let z = (p[k] - center[k]) / width;
            q += z * z;
        }
        if q >= 1.0 {
            continue;
        }
        let profile = (1.0 - 1.0 / (1.0 - q)).exp();
        // distance lower bound r (1 - m(x)) shrinks the support safely inside
        let mut taper: f64 = 1.0;
        if let Some(b) = body {
            let dist_lb = b.inradius() * (1.0 - b.minkowski(&p));
            taper = taper.min(smoothstep((dist_lb - 4.0 * h) / (4.0 * h)));
        }
        let mut edge = f64::INFINITY;
        for v in p.iter().take(d) {
            edge = edge.min(l - v.abs());
        }
        taper = taper.min(smoothstep((edge - 4.0 * h) / (4.0 * h)));
        phi.component_mut(axis)[i] = orientation * profile * taper;
    }
    phi
}

/// int_body theta_R sqrt(|grad u|^2 + 1/R) dgamma with the radial ramp
/// cutoff theta_R = clamp(2 - |x|/R, 0, 1): identically 1 on B_R, supported
/// in B_2R, |grad theta_R| <= 2/R.
pub fn regularized_variation(
    u: &ScalarField,
    r_cut: f64,
    body: Option<&ConvexBody>,
) -> Result<f64> {
    if !(r_cut.is_finite() && r_cut > 0.0) {
        return Err(Error::Config(format!("cutoff radius R = {r_cut}")));
    }
    let grid = u.grid();
    let mask = combined_mask(u, body)?;
    let grad = gradient(u, mask.as_deref());
    let integrand: Vec<f64> = (0..grid.len())
        .map(|i| {
            let p = grid.node(i);
            let mut nrm = 0.0;
            for v in p.iter().take(grid.dim()) {
                nrm += v * v;
            }
            let theta = (2.0 - nrm.sqrt() / r_cut).clamp(0.0, 1.0);
            let g = grad.norm_at(i);
            theta * (g * g + 1.0 / r_cut).sqrt()
        })
        .collect();
    Ok(masked_integral(grid, &integrand, mask.as_deref()))
}

/// Smooth approximation in variation: a cutoff at the grid radius followed by
/// distance-adaptive mollification whose radius shrinks near the body
/// boundary so supports stay interior. The base radius starts at epsilon and
/// is halved until the measured L2 distance drops below epsilon.
pub fn meyers_serrin_approximate(
    u: &ScalarField,
    epsilon: f64,
    body: Option<&ConvexBody>,
) -> Result<ScalarField> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::Config(format!("epsilon = {epsilon}")));
    }
    let grid = u.grid().clone();
    let h = grid.spacing();
    let mask = combined_mask(u, body)?;

    // cutoff theta with unit ramp just inside the box
    let r_hat = grid.half_width();
    let mut base = u.values().to_vec();
    for (i, v) in base.iter_mut().enumerate() {
        let p = grid.node(i);
        let mut nrm = 0.0;
        for x in p.iter().take(grid.dim()) {
            nrm += x * x;
        }
        *v *= (r_hat - nrm.sqrt()).clamp(0.0, 1.0);
    }

    let mut radius = epsilon;
    loop {
        if radius < h {
            return Err(Error::MollifierBelowGrid { radius, h });
        }
        let smoothed = mollify_adaptive(&grid, &base, radius, body);
        // measured L2(body, gamma) distance to the original field
        let mut dist2 = 0.0;
        for i in 0..grid.len() {
            if mask.as_deref().map_or(true, |m| m[i]) {
                let d = u.values()[i] - smoothed[i];
                dist2 += d * d * grid.weights()[i];
            }
        }
        if dist2.sqrt() < epsilon {
            let mut out = ScalarField::from_values(&grid, smoothed)?;
            if let Some(m) = u.mask() {
                out = out.with_mask(Arc::new(m.to_vec()));
            }
            return Ok(out);
        }
        radius *= 0.5;
    }
}

fn mollify_adaptive(
    grid: &Arc<GaussianGrid>,
    values: &[f64],
    radius: f64,
    body: Option<&ConvexBody>,
) -> Vec<f64> {
    let h = grid.spacing();
    let n = grid.nodes_per_axis() as isize;
    let d = grid.dim();
    let mut out = values.to_vec();
    for flat in 0..grid.len() {
        let p = grid.node(flat);
        let eta = match body {
            Some(b) => {
                let m = b.minkowski(&p);
                if m > 1.0 {
                    continue; // leave exterior nodes untouched
                }
                radius.min(0.5 * b.inradius() * (1.0 - m))
            }
            None => radius,
        };
        if eta < h {
            continue; // kernel collapses to the node itself
        }
        let reach = (eta / h).floor() as isize;
        let idx = grid.multi_index(flat);
        let mut acc = 0.0;
        let mut wsum = 0.0;
        let mut offs = vec![-reach; d];
        loop {
            let mut probe = [0usize; 3];
            let mut ok = true;
            let mut q = 0.0;
            for k in 0..d {
                let j = idx[k] as isize + offs[k];
                if j < 0 || j >= n {
                    ok = false;
                    break;
                }
                probe[k] = j as usize;
                let z = offs[k] as f64 * h / eta;
                q += z * z;
            }
            if ok && q < 1.0 {
                let w = (1.0 / (q - 1.0)).exp();
                acc += w * values[grid.flat_index(probe)];
                wsum += w;
            }
            let mut carry = true;
            for o in offs.iter_mut() {
                if carry {
                    *o += 1;
                    if *o > reach {
                        *o = -reach;
                    } else {
                        carry = false;
                    }
                }
            }
            if carry {
                break;
            }
        }
        if wsum > 0.0 {
            out[flat] = acc / wsum;
        }
    }
    out
}

/// Canonical cylindrical approximation E_m u: the Gaussian average over the
/// last dim - m coordinates, normalized so that E_m is an exact projection.
pub fn conditional_expectation(u: &ScalarField, m: usize) -> Result<ScalarField> {
    let grid = u.grid().clone();
    let d = grid.dim();
    if m == 0 || m >= d {
        return Err(Error::InvalidProjection { m, dim: d });
    }
    if u.mask().is_some() {
        return Err(Error::MaskedField);
    }
    let npa = grid.nodes_per_axis();
    // normalized 1-d weights
    let axis_w: Vec<f64> = (0..npa)
        .map(|i| gaussian_density(&[grid.axis_coord(i), 0.0, 0.0], 1) * grid.spacing())
        .collect();
    let axis_sum: f64 = axis_w.iter().sum();

    let mut vals = u.values().to_vec();
    for axis in m..d {
        let stride = match axis {
            0 => 1,
            1 => npa,
            _ => npa * npa,
        };
        // iterate over all lines along `axis`
        let mut visited = vec![false; grid.len()];
        for start in 0..grid.len() {
            if visited[start] || grid.multi_index(start)[axis] != 0 {
                continue;
            }
            // constant lines average to themselves, keeping E_m idempotent
            let first = vals[start];
            let mut constant = true;
            let mut acc = 0.0;
            for j in 0..npa {
                let v = vals[start + j * stride];
                if v != first {
                    constant = false;
                }
                acc += v * axis_w[j];
            }
            let avg = if constant { first } else { acc / axis_sum };
            for j in 0..npa {
                let at = start + j * stride;
                vals[at] = avg;
                visited[at] = true;
            }
        }
    }
    ScalarField::from_values(&grid, vals)
}

/// ||u||_BV = ||u||_{L^1(body,gamma)} + |D_gamma u|(body) with the supplied
/// variation estimate.
pub fn bv_norm(
    u: &ScalarField,
    body: Option<&ConvexBody>,
    variation: &VariationEstimate,
) -> Result<f64> {
    let abs = ScalarField::from_values(
        u.grid(),
        u.values().iter().map(|v| v.abs()).collect(),
    )?;
    let abs = match u.mask() {
        Some(m) => abs.with_mask(Arc::new(m.to_vec())),
        None => abs,
    };
    Ok(gaussian_integrate(&abs, body)? + variation.value)
}

/// Initial data for semigroup experiments, all varying along the first
/// coordinate: sign(x1), a unit step 1_{x1 > a}, x1 itself, a quadratic
/// polynomial in x1, or values loaded from a field CSV.
#[derive(Clone)]
pub enum InitialDatum {
    Sign,
    Step(f64),
    Linear,
    Poly([f64; 3]),
    FromFile(PathBuf),
    Field(ScalarField),
}

impl InitialDatum {
    pub fn parse(spec: &str) -> Result<Self> {
        if spec == "sign" {
            return Ok(InitialDatum::Sign);
        }
        if spec == "linear" {
            return Ok(InitialDatum::Linear);
        }
        if let Some(rest) = spec.strip_prefix("step:") {
            let a: f64 = rest
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad step location '{rest}'")))?;
            return Ok(InitialDatum::Step(a));
        }
        if let Some(rest) = spec.strip_prefix("poly:") {
            let parts: Vec<&str> = rest.split(',').collect();
            if parts.is_empty() || parts.len() > 3 {
                return Err(Error::Config(format!("bad poly spec '{spec}'")));
            }
            let mut c = [0.0; 3];
            for (k, p) in parts.iter().enumerate() {
                c[k] = p
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("bad poly coefficient '{p}'")))?;
            }
            return Ok(InitialDatum::Poly(c));
        }
        if let Some(rest) = spec.strip_prefix("file:") {
            return Ok(InitialDatum::FromFile(PathBuf::from(rest)));
        }
        Err(Error::Config(format!("unknown initial datum '{spec}'")))
    }

    pub fn describe(&self) -> String {
        match self {
            InitialDatum::Sign => "sign".into(),
            InitialDatum::Step(a) => format!("step:{a}"),
            InitialDatum::Linear => "linear".into(),
            InitialDatum::Poly(c) => format!("poly:{},{},{}", c[0], c[1], c[2]),
            InitialDatum::FromFile(p) => format!("file:{}", p.display()),
            InitialDatum::Field(_) => "field".into(),
        }
    }

    pub fn sample(&self, grid: &Arc<GaussianGrid>) -> Result<ScalarField> {
        match self {
            InitialDatum::Sign => Ok(ScalarField::from_fn(grid, |p| p[0].signum())),
            InitialDatum::Step(a) => {
                let a = *a;
                Ok(ScalarField::from_fn(grid, |p| {
                    if p[0] > a {
                        1.0
                    } else {
                        0.0
                    }
                }))
            }
            InitialDatum::Linear => Ok(ScalarField::from_fn(grid, |p| p[0])),
            InitialDatum::Poly(c) => {
                let c = *c;
                Ok(ScalarField::from_fn(grid, |p| {
                    c[0] + c[1] * p[0] + c[2] * p[0] * p[0]
                }))
            }
            InitialDatum::FromFile(path) => ScalarField::read_csv(grid, path),
            InitialDatum::Field(f) => {
                if !f.grid().same_grid(grid) {
                    return Err(Error::DimensionMismatch(
                        "initial field lives on a different grid".into(),
                    ));
                }
                Ok(f.clone())
            }
        }
    }

    pub fn is_jump(&self) -> bool {
        matches!(self, InitialDatum::Sign | InitialDatum::Step(_))
    }

    fn jump_offset_and_height(&self) -> Option<(f64, f64)> {
        match self {
            InitialDatum::Sign => Some((0.0, 2.0)),
            InitialDatum::Step(a) => Some((*a, 1.0)),
            _ => None,
        }
    }

    /// Jump set of the datum clipped to the body: a point in d = 1, the chord
    /// of the hyperplane x1 = a in d = 2.
    pub fn jump_set(&self, body: &ConvexBody) -> Result<Option<JumpSet>> {
        let Some((a, height)) = self.jump_offset_and_height() else {
            return Ok(None);
        };
        match body.dim() {
            1 => Ok(Some(JumpSet::Points(vec![(a, height)]))),
            2 => {
                let (lo, hi) = vertical_section(body, a)?;
                Ok(Some(JumpSet::Polyline {
                    vertices: vec![[a, lo], [a, hi]],
                    heights: vec![height],
                }))
            }
            d => Err(Error::UnsupportedDimension {
                dim: d,
                what: "jump reference for hyperplane data".into(),
            }),
        }
    }

    /// Reference variation: the exact jump form for jump data, the Sobolev
    /// form of the sampled field otherwise.
    pub fn reference_variation(
        &self,
        grid: &Arc<GaussianGrid>,
        body: &ConvexBody,
    ) -> Result<VariationEstimate> {
        match self.jump_set(body)? {
            Some(js) => jump_variation(&js, body),
            None => sobolev_variation(&self.sample(grid)?, Some(body)),
        }
    }

    /// Distance from the jump to the body boundary (d = 1 only); used by the
    /// hypothesis guard that the jump must not charge the boundary.
    pub fn jump_boundary_distance(&self, body: &ConvexBody) -> Result<Option<f64>> {
        let Some((a, _)) = self.jump_offset_and_height() else {
            return Ok(None);
        };
        if body.dim() != 1 {
            return Ok(None);
        }
        let plus = body.boundary_point_along(&[1.0, 0.0, 0.0])?;
        let minus = body.boundary_point_along(&[-1.0, 0.0, 0.0])?;
        Ok(Some((plus[0] - a).abs().min((minus[0] - a).abs())))
    }
}

/// Endpoints of the section { s : (a, s) in body } of a 2-d convex body,
/// located by bisection along the vertical line.
fn vertical_section(body: &ConvexBody, a: f64) -> Result<(f64, f64)> {
    // find an interior seed on the line
    let mut seed = None;
    let c = body.center()[1];
    for k in 0..257 {
        let s = c + (k as f64 - 128.0) / 16.0;
        if body.strictly_inside(&[a, s, 0.0]) {
            seed = Some(s);
            break;
        }
    }
    let Some(s0) = seed else {
        return Err(Error::InterfaceOutsideBody([a, c, 0.0]));
    };
    let escape = |dir: f64| -> Result<f64> {
        let mut lo = s0;
        let mut step = 0.25;
        let mut guard = 0;
        while body.contains(&[a, lo + dir * step, 0.0]) {
            lo += dir * step;
            step *= 2.0;
            guard += 1;
            if guard > 60 {
                return Err(Error::UnboundedRay);
            }
        }
        let mut hi = lo + dir * step;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if body.contains(&[a, mid, 0.0]) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    };
    let hi = escape(1.0)?;
    let lo = escape(-1.0)?;
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GaussianGrid;
    use crate::special;

    const TWO_G0: f64 = 0.7978845608028654; // 2 / sqrt(2 pi)

    #[test]
    fn divergence_examples() {
        let g = GaussianGrid::new(1, 8.0, 0.0625).unwrap();
        // constant field e1: div = -y
        let phi = VectorField::from_fn(&g, |_| [1.0, 0.0, 0.0]);
        let div = gaussian_divergence(&phi);
        for i in 0..g.len() {
            let y = g.node(i)[0];
            assert!((div.values()[i] + y).abs() < 1e-10, "at y = {y}");
        }
        // phi = y e1: div = 1 - y^2 (exact for the second-order stencils)
        let phi = VectorField::from_fn(&g, |p| [p[0], 0.0, 0.0]);
        let div = gaussian_divergence(&phi);
        for i in 0..g.len() {
            let y = g.node(i)[0];
            assert!((div.values()[i] - (1.0 - y * y)).abs() < 1e-9, "at y = {y}");
        }
        // zero field
        let phi = VectorField::zeros(&g);
        let div = gaussian_divergence(&phi);
        assert!(div.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn sobolev_variation_examples() {
        let g = GaussianGrid::new(1, 8.0, 1.0 / 256.0).unwrap();
        let interval = ConvexBody::interval(-1.0, 1.0).unwrap();
        let u = ScalarField::from_fn(&g, |p| p[0]);
        let v = sobolev_variation(&u, Some(&interval)).unwrap();
        let want = special::gaussian_interval_mass(-1.0, 1.0);
        assert!(
            (v.value - want).abs() < 5.0 * g.spacing(),
            "variation {} vs {want}",
            v.value
        );

        let c = ScalarField::constant(&g, 4.0);
        assert!(sobolev_variation(&c, Some(&interval)).unwrap().value < 1e-14);

        let whole = sobolev_variation(&u, None).unwrap();
        assert!((whole.value - 1.0).abs() < 1e-10, "whole-line {}", whole.value);
    }

    #[test]
    fn jump_variation_examples() {
        let interval = ConvexBody::interval(-1.0, 1.0).unwrap();
        let one = jump_variation(&JumpSet::Points(vec![(0.0, 1.0)]), &interval).unwrap();
        assert!((one.value - 0.3989423).abs() < 1e-7);
        let sign = jump_variation(&JumpSet::Points(vec![(0.0, 2.0)]), &interval).unwrap();
        assert!((sign.value - TWO_G0).abs() < 1e-12);

        let small = ConvexBody::interval(-1.0, 0.25).unwrap();
        assert!(matches!(
            jump_variation(&JumpSet::Points(vec![(0.5, 1.0)]), &small),
            Err(Error::InterfaceOutsideBody(_))
        ));
    }

    #[test]
    fn chord_jump_matches_1d_quadrature() {
        // variation of sign(x1) on the unit disk: 2 int_{-1}^{1} G_2(0, s) ds
        let disk = ConvexBody::ball(2, [0.0; 3], 1.0).unwrap();
        let js = InitialDatum::Sign.jump_set(&disk).unwrap().unwrap();
        let v = jump_variation(&js, &disk).unwrap();
        let want = 2.0
            * gaussian_density(&[0.0, 0.0, 0.0], 1)
            * special::gaussian_interval_mass(-1.0, 1.0);
        assert!((v.value - want).abs() < 1e-5, "{} vs {want}", v.value);
    }

    #[test]
    fn dual_lower_bound_examples() {
        let g = GaussianGrid::new(1, 8.0, 1.0 / 256.0).unwrap();
        let interval = ConvexBody::interval(-1.0, 1.0).unwrap();
        let u = ScalarField::from_fn(&g, |p| p[0].signum());

        // sweep over bump widths; the best lower bound approaches 2 G_1(0)
        let mut phis = Vec::new();
        for width in [0.3, 0.5, 0.8] {
            phis.push(bump_test_field(&g, Some(&interval), &[0.0; 3], width, 0, -1.0));
            phis.push(bump_test_field(&g, Some(&interval), &[0.0; 3], width, 0, 1.0));
        }
        let dual = dual_variation_lower_bound(&u, Some(&interval), &phis).unwrap();
        assert!(
            dual.value >= 0.75 && dual.value <= TWO_G0 + 1e-6,
            "dual bound {}",
            dual.value
        );

        // constants: all admissible phi give ~0; the max over +-pairs is >= 0
        let c = ScalarField::constant(&g, 2.0);
        let dual_c = dual_variation_lower_bound(&c, Some(&interval), &phis).unwrap();
        assert!(dual_c.value.abs() < 1e-6, "constant dual {}", dual_c.value);

        // an inadmissible field is rejected
        let bad = VectorField::from_fn(&g, |_| [1.0, 0.0, 0.0]);
        assert!(dual_variation_lower_bound(&u, Some(&interval), &[bad]).is_err());

        // duality sanity on smooth data: the certified bound stays below the
        // Sobolev value up to quadrature
        let smooth = ScalarField::from_fn(&g, |p| (1.7 * p[0]).sin() + 0.4 * p[0]);
        let dual_s = dual_variation_lower_bound(&smooth, Some(&interval), &phis).unwrap();
        let sob = sobolev_variation(&smooth, Some(&interval)).unwrap();
        assert!(
            dual_s.value <= sob.value + 1e-6,
            "dual {} above sobolev {}",
            dual_s.value,
            sob.value
        );
    }

    #[test]
    fn regularized_variation_examples() {
        let g = GaussianGrid::new(1, 8.0, 1.0 / 256.0).unwrap();
        let interval = ConvexBody::interval(-1.0, 1.0).unwrap();
        // constant u: value = sqrt(1/R) * theta-weighted mass <= body mass
        let c = ScalarField::constant(&g, 1.0);
        let v = regularized_variation(&c, 1.0, Some(&interval)).unwrap();
        let mass = gaussian_integrate(&c, Some(&interval)).unwrap();
        assert!(v <= mass + 1e-12 && v > 0.0, "v = {v}, mass = {mass}");

        // R -> infinity converges monotonically to the Sobolev variation
        let u = ScalarField::from_fn(&g, |p| (p[0] * 1.2).sin());
        let sob = sobolev_variation(&u, Some(&interval)).unwrap().value;
        let mut prev = f64::INFINITY;
        for r in [1.0, 10.0, 100.0, 1000.0] {
            let v = regularized_variation(&u, r, Some(&interval)).unwrap();
            assert!(v <= prev + 1e-12, "not decreasing at R = {r}");
            prev = v;
        }
        assert!((prev - sob).abs() < 2e-2, "limit {prev} vs sobolev {sob}");

        // |grad u| = 1: closed form sqrt(1 + 1/R) times the theta-weighted mass
        let lin = ScalarField::from_fn(&g, |p| p[0]);
        let v = regularized_variation(&lin, 100.0, None).unwrap();
        assert!((v - 1.01_f64.sqrt()).abs() < 1e-2, "got {v}");

        assert!(regularized_variation(&c, -1.0, None).is_err());
    }

    #[test]
    fn meyers_serrin_examples() {
        let g = GaussianGrid::new(1, 8.0, 1.0 / 1024.0).unwrap();
        let interval = ConvexBody::interval(-1.0, 1.0).unwrap();

        // constants stay constant
        let c = ScalarField::constant(&g, 2.0);
        let vc = meyers_serrin_approximate(&c, 0.1, Some(&interval)).unwrap();
        for i in 0..g.len() {
            let p = g.node(i)[0].abs();
            if p < 6.0 {
                assert!((vc.values()[i] - 2.0).abs() < 1e-12);
            }
        }
        assert!(
            sobolev_variation(&vc, Some(&interval)).unwrap().value < 1e-10,
            "constant gained variation"
        );

        // sign: both lemma bounds hold with the measured cutoff radius
        let u = ScalarField::from_fn(&g, |p| p[0].signum());
        for eps in [0.1, 0.05] {
            let v = meyers_serrin_approximate(&u, eps, Some(&interval)).unwrap();
            let mut dist2 = 0.0;
            for i in 0..g.len() {
                if interval.contains(&g.node(i)) {
                    let d = u.values()[i] - v.values()[i];
                    dist2 += d * d * g.weights()[i];
                }
            }
            assert!(dist2.sqrt() < eps, "L2 distance {} >= {eps}", dist2.sqrt());
            let drift =
                (sobolev_variation(&v, Some(&interval)).unwrap().value - TWO_G0).abs();
            let r_hat = g.half_width();
            let factor = (eps * r_hat + eps * eps / 2.0).exp();
            assert!(
                drift < eps * factor,
                "variation drift {drift} vs bound {}",
                eps * factor
            );
        }

        // epsilon below the grid scale is rejected
        assert!(matches!(
            meyers_serrin_approximate(&u, 1e-5, Some(&interval)),
            Err(Error::MollifierBelowGrid { .. })
        ));
    }

    #[test]
    fn conditional_expectation_examples() {
        let g = GaussianGrid::new(2, 6.0, 0.125).unwrap();
        // already cylindrical: unchanged
        let u = ScalarField::from_fn(&g, |p| (p[0] * 0.7).sin());
        let e = conditional_expectation(&u, 1).unwrap();
        for i in 0..g.len() {
            assert!((e.values()[i] - u.values()[i]).abs() < 1e-12);
        }
        // x1 + x2 -> x1
        let u = ScalarField::from_fn(&g, |p| p[0] + p[1]);
        let e = conditional_expectation(&u, 1).unwrap();
        for i in 0..g.len() {
            let x1 = g.node(i)[0];
            assert!((e.values()[i] - x1).abs() < 1e-8, "x1+x2 at {x1}");
        }
        // x1 x2^2 -> x1 (second moment 1 up to the truncated tail)
        let u = ScalarField::from_fn(&g, |p| p[0] * p[1] * p[1]);
        let e = conditional_expectation(&u, 1).unwrap();
        for i in 0..g.len() {
            let x1 = g.node(i)[0];
            assert!(
                (e.values()[i] - x1).abs() < 1e-5 * (1.0 + x1.abs()),
                "x1 x2^2 at {x1}: {}",
                e.values()[i]
            );
        }
        // exact projection
        let u = ScalarField::from_fn(&g, |p| p[0] * p[1] + (p[1] * 2.0).cos());
        let e1 = conditional_expectation(&u, 1).unwrap();
        let e2 = conditional_expectation(&e1, 1).unwrap();
        for i in 0..g.len() {
            assert_eq!(e1.values()[i], e2.values()[i], "projection not exact");
        }
        assert!(conditional_expectation(&u, 2).is_err());
    }

    #[test]
    fn initial_datum_parse_and_file_round_trip() {
        let g = GaussianGrid::new(1, 4.0, 0.5).unwrap();
        assert!(InitialDatum::parse("sign").unwrap().is_jump());
        assert!(InitialDatum::parse("step:0.3").unwrap().is_jump());
        assert!(!InitialDatum::parse("linear").unwrap().is_jump());
        assert!(InitialDatum::parse("poly:1,2,3").is_ok());
        assert!(InitialDatum::parse("gibberish").is_err());

        let dir = std::env::temp_dir().join("oubv_datum_file_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("u0.csv");
        let original = ScalarField::from_fn(&g, |p| p[0] * 0.5 + 1.0);
        original.write_csv(&path).unwrap();
        let datum = InitialDatum::parse(&format!("file:{}", path.display())).unwrap();
        let loaded = datum.sample(&g).unwrap();
        for i in 0..g.len() {
            assert!((loaded.values()[i] - original.values()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn bv_norm_examples() {
        let g = GaussianGrid::new(1, 8.0, 1.0 / 512.0).unwrap();
        let interval = ConvexBody::interval(-1.0, 1.0).unwrap();

        let one = ScalarField::constant(&g, 1.0);
        let var = sobolev_variation(&one, None).unwrap();
        let n = bv_norm(&one, None, &var).unwrap();
        assert!((n - 1.0).abs() < 1e-10, "norm of 1 is {n}");

        let u = ScalarField::from_fn(&g, |p| p[0].signum());
        let var = jump_variation(&JumpSet::Points(vec![(0.0, 2.0)]), &interval).unwrap();
        let n = bv_norm(&u, Some(&interval), &var).unwrap();
        let want = special::gaussian_interval_mass(-1.0, 1.0) + TWO_G0;
        assert!((n - want).abs() < 5e-3, "sign norm {n} vs {want}");

        let zero = ScalarField::constant(&g, 0.0);
        let var = sobolev_variation(&zero, None).unwrap();
        assert!(bv_norm(&zero, None, &var).unwrap() < 1e-14);
    }

    #[test]
    fn integration_by_parts_residual_is_small() {
        let g = GaussianGrid::new(1, 8.0, 1.0 / 128.0).unwrap();
        let u = ScalarField::from_fn(&g, |p| (p[0] * 0.9).sin() + 0.1 * p[0]);
        let phi = bump_test_field(&g, None, &[0.0; 3], 3.0, 0, 1.0);
        let div = gaussian_divergence(&phi);
        let mut lhs = 0.0;
        for i in 0..g.len() {
            lhs += u.values()[i] * div.values()[i] * g.weights()[i];
        }
        let grad = gradient(&u, None);
        let mut rhs = 0.0;
        for i in 0..g.len() {
            rhs += grad.component(0)[i] * phi.component(0)[i] * g.weights()[i];
        }
        assert!((lhs + rhs).abs() < g.spacing(), "ibp residual {}", lhs + rhs);
    }
}
