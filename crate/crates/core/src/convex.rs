//! Convex bodies and their Minkowski gauges.
//!
//! A body is either an intersection of half-spaces a_j . x <= b_j, a
//! Euclidean ball, or a smoothed level set {m_eta <= 1} where m_eta is the
//! mollified gauge of the delta-enlarged base body. The gauge is always taken
//! about a stored interior center x0:
//!
//! ```text
//! m(x) = inf { lambda >= 0 : x - x0 in lambda (C - x0) }
//! ```
//!
//! For half-space bodies this has the closed form
//! max_j (a_j . (x - x0))^+ / (b_j - a_j . x0); for balls it is
//! |x - x0| / radius. Smoothing enlarges the base exactly (offsets b_j + delta,
//! radius + delta) and mollifies the enlarged gauge with a fixed bump kernel.

use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{GaussianGrid, Point};

/// Half-space { x : normal . x <= offset } with a unit normal.
#[derive(Debug, Clone)]
pub struct Halfspace {
    pub normal: Point,
    pub offset: f64,
}

impl Halfspace {
    pub fn new(normal: Point, offset: f64) -> Self {
        Halfspace { normal, offset }
    }
}

/// Quadrature samples of the standard bump rho(u) = c exp(1/(|u|^2 - 1)) on
/// |u| < 1, on a 9^d midpoint lattice, with weights normalized to sum 1 so
/// the discrete mollification is a convex combination.
#[derive(Debug, Clone)]
struct MollifierKernel {
    offsets: Vec<Point>,
    weights: Vec<f64>,
    /// Discrete first absolute moment sum_q w_q |u_q| < 1.
    mean_abs: f64,
}

const MOLLIFIER_POINTS_PER_AXIS: usize = 9;

impl MollifierKernel {
    fn new(dim: usize) -> Self {
        let n = MOLLIFIER_POINTS_PER_AXIS;
        let step = 2.0 / n as f64;
        let axis: Vec<f64> = (0..n).map(|k| -1.0 + (k as f64 + 0.5) * step).collect();
        let mut offsets = Vec::new();
        let mut weights = Vec::new();
        let count = n.pow(dim as u32);
        for flat in 0..count {
            let mut idx = flat;
            let mut u = [0.0f64; 3];
            for coord in u.iter_mut().take(dim) {
                *coord = axis[idx % n];
                idx /= n;
            }
            let q: f64 = u.iter().take(dim).map(|v| v * v).sum();
            if q >= 1.0 {
                continue;
            }
            let rho = (1.0 / (q - 1.0)).exp();
            offsets.push(u);
            weights.push(rho);
        }
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        let mean_abs = offsets
            .iter()
            .zip(&weights)
            .map(|(u, w)| {
                let q: f64 = u.iter().take(dim).map(|v| v * v).sum();
                w * q.sqrt()
            })
            .sum();
        MollifierKernel {
            offsets,
            weights,
            mean_abs,
        }
    }
}

#[derive(Debug, Clone)]
struct SmoothLevelSet {
    base: Box<ConvexBody>,
    /// Enlargement of the base body before mollification.
    delta: f64,
    /// Mollification radius (equal to delta unless overridden).
    eta: f64,
    kernel: Arc<MollifierKernel>,
}

#[derive(Debug, Clone)]
enum BodyRepr {
    Halfspaces(Vec<Halfspace>),
    Ball { radius: f64 },
    Smooth(SmoothLevelSet),
}

#[derive(Debug, Clone)]
pub struct ConvexBody {
    dim: usize,
    center: Point,
    inradius: f64,
    repr: BodyRepr,
}

fn dot(a: &Point, b: &Point, dim: usize) -> f64 {
    let mut s = 0.0;
    for k in 0..dim {
        s += a[k] * b[k];
    }
    s
}

fn norm(a: &Point, dim: usize) -> f64 {
    dot(a, a, dim).sqrt()
}

impl ConvexBody {
    pub fn halfspace_intersection(
        dim: usize,
        faces: Vec<Halfspace>,
        center: Point,
    ) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidBody(format!("dim = {dim} not in 1..=3")));
        }
        if faces.is_empty() {
            return Err(Error::InvalidBody("no half-spaces given".into()));
        }
        let mut normalized = Vec::with_capacity(faces.len());
        let mut inradius = f64::INFINITY;
        for f in faces {
            let len = norm(&f.normal, dim);
            if !(len.is_finite() && len > 1e-14) {
                return Err(Error::InvalidBody("half-space normal has zero length".into()));
            }
            let mut a = [0.0; 3];
            for k in 0..dim {
                a[k] = f.normal[k] / len;
            }
            let b = f.offset / len;
            let margin = b - dot(&a, &center, dim);
            if margin <= 0.0 {
                return Err(Error::InvalidBody(format!(
                    "center is not strictly interior (face margin {margin})"
                )));
            }
            inradius = inradius.min(margin);
            normalized.push(Halfspace::new(a, b));
        }
        Ok(ConvexBody {
            dim,
            center,
            inradius,
            repr: BodyRepr::Halfspaces(normalized),
        })
    }

    pub fn ball(dim: usize, center: Point, radius: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidBody(format!("dim = {dim} not in 1..=3")));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidBody(format!("ball radius {radius}")));
        }
        Ok(ConvexBody {
            dim,
            center,
            inradius: radius,
            repr: BodyRepr::Ball { radius },
        })
    }

    /// The interval (a, b) as a 1-d half-space body.
    pub fn interval(a: f64, b: f64) -> Result<Self> {
        if !(a < b) {
            return Err(Error::InvalidBody(format!("interval ({a}, {b})")));
        }
        ConvexBody::halfspace_intersection(
            1,
            vec![
                Halfspace::new([1.0, 0.0, 0.0], b),
                Halfspace::new([-1.0, 0.0, 0.0], -a),
            ],
            [0.5 * (a + b), 0.0, 0.0],
        )
    }

    /// Axis-aligned box with the given corners.
    pub fn box_body(dim: usize, lo: Point, hi: Point) -> Result<Self> {
        let mut faces = Vec::new();
        let mut center = [0.0; 3];
        for k in 0..dim {
            if !(lo[k] < hi[k]) {
                return Err(Error::InvalidBody(format!(
                    "box has lo {} >= hi {} along axis {k}",
                    lo[k], hi[k]
                )));
            }
            let mut plus = [0.0; 3];
            plus[k] = 1.0;
            faces.push(Halfspace::new(plus, hi[k]));
            let mut minus = [0.0; 3];
            minus[k] = -1.0;
            faces.push(Halfspace::new(minus, -lo[k]));
            center[k] = 0.5 * (lo[k] + hi[k]);
        }
        ConvexBody::halfspace_intersection(dim, faces, center)
    }

    /// Cube {|x_k| <= s} about the origin.
    pub fn cube(dim: usize, s: f64) -> Result<Self> {
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        for k in 0..dim {
            lo[k] = -s;
            hi[k] = s;
        }
        ConvexBody::box_body(dim, lo, hi)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    /// Radius of the largest ball about the center certified inside the body.
    pub fn inradius(&self) -> f64 {
        self.inradius
    }

    pub fn is_smooth(&self) -> bool {
        matches!(self.repr, BodyRepr::Smooth(_) | BodyRepr::Ball { .. })
    }

    pub fn halfspaces(&self) -> Option<&[Halfspace]> {
        match &self.repr {
            BodyRepr::Halfspaces(f) => Some(f),
            _ => None,
        }
    }

    pub fn ball_radius(&self) -> Option<f64> {
        match &self.repr {
            BodyRepr::Ball { radius } => Some(*radius),
            _ => None,
        }
    }

    /// Gauge of the delta-enlargement of a half-space or ball body. For
    /// polyhedra the enlargement offsets every b_j by delta, which
    /// over-approximates the Euclidean enlargement near corners; the
    /// containment checks absorb that slack.
    fn enlarged_gauge(&self, delta: f64, x: &Point) -> f64 {
        match &self.repr {
            BodyRepr::Halfspaces(faces) => {
                let mut m: f64 = 0.0;
                for f in faces {
                    let num = dot(&f.normal, x, self.dim) - dot(&f.normal, &self.center, self.dim);
                    if num > 0.0 {
                        let den = f.offset + delta - dot(&f.normal, &self.center, self.dim);
                        m = m.max(num / den);
                    }
                }
                m
            }
            BodyRepr::Ball { radius } => {
                let mut d = [0.0; 3];
                for k in 0..self.dim {
                    d[k] = x[k] - self.center[k];
                }
                norm(&d, self.dim) / (radius + delta)
            }
            BodyRepr::Smooth(_) => unreachable!("smooth bodies are never re-enlarged"),
        }
    }

    /// Minkowski gauge m(x) about the stored center; m(x) <= 1 iff x lies in
    /// the (closed) body.
    pub fn minkowski(&self, x: &Point) -> f64 {
        match &self.repr {
            BodyRepr::Halfspaces(_) | BodyRepr::Ball { .. } => self.enlarged_gauge(0.0, x),
            BodyRepr::Smooth(s) => {
                let mut acc = 0.0;
                for (u, w) in s.kernel.offsets.iter().zip(&s.kernel.weights) {
                    let mut y = *x;
                    for k in 0..self.dim {
                        y[k] -= s.eta * u[k];
                    }
                    acc += w * s.base.enlarged_gauge(s.delta, &y);
                }
                acc
            }
        }
    }

    /// For smooth bodies: |m_eta(x) - g(x)| <= eta * E|u| / (r + delta) where
    /// g is the enlarged base gauge. Used to skip the kernel sum away from
    /// the boundary band.
    fn smooth_gauge_band(&self) -> Option<(f64, &SmoothLevelSet)> {
        match &self.repr {
            BodyRepr::Smooth(s) => {
                let lip = 1.0 / (s.base.inradius + s.delta);
                Some((s.eta * s.kernel.mean_abs * lip, s))
            }
            _ => None,
        }
    }

    fn gauge_below(&self, x: &Point, level: f64) -> bool {
        if let Some((band, s)) = self.smooth_gauge_band() {
            let g = s.base.enlarged_gauge(s.delta, x);
            if g + band <= level {
                return true;
            }
            if g - band > level {
                return false;
            }
        }
        self.minkowski(x) <= level
    }

    fn gauge_strictly_below(&self, x: &Point, level: f64) -> bool {
        if let Some((band, s)) = self.smooth_gauge_band() {
            let g = s.base.enlarged_gauge(s.delta, x);
            if g + band < level {
                return true;
            }
            if g - band >= level {
                return false;
            }
        }
        self.minkowski(x) < level
    }

    /// Closed membership m(x) <= 1.
    pub fn contains(&self, x: &Point) -> bool {
        self.gauge_below(x, 1.0)
    }

    /// Open membership m(x) < 1.
    pub fn strictly_inside(&self, x: &Point) -> bool {
        self.gauge_strictly_below(x, 1.0)
    }

    /// Smooth convex approximant C_delta = { m_delta <= 1 }: the gauge of the
    /// delta-enlarged body mollified at radius eta = delta. Requires
    /// delta < r/4 and delta E|u| < r/2 against the inradius r.
    pub fn smooth(&self, delta: f64) -> Result<ConvexBody> {
        self.smooth_with(delta, delta)
    }

    pub fn smooth_with(&self, delta: f64, eta: f64) -> Result<ConvexBody> {
        if matches!(self.repr, BodyRepr::Smooth(_)) {
            return Err(Error::InvalidBody(
                "smoothing an already smoothed body is not supported".into(),
            ));
        }
        if !(delta.is_finite() && delta > 0.0 && eta.is_finite() && eta > 0.0) {
            return Err(Error::InvalidBody(format!("smoothing radii {delta}, {eta}")));
        }
        let r = self.inradius;
        if delta >= r / 4.0 {
            return Err(Error::DeltaTooLarge {
                delta,
                limit: r / 4.0,
            });
        }
        let kernel = Arc::new(MollifierKernel::new(self.dim));
        if delta * kernel.mean_abs >= r / 2.0 {
            return Err(Error::DeltaTooLarge {
                delta,
                limit: r / (2.0 * kernel.mean_abs),
            });
        }
        // m_eta(x) <= (|x - x0| + eta E|u|) / (r + delta), so the ball of
        // radius r + delta - eta E|u| about the center is certified inside.
        let inradius = r + delta - eta * kernel.mean_abs;
        Ok(ConvexBody {
            dim: self.dim,
            center: self.center,
            inradius,
            repr: BodyRepr::Smooth(SmoothLevelSet {
                base: Box::new(self.clone()),
                delta,
                eta,
                kernel,
            }),
        })
    }

    /// Outward unit normal at a boundary point, from the gauge gradient by
    /// central differences of step `step`. Half-space bodies return the face
    /// normal and reject points where several faces are active.
    pub fn outward_normal_with_step(&self, x: &Point, step: f64) -> Result<Point> {
        let m = self.minkowski(x);
        if (m - 1.0).abs() > 1e-6 {
            return Err(Error::NotOnBoundary(m));
        }
        match &self.repr {
            BodyRepr::Halfspaces(faces) => {
                let mut ratios = Vec::with_capacity(faces.len());
                for f in faces {
                    let num = dot(&f.normal, x, self.dim) - dot(&f.normal, &self.center, self.dim);
                    let den = f.offset - dot(&f.normal, &self.center, self.dim);
                    ratios.push(num.max(0.0) / den);
                }
                // Ratios move by at most step/r per probe step, so faces
                // within 4 step/r of the max are ambiguous at this step size.
                let tol = 4.0 * step / self.inradius;
                let max = ratios.iter().cloned().fold(f64::MIN, f64::max);
                let active: Vec<usize> = (0..faces.len())
                    .filter(|&j| ratios[j] >= max - tol)
                    .collect();
                if active.len() != 1 {
                    return Err(Error::CornerNormal(active.len()));
                }
                Ok(faces[active[0]].normal)
            }
            BodyRepr::Ball { .. } => {
                let mut d = [0.0; 3];
                for k in 0..self.dim {
                    d[k] = x[k] - self.center[k];
                }
                let len = norm(&d, self.dim);
                if len < 1e-14 {
                    return Err(Error::DegenerateGradient(0.0));
                }
                for v in d.iter_mut().take(self.dim) {
                    *v /= len;
                }
                Ok(d)
            }
            BodyRepr::Smooth(_) => {
                let mut g = [0.0; 3];
                for k in 0..self.dim {
                    let mut xp = *x;
                    let mut xm = *x;
                    xp[k] += step;
                    xm[k] -= step;
                    g[k] = (self.minkowski(&xp) - self.minkowski(&xm)) / (2.0 * step);
                }
                let len = norm(&g, self.dim);
                if len < 1e-7 {
                    return Err(Error::DegenerateGradient(len));
                }
                for v in g.iter_mut().take(self.dim) {
                    *v /= len;
                }
                Ok(g)
            }
        }
    }

    pub fn outward_normal(&self, x: &Point) -> Result<Point> {
        self.outward_normal_with_step(x, 1e-5)
    }

    /// Boundary point along the ray x0 + t dir, located by bisection on the
    /// gauge (monotone crossing of level 1 along rays from the center).
    pub fn boundary_point_along(&self, dir: &Point) -> Result<Point> {
        let len = norm(dir, self.dim);
        if len < 1e-14 {
            return Err(Error::InvalidBody("zero ray direction".into()));
        }
        let mut d = [0.0; 3];
        for k in 0..self.dim {
            d[k] = dir[k] / len;
        }
        let at = |t: f64| -> Point {
            let mut p = self.center;
            for k in 0..self.dim {
                p[k] += t * d[k];
            }
            p
        };
        let mut lo = 0.0;
        let mut hi = self.inradius.max(1e-3);
        let mut guard = 0;
        while self.minkowski(&at(hi)) <= 1.0 {
            lo = hi;
            hi *= 2.0;
            guard += 1;
            if guard > 60 {
                return Err(Error::UnboundedRay);
            }
        }
        // 1e-10 interval tolerance, relative once t is large (near recession
        // directions the crossing can sit at t where absolute 1e-10 is below
        // one ulp)
        let mut iters = 0;
        while hi - lo > 1e-10 * (1.0 + hi) {
            let mid = 0.5 * (lo + hi);
            if self.minkowski(&at(mid)) <= 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            iters += 1;
            if iters > 200 {
                break;
            }
        }
        Ok(at(0.5 * (lo + hi)))
    }

    /// Dense boundary sample clipped to the closed ball of radius `clip`
    /// about the origin. Rays that never exit (recession directions) are
    /// skipped.
    pub fn boundary_samples(&self, rays: usize, clip: f64) -> Result<Vec<Point>> {
        let dirs = ray_directions(self.dim, rays);
        let mut out = Vec::new();
        for d in dirs {
            match self.boundary_point_along(&d) {
                Ok(p) => {
                    if norm(&p, self.dim) <= clip {
                        out.push(p);
                    }
                }
                Err(Error::UnboundedRay) => continue,
                Err(e) => return Err(e),
            }
        }
        if out.is_empty() {
            return Err(Error::NoBoundaryInClip(clip));
        }
        Ok(out)
    }

    /// Node membership mask (closed) over a grid.
    pub fn mask(&self, grid: &GaussianGrid) -> Result<Vec<bool>> {
        self.check_dim(grid)?;
        Ok((0..grid.len())
            .map(|i| self.contains(&grid.node(i)))
            .collect())
    }

    /// Strict interior mask over a grid (used by the Dirichlet form).
    pub fn interior_mask(&self, grid: &GaussianGrid) -> Result<Vec<bool>> {
        self.check_dim(grid)?;
        Ok((0..grid.len())
            .map(|i| self.strictly_inside(&grid.node(i)))
            .collect())
    }

    fn check_dim(&self, grid: &GaussianGrid) -> Result<()> {
        if self.dim != grid.dim() {
            return Err(Error::DimensionMismatch(format!(
                "body dim {} vs grid dim {}",
                self.dim,
                grid.dim()
            )));
        }
        Ok(())
    }
}

fn ray_directions(dim: usize, rays: usize) -> Vec<Point> {
    match dim {
        1 => vec![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]],
        2 => (0..rays)
            .map(|k| {
                let th = 2.0 * std::f64::consts::PI * k as f64 / rays as f64;
                [th.cos(), th.sin(), 0.0]
            })
            .collect(),
        _ => {
            // Fibonacci sphere
            let golden = (1.0 + 5.0_f64.sqrt()) / 2.0;
            (0..rays)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / rays as f64;
                    let r = (1.0 - z * z).sqrt();
                    let th = 2.0 * std::f64::consts::PI * k as f64 / golden;
                    [r * th.cos(), r * th.sin(), z]
                })
                .collect()
        }
    }
}

fn default_rays(dim: usize) -> usize {
    match dim {
        1 => 2,
        2 => 1024,
        _ => 2048,
    }
}

/// Symmetric Hausdorff distance between boundary samples of the two bodies
/// inside the closed ball of radius `clip` about the origin.
pub fn hausdorff_boundary_distance(a: &ConvexBody, b: &ConvexBody, clip: f64) -> Result<f64> {
    hausdorff_boundary_distance_with_rays(a, b, clip, default_rays(a.dim()))
}

pub fn hausdorff_boundary_distance_with_rays(
    a: &ConvexBody,
    b: &ConvexBody,
    clip: f64,
    rays: usize,
) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "bodies of dim {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    if !(clip.is_finite() && clip > 0.0) {
        return Err(Error::InvalidBody(format!("clip radius {clip}")));
    }
    let pa = a.boundary_samples(rays, clip)?;
    let pb = b.boundary_samples(rays, clip)?;
    let dim = a.dim();
    let one_sided = |from: &[Point], to: &[Point]| -> f64 {
        let mut worst = 0.0f64;
        for p in from {
            let mut best = f64::INFINITY;
            for q in to {
                let mut s = 0.0;
                for k in 0..dim {
                    let d = p[k] - q[k];
                    s += d * d;
                }
                best = best.min(s);
            }
            worst = worst.max(best);
        }
        worst.sqrt()
    };
    Ok(one_sided(&pa, &pb).max(one_sided(&pb, &pa)))
}

/// Smoothed intersection of the first `n` half-spaces: the n-th member of the
/// cylindrical approximation chain. Nesting across n follows from a growing
/// constraint prefix and a decreasing delta schedule.
pub fn cylindrical_approximation(
    dim: usize,
    halfspaces: &[Halfspace],
    n: usize,
    delta: f64,
    center: Point,
) -> Result<ConvexBody> {
    if n == 0 || n > halfspaces.len() {
        return Err(Error::InvalidBody(format!(
            "prefix length {n} out of range 1..={}",
            halfspaces.len()
        )));
    }
    let body = ConvexBody::halfspace_intersection(dim, halfspaces[..n].to_vec(), center)?;
    body.smooth(delta)
}

/// Supporting half-planes of the circle of radius `radius`, at `m` equally
/// spaced angles starting from `rotation`. Their intersection is the
/// circumscribed regular m-gon.
pub fn disk_supporting_halfspaces(m: usize, radius: f64, rotation: f64) -> Vec<Halfspace> {
    (0..m)
        .map(|k| {
            let th = rotation + 2.0 * std::f64::consts::PI * k as f64 / m as f64;
            Halfspace::new([th.cos(), th.sin(), 0.0], radius)
        })
        .collect()
}

/// Parses an inline domain spec: `interval:a,b`, `ball:r`, `square:s`;
/// anything else is read as a body description file.
pub fn parse_domain_spec(spec: &str, dim: usize) -> Result<ConvexBody> {
    if let Some(rest) = spec.strip_prefix("interval:") {
        if dim != 1 {
            return Err(Error::DimensionMismatch(format!(
                "interval domain in dimension {dim}"
            )));
        }
        let parts: Vec<&str> = rest.split(',').collect();
        if parts.len() != 2 {
            return Err(Error::Config(format!("bad interval spec '{spec}'")));
        }
        let a: f64 = parts[0]
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad interval endpoint '{}'", parts[0])))?;
        let b: f64 = parts[1]
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad interval endpoint '{}'", parts[1])))?;
        return ConvexBody::interval(a, b);
    }
    if let Some(rest) = spec.strip_prefix("ball:") {
        let r: f64 = rest
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad ball radius '{rest}'")))?;
        return ConvexBody::ball(dim, [0.0; 3], r);
    }
    if let Some(rest) = spec.strip_prefix("square:") {
        let s: f64 = rest
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad square size '{rest}'")))?;
        if dim == 1 {
            return ConvexBody::interval(-s, s);
        }
        return ConvexBody::cube(dim, s);
    }
    read_body_file(Path::new(spec), dim)
}

/// Body description file: `halfspace a1 ... ad b` lines, an optional
/// `ball r` line, an optional `center c1 ... cd` line, and an optional
/// `smooth delta [eta]` line.
pub fn read_body_file(path: &Path, dim: usize) -> Result<ConvexBody> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut faces: Vec<Halfspace> = Vec::new();
    let mut ball: Option<f64> = None;
    let mut center = [0.0; 3];
    let mut smooth: Option<(f64, f64)> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let kind = it.next().unwrap();
        let nums: Vec<f64> = it
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| Error::Config(format!("{}:{}: bad number", path.display(), lineno + 1)))
            })
            .collect::<Result<_>>()?;
        match kind {
            "halfspace" => {
                if nums.len() != dim + 1 {
                    return Err(Error::Config(format!(
                        "{}:{}: halfspace needs {} numbers",
                        path.display(),
                        lineno + 1,
                        dim + 1
                    )));
                }
                let mut a = [0.0; 3];
                a[..dim].copy_from_slice(&nums[..dim]);
                faces.push(Halfspace::new(a, nums[dim]));
            }
            "ball" => {
                if nums.len() != 1 {
                    return Err(Error::Config(format!(
                        "{}:{}: ball needs one radius",
                        path.display(),
                        lineno + 1
                    )));
                }
                ball = Some(nums[0]);
            }
            "center" => {
                if nums.len() != dim {
                    return Err(Error::Config(format!(
                        "{}:{}: center needs {dim} coordinates",
                        path.display(),
                        lineno + 1
                    )));
                }
                center[..dim].copy_from_slice(&nums[..dim]);
            }
            "smooth" => {
                if nums.is_empty() || nums.len() > 2 {
                    return Err(Error::Config(format!(
                        "{}:{}: smooth needs delta [eta]",
                        path.display(),
                        lineno + 1
                    )));
                }
                smooth = Some((nums[0], if nums.len() == 2 { nums[1] } else { nums[0] }));
            }
            other => {
                return Err(Error::Config(format!(
                    "{}:{}: unknown directive '{other}'",
                    path.display(),
                    lineno + 1
                )));
            }
        }
    }
    let body = match (ball, faces.is_empty()) {
        (Some(r), true) => ConvexBody::ball(dim, center, r)?,
        (None, false) => ConvexBody::halfspace_intersection(dim, faces, center)?,
        (Some(_), false) => {
            return Err(Error::Config(format!(
                "{}: give either halfspace lines or a ball line, not both",
                path.display()
            )))
        }
        (None, true) => {
            return Err(Error::Config(format!(
                "{}: no halfspace or ball lines",
                path.display()
            )))
        }
    };
    match smooth {
        Some((delta, eta)) => body.smooth_with(delta, eta),
        None => Ok(body),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn unit_square() -> ConvexBody {
        ConvexBody::cube(2, 1.0).unwrap()
    }

    fn unit_ball2() -> ConvexBody {
        ConvexBody::ball(2, [0.0; 3], 1.0).unwrap()
    }

    #[test]
    fn gauge_examples() {
        let ball = unit_ball2();
        assert!((ball.minkowski(&[2.0, 0.0, 0.0]) - 2.0).abs() < 1e-14);
        assert_eq!(ball.minkowski(ball.center()), 0.0);

        let sq = unit_square();
        assert!((sq.minkowski(&[0.5, 0.25, 0.0]) - 0.5).abs() < 1e-14);
        assert_eq!(sq.minkowski(sq.center()), 0.0);
        // membership agrees with the half-space test on a sample of points
        let mut rng = SplitMix64::new(7);
        for _ in 0..200 {
            let p = [rng.range(-2.0, 2.0), rng.range(-2.0, 2.0), 0.0];
            let direct = p[0].abs() <= 1.0 && p[1].abs() <= 1.0;
            if (sq.minkowski(&p) - 1.0).abs() > 1e-9 {
                assert_eq!(sq.contains(&p), direct, "at {p:?}");
            }
        }
    }

    #[test]
    fn gauge_convexity_homogeneity_lipschitz() {
        let bodies = [
            unit_square(),
            unit_ball2(),
            ConvexBody::halfspace_intersection(
                2,
                disk_supporting_halfspaces(7, 1.0, 0.3),
                [0.1, -0.05, 0.0],
            )
            .unwrap(),
        ];
        let mut rng = SplitMix64::new(11);
        for body in &bodies {
            let r = body.inradius();
            for _ in 0..500 {
                let x = [rng.range(-3.0, 3.0), rng.range(-3.0, 3.0), 0.0];
                let y = [rng.range(-3.0, 3.0), rng.range(-3.0, 3.0), 0.0];
                let lam = rng.next_f64();
                let mut z = [0.0; 3];
                for k in 0..2 {
                    z[k] = lam * x[k] + (1.0 - lam) * y[k];
                }
                let mz = body.minkowski(&z);
                let bound = lam * body.minkowski(&x) + (1.0 - lam) * body.minkowski(&y);
                assert!(mz <= bound + 1e-12, "convexity violated: {mz} > {bound}");
                // Lipschitz with constant 1/r
                let dist =
                    ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt();
                assert!(
                    (body.minkowski(&x) - body.minkowski(&y)).abs() <= dist / r + 1e-12,
                    "lipschitz violated"
                );
                // homogeneity about the center
                let t = rng.range(0.1, 3.0);
                let c = body.center();
                let mut xt = [0.0; 3];
                for k in 0..2 {
                    xt[k] = c[k] + t * (x[k] - c[k]);
                }
                let lhs = body.minkowski(&xt);
                let rhs = t * body.minkowski(&x);
                assert!(
                    (lhs - rhs).abs() <= 1e-12 * (1.0 + rhs),
                    "homogeneity violated: {lhs} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn smooth_body_contains_base_strictly() {
        let sq = unit_square();
        let s = sq.smooth(0.05).unwrap();
        for corner in [
            [1.0, 1.0, 0.0],
            [-1.0, 1.0, 0.0],
            [1.0, -1.0, 0.0],
            [-1.0, -1.0, 0.0],
        ] {
            let m = s.minkowski(&corner);
            assert!(m < 1.0, "corner gauge {m} not strictly below 1");
        }
        // sampled boundary points of the square are strictly interior to C_delta
        let samples = sq.boundary_samples(256, 10.0).unwrap();
        for p in samples {
            assert!(s.minkowski(&p) < 1.0, "boundary point {p:?} not interior");
        }
        // delta = r/2 violates delta < r/4
        assert!(matches!(
            sq.smooth(0.5),
            Err(Error::DeltaTooLarge { .. })
        ));
    }

    #[test]
    fn smooth_gauge_is_convex_and_euler_relation_holds() {
        let s = unit_square().smooth(0.1).unwrap();
        let mut rng = SplitMix64::new(13);
        for _ in 0..200 {
            let x = [rng.range(-2.0, 2.0), rng.range(-2.0, 2.0), 0.0];
            let y = [rng.range(-2.0, 2.0), rng.range(-2.0, 2.0), 0.0];
            let lam = rng.next_f64();
            let mut z = [0.0; 3];
            for k in 0..2 {
                z[k] = lam * x[k] + (1.0 - lam) * y[k];
            }
            let bound = lam * s.minkowski(&x) + (1.0 - lam) * s.minkowski(&y);
            assert!(s.minkowski(&z) <= bound + 1e-10);
        }
        // Euler relation for the positively homogeneous base gauge at smooth
        // boundary points: <grad m, x - x0> = m(x) up to finite differences.
        let ball = unit_ball2();
        for k in 0..8 {
            let th = 0.3 + k as f64;
            let p = ball.boundary_point_along(&[th.cos(), th.sin(), 0.0]).unwrap();
            let step = 1e-5;
            let mut euler = 0.0;
            for a in 0..2 {
                let mut pp = p;
                let mut pm = p;
                pp[a] += step;
                pm[a] -= step;
                euler += (ball.minkowski(&pp) - ball.minkowski(&pm)) / (2.0 * step) * p[a];
            }
            assert!((euler - ball.minkowski(&p)).abs() < 1e-6, "euler {euler}");
        }
    }

    #[test]
    fn outward_normals() {
        let ball = unit_ball2();
        let n = ball.outward_normal(&[1.0, 0.0, 0.0]).unwrap();
        assert!((n[0] - 1.0).abs() < 1e-12 && n[1].abs() < 1e-12);

        let half = ConvexBody::halfspace_intersection(
            2,
            vec![Halfspace::new([1.0, 0.0, 0.0], 1.0)],
            [0.0, 0.0, 0.0],
        )
        .unwrap();
        let n = half.outward_normal(&[1.0, 0.3, 0.0]).unwrap();
        assert!((n[0] - 1.0).abs() < 1e-12 && n[1].abs() < 1e-12);

        let sq = unit_square();
        assert!(matches!(
            sq.outward_normal(&[1.0, 1.0, 0.0]),
            Err(Error::CornerNormal(_))
        ));

        // smoothed square: normals exist everywhere on the boundary and have
        // unit norm to 1e-12
        let s = sq.smooth(0.05).unwrap();
        for k in 0..16 {
            let th = 2.0 * std::f64::consts::PI * k as f64 / 16.0;
            let p = s.boundary_point_along(&[th.cos(), th.sin(), 0.0]).unwrap();
            let n = s.outward_normal(&p).unwrap();
            let len = (n[0] * n[0] + n[1] * n[1]).sqrt();
            assert!((len - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn hausdorff_examples() {
        let b1 = unit_ball2();
        let d0 = hausdorff_boundary_distance_with_rays(&b1, &b1, 3.0, 512).unwrap();
        assert!(d0 < 1e-9, "identical bodies: {d0}");
        let b12 = ConvexBody::ball(2, [0.0; 3], 1.2).unwrap();
        let d = hausdorff_boundary_distance_with_rays(&b1, &b12, 3.0, 512).unwrap();
        assert!((d - 0.2).abs() < 1e-3, "concentric balls: {d}");

        // smoothing stays within the (roughly 2 delta)-enlargement
        let sq = unit_square();
        let delta = 0.05;
        let s = sq.smooth(delta).unwrap();
        let ds = hausdorff_boundary_distance_with_rays(&sq, &s, 10.0, 720).unwrap();
        assert!(
            ds <= delta * 2.0 + 1e-2,
            "smoothing moved the boundary by {ds}"
        );
    }

    #[test]
    fn cylindrical_from_square_faces_is_a_smooth_superset() {
        let faces = vec![
            Halfspace::new([1.0, 0.0, 0.0], 1.0),
            Halfspace::new([-1.0, 0.0, 0.0], 1.0),
            Halfspace::new([0.0, 1.0, 0.0], 1.0),
            Halfspace::new([0.0, -1.0, 0.0], 1.0),
        ];
        let body = cylindrical_approximation(2, &faces, 4, 0.05, [0.0; 3]).unwrap();
        assert!(body.is_smooth());
        for p in unit_square().boundary_samples(128, 10.0).unwrap() {
            assert!(body.strictly_inside(&p), "square point {p:?} not covered");
        }
        assert!(matches!(
            cylindrical_approximation(2, &faces, 5, 0.05, [0.0; 3]),
            Err(Error::InvalidBody(_))
        ));
    }

    #[test]
    fn cylindrical_chain_nests() {
        let faces = disk_supporting_halfspaces(12, 1.0, 0.0);
        let mut prev: Option<ConvexBody> = None;
        for n in 4..=12 {
            let delta = 0.2 / n as f64;
            let body = cylindrical_approximation(2, &faces, n, delta, [0.0; 3]).unwrap();
            // contains the disk
            for k in 0..64 {
                let th = 2.0 * std::f64::consts::PI * k as f64 / 64.0;
                assert!(body.contains(&[th.cos(), th.sin(), 0.0]));
            }
            if let Some(p) = &prev {
                // sampled nesting check: the n-th body sits inside the previous one
                let samples = body.boundary_samples(128, 10.0).unwrap();
                for s in samples {
                    assert!(
                        p.contains(&s),
                        "nesting violated at {s:?} between n-1 and n = {n}"
                    );
                }
            }
            prev = Some(body);
        }
    }

    #[test]
    fn single_halfspace_mass_is_normal_cdf() {
        // gamma of a smoothed half-plane { x1 <= b }: Phi(b + O(delta)).
        let delta = 0.05;
        let faces = vec![Halfspace::new([1.0, 0.0, 0.0], 0.7)];
        let body = cylindrical_approximation(2, &faces, 1, delta, [0.0; 3]).unwrap();
        for y in [-2.0, 0.0, 2.0] {
            assert!(body.contains(&[0.69, y, 0.0]));
            assert!(!body.contains(&[0.85, y, 0.0]));
        }
        let grid = crate::grid::GaussianGrid::new(2, 6.0, 1.0 / 32.0).unwrap();
        let indicator = crate::grid::ScalarField::from_fn(&grid, |p| {
            if body.contains(p) {
                1.0
            } else {
                0.0
            }
        });
        let mass = crate::grid::gaussian_integrate(&indicator, None).unwrap();
        let lo = crate::special::normal_cdf(0.7) - 5.0 * grid.spacing();
        let hi = crate::special::normal_cdf(0.7 + 2.0 * delta) + 5.0 * grid.spacing();
        assert!(mass >= lo && mass <= hi, "mass {mass} outside [{lo}, {hi}]");
    }

    #[test]
    fn smoothing_mass_decreases_on_the_ball() {
        // gamma_2(C_delta \ C) for the unit ball shrinks along delta -> 0
        let ball = unit_ball2();
        let grid = crate::grid::GaussianGrid::new(2, 6.0, 1.0 / 64.0).unwrap();
        let mut prev = f64::INFINITY;
        for delta in [0.2, 0.1, 0.05] {
            let smoothed = ball.smooth(delta).unwrap();
            let indicator = crate::grid::ScalarField::from_fn(&grid, |p| {
                if smoothed.contains(p) && !ball.contains(p) {
                    1.0
                } else {
                    0.0
                }
            });
            let mass = crate::grid::gaussian_integrate(&indicator, None).unwrap();
            assert!(mass < prev, "delta = {delta}: mass {mass} did not shrink");
            assert!(mass > 0.0);
            prev = mass;
        }
    }

    #[test]
    fn body_file_round_trip() {
        let dir = std::env::temp_dir().join("oubv_body_file_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("square.body");
        std::fs::write(
            &path,
            "# unit square, smoothed\nhalfspace 1 0 1\nhalfspace -1 0 1\nhalfspace 0 1 1\nhalfspace 0 -1 1\nsmooth 0.05\n",
        )
        .unwrap();
        let body = read_body_file(&path, 2).unwrap();
        assert!(body.is_smooth());
        assert!(body.contains(&[1.0, 1.0, 0.0]));

        let inline = parse_domain_spec("interval:-1,1", 1).unwrap();
        assert!((inline.minkowski(&[1.0, 0.0, 0.0]) - 1.0).abs() < 1e-14);
        let ball = parse_domain_spec("ball:1.5", 3).unwrap();
        assert_eq!(ball.dim(), 3);
    }
}
