//! Discrete Dirichlet form on the interior nodes of a convex body and the
//! Neumann Ornstein-Uhlenbeck evolution it generates.
//!
//! The form is assembled over grid faces whose two endpoints are both
//! interior,
//!
//! ```text
//! E_h(u, v) = sum_faces w_face (u_+ - u_-)(v_+ - v_-) / h^2,
//! w_face    = G_d(face midpoint) h^d,
//! ```
//!
//! so no term crosses the body boundary and the Neumann condition holds
//! variationally. With M the diagonal of node weights, resolvents solve
//! (lambda M + A) u = M f and the evolution steps M du/dt = -A u by the
//! trapezoidal rule.

use std::sync::Arc;

use crate::convex::ConvexBody;
use crate::error::{Error, Result};
use crate::grid::{gaussian_density, GaussianGrid, ScalarField};

#[derive(Debug, Clone, Copy)]
struct Face {
    a: u32,
    b: u32,
    /// w_face / h^2
    coeff: f64,
}

pub struct OuOperator {
    grid: Arc<GaussianGrid>,
    body: Option<ConvexBody>,
    /// Flat grid indices of interior nodes, ascending.
    interior: Vec<u32>,
    /// Flat-to-compact map; u32::MAX marks exterior nodes.
    compact: Vec<u32>,
    faces: Vec<Face>,
    /// Gaussian node weights restricted to the interior (the mass matrix).
    mass: Vec<f64>,
    /// Diagonal of the form matrix, for Jacobi preconditioning.
    form_diag: Vec<f64>,
    /// In one dimension the interior is a chain and the system matrix is
    /// tridiagonal; sub[i] is the form coefficient of the face (i, i+1).
    tridiag_sub: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SolveInfo {
    pub iterations: usize,
    pub residual: f64,
}

const RESOLVENT_RTOL: f64 = 1e-10;
const EVOLVE_RTOL: f64 = 1e-11;
const CG_MAX_ITERS: usize = 100_000;

impl OuOperator {
    /// Assembles the form on the strict interior { m(node) < 1 } of the body.
    pub fn assemble(grid: &Arc<GaussianGrid>, body: &ConvexBody) -> Result<Self> {
        let mask = body.interior_mask(grid)?;
        Self::assemble_masked(grid, Some(body.clone()), &mask)
    }

    /// Assembles the form over every grid node (whole-box proxy for the
    /// whole space; the box faces carry the Neumann condition).
    pub fn assemble_full(grid: &Arc<GaussianGrid>) -> Result<Self> {
        let mask = vec![true; grid.len()];
        Self::assemble_masked(grid, None, &mask)
    }

    fn assemble_masked(
        grid: &Arc<GaussianGrid>,
        body: Option<ConvexBody>,
        mask: &[bool],
    ) -> Result<Self> {
        let n = grid.len();
        let mut interior = Vec::new();
        let mut compact = vec![u32::MAX; n];
        for (flat, &inside) in mask.iter().enumerate() {
            if inside {
                compact[flat] = interior.len() as u32;
                interior.push(flat as u32);
            }
        }
        if interior.is_empty() {
            return Err(Error::EmptyInterior);
        }

        let npa = grid.nodes_per_axis();
        let h = grid.spacing();
        let hd = h.powi(grid.dim() as i32);
        let mut faces = Vec::new();
        let mut form_diag = vec![0.0; interior.len()];
        for &flat in &interior {
            let flat = flat as usize;
            let idx = grid.multi_index(flat);
            for axis in 0..grid.dim() {
                if idx[axis] + 1 >= npa {
                    continue;
                }
                let stride = match axis {
                    0 => 1,
                    1 => npa,
                    _ => npa * npa,
                };
                let nb = flat + stride;
                if compact[nb] == u32::MAX {
                    continue;
                }
                let mut mid = grid.node(flat);
                mid[axis] += 0.5 * h;
                let coeff = gaussian_density(&mid, grid.dim()) * hd / (h * h);
                let ca = compact[flat];
                let cb = compact[nb];
                faces.push(Face {
                    a: ca,
                    b: cb,
                    coeff,
                });
                form_diag[ca as usize] += coeff;
                form_diag[cb as usize] += coeff;
            }
        }

        // connectivity over form faces
        let components = count_components(interior.len(), &faces);
        if components != 1 {
            return Err(Error::DisconnectedInterior(components));
        }

        let mass: Vec<f64> = interior
            .iter()
            .map(|&flat| grid.weights()[flat as usize])
            .collect();
        let tridiag_sub = if grid.dim() == 1 && faces.len() + 1 == interior.len() {
            let mut sub = vec![0.0; interior.len().saturating_sub(1)];
            let mut chain = true;
            for f in &faces {
                if f.b == f.a + 1 {
                    sub[f.a as usize] = f.coeff;
                } else {
                    chain = false;
                    break;
                }
            }
            chain.then_some(sub)
        } else {
            None
        };
        Ok(OuOperator {
            grid: grid.clone(),
            body,
            interior,
            compact,
            faces,
            mass,
            form_diag,
            tridiag_sub,
        })
    }

    pub fn grid(&self) -> &Arc<GaussianGrid> {
        &self.grid
    }

    pub fn body(&self) -> Option<&ConvexBody> {
        self.body.as_ref()
    }

    pub fn interior_count(&self) -> usize {
        self.interior.len()
    }

    /// Interior mask as a full-grid boolean vector.
    pub fn interior_mask(&self) -> Vec<bool> {
        self.compact.iter().map(|&c| c != u32::MAX).collect()
    }

    /// Restricts a full-grid field to the interior unknowns.
    fn restrict(&self, f: &ScalarField) -> Result<Vec<f64>> {
        if !f.grid().same_grid(&self.grid) {
            return Err(Error::DimensionMismatch(
                "field lives on a different grid".into(),
            ));
        }
        Ok(self
            .interior
            .iter()
            .map(|&flat| f.values()[flat as usize])
            .collect())
    }

    /// Writes interior values back into a full-grid field, zero outside,
    /// carrying the interior mask.
    fn extend(&self, compact: &[f64]) -> ScalarField {
        let mut values = vec![0.0; self.grid.len()];
        for (c, &flat) in self.interior.iter().enumerate() {
            values[flat as usize] = compact[c];
        }
        ScalarField::from_values(&self.grid, values)
            .expect("interior solves stay finite")
            .with_mask(Arc::new(self.interior_mask()))
    }

    fn apply_form(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for f in &self.faces {
            let d = f.coeff * (x[f.a as usize] - x[f.b as usize]);
            out[f.a as usize] += d;
            out[f.b as usize] -= d;
        }
    }

    /// E_h(u, v) for full-grid fields.
    pub fn form_energy(&self, u: &ScalarField, v: &ScalarField) -> Result<f64> {
        let uu = self.restrict(u)?;
        let vv = self.restrict(v)?;
        let mut s = 0.0;
        for f in &self.faces {
            s += f.coeff
                * (uu[f.a as usize] - uu[f.b as usize])
                * (vv[f.a as usize] - vv[f.b as usize]);
        }
        Ok(s)
    }

    /// Total Gaussian mass sum M u over the interior.
    pub fn mass_integral(&self, u: &ScalarField) -> Result<f64> {
        let uu = self.restrict(u)?;
        Ok(uu.iter().zip(&self.mass).map(|(v, m)| v * m).sum())
    }

    /// L2(body, gamma) norm over the interior.
    pub fn l2_norm(&self, u: &ScalarField) -> Result<f64> {
        Ok(self.inner(u, u)?.sqrt())
    }

    /// L2(body, gamma) inner product over the interior.
    pub fn inner(&self, u: &ScalarField, v: &ScalarField) -> Result<f64> {
        let uu = self.restrict(u)?;
        let vv = self.restrict(v)?;
        Ok(uu
            .iter()
            .zip(&vv)
            .zip(&self.mass)
            .map(|((a, b), m)| a * b * m)
            .sum())
    }

    /// Solves (mcoef M + acoef A) x = b: Thomas elimination when the system
    /// is tridiagonal (d = 1), preconditioned CG warm-started at x0 otherwise.
    fn solve_spd(
        &self,
        mcoef: f64,
        acoef: f64,
        b: &[f64],
        x0: Vec<f64>,
        rtol: f64,
        context: &'static str,
    ) -> Result<(Vec<f64>, SolveInfo)> {
        // a warm start that already solves the system exactly (constants
        // under the Neumann flow: A x cancels face by face) comes back
        // unchanged
        {
            let n = b.len();
            let mut r0 = vec![0.0; n];
            self.apply_form(&x0, &mut r0);
            let mut res0 = 0.0;
            for i in 0..n {
                let r = b[i] - (mcoef * self.mass[i] * x0[i] + acoef * r0[i]);
                res0 += r * r;
            }
            if res0 == 0.0 {
                return Ok((
                    x0,
                    SolveInfo {
                        iterations: 0,
                        residual: 0.0,
                    },
                ));
            }
        }
        if let Some(sub) = &self.tridiag_sub {
            let n = b.len();
            let diag: Vec<f64> = (0..n)
                .map(|i| mcoef * self.mass[i] + acoef * self.form_diag[i])
                .collect();
            let off: Vec<f64> = sub.iter().map(|c| -acoef * c).collect();
            let mut scratch = vec![0.0; n];
            let mut x = vec![0.0; n];
            let mut denom = diag[0];
            x[0] = b[0] / denom;
            for i in 1..n {
                scratch[i] = off[i - 1] / denom;
                denom = diag[i] - off[i - 1] * scratch[i];
                x[i] = (b[i] - off[i - 1] * x[i - 1]) / denom;
            }
            for i in (0..n - 1).rev() {
                x[i] -= scratch[i + 1] * x[i + 1];
            }
            // true residual for the diagnostics
            let mut res = 0.0;
            for i in 0..n {
                let mut ax = diag[i] * x[i];
                if i > 0 {
                    ax += off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    ax += off[i] * x[i + 1];
                }
                let r = b[i] - ax;
                res += r * r;
            }
            return Ok((
                x,
                SolveInfo {
                    iterations: 0,
                    residual: res.sqrt(),
                },
            ));
        }
        self.cg(mcoef, acoef, b, x0, rtol, context)
    }

    /// Jacobi-preconditioned CG for (mcoef M + acoef A) x = b.
    fn cg(
        &self,
        mcoef: f64,
        acoef: f64,
        b: &[f64],
        x0: Vec<f64>,
        rtol: f64,
        context: &'static str,
    ) -> Result<(Vec<f64>, SolveInfo)> {
        let n = b.len();
        let precond: Vec<f64> = (0..n)
            .map(|i| 1.0 / (mcoef * self.mass[i] + acoef * self.form_diag[i]))
            .collect();
        let apply = |x: &[f64], out: &mut [f64]| {
            self.apply_form(x, out);
            for i in 0..n {
                out[i] = acoef * out[i] + mcoef * self.mass[i] * x[i];
            }
        };
        let norm_b = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        let target = rtol * norm_b;
        let mut x = x0;
        let mut r = vec![0.0; n];
        apply(&x, &mut r);
        for i in 0..n {
            r[i] = b[i] - r[i];
        }
        let mut z: Vec<f64> = (0..n).map(|i| r[i] * precond[i]).collect();
        let mut p = z.clone();
        let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let mut q = vec![0.0; n];
        let mut res = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if res <= target || norm_b == 0.0 {
            return Ok((
                x,
                SolveInfo {
                    iterations: 0,
                    residual: res,
                },
            ));
        }
        for it in 1..=CG_MAX_ITERS {
            apply(&p, &mut q);
            let pq: f64 = p.iter().zip(&q).map(|(a, b)| a * b).sum();
            if pq <= 0.0 {
                return Err(Error::SolverStall {
                    context,
                    iterations: it,
                    residual: res,
                });
            }
            let alpha = rz / pq;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * q[i];
            }
            res = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            if res <= target {
                return Ok((
                    x,
                    SolveInfo {
                        iterations: it,
                        residual: res,
                    },
                ));
            }
            for i in 0..n {
                z[i] = r[i] * precond[i];
            }
            let rz_next: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
            let beta = rz_next / rz;
            rz = rz_next;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        Err(Error::SolverStall {
            context,
            iterations: CG_MAX_ITERS,
            residual: res,
        })
    }

    /// u = R(lambda, L) f: solves (lambda M + A) u = M f to relative residual
    /// 1e-10, which realizes lambda u - L u = f with the Neumann condition.
    pub fn solve_resolvent(&self, lambda: f64, f: &ScalarField) -> Result<ScalarField> {
        Ok(self.solve_resolvent_with_info(lambda, f)?.0)
    }

    pub fn solve_resolvent_with_info(
        &self,
        lambda: f64,
        f: &ScalarField,
    ) -> Result<(ScalarField, SolveInfo)> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::Config(format!("resolvent requires lambda > 0, got {lambda}")));
        }
        let ff = self.restrict(f)?;
        let b: Vec<f64> = ff.iter().zip(&self.mass).map(|(v, m)| v * m).collect();
        let x0: Vec<f64> = ff.iter().map(|v| v / lambda).collect();
        let (x, info) = self.solve_spd(lambda, 1.0, &b, x0, RESOLVENT_RTOL, "resolvent")?;
        Ok((self.extend(&x), info))
    }

    /// Approximates T_t u0 by `steps` trapezoidal steps of the mass-weighted
    /// flow M du/dt = -A u. The first two intervals run as backward-Euler
    /// half-steps, which damp the high-frequency components that the
    /// trapezoidal rule leaves ringing on jump data. Constants and the total
    /// Gaussian mass are preserved to solver accuracy.
    pub fn evolve(&self, u0: &ScalarField, t: f64, steps: usize) -> Result<ScalarField> {
        Ok(self.evolve_with_info(u0, t, steps)?.0)
    }

    pub fn evolve_with_info(
        &self,
        u0: &ScalarField,
        t: f64,
        steps: usize,
    ) -> Result<(ScalarField, SolveInfo)> {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::NonPositiveTime(t));
        }
        if steps == 0 {
            return Err(Error::Config("steps must be at least 1".into()));
        }
        let dt = t / steps as f64;
        let h = self.grid.spacing();
        if dt > h * (1.0 + 1e-12) {
            return Err(Error::TimeStepTooLarge { dt, h });
        }
        let mut u = self.restrict(u0)?;
        let n = u.len();
        let mut rhs = vec![0.0; n];
        let mut total = SolveInfo::default();
        let startup_intervals = steps.min(2);
        for step in 0..steps {
            if step < startup_intervals {
                // two backward-Euler half-steps covering [t_k, t_k + dt]
                for _ in 0..2 {
                    for i in 0..n {
                        rhs[i] = self.mass[i] * u[i];
                    }
                    let (x, info) = self.solve_spd(1.0, 0.5 * dt, &rhs, u.clone(), EVOLVE_RTOL, "evolve")?;
                    u = x;
                    total.iterations += info.iterations;
                    total.residual = total.residual.max(info.residual);
                }
            } else {
                // trapezoidal step: (M + dt/2 A) u' = (M - dt/2 A) u
                self.apply_form(&u, &mut rhs);
                for i in 0..n {
                    rhs[i] = self.mass[i] * u[i] - 0.5 * dt * rhs[i];
                }
                let (x, info) = self.solve_spd(1.0, 0.5 * dt, &rhs, u.clone(), EVOLVE_RTOL, "evolve")?;
                u = x;
                total.iterations += info.iterations;
                total.residual = total.residual.max(info.residual);
            }
        }
        Ok((self.extend(&u), total))
    }
}

fn count_components(n: usize, faces: &[Face]) -> usize {
    if n == 0 {
        return 0;
    }
    // union-find over face endpoints
    let mut parent: Vec<u32> = (0..n as u32).collect();
    fn find(parent: &mut [u32], mut i: u32) -> u32 {
        while parent[i as usize] != i {
            parent[i as usize] = parent[parent[i as usize] as usize];
            i = parent[i as usize];
        }
        i
    }
    for f in faces {
        let ra = find(&mut parent, f.a);
        let rb = find(&mut parent, f.b);
        if ra != rb {
            parent[ra as usize] = rb;
        }
    }
    let mut count = 0;
    for i in 0..n as u32 {
        if find(&mut parent, i) == i {
            count += 1;
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bv;
    use crate::convex::ConvexBody;
    use crate::grid::ScalarField;
    use crate::mehler;
    use crate::special;

    #[test]
    fn form_of_linear_field_recovers_gaussian_mass() {
        // E_h(x, x) = sum w_face -> 1 on the full grid as h -> 0
        let g = GaussianGrid::new(1, 8.0, 1.0 / 128.0).unwrap();
        let op = OuOperator::assemble_full(&g).unwrap();
        let x = ScalarField::from_fn(&g, |p| p[0]);
        let e = op.form_energy(&x, &x).unwrap();
        assert!((e - 1.0).abs() < 1e-4, "E(x,x) = {e}");

        // constants lie in the kernel
        let c = ScalarField::constant(&g, 3.0);
        assert_eq!(op.form_energy(&c, &x).unwrap(), 0.0);
        assert_eq!(op.form_energy(&c, &c).unwrap(), 0.0);

        // on (-1,1) the energy of x is the interval's Gaussian mass
        let interval = ConvexBody::interval(-1.0, 1.0).unwrap();
        let op = OuOperator::assemble(&g, &interval).unwrap();
        let e = op.form_energy(&x, &x).unwrap();
        let want = special::gaussian_interval_mass(-1.0, 1.0);
        assert!((e - want).abs() < 5.0 * g.spacing(), "E(x,x) = {e} vs {want}");
    }

    #[test]
    fn form_is_symmetric_nonnegative() {
        let g = GaussianGrid::new(2, 4.0, 0.25).unwrap();
        let ball = ConvexBody::ball(2, [0.1, -0.2, 0.0], 1.3).unwrap();
        let op = OuOperator::assemble(&g, &ball).unwrap();
        let u = ScalarField::from_fn(&g, |p| (p[0] + 0.3 * p[1]).sin());
        let v = ScalarField::from_fn(&g, |p| p[0] * p[1]);
        let uv = op.form_energy(&u, &v).unwrap();
        let vu = op.form_energy(&v, &u).unwrap();
        assert_eq!(uv, vu);
        assert!(op.form_energy(&u, &u).unwrap() >= 0.0);
    }

    #[test]
    fn empty_and_disconnected_interiors_are_rejected() {
        let g = GaussianGrid::new(1, 4.0, 0.5).unwrap();
        let tiny = ConvexBody::interval(10.0, 11.0);
        // interval body invariant requires a < b; body is fine but off-grid
        assert!(matches!(
            OuOperator::assemble(&g, &tiny.unwrap()),
            Err(Error::EmptyInterior)
        ));

        // a thin diagonal slab catches only the anti-diagonal nodes of a
        // coarse grid, which are not face-adjacent
        let g2 = GaussianGrid::new(2, 2.0, 1.0).unwrap();
        let s = 2.0f64.sqrt().recip();
        let slab = ConvexBody::halfspace_intersection(
            2,
            vec![
                crate::convex::Halfspace::new([s, s, 0.0], 0.1),
                crate::convex::Halfspace::new([-s, -s, 0.0], 0.1),
                crate::convex::Halfspace::new([s, -s, 0.0], 3.9),
                crate::convex::Halfspace::new([-s, s, 0.0], 3.9),
            ],
            [0.0; 3],
        )
        .unwrap();
        assert!(matches!(
            OuOperator::assemble(&g2, &slab),
            Err(Error::DisconnectedInterior(_))
        ));
    }

    #[test]
    fn resolvent_examples() {
        let g = GaussianGrid::new(1, 8.0, 1.0 / 64.0).unwrap();
        let op = OuOperator::assemble_full(&g).unwrap();

        // constants: u = c / lambda
        let c = ScalarField::constant(&g, 3.0);
        let u = op.solve_resolvent(2.0, &c).unwrap();
        for (i, &flat) in op.interior.iter().enumerate().step_by(7) {
            let _ = i;
            assert!((u.values()[flat as usize] - 1.5).abs() < 1e-12);
        }

        // L x = -x on the whole space, so (1 - L)^{-1} x = x / 2
        let x = ScalarField::from_fn(&g, |p| p[0]);
        let u = op.solve_resolvent(1.0, &x).unwrap();
        for flat in 0..g.len() {
            let xv = g.node(flat)[0];
            if xv.abs() < 4.0 {
                assert!(
                    (u.values()[flat] - 0.5 * xv).abs() < 2e-3,
                    "R(1)x at {xv}: {}",
                    u.values()[flat]
                );
            }
        }

        // dissipativity: lambda ||u|| <= ||f||
        let f = ScalarField::from_fn(&g, |p| (3.0 * p[0]).cos());
        for lambda in [0.5, 1.0, 2.0] {
            let u = op.solve_resolvent(lambda, &f).unwrap();
            assert!(
                lambda * op.l2_norm(&u).unwrap() <= op.l2_norm(&f).unwrap() + 1e-9,
                "dissipativity at lambda = {lambda}"
            );
        }
    }

    #[test]
    fn resolvent_identity() {
        let g = GaussianGrid::new(1, 8.0, 1.0 / 64.0).unwrap();
        let interval = ConvexBody::interval(-1.5, 1.0).unwrap();
        let op = OuOperator::assemble(&g, &interval).unwrap();
        let f = ScalarField::from_fn(&g, |p| p[0] * p[0] - 0.3 * p[0]);
        let (la, mu) = (0.7, 1.9);
        let ra = op.solve_resolvent(la, &f).unwrap();
        let rb = op.solve_resolvent(mu, &f).unwrap();
        let rab = op.solve_resolvent(la, &rb).unwrap();
        // R(la) - R(mu) = (mu - la) R(la) R(mu)
        let mut worst = 0.0f64;
        for flat in 0..g.len() {
            let lhs = ra.values()[flat] - rb.values()[flat];
            let rhs = (mu - la) * rab.values()[flat];
            worst = worst.max((lhs - rhs).abs());
        }
        assert!(worst < 1e-7, "resolvent identity residual {worst}");
    }

    #[test]
    fn evolution_preserves_constants_and_mass() {
        let g = GaussianGrid::new(1, 8.0, 1.0 / 64.0).unwrap();
        let interval = ConvexBody::interval(-1.0, 1.0).unwrap();
        let op = OuOperator::assemble(&g, &interval).unwrap();

        let c = ScalarField::constant(&g, 2.5);
        let tc = op.evolve(&c, 0.5, 64).unwrap();
        for &flat in &op.interior {
            assert_eq!(tc.values()[flat as usize], 2.5, "constants must be exact");
        }

        let u0 = ScalarField::from_fn(&g, |p| p[0].signum());
        let m0 = op.mass_integral(&u0).unwrap();
        let n0 = op.l2_norm(&u0).unwrap();
        let ut = op.evolve(&u0, 0.5, 64).unwrap();
        assert!((op.mass_integral(&ut).unwrap() - m0).abs() < 1e-10);
        assert!(op.l2_norm(&ut).unwrap() <= n0 + 1e-12);
    }

    #[test]
    fn evolution_matches_mehler_for_linear_data() {
        let g = GaussianGrid::new(1, 8.0, 1.0 / 256.0).unwrap();
        let op = OuOperator::assemble_full(&g).unwrap();
        let u0 = ScalarField::from_fn(&g, |p| p[0]);
        let t = 2.0_f64.ln();
        let steps = ((t / g.spacing()).ceil() as usize).max(32);
        let ut = op.evolve(&u0, t, steps).unwrap();
        let oracle = mehler::mehler_apply(&u0, t).unwrap();
        let err = mehler::l2_distance(&ut.clone().without_mask(), &oracle).unwrap();
        assert!(err < 1e-3, "evolution vs Mehler: {err}");
        // spot value: field halves
        let mid = g.len() / 2;
        let x = g.node(mid + 50)[0];
        assert!((ut.values()[mid + 50] - 0.5 * x).abs() < 1e-3);
    }

    #[test]
    fn semigroup_symmetry_and_law() {
        let g = GaussianGrid::new(1, 6.0, 1.0 / 32.0).unwrap();
        let interval = ConvexBody::interval(-1.2, 0.8).unwrap();
        let op = OuOperator::assemble(&g, &interval).unwrap();
        let u = ScalarField::from_fn(&g, |p| (2.0 * p[0]).sin());
        let v = ScalarField::from_fn(&g, |p| p[0] * p[0]);
        let t = 0.3;
        let steps = 64;
        let tu = op.evolve(&u, t, steps).unwrap();
        let tv = op.evolve(&v, t, steps).unwrap();
        let a = op.inner(&tu, &v).unwrap();
        let b = op.inner(&u, &tv).unwrap();
        assert!((a - b).abs() < 1e-9, "symmetry: {a} vs {b}");

        let s = 0.2;
        let via = op
            .evolve(&op.evolve(&u, s, 40).unwrap(), t, steps)
            .unwrap();
        let direct = op.evolve(&u, s + t, 100).unwrap();
        let mut err2 = 0.0;
        let diff: Vec<f64> = via
            .values()
            .iter()
            .zip(direct.values())
            .map(|(a, b)| a - b)
            .collect();
        for (c, &flat) in op.interior.iter().enumerate() {
            let _ = c;
            err2 += diff[flat as usize] * diff[flat as usize] * g.weights()[flat as usize];
        }
        assert!(err2.sqrt() < 1e-3, "semigroup law: {}", err2.sqrt());
    }

    #[test]
    fn evolve_rejects_oversized_steps() {
        let g = GaussianGrid::new(1, 4.0, 0.25).unwrap();
        let op = OuOperator::assemble_full(&g).unwrap();
        let u = ScalarField::constant(&g, 1.0);
        assert!(matches!(
            op.evolve(&u, 1.0, 2),
            Err(Error::TimeStepTooLarge { .. })
        ));
        assert!(op.evolve(&u, 1.0, 0).is_err());
        assert!(op.evolve(&u, -1.0, 8).is_err());
    }

    #[test]
    fn cylindrical_data_evolves_by_the_base_dimension_flow() {
        // on a cylinder I x R (full box range in x2) with data f(x1), the
        // 2-d Neumann flow factorizes: every x2-slice solves the 1-d system
        let h = 1.0 / 32.0;
        let g2 = GaussianGrid::new(2, 4.0, h).unwrap();
        let g1 = GaussianGrid::new(1, 4.0, h).unwrap();
        let cylinder = ConvexBody::box_body(2, [-1.0, -5.0, 0.0], [1.0, 5.0, 0.0]).unwrap();
        let interval = ConvexBody::interval(-1.0, 1.0).unwrap();
        let op2 = OuOperator::assemble(&g2, &cylinder).unwrap();
        let op1 = OuOperator::assemble(&g1, &interval).unwrap();

        let f = |x: f64| (1.3 * x).sin() + 0.5 * x;
        let u2 = ScalarField::from_fn(&g2, |p| f(p[0]));
        let u1 = ScalarField::from_fn(&g1, |p| f(p[0]));
        let t = 0.3;
        let steps = steps_for_test(t, h);
        let v2 = op2.evolve(&u2, t, steps).unwrap();
        let v1 = op1.evolve(&u1, t, steps).unwrap();

        let npa = g2.nodes_per_axis();
        let mut worst = 0.0f64;
        for i in 0..npa {
            let x1 = g1.axis_coord(i);
            if x1.abs() >= 1.0 {
                continue;
            }
            for j in 0..npa {
                let flat2 = g2.flat_index([i, j, 0]);
                worst = worst.max((v2.values()[flat2] - v1.values()[i]).abs());
            }
        }
        assert!(worst < 1e-8, "slice deviation {worst}");
    }

    fn steps_for_test(t: f64, h: f64) -> usize {
        ((t / h).ceil() as usize).max(32)
    }

    #[test]
    fn evolved_variation_in_3d_stays_below_reference() {
        let g = GaussianGrid::new(3, 4.0, 0.25).unwrap();
        let ball = ConvexBody::ball(3, [0.0; 3], 1.3).unwrap();
        let op = OuOperator::assemble(&g, &ball).unwrap();
        let u0 = ScalarField::from_fn(&g, |p| p[0] + 0.3 * p[1] * p[2]);
        let reference = bv::sobolev_variation(&u0, Some(&ball)).unwrap().value;
        let mut prev = f64::INFINITY;
        for &t in &[0.1, 0.3, 0.8] {
            let ut = op.evolve(&u0, t, steps_for_test(t, g.spacing())).unwrap();
            let var = bv::sobolev_variation(&ut, None).unwrap().value;
            assert!(var <= reference * (1.0 + 0.02), "F({t}) = {var} vs {reference}");
            assert!(var <= prev + 1e-9, "not decreasing at t = {t}");
            prev = var;
        }
    }

    #[test]
    fn variation_of_evolved_sign_decreases() {
        let g = GaussianGrid::new(1, 8.0, 1.0 / 256.0).unwrap();
        let interval = ConvexBody::interval(-1.0, 1.0).unwrap();
        let op = OuOperator::assemble(&g, &interval).unwrap();
        let u0 = ScalarField::from_fn(&g, |p| p[0].signum());
        let mut prev = f64::INFINITY;
        for &t in &[0.01, 0.05, 0.2, 0.8] {
            let steps = ((t / g.spacing()).ceil() as usize).max(32);
            let ut = op.evolve(&u0, t, steps).unwrap();
            let var = bv::sobolev_variation(&ut, None).unwrap().value;
            assert!(var <= prev + 1e-8, "variation rose at t = {t}");
            prev = var;
        }
    }
}
