//! The four experiment drivers behind the CLI: the semigroup variation desk
//! check, the nested-domain resolvent convergence study, the whole-space
//! Mehler oracle comparison, and the seeded property suite.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use crate::bv::{
    bump_test_field, conditional_expectation, dual_variation_lower_bound, gaussian_divergence,
    jump_variation, meyers_serrin_approximate, sobolev_variation, InitialDatum, JumpSet,
};
use crate::convex::{
    cylindrical_approximation, disk_supporting_halfspaces, hausdorff_boundary_distance_with_rays,
    parse_domain_spec, ConvexBody,
};
use crate::error::{Error, Result};
use crate::grid::{gaussian_integrate, gradient, GaussianGrid, ScalarField};
use crate::lab::config::{ExperimentConfig, ExperimentKind};
use crate::lab::report::{Report, Verdict};
use crate::mehler;
use crate::operator::OuOperator;
use crate::rng::SplitMix64;
use crate::trace::{geometric_ladder, steps_for, variation_trace};

/// Fixed-width float formatting keeps CSV output byte-identical across runs.
fn fmt(x: f64) -> String {
    format!("{x:.12e}")
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

fn csv_preamble(config: &ExperimentConfig) -> String {
    let mut s = String::new();
    for (k, v) in config.echo() {
        let _ = writeln!(s, "# {k}={v}");
    }
    s
}

/// Emitted scripts carry the config echo (including the seed) as comments.
fn plot_with_preamble(config: &ExperimentConfig, script: &str) -> String {
    let (shebang, rest) = script.split_once('\n').unwrap_or(("", script));
    format!("{shebang}\n{}{rest}", csv_preamble(config))
}

pub fn run(config: &ExperimentConfig) -> Result<Report> {
    config.validate()?;
    std::fs::create_dir_all(&config.out_dir)
        .map_err(|e| Error::io(config.out_dir.display().to_string(), e))?;
    match config.experiment {
        ExperimentKind::TheoremCheck => run_theorem_check(config),
        ExperimentKind::DomainConvergence => run_domain_convergence(config),
        ExperimentKind::MehlerOracle => run_mehler_oracle(config),
        ExperimentKind::PropertySuite => run_property_suite(config),
    }
}

fn build_domain(config: &ExperimentConfig) -> Result<ConvexBody> {
    let body = parse_domain_spec(&config.domain, config.dim)?;
    match config.smooth_delta {
        Some(delta) => body.smooth(delta),
        None => Ok(body),
    }
}

fn base_fingerprint(report: &mut Report, grid: &GaussianGrid) {
    report.fingerprint("nodes", grid.len().to_string());
    report.fingerprint("tail_mass", fmt(grid.tail_mass()));
    report.fingerprint("weight_sum", fmt(grid.weight_sum()));
    report.fingerprint("resolvent_rtol", "1e-10".into());
    report.fingerprint("evolve_rtol", "1e-11".into());
    report.fingerprint("ray_bisection_tol", "1e-10".into());
}

// ---------------------------------------------------------------------------
// theorem-check
// ---------------------------------------------------------------------------

/// Builds grid, body, and operator; runs the variation trace F(t) along the
/// configured time ladder; verdicts: monotone within the per-time error
/// budget, bounded by the reference, and convergent at the smallest time.
pub fn run_theorem_check(config: &ExperimentConfig) -> Result<Report> {
    let grid = GaussianGrid::new(config.dim, config.resolved_half_width(), config.spacing)?;
    let body = build_domain(config)?;
    let u0 = InitialDatum::parse(&config.u0)?;
    let op = OuOperator::assemble(&grid, &body)?;
    let times = geometric_ladder(config.t_min, config.t_max, config.time_count);
    let trace = variation_trace(&op, &u0, &times)?;

    let mut report = Report::new(config.experiment.as_str(), config.echo());
    base_fingerprint(&mut report, &grid);
    report.fingerprint("interior_nodes", op.interior_count().to_string());
    report.fingerprint(
        "reference_method",
        trace.reference_method.as_str().to_string(),
    );
    report.warnings = trace.warnings.clone();

    // trace.csv
    let mut csv = csv_preamble(config);
    csv.push_str("t,F_t,reference,err_estimate,mass_drift,contraction_margin\n");
    for p in &trace.points {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            fmt(p.t),
            fmt(p.value),
            fmt(trace.reference),
            fmt(p.err_estimate),
            fmt(p.mass_drift),
            fmt(p.contraction_margin)
        );
    }
    let trace_path = config.out_dir.join("trace.csv");
    write_text(&trace_path, &csv)?;
    report.artifacts.push(trace_path);

    // variation.csv: reference estimate plus the last trace value
    let mut var_csv = csv_preamble(config);
    var_csv.push_str("method,value,h,tail\n");
    let _ = writeln!(
        var_csv,
        "{},{},{},{}",
        trace.reference_method.as_str(),
        fmt(trace.reference),
        fmt(grid.spacing()),
        fmt(grid.tail_mass())
    );
    if let Some(last) = trace.points.last() {
        let _ = writeln!(
            var_csv,
            "sobolev,{},{},{}",
            fmt(last.value),
            fmt(grid.spacing()),
            fmt(grid.tail_mass())
        );
    }
    let var_path = config.out_dir.join("variation.csv");
    write_text(&var_path, &var_csv)?;
    report.artifacts.push(var_path);

    let plot_path = config.out_dir.join("plot_trace.py");
    write_text(&plot_path, &plot_with_preamble(config, TRACE_PLOT_SCRIPT))?;
    report.artifacts.push(plot_path);

    // per-solve diagnostics
    let mut log = csv_preamble(config);
    for p in &trace.points {
        let _ = writeln!(
            log,
            "evolve t={} steps={} cg_iterations={} max_residual={}",
            fmt(p.t),
            steps_for(p.t, grid.spacing()),
            p.cg_iterations,
            fmt(p.max_residual)
        );
    }
    let log_path = config.out_dir.join("solver.log");
    write_text(&log_path, &log)?;
    report.artifacts.push(log_path);

    report.verdict(Verdict::from_margin(
        "trace-monotone",
        -trace.monotonicity_margin(),
        "F(t_{k+1}) <= F(t_k) + err(t_k) on every consecutive pair",
    ));
    let upper = trace.reference * (1.0 + config.upper_tol) - trace.max_value();
    report.verdict(Verdict::from_margin(
        "trace-upper-bound",
        upper,
        format!(
            "max F = {} vs reference (1 + {}) = {}",
            fmt(trace.max_value()),
            config.upper_tol,
            fmt(trace.reference * (1.0 + config.upper_tol))
        ),
    ));
    let first = trace.points.first().expect("nonempty ladder");
    let rel = (first.value - trace.reference).abs() / trace.reference.max(1e-300);
    report.verdict(Verdict::from_margin(
        "trace-limit",
        config.conv_tol - rel,
        format!(
            "F(t_min) = {} vs reference {} (rel err {})",
            fmt(first.value),
            fmt(trace.reference),
            fmt(rel)
        ),
    ));
    report.write(&config.out_dir)?;
    Ok(report)
}

// ---------------------------------------------------------------------------
// mehler-oracle
// ---------------------------------------------------------------------------

/// Whole-box evolution against the Mehler integral at t = t_compare for the
/// three stock data (linear, quadratic, sign); the box tail makes the
/// truncated line a whole-space proxy.
pub fn run_mehler_oracle(config: &ExperimentConfig) -> Result<Report> {
    if config.dim != 1 {
        return Err(Error::Config("mehler-oracle runs in dimension 1".into()));
    }
    let grid = GaussianGrid::new(1, config.resolved_half_width(), config.spacing)?;
    let op = OuOperator::assemble_full(&grid)?;
    let t = config.t_compare;
    let bound = 1e-3;

    let mut report = Report::new(config.experiment.as_str(), config.echo());
    base_fingerprint(&mut report, &grid);
    report.fingerprint("l2_bound", fmt(bound));

    let mut csv = csv_preamble(config);
    csv.push_str("u0,t,l2_error,bound\n");
    for (name, datum) in [
        ("linear", InitialDatum::Linear),
        ("quadratic", InitialDatum::Poly([0.0, 0.0, 1.0])),
        ("sign", InitialDatum::Sign),
    ] {
        let u0 = datum.sample(&grid)?;
        let steps = steps_for(t, grid.spacing());
        let evolved = op.evolve(&u0, t, steps)?.without_mask();
        let oracle = mehler::mehler_apply(&u0, t)?;
        let err = mehler::l2_distance(&evolved, &oracle)?;
        let _ = writeln!(csv, "{name},{},{},{}", fmt(t), fmt(err), fmt(bound));
        report.verdict(Verdict::from_margin(
            format!("mehler-{name}"),
            bound - err,
            format!("L2(gamma) deviation {} at t = {}", fmt(err), fmt(t)),
        ));
    }
    let csv_path = config.out_dir.join("oracle.csv");
    write_text(&csv_path, &csv)?;
    report.artifacts.push(csv_path);
    report.write(&config.out_dir)?;
    Ok(report)
}

// ---------------------------------------------------------------------------
// domain-convergence
// ---------------------------------------------------------------------------

/// Resolvents on nested smoothed m-gon supersets of a disk: the restriction
/// error in W^{1,2}(target) and the Hausdorff boundary distance must both
/// decrease strictly in m.
pub fn run_domain_convergence(config: &ExperimentConfig) -> Result<Report> {
    let target = parse_domain_spec(&config.domain, 2)?;
    let Some(radius) = target.ball_radius() else {
        return Err(Error::Config(
            "domain-convergence expects a ball target (the supporting half-planes are known)"
                .into(),
        ));
    };
    let grid = GaussianGrid::new(2, config.resolved_half_width(), config.spacing)?;
    let target_op = OuOperator::assemble(&grid, &target)?;
    let target_mask = target.interior_mask(&grid)?;
    let f = ScalarField::from_fn(&grid, |p| p[0]);

    let mut report = Report::new(config.experiment.as_str(), config.echo());
    base_fingerprint(&mut report, &grid);
    report.fingerprint("target_interior_nodes", target_op.interior_count().to_string());

    let (m_lo, m_hi) = config.faces;
    let mut csv = csv_preamble(config);
    csv.push_str("m,lambda,w12_error,hausdorff,gamma_excess\n");

    let mut solver_log = csv_preamble(config);
    let mut reference: Vec<ScalarField> = Vec::new();
    for &lambda in &config.lambdas {
        let (u, info) = target_op.solve_resolvent_with_info(lambda, &f)?;
        let _ = writeln!(
            solver_log,
            "resolvent target lambda={} iterations={} residual={}",
            fmt(lambda),
            info.iterations,
            fmt(info.residual)
        );
        reference.push(u);
    }

    let mut w12_table: Vec<Vec<f64>> = vec![Vec::new(); config.lambdas.len()];
    let mut hausdorff_seq = Vec::new();
    let mut gamma_seq = Vec::new();
    for m in m_lo..=m_hi {
        // plane offsets shrink like 1/m^2, matching the polygon's excess
        let delta_m = config.delta0 * (m_lo as f64 / m as f64).powi(2);
        let planes = disk_supporting_halfspaces(m, radius, 0.0);
        let body_m = cylindrical_approximation(2, &planes, m, delta_m, *target.center())?;
        // every target-interior node must be interior to the superset
        let mask_m = body_m.interior_mask(&grid)?;
        for i in 0..grid.len() {
            if target_mask[i] && !mask_m[i] {
                return Err(Error::InvalidBody(format!(
                    "approximant m = {m} fails to cover the target at node {i}"
                )));
            }
        }
        let op_m = OuOperator::assemble(&grid, &body_m)?;
        let hausdorff =
            hausdorff_boundary_distance_with_rays(&body_m, &target, 3.0 * radius, 1024)?;
        let gamma_excess = gaussian_mass_excess_2d(&body_m, &target, 4096)?;
        hausdorff_seq.push(hausdorff);
        gamma_seq.push(gamma_excess);
        for (li, &lambda) in config.lambdas.iter().enumerate() {
            let (u_m, info) = op_m.solve_resolvent_with_info(lambda, &f)?;
            let _ = writeln!(
                solver_log,
                "resolvent m={m} lambda={} iterations={} residual={}",
                fmt(lambda),
                info.iterations,
                fmt(info.residual)
            );
            let err = w12_distance(&grid, &u_m, &reference[li], &target_mask);
            w12_table[li].push(err);
            let _ = writeln!(
                csv,
                "{m},{},{},{},{}",
                fmt(lambda),
                fmt(err),
                fmt(hausdorff),
                fmt(gamma_excess)
            );
        }
    }

    let csv_path = config.out_dir.join("convergence.csv");
    write_text(&csv_path, &csv)?;
    report.artifacts.push(csv_path);
    let plot_path = config.out_dir.join("plot_convergence.py");
    write_text(&plot_path, &plot_with_preamble(config, CONVERGENCE_PLOT_SCRIPT))?;
    report.artifacts.push(plot_path);
    let log_path = config.out_dir.join("solver.log");
    write_text(&log_path, &solver_log)?;
    report.artifacts.push(log_path);

    for (li, lambda) in config.lambdas.iter().enumerate() {
        report.verdict(Verdict::from_margin(
            format!("w12-error-decreasing(lambda={lambda})"),
            strict_decrease_margin(&w12_table[li]),
            format!(
                "restriction error {} -> {}",
                fmt(*w12_table[li].first().unwrap()),
                fmt(*w12_table[li].last().unwrap())
            ),
        ));
    }
    report.verdict(Verdict::from_margin(
        "hausdorff-decreasing",
        strict_decrease_margin(&hausdorff_seq),
        format!(
            "boundary distance {} -> {}",
            fmt(*hausdorff_seq.first().unwrap()),
            fmt(*hausdorff_seq.last().unwrap())
        ),
    ));
    report.verdict(Verdict::from_margin(
        "gamma-excess-decreasing",
        strict_decrease_margin(&gamma_seq),
        format!(
            "gamma(superset minus target) {} -> {}",
            fmt(*gamma_seq.first().unwrap()),
            fmt(*gamma_seq.last().unwrap())
        ),
    ));
    report.write(&config.out_dir)?;
    Ok(report)
}

/// Smallest consecutive decrease; positive iff the sequence strictly falls.
fn strict_decrease_margin(seq: &[f64]) -> f64 {
    seq.windows(2)
        .map(|w| w[0] - w[1])
        .fold(f64::INFINITY, f64::min)
}

/// W^{1,2}(target, gamma) distance of two fields on the target's interior
/// nodes, gradients one-sided at the mask boundary.
fn w12_distance(
    grid: &Arc<GaussianGrid>,
    a: &ScalarField,
    b: &ScalarField,
    mask: &[bool],
) -> f64 {
    let diff = ScalarField::from_values(
        grid,
        a.values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| x - y)
            .collect(),
    )
    .expect("difference of finite fields");
    let grad = gradient(&diff, Some(mask));
    let mut s = 0.0;
    for i in 0..grid.len() {
        if mask[i] {
            let g = grad.norm_at(i);
            s += (diff.values()[i] * diff.values()[i] + g * g) * grid.weights()[i];
        }
    }
    s.sqrt()
}

/// gamma_2(outer \ inner) for star-shaped bodies about a common center, by
/// the exact radial integral (2 pi)^{-1} int (e^{-rho_in^2/2} - e^{-rho_out^2/2}) dtheta.
fn gaussian_mass_excess_2d(outer: &ConvexBody, inner: &ConvexBody, rays: usize) -> Result<f64> {
    let c_out = outer.center();
    let c_in = inner.center();
    if (c_out[0] - c_in[0]).abs() + (c_out[1] - c_in[1]).abs() > 1e-12 {
        return Err(Error::InvalidBody(
            "mass excess needs a common star center".into(),
        ));
    }
    let mut acc = 0.0;
    for k in 0..rays {
        let th = 2.0 * std::f64::consts::PI * k as f64 / rays as f64;
        let dir = [th.cos(), th.sin(), 0.0];
        let po = outer.boundary_point_along(&dir)?;
        let pi_ = inner.boundary_point_along(&dir)?;
        let ro2 = po[0] * po[0] + po[1] * po[1];
        let ri2 = pi_[0] * pi_[0] + pi_[1] * pi_[1];
        acc += (-0.5 * ri2).exp() - (-0.5 * ro2).exp();
    }
    Ok(acc / rays as f64)
}

// ---------------------------------------------------------------------------
// property-suite
// ---------------------------------------------------------------------------

struct SuiteRow {
    section: &'static str,
    case: String,
    check: &'static str,
    value: f64,
    bound: f64,
}

impl SuiteRow {
    fn margin(&self) -> f64 {
        self.bound - self.value
    }
}

/// Seed-driven checks: semigroup laws on random (body, datum) pairs, the
/// conditional-expectation variation contraction, the integration-by-parts
/// residual order, convex-gauge properties with smoothing diagnostics, and
/// the smooth-approximation bounds.
pub fn run_property_suite(config: &ExperimentConfig) -> Result<Report> {
    let mut rng = SplitMix64::new(config.seed);
    let mut rows: Vec<SuiteRow> = Vec::new();

    semigroup_section(&mut rng, &mut rows)?;
    conditional_expectation_section(&mut rng, &mut rows)?;
    integration_by_parts_section(&mut rows)?;
    geometry_section(&mut rng, &mut rows)?;
    smooth_approximation_section(&mut rows)?;
    dual_bound_section(&mut rows)?;

    let mut report = Report::new(config.experiment.as_str(), config.echo());
    report.fingerprint("cases", rows.len().to_string());
    report.fingerprint("resolvent_rtol", "1e-10".into());
    report.fingerprint("evolve_rtol", "1e-11".into());

    let mut csv = csv_preamble(config);
    csv.push_str("section,case,check,value,bound,margin\n");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            r.section,
            r.case,
            r.check,
            fmt(r.value),
            fmt(r.bound),
            fmt(r.margin())
        );
    }
    let csv_path = config.out_dir.join("property_suite.csv");
    write_text(&csv_path, &csv)?;
    report.artifacts.push(csv_path);

    // one verdict per distinct check: the worst margin over its cases
    let mut seen: Vec<&'static str> = Vec::new();
    for r in &rows {
        if !seen.contains(&r.check) {
            seen.push(r.check);
        }
    }
    for check in seen {
        let mut worst = f64::INFINITY;
        let mut count = 0usize;
        for r in rows.iter().filter(|r| r.check == check) {
            worst = worst.min(r.margin());
            count += 1;
        }
        report.verdict(Verdict::from_margin(
            check,
            worst,
            format!("worst margin over {count} cases"),
        ));
    }
    report.write(&config.out_dir)?;
    Ok(report)
}

fn random_body(rng: &mut SplitMix64, dim: usize) -> Result<ConvexBody> {
    let mut center = [0.0; 3];
    for c in center.iter_mut().take(dim) {
        *c = rng.range(-0.3, 0.3);
    }
    match rng.index(if dim == 2 { 3 } else { 2 }) {
        0 => ConvexBody::ball(dim, center, rng.range(0.8, 1.6)),
        1 => {
            let mut lo = [0.0; 3];
            let mut hi = [0.0; 3];
            for k in 0..dim {
                lo[k] = center[k] - rng.range(0.7, 1.4);
                hi[k] = center[k] + rng.range(0.7, 1.4);
            }
            ConvexBody::box_body(dim, lo, hi)
        }
        _ => {
            let m = 5 + rng.index(5);
            let planes = disk_supporting_halfspaces(m, rng.range(0.9, 1.4), rng.range(0.0, 1.0));
            ConvexBody::halfspace_intersection(2, planes, [0.0; 3])
        }
    }
}

fn random_smooth_field(
    rng: &mut SplitMix64,
    grid: &Arc<GaussianGrid>,
) -> ScalarField {
    let d = grid.dim();
    let mut coef = [[0.0f64; 3]; 3];
    for row in coef.iter_mut().take(d) {
        for c in row.iter_mut() {
            *c = rng.range(-1.0, 1.0);
        }
    }
    let omega = rng.range(0.5, 2.0);
    let phase = rng.range(0.0, 3.0);
    ScalarField::from_fn(grid, move |p| {
        let mut v = (omega * p[0] + phase).sin();
        for k in 0..d {
            v += coef[k][0] * p[k] + coef[k][1] * p[k] * p[k] * 0.3 + coef[k][2];
        }
        v
    })
}

fn normalize_on_interior(f: &mut ScalarField, op: &OuOperator) {
    let mask = op.interior_mask();
    let mut peak = 0.0f64;
    for (i, &m) in mask.iter().enumerate() {
        if m {
            peak = peak.max(f.values()[i].abs());
        }
    }
    if peak > 0.0 {
        for v in f.values_mut() {
            *v /= peak;
        }
    }
}

const MASS_DRIFT_TOL: f64 = 1e-10;
const CONTRACTION_TOL: f64 = 1e-12;
const SYMMETRY_TOL: f64 = 1e-9;
const SEMIGROUP_LAW_TOL: f64 = 5e-4;

fn semigroup_section(rng: &mut SplitMix64, rows: &mut Vec<SuiteRow>) -> Result<()> {
    for case in 0..50usize {
        let dim = if case < 20 {
            1
        } else if case < 40 {
            2
        } else {
            3
        };
        let (l, h) = match dim {
            1 => (8.0, 1.0 / 64.0),
            2 => (6.0, 1.0 / 16.0),
            _ => (6.0, 0.25),
        };
        let grid = GaussianGrid::new(dim, l, h)?;
        let body = random_body(rng, dim)?;
        let op = OuOperator::assemble(&grid, &body)?;

        let mut u0 = if case % 2 == 0 {
            random_smooth_field(rng, &grid)
        } else {
            let a = rng.range(-0.3, 0.3);
            InitialDatum::Step(a).sample(&grid)?
        };
        normalize_on_interior(&mut u0, &op);
        let v = random_smooth_field(rng, &grid);

        let t = 0.25;
        let s = 0.15;
        let ut = op.evolve(&u0, t, steps_for(t, h))?;
        let case_name = format!("{case}(d{dim})");

        let drift = (op.mass_integral(&ut)? - op.mass_integral(&u0)?).abs();
        rows.push(SuiteRow {
            section: "semigroup",
            case: case_name.clone(),
            check: "mass-conservation",
            value: drift,
            bound: MASS_DRIFT_TOL,
        });

        let growth = op.l2_norm(&ut)? - op.l2_norm(&u0)?;
        rows.push(SuiteRow {
            section: "semigroup",
            case: case_name.clone(),
            check: "l2-contraction",
            value: growth,
            bound: CONTRACTION_TOL,
        });

        let tv = op.evolve(&v, t, steps_for(t, h))?;
        let asym = (op.inner(&ut, &v)? - op.inner(&u0, &tv)?).abs();
        let scale = 1.0 + op.l2_norm(&u0)? * op.l2_norm(&v)?;
        rows.push(SuiteRow {
            section: "semigroup",
            case: case_name.clone(),
            check: "semigroup-symmetry",
            value: asym / scale,
            bound: SYMMETRY_TOL,
        });

        let via = op.evolve(&ut, s, steps_for(s, h))?;
        let direct = op.evolve(&u0, s + t, steps_for(s + t, h))?;
        let mut err2 = 0.0;
        let mask = op.interior_mask();
        for i in 0..grid.len() {
            if mask[i] {
                let d = via.values()[i] - direct.values()[i];
                err2 += d * d * grid.weights()[i];
            }
        }
        rows.push(SuiteRow {
            section: "semigroup",
            case: case_name,
            check: "semigroup-law",
            value: err2.sqrt(),
            bound: SEMIGROUP_LAW_TOL,
        });
    }
    Ok(())
}

const EM_CONTRACTION_TOL: f64 = 1e-10;

fn conditional_expectation_section(
    rng: &mut SplitMix64,
    rows: &mut Vec<SuiteRow>,
) -> Result<()> {
    let grid = GaussianGrid::new(2, 6.0, 0.125)?;
    let l = grid.half_width();
    // nested boxes in the first coordinate, cylindrical in the second, where
    // the projected-measure contraction holds set by set
    let boxes = [
        ConvexBody::box_body(2, [-0.5, -l - 1.0, 0.0], [0.5, l + 1.0, 0.0])?,
        ConvexBody::box_body(2, [-1.2, -l - 1.0, 0.0], [1.2, l + 1.0, 0.0])?,
        ConvexBody::box_body(2, [-2.4, -l - 1.0, 0.0], [2.4, l + 1.0, 0.0])?,
    ];
    for case in 0..25usize {
        let u = random_smooth_field(rng, &grid);
        let eu = conditional_expectation(&u, 1)?;
        // E_m is an exact projection
        let eeu = conditional_expectation(&eu, 1)?;
        let mut proj = 0.0f64;
        for i in 0..grid.len() {
            proj = proj.max((eeu.values()[i] - eu.values()[i]).abs());
        }
        rows.push(SuiteRow {
            section: "conditional-expectation",
            case: case.to_string(),
            check: "projection-exact",
            value: proj,
            bound: 0.0,
        });
        // E_m is an L2(gamma) contraction
        rows.push(SuiteRow {
            section: "conditional-expectation",
            case: case.to_string(),
            check: "projection-l2-contraction",
            value: mehler::l2_norm(&eu) - mehler::l2_norm(&u),
            bound: 1e-12,
        });
        for (bi, b) in boxes.iter().enumerate() {
            let vu = sobolev_variation(&u, Some(b))?.value;
            let veu = sobolev_variation(&eu, Some(b))?.value;
            rows.push(SuiteRow {
                section: "conditional-expectation",
                case: format!("{case}-box{bi}"),
                check: "conditional-expectation-contraction",
                value: veu - vu,
                bound: EM_CONTRACTION_TOL,
            });
        }
    }
    Ok(())
}

const IBP_ORDER_FLOOR: f64 = 0.9;
const IBP_RESIDUAL_C: f64 = 1.0;

fn integration_by_parts_section(rows: &mut Vec<SuiteRow>) -> Result<()> {
    let mut log_h = Vec::new();
    let mut log_r = Vec::new();
    for k in 6..=10u32 {
        let h = 0.5f64.powi(k as i32);
        let grid = GaussianGrid::new(1, 8.0, h)?;
        let u = ScalarField::from_fn(&grid, |p| (1.3 * p[0]).sin() * (-p[0] * p[0] / 8.0).exp());
        let phi = bump_test_field(&grid, None, &[0.0; 3], 4.0, 0, 1.0);
        let div = gaussian_divergence(&phi);
        let grad = gradient(&u, None);
        let mut residual = 0.0;
        for i in 0..grid.len() {
            residual += (u.values()[i] * div.values()[i]
                + grad.component(0)[i] * phi.component(0)[i])
                * grid.weights()[i];
        }
        let residual = residual.abs();
        rows.push(SuiteRow {
            section: "integration-by-parts",
            case: format!("h=2^-{k}"),
            check: "integration-by-parts-bound",
            value: residual,
            bound: IBP_RESIDUAL_C * h,
        });
        log_h.push(h.ln());
        log_r.push(residual.max(1e-300).ln());
    }
    // least-squares slope of log residual against log h
    let n = log_h.len() as f64;
    let mx = log_h.iter().sum::<f64>() / n;
    let my = log_r.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in log_h.iter().zip(&log_r) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    let slope = num / den;
    rows.push(SuiteRow {
        section: "integration-by-parts",
        case: "fit".into(),
        check: "integration-by-parts-order",
        value: IBP_ORDER_FLOOR,
        bound: slope,
    });
    Ok(())
}

const GAUGE_EXACT_TOL: f64 = 1e-12;
const GAUGE_SMOOTH_TOL: f64 = 1e-10;
const GRADIENT_FLOOR: f64 = 1e-3;

fn geometry_section(rng: &mut SplitMix64, rows: &mut Vec<SuiteRow>) -> Result<()> {
    let square = ConvexBody::cube(2, 1.0)?;
    let ball = ConvexBody::ball(2, [0.0; 3], 1.0)?;
    let heptagon = ConvexBody::halfspace_intersection(
        2,
        disk_supporting_halfspaces(7, 1.0, 0.3),
        [0.1, -0.05, 0.0],
    )?;
    let cube3 = ConvexBody::cube(3, 1.0)?;
    let smooth_square = square.smooth(0.05)?;

    let bodies: Vec<(&str, &ConvexBody, bool)> = vec![
        ("square", &square, true),
        ("ball", &ball, true),
        ("heptagon", &heptagon, true),
        ("cube3", &cube3, true),
        ("smooth-square", &smooth_square, false),
    ];
    for (name, body, closed_form) in bodies {
        let d = body.dim();
        let tol = if closed_form {
            GAUGE_EXACT_TOL
        } else {
            GAUGE_SMOOTH_TOL
        };
        let mut convexity = f64::NEG_INFINITY;
        let mut homogeneity = f64::NEG_INFINITY;
        let mut lipschitz = f64::NEG_INFINITY;
        for _ in 0..1000 {
            let mut x = [0.0; 3];
            let mut y = [0.0; 3];
            for k in 0..d {
                x[k] = rng.range(-3.0, 3.0);
                y[k] = rng.range(-3.0, 3.0);
            }
            let lam = rng.next_f64();
            let mut z = [0.0; 3];
            for k in 0..d {
                z[k] = lam * x[k] + (1.0 - lam) * y[k];
            }
            let mx = body.minkowski(&x);
            let my = body.minkowski(&y);
            convexity = convexity.max(body.minkowski(&z) - lam * mx - (1.0 - lam) * my);
            let mut dist = 0.0;
            for k in 0..d {
                dist += (x[k] - y[k]) * (x[k] - y[k]);
            }
            lipschitz = lipschitz.max((mx - my).abs() - dist.sqrt() / body.inradius());
            if closed_form {
                let t = rng.range(0.1, 3.0);
                let c = body.center();
                let mut xt = [0.0; 3];
                for k in 0..d {
                    xt[k] = c[k] + t * (x[k] - c[k]);
                }
                homogeneity =
                    homogeneity.max((body.minkowski(&xt) - t * mx).abs() - 1e-12 * (1.0 + t * mx));
            }
        }
        rows.push(SuiteRow {
            section: "geometry",
            case: name.into(),
            check: "gauge-convexity",
            value: convexity,
            bound: tol,
        });
        rows.push(SuiteRow {
            section: "geometry",
            case: name.into(),
            check: "gauge-lipschitz",
            value: lipschitz,
            bound: tol,
        });
        if closed_form {
            rows.push(SuiteRow {
                section: "geometry",
                case: name.into(),
                check: "gauge-homogeneity",
                value: homogeneity,
                bound: 0.0,
            });
        }
    }

    // smoothing: strict containment at sampled boundary points of the base
    let samples = square.boundary_samples(512, 10.0)?;
    let mut worst_gauge = f64::NEG_INFINITY;
    for p in &samples {
        worst_gauge = worst_gauge.max(smooth_square.minkowski(p));
    }
    rows.push(SuiteRow {
        section: "geometry",
        case: "square-delta=0.05".into(),
        check: "smooth-containment",
        value: worst_gauge,
        bound: 1.0 - 1e-9,
    });

    // gamma(C_delta \ C) strictly decreasing along the delta ladder
    let grid = GaussianGrid::new(2, 6.0, 1.0 / 128.0)?;
    let mut masses = Vec::new();
    for &delta in &[0.2, 0.1, 0.05, 0.025] {
        let smoothed = square.smooth(delta)?;
        let indicator = ScalarField::from_fn(&grid, |p| {
            if smoothed.contains(p) && !square.contains(p) {
                1.0
            } else {
                0.0
            }
        });
        masses.push(gaussian_integrate(&indicator, None)?);
    }
    rows.push(SuiteRow {
        section: "geometry",
        case: "delta-ladder".into(),
        check: "smoothing-mass-monotone",
        value: 0.0,
        bound: strict_decrease_margin(&masses),
    });

    // gauge gradient norm stays away from zero on the smooth boundary
    let boundary = smooth_square.boundary_samples(128, 10.0)?;
    let mut min_grad = f64::INFINITY;
    let step = 1e-5;
    for p in &boundary {
        let mut g2 = 0.0;
        for a in 0..2 {
            let mut pp = *p;
            let mut pm = *p;
            pp[a] += step;
            pm[a] -= step;
            let d = (smooth_square.minkowski(&pp) - smooth_square.minkowski(&pm)) / (2.0 * step);
            g2 += d * d;
        }
        min_grad = min_grad.min(g2.sqrt());
    }
    rows.push(SuiteRow {
        section: "geometry",
        case: "smooth-square".into(),
        check: "boundary-gradient-floor",
        value: GRADIENT_FLOOR,
        bound: min_grad,
    });
    Ok(())
}

const LSC_TOL: f64 = 1e-3;

fn smooth_approximation_section(rows: &mut Vec<SuiteRow>) -> Result<()> {
    let grid = GaussianGrid::new(1, 8.0, 1.0 / 1024.0)?;
    let interval = ConvexBody::interval(-1.0, 1.0)?;
    let u = InitialDatum::Sign.sample(&grid)?;
    let reference = jump_variation(&JumpSet::Points(vec![(0.0, 2.0)]), &interval)?.value;
    let r_hat = grid.half_width();

    for &eps in &[0.1, 0.05, 0.02] {
        let v = meyers_serrin_approximate(&u, eps, Some(&interval))?;
        let mut dist2 = 0.0;
        for i in 0..grid.len() {
            if interval.contains(&grid.node(i)) {
                let d = u.values()[i] - v.values()[i];
                dist2 += d * d * grid.weights()[i];
            }
        }
        rows.push(SuiteRow {
            section: "smooth-approximation",
            case: format!("eps={eps}"),
            check: "smooth-approximation-l2",
            value: dist2.sqrt(),
            bound: eps,
        });
        let drift = (sobolev_variation(&v, Some(&interval))?.value - reference).abs();
        rows.push(SuiteRow {
            section: "smooth-approximation",
            case: format!("eps={eps}"),
            check: "smooth-approximation-drift",
            value: drift,
            bound: eps * (eps * r_hat + eps * eps / 2.0).exp(),
        });
    }

    // lower-semicontinuity spot check along eps = 1/n
    let mut min_var = f64::INFINITY;
    for n in [10.0, 20.0, 50.0] {
        let v = meyers_serrin_approximate(&u, 1.0 / n, Some(&interval))?;
        min_var = min_var.min(sobolev_variation(&v, Some(&interval))?.value);
    }
    rows.push(SuiteRow {
        section: "smooth-approximation",
        case: "liminf".into(),
        check: "lower-semicontinuity",
        value: reference - min_var,
        bound: LSC_TOL,
    });
    Ok(())
}

fn dual_bound_section(rows: &mut Vec<SuiteRow>) -> Result<()> {
    let grid = GaussianGrid::new(1, 8.0, 1.0 / 512.0)?;
    let interval = ConvexBody::interval(-1.0, 1.0)?;
    let u = InitialDatum::Sign.sample(&grid)?;
    let reference = jump_variation(&JumpSet::Points(vec![(0.0, 2.0)]), &interval)?.value;
    let mut phis = Vec::new();
    for width in [0.3, 0.5, 0.8] {
        phis.push(bump_test_field(&grid, Some(&interval), &[0.0; 3], width, 0, -1.0));
        phis.push(bump_test_field(&grid, Some(&interval), &[0.0; 3], width, 0, 1.0));
    }
    let dual = dual_variation_lower_bound(&u, Some(&interval), &phis)?.value;
    // duality gap: the certified lower bound stays below the exact variation
    rows.push(SuiteRow {
        section: "duality",
        case: "sign-interval".into(),
        check: "duality-gap",
        value: dual,
        bound: reference + 1e-6,
    });
    rows.push(SuiteRow {
        section: "duality",
        case: "sign-interval".into(),
        check: "duality-sharpness",
        value: 0.75,
        bound: dual,
    });
    Ok(())
}

// ---------------------------------------------------------------------------
// plot scripts (standalone; the tool never renders images itself)
// ---------------------------------------------------------------------------

const TRACE_PLOT_SCRIPT: &str = r##"#!/usr/bin/env python3
"""Plots the variation trace F(t) against its reference level."""
import csv
import sys

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "trace.csv"
ts, fs, ref = [], [], None
with open(path) as fh:
    for row in csv.DictReader(r for r in fh if not r.startswith("#")):
        ts.append(float(row["t"]))
        fs.append(float(row["F_t"]))
        ref = float(row["reference"])

fig, ax = plt.subplots(figsize=(6, 4))
ax.semilogx(ts, fs, "o-", label="F(t)")
if ref is not None:
    ax.axhline(ref, color="k", ls="--", label="reference variation")
ax.set_xlabel("t")
ax.set_ylabel("F(t)")
ax.legend()
fig.tight_layout()
fig.savefig("trace.png", dpi=150)
print("wrote trace.png")
"##;

const CONVERGENCE_PLOT_SCRIPT: &str = r##"#!/usr/bin/env python3
"""Plots W^{1,2} restriction errors and Hausdorff distances against m."""
import csv
import sys
from collections import defaultdict

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "convergence.csv"
per_lambda = defaultdict(list)
hausdorff = {}
with open(path) as fh:
    for row in csv.DictReader(r for r in fh if not r.startswith("#")):
        m = int(row["m"])
        per_lambda[row["lambda"]].append((m, float(row["w12_error"])))
        hausdorff[m] = float(row["hausdorff"])

fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
for lam, pts in sorted(per_lambda.items()):
    pts.sort()
    ax1.semilogy([m for m, _ in pts], [e for _, e in pts], "o-", label=f"lambda={lam}")
ax1.set_xlabel("m (faces)")
ax1.set_ylabel("W^{1,2} restriction error")
ax1.legend()
ms = sorted(hausdorff)
ax2.semilogy(ms, [hausdorff[m] for m in ms], "s-")
ax2.set_xlabel("m (faces)")
ax2.set_ylabel("Hausdorff boundary distance")
fig.tight_layout()
fig.savefig("convergence.png", dpi=150)
print("wrote convergence.png")
"##;
