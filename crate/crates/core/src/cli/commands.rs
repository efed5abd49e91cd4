use std::path::Path;

use serde_json::{json, Value};

use super::document::{read_section, Document, Model};
use super::report::{CheckRecord, Report, Tolerances};
use crate::bundle::{Bundle, Connection, LpExponent, Potential, Section};
use crate::error::{Error, Result};
use crate::exec::{stream_rng, Execution};
use crate::geometry::{
    agmon_hypothesis_check, agmon_vanishing_experiment, boundary_geometry, default_schedule, family_boundary_geometry,
    intrinsic_check, shortest_path_metric, SchedulePoint,
};
use crate::graph::{is_connected, ValidationReport, VertexId, WeightedGraph};
use crate::identities::{accretivity_pairing, eigen_residual, greens_formula_triple, ground_state_identity, kato_gap};
use crate::instances::{random_instance, random_real_function, InstanceSpec, PotentialKind};
use crate::operator::{assemble, check_potential_accretive, potential_selfadjoint_defect, BlockOperator};
use crate::semigroup::{
    contraction_certificate, default_grid, heat_apply, kato_domination, mass_conservation, positivity_check,
    resolvent_apply,
};
use crate::CVector;

/// Settings shared by every command.
#[derive(Debug, Clone)]
pub struct Context {
    pub seed: u64,
    pub exec: Execution,
    pub tol: Tolerances,
}

/// Which identity or inequality `check` runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Green,
    Kato,
    Ground,
    Accretive,
    Contraction,
    Positivity,
    Mass,
    Domination,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Green => "green",
            Suite::Kato => "kato",
            Suite::Ground => "ground",
            Suite::Accretive => "accretive",
            Suite::Contraction => "contraction",
            Suite::Positivity => "positivity",
            Suite::Mass => "mass",
            Suite::Domination => "domination",
        }
    }

    /// Random instances that satisfy the suite's preconditions.
    fn instance_spec(self) -> InstanceSpec {
        match self {
            Suite::Green | Suite::Kato => InstanceSpec::bundle(PotentialKind::Arbitrary),
            Suite::Ground => InstanceSpec::bundle(PotentialKind::SelfAdjoint),
            Suite::Accretive | Suite::Contraction => InstanceSpec::bundle(PotentialKind::Accretive),
            Suite::Positivity | Suite::Mass => InstanceSpec::scalar(PotentialKind::Zero),
            Suite::Domination => InstanceSpec::bundle(PotentialKind::Zero),
        }
    }
}

/// Contraction is certified for these exponents.
const EXPONENTS: [f64; 5] = [1.0, 1.5, 2.0, 3.0, f64::INFINITY];
/// Exponents for the finite-p pairing.
const PAIRING_EXPONENTS: [f64; 5] = [1.0, 1.5, 2.0, 3.0, 4.0];

/// One model under test.
struct Subject {
    graph: WeightedGraph,
    bundle: Bundle,
    connection: Connection,
    potential: Potential,
}

impl Subject {
    fn from_model(m: &Model) -> Self {
        Self {
            graph: m.graph.clone(),
            bundle: m.bundle.clone(),
            connection: m.connection.clone(),
            potential: m.potential.clone(),
        }
    }

    fn operator(&self) -> Result<BlockOperator> {
        assemble(&self.graph, &self.bundle, &self.connection, &self.potential)
    }
}

fn section_json(u: &Section) -> Value {
    Value::Array(
        u.values()
            .iter()
            .map(|v| Value::Array(v.iter().map(|z| json!([z.re, z.im])).collect()))
            .collect(),
    )
}

fn report_violations(report: &mut Report, validation: &ValidationReport) {
    if validation.is_valid() {
        report.check(CheckRecord::at_most("graph axioms", 0.0, 0.0));
    }
    for v in &validation.violations {
        let detail = serde_json::to_value(v).expect("violations serialize");
        report.check(CheckRecord::at_most(v.label(), 1.0, 0.0).detail(detail));
    }
}

/// Loads the model, or reports axiom violations and returns `None`.
fn load_model(doc: &Document, ctx: &Context, report: &mut Report, horizon: Option<usize>) -> Result<Option<Model>> {
    let part = doc.graph_part(horizon)?;
    if !part.validation.is_valid() {
        report_violations(report, &part.validation);
        return Ok(None);
    }
    doc.model(part, ctx.seed).map(Some)
}

pub fn validate(doc: &Document, ctx: &Context, report: &mut Report) -> Result<()> {
    let part = doc.graph_part(None)?;
    report_violations(report, &part.validation);
    if !part.validation.is_valid() {
        return Ok(());
    }
    let model = doc.model(part, ctx.seed)?;
    let tol = ctx.tol.get("unitarity");
    report.check(
        CheckRecord::at_most("connection unitarity", model.connection.max_unitarity_defect(), tol)
            .detail(json!({ "validated_on_load": model.connection.is_validated() })),
    );
    let acc = check_potential_accretive(&model.potential);
    report.data(
        "summary",
        json!({
            "vertices": model.graph.n(),
            "edges": model.graph.edge_count(),
            "total_dim": model.bundle.total_dim(),
            "connected": is_connected(&model.graph),
            "identity_connection": model.connection.is_identity(),
        }),
    );
    report.data(
        "potential",
        json!({
            "accretive": acc.margin >= -ctx.tol.get("potential_floor"),
            "accretive_margin": acc.margin,
            "worst_vertex": acc.worst_vertex.map(|x| &model.ids[x]),
            "self_adjoint_defect": potential_selfadjoint_defect(&model.potential),
            "zero": model.potential.is_zero(),
        }),
    );
    Ok(())
}

pub fn spectrum(doc: &Document, ctx: &Context, report: &mut Report, general: bool) -> Result<()> {
    let Some(model) = load_model(doc, ctx, report, None)? else {
        return Ok(());
    };
    let op = match Subject::from_model(&model).operator() {
        Ok(op) => op,
        Err(e) => {
            report.check(CheckRecord::failed("assembly", &e));
            return Ok(());
        }
    };
    if general {
        match op.general_eigenvalues() {
            Ok(values) => report.data("eigenvalues", values.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>()),
            Err(e) => report.check(CheckRecord::failed("general eigenvalues", &e)),
        }
        return Ok(());
    }
    let (values, vectors) = match op.pencil_eigen() {
        Ok(pair) => pair,
        Err(e) => {
            report.check(
                CheckRecord::failed("potential self-adjoint", &e)
                    .detail(json!({ "defect": potential_selfadjoint_defect(&model.potential) })),
            );
            return Ok(());
        }
    };
    let mut worst: f64 = 0.0;
    for (j, &mu) in values.iter().enumerate() {
        let u = Section::from_stacked(&model.bundle, &vectors.column(j).into_owned())?;
        worst = worst.max(eigen_residual(&model.graph, &model.bundle, &model.connection, &model.potential, mu, &u)?);
    }
    report.check(CheckRecord::at_most("pencil eigen residual", worst, ctx.tol.get("eigen_residual")));
    report.data("eigenvalues", &values);
    Ok(())
}

/// Runs `suite` on the document model (instance 0) and on `instances` seeded
/// random models (instances `1..=instances`).
pub fn check(doc: &Document, ctx: &Context, report: &mut Report, suite: Suite, instances: usize, samples: usize) -> Result<()> {
    let Some(model) = load_model(doc, ctx, report, None)? else {
        return Ok(());
    };
    let doc_subject = Subject::from_model(&model);
    let records = ctx.exec.map(instances + 1, |i| {
        let generated;
        let subject = if i == 0 {
            &doc_subject
        } else {
            match random_instance(ctx.seed.wrapping_add(i as u64), suite.instance_spec()) {
                Ok(inst) => {
                    generated = Subject {
                        graph: inst.graph,
                        bundle: inst.bundle,
                        connection: inst.connection,
                        potential: inst.potential,
                    };
                    &generated
                }
                Err(e) => return vec![CheckRecord::failed("instance generation", &e)],
            }
        };
        run_suite(suite, subject, ctx, i, samples)
    });
    for (i, recs) in records.into_iter().enumerate() {
        for rec in recs {
            report.check(rec.in_suite(suite.name(), i));
        }
    }
    Ok(())
}

fn run_suite(suite: Suite, s: &Subject, ctx: &Context, index: usize, samples: usize) -> Vec<CheckRecord> {
    let seed = ctx.seed ^ ((index as u64) << 32);
    let tol = &ctx.tol;
    let result: Result<Vec<CheckRecord>> = (|| match suite {
        Suite::Green => {
            let mut rng = stream_rng(seed, 1);
            let mut worst: f64 = 0.0;
            for _ in 0..samples {
                let u = Section::random(&s.bundle, &mut rng);
                let v = Section::random(&s.bundle, &mut rng);
                let r = greens_formula_triple(&s.graph, &s.bundle, &s.connection, &s.potential, &u, &v)?;
                worst = worst.max(r.relative_deviation());
            }
            Ok(vec![CheckRecord::at_most("green triple", worst, tol.get("green"))])
        }
        Suite::Kato => {
            let mut rng = stream_rng(seed, 2);
            let mut worst = f64::INFINITY;
            for _ in 0..samples {
                let u = Section::random(&s.bundle, &mut rng);
                worst = worst.min(kato_gap(&s.graph, &s.bundle, &s.connection, &u)?.min_gap);
            }
            Ok(vec![CheckRecord::at_least("kato gap", worst.min(0.0), -tol.get("kato"))
                .detail(json!({ "min_gap": worst, "unitary_defect": s.connection.max_unitarity_defect() }))])
        }
        Suite::Ground => {
            let (values, vectors) = s.operator()?.pencil_eigen()?;
            let mut rng = stream_rng(seed, 3);
            let mut worst: f64 = 0.0;
            let mut worst_residual: f64 = 0.0;
            for (j, &mu) in values.iter().enumerate().take(samples.max(1)) {
                let u = Section::from_stacked(&s.bundle, &vectors.column(j).into_owned())?;
                let g = random_real_function(&mut rng, s.graph.n());
                let r = ground_state_identity(&s.graph, &s.bundle, &s.connection, &s.potential, mu, &u, &g)?;
                worst = worst.max(r.deviation / r.scale);
                worst_residual = worst_residual.max(r.residual);
            }
            Ok(vec![CheckRecord::at_most("ground state transform", worst, tol.get("ground"))
                .detail(json!({ "max_eigen_residual": worst_residual }))])
        }
        Suite::Accretive => {
            let mut out = vec![potential_accretive_record(&s.potential, tol)];
            if !out[0].pass {
                return Ok(out);
            }
            let mut rng = stream_rng(seed, 4);
            let sections: Vec<Section> = (0..samples).map(|_| Section::random(&s.bundle, &mut rng)).collect();
            for p in PAIRING_EXPONENTS {
                let mut worst = f64::INFINITY;
                for u in &sections {
                    let r = accretivity_pairing(&s.graph, &s.bundle, &s.connection, &s.potential, u, p)?;
                    worst = worst.min(r.value / r.scale);
                }
                out.push(CheckRecord::at_least(format!("lp pairing p={p}"), worst.min(0.0), -tol.get("accretivity"))
                    .detail(json!({ "min_relative_value": worst })));
            }
            Ok(out)
        }
        Suite::Contraction => {
            let mut out = vec![potential_accretive_record(&s.potential, tol)];
            if !out[0].pass {
                return Ok(out);
            }
            let ps: Vec<LpExponent> = EXPONENTS.iter().map(|&p| LpExponent::from(p)).collect();
            let grid = default_grid();
            let cert = contraction_certificate(&s.operator()?, &ps, &grid, &grid, samples, seed, Execution::Sequential)?;
            let excess = cert.max_semigroup_ratio.max(cert.max_resolvent_ratio) - 1.0;
            out.push(CheckRecord::at_most("lp contraction", excess, tol.get("contraction")).detail(json!({
                "max_semigroup_ratio": cert.max_semigroup_ratio,
                "max_resolvent_ratio": cert.max_resolvent_ratio,
                "per_exponent": cert.per_exponent,
            })));
            Ok(out)
        }
        Suite::Positivity => {
            let r = positivity_check(&s.operator()?, &default_grid())?;
            Ok(vec![CheckRecord::at_least("resolvent positivity", r.min_entry, -tol.get("positivity"))
                .detail(json!({ "worst_xi": r.worst_xi }))])
        }
        Suite::Mass => {
            let r = mass_conservation(&s.operator()?, &default_grid())?;
            Ok(vec![CheckRecord::at_most("mass conservation", r.max_deviation, tol.get("mass"))
                .detail(json!({ "deviations": r.deviations }))])
        }
        Suite::Domination => {
            // Domination concerns the Laplacian part only.
            let bundle_op = assemble(&s.graph, &s.bundle, &s.connection, &Potential::zeros(&s.bundle))?;
            let line = Bundle::uniform(s.graph.n(), 1)?;
            let scalar_op = assemble(
                &s.graph,
                &line,
                &crate::bundle::identity_connection(&s.graph, &line)?,
                &Potential::zeros(&line),
            )?;
            let r = kato_domination(&bundle_op, &scalar_op, &default_grid(), samples, seed, Execution::Sequential)?;
            Ok(vec![CheckRecord::at_most("semigroup domination", r.max_violation, tol.get("domination"))
                .detail(json!({ "samples": r.samples, "potential_ignored": !s.potential.is_zero() }))])
        }
    })();
    result.unwrap_or_else(|e| vec![CheckRecord::failed(format!("{} preconditions", suite.name()), &e)])
}

fn potential_accretive_record(w: &Potential, tol: &Tolerances) -> CheckRecord {
    let acc = check_potential_accretive(w);
    CheckRecord::at_least("potential accretive", acc.margin, -tol.get("potential_floor"))
        .detail(json!({ "worst_vertex": acc.worst_vertex }))
}

pub fn heat(doc: &Document, ctx: &Context, report: &mut Report, t: f64, input: &Path) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::parse("--t", format!("time must be finite and nonnegative, got {t}")));
    }
    let Some(model) = load_model(doc, ctx, report, None)? else {
        return Ok(());
    };
    let u = read_section(input, &model.bundle)?;
    match Subject::from_model(&model).operator().and_then(|op| heat_apply(&op, t, &u)) {
        Ok(r) => report.data(
            "heat",
            json!({
                "t": r.t,
                "method": r.method,
                "pade_degree": r.pade_degree,
                "squarings": r.squarings,
                "error_estimate": r.error_estimate,
                "output": section_json(&r.output),
            }),
        ),
        Err(e) => report.check(CheckRecord::failed("heat semigroup", &e)),
    }
    Ok(())
}

pub fn resolvent(doc: &Document, ctx: &Context, report: &mut Report, xi: f64, input: &Path) -> Result<()> {
    if !xi.is_finite() {
        return Err(Error::parse("--xi", "spectral parameter must be finite"));
    }
    let Some(model) = load_model(doc, ctx, report, None)? else {
        return Ok(());
    };
    let f = read_section(input, &model.bundle)?;
    match Subject::from_model(&model).operator().and_then(|op| resolvent_apply(&op, xi, &f)) {
        Ok(r) => {
            report.check(CheckRecord::at_most("resolvent residual", r.residual, ctx.tol.get("resolvent_residual")));
            report.data("resolvent", json!({ "xi": r.xi, "output": section_json(&r.output) }));
        }
        Err(e) => report.check(CheckRecord::failed("resolvent solve", &e)),
    }
    Ok(())
}

pub fn metric(doc: &Document, ctx: &Context, report: &mut Report, epsilon: Option<f64>, horizon: Option<usize>) -> Result<()> {
    if let Some(eps) = epsilon {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::parse("--epsilon", "epsilon must be positive and finite"));
        }
    }
    let Some(model) = load_model(doc, ctx, report, horizon)? else {
        return Ok(());
    };
    let pm = match model.path_metric() {
        Ok(pm) => pm,
        Err(e) => {
            report.check(CheckRecord::failed("path metric", &e));
            return Ok(());
        }
    };
    let intrinsic = intrinsic_check(&model.graph, &pm);
    report.check(
        CheckRecord::at_most("intrinsic", intrinsic.max_sum, 1.0 + ctx.tol.get("intrinsic"))
            .detail(json!({ "worst_vertex": intrinsic.worst_vertex.map(|x| &model.ids[x]) })),
    );
    report.data(
        "sigma",
        pm.entries()
            .map(|(x, y, s)| json!({ "u": model.ids[x], "v": model.ids[y], "value": s }))
            .collect::<Vec<_>>(),
    );
    let d = model.boundary_distance()?;
    report.data("boundary_distance", &d);
    if model.graph.n() > 0 {
        report.data("root_distance", shortest_path_metric(&model.graph, &pm, VertexId(0))?);
    }
    if let Some(eps) = epsilon {
        let geo = match (model.effective_family(), &model.family) {
            (Some(family), Some(spec)) => family_boundary_geometry(&family, spec.horizon, eps)?,
            _ => boundary_geometry(&model.graph, &d, eps)?,
        };
        let ids = |xs: &[usize]| xs.iter().map(|&x| model.ids[x].clone()).collect::<Vec<_>>();
        report.data(
            "boundary_geometry",
            json!({ "epsilon": eps, "x_eps": ids(&geo.x_eps), "boundary": ids(&geo.boundary) }),
        );
    }
    Ok(())
}

/// `"default"` or comma-separated `rho:epsilon:alpha` triples.
pub fn parse_schedule(s: &str) -> Result<Vec<SchedulePoint>> {
    if s.trim() == "default" {
        return Ok(default_schedule());
    }
    s.split(',')
        .map(|item| {
            let parts: Vec<&str> = item.trim().split(':').collect();
            let nums: Vec<f64> = parts
                .iter()
                .map(|p| p.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::parse("--schedule", format!("'{item}' is not rho:epsilon:alpha")))?;
            match nums[..] {
                [rho, epsilon, alpha] if 0.0 < epsilon && epsilon < rho && rho < 0.5 && alpha > 0.0 => {
                    Ok(SchedulePoint { rho, epsilon, alpha })
                }
                [_, _, _] => Err(Error::parse("--schedule", format!("'{item}' needs 0 < epsilon < rho < 1/2 and alpha > 0"))),
                _ => Err(Error::parse("--schedule", format!("'{item}' is not rho:epsilon:alpha"))),
            }
        })
        .collect()
}

/// `--lambda auto` is `−C − 3/2`.
pub fn parse_lambda(s: &str, c: f64) -> Result<f64> {
    if s.trim() == "auto" {
        return Ok(-c - 1.5);
    }
    match s.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::parse("--lambda", format!("expected 'auto' or a number, got '{s}'"))),
    }
}

pub fn agmon(doc: &Document, ctx: &Context, report: &mut Report, c: f64, lambda: &str, schedule: &str, samples: usize) -> Result<()> {
    if !c.is_finite() {
        return Err(Error::parse("--C", "constant must be finite"));
    }
    let lambda = parse_lambda(lambda, c)?;
    let schedule = parse_schedule(schedule)?;
    let Some(model) = load_model(doc, ctx, report, None)? else {
        return Ok(());
    };
    let pm = match model.path_metric() {
        Ok(pm) => pm,
        Err(e) => {
            report.check(CheckRecord::failed("path metric", &e));
            return Ok(());
        }
    };
    let intrinsic = intrinsic_check(&model.graph, &pm);
    report.check(CheckRecord::at_most("intrinsic", intrinsic.max_sum, 1.0 + ctx.tol.get("intrinsic")));
    let d = model.boundary_distance()?;
    let (g, b, conn, w) = (&model.graph, &model.bundle, &model.connection, &model.potential);
    let hyp = match agmon_hypothesis_check(g, b, conn, w, &d, c, samples, ctx.seed, ctx.exec) {
        Ok(h) => h,
        Err(e) => {
            report.check(CheckRecord::failed("agmon hypothesis", &e));
            return Ok(());
        }
    };
    let pointwise = CheckRecord::at_least("agmon pointwise", hyp.pointwise_margin, -ctx.tol.get("agmon_pointwise"))
        .detail(json!({ "worst_vertex": hyp.worst_vertex.map(|x| &model.ids[x]) }));
    let form = CheckRecord::at_least("agmon form", hyp.form_margin, -ctx.tol.get("agmon_form"))
        .detail(json!({ "lambda": hyp.lambda, "samples": hyp.samples }));
    let hypothesis_holds = pointwise.pass && form.pass;
    report.check(pointwise);
    report.check(form);

    let v = match solution_for(&model, lambda)? {
        Some((v, mu)) => {
            report.data("solution", json!({ "nontrivial": true, "eigenvalue": mu }));
            v
        }
        None => {
            report.data("solution", json!({ "nontrivial": false }));
            Section::zeros(b)
        }
    };
    // The lower side of the chain uses the form inequality, which the
    // hypothesis only yields for c1 = −λ − C − 1/2 > 0.
    let c1 = -lambda - c - 0.5;
    let c1 = (hypothesis_holds && c1 > 0.0).then_some(c1);
    let from_x0 = shortest_path_metric(g, &pm, VertexId(0))?;
    match agmon_vanishing_experiment(g, b, conn, w, lambda, &v, &d, &from_x0, &schedule, c1) {
        Ok(r) => {
            let slack = r
                .points
                .iter()
                .flat_map(|p| {
                    let upper = (p.rhs_upper - p.lhs) / p.scale;
                    let lower = p.rhs_lower.map(|lo| (p.lhs - lo) / p.scale);
                    std::iter::once(upper).chain(lower)
                })
                .fold(f64::INFINITY, f64::min);
            report.check(CheckRecord::at_least("agmon chain", slack, -ctx.tol.get("agmon_chain")).detail(json!({
                "lambda": r.lambda,
                "c1": c1,
                "certified_norm_bound": r.certified_norm_bound,
            })));
            report.data("chain", &r.points);
        }
        Err(e) => report.check(CheckRecord::failed("agmon chain", &e)),
    }
    Ok(())
}

/// An eigensection for `λ` when `λ` is a pencil eigenvalue to working
/// precision; otherwise `(H̃ − λ)v = 0` only has `v = 0` on a finite graph.
fn solution_for(model: &Model, lambda: f64) -> Result<Option<(Section, f64)>> {
    let op = assemble(&model.graph, &model.bundle, &model.connection, &model.potential)?;
    let (values, vectors) = op.pencil_eigen()?;
    let Some((j, &mu)) = values
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - lambda).abs().total_cmp(&(b.1 - lambda).abs()))
    else {
        return Ok(None);
    };
    let column: CVector = vectors.column(j).into_owned();
    let v = Section::from_stacked(&model.bundle, &column)?;
    let r = eigen_residual(&model.graph, &model.bundle, &model.connection, &model.potential, lambda, &v)?;
    Ok((r <= crate::tolerance::EIGEN_RESIDUAL).then(|| (v, mu)))
}
