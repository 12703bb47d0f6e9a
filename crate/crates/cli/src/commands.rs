use serde::Serialize;
use serde_json::{json, Value};
use shilov_core::envelope::{certify_embedding, compute_envelope, EnvelopeError, EnvelopeOptions, EnvelopePresentation, ScanOrder};
use shilov_core::funcspace::{boundary, crosscheck_diagonal, FuncError, FunctionSpace};
use shilov_core::matcore::MatError;
use shilov_core::stargen::{validate_space, MatrixSpace, SpaceReport, StarError};
use shilov_core::unitize::{
    build_x1, check_envelope_of_unitization, distance_to_unit, dominating_element, x1_cone_member, xplus_cone_member,
    Domination, Membership, UnitChoice, UnitizeError, UnitizedElement,
};

use crate::input::{ElementFile, ParseError, SpaceFile};

/// Why a command did not produce a result.
#[derive(Debug)]
pub enum Failure {
    Input(String),
    ConeDoesNotSpan(String),
    Inconclusive(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Input(_) => 1,
            Failure::ConeDoesNotSpan(_) => 2,
            Failure::Inconclusive(_) => 3,
        }
    }

    pub fn status(&self) -> &'static str {
        match self {
            Failure::Input(_) => "input_error",
            Failure::ConeDoesNotSpan(_) => "cone_does_not_span",
            Failure::Inconclusive(_) => "inconclusive",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::ConeDoesNotSpan(m) | Failure::Inconclusive(m) => m,
        }
    }
}

impl From<ParseError> for Failure {
    fn from(e: ParseError) -> Self {
        Failure::Input(e.to_string())
    }
}

fn mat_failure(e: &MatError) -> Failure {
    match e {
        MatError::NonFinite | MatError::ShapeMismatch { .. } | MatError::NotSquare(_) => Failure::Input(e.to_string()),
        _ => Failure::Inconclusive(e.to_string()),
    }
}

impl From<StarError> for Failure {
    fn from(e: StarError) -> Self {
        match &e {
            StarError::NoGenerators | StarError::ZeroSpace => Failure::Input(e.to_string()),
            StarError::Mat(m) => mat_failure(m),
            _ => Failure::Inconclusive(e.to_string()),
        }
    }
}

impl From<EnvelopeError> for Failure {
    fn from(e: EnvelopeError) -> Self {
        match e {
            EnvelopeError::ConeDoesNotSpan { .. } => Failure::ConeDoesNotSpan(e.to_string()),
            EnvelopeError::Star(s) => s.into(),
            EnvelopeError::Mat(ref m) => mat_failure(m),
            _ => Failure::Inconclusive(e.to_string()),
        }
    }
}

impl From<UnitizeError> for Failure {
    fn from(e: UnitizeError) -> Self {
        match e {
            UnitizeError::NotSelfadjoint { .. } | UnitizeError::ElementNotInSpace { .. } | UnitizeError::BadParameter(_) => {
                Failure::Input(e.to_string())
            }
            UnitizeError::Envelope(e) => e.into(),
            UnitizeError::Star(s) => s.into(),
            _ => Failure::Inconclusive(e.to_string()),
        }
    }
}

impl From<FuncError> for Failure {
    fn from(e: FuncError) -> Self {
        match e {
            FuncError::Shape { .. } | FuncError::NonFinite | FuncError::ZeroSpace => Failure::Input(e.to_string()),
            FuncError::ConeDoesNotSpan => Failure::ConeDoesNotSpan(e.to_string()),
            FuncError::Envelope(e) => e.into(),
            _ => Failure::Inconclusive(e.to_string()),
        }
    }
}

/// A finished command: result payload, human summary and exit code.
pub struct Outcome {
    pub result: Value,
    pub summary: String,
    pub exit_code: i32,
    pub status: &'static str,
}

impl Outcome {
    fn ok(result: Value, summary: String) -> Self {
        Self { result, summary, exit_code: 0, status: "ok" }
    }
}

fn to_value(v: &impl Serialize) -> Value {
    serde_json::to_value(v).expect("report values serialize")
}

fn blocks_text(blocks: &[usize]) -> String {
    blocks.iter().map(|k| format!("M_{k}")).collect::<Vec<_>>().join(" ⊕ ")
}

pub struct EnvelopeArgs {
    pub tol: f64,
    pub seed: u64,
    pub scan: ScanOrder,
    pub max_level: usize,
    pub samples: usize,
}

fn load_space(file: &SpaceFile) -> Result<(MatrixSpace, SpaceReport), Failure> {
    Ok(validate_space(&file.matrices())?)
}

fn envelope_of(x: &MatrixSpace, tol: f64, seed: u64, scan: ScanOrder) -> Result<EnvelopePresentation, Failure> {
    Ok(compute_envelope(x, EnvelopeOptions { tol, seed, scan })?)
}

fn envelope_summary(env: &EnvelopePresentation) -> Value {
    let blocks: Vec<Value> = env
        .decomposition
        .block_sizes
        .iter()
        .enumerate()
        .map(|(i, &(k, m))| json!({ "index": i, "k": k, "multiplicity": m, "retained": env.retained.contains(&i) }))
        .collect();
    json!({
        "algebra_dim": env.algebra.dim(),
        "blocks": blocks,
        "abstract_blocks": env.abstract_blocks,
    })
}

pub fn envelope(file: &SpaceFile, a: &EnvelopeArgs) -> Result<Outcome, Failure> {
    let (x, report) = load_space(file)?;
    let env = envelope_of(&x, a.tol, a.seed, a.scan)?;
    let cert = certify_embedding(&env, a.max_level, a.samples, a.seed)?;
    let mut result = envelope_summary(&env);
    result["space"] = to_value(&report);
    result["elimination_trace"] = to_value(&env.elimination_trace);
    result["certificate"] = to_value(&cert);
    let summary = format!(
        "dim X = {}, dim C*(X) = {}\nC*_e(X) ≅ {}\nremoved {} of {} blocks\nembedding certified to level {}: {} (max discrepancy {:.3e})",
        x.dim(),
        env.algebra.dim(),
        blocks_text(&env.abstract_blocks),
        env.removed().len(),
        env.decomposition.len(),
        a.max_level,
        if cert.passed { "yes" } else { "NO" },
        cert.max_discrepancy,
    );
    let mut out = Outcome::ok(result, summary);
    if !cert.passed {
        out.exit_code = 3;
        out.status = "certification_failed";
    }
    Ok(out)
}

fn domination_text(d: &Domination) -> &'static str {
    match d {
        Domination::Found { .. } => "found",
        Domination::None { .. } => "none",
        Domination::Inconclusive { .. } => "inconclusive",
    }
}

pub fn unitize(file: &SpaceFile, tol: f64, seed: u64, unit: UnitChoice) -> Result<Outcome, Failure> {
    let (x, _) = load_space(file)?;
    let env = envelope_of(&x, tol, seed, ScanOrder::default())?;
    let x1 = build_x1(&env)?;
    let d = distance_to_unit(&env, unit)?;
    let dom = dominating_element(&env, unit, tol)?;
    let rep = check_envelope_of_unitization(&env)?;
    let mut result = envelope_summary(&env);
    result["x1"] = json!({ "dim": x1.space.dim(), "unital": x1.unital, "unit": x1.unit });
    result["distance"] = to_value(&d);
    result["dominating"] = to_value(&dom);
    result["envelope_of_x1"] = to_value(&rep);
    let summary = format!(
        "C*_e(X) ≅ {}\nX¹: dim {}{}\nd(X, 1) = {:.6} ({} unit)\ndominating element: {}\nC*_e(X¹) = C*_e(X)¹: {}",
        blocks_text(&env.abstract_blocks),
        x1.space.dim(),
        if x1.unital { ", unital" } else { "" },
        d.d,
        unit_name(unit),
        domination_text(&dom),
        if rep.equal { "yes" } else { "NO" },
    );
    let mut out = Outcome::ok(result, summary);
    if matches!(dom, Domination::Inconclusive { .. }) {
        out.exit_code = 3;
        out.status = "inconclusive";
    }
    Ok(out)
}

pub fn unit_name(u: UnitChoice) -> &'static str {
    match u {
        UnitChoice::EnvelopeUnit => "envelope",
        UnitChoice::AmbientIdentity => "ambient",
    }
}

pub fn distance(file: &SpaceFile, tol: f64, seed: u64, unit: UnitChoice) -> Result<Outcome, Failure> {
    let (x, _) = load_space(file)?;
    let env = envelope_of(&x, tol, seed, ScanOrder::default())?;
    let d = distance_to_unit(&env, unit)?;
    let dom = dominating_element(&env, unit, tol)?;
    let result = json!({ "unit": unit, "distance": to_value(&d), "dominating": to_value(&dom) });
    let summary = format!("d(X, 1) = {:.6} ({} unit)\ndominating element: {}", d.d, unit_name(unit), domination_text(&dom));
    let mut out = Outcome::ok(result, summary);
    if matches!(dom, Domination::Inconclusive { .. }) {
        out.exit_code = 3;
        out.status = "inconclusive";
    }
    Ok(out)
}

pub enum ConeKind {
    X1,
    XPlus,
}

pub struct ConeArgs<'a> {
    pub tol: f64,
    pub seed: u64,
    pub kind: ConeKind,
    pub eps: &'a [f64],
    pub delta: f64,
}

pub fn cone(file: &SpaceFile, element: &ElementFile, a: &ConeArgs) -> Result<Outcome, Failure> {
    let gens = file.matrices();
    let (x, _) = load_space(file)?;
    let env = envelope_of(&x, a.tol, a.seed, ScanOrder::default())?;
    let (v, scalar) = element.resolve(&gens, &x)?;
    let el = UnitizedElement::new(v, scalar)?;
    let (name, verdict) = match a.kind {
        ConeKind::X1 => ("X¹", x1_cone_member(&env, &el, a.tol)?),
        ConeKind::XPlus => ("X⁺", xplus_cone_member(&env, &el, a.eps, a.delta, a.tol)?),
    };
    let member = match verdict.member {
        Membership::Yes => "yes",
        Membership::No => "no",
        Membership::Inconclusive => "inconclusive",
    };
    let summary = format!("level {} element in the {name} cone: {member}", el.level());
    let mut out = Outcome::ok(json!({ "cone": name, "verdict": to_value(&verdict) }), summary);
    if verdict.member == Membership::Inconclusive {
        out.exit_code = 3;
        out.status = "inconclusive";
    }
    Ok(out)
}

pub fn boundary_cmd(file: &SpaceFile, seed: u64, crosscheck: bool) -> Result<Outcome, Failure> {
    let g = file
        .functions()
        .ok_or_else(|| Failure::Input("boundary requires a space file of kind \"function\"".into()))?;
    let fs = FunctionSpace::new(file.points.unwrap_or(0), &g)?;
    let b = boundary(&fs)?;
    let mut result = json!({
        "dim": fs.dim(),
        "conjugation_closed": fs.conjugation_closed,
        "boundary": b.boundary_points(),
        "detail": to_value(&b),
    });
    let mut summary = format!(
        "∂X = {:?}\nclasses {:?}, vanishing {:?}",
        b.boundary_points(),
        b.classes,
        b.vanishing
    );
    let mut out_code = 0;
    if crosscheck {
        let c = crosscheck_diagonal(&fs, seed)?;
        summary.push_str(&format!("\ndiagonal envelope agrees: {}", if c.agree { "yes" } else { "NO" }));
        if !c.agree {
            out_code = 3;
        }
        result["crosscheck"] = to_value(&c);
    }
    let mut out = Outcome::ok(result, summary);
    if out_code != 0 {
        out.exit_code = out_code;
        out.status = "crosscheck_failed";
    }
    Ok(out)
}
