use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};

use super::parse::{parse_group, parse_label, parse_label_list, parse_measure, parse_ring};
use super::{
    selftest, AoArgs, AutArgs, BoundaryArgs, CliError, GreenArgs, Kernel, MartinArgs, Report,
    RingArgs, RingKind, WalkArgs, WalkSpec,
};
use crate::fusion::{FusionRing, Label};
use crate::moneq::{
    amenability_flags, aut_normal_form, decide_moneq_ao, decide_moneq_aut, delta_form,
    fq_matrix, iso_invariant, normal_form_kac_subgroup, su2_partner, validate_aof, walk_of,
    AlgebraSpec, AoFMatrix, CMatrix, MatrixJson, QuantumGroupInput,
};
use crate::potential::oracle::{monte_carlo_green, windowed_green, McConfig};
use crate::potential::{
    first_moment, green_row, martin_limit, martin_paper, martin_std, poisson_triviality_test,
    transience_diagnostic, GreenEntry, GreenOptions, PotentialError, Transience,
};
use crate::walk::{is_generating, CentralWalk, Generation};

/// Largest fusion table the `ring` command prints.
const MAX_TABLE_LABELS: usize = 256;
/// Transition matrices of equivalent walks must agree to this.
const WALK_EQ_TOL: f64 = 1e-12;

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report values serialize")
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

fn report(kind: &str, config: Value, seed: u64) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("kind".into(), kind.into());
    m.insert("config".into(), config);
    m.insert("seed".into(), seed.into());
    m
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Input(format!("{name} must be positive, got {v}")))
    }
}

struct Resolved {
    walk: CentralWalk,
    generation: Generation,
    overridden: bool,
}

impl Resolved {
    fn walk_json(&self) -> Value {
        json!({ "ring": self.walk.ring(), "measure": self.walk.measure() })
    }

    fn generation_json(&self) -> Value {
        json!({ "verdict": self.generation, "override": self.overridden })
    }
}

fn resolve(spec: &WalkSpec) -> Result<Resolved, CliError> {
    let ring = parse_ring(&spec.ring)?;
    let mu = parse_measure(&spec.mu, &ring)?;
    let generation = is_generating(&ring, &mu, spec.generation_horizon)?;
    let generating = generation == Generation::Generating;
    if !generating && !spec.allow_non_generating {
        return Err(CliError::Input(format!(
            "measure is not generating ({}); pass --allow-non-generating to run anyway",
            to_value(&generation).as_str().unwrap_or_default()
        )));
    }
    Ok(Resolved {
        walk: CentralWalk::new(ring, mu)?,
        generation,
        overridden: !generating,
    })
}

pub fn ring(a: &RingArgs, config: Value) -> Result<Report, CliError> {
    let missing = |flag: &str| CliError::Input(format!("--kind needs {flag}"));
    let ring = match (&a.ring, a.kind) {
        (Some(s), _) => parse_ring(s)?,
        (None, Some(RingKind::Su2)) => FusionRing::su2(a.t.ok_or_else(|| missing("--t"))?)?,
        (None, Some(RingKind::So3)) => {
            FusionRing::so3(a.delta2.ok_or_else(|| missing("--delta2"))?)?
        }
        (None, Some(RingKind::Group)) => FusionRing::group_dual(parse_group(
            a.group.as_deref().ok_or_else(|| missing("--group"))?,
        )?),
        (None, None) => return Err(CliError::Input("give --ring or --kind".into())),
    };
    let labels = ring.labels_up_to(a.max);
    if labels.len() > MAX_TABLE_LABELS {
        return Err(CliError::Input(format!(
            "{} labels exceed the table limit of {MAX_TABLE_LABELS}",
            labels.len()
        )));
    }
    let dims = labels
        .iter()
        .map(|x| ring.quantum_dimension(x))
        .collect::<Result<Vec<f64>, _>>()?;
    let mut fusion = Vec::new();
    for x in &labels {
        for y in &labels {
            let d: Vec<Value> = ring
                .tensor_decompose(x, y)?
                .into_iter()
                .map(|(z, m)| json!({ "label": z, "mult": m }))
                .collect();
            fusion.push(json!({ "x": x, "y": y, "decomposition": d }));
        }
    }
    let check_labels: Vec<Label> = labels.iter().take(selftest::AXIOM_CHECK_LABELS).cloned().collect();
    let checks = selftest::fusion_checks(&ring, &check_labels)?;

    let mut m = report("ring", config, a.output.seed);
    m.insert("ring".into(), to_value(&ring));
    m.insert("labels".into(), to_value(&labels));
    m.insert("dims".into(), to_value(&dims));
    m.insert("fusion".into(), fusion.into());
    m.insert(
        "checks".into(),
        json!({ "labels": check_labels, "results": checks }),
    );
    let rows = labels
        .iter()
        .zip(&dims)
        .map(|(x, d)| vec![x.to_string(), num(*d)])
        .collect();
    Ok(Report {
        json: m.into(),
        csv: Some((vec!["label", "dim"], rows)),
    })
}

pub fn walk(a: &WalkArgs, config: Value) -> Result<Report, CliError> {
    let r = resolve(&a.walk)?;
    let from = parse_label(&a.from)?;
    let dist = r.walk.n_step(&from, a.n)?;
    let mass: f64 = dist.values().sum();
    let mut m = report("walk", config, a.output.seed);
    m.insert("walk".into(), r.walk_json());
    m.insert("from".into(), to_value(&from));
    m.insert("n".into(), a.n.into());
    m.insert(
        "distribution".into(),
        dist.iter()
            .map(|(l, p)| json!({ "label": l, "p": p }))
            .collect::<Vec<_>>()
            .into(),
    );
    m.insert(
        "diagnostics".into(),
        json!({
            "generation": r.generation_json(),
            "period": r.walk.period(),
            "total_mass": mass,
        }),
    );
    let rows = dist
        .iter()
        .map(|(l, p)| vec![l.to_string(), num(*p)])
        .collect();
    Ok(Report {
        json: m.into(),
        csv: Some((vec!["label", "p"], rows)),
    })
}

/// Results per `x` in input order; the first failure in that order wins,
/// so the outcome does not depend on scheduling.
fn per_x<T: Send>(
    xs: &[Label],
    f: impl Fn(&Label) -> Result<T, PotentialError> + Sync + Send,
) -> Result<Vec<T>, PotentialError> {
    let results: Vec<Result<T, PotentialError>> = xs.par_iter().map(f).collect();
    results.into_iter().collect()
}

/// Turns verdict-like potential errors into a status value.
fn soft_failure(e: PotentialError) -> Result<(String, Value), CliError> {
    let status = match &e {
        PotentialError::NonConvergence { .. } => "non_convergent",
        PotentialError::Recurrent => "recurrent",
        PotentialError::MartinNotConverged { .. } => "not_converged",
        _ => return Err(e.into()),
    };
    Ok((
        status.into(),
        json!({ "message": e.to_string(), "detail": to_value(&e) }),
    ))
}

fn integer_window(ring: &FusionRing, window: u32, wanted: &[&Label]) -> Result<Vec<Label>, CliError> {
    if !ring.is_integer_labeled() {
        return Err(CliError::Input(
            "--window needs an integer-labeled ring".into(),
        ));
    }
    if let Some(l) = wanted.iter().find(|l| l.index().is_none_or(|i| i > window)) {
        return Err(CliError::Input(format!("label {l} lies outside the window 0..={window}")));
    }
    Ok(ring.labels_up_to(window))
}

pub fn green(a: &GreenArgs, config: Value) -> Result<Report, CliError> {
    positive("--tol", a.tol)?;
    if a.max_terms == 0 {
        return Err(CliError::Input("--max-terms must be positive".into()));
    }
    let r = resolve(&a.walk)?;
    let walk = &r.walk;
    let xs = parse_label_list(&a.x)?;
    let ys = parse_label_list(&a.y)?;
    let opts = GreenOptions {
        tol: a.tol,
        max_terms: a.max_terms,
    };
    let window = match a.window {
        Some(w) => {
            let wanted: Vec<&Label> = xs.iter().chain(&ys).collect();
            Some(integer_window(walk.ring(), w, &wanted)?)
        }
        None => None,
    };
    let transience = transience_diagnostic(walk)?;

    let mut m = report("green", config, a.output.seed);
    m.insert("walk".into(), r.walk_json());
    let moment = first_moment(walk.ring(), walk.measure()).ok();
    let diagnostics = |extra: Value| {
        json!({
            "generation": r.generation_json(),
            "transience": transience,
            "first_moment": moment,
            "options": opts,
            "oracles": extra,
        })
    };

    let rows: Vec<GreenEntry> = match per_x(&xs, |x| green_row(walk, x, &ys, &opts)) {
        Ok(rows) => rows.into_iter().flatten().collect(),
        Err(e) => {
            let (status, err) = soft_failure(e)?;
            m.insert("status".into(), status.into());
            m.insert("error".into(), err);
            m.insert("entries".into(), Value::Array(Vec::new()));
            m.insert("diagnostics".into(), diagnostics(Value::Null));
            return Ok(Report {
                json: m.into(),
                csv: Some((vec!["x", "y", "value", "tail", "terms"], Vec::new())),
            });
        }
    };

    let window_values = match &window {
        Some(labels) => {
            let g = windowed_green(walk, labels)?;
            let pos = |l: &Label| l.index().unwrap() as usize;
            Some(rows.iter().map(|e| g[(pos(&e.x), pos(&e.y))]).collect::<Vec<f64>>())
        }
        None => None,
    };
    let mc = match a.mc_paths {
        Some(paths) => {
            let cfg = McConfig {
                paths,
                max_steps: a.mc_max_steps,
                kill_height: a.mc_kill_height,
                seed: a.output.seed,
            };
            let mut est = Vec::new();
            for x in &xs {
                est.extend(monte_carlo_green(walk, x, &ys, &cfg)?);
            }
            Some((cfg, est))
        }
        None => None,
    };

    let mut header = vec!["x", "y", "value", "tail", "terms"];
    if window_values.is_some() {
        header.push("window_value");
    }
    if mc.is_some() {
        header.extend(["mc_mean", "mc_std_err"]);
    }
    let mut entries = Vec::new();
    let mut csv_rows = Vec::new();
    for (i, e) in rows.iter().enumerate() {
        let mut v = to_value(e);
        let mut row = vec![
            e.x.to_string(),
            e.y.to_string(),
            num(e.value),
            num(e.tail_estimate),
            e.terms_used.to_string(),
        ];
        if let Some(w) = &window_values {
            v["window_value"] = w[i].into();
            row.push(num(w[i]));
        }
        if let Some((_, est)) = &mc {
            v["mc_mean"] = est[i].mean.into();
            v["mc_std_err"] = est[i].std_err.into();
            row.extend([num(est[i].mean), num(est[i].std_err)]);
        }
        entries.push(v);
        csv_rows.push(row);
    }
    m.insert("status".into(), "ok".into());
    m.insert("entries".into(), entries.into());
    m.insert(
        "diagnostics".into(),
        diagnostics(json!({
            "window": a.window,
            "monte_carlo": mc.as_ref().map(|(cfg, _)| cfg),
        })),
    );
    Ok(Report {
        json: m.into(),
        csv: Some((header, csv_rows)),
    })
}

pub fn martin(a: &MartinArgs, config: Value) -> Result<Report, CliError> {
    positive("--tol", a.tol)?;
    positive("--limit-tol", a.limit_tol)?;
    let r = resolve(&a.walk)?;
    let walk = &r.walk;
    let xs = parse_label_list(&a.x)?;
    let opts = GreenOptions::with_tol(a.tol);
    let transience = transience_diagnostic(walk)?;

    let mut m = report("martin", config, a.output.seed);
    m.insert("walk".into(), r.walk_json());
    m.insert("kernel".into(), to_value(&a.kernel));
    m.insert(
        "diagnostics".into(),
        json!({
            "generation": r.generation_json(),
            "transience": transience,
            "options": opts,
        }),
    );
    let fail = |mut m: Map<String, Value>, e: PotentialError, header: Vec<&'static str>| {
        let (status, err) = soft_failure(e)?;
        m.insert("status".into(), status.into());
        m.insert("error".into(), err);
        m.insert("entries".into(), Value::Array(Vec::new()));
        Ok::<_, CliError>(Report {
            json: m.into(),
            csv: Some((header, Vec::new())),
        })
    };

    if a.kernel == Kernel::Limit {
        let header = vec!["x", "h"];
        let ray = parse_label_list(&a.ray)?;
        let b = match martin_limit(walk, &xs, &ray, a.limit_tol, &opts) {
            Ok(b) => b,
            Err(e) => return fail(m, e, header),
        };
        let rows = b
            .harmonic
            .iter()
            .map(|(x, h)| vec![x.to_string(), num(*h)])
            .collect();
        m.insert("status".into(), "ok".into());
        m.insert(
            "entries".into(),
            b.harmonic
                .iter()
                .map(|(x, h)| json!({ "x": x, "h": h }))
                .collect::<Vec<_>>()
                .into(),
        );
        m.insert("report".into(), to_value(&b));
        return Ok(Report {
            json: m.into(),
            csv: Some((header, rows)),
        });
    }

    let header = vec!["x", "y", "value"];
    if transience.verdict == Transience::Recurrent {
        return fail(m, PotentialError::Recurrent, header);
    }
    let ys = parse_label_list(&a.y)?;
    let kernel = a.kernel;
    let values = per_x(&xs, |x| {
        ys.iter()
            .map(|y| match kernel {
                Kernel::Paper => martin_paper(walk, x, y, &opts),
                _ => martin_std(walk, x, y, &opts),
            })
            .collect::<Result<Vec<f64>, _>>()
    });
    let values = match values {
        Ok(v) => v,
        Err(e) => return fail(m, e, header),
    };
    let mut entries = Vec::new();
    let mut rows = Vec::new();
    for (x, vs) in xs.iter().zip(&values) {
        for (y, v) in ys.iter().zip(vs) {
            entries.push(json!({ "x": x, "y": y, "value": v }));
            rows.push(vec![x.to_string(), y.to_string(), num(*v)]);
        }
    }
    m.insert("status".into(), "ok".into());
    m.insert("entries".into(), entries.into());
    Ok(Report {
        json: m.into(),
        csv: Some((header, rows)),
    })
}

pub fn boundary(a: &BoundaryArgs, config: Value) -> Result<Report, CliError> {
    if a.n_max == 0 {
        return Err(CliError::Input("--n-max must be positive".into()));
    }
    let r = resolve(&a.walk)?;
    let transience = transience_diagnostic(&r.walk)?;
    let b = poisson_triviality_test(&r.walk, a.window, a.n_max)?;
    let mut rows = Vec::new();
    for f in &b.test_functions {
        for (n, osc) in &f.oscillation {
            rows.push(vec![f.name.clone(), n.to_string(), num(*osc)]);
        }
    }
    let mut m = report("boundary", config, a.output.seed);
    m.insert("walk".into(), r.walk_json());
    m.insert("verdict".into(), to_value(&b.verdict));
    m.insert("report".into(), to_value(&b));
    m.insert(
        "diagnostics".into(),
        json!({
            "generation": r.generation_json(),
            "transience": transience,
        }),
    );
    Ok(Report {
        json: m.into(),
        csv: Some((vec!["function", "n", "oscillation"], rows)),
    })
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<Vec<String>>) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(o) => o.iter().for_each(|(k, v)| flatten(&key(k), v, out)),
        Value::Array(a) => a
            .iter()
            .enumerate()
            .for_each(|(i, v)| flatten(&key(&i.to_string()), v, out)),
        Value::String(s) => out.push(vec![prefix.to_string(), s.clone()]),
        other => out.push(vec![prefix.to_string(), other.to_string()]),
    }
}

fn flat_report(m: Map<String, Value>) -> Report {
    let json: Value = m.into();
    let mut rows = Vec::new();
    flatten("", &json, &mut rows);
    Report {
        json,
        csv: Some((vec!["field", "value"], rows)),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &std::path::Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn read_matrix(path: &std::path::Path) -> Result<CMatrix, CliError> {
    Ok(read_json::<MatrixJson>(path)?.to_matrix()?)
}

fn sign_str(s: i8) -> &'static str {
    if s > 0 {
        "+"
    } else {
        "-"
    }
}

fn ao_json(a: &AoFMatrix) -> Value {
    json!({
        "F": MatrixJson::from_matrix(a.f()),
        "n": a.n(),
        "sign": sign_str(a.sign()),
        "t": a.t(),
        "eigenvalues": a.eigenvalues(),
    })
}

/// Entrywise comparison of the two walks' transition matrices on `0..=max`.
fn walk_check(
    a: &QuantumGroupInput,
    b: &QuantumGroupInput,
    mu_str: &str,
    max: u32,
) -> Result<Value, CliError> {
    let wa = walk_of(a, &parse_measure(mu_str, &crate::moneq::ring_of(a)?)?)?;
    let wb = walk_of(b, wa.measure())?;
    let labels: Vec<Label> = (0..=max).map(Label::Index).collect();
    let pa = wa.transition_matrix(&labels)?;
    let pb = wb.transition_matrix(&labels)?;
    let diff = pa
        .iter()
        .flatten()
        .zip(pb.iter().flatten())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    Ok(json!({
        "walks_equal": diff <= WALK_EQ_TOL,
        "max_abs_diff": diff,
        "tolerance": WALK_EQ_TOL,
        "labels": max + 1,
        "measure": wa.measure(),
    }))
}

pub fn moneq_ao(a: &AoArgs, config: Value) -> Result<Report, CliError> {
    positive("--eig-tol", a.eig_tol)?;
    let f = validate_aof(&read_matrix(&a.f)?)?;
    let q = su2_partner(&f);
    let fq = fq_matrix(q)?;
    let partner = validate_aof(&fq)?;
    let input = QuantumGroupInput::Ao(f.clone());

    let mut m = report("moneq", config, a.output.seed);
    m.insert("family".into(), "ao".into());
    m.insert("sign".into(), sign_str(f.sign()).into());
    m.insert("t".into(), f.t().into());
    m.insert("q".into(), q.into());
    m.insert("input".into(), ao_json(&f));
    m.insert("invariant".into(), to_value(&iso_invariant(&f)));
    m.insert(
        "partner".into(),
        json!({ "q": q, "F_q": MatrixJson::from_matrix(&fq), "t": partner.t() }),
    );
    m.insert(
        "equivalent_to_partner".into(),
        decide_moneq_ao(&f, &partner).into(),
    );
    m.insert("amenability".into(), to_value(&amenability_flags(&input)?));

    if a.verify_walk {
        let check = walk_check(
            &input,
            &QuantumGroupInput::Ao(partner.clone()),
            &a.mu,
            a.max_label,
        )?;
        m.insert("walks_equal".into(), check["walks_equal"].clone());
        m.insert("walk_check".into(), check);
    }
    if let Some(path) = &a.g {
        let g = validate_aof(&read_matrix(path)?)?;
        let (ia, ib) = (iso_invariant(&f), iso_invariant(&g));
        let isomorphic = ia.n == ib.n
            && ia.sign == ib.sign
            && ia
                .eigenvalues
                .iter()
                .zip(&ib.eigenvalues)
                .all(|(x, y)| (x - y).abs() <= a.eig_tol);
        let mut second = json!({
            "input": ao_json(&g),
            "equivalent": decide_moneq_ao(&f, &g),
            "isomorphic": isomorphic,
        });
        if a.verify_walk {
            second["walk_check"] = walk_check(&input, &QuantumGroupInput::Ao(g.clone()), &a.mu, a.max_label)?;
        }
        m.insert("equivalent".into(), second["equivalent"].clone());
        m.insert("second".into(), second);
    }
    Ok(flat_report(m))
}

pub fn moneq_aut(a: &AutArgs, config: Value) -> Result<Report, CliError> {
    let d: AlgebraSpec = read_json(&a.spec)?;
    let df = delta_form(&d)?;
    let input = QuantumGroupInput::Aut(d.clone());

    let mut m = report("moneq", config, a.output.seed);
    m.insert("family".into(), "aut".into());
    m.insert("dimension".into(), d.total_dimension().into());
    m.insert("delta_form".into(), to_value(&df));
    m.insert("delta2".into(), df.delta2.into());
    let flags = amenability_flags(&input)?;
    m.insert("coamenable".into(), flags.coamenable.into());
    m.insert("amenability".into(), to_value(&flags));

    let nf = match aut_normal_form(&d) {
        Ok(nf) => Some(nf),
        Err(e) => {
            m.insert("partner".into(), Value::Null);
            m.insert("partner_note".into(), e.to_string().into());
            None
        }
    };
    if let Some(nf) = &nf {
        let fm = &nf.blocks()[0].f;
        let (l0, l1) = (fm[(0, 0)].re, fm[(1, 1)].re);
        m.insert("partner".into(), format!("M2 diag({l0}, {l1})").into());
        m.insert("partner_spec".into(), to_value(nf));
        m.insert("partner_delta_form".into(), to_value(&delta_form(nf)?));
        m.insert(
            "kac_subgroup_of_partner".into(),
            normal_form_kac_subgroup(df.delta2).into(),
        );
        if d.total_dimension() >= 4 {
            m.insert("equivalent_to_partner".into(), decide_moneq_aut(&d, nf)?.into());
        }
    }
    if a.verify_walk {
        let nf = nf.as_ref().ok_or_else(|| {
            CliError::Input("--verify-walk needs a δ-form with δ² ≥ 4".into())
        })?;
        let check = walk_check(&input, &QuantumGroupInput::Aut(nf.clone()), &a.mu, a.max_label)?;
        m.insert("walks_equal".into(), check["walks_equal"].clone());
        m.insert("walk_check".into(), check);
    }
    if let Some(path) = &a.spec2 {
        let d2: AlgebraSpec = read_json(path)?;
        let equivalent = decide_moneq_aut(&d, &d2)?;
        m.insert("equivalent".into(), equivalent.into());
        m.insert(
            "second".into(),
            json!({
                "dimension": d2.total_dimension(),
                "delta_form": delta_form(&d2)?,
                "equivalent": equivalent,
            }),
        );
    }
    Ok(flat_report(m))
}
