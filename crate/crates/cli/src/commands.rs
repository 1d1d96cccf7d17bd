use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use decoherent_histories::composition::{completeness_residual, CompositionOutcome, LinearCompositionOutcome};
use decoherent_histories::consistency::{amplitudes, BRUTE_FORCE_LIMIT};
use decoherent_histories::perturbation::default_grid;
use decoherent_histories::search::{
    repeated_z_family, search, x_then_z_family, SearchOutcome, SearchSpec, SearchTarget, Witness,
};
use decoherent_histories::{
    brute_force_consistency, build_family, canonical_witness, classify, compose, composition_anomaly,
    decoherence_functional, linear_positivity_composition_anomaly, linear_positivity_perturbation, perturb_family,
    perturbed_dfunc, probabilities_linear, probabilities_standard, robustness_scan,
    ConsistencyReport, DensityState, HistoryFamily, PhaseKick, ScenarioFile, Tolerance,
};
use serde_json::{json, Value};

use crate::{table, CliError, Cli, Command, Context, Demo, Example, Outcome};

type CmdResult = Result<Outcome, CliError>;

/// The command and its options, minus file paths, so the echo depends only
/// on what was computed.
pub fn echo(cli: &Cli) -> Value {
    match &cli.command {
        Command::Classify { .. } => json!({ "name": "classify" }),
        Command::Compose { .. } => json!({ "name": "compose" }),
        Command::Perturb { event, lambdas, scan, .. } => {
            json!({ "name": "perturb", "event": event, "lambdas": lambdas, "scan": scan })
        }
        Command::Search { target, dim, times, outcomes, delta, max_iter, restarts, .. } => json!({
            "name": "search",
            "target": target,
            "dim": dim,
            "times": times,
            "outcomes": outcomes,
            "delta": delta,
            "max_iter": max_iter,
            "restarts": restarts,
        }),
        Command::Demo { which } => json!({ "name": "demo", "which": demo_name(*which) }),
        Command::Example { .. } => json!({ "name": "example" }),
    }
}

fn demo_name(d: Demo) -> &'static str {
    match d {
        Demo::CompositionAnomaly => "composition-anomaly",
        Demo::PerturbationAnomaly => "perturbation-anomaly",
        Demo::LinearPositivityAnomaly => "linear-positivity-anomaly",
    }
}

pub fn dispatch(cli: &Cli, ctx: &Context) -> CmdResult {
    match &cli.command {
        Command::Classify { scenario } => cmd_classify(scenario, ctx),
        Command::Compose { a, b } => cmd_compose(a, b, ctx),
        Command::Perturb { scenario, event, lambdas, scan } => cmd_perturb(scenario, *event, lambdas.as_deref(), *scan, ctx),
        Command::Search { target, dim, times, outcomes, delta, max_iter, restarts, out } => {
            let mut spec = SearchSpec::new(*target, *dim, *times, *delta, ctx.seed);
            spec.outcomes = *outcomes;
            spec.max_iter = *max_iter;
            spec.restarts = *restarts;
            spec.tolerance = ctx.tol;
            cmd_search(&spec, out.as_deref())
        }
        Command::Demo { which } => match which {
            Demo::CompositionAnomaly => demo_composition(ctx),
            Demo::PerturbationAnomaly => demo_perturbation(ctx),
            Demo::LinearPositivityAnomaly => demo_linear(ctx),
        },
        Command::Example { .. } => unreachable!("handled before dispatch"),
    }
}

struct Loaded {
    file: ScenarioFile,
    family: HistoryFamily,
    state: DensityState,
}

fn load(path: &Path, tol: Tolerance) -> Result<Loaded, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let file = ScenarioFile::from_json(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let scenario = file.to_model(tol).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let family = build_family(&scenario.schedule, tol)?;
    Ok(Loaded { file, family, state: scenario.state })
}

fn from_model(family: &HistoryFamily, state: &DensityState) -> ScenarioFile {
    ScenarioFile::from_model(family.schedule(), state)
}

/// Functional, both probability rules, verdicts and sum-rule check.
fn analyze(family: &HistoryFamily, state: &DensityState, tol: Tolerance) -> Result<(Value, String, ConsistencyReport), CliError> {
    let d = decoherence_functional(family, state)?;
    let invariants = d.invariants(tol)?;
    let standard = probabilities_standard(&d, tol)?;
    let linear = probabilities_linear(family, state, tol);
    let report = classify(family, state, tol)?;
    let mut text = String::new();
    let _ = writeln!(text, "dim {}, {} histories, tol {:e}", family.dim(), family.len(), tol.atol());
    text += &table::functional(&d);
    text += &table::probabilities(&standard, &linear);
    text += &table::verdicts(&report);
    let brute = if family.len() <= BRUTE_FORCE_LIMIT {
        let v = brute_force_consistency(family, state, tol)?;
        text += &table::brute_force(&v);
        serde_json::to_value(&v).expect("serialisable")
    } else {
        let note = format!("skipped: {} histories exceed {BRUTE_FORCE_LIMIT}", family.len());
        let _ = writeln!(text, "sum rules: {note}");
        json!({ "skipped": note })
    };
    let body = json!({
        "functional": d,
        "invariants": invariants,
        "probabilities": { "standard": standard, "linear": linear },
        "classification": report,
        "sum_rules": brute,
    });
    Ok((body, text, report))
}

fn cmd_classify(path: &Path, ctx: &Context) -> CmdResult {
    let loaded = load(path, ctx.tol)?;
    let (analysis, text, _) = analyze(&loaded.family, &loaded.state, ctx.tol)?;
    let mut body = json!({ "inputs": { "scenario": loaded.file } });
    merge(&mut body, analysis);
    Ok(Outcome { body, text, exhausted: None })
}

fn merge(into: &mut Value, from: Value) {
    if let (Value::Object(a), Value::Object(b)) = (into, from) {
        a.extend(b);
    }
}

struct CompositionRun {
    body: Value,
    text: String,
}

fn run_composition(
    fa: &HistoryFamily,
    ra: &DensityState,
    fb: &HistoryFamily,
    rb: &DensityState,
    tol: Tolerance,
) -> Result<CompositionRun, CliError> {
    let report_a = classify(fa, ra, tol)?;
    let report_b = classify(fb, rb, tol)?;
    let composite = compose(fa, ra, fb, rb)?;
    let factorization = decoherent_histories::verify_factorization(&composite)?;
    let composite_report = classify(&composite, composite.state(), tol)?;
    let mut text = String::new();
    let mut certificates = Vec::new();
    let _ = writeln!(
        text,
        "factor A: dim {}, {} histories; factor B: dim {}, {} histories; composite dim {}, {} histories",
        fa.dim(),
        fa.len(),
        fb.dim(),
        fb.len(),
        composite.dim(),
        composite.len()
    );
    let _ = writeln!(text, "factorization residual: {:.3e}", factorization.residual);
    text += "factor A\n";
    text += &table::verdicts(&report_a);
    text += "factor B\n";
    text += &table::verdicts(&report_b);
    text += "composite\n";
    text += &table::verdicts(&composite_report);

    let weak = if report_a.weak.holds && report_b.weak.holds {
        let o: CompositionOutcome = composition_anomaly(fa, ra, fb, rb, tol)?;
        match &o.certificate {
            Some(c) => {
                text += &table::certificate(c);
                certificates.push(c.clone());
            }
            None => text += "weak decoherence: no composition anomaly\n",
        }
        if !o.marginal.is_empty() {
            let _ = writeln!(text, "weak decoherence: {} marginal pairs within 10·atol", o.marginal.len());
        }
        serde_json::to_value(&o).expect("serialisable")
    } else {
        text += "weak decoherence: not checked, a factor is not weakly decoherent\n";
        json!({ "skipped": "a factor is not weakly decoherent" })
    };
    let linear = if report_a.linear_positive.holds && report_b.linear_positive.holds {
        let o: LinearCompositionOutcome = linear_positivity_composition_anomaly(fa, ra, fb, rb, tol)?;
        match &o.certificate {
            Some(c) => {
                text += &table::certificate(c);
                certificates.push(c.clone());
            }
            None => {
                let _ = writeln!(text, "linear positivity: no composition anomaly (min Re<C> = {:.6e} at {})", o.min_value, o.extremal);
            }
        }
        if !o.marginal.is_empty() {
            let _ = writeln!(text, "linear positivity: {} marginal histories with Re<C> within 10·atol of 0", o.marginal.len());
        }
        serde_json::to_value(&o).expect("serialisable")
    } else {
        text += "linear positivity: not checked, a factor is not linearly positive\n";
        json!({ "skipped": "a factor is not linearly positive" })
    };
    let body = json!({
        "factor_a": report_a,
        "factor_b": report_b,
        "composite": {
            "dim": composite.dim(),
            "histories": composite.len(),
            "factorization_residual": factorization.residual,
            "completeness_residual": completeness_residual(&composite),
            "functional": factorization.composite,
            "classification": composite_report,
        },
        "weak_anomaly": weak,
        "linear_anomaly": linear,
        "certificates": certificates,
    });
    Ok(CompositionRun { body, text })
}

fn cmd_compose(a: &Path, b: &Path, ctx: &Context) -> CmdResult {
    let la = load(a, ctx.tol)?;
    let lb = load(b, ctx.tol)?;
    let run = run_composition(&la.family, &la.state, &lb.family, &lb.state, ctx.tol)?;
    let mut body = json!({ "inputs": { "a": la.file, "b": lb.file } });
    merge(&mut body, run.body);
    Ok(Outcome { body, text: run.text, exhausted: None })
}

fn check_event(family: &HistoryFamily, event: usize) -> Result<usize, CliError> {
    let counts = family.schedule().outcome_counts();
    if event == 0 || event > counts.len() {
        return Err(CliError::Input(format!("event {event} out of range 1..={}", counts.len())));
    }
    Ok(counts[event - 1])
}

fn cmd_perturb(path: &Path, event: usize, lambdas: Option<&[f64]>, scan: bool, ctx: &Context) -> CmdResult {
    let loaded = load(path, ctx.tol)?;
    let outcomes = check_event(&loaded.family, event)?;
    let mut body = json!({ "inputs": { "scenario": loaded.file } });
    let (extra, text) = match (lambdas, scan) {
        (Some(lambdas), false) => {
            if lambdas.len() != outcomes {
                return Err(CliError::Input(format!(
                    "event {event} has {outcomes} outcomes but {} couplings were given",
                    lambdas.len()
                )));
            }
            single_kick(&loaded.family, &loaded.state, PhaseKick::new(event, lambdas.to_vec())?, ctx.tol)?
        }
        (None, true) => scan_event(&loaded.family, &loaded.state, event, &default_grid(outcomes)?, ctx.tol)?,
        _ => return Err(CliError::Input("give exactly one of --lambdas and --scan".into())),
    };
    merge(&mut body, extra);
    Ok(Outcome { body, text, exhausted: None })
}

fn single_kick(family: &HistoryFamily, state: &DensityState, kick: PhaseKick, tol: Tolerance) -> Result<(Value, String), CliError> {
    let original = classify(family, state, tol)?;
    let perturbed = perturbed_dfunc(family, state, &kick)?;
    let kicked = perturb_family(family, &kick)?;
    let kicked_report = classify(&kicked, state, tol)?;
    let linear = linear_positivity_perturbation(family, state, &kick, tol)?;
    let certificates = robustness_scan(family, state, kick.event(), &[kick.couplings().to_vec()], tol)?.certificates;

    let mut text = String::new();
    let couplings: Vec<String> = kick.couplings().iter().map(|v| format!("{v}")).collect();
    let _ = writeln!(text, "kick at event {}: λ = ({})", kick.event(), couplings.join(", "));
    let _ = writeln!(text, "phase-law residual: {:.3e}", perturbed.residual);
    text += &table::functional(&perturbed.direct);
    text += "original\n";
    text += &table::verdicts(&original);
    text += "perturbed\n";
    text += &table::verdicts(&kicked_report);
    let _ = writeln!(text, "perturbed linear values: min {:.6e} at {}", linear.min_value, linear.extremal);
    for c in &certificates {
        text += &table::certificate(c);
    }
    let body = json!({
        "kick": kick,
        "original": original,
        "perturbed": perturbed,
        "perturbed_classification": kicked_report,
        "linear_values": linear,
        "certificates": certificates,
    });
    Ok((body, text))
}

fn scan_event(family: &HistoryFamily, state: &DensityState, event: usize, grid: &[Vec<f64>], tol: Tolerance) -> Result<(Value, String), CliError> {
    let report = robustness_scan(family, state, event, grid, tol)?;
    let mut text = String::new();
    let _ = writeln!(text, "scan at event {event}: {} grid points", grid.len());
    for (name, s) in [("strong", &report.strong), ("weak", &report.weak), ("linear-positive", &report.linear_positive)] {
        let verdict = match (s.held_originally, s.survives) {
            (false, _) => "did not hold originally".to_string(),
            (true, true) => "survives entire grid".to_string(),
            (true, false) => "lost".to_string(),
        };
        let couplings: Vec<String> = s.worst_couplings.iter().map(|v| format!("{v}")).collect();
        let _ = writeln!(text, "{name:<16} {verdict:<36} worst {:.6e} at λ = ({})", s.worst_value, couplings.join(", "));
    }
    for c in &report.certificates {
        text += &table::certificate(c);
    }
    Ok((json!({ "scan": report }), text))
}

fn write_scenario(path: &Path, file: &ScenarioFile) -> Result<(), CliError> {
    let mut text = file.to_json();
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::Numeric(format!("cannot write {}: {e}", path.display())))
}

fn witness_text(w: &Witness) -> String {
    let m = &w.certificate.metrics;
    let mut text = String::new();
    let _ = writeln!(
        text,
        "found at restart {} after {} sweeps, objective {:.3e}",
        w.certificate.restart, w.certificate.iterations, w.certificate.objective
    );
    let _ = writeln!(
        text,
        "max |Re D| {:.6e}, max |Im D| {:.6e}, min Re<C> {:.6e}, max phase {:.6}",
        m.max_re_off_diagonal, m.max_im_off_diagonal, m.min_linear, m.max_phase
    );
    text += &table::verdicts(&w.report);
    text
}

fn cmd_search(spec: &SearchSpec, out: Option<&Path>) -> CmdResult {
    match search(spec)? {
        SearchOutcome::Found(w) => {
            let file = ScenarioFile::from_model(&w.schedule, &w.state);
            if let Some(path) = out {
                write_scenario(path, &file)?;
            }
            let body = json!({
                "spec": spec,
                "outcome": "found",
                "certificate": w.certificate,
                "classification": w.report,
                "witness": file,
            });
            Ok(Outcome { body, text: witness_text(&w), exhausted: None })
        }
        SearchOutcome::Exhausted(e) => {
            let mut text = format!("search exhausted: {}\n", e.reason);
            if let Some(best) = &e.best {
                let _ = writeln!(text, "best objective {:.3e} at restart {}", best.objective, best.restart);
            }
            let body = json!({ "spec": spec, "outcome": "exhausted", "exhaustion": e });
            Ok(Outcome { body, text, exhausted: Some(e.reason) })
        }
    }
}

fn demo_composition(ctx: &Context) -> CmdResult {
    let (f, rho) = canonical_witness();
    let run = run_composition(&f, &rho, &f, &rho, ctx.tol)?;
    let mut text = String::from(
        "The x-then-y spin-1/2 family on |0⟩ is weakly but not strongly decoherent.\n\
         Two uncorrelated copies of it are not weakly decoherent.\n",
    );
    text += &run.text;
    let body = json!({ "inputs": { "a": from_model(&f, &rho), "b": from_model(&f, &rho) }, "composition": run.body });
    Ok(Outcome { body, text, exhausted: None })
}

fn demo_perturbation(ctx: &Context) -> CmdResult {
    let (f, rho) = canonical_witness();
    let mut text = String::from(
        "The x-then-y spin-1/2 family on |0⟩ is weakly decoherent.\n\
         A phase kick at the first event turns Im D into Re D.\n",
    );
    let (kick_body, kick_text) = single_kick(&f, &rho, PhaseKick::new(1, vec![0.0, FRAC_PI_2])?, ctx.tol)?;
    text += &kick_text;
    let (scan_body, scan_text) = scan_event(&f, &rho, 1, &default_grid(2)?, ctx.tol)?;
    text += &scan_text;
    let body = json!({ "inputs": { "scenario": from_model(&f, &rho) }, "kick": kick_body, "grid": scan_body });
    Ok(Outcome { body, text, exhausted: None })
}

/// Phase threshold for the searched ingredient: two amplitudes at 3π/8 multiply
/// to phase 3π/4, whose real part is negative.
const LINEAR_DEMO_DELTA: f64 = 3.0 * PI / 8.0;
/// Consecutive seeds tried before the demo reports exhaustion.
const LINEAR_DEMO_SEEDS: u64 = 8;

fn demo_linear(ctx: &Context) -> CmdResult {
    let (f, rho) = canonical_witness();
    let mut text = String::from(
        "Linear positivity under composition and under phase kicks.\n\
         The x-then-y family has amplitudes (1±i)/4, phase π/4: products stay at Re ≥ 0.\n",
    );
    let witness_square = linear_positivity_composition_anomaly(&f, &rho, &f, &rho, ctx.tol)?;
    let _ = writeln!(
        text,
        "witness ⊗ witness: min Re<C> = {:.6e}, {} marginal histories",
        witness_square.min_value,
        witness_square.marginal.len()
    );
    let witness_scan = robustness_scan(&f, &rho, 1, &default_grid(2)?, ctx.tol)?;
    let _ = writeln!(
        text,
        "witness kicked at event 1 over the grid: min Re e^(-iλ)<U†C> = {:.6e}",
        witness_scan.linear_positive.worst_value
    );
    text += "searching for a linearly positive family with an amplitude phase above 3π/8\n";

    let mut found = None;
    let mut attempts = Vec::new();
    for seed in ctx.seed..ctx.seed.saturating_add(LINEAR_DEMO_SEEDS) {
        let mut spec = SearchSpec::new(SearchTarget::LinearPositivePhase, 2, 2, LINEAR_DEMO_DELTA, seed);
        spec.tolerance = ctx.tol;
        match search(&spec)? {
            SearchOutcome::Found(w) => {
                found = Some((spec, w));
                break;
            }
            SearchOutcome::Exhausted(e) => attempts.push(json!({ "seed": seed, "reason": e.reason })),
        }
    }
    let inputs = json!({ "witness": from_model(&f, &rho) });
    let Some((spec, w)) = found else {
        let reason = format!("no family found for seeds {}..{}", ctx.seed, ctx.seed.saturating_add(LINEAR_DEMO_SEEDS));
        let _ = writeln!(text, "search exhausted: {reason}");
        let body = json!({
            "inputs": inputs,
            "witness_composition": witness_square,
            "witness_scan": witness_scan,
            "search": { "outcome": "exhausted", "attempts": attempts },
        });
        return Ok(Outcome { body, text, exhausted: Some(reason) });
    };
    let _ = writeln!(text, "found with seed {}", spec.seed);
    text += &witness_text(&w);
    let amps = amplitudes(&w.family, &w.state);

    let composition = linear_positivity_composition_anomaly(&w.family, &w.state, &w.family, &w.state, ctx.tol)?;
    text += "self-composition\n";
    match &composition.certificate {
        Some(c) => text += &table::certificate(c),
        None => {
            let _ = writeln!(text, "no anomaly (min Re<C> = {:.6e})", composition.min_value);
        }
    }
    let grid = default_grid(w.family.schedule().outcome_counts()[0])?;
    let mut scans = Vec::new();
    let mut kick_certificate = None;
    for event in 1..=w.family.schedule().events().len() {
        let grid = if event == 1 { grid.clone() } else { default_grid(w.family.schedule().outcome_counts()[event - 1])? };
        let scan = robustness_scan(&w.family, &w.state, event, &grid, ctx.tol)?;
        if kick_certificate.is_none() {
            kick_certificate = scan.certificates.iter().find(|c| c.kind == decoherent_histories::AnomalyKind::PerturbationLinear).cloned();
        }
        scans.push(scan);
    }
    text += "phase kicks\n";
    match &kick_certificate {
        Some(c) => text += &table::certificate(c),
        None => text += "no kick on the default grid makes a linear value negative\n",
    }
    let body = json!({
        "inputs": inputs,
        "witness_composition": witness_square,
        "witness_scan": witness_scan,
        "search": {
            "outcome": "found",
            "spec": spec,
            "attempts": attempts,
            "certificate": w.certificate,
            "classification": w.report,
            "amplitudes": amps.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
            "family": ScenarioFile::from_model(&w.schedule, &w.state),
        },
        "composition": composition,
        "kick_scans": scans,
        "certificates": composition.certificate.iter().chain(kick_certificate.iter()).collect::<Vec<_>>(),
    });
    Ok(Outcome { body, text, exhausted: None })
}

pub fn example(which: Example, out: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    let (f, rho) = match which {
        Example::Witness => canonical_witness(),
        Example::XThenZ => x_then_z_family(),
        Example::RepeatedZ => repeated_z_family(),
    };
    let file = from_model(&f, &rho);
    match out {
        Some(path) => write_scenario(path, &file),
        None => {
            let mut text = file.to_json();
            text.push('\n');
            stdout.write_all(text.as_bytes()).map_err(|e| CliError::Numeric(e.to_string()))
        }
    }
}
