use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use canary_audit::fl::run_training;
use canary_audit::{
    anderson_darling, delta_for_epsilon, epsilon_for_delta, epsilon_lower_bound, estimate_epsilon_all_iterates,
    estimate_epsilon_final, fit_gaussian_moments, max_over_rounds, pool_runs, run_gaussian_mechanism_audit, AuditError,
    CosineNull, CosineSampleSet, FederatedConfig, GaussianHypothesis, GaussianSumInstance, Label, NullModel,
    SyntheticTask,
};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{EpsilonArgs, FlArgs, GaussArgs, LowerBoundArgs, NormalityArgs};
use crate::cosines::{read_column, read_rows, select_max, select_round, to_csv, CosineRow, FINAL_ROUND};
use crate::report::{
    write_atomic, AuditReport, ConfigEcho, EpsilonField, LowerBoundField, NormalityField, NullModelField,
    SampleCounts,
};
use crate::{format_sig9, CliError, CliResult, TOOLKIT_VERSION};

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Runtime(format!("cannot write {}: {e}", path.display()))
}

/// Keys a JSON object form of `sample` carries, i.e. every field name.
fn field_names<S: Serialize>(sample: &S) -> BTreeSet<String> {
    match serde_json::to_value(sample).expect("config serializes") {
        Value::Object(m) => m.keys().cloned().collect(),
        _ => unreachable!("configs are structs"),
    }
}

fn sample_federated() -> FederatedConfig<f64> {
    FederatedConfig {
        dim: 2,
        total_clients: 1,
        clients_per_round: 1,
        rounds: 1,
        noise_multiplier: 0.0,
        clip_norm: 1.0,
        server_lr: 1.0,
        server_momentum: 0.0,
        observed_canaries: 0,
        unobserved_canaries: 0,
        repetitions: 1,
        epochs: 1,
        delta: Some(0.5),
        seed: 0,
        canary_seed: Some(0),
        task: SyntheticTask::MeanPoint,
    }
}

fn sample_instance() -> GaussianSumInstance<f64> {
    GaussianSumInstance {
        dim: 2,
        data_vectors: Vec::new(),
        data_sum: Some(Vec::new()),
        noise_std: 1.0,
        canary_count: 2,
        delta: 0.5,
        seed: 0,
    }
}

/// Reads a JSON config, listing every unknown key before any other check.
fn read_config<C: DeserializeOwned>(path: &Path, known: &BTreeSet<String>) -> CliResult<C> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| usage(format!("{} is not valid JSON: {e}", path.display())))?;
    let Value::Object(map) = &value else {
        return Err(usage(format!("{} must hold a JSON object", path.display())));
    };
    let unknown: Vec<&str> = map.keys().filter(|k| !known.contains(*k)).map(String::as_str).collect();
    if !unknown.is_empty() {
        return Err(usage(format!("{}: unknown configuration keys: {}", path.display(), unknown.join(", "))));
    }
    serde_json::from_value(value).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    write_atomic(path, bytes).map_err(|e| io_error(path, e))
}

fn normality(values: &[f64]) -> Option<NormalityField> {
    // Too few or constant samples leave the diagnostic undefined.
    anderson_darling(values).ok().map(|d| NormalityField::new(&d, values.len()))
}

fn validate_confidence(c: f64) -> CliResult<()> {
    if c > 0.0 && c < 1.0 {
        Ok(())
    } else {
        Err(usage(format!("confidence must lie strictly inside (0, 1), got {c}")))
    }
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = v.iter().sum::<f64>() / v.len() as f64;
    (m, (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt())
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("summary serializes"));
}

/// `inf` etc. as strings, finite values as numbers.
fn num_value(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(format_sig9(v))
    }
}

pub fn gauss_audit(args: &GaussArgs) -> CliResult<()> {
    validate_confidence(args.confidence)?;
    if args.repeats == 0 {
        return Err(usage("--repeats must be at least 1"));
    }
    let mut base: GaussianSumInstance<f64> = match &args.config {
        Some(path) => read_config(path, &field_names(&sample_instance()))?,
        None => {
            let dim = args.dim.expect("clap requires --dim");
            let canaries = args.canaries.unwrap_or_else(|| (dim as f64).sqrt().round() as usize);
            GaussianSumInstance {
                dim,
                data_vectors: Vec::new(),
                data_sum: None,
                noise_std: args.sigma.expect("clap requires --sigma"),
                canary_count: canaries,
                delta: args.delta.unwrap_or(1e-6),
                seed: 0,
            }
        }
    };
    if let Some(seed) = args.common.seed {
        base.seed = seed;
    }
    base.validate()?;
    ensure_dir(&args.common.out_dir)?;
    let mut summaries = Vec::with_capacity(args.repeats);
    let mut finite = Vec::new();
    for i in 0..args.repeats {
        let start = Instant::now();
        let mut inst = base.clone();
        inst.seed = base.seed.wrapping_add(i as u64);
        let audit = run_gaussian_mechanism_audit(&inst)?;
        let d = inst.dim;
        let null = CosineNull::default_for(d)?;
        let lb = epsilon_lower_bound(&audit.samples, &NullModel::Analytic(null), inst.delta, args.confidence)?;
        let values = audit.samples.values();
        let rows: Vec<CosineRow> = values
            .iter()
            .enumerate()
            .map(|(id, &cosine)| CosineRow { round: FINAL_ROUND, canary_id: id, label: Label::Observed, cosine })
            .collect();
        let report = AuditReport {
            toolkit_version: TOOLKIT_VERSION.into(),
            command: "gauss-audit".into(),
            config_echo: ConfigEcho::GaussianSum(inst.clone()),
            runs: 1,
            delta: inst.delta,
            sample_counts: SampleCounts { observed: values.len(), unobserved: 0 },
            epsilon_estimate: EpsilonField::from(&audit.estimate),
            epsilon_all_iterates: None,
            epsilon_lower_bound: LowerBoundField::new(&lb, values.len()),
            epsilon_lower_bound_all_iterates: None,
            fitted_observed: audit.estimate.alternative.into(),
            fitted_unobserved: None,
            null_model: null.into(),
            null_model_all_iterates: None,
            normality: normality(values),
            runtime_seconds: start.elapsed().as_secs_f64(),
        };
        let stem = args.common.out_dir.join(format!("gauss-audit-run-{i:04}"));
        write_file(&stem.with_extension("csv"), &to_csv(&rows)?)?;
        write_file(&gauss_report_path(&args.common.out_dir, i), report.to_json().as_bytes())?;
        let eps = audit.estimate.epsilon;
        if eps.is_finite() {
            finite.push(eps);
        }
        summaries.push(json!({
            "run": i,
            "seed": inst.seed,
            "epsilon": num_value(eps),
            "epsilon_lower_bound": lb.value,
        }));
    }
    let (mean, std) = mean_std(&finite);
    print_json(&json!({
        "runs": args.repeats,
        "finite_runs": finite.len(),
        "mean_epsilon": num_value(mean),
        "std_epsilon": num_value(std),
        "per_run": summaries,
    }));
    Ok(())
}

/// Cosines of one run as CSV rows, canary ids offset by `offset`.
fn run_rows(
    out: &canary_audit::TrainingOutput<f64>,
    obs_offset: usize,
    unobs_offset: usize,
    rows: &mut Vec<CosineRow>,
) {
    let mut push = |round: i64, label: Label, values: &[f64]| {
        let offset = if label == Label::Observed { obs_offset } else { unobs_offset };
        rows.extend(
            values.iter().enumerate().map(|(i, &cosine)| CosineRow { round, canary_id: offset + i, label, cosine }),
        );
    };
    for t in &out.traces {
        push(t.round as i64, Label::Observed, &t.observed);
        push(t.round as i64, Label::Unobserved, &t.unobserved);
    }
    push(FINAL_ROUND, Label::Observed, out.observed_final.values());
    push(FINAL_ROUND, Label::Unobserved, out.unobserved_final.values());
}

pub fn fl_audit(args: &FlArgs) -> CliResult<()> {
    validate_confidence(args.confidence)?;
    if args.runs == 0 {
        return Err(usage("--runs must be at least 1"));
    }
    let mut base: FederatedConfig<f64> = read_config(&args.config, &field_names(&sample_federated()))?;
    if let Some(seed) = args.common.seed {
        base.seed = seed;
        base.canary_seed = None;
    }
    base.validate()?;
    let base = base.resolved();
    if base.observed_canaries * args.runs < 2 {
        return Err(usage("at least two observed canaries are needed across all runs"));
    }
    if args.all_iterates && base.unobserved_canaries * args.runs < 2 {
        return Err(usage("--all-iterates needs at least two unobserved canaries across all runs"));
    }
    ensure_dir(&args.common.out_dir)?;
    let start = Instant::now();
    let delta = base.resolved_delta();
    let d = base.dim;
    let (mut obs, mut unobs, mut obs_max, mut unobs_max) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut rows = Vec::new();
    for i in 0..args.runs {
        let mut cfg = base.clone();
        cfg.seed = base.seed.wrapping_add(i as u64);
        cfg.canary_seed = Some(base.resolved_canary_seed().wrapping_add(i as u64));
        let out = run_training(&cfg, args.all_iterates)?;
        run_rows(&out, i * cfg.observed_canaries, i * cfg.unobserved_canaries, &mut rows);
        if args.all_iterates {
            let (o, u) = max_over_rounds(&out.traces)?;
            obs_max.push(o);
            unobs_max.push(u);
        }
        obs.push(out.observed_final);
        unobs.push(out.unobserved_final);
    }
    let observed = pool_runs(&obs)?;
    let unobserved = pool_runs(&unobs)?;
    let final_est = estimate_epsilon_final(&observed, d, delta)?;
    let null = CosineNull::default_for(d)?;
    let lb = epsilon_lower_bound(&observed, &NullModel::Analytic(null), delta, args.confidence)?;
    let fitted_unobserved = if unobserved.len() >= 2 { Some(fit_gaussian_moments(&unobserved)?.into()) } else { None };
    let (all_est, all_lb, all_null) = if args.all_iterates {
        let om = pool_runs(&obs_max)?;
        let um = pool_runs(&unobs_max)?;
        let est = estimate_epsilon_all_iterates(&om, &um, delta)?;
        let lb = epsilon_lower_bound(&om, &NullModel::Empirical(&um), delta, args.confidence)?;
        (
            Some(EpsilonField::from(&est)),
            Some(LowerBoundField::new(&lb, om.len())),
            Some(NullModelField::EmpiricalUnobserved { samples: um.len() }),
        )
    } else {
        (None, None, None)
    };
    let report = AuditReport {
        toolkit_version: TOOLKIT_VERSION.into(),
        command: "fl-audit".into(),
        config_echo: ConfigEcho::Federated(base.clone()),
        runs: args.runs,
        delta,
        sample_counts: SampleCounts { observed: observed.len(), unobserved: unobserved.len() },
        epsilon_estimate: EpsilonField::from(&final_est),
        epsilon_all_iterates: all_est.clone(),
        epsilon_lower_bound: LowerBoundField::new(&lb, observed.len()),
        epsilon_lower_bound_all_iterates: all_lb,
        fitted_observed: final_est.alternative.into(),
        fitted_unobserved,
        null_model: null.into(),
        null_model_all_iterates: all_null,
        normality: normality(observed.values()),
        runtime_seconds: start.elapsed().as_secs_f64(),
    };
    let dir = &args.common.out_dir;
    write_file(&dir.join("fl-audit-cosines.csv"), &to_csv(&rows)?)?;
    write_file(&dir.join("fl-audit-report.json"), report.to_json().as_bytes())?;
    print_json(&json!({
        "runs": args.runs,
        "observed_samples": observed.len(),
        "epsilon": num_value(final_est.epsilon),
        "epsilon_all_iterates": all_est.map(|e| num_value(e.value)),
        "epsilon_lower_bound": lb.value,
        "report": dir.join("fl-audit-report.json"),
    }));
    Ok(())
}

pub fn epsilon(args: &EpsilonArgs) -> CliResult<()> {
    let p1 = GaussianHypothesis::new(args.mu1, args.sigma1)?;
    let p2 = GaussianHypothesis::new(args.mu2, args.sigma2)?;
    let value = match (args.delta, args.epsilon) {
        (Some(delta), None) => epsilon_for_delta(&p1, &p2, delta)?,
        (None, Some(eps)) => delta_for_epsilon(&p1, &p2, eps)?,
        _ => return Err(usage("give exactly one of --delta and --epsilon")),
    };
    println!("{}", format_sig9(value));
    Ok(())
}

fn sample_set(dim: usize, label: Label, values: Vec<f64>, what: &str) -> CliResult<CosineSampleSet<f64>> {
    if values.is_empty() {
        return Err(usage(format!("no {what} cosines selected")));
    }
    CosineSampleSet::new(dim, label, values).map_err(|e| usage(format!("{what} cosines: {e}")))
}

pub fn lower_bound(args: &LowerBoundArgs) -> CliResult<()> {
    validate_confidence(args.confidence)?;
    let rows = read_rows(&args.csv)?;
    let pick = |label| if args.max_over_rounds { select_max(&rows, label) } else { select_round(&rows, label, args.round) };
    let observed = sample_set(args.dim, Label::Observed, pick(Label::Observed), "observed")?;
    let unobserved;
    let (null, null_field) = if args.empirical_null {
        unobserved = sample_set(args.dim, Label::Unobserved, pick(Label::Unobserved), "unobserved")?;
        (NullModel::Empirical(&unobserved), NullModelField::EmpiricalUnobserved { samples: unobserved.len() })
    } else {
        let n = CosineNull::default_for(args.dim)?;
        (NullModel::Analytic(n), n.into())
    };
    let lb = epsilon_lower_bound(&observed, &null, args.delta, args.confidence)?;
    let field = LowerBoundField::new(&lb, observed.len());
    print_json(&json!({ "epsilon_lower_bound": field, "null_model": null_field, "delta": args.delta }));
    Ok(())
}

pub fn validate_normality(args: &NormalityArgs) -> CliResult<()> {
    let values = read_column(&args.csv, &args.column, args.label.as_deref(), args.round)?;
    let diag = anderson_darling(&values).map_err(|e| match e {
        AuditError::InvalidArgument(m) => usage(m),
        other => CliError::from(other),
    })?;
    print_json(&json!(NormalityField::new(&diag, values.len())));
    Ok(())
}

/// Report path of run `i` of a gauss-audit sweep in `dir`.
pub fn gauss_report_path(dir: &Path, i: usize) -> PathBuf {
    dir.join(format!("gauss-audit-run-{i:04}.json"))
}
