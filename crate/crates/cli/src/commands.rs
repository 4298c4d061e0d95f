//! The five subcommands.

use std::fmt::Write as _;

use kmp_models::analysis::{basic_coupling_gkmp, scan_criterion};
use kmp_models::engine::{
    run_replicas, InitialState, Observable, ObservationPlan, ObservedValue, ReplicaExperiment,
};
use kmp_models::hydro::{convergence_experiment, TestFunction};
use kmp_models::measures::{
    moment, sample_dominated_pair, sample_invariant, InitialMeasureSpec, InvariantSpec,
    MomentKind, Profile,
};
use kmp_models::models::{ModelKind, ModelSpec};
use kmp_models::numerics::RngStream;
use kmp_models::verify;

use crate::config::{
    AttractConfig, HydroConfig, MomentsConfig, SimulateConfig, VerifyConfig,
};
use crate::output::{ensure_dir, manifest, write_json, write_text};
use crate::CliError;

fn model_spec(model: &str, spin: f64) -> Result<ModelSpec, CliError> {
    let kind = ModelKind::parse(model).map_err(|e| CliError::Validation(e.to_string()))?;
    let spec = ModelSpec::new(kind, spin).map_err(|e| CliError::Validation(e.to_string()))?;
    if let Some(warning) = spec.attractiveness_warning() {
        eprintln!("warning: {warning}");
    }
    Ok(spec)
}

fn parse_test_functions(ids: &[String]) -> Result<Vec<TestFunction>, CliError> {
    ids.iter()
        .map(|id| TestFunction::parse(id).map_err(|e| CliError::Validation(e.to_string())))
        .collect()
}

pub fn cmd_simulate(cfg: &SimulateConfig) -> Result<(), CliError> {
    let spec = model_spec(&cfg.model, cfg.spin)?;
    if cfg.replicas == 0 {
        return Err(CliError::Validation("replicas must be at least 1".into()));
    }
    let bins = cfg.bins.unwrap_or(if cfg.n >= 64 { 32 } else { cfg.n });
    if bins == 0 || cfg.n % bins != 0 {
        return Err(CliError::Validation(format!(
            "bins = {bins} must divide n = {}",
            cfg.n
        )));
    }
    let test_functions = parse_test_functions(&cfg.test_functions)?;

    let init = match (&cfg.profile, cfg.rho) {
        (Some(preset), _) => {
            let profile =
                Profile::from_preset(preset).map_err(|e| CliError::Validation(e.to_string()))?;
            let rho_hat = cfg.rho_hat.unwrap_or(profile.sup() + 1.0);
            let ims = InitialMeasureSpec::new(spec.clone(), profile, rho_hat)
                .map_err(|e| CliError::Validation(e.to_string()))?;
            InitialState::ProfileMeasure(ims)
        }
        (None, Some(rho)) => {
            InvariantSpec::new(spec.clone(), rho)
                .map_err(|e| CliError::Validation(e.to_string()))?;
            InitialState::Invariant { rho }
        }
        (None, None) => {
            return Err(CliError::Validation(
                "either rho or profile must be given".into(),
            ))
        }
    };

    let mut observables = vec![Observable::TotalMass];
    for g in &test_functions {
        observables.push(Observable::Pairing(*g));
    }
    observables.push(Observable::BinnedProfile(bins));
    if cfg.write_snapshots {
        observables.push(Observable::Snapshot);
    }
    let plan = ObservationPlan::new(cfg.times.clone(), observables)
        .map_err(|e| CliError::Validation(e.to_string()))?;

    let experiment = ReplicaExperiment {
        spec,
        sites: cfg.n,
        init,
        plan: plan.clone(),
        seed: cfg.seed,
        replicas: cfg.replicas,
    };
    let out_dir = ensure_dir(&cfg.out_dir)?;

    let mut csv = String::from("replica,t,observable,index,value\n");
    let mut failures = 0u64;
    for outcome in run_replicas(&experiment) {
        let replica = outcome.replica;
        let obs = match outcome.result {
            Ok(obs) => obs,
            Err(e) => {
                eprintln!("replica {replica} failed: {e}");
                failures += 1;
                continue;
            }
        };
        for (ti, ob) in obs.iter().enumerate() {
            let t = ob.macro_time;
            for (oi, value) in ob.values.iter().enumerate() {
                match value {
                    ObservedValue::Scalar(v) => {
                        let name = if oi == 0 {
                            "mass".to_string()
                        } else {
                            format!("pair:{}", test_functions[oi - 1].id())
                        };
                        writeln!(csv, "{replica},{t},{name},0,{v}").unwrap();
                    }
                    ObservedValue::Profile(bins_vec) => {
                        for (b, v) in bins_vec.iter().enumerate() {
                            writeln!(csv, "{replica},{t},bin,{b},{v}").unwrap();
                        }
                    }
                    ObservedValue::Snapshot(config) => {
                        let path = out_dir.join(format!("snapshot_r{replica}_t{ti}.bin"));
                        let mut buf = Vec::new();
                        config
                            .write_snapshot(&mut buf)
                            .map_err(|e| CliError::Io(e.to_string()))?;
                        write_bytes(&path, &buf)?;
                    }
                    ObservedValue::Martingale { .. } => unreachable!("not scheduled"),
                }
            }
        }
    }
    write_text(&out_dir.join("observables.csv"), &csv)?;
    write_json(&out_dir.join("manifest.json"), &manifest("simulate", cfg))?;
    if failures > 0 {
        return Err(CliError::Suite(format!("{failures} replicas failed")));
    }
    println!(
        "simulate: {} replicas × {} times written to {}",
        cfg.replicas,
        cfg.times.len(),
        out_dir.join("observables.csv").display()
    );
    Ok(())
}

fn write_bytes(path: &std::path::Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
}

pub fn cmd_hydro(cfg: &HydroConfig) -> Result<(), CliError> {
    let spec = model_spec(&cfg.model, cfg.spin)?;
    if cfg.replicas == 0 || cfg.n_list.is_empty() || cfg.times.is_empty() {
        return Err(CliError::Validation(
            "replicas, n_list and times must be non-empty".into(),
        ));
    }
    for &n in &cfg.n_list {
        if cfg.bins == 0 || n % cfg.bins != 0 {
            return Err(CliError::Validation(format!(
                "bins = {} must divide every n in n_list (offender: {n})",
                cfg.bins
            )));
        }
    }
    let profile =
        Profile::from_preset(&cfg.profile).map_err(|e| CliError::Validation(e.to_string()))?;
    let (rows, cells) = convergence_experiment(
        &spec,
        &profile,
        cfg.rho_hat,
        &cfg.n_list,
        &cfg.times,
        cfg.replicas,
        cfg.seed,
        cfg.bins,
    )
    .map_err(|e| CliError::Suite(e.to_string()))?;

    let out_dir = ensure_dir(&cfg.out_dir)?;
    let mut table = String::from("model,spin,n,t,norm,error,se\n");
    for row in &rows {
        writeln!(
            table,
            "{},{},{},{},{},{},{}",
            cfg.model, cfg.spin, row.n, row.t, row.norm, row.error, row.se
        )
        .unwrap();
    }
    write_text(&out_dir.join("hydro_errors.csv"), &table)?;

    let mut profiles = String::from("model,n,t,bin,center,mean,se,reference\n");
    for cell in &cells {
        for b in 0..cell.centers.len() {
            writeln!(
                profiles,
                "{},{},{},{},{},{},{},{}",
                cfg.model,
                cell.n,
                cell.t,
                b,
                cell.centers[b],
                cell.mean[b],
                cell.se[b],
                cell.reference[b]
            )
            .unwrap();
        }
    }
    write_text(&out_dir.join("profiles.csv"), &profiles)?;
    write_json(&out_dir.join("manifest.json"), &manifest("hydro", cfg))?;

    for row in rows.iter().filter(|r| r.norm == "l1") {
        println!(
            "hydro: N = {:4}  t = {}  L1 error = {:.5} ± {:.5}",
            row.n, row.t, row.error, row.se
        );
    }
    Ok(())
}

pub fn cmd_attract(cfg: &AttractConfig) -> Result<(), CliError> {
    let spec = model_spec(&cfg.model, cfg.spin)?;
    let out_dir = ensure_dir(&cfg.out_dir)?;
    match spec.kind {
        ModelKind::GKmp => {
            // continuous model: pathwise order preservation under the basic
            // coupling, over seeded dominated starts
            let ims = InitialMeasureSpec::new(
                spec.clone(),
                Profile::Sine { base: 1.5, amp: 1.0 },
                3.0,
            )
            .map_err(|e| CliError::Validation(e.to_string()))?;
            let mut total_events = 0u64;
            let mut order_violations = 0u64;
            let mut worst_gap = f64::INFINITY;
            for run_idx in 0..cfg.coupling_runs {
                let mut rng = RngStream::new(cfg.seed, run_idx);
                let (lo, hi) = sample_dominated_pair(&ims, cfg.coupling_sites, &mut rng)
                    .map_err(|e| CliError::Suite(e.to_string()))?;
                let run = basic_coupling_gkmp(&lo, &hi, &spec, cfg.coupling_micro_t, &mut rng)
                    .map_err(|e| CliError::Suite(e.to_string()))?;
                total_events += run.events;
                order_violations += run.order_violations;
                worst_gap = worst_gap.min(run.worst_gap);
            }
            let pass = order_violations == 0;
            let report = serde_json::json!({
                "model": "gkmp",
                "spin": cfg.spin,
                "kind": "basic-coupling",
                "report_only": false,
                "runs": cfg.coupling_runs,
                "sites": cfg.coupling_sites,
                "micro_t": cfg.coupling_micro_t,
                "total_events": total_events,
                "order_violations": order_violations,
                "worst_gap": worst_gap,
                "pass": pass,
            });
            write_json(&out_dir.join("attract_report.json"), &report)?;
            write_json(&out_dir.join("manifest.json"), &manifest("attract", cfg))?;
            println!(
                "attract gkmp: {} coupled events, {} order violations",
                total_events, order_violations
            );
            if pass {
                Ok(())
            } else {
                Err(CliError::Suite(format!(
                    "{order_violations} order violations in the basic coupling"
                )))
            }
        }
        ModelKind::DKmp | ModelKind::Harm => {
            let report = scan_criterion(&spec, cfg.n_max, cfg.index_max)
                .map_err(|e| CliError::Suite(e.to_string()))?;
            // attractiveness is established for 2s ≥ 1 only; smaller spins
            // are exploratory and never fail the exit code
            let report_only = spec.kind == ModelKind::Harm && spec.spin < 0.5;
            let wrapped = serde_json::json!({
                "report_only": report_only,
                "kind": "rate-criterion",
                "criterion": report,
            });
            write_json(&out_dir.join("attract_report.json"), &wrapped)?;
            if !report.violations.is_empty() {
                let mut csv = String::from(
                    "inequality,index,lower_from,lower_to,upper_from,upper_to,lhs,rhs,excess\n",
                );
                for v in &report.violations {
                    writeln!(
                        csv,
                        "{},{},{},{},{},{},{},{},{}",
                        v.inequality,
                        v.index,
                        v.pair.lower_from,
                        v.pair.lower_to,
                        v.pair.upper_from,
                        v.pair.upper_to,
                        v.lhs,
                        v.rhs,
                        v.excess
                    )
                    .unwrap();
                }
                write_text(&out_dir.join("violations.csv"), &csv)?;
            }
            write_json(&out_dir.join("manifest.json"), &manifest("attract", cfg))?;
            println!(
                "attract {} (2s = {}): {} checks, {} violations, worst margin {:.3e}{}",
                cfg.model,
                2.0 * cfg.spin,
                report.tuples_checked,
                report.violations.len(),
                report.worst_margin,
                if report_only { " [report only]" } else { "" }
            );
            if report.pass || report_only {
                Ok(())
            } else {
                Err(CliError::Suite(format!(
                    "{} criterion violations",
                    report.violations.len()
                )))
            }
        }
    }
}

pub fn cmd_verify(cfg: &VerifyConfig) -> Result<(), CliError> {
    let suites =
        verify::run_all(cfg.seed, cfg.corrupt_diffusion).map_err(|e| CliError::Suite(e.to_string()))?;
    let out_dir = ensure_dir(&cfg.out_dir)?;
    let all_pass = suites.iter().all(|s| s.passed);
    for suite in &suites {
        println!(
            "suite {:<26} {}  worst residual {:.3e} ({} checks)",
            suite.name,
            if suite.passed { "PASS" } else { "FAIL" },
            suite.worst_residual,
            suite.checks
        );
    }
    let report = serde_json::json!({ "all_pass": all_pass, "suites": suites });
    write_json(&out_dir.join("verify_report.json"), &report)?;
    write_json(&out_dir.join("manifest.json"), &manifest("verify", cfg))?;
    if all_pass {
        Ok(())
    } else {
        Err(CliError::Suite("one or more identity suites failed".into()))
    }
}

pub fn cmd_moments(cfg: &MomentsConfig) -> Result<(), CliError> {
    if cfg.draws < 100 {
        return Err(CliError::Validation("draws must be at least 100".into()));
    }
    if cfg.max_order == 0 || cfg.max_order > 8 {
        return Err(CliError::Validation("max_order must lie in 1..=8".into()));
    }
    let out_dir = ensure_dir(&cfg.out_dir)?;
    let mut csv = String::from("model,spin,rho,order,kind,closed,sampled,se,z\n");
    println!(
        "{:<6} {:>5} {:>5} {:>5}  {:<9} {:>14} {:>14} {:>10} {:>7}",
        "model", "spin", "rho", "order", "kind", "closed", "sampled", "se", "z"
    );
    for (i, entry) in cfg.entries.iter().enumerate() {
        let spec = model_spec(&entry.model, entry.spin)?;
        let ispec = InvariantSpec::new(spec.clone(), entry.rho)
            .map_err(|e| CliError::Validation(e.to_string()))?;
        let mut rng = RngStream::new(cfg.seed, i as u64);
        let config = sample_invariant(&ispec, cfg.draws as usize, &mut rng)
            .map_err(|e| CliError::Suite(e.to_string()))?;
        for order in 1..=cfg.max_order {
            let (kind, closed) = moment(&ispec, order);
            let kind_name = match kind {
                MomentKind::Raw => "raw",
                MomentKind::Factorial => "factorial",
            };
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for x in 0..cfg.draws as usize {
                let v = config.value(x);
                let sample = match kind {
                    MomentKind::Raw => v.powi(order as i32),
                    MomentKind::Factorial => (0..order).map(|j| v - j as f64).product(),
                };
                sum += sample;
                sum_sq += sample * sample;
            }
            let r = cfg.draws as f64;
            let mean = sum / r;
            let var = (sum_sq / r - mean * mean).max(0.0) * r / (r - 1.0);
            let se = (var / r).sqrt();
            let z = if se > 0.0 { (mean - closed) / se } else { 0.0 };
            writeln!(
                csv,
                "{},{},{},{order},{kind_name},{closed},{mean},{se},{z}",
                entry.model, entry.spin, entry.rho
            )
            .unwrap();
            println!(
                "{:<6} {:>5} {:>5} {:>5}  {:<9} {:>14.6} {:>14.6} {:>10.2e} {:>7.2}",
                entry.model, entry.spin, entry.rho, order, kind_name, closed, mean, se, z
            );
        }
    }
    write_text(&out_dir.join("moments.csv"), &csv)?;
    write_json(&out_dir.join("manifest.json"), &manifest("moments", cfg))?;
    Ok(())
}
