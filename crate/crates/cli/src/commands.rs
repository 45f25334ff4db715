use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;

use serde_json::{json, Value};

use hmhd_core::dynamics::HallState;
use hmhd_core::experiments::{
    critical_level, gronwall_check, run_consistency, run_decay, run_global_bound, run_picard, run_scaling, run_stability,
    ExperimentReport, StabilityOptions, Verdict,
};
use hmhd_core::field::curl;
use hmhd_core::integrate::{evolve, picard_solve, PicardConfig};
use hmhd_core::lp::{besov_norm, BesovIndex, DyadicPartition, Profile};
use hmhd_core::snapshot::{read_snapshot, write_snapshot, Snapshot};

use crate::config::RunConfig;
use crate::output::{envelope, parse_series_csv, write_atomic, write_json, write_report};
use crate::Failure;

type Res = Result<(), Failure>;

fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::Usage(format!("{}: {e}", dir.display())))
}

fn save_snapshot(path: &Path, state: &HallState) -> Res {
    let mut bytes = Vec::new();
    write_snapshot(&mut bytes, &Snapshot::of_state(state))?;
    write_atomic(path, &bytes)?;
    Ok(())
}

fn load_snapshot(path: &Path) -> Result<Snapshot, Failure> {
    let f = File::open(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    Ok(read_snapshot(BufReader::new(f))?)
}

/// Exit status for a report: only an outright failure is nonzero.
fn judge(report: &ExperimentReport) -> Res {
    println!("{}: {:?}", report.experiment, report.verdict);
    if report.verdict == Verdict::Fail {
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        return Err(Failure::Verdict(format!("{} failed: {}", report.experiment, failed.join(", "))));
    }
    Ok(())
}

fn report_and_judge(cfg: &RunConfig, name: &str, report: &ExperimentReport) -> Res {
    let dir = cfg.out_dir();
    ensure_dir(&dir)?;
    let path = write_report(&dir, name, name, cfg, report)?;
    eprintln!("wrote {}", path.display());
    judge(report)
}

fn level_of(partition: &DyadicPartition, cfg: &RunConfig, s: &HallState) -> Result<f64, Failure> {
    let spec = cfg.experiment()?.spec(true)?;
    Ok(critical_level(partition, &spec, &s.params, &s.u, &s.b)?)
}

pub fn fields(cfg: &RunConfig) -> Res {
    let exp = cfg.experiment()?;
    let state = exp.initial_state()?;
    let dir = cfg.out_dir();
    ensure_dir(&dir)?;
    save_snapshot(&dir.join("fields.hmh"), &state)?;
    let partition = exp.partition()?;
    let crit = |f| -> Result<f64, Failure> { Ok(besov_norm(&partition, f, BesovIndex::critical(exp.p)?)?.value) };
    let summary = json!({
        "snapshot": "fields.hmh",
        "n": exp.n,
        "length": exp.length,
        "critical_level": level_of(&partition, cfg, &state)?,
        "u_critical": crit(&state.u)?,
        "b_critical": crit(&state.b)?,
        "j_critical": crit(&state.j)?,
    });
    write_json(&dir.join("fields.json"), &envelope("fields", cfg, &summary))?;
    println!("{}", serde_json::to_string_pretty(&summary).expect("serializable"));
    Ok(())
}

pub fn besov(path: &Path, s: Option<f64>, p: f64, r: f64, per_shell: bool, field: &str, out: Option<&Path>) -> Res {
    let snap = load_snapshot(path)?;
    let idx = match field {
        "u" => 0,
        "b" => 1,
        "j" => 2,
        _ => return Err(Failure::Usage(format!("--field: expected u, b or j, got '{field}'"))),
    };
    let f = match snap.fields.get(idx) {
        Some(f) => f.clone(),
        None if idx == 2 && snap.fields.len() == 2 => curl(&snap.fields[1]),
        None => return Err(Failure::Usage(format!("snapshot has no '{field}' field"))),
    };
    let s = s.unwrap_or(3.0 / p - 1.0);
    let partition = DyadicPartition::new(&snap.grid, Profile::Quintic)?;
    let norm = besov_norm(&partition, &f, BesovIndex::new(s, p, r)?)?;
    let mut v = json!({
        "field": field,
        "t": snap.t,
        "s": s,
        "p": p,
        "r": r,
        "value": norm.value,
        "uncovered_fraction": norm.uncovered_fraction,
        "mean_magnitude": norm.mean_magnitude,
    });
    if per_shell {
        v["shells"] = json!(norm.shells.iter().map(|c| json!({"j": c.j, "block_norm": c.block_norm, "contribution": c.contribution})).collect::<Vec<_>>());
    }
    let text = serde_json::to_string_pretty(&v).expect("serializable");
    println!("{text}");
    if let Some(dir) = out {
        ensure_dir(dir)?;
        write_json(&dir.join("besov.json"), &v)?;
    }
    Ok(())
}

pub fn evolve_cmd(cfg: &RunConfig, from: Option<&Path>) -> Res {
    let exp = cfg.experiment()?;
    let state = match from {
        Some(path) => load_snapshot(path)?.into_state(exp.params()?)?,
        None => exp.initial_state()?,
    };
    let ic = cfg.integrator()?;
    let traj = evolve(&state, &ic)?;
    let dir = cfg.out_dir().join("trajectory");
    ensure_dir(&dir)?;
    let partition = DyadicPartition::new(state.grid(), exp.profile)?;
    let mut entries = Vec::new();
    for (i, s) in traj.snapshots.iter().enumerate() {
        let name = format!("snap_{i:05}.hmh");
        save_snapshot(&dir.join(&name), s)?;
        entries.push(json!({"file": name, "t": s.t, "critical_level": level_of(&partition, cfg, s)?}));
    }
    let manifest = json!({
        "params": state.params,
        "integrator": ic,
        "status": format!("{:?}", traj.status),
        "steps": traj.steps,
        "max_projection": traj.max_projection,
        "snapshots": entries,
    });
    write_json(&dir.join("manifest.json"), &envelope("evolve", cfg, &manifest))?;
    println!("{} snapshots, status {:?}", traj.snapshots.len(), traj.status);
    if traj.diverged() {
        return Err(Failure::Verdict(format!("run diverged: {:?}", traj.status)));
    }
    Ok(())
}

pub fn picard(cfg: &RunConfig, threshold: bool) -> Res {
    let exp = cfg.experiment()?;
    let (n_max, tol) = (cfg.usize("picard.n_max")?, cfg.f64("picard.tol")?);
    if threshold {
        let report = run_picard(&exp, n_max, tol, cfg.usize("picard.bisect")?)?;
        return report_and_judge(cfg, "picard", &report);
    }
    let state = exp.initial_state()?;
    let mut pc = PicardConfig::new(exp.dt, exp.t_end, n_max, tol)?;
    pc.spec = exp.spec(true)?;
    pc.scheme = exp.scheme;
    let (traj, report) = picard_solve(&state.u, &state.b, &state.j, state.params, &pc)?;
    let dir = cfg.out_dir();
    ensure_dir(&dir)?;
    save_snapshot(&dir.join("picard_final.hmh"), traj.last())?;
    write_json(&dir.join("picard.json"), &envelope("picard", cfg, &report))?;
    println!(
        "iterations {}, converged {}, worst ratio (n ≥ 2) {:.4}, M {:.4e}",
        report.iterations,
        report.converged,
        report.worst_ratio_from(2),
        report.bound_m
    );
    if report.non_contraction || !report.converged {
        return Err(Failure::Verdict(format!("Picard iteration did not converge (non-contraction: {})", report.non_contraction)));
    }
    Ok(())
}

pub fn bound(cfg: &RunConfig) -> Res {
    report_and_judge(cfg, "bound", &run_global_bound(&cfg.experiment()?)?)
}

pub fn decay(cfg: &RunConfig) -> Res {
    report_and_judge(cfg, "decay", &run_decay(&cfg.experiment()?, &cfg.decay()?)?)
}

pub fn scaling(cfg: &RunConfig) -> Res {
    report_and_judge(cfg, "scaling", &run_scaling(&cfg.experiment()?, &cfg.f64_list("scaling.epsilons")?)?)
}

/// Pilot run on the configured seed, then `stability.held_out` further seeds
/// with the calibrated constant frozen.
pub fn stability(cfg: &RunConfig) -> Res {
    let exp = cfg.experiment()?;
    let opts = cfg.stability()?;
    let dir = cfg.out_dir();
    ensure_dir(&dir)?;
    let pilot = run_stability(&exp, &opts)?;
    write_report(&dir, "stability_pilot", "stability", cfg, &pilot)?;
    if pilot.verdict == Verdict::HypothesisNotMet {
        return judge(&pilot);
    }
    let c_hat = pilot.scalar_value("c_hat").unwrap_or(0.0);
    let frozen = StabilityOptions { c_hat: Some(c_hat), ..opts };
    let mut verdicts = vec![];
    let mut held = Vec::new();
    for k in 1..=cfg.usize("stability.held_out")? as u64 {
        let mut c = exp.clone();
        c.seed = exp.seed.wrapping_add(k);
        let r = run_stability(&c, &frozen)?;
        write_report(&dir, &format!("stability_seed_{}", c.seed), "stability", cfg, &r)?;
        held.push(json!({"seed": c.seed, "verdict": r.verdict, "difference_functional": r.scalar_value("difference_functional")}));
        verdicts.push(r.verdict);
    }
    let verdict = ExperimentReport::combine(verdicts);
    let summary = json!({"c_hat": c_hat, "held_out": held, "verdict": verdict});
    write_json(&dir.join("stability.json"), &envelope("stability", cfg, &summary))?;
    println!("stability: Ĉ = {c_hat:.4e}, held-out verdict {verdict:?}");
    if verdict == Verdict::Fail {
        return Err(Failure::Verdict("held-out stability bound violated".into()));
    }
    Ok(())
}

pub fn gronwall(path: &Path, c: f64, mu: f64, out: Option<&Path>) -> Res {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let rows = parse_series_csv(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let mut by_name: BTreeMap<&str, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for (t, name, v) in &rows {
        let key = match name.as_str() {
            "X" | "gronwall_x" => "X",
            "D" | "gronwall_d" => "D",
            "W" | "Omega" | "gronwall_omega" => "W",
            _ => continue,
        };
        let e = by_name.entry(key).or_default();
        e.0.push(*t);
        e.1.push(*v);
    }
    let get = |k: &str| by_name.get(k).ok_or_else(|| Failure::Usage(format!("series '{k}' missing from {}", path.display())));
    let (tx, x) = get("X")?;
    let (td, d) = get("D")?;
    let (tw, w) = get("W")?;
    if tx != td || tx != tw {
        return Err(Failure::Usage("X, D and W must share their time samples".into()));
    }
    let report = gronwall_check(tx, x, d, w, c, mu)?;
    let v: Value = json!({"C": c, "mu": mu, "report": report});
    println!("{}", serde_json::to_string_pretty(&v).expect("serializable"));
    if let Some(dir) = out {
        ensure_dir(dir)?;
        write_json(&dir.join("gronwall.json"), &v)?;
    }
    if !report.holds() {
        return Err(Failure::Verdict(format!("{:?}", report.outcome)));
    }
    Ok(())
}

/// Presets layered over the user configuration: `(name, overrides)`.
fn verify_presets(quick: bool) -> Vec<(&'static str, Vec<(&'static str, &'static str)>)> {
    if quick {
        vec![
            ("consistency", vec![("grid.n", "16"), ("integrator.t_end", "0.2"), ("integrator.dt", "0.02")]),
            ("bound", vec![("grid.n", "16"), ("integrator.t_end", "1"), ("integrator.dt", "0.05")]),
            ("scaling", vec![("grid.n", "32"), ("data.k_max", "2.5"), ("data.amplitude", "1")]),
            (
                "picard",
                vec![("grid.n", "8"), ("integrator.t_end", "0.5"), ("integrator.dt", "0.05"), ("data.amplitude", "1"), ("picard.bisect", "2")],
            ),
            ("stability", vec![("grid.n", "16"), ("integrator.t_end", "0.2"), ("integrator.dt", "0.02"), ("stability.held_out", "1")]),
        ]
    } else {
        vec![
            ("consistency", vec![("grid.n", "32"), ("integrator.t_end", "1"), ("integrator.dt", "0.02"), ("data.amplitude", "1")]),
            ("bound", vec![("grid.n", "32"), ("integrator.t_end", "10"), ("integrator.dt", "0.05")]),
            ("scaling", vec![("grid.n", "32"), ("data.k_max", "2.5"), ("data.amplitude", "1")]),
            ("picard", vec![("grid.n", "16"), ("integrator.t_end", "1"), ("integrator.dt", "0.05"), ("data.amplitude", "1")]),
            ("stability", vec![("grid.n", "32"), ("integrator.t_end", "1"), ("integrator.dt", "0.02")]),
            (
                "decay",
                vec![
                    ("grid.n", "64"),
                    ("grid.length", "8pi"),
                    ("data.spectrum", "power_law"),
                    ("data.k_min", "0"),
                    ("data.k_max", "100"),
                    ("data.alpha", "2"),
                    ("integrator.dt", "0.01"),
                    ("integrator.t_end", "5.12"),
                ],
            ),
        ]
    }
}

pub fn verify(cfg: &RunConfig, quick: bool) -> Res {
    let root = cfg.out_dir().join("verify");
    ensure_dir(&root)?;
    let mut summary = Vec::new();
    let mut failed = Vec::new();
    for (name, overrides) in verify_presets(quick) {
        let mut c = cfg.clone();
        for (k, v) in overrides {
            c.set(k, v)?;
        }
        c.set("output.dir", &root.to_string_lossy())?;
        let exp = c.experiment()?;
        let verdict = match name {
            "consistency" => {
                let r = run_consistency(&exp)?;
                write_report(&root, name, "verify", &c, &r)?;
                r.verdict
            }
            "bound" => {
                let r = run_global_bound(&exp)?;
                write_report(&root, name, "verify", &c, &r)?;
                r.verdict
            }
            "scaling" => {
                let r = run_scaling(&exp, &c.f64_list("scaling.epsilons")?)?;
                write_report(&root, name, "verify", &c, &r)?;
                r.verdict
            }
            "picard" => {
                let r = run_picard(&exp, c.usize("picard.n_max")?, c.f64("picard.tol")?, c.usize("picard.bisect")?)?;
                write_report(&root, name, "verify", &c, &r)?;
                r.verdict
            }
            "decay" => {
                let r = run_decay(&exp, &c.decay()?)?;
                write_report(&root, name, "verify", &c, &r)?;
                r.verdict
            }
            "stability" => match stability(&c) {
                Ok(()) => Verdict::Pass,
                Err(Failure::Verdict(_)) => Verdict::Fail,
                Err(e) => return Err(e),
            },
            _ => unreachable!("preset names are fixed"),
        };
        println!("verify {name}: {verdict:?}");
        if verdict == Verdict::Fail {
            failed.push(name);
        }
        summary.push(json!({"experiment": name, "verdict": verdict}));
    }
    write_json(&root.join("summary.json"), &envelope("verify", cfg, json!({"quick": quick, "experiments": summary})))?;
    let _ = std::io::stdout().flush();
    if !failed.is_empty() {
        return Err(Failure::Verdict(format!("failed: {}", failed.join(", "))));
    }
    Ok(())
}
