//! Batch driver behind the `fieldlab` command line: configuration, profile
//! cache, and the six tasks with their CSV/JSON artifacts.

mod cache;
mod config;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use log::info;

pub use cache::{cache_key, resolve_cache_dir, CacheEntry, ProfileCache, TOOL_VERSION};
pub use config::{apply_override, EnvelopeConfig, FSpec, RunConfig, Task};

use crate::envelope::{build_envelope, uniform_grid, verify_envelope, Envelope};
use crate::error::{FieldlabError, Result};
use crate::format::fmt17;
use crate::functionals::{energy_aux, energy_kt, energy_sf, functional_report};
use crate::nonlinearity::{check_f_conditions, check_m_conditions, KirchhoffFunction, Nonlinearity};
use crate::shooter::{count_sign_changes, solution_family, RadialProfile};
use crate::transfer::{multiplicity_sweep, solve_transfer};

/// Thresholds applied by the verify task.
pub const VERIFY_IDENTITY_TOL: f64 = 1e-5;
pub const VERIFY_STRONG_TOL: f64 = 1e-6;
pub const VERIFY_TAIL_TOL: f64 = 1e-4;

pub const SOLVE_COLUMNS: &str = "n,nodes,s,grad_norm_sq,l2_norm_sq,integral_F,I,J,K,pohozaev,nehari,strong_sup";

#[derive(Debug, Clone, Default)]
pub struct RunSummary {
    pub messages: Vec<String>,
    pub files: Vec<PathBuf>,
}

impl FieldlabError {
    /// Process exit status: 2 configuration, 3 numerical, 4 invariant.
    pub fn exit_code(&self) -> i32 {
        match self {
            FieldlabError::Config(_)
            | FieldlabError::InvalidParameter(_)
            | FieldlabError::ConditionViolated { .. }
            | FieldlabError::Json(_) => 2,
            FieldlabError::Invariant(_) => 4,
            FieldlabError::InvalidBracket(_)
            | FieldlabError::BisectionExhausted { .. }
            | FieldlabError::Numerical(_)
            | FieldlabError::Io(_) => 3,
        }
    }
}

fn write_file(summary: &mut RunSummary, dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    summary.files.push(path);
    Ok(())
}

/// Cached or freshly solved `v_1..v_{n_max}`.
fn family(cfg: &RunConfig, f: Arc<Nonlinearity>, cache: &ProfileCache, summary: &mut RunSummary) -> Result<Vec<RadialProfile>> {
    let keys: Vec<String> = (0..cfg.n_max).map(|n| cache_key(&f, cfg.dimension, n, &cfg.shooting)).collect();
    let cached: Vec<Option<RadialProfile>> = keys.iter().map(|k| cache.get(k)).collect::<Result<_>>()?;
    if cached.iter().all(Option::is_some) {
        summary.messages.push(format!("loaded {} profiles from cache", cfg.n_max));
        return Ok(cached.into_iter().flatten().collect());
    }
    let fam = solution_family(f, cfg.dimension, cfg.n_max, &cfg.shooting)?;
    for w in &fam.warnings {
        summary.messages.push(format!("warning: {w}"));
    }
    for (n, p) in fam.profiles.iter().enumerate() {
        cache.put(&keys[n], n, p)?;
    }
    if fam.profiles.is_empty() {
        return Err(FieldlabError::Numerical("no bound state found".into()));
    }
    Ok(fam.profiles)
}

fn envelope_for(cfg: &RunConfig, f: Arc<Nonlinearity>) -> Result<Envelope> {
    let e = &cfg.envelope;
    build_envelope(f, cfg.dimension, e.p0(cfg.dimension), uniform_grid(e.t_max, e.points))
}

/// Runs one task. Condition reports never fail a run; verify fails with an
/// invariant error when any cached profile violates its checks.
pub fn run(task: Task, cfg: &RunConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let mut summary = RunSummary::default();
    let out = cfg.output.clone();
    let f = Arc::new(cfg.nonlinearity()?);
    match task {
        Task::Check => {
            let mut reports = check_f_conditions(&f, cfg.dimension, &cfg.sampling)?;
            reports.extend(check_m_conditions(&cfg.m, cfg.dimension, &cfg.sampling)?);
            for r in &reports {
                summary.messages.push(format!("{:?}: {:?}", r.condition_id, r.verdict));
            }
            write_file(&mut summary, &out, "check.json", &serde_json::to_string_pretty(&reports)?)?;
        }
        Task::Envelope => {
            let e = envelope_for(cfg, f.clone())?;
            let mut csv = Vec::new();
            e.write_csv(&mut csv)?;
            write_file(&mut summary, &out, "envelope.csv", &String::from_utf8_lossy(&csv))?;
            let reports = verify_envelope(&e, &f);
            for r in &reports {
                summary.messages.push(format!("{:?}: {:?}", r.condition_id, r.verdict));
            }
            write_file(&mut summary, &out, "envelope_reports.json", &serde_json::to_string_pretty(&reports)?)?;
        }
        Task::Solve => {
            let cache = ProfileCache::open(&resolve_cache_dir(&cfg.cache_dir))?;
            let profiles = family(cfg, f.clone(), &cache, &mut summary)?;
            let env = envelope_for(cfg, f.clone())?;
            let mut csv = format!("{SOLVE_COLUMNS}\n");
            for (i, v) in profiles.iter().enumerate() {
                let rep = functional_report(v, &cfg.m)?;
                let cols = [
                    v.shoot_height,
                    rep.grad_norm_sq,
                    rep.l2_norm_sq,
                    rep.integral_f,
                    energy_sf(v)?,
                    energy_kt(v, &cfg.m)?,
                    energy_aux(v, &env, cfg.envelope.m0)?,
                    rep.pohozaev_residual,
                    rep.nehari_residual,
                    rep.strong_residual_sup,
                ];
                let _ = write!(csv, "{},{}", i + 1, v.node_count);
                for c in cols {
                    let _ = write!(csv, ",{}", fmt17(c));
                }
                csv.push('\n');
            }
            summary.messages.push(format!("solved {} profiles", profiles.len()));
            write_file(&mut summary, &out, "solve.csv", &csv)?;
        }
        Task::Transfer => {
            let cache = ProfileCache::open(&resolve_cache_dir(&cfg.cache_dir))?;
            let profiles = family(cfg, f.clone(), &cache, &mut summary)?;
            let mut csv = String::from("n,nodes,root,t,kt_grad_norm_sq,h_residual,strong_residual,J\n");
            let mut results = Vec::new();
            for (i, v) in profiles.iter().enumerate() {
                let res = solve_transfer(v, &cfg.m, &cfg.transfer)?;
                if res.roots.is_empty() {
                    summary.messages.push(format!("v{}: no root of h(v, t) = 1", i + 1));
                }
                for (k, u) in res.profiles.iter().enumerate() {
                    let d = res.diagnostics[k];
                    let _ = writeln!(
                        csv,
                        "{},{},{},{},{},{},{},{}",
                        i + 1,
                        v.node_count,
                        k + 1,
                        fmt17(d.t),
                        fmt17(res.kirchhoff_grad_norms[k]),
                        fmt17(d.h_residual),
                        d.strong_residual.map(fmt17).unwrap_or_default(),
                        fmt17(energy_kt(u, &cfg.m)?),
                    );
                }
                results.push(res);
            }
            write_file(&mut summary, &out, "transfer.csv", &csv)?;
            write_file(&mut summary, &out, "transfer.json", &serde_json::to_string_pretty(&results)?)?;
        }
        Task::Sweep => {
            if cfg.q_grid.is_empty() {
                return Err(FieldlabError::Config("sweep needs a nonempty q_grid".into()));
            }
            let fam_m = cfg.q_family.clone().unwrap_or_else(|| cfg.m.clone());
            if matches!(fam_m.with_q(1.0), Err(_)) {
                return Err(FieldlabError::Config("q_family has no coupling parameter q".into()));
            }
            let cache = ProfileCache::open(&resolve_cache_dir(&cfg.cache_dir))?;
            let profiles = family(cfg, f.clone(), &cache, &mut summary)?;
            let table = multiplicity_sweep(&fam_m, &profiles, &cfg.q_grid, &cfg.transfer)?;
            let k = table.rows.iter().map(|r| r.t.len()).max().unwrap_or(0);
            let mut header = vec!["q".to_string(), "n_found".to_string()];
            for prefix in ["t", "kt_grad", "J"] {
                header.extend((1..=k).map(|i| format!("{prefix}_{i}")));
            }
            header.push("diagnostics".into());
            let mut csv = header.join(",") + "\n";
            for row in &table.rows {
                let _ = write!(csv, "{},{}", fmt17(row.q), row.n_found);
                for col in [&row.t, &row.kt_grad, &row.energies] {
                    for i in 0..k {
                        let _ = write!(csv, ",{}", col.get(i).map(|x| fmt17(*x)).unwrap_or_default());
                    }
                }
                let _ = writeln!(csv, ",{}", row.diagnostics.replace(',', ";"));
            }
            write_file(&mut summary, &out, "sweep.csv", &csv)?;
            write_file(&mut summary, &out, "thresholds.json", &serde_json::to_string_pretty(&table.thresholds)?)?;
        }
        Task::Verify => {
            let cache = ProfileCache::open(&resolve_cache_dir(&cfg.cache_dir))?;
            let entries = cache.entries()?;
            let unit = KirchhoffFunction::unit();
            let mut failures = Vec::new();
            for (path, entry) in &entries {
                let problems = verify_profile(&entry.profile, &unit)?;
                for p in problems {
                    failures.push(format!("{}: {p}", path.display()));
                }
            }
            summary.messages.push(format!("{} profiles verified", entries.len()));
            if !failures.is_empty() {
                return Err(FieldlabError::Invariant(failures.join("; ")));
            }
        }
    }
    info!("{task:?} finished");
    Ok(summary)
}

/// Recomputes residuals and structural invariants from the raw samples.
pub fn verify_profile(p: &RadialProfile, m: &KirchhoffFunction) -> Result<Vec<String>> {
    let mut problems = Vec::new();
    if p.derivs.first() != Some(&0.0) {
        problems.push("v'(0) != 0".to_string());
    }
    let nodes = count_sign_changes(&p.values);
    if nodes != p.node_count {
        problems.push(format!("node_count {} but {nodes} sign changes", p.node_count));
    }
    match p.tail {
        None => problems.push("missing tail".into()),
        Some(t) if !(t.decay_rate > 0.0) => problems.push("nonpositive tail decay rate".into()),
        Some(_) => {}
    }
    if !problems.is_empty() {
        return Ok(problems);
    }
    if let Some((dv, dl)) = p.tail_consistency() {
        if !(dv < VERIFY_TAIL_TOL && dl < VERIFY_TAIL_TOL) {
            problems.push(format!("tail mismatch: value {dv:e}, log-derivative {dl:e}"));
        }
    }
    let rep = functional_report(p, m)?;
    if !(rep.pohozaev_residual.abs() < VERIFY_IDENTITY_TOL) {
        problems.push(format!("pohozaev residual {:e}", rep.pohozaev_residual));
    }
    if !(rep.nehari_residual.abs() < VERIFY_IDENTITY_TOL) {
        problems.push(format!("nehari residual {:e}", rep.nehari_residual));
    }
    if !(rep.strong_residual_sup < VERIFY_STRONG_TOL) {
        problems.push(format!("strong residual {:e}", rep.strong_residual_sup));
    }
    Ok(problems)
}
