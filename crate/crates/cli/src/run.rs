//! Executes one command on one scenario and writes its outputs and manifest
//! into a run directory.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use skinbath::effective::{braided_separations, dfi_report, reduced_evolution};
use skinbath::hyperbolic::{coupling_separation, curvature, pseudosphere_sample};
use skinbath::selfenergy::sigma_matrix;
use skinbath::spectra::{hidden_bound_state, obc_modes, pbc_spectrum, BoundStateOptions};
use skinbath::{
    assemble_hamiltonian, derive_parameters, evolve, extract_observables, initial_state, Complex64, CouplingPoint,
    Observable,
};

use crate::config::{Format, ScenarioConfig};
use crate::error::CliError;
use crate::output::{write_json, write_table, Cell, Table};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Simulate,
    Spectrum,
    Selfenergy,
    Boundstate,
    Dfi,
    Hyperbolic,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Spectrum => "spectrum",
            Command::Selfenergy => "selfenergy",
            Command::Boundstate => "boundstate",
            Command::Dfi => "dfi",
            Command::Hyperbolic => "hyperbolic",
        }
    }
}

/// What a command produced, before the manifest is written.
#[derive(Clone, Debug, Default)]
pub struct RunReport {
    pub files: Vec<String>,
    pub warnings: Vec<String>,
    pub summary: Map<String, Value>,
}

struct Ctx<'a> {
    dir: &'a Path,
    formats: Vec<Format>,
    report: RunReport,
}

impl Ctx<'_> {
    fn table(&mut self, stem: &str, table: &Table) -> Result<(), CliError> {
        let names = write_table(self.dir, stem, table, &self.formats)?;
        self.report.files.extend(names);
        Ok(())
    }

    fn note(&mut self, key: &str, value: Value) {
        self.report.summary.insert(key.to_string(), value);
    }
}

/// Runs `command`, writes its outputs and `manifest.json` into `dir`. The
/// manifest is written on failure too, with `status = "failed"`.
pub fn execute(
    command: Command,
    cfg: &ScenarioConfig,
    dir: &Path,
    format: Option<Format>,
) -> Result<RunReport, CliError> {
    cfg.validate()?;
    std::fs::create_dir_all(dir)?;
    let start = Instant::now();
    let mut ctx = Ctx { dir, formats: cfg.formats(format), report: RunReport::default() };
    let result = match command {
        Command::Simulate => simulate(cfg, &mut ctx),
        Command::Spectrum => spectrum(cfg, &mut ctx),
        Command::Selfenergy => selfenergy(cfg, &mut ctx),
        Command::Boundstate => boundstate(cfg, &mut ctx),
        Command::Dfi => dfi(cfg, &mut ctx),
        Command::Hyperbolic => hyperbolic(cfg, &mut ctx),
    };
    let mut report = ctx.report;
    let mut manifest = json!({
        "tool": "skinbath",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command.name(),
        "status": if result.is_ok() { "ok" } else { "failed" },
        "resolved_config": cfg.to_value(),
        "derived": derived(cfg),
        "wall_clock_seconds": start.elapsed().as_secs_f64(),
        "warnings": report.warnings,
        "files": report.files,
        "summary": report.summary,
    });
    if let Err(e) = &result {
        manifest["error"] = json!(e.to_string());
        manifest["exit_code"] = json!(e.exit_code());
    }
    write_json(dir, "manifest.json", &manifest)?;
    report.files.push("manifest.json".into());
    result.map(|_| report)
}

fn derived(cfg: &ScenarioConfig) -> Value {
    let lat = cfg.lattice_spec();
    match derive_parameters(&lat) {
        Ok(d) => json!({
            "t_r": d.t_r,
            "t_l": d.t_l,
            "beta": d.beta,
            "kappa": d.beta.and_then(|b| curvature(b).ok()),
            "regime": d.regime,
        }),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn complex(z: Complex64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

fn simulate(cfg: &ScenarioConfig, ctx: &mut Ctx) -> Result<(), CliError> {
    let spec = cfg.system_spec();
    let label = cfg.initial_label()?;
    let icfg = cfg.integrator_config()?;
    let h = assemble_hamiltonian(&spec)?;
    let traj = evolve(&h, &initial_state(&spec, &label)?, &icfg)?;
    ctx.report.warnings.extend(traj.warnings.iter().cloned());

    let request: Vec<Observable> = traj.labels.iter().map(|l| Observable::Population(l.clone())).collect();
    let series = extract_observables(&traj, &request)?;
    let mut columns = vec!["t".to_string()];
    for s in &series {
        columns.push(s.name.clone());
        columns.push(format!("log10_{}", s.name));
    }
    columns.extend(["stored_norm".into(), "log_scale".into()]);
    let mut table = Table::new(columns);
    for (i, &t) in traj.times.iter().enumerate() {
        let mut row = vec![Cell::Num(t)];
        for s in &series {
            row.push(Cell::Num(s.linear[i].unwrap_or(f64::INFINITY)));
            row.push(Cell::Num(s.log10[i]));
        }
        row.push(Cell::Num(traj.stored_norm[i]));
        row.push(Cell::Num(traj.log_scale[i]));
        table.push(row);
    }
    if series.iter().any(|s| s.overflowed()) {
        ctx.report.warnings.push("linear populations overflow f64; use the log10 columns".into());
    }
    ctx.table("trajectory", &table)?;

    if let Some(fields) = &traj.fields {
        let mut ft = Table::new(["t", "n", "I_n", "log10_I_n"]);
        for ((&t, row), &l) in traj.times.iter().zip(fields).zip(&traj.log_scale) {
            for (n, &f) in row.iter().enumerate() {
                let log10 = (2.0 * l + f.ln()) / std::f64::consts::LN_10;
                ft.push(vec![Cell::Num(t), Cell::from(n), Cell::Num(10f64.powf(log10)), Cell::Num(log10)]);
            }
        }
        ctx.table("fields", &ft)?;
    }

    let finals: Map<String, Value> =
        series.iter().map(|s| (s.name.clone(), json!(s.log10.last().copied()))).collect();
    ctx.note("initial", json!(label));
    ctx.note("final_log10_population", Value::Object(finals));
    ctx.note("accepted_steps", json!(traj.accepted_steps));
    ctx.note("rejected_steps", json!(traj.rejected_steps));
    Ok(())
}

fn spectrum(cfg: &ScenarioConfig, ctx: &mut Ctx) -> Result<(), CliError> {
    let lat = cfg.lattice_spec();
    let pbc = pbc_spectrum(&lat, cfg.analysis.spectrum.k_count)?;
    let mut table = Table::new(["k", "re_e", "im_e"]);
    for p in &pbc.points {
        table.push(vec![Cell::Num(p.k), Cell::Num(p.energy.re), Cell::Num(p.energy.im)]);
    }
    ctx.table("spectrum", &table)?;
    ctx.note("pbc_max_imag", json!(pbc.max_imag));
    match obc_modes(&lat) {
        Ok(modes) => {
            let mut t = Table::new(["l", "k", "re_e", "im_e", "residual"]);
            for m in &modes {
                t.push(vec![
                    Cell::from(m.l),
                    Cell::Num(m.k),
                    Cell::Num(m.energy.re),
                    Cell::Num(m.energy.im),
                    Cell::Num(m.residual),
                ]);
            }
            ctx.table("obc_spectrum", &t)?;
            ctx.note("obc_mode_count", json!(modes.len()));
        }
        Err(e) => ctx.report.warnings.push(format!("open-boundary modes skipped: {e}")),
    }
    Ok(())
}

fn require_emitters(cfg: &ScenarioConfig) -> Result<(), CliError> {
    if cfg.emitters.is_empty() {
        return Err(CliError::Config("emitters: at least one emitter required".into()));
    }
    Ok(())
}

fn selfenergy(cfg: &ScenarioConfig, ctx: &mut Ctx) -> Result<(), CliError> {
    require_emitters(cfg)?;
    let spec = cfg.system_spec();
    let lat = &spec.lattice;
    let (t_r, t_l) = (lat.t_r(), lat.t_l());
    lat.beta()?;
    let j = (t_r * t_l).sqrt();
    let sc = &cfg.analysis.selfenergy;
    let (lo, hi) = (sc.delta_min.unwrap_or(-3.0 * j), sc.delta_max.unwrap_or(3.0 * j));
    if sc.count == 0 || !(hi >= lo) || !(sc.epsilon >= 0.0) {
        return Err(CliError::Config(
            "analysis.selfenergy: need count > 0, delta_max >= delta_min and epsilon >= 0".into(),
        ));
    }
    let sets: Vec<&[CouplingPoint]> = spec.emitters.iter().map(|e| e.couplings.as_slice()).collect();
    let labels: Vec<&str> = spec.emitters.iter().map(|e| e.label.as_str()).collect();
    let mut columns = vec!["delta".to_string()];
    for a in &labels {
        for b in &labels {
            columns.push(format!("re_sigma_{a}_{b}"));
            columns.push(format!("im_sigma_{a}_{b}"));
        }
    }
    let mut table = Table::new(columns);
    for i in 0..sc.count {
        let delta = if sc.count == 1 { lo } else { lo + (hi - lo) * i as f64 / (sc.count - 1) as f64 };
        let s = sigma_matrix(Complex64::new(delta, sc.epsilon), &sets, t_r, t_l)?;
        let mut row = vec![Cell::Num(delta)];
        for r in &s {
            for z in r {
                row.push(Cell::Num(z.re));
                row.push(Cell::Num(z.im));
            }
        }
        table.push(row);
    }
    ctx.table("selfenergy", &table)?;

    let mut at_detuning = Map::new();
    for (e, em) in spec.emitters.iter().enumerate() {
        let s = sigma_matrix(Complex64::new(em.detuning, sc.epsilon), &sets, t_r, t_l)?;
        let sigma = s[e][e];
        at_detuning.insert(
            em.label.clone(),
            json!({ "sigma": complex(sigma), "decay_rate": -2.0 * sigma.im, "lamb_shift": sigma.re }),
        );
    }
    ctx.note("at_detuning", Value::Object(at_detuning));
    Ok(())
}

fn boundstate(cfg: &ScenarioConfig, ctx: &mut Ctx) -> Result<(), CliError> {
    require_emitters(cfg)?;
    let spec = cfg.system_spec();
    let bc = &cfg.analysis.boundstate;
    let opts = BoundStateOptions { target: bc.target, tol: bc.tol, max_iter: bc.max_iter, ..Default::default() };
    let res = hidden_bound_state(&spec, &opts)?;
    let mut table = Table::new(["n", "abs_psi", "phase"]);
    for (n, (m, p)) in res.modulus().iter().zip(res.phase()).enumerate() {
        table.push(vec![Cell::from(n), Cell::Num(*m), Cell::Num(p)]);
    }
    ctx.table("profile", &table)?;
    if !res.converged {
        ctx.report
            .warnings
            .push(format!("inverse iteration did not converge in {} iterations", res.iterations));
    }
    let emitters: Map<String, Value> = spec
        .emitters
        .iter()
        .enumerate()
        .map(|(e, em)| (em.label.clone(), complex(res.amplitudes[res.sites + e])))
        .collect();
    ctx.note("energy", complex(res.energy));
    ctx.note("residual", json!(res.residual));
    ctx.note("iterations", json!(res.iterations));
    ctx.note("converged", json!(res.converged));
    ctx.note("emitter_amplitudes", Value::Object(emitters));
    Ok(())
}

fn dfi(cfg: &ScenarioConfig, ctx: &mut Ctx) -> Result<(), CliError> {
    let spec = cfg.system_spec();
    let (d1, d2) = braided_separations(&spec)?;
    let report = dfi_report(&spec)?;
    ctx.report.warnings.extend(report.warnings.iter().cloned());
    let mut value = serde_json::to_value(&report).expect("report serializes");
    value["separations"] = json!({ "d_prime": d1, "d_double_prime": d2 });
    let name = write_json(ctx.dir, "dfi.json", &value)?;
    ctx.report.files.push(name);

    let label = cfg.initial_label()?;
    let e = spec.emitter_index(&label)?;
    let mut u0 = [Complex64::default(); 2];
    u0[e] = Complex64::new(1.0, 0.0);
    let times = cfg.integrator_config()?.sample_times;
    let red = reduced_evolution(&report.hamiltonian, u0, &times);
    let (pb, pc) = (red.population(0), red.population(1));
    let mut table = Table::new(vec![
        "t".to_string(),
        format!("P_{}", spec.emitters[0].label),
        format!("P_{}", spec.emitters[1].label),
    ]);
    for (i, &t) in times.iter().enumerate() {
        table.push(vec![Cell::Num(t), Cell::Num(pb[i]), Cell::Num(pc[i])]);
    }
    ctx.table("reduced", &table)?;
    ctx.note("is_dfi", json!(report.is_dfi));
    ctx.note("period", json!(report.period));
    ctx.note("nonreciprocity_ratio", complex(report.nonreciprocity_ratio));
    Ok(())
}

fn hyperbolic(cfg: &ScenarioConfig, ctx: &mut Ctx) -> Result<(), CliError> {
    let hc = &cfg.analysis.hyperbolic;
    let kappa = match hc.kappa {
        Some(k) => k,
        None => curvature(cfg.lattice_spec().beta()?)?,
    };
    if !(kappa > 0.0) {
        return Err(CliError::Config(format!(
            "analysis.hyperbolic: curvature {kappa} is not positive; the lattice is flat"
        )));
    }
    if !(hc.x0 > 0.0) {
        return Err(CliError::Config("analysis.hyperbolic.x0: must be positive".into()));
    }
    let points = pseudosphere_sample(kappa, hc.r_count, hc.theta_count)?;
    let mut table = Table::new(["branch", "r", "theta", "u", "v", "w", "residual"]);
    for p in &points {
        table.push(vec![
            Cell::Int(p.branch as i64),
            Cell::Num(p.r),
            Cell::Num(p.theta),
            Cell::Num(p.u),
            Cell::Num(p.v),
            Cell::Num(p.w),
            Cell::Num(p.residual),
        ]);
    }
    ctx.table("surface", &table)?;

    let root = kappa.sqrt();
    let coupled: Vec<i64> = cfg.emitters.iter().flat_map(|e| e.couplings.iter().map(|c| c.site)).collect();
    let mut coords = Table::new(["n", "x", "ln_x", "coupled"]);
    for n in 0..cfg.lattice.m as i64 {
        let ln_x = hc.x0.ln() + n as f64 * root;
        coords.push(vec![Cell::Int(n), Cell::Num(ln_x.exp()), Cell::Num(ln_x), Cell::from(coupled.contains(&n) as usize)]);
    }
    ctx.table("coordinates", &coords)?;

    let separations: Map<String, Value> = cfg
        .emitters
        .iter()
        .filter(|e| e.couplings.len() >= 2)
        .map(|e| {
            let (a, b) = (e.couplings[0].site, e.couplings[e.couplings.len() - 1].site);
            (e.label.clone(), json!(coupling_separation(hc.x0, a, b, kappa)))
        })
        .collect();
    let max_residual = points.iter().map(|p| p.residual.abs()).fold(0.0, f64::max);
    ctx.note("kappa", json!(kappa));
    ctx.note("rim_radius", json!(1.0 / root));
    ctx.note("max_residual", json!(max_residual));
    ctx.note("coupling_separation", Value::Object(separations));
    Ok(())
}
