mod config;

use clap::{Args, Parser, Subcommand};
use config::{Experiment, RunConfig};
use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;
use thermo_tdg::diagnostics::{estimate_order, EnergyReport};
use thermo_tdg::experiments::{extract_fronts, rotation_defect, SpatialError, TemporalError};
use thermo_tdg::output::{fmt_num, state_csv, write_csv, write_vtk};
use thermo_tdg::stepper::Scheme;
use thermo_tdg::Result;

#[derive(Parser)]
#[command(name = "thermo-tdg", version, about = "Operator-split space-time DG thermoelasticity experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Manufactured-solution error study (space and time ladders).
    Manufactured(Common),
    /// Laser pulse on a clamped bar.
    Laser(Common),
    /// Initial temperature pulse in a square plate.
    Pulse2d(Common),
    /// Manufactured study with the schemes run concurrently.
    Convergence(Common),
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Use the full-resolution meshes.
    #[arg(long)]
    paper_scale: bool,
}

struct Ctx {
    config: RunConfig,
    out: PathBuf,
    hash: String,
}

impl Ctx {
    fn csv(&self, name: &str, header: &str, rows: &[String]) -> Result<()> {
        let f = BufWriter::new(File::create(self.out.join(name))?);
        write_csv(f, &self.hash, header, rows)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, common) = match cli.command {
        Command::Manufactured(c) => (Experiment::Manufactured, c),
        Command::Laser(c) => (Experiment::Laser, c),
        Command::Pulse2d(c) => (Experiment::Pulse2d, c),
        Command::Convergence(c) => (Experiment::Convergence, c),
    };
    match run(experiment, &common) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(experiment: Experiment, common: &Common) -> Result<()> {
    let mut config = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if common.paper_scale {
        config.paper_scale();
    }
    config.validate(experiment)?;
    std::fs::create_dir_all(&common.out)?;
    let ctx = Ctx { hash: config.hash(experiment), config, out: common.out.clone() };
    match experiment {
        Experiment::Manufactured => cmd_studies(&ctx, false),
        Experiment::Convergence => cmd_studies(&ctx, true),
        Experiment::Laser => cmd_laser(&ctx),
        Experiment::Pulse2d => cmd_pulse2d(&ctx),
    }
}

type Study = (Vec<SpatialError>, Vec<TemporalError>);

fn study(ctx: &Ctx, scheme: Scheme) -> Result<Study> {
    let case = ctx.config.manufactured_case()?;
    let settings = ctx.config.solver_settings()?;
    let m = &ctx.config.manufactured;
    let spatial = case.spatial_study(scheme, &m.spatial_ladder, &settings)?;
    let temporal = case.temporal_study(scheme, m.temporal_elements, &m.temporal_ladder, &settings)?;
    Ok((spatial, temporal))
}

/// Spatial and temporal ladders for every configured scheme. Rows of the
/// schemes that finished are written even when another one fails.
fn cmd_studies(ctx: &Ctx, parallel: bool) -> Result<()> {
    let schemes = ctx.config.schemes()?;
    let results: Vec<Result<Study>> = if parallel {
        std::thread::scope(|s| {
            let handles: Vec<_> = schemes.iter().map(|&sc| s.spawn(move || study(ctx, sc))).collect();
            handles.into_iter().map(|h| h.join().expect("study thread panicked")).collect()
        })
    } else {
        schemes.iter().map(|&sc| study(ctx, sc)).collect()
    };
    let mut spatial_rows = Vec::new();
    let mut temporal_rows = Vec::new();
    let mut order_rows = Vec::new();
    let mut first_err = None;
    for (scheme, res) in schemes.iter().zip(results) {
        let (spatial, temporal) = match res {
            Ok(r) => r,
            Err(e) => {
                first_err.get_or_insert(e);
                continue;
            }
        };
        for r in &spatial {
            spatial_rows.push(format!("{},{},{},{}", fmt_num(r.h), r.scheme, fmt_num(r.h1_error), fmt_num(r.l2_error)));
        }
        for r in &temporal {
            temporal_rows.push(format!("{},{},{}", fmt_num(r.dt), r.scheme, fmt_num(r.midpoint_error)));
        }
        let hs: Vec<f64> = spatial.iter().map(|r| r.h).collect();
        let h1: Vec<f64> = spatial.iter().map(|r| r.h1_error).collect();
        let l2: Vec<f64> = spatial.iter().map(|r| r.l2_error).collect();
        let dts: Vec<f64> = temporal.iter().map(|r| r.dt).collect();
        let mid: Vec<f64> = temporal.iter().map(|r| r.midpoint_error).collect();
        let (o1, o2, ot) = (estimate_order(&h1, &hs)?, estimate_order(&l2, &hs)?, estimate_order(&mid, &dts)?);
        println!("{scheme}: H1 order {o1:.3}, L2 order {o2:.3}, temporal order {ot:.3}");
        order_rows.push(format!("{scheme},{},{},{}", fmt_num(o1), fmt_num(o2), fmt_num(ot)));
    }
    ctx.csv("errors.csv", "h,scheme,h1_error,l2_error", &spatial_rows)?;
    ctx.csv("errors_temporal.csv", "dt,scheme,midpoint_l2_error", &temporal_rows)?;
    ctx.csv("orders.csv", "scheme,h1_order,l2_order,temporal_order", &order_rows)?;
    match first_err {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn energy_rows(energies: &[EnergyReport]) -> Vec<String> {
    energies.iter().map(|e| e.csv_row()).collect()
}

fn cmd_laser(ctx: &Ctx) -> Result<()> {
    let cfg = &ctx.config.laser;
    let case = ctx.config.laser_case()?;
    if !case.resolves_pulse() {
        eprintln!("warning: h = {} does not resolve the pulse depth {}", case.h, case.depth);
    }
    let run = case.run(ctx.config.laser_scheme()?, &ctx.config.solver_settings()?)?;

    let mut field = Vec::new();
    for (t, th) in run.times.iter().zip(&run.theta).step_by(cfg.time_stride) {
        for (x, v) in run.xs.iter().zip(th).step_by(cfg.space_stride) {
            field.push(format!("{},{},{}", fmt_num(*x), fmt_num(*t), fmt_num(*v)));
        }
    }
    ctx.csv("field.csv", "xi,tau,theta", &field)?;
    ctx.csv("energy.csv", EnergyReport::CSV_HEADER, &energy_rows(&run.energies))?;
    let slabs: Vec<String> = run
        .records
        .iter()
        .map(|r| {
            format!("{},{},{},{}", fmt_num(r.t_start), fmt_num(r.t_end), fmt_num(r.jump_dissipation), fmt_num(r.conduction_dissipation))
        })
        .collect();
    ctx.csv("slabs.csv", "t_start,t_end,jump_dissipation,conduction_dissipation", &slabs)?;

    let mut fronts = Vec::new();
    for (t, th) in run.times.iter().zip(&run.theta) {
        for (i, s) in extract_fronts(&run.xs, th, cfg.front_threshold).iter().enumerate() {
            fronts.push(format!("{},{i},{},{},{},{}", fmt_num(*t), fmt_num(s.start), fmt_num(s.end), fmt_num(s.peak_x), fmt_num(s.peak)));
        }
    }
    ctx.csv("fronts.csv", "tau,front,start,end,peak_x,peak", &fronts)?;

    let [w0, w1] = cfg.speed_window;
    let speeds = run.front_speeds(cfg.speed_threshold, (w0, w1));
    let row = match speeds {
        Some(s) => {
            println!("front speeds: fast {:.4}, slow {:.4} ({} samples)", s.fast, s.slow, s.samples);
            format!("{},{},{},{},{},{}", fmt_num(cfg.speed_threshold), fmt_num(w0), fmt_num(w1), fmt_num(s.fast), fmt_num(s.slow), s.samples)
        }
        None => {
            println!("front speeds: two distinct fronts not found at threshold {}", cfg.speed_threshold);
            format!("{},{},{},,,0", fmt_num(cfg.speed_threshold), fmt_num(w0), fmt_num(w1))
        }
    };
    ctx.csv("front_speeds.csv", "threshold,window_start,window_end,fast,slow,samples", &[row])?;
    if let Some(v) = run.energy_variation_after(5.0 * case.tau_p) {
        println!("energy variation after 5 tau_p: {:.3}%", 100.0 * v);
    }
    Ok(())
}

fn snapshot_name(t: f64, ext: &str) -> String {
    format!("snapshot_t{t:.4}.{ext}")
}

fn cmd_pulse2d(ctx: &Ctx) -> Result<()> {
    let case = ctx.config.pulse_case()?;
    let run = case.run(ctx.config.pulse_scheme()?, &ctx.config.solver_settings()?)?;
    let mut symmetry = Vec::new();
    for snap in &run.snapshots {
        let (header, rows) = state_csv(&run.mesh, snap);
        ctx.csv(&snapshot_name(snap.time, "csv"), &header, &rows)?;
        let title = format!("thermo-tdg pulse2d t={} config_hash={}", fmt_num(snap.time), ctx.hash);
        let f = BufWriter::new(File::create(ctx.out.join(snapshot_name(snap.time, "vtk")))?);
        write_vtk(f, &run.mesh, snap, &title)?;
        let d = rotation_defect(&run.mesh, &snap.theta)?;
        println!("t = {:.4}: rotation defect {d:.3e}", snap.time);
        symmetry.push(format!("{},{}", fmt_num(snap.time), fmt_num(d)));
    }
    ctx.csv("symmetry.csv", "t,rotation_defect", &symmetry)?;
    ctx.csv("energy.csv", EnergyReport::CSV_HEADER, &energy_rows(&run.energies))?;
    Ok(())
}
