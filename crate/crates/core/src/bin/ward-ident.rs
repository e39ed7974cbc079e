use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ward_ident::dynamics::{init_dynamic_state, load_event_script, simulate, ChannelId, SimConfig};
use ward_ident::grid::{load_network, Network};
use ward_ident::pipeline::{
    boundary_elements, default_monitors, run_dynamic_stage, run_report, run_steady_stage,
    PipelineConfig,
};
use ward_ident::pmu::write_records;
use ward_ident::steady::{
    branch_flows, short_circuit, solve_power_flow, DEFAULT_MAX_ITER, DEFAULT_TOLERANCE,
};
use ward_ident::{Error, Result};

/// Generalized-Ward dynamic equivalent identification.
#[derive(Parser)]
#[command(name = "ward-ident", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate every scenario of an event script and write PMU records.
    Simulate {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        events: PathBuf,
        /// Output directory for `<scenario>.csv` records.
        #[arg(long)]
        out: PathBuf,
        /// Channel to record (`location:quantity`); repeatable. Defaults to
        /// the boundary measurement set.
        #[arg(long = "monitor")]
        monitors: Vec<ChannelId>,
        /// Integration step in seconds.
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Solve the power flow and print bus voltages and branch flows.
    Pf {
        #[arg(long)]
        grid: PathBuf,
    },
    /// Three-phase short-circuit level at a bus.
    Scc {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        bus: String,
        /// Voltage factor c.
        #[arg(long, default_value_t = 1.0)]
        c: f64,
    },
    /// Generate references and run the steady-state identification stage.
    IdentSs {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the dynamic identification stage on a finished stage 1.
    IdentDyn {
        #[arg(long)]
        config: PathBuf,
    },
    /// Write comparison tables and overlay curves of a run directory.
    Report {
        #[arg(long)]
        run: PathBuf,
    },
}

fn read_grid(path: &Path) -> Result<Network> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    load_network(&text)
}

fn cmd_simulate(
    grid: &Path,
    events: &Path,
    out: &Path,
    monitors: Vec<ChannelId>,
    dt: Option<f64>,
) -> Result<()> {
    let net = read_grid(grid)?;
    let text = std::fs::read_to_string(events).map_err(|e| Error::io(events, e))?;
    let scenarios = load_event_script(&text)?;
    let mut cfg = SimConfig::default();
    if let Some(dt) = dt {
        cfg.dt = dt;
    }
    cfg.validate()?;
    let monitors = if monitors.is_empty() {
        let external: Vec<&str> = net
            .areas()
            .iter()
            .filter(|a| a.external)
            .map(|a| a.id.as_str())
            .collect();
        default_monitors(&net, &boundary_elements(&net, &external))
    } else {
        monitors
    };
    let sol = solve_power_flow(&net, DEFAULT_TOLERANCE, DEFAULT_MAX_ITER)?;
    sol.ensure_converged()?;
    let state0 = init_dynamic_state(&net, &sol, &cfg)?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    for s in &scenarios {
        s.validate(&net)?;
        let rec = simulate(&net, &state0, &s.events, s.t_end(), &monitors, &cfg)?;
        let path = out.join(format!("{}.csv", s.name));
        write_records(&rec, net.f_nominal_hz(), &path)?;
        println!("{}: {} samples -> {}", s.name, rec.len(), path.display());
    }
    Ok(())
}

fn cmd_pf(grid: &Path) -> Result<()> {
    let net = read_grid(grid)?;
    let sol = solve_power_flow(&net, DEFAULT_TOLERANCE, DEFAULT_MAX_ITER)?;
    sol.ensure_converged()?;
    println!(
        "converged in {} iterations, max mismatch {:.3e} pu",
        sol.iterations, sol.max_mismatch
    );
    println!("{:<10} {:>10} {:>12}", "bus", "v_pu", "theta_rad");
    for (k, id) in sol.bus_ids.iter().enumerate() {
        println!("{:<10} {:>10.6} {:>12.6}", id, sol.v[k], sol.theta[k]);
    }
    println!(
        "{:<12} {:>10} {:>10} {:>10} {:>10}",
        "branch", "p_from", "q_from", "p_to", "q_to"
    );
    for f in branch_flows(&sol, &net)? {
        println!(
            "{:<12} {:>10.2} {:>10.2} {:>10.2} {:>10.2}",
            f.id, f.p_from, f.q_from, f.p_to, f.q_to
        );
    }
    Ok(())
}

fn cmd_scc(grid: &Path, bus: &str, c: f64) -> Result<()> {
    let net = read_grid(grid)?;
    let r = short_circuit(&net, bus, c)?;
    println!(
        "bus {}: Skss = {:.1} MVA, Ikss = {:.3} kA, |Zth| = {:.6} pu, V_prefault = {:.6} pu",
        r.bus,
        r.skss_mva,
        r.ikss_ka,
        r.thevenin_z.norm(),
        r.prefault_v
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            grid,
            events,
            out,
            monitors,
            dt,
        } => cmd_simulate(&grid, &events, &out, monitors, dt),
        Command::Pf { grid } => cmd_pf(&grid),
        Command::Scc { grid, bus, c } => cmd_scc(&grid, &bus, c),
        Command::IdentSs { config } => {
            let cfg = PipelineConfig::load(&config)?;
            let out = run_steady_stage(&cfg)?;
            println!(
                "stage 1: F1 = {:.6e} (F_PF {:.3e}, F_SHC {:.3e}) after {} evaluations ({:?})",
                out.objective,
                out.components.flow,
                out.components.short_circuit,
                out.result.evaluations,
                out.result.stop_reason
            );
            Ok(())
        }
        Command::IdentDyn { config } => {
            let cfg = PipelineConfig::load(&config)?;
            let out = run_dynamic_stage(&cfg)?;
            println!(
                "stage 2: F2 = {:.6e} (f_freq {:.3e}, f_volt {:.3e}) after {} evaluations ({:?})",
                out.objective,
                out.components.frequency,
                out.components.voltage,
                out.result.evaluations,
                out.result.stop_reason
            );
            Ok(())
        }
        Command::Report { run } => {
            let rep = run_report(&run)?;
            println!("report written to {}", run.join("report").display());
            println!("F1 = {:.6e}", rep.steady_objective);
            if let Some((_, f2)) = rep.dynamic {
                println!("F2 = {f2:.6e}");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
