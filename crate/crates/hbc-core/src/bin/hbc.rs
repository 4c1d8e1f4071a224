use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use hbc_core::geometry::calibrate_coupling_constant;
use hbc_core::network::build_channel_network;
use hbc_core::resonance::extract_body_capacitance;
use hbc_core::scenario::{
    analysis_frequency, build_resonance, build_scenario, emit_csv, emit_csv_to_path, eqs_warning, run_sweep,
    Config, SweepOptions, SweepSpec,
};
use hbc_core::transfer::{compare_closed_forms, ratio_to_db, TransferReport};
use hbc_core::{Area, Capacitance, HbcError, Length, Result};

#[derive(Parser)]
#[command(name = "hbc", version, about = "Capacitive human body communication channel model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one scenario and report every transfer estimate.
    Eval {
        config: PathBuf,
        /// Machine-readable JSON instead of the text report.
        #[arg(long)]
        json: bool,
        /// Print the lumped network branch list first.
        #[arg(long)]
        dump_network: bool,
        /// Add channel loss in dB next to each ratio.
        #[arg(long)]
        db: bool,
    },
    /// Run the `[sweep]` section of a config and write CSV.
    Sweep {
        config: PathBuf,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Solve the lumped network for every row.
        #[arg(long)]
        oracle: bool,
        /// Add loss columns in dB for the approximate forms.
        #[arg(long)]
        db: bool,
    },
    /// Simulate the LC resonance bench and recover the body capacitance.
    Resonance {
        config: PathBuf,
        /// CSV file for the magnitude sweep.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit the coupling constant k from one measured coupling capacitance.
    CalibrateK {
        /// Coupling capacitance in farads.
        #[arg(long)]
        cc: f64,
        /// Device separation in meters.
        #[arg(long)]
        d: f64,
        /// Ground plate area in square meters.
        #[arg(long)]
        area: f64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hbc: {}", chain(&e));
            ExitCode::from(if e.is_config_error() { 1 } else { 2 })
        }
    }
}

fn chain(e: &HbcError) -> String {
    let mut text = e.to_string();
    let mut source = std::error::Error::source(e);
    while let Some(s) = source {
        text.push_str(": ");
        text.push_str(&s.to_string());
        source = s.source();
    }
    text
}

fn warn_eqs(config: &Config) -> Result<()> {
    if let Some(w) = eqs_warning(analysis_frequency(config)?) {
        eprintln!("warning: {w}");
    }
    Ok(())
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Eval { config, json, dump_network, db } => eval(&config, json, dump_network, db),
        Command::Sweep { config, out, oracle, db } => {
            let cfg = Config::load(&config)?;
            warn_eqs(&cfg)?;
            let spec = SweepSpec::from_config(&cfg, SweepOptions { oracle, db })?;
            let result = run_sweep(&spec)?;
            match out {
                Some(path) => emit_csv_to_path(&result, &path),
                None => emit_csv(&result, std::io::stdout().lock()),
            }
        }
        Command::Resonance { config, out } => resonance(&config, out.as_deref()),
        Command::CalibrateK { cc, d, area } => {
            let k = calibrate_coupling_constant(Capacitance::farads(cc), Length::meters(d), Area::square_meters(area))?;
            println!("k = {:e} F/m", k.value());
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct EvalOutput<'a> {
    #[serde(flatten)]
    report: &'a TransferReport,
    loss_db: LossSummary,
}

#[derive(Serialize)]
struct LossSummary {
    rx_distant: f64,
    simplified: f64,
    full: f64,
    geometric: Option<f64>,
    oracle: f64,
}

fn loss(ratio: f64) -> Result<f64> {
    Ok(ratio_to_db(ratio)?.loss())
}

fn eval(path: &Path, json: bool, dump_network: bool, db: bool) -> Result<()> {
    let cfg = Config::load(path)?;
    warn_eqs(&cfg)?;
    let scenario = build_scenario(&cfg)?;
    let report = compare_closed_forms(&scenario, analysis_frequency(&cfg)?)?;
    let mut out = std::io::stdout().lock();
    let io = |e| HbcError::io("<stdout>", e);
    if dump_network {
        write!(out, "{}", build_channel_network(&scenario.caps)?.dump()).map_err(io)?;
        writeln!(out).map_err(io)?;
    }
    if json {
        let output = EvalOutput {
            report: &report,
            loss_db: LossSummary {
                rx_distant: loss(report.rx_distant)?,
                simplified: loss(report.simplified)?,
                full: loss(report.full)?,
                geometric: report.geometric.map(loss).transpose()?,
                oracle: loss(report.oracle)?,
            },
        };
        let text = serde_json::to_string_pretty(&output).expect("report is plain data");
        writeln!(out, "{text}").map_err(io)?;
    } else {
        write!(out, "{}", render(&report, db)?).map_err(io)?;
    }
    Ok(())
}

fn render(r: &TransferReport, db: bool) -> Result<String> {
    let c = &r.capacitances;
    let mut s = String::new();
    let mut line = |label: &str, value: String| {
        s.push_str(&format!("{label:<26}{value}\n"));
    };
    line("frequency", format!("{:e} Hz", r.frequency_hz));
    for (label, v) in [
        ("C_x-Tx", c.c_x_tx),
        ("C_x-Rx", c.c_x_rx),
        ("C_GB-Rx", c.c_gb_rx),
        ("C_L", c.c_l),
        ("C_B", c.c_b),
        ("C_c", c.c_c),
    ] {
        line(label, format!("{:.6} pF", v.to_picofarads()));
    }
    line("body potential", format!("{:.6e}", r.body_potential));
    let ratio = |v: f64| -> Result<String> {
        Ok(if db {
            format!("{v:.6e}  ({:.2} dB loss)", loss(v)?)
        } else {
            format!("{v:.6e}")
        })
    };
    line("received, distant", ratio(r.rx_distant)?);
    line("received, simplified", ratio(r.simplified)?);
    line("received, full", ratio(r.full)?);
    if let Some(g) = r.geometric_distant {
        line("geometric, distant", ratio(g)?);
    }
    if let Some(g) = r.geometric {
        line("geometric, coupled", ratio(g)?);
    }
    line("nodal solve", ratio(r.oracle)?);
    line("distant vs full", format!("{:.3}%", 100.0 * r.errors.distant_vs_full));
    line("simplified vs full", format!("{:.3}%", 100.0 * r.errors.simplified_vs_full));
    line("nodal vs full", format!("{:.3}%", 100.0 * r.errors.oracle_vs_full));
    line("regime", r.flags.label());
    Ok(s)
}

fn resonance(path: &Path, out: Option<&Path>) -> Result<()> {
    let cfg = Config::load(path)?;
    let setup = build_resonance(&cfg)?;
    let extraction = extract_body_capacitance(&setup.circuit, &setup.grid)?;
    if !extraction.eqs {
        eprintln!(
            "warning: resonance at {:e} Hz lies outside the electro-quasistatic range",
            extraction.resonant_frequency.value()
        );
    }
    let summary = format!(
        "resonant frequency  {:.6e} Hz\nbody capacitance    {:.6} pF\n",
        extraction.resonant_frequency.value(),
        extraction.capacitance.to_picofarads()
    );
    match out {
        Some(p) => {
            let file = std::fs::File::create(p).map_err(|e| HbcError::io(p, e))?;
            extraction.sweep.write_csv(std::io::BufWriter::new(file))?;
            print!("{summary}");
        }
        None => {
            extraction.sweep.write_csv(std::io::stdout().lock())?;
            eprint!("{summary}");
        }
    }
    Ok(())
}
