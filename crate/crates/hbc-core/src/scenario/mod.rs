//! Configured channel scenarios: config text, shadowing profiles, and sweeps.

mod build;
mod config;
mod profile;
mod sweep;

pub use build::{
    analysis_frequency, body_capacitance, build_resonance, build_scenario, build_scenario_with_table, eqs_warning, load_profile, load_table,
    resolve_table_path, ResonanceSetup, DEFAULT_FREQUENCY, TABLE_DIR_ENV,
};
pub use config::Config;
pub use profile::{shadowing_factor, Segment, ShadowingProfile};
pub use sweep::{
    emit_csv, emit_csv_to_path, parse_csv, run_sweep, run_sweep_with_table, SweepKind, SweepOptions, SweepResult,
    SweepRow, SweepSpec,
};
