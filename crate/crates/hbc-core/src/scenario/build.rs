use std::path::PathBuf;

use crate::error::{ConfigError, Result};
use crate::geometry::{
    calibrate_coupling_constant, coupling_capacitance, ground_to_body_capacitance,
    plate_to_plate_capacitance, return_path_capacitance, CouplingConstant, DeviceGeometry,
    ShadowingFraction,
};
use crate::quantity::{Area, Capacitance, Frequency, Inductance, Length, Resistance};
use crate::resonance::{
    body_capacitance_lookup, is_eqs, log_grid, DielectricTable, ResonanceCircuit, DEFAULT_GRID_POINTS,
    DEFAULT_GRID_START, DEFAULT_GRID_STOP, DEFAULT_SERIES_RESISTANCE, EQS_LIMIT,
};
use crate::transfer::{ChannelCapacitances, ChannelScenario, Coupling, GeometricInputs};

use super::config::{missing, Config};
use super::profile::{shadowing_factor, ShadowingProfile};

/// Directory searched for relative dielectric table paths.
pub const TABLE_DIR_ENV: &str = "HBC_TABLE_DIR";

/// Source frequency used when `[analysis] frequency_hz` is absent.
pub const DEFAULT_FREQUENCY: Frequency = Frequency::megahertz(1.0);

const CONSISTENCY_TOLERANCE: f64 = 1e-9;

pub fn analysis_frequency(config: &Config) -> Result<Frequency> {
    let f = config.get_f64("analysis", "frequency_hz")?.unwrap_or(DEFAULT_FREQUENCY.value());
    if !(f > 0.0) {
        return Err(ConfigError::Invalid(format!("analysis.frequency_hz = {f} must be > 0")).into());
    }
    Ok(Frequency::hertz(f))
}

/// Warning text when `frequency` leaves the quasi-static regime.
pub fn eqs_warning(frequency: Frequency) -> Option<String> {
    (!is_eqs(frequency)).then(|| {
        format!(
            "frequency {:e} Hz exceeds the {:e} Hz electro-quasistatic limit; \
             the capacitive model is frequency-flat and results are reported anyway",
            frequency.value(),
            EQS_LIMIT.value()
        )
    })
}

/// Locates a dielectric table named in a config: absolute paths as given,
/// relative ones under `$HBC_TABLE_DIR` or else the config's directory.
pub fn resolve_table_path(config: &Config, name: &str) -> PathBuf {
    let path = PathBuf::from(name);
    if path.is_absolute() {
        return path;
    }
    if let Some(dir) = std::env::var_os(TABLE_DIR_ENV) {
        return PathBuf::from(dir).join(path);
    }
    match config.base_dir() {
        Some(dir) => dir.join(path),
        None => path,
    }
}

/// Loads `[body] table` when present.
pub fn load_table(config: &Config) -> Result<Option<DielectricTable>> {
    match config.get_str("body", "table") {
        Some(name) => DielectricTable::load(&resolve_table_path(config, name)).map(Some),
        None => Ok(None),
    }
}

/// Shadowing profile from a `[tx_profile]` or `[rx_profile]` section.
pub fn load_profile(config: &Config, section: &str) -> Result<Option<ShadowingProfile>> {
    if !config.has_section(section) {
        return Ok(None);
    }
    let segment = config
        .get_str(section, "segment")
        .ok_or_else(|| missing(section, "segment"))?
        .parse()
        .expect("infallible");
    let anchors = config.get_str(section, "anchors").ok_or_else(|| missing(section, "anchors"))?;
    ShadowingProfile::new(segment, ShadowingProfile::parse_anchors(anchors)?).map(Some)
}

/// `[body]` capacitance, given directly as `c_b_f` or looked up from
/// `dielectric_thickness_m` in `table`.
pub fn body_capacitance(config: &Config, table: Option<&DielectricTable>) -> Result<Capacitance> {
    let table_c_b = match config.get_f64("body", "dielectric_thickness_m")? {
        Some(t) => {
            let table = table.ok_or_else(|| missing("body", "table"))?;
            Some(body_capacitance_lookup(Length::meters(t), table)?.value())
        }
        None => None,
    };
    let c_b = reconcile("body.c_b_f", config.get_f64("body", "c_b_f")?, table_c_b)?
        .ok_or_else(|| missing("body", "c_b_f"))?;
    Ok(Capacitance::farads(c_b))
}

/// Synthetic LC extraction bench from a `[resonance]` section.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceSetup {
    pub circuit: ResonanceCircuit,
    pub grid: Vec<Frequency>,
}

/// Reads `[resonance] inductance_h` plus optional `resistance_ohm`,
/// `capacitance_f`, `f_start_hz`, `f_stop_hz` and `points`. Without
/// `capacitance_f` the body capacitance comes from `[body]`.
pub fn build_resonance(config: &Config) -> Result<ResonanceSetup> {
    let inductance = Inductance::henries(config.require_f64("resonance", "inductance_h")?);
    let resistance = config
        .get_f64("resonance", "resistance_ohm")?
        .map_or(DEFAULT_SERIES_RESISTANCE, Resistance::ohms);
    let capacitance = match config.get_f64("resonance", "capacitance_f")? {
        Some(c) => Capacitance::farads(c),
        None => body_capacitance(config, load_table(config)?.as_ref())?,
    };
    let start = config.get_f64("resonance", "f_start_hz")?.map_or(DEFAULT_GRID_START, Frequency::hertz);
    let stop = config.get_f64("resonance", "f_stop_hz")?.map_or(DEFAULT_GRID_STOP, Frequency::hertz);
    let points = config.get_usize("resonance", "points")?.unwrap_or(DEFAULT_GRID_POINTS);
    Ok(ResonanceSetup {
        circuit: ResonanceCircuit::new(inductance, capacitance, resistance)?,
        grid: log_grid(start, stop, points)?,
    })
}

pub fn build_scenario(config: &Config) -> Result<ChannelScenario> {
    let table = load_table(config)?;
    build_scenario_with_table(config, table.as_ref())
}

fn reconcile(field: &str, direct: Option<f64>, derived: Option<f64>) -> Result<Option<f64>, ConfigError> {
    match (direct, derived) {
        (Some(d), Some(g)) => {
            let scale = d.abs().max(g.abs());
            if scale > 0.0 && (d - g).abs() / scale > CONSISTENCY_TOLERANCE {
                Err(ConfigError::Inconsistent {
                    field: field.to_string(),
                    direct: d,
                    derived: g,
                })
            } else {
                Ok(Some(g))
            }
        }
        (d, g) => Ok(g.or(d)),
    }
}

fn device(config: &Config, side: &str) -> Result<Option<DeviceGeometry>> {
    let Some(radius) = config.get_f64(side, "radius_m")? else {
        return Ok(None);
    };
    let thickness = match config.get_f64(side, "thickness_m")? {
        Some(t) => t,
        // Tx plate spacing never enters the transfer; borrow the receiver's.
        None if side == "tx" => config
            .get_f64("rx", "thickness_m")?
            .ok_or_else(|| missing(side, "thickness_m"))?,
        None => return Err(missing(side, "thickness_m").into()),
    };
    let height = config.get_f64(side, "disc_height_m")?.unwrap_or(0.0);
    DeviceGeometry::with_disc_height(Length::meters(radius), Length::meters(thickness), Length::meters(height))
        .map(Some)
}

fn shadowing(config: &Config, side: &str) -> Result<Option<ShadowingFraction>> {
    let direct = config.get_f64(side, "x")?;
    let from_position = match config.get_f64(side, "position")? {
        Some(s) => {
            let section = format!("{side}_profile");
            let profile = load_profile(config, &section)?.ok_or_else(|| missing(&section, "anchors"))?;
            Some(shadowing_factor(s, &profile)?.value())
        }
        None => None,
    };
    reconcile(&format!("{side}.x"), direct, from_position)?
        .map(ShadowingFraction::new)
        .transpose()
}

fn coupling_constant(config: &Config) -> Result<Option<CouplingConstant>> {
    let direct = config.get_f64("coupling", "k_f_per_m")?;
    let reference = [
        config.get_f64("coupling", "reference_c_c_f")?,
        config.get_f64("coupling", "reference_separation_m")?,
        config.get_f64("coupling", "reference_area_m2")?,
    ];
    let calibrated = match reference {
        [Some(c), Some(d), Some(a)] => Some(
            calibrate_coupling_constant(Capacitance::farads(c), Length::meters(d), Area::square_meters(a))?
                .value(),
        ),
        [None, None, None] => None,
        _ => {
            return Err(ConfigError::Invalid(
                "coupling calibration needs reference_c_c_f, reference_separation_m and reference_area_m2".into(),
            )
            .into())
        }
    };
    reconcile("coupling.k_f_per_m", direct, calibrated)?
        .map(CouplingConstant::new)
        .transpose()
}

/// Assembles a scenario from a parsed config, using `table` for dielectric
/// thickness lookups.
///
/// Every capacitance may be given directly, derived from geometry, or both;
/// when both are present they must agree to within 1e-9 relative.
pub fn build_scenario_with_table(config: &Config, table: Option<&DielectricTable>) -> Result<ChannelScenario> {
    let tx = device(config, "tx")?;
    let rx = device(config, "rx")?;
    let x_tx = shadowing(config, "tx")?;
    let x_rx = shadowing(config, "rx")?;
    let c_fringe = config.get_f64("rx", "fringe_f")?;

    let derived_return = |geom: Option<DeviceGeometry>, x: Option<ShadowingFraction>| -> Result<Option<f64>> {
        match (geom, x) {
            (Some(g), Some(x)) => Ok(Some(return_path_capacitance(&g, x)?.value())),
            _ => Ok(None),
        }
    };
    let side_return = |side: &str, geom: Option<DeviceGeometry>, x| -> Result<f64> {
        let direct = config.get_f64(side, "c_x_f")?;
        let value = reconcile(&format!("{side}.c_x_f"), direct, derived_return(geom, x)?)?;
        value.ok_or_else(|| {
            let key = if geom.is_some() { "x" } else { "c_x_f" };
            missing(side, key).into()
        })
    };
    let c_x_tx = side_return("tx", tx, x_tx)?;
    let c_x_rx = side_return("rx", rx, x_rx)?;

    let derived_gb = match (rx, c_fringe) {
        (Some(g), Some(f)) => Some(ground_to_body_capacitance(plate_to_plate_capacitance(&g)?, Capacitance::farads(f))?.value()),
        _ => None,
    };
    let c_gb_rx = reconcile("rx.c_gb_f", config.get_f64("rx", "c_gb_f")?, derived_gb)?
        .ok_or_else(|| missing("rx", if rx.is_some() { "fringe_f" } else { "c_gb_f" }))?;

    let c_l = config.require_f64("rx", "c_l_f")?;

    let c_b = body_capacitance(config, table)?.value();

    let distant = config.get_bool("coupling", "distant")?.unwrap_or(false);
    let k = coupling_constant(config)?;
    let separation = config.get_f64("coupling", "separation_m")?.map(Length::meters);
    let coupling = match (k, separation) {
        (Some(k), Some(separation)) => Some(Coupling { separation, k }),
        _ => None,
    };
    let derived_c_c = if distant {
        Some(0.0)
    } else {
        match (coupling, tx, rx) {
            (Some(c), Some(t), Some(r)) => {
                let plate = if t.radius <= r.radius { t } else { r };
                Some(coupling_capacitance(&plate, c.separation, c.k)?.value())
            }
            _ => None,
        }
    };
    let c_c = reconcile("coupling.c_c_f", config.get_f64("coupling", "c_c_f")?, derived_c_c)?;
    let c_c = match c_c {
        Some(v) => v,
        None if k.is_some() => return Err(missing("coupling", "separation_m").into()),
        None if separation.is_some() => return Err(missing("coupling", "k_f_per_m").into()),
        None => return Err(missing("coupling", "c_c_f").into()),
    };

    let caps = ChannelCapacitances {
        c_x_tx: Capacitance::farads(c_x_tx),
        c_x_rx: Capacitance::farads(c_x_rx),
        c_gb_rx: Capacitance::farads(c_gb_rx),
        c_l: Capacitance::farads(c_l),
        c_b: Capacitance::farads(c_b),
        c_c: Capacitance::farads(c_c),
    };

    let geometric = match (tx, rx, x_tx, x_rx, c_fringe) {
        (Some(tx), Some(rx), Some(x_tx), Some(x_rx), Some(c_f)) if distant || coupling.is_some() => {
            Some(GeometricInputs {
                tx,
                rx,
                coupling,
                x_tx,
                x_rx,
                c_fringe: Capacitance::farads(c_f),
                c_l: caps.c_l,
                c_b: caps.c_b,
            })
        }
        _ => None,
    };
    let scenario = match geometric {
        Some(inputs) => {
            let s = ChannelScenario::from_geometry(inputs, distant)?;
            debug_assert_eq!(s.caps, caps);
            s
        }
        None => ChannelScenario::from_capacitances(caps)?,
    };
    scenario.validate()?;
    Ok(scenario)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::HbcError;

    const SAMPLE: &str = "
[tx]
radius_m = 0.03
thickness_m = 0.005
x = 0.5

[rx]
radius_m = 0.03
thickness_m = 0.005
x = 0.5
fringe_f = 0.75e-12
c_l_f = 10e-12

[body]
dielectric_thickness_m = 0.4

[coupling]
k_f_per_m = 2.0e-12
separation_m = 0.1
";

    fn table() -> DielectricTable {
        DielectricTable::new(vec![
            (Length::meters(0.2), Capacitance::picofarads(220.0)),
            (Length::meters(0.4), Capacitance::picofarads(150.838)),
            (Length::meters(0.8), Capacitance::picofarads(95.0)),
        ])
        .unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn sample_geometric_config() {
        let cfg = Config::parse(SAMPLE).unwrap();
        let s = build_scenario_with_table(&cfg, Some(&table())).unwrap();
        assert!(rel(s.caps.c_c.to_femtofarads(), 56.55) < 1e-3);
        assert!(rel(s.caps.c_x_tx.to_picofarads(), 1.0625) < 1e-4);
        assert!(rel(s.caps.c_x_rx.to_picofarads(), 1.0625) < 1e-4);
        assert_eq!(s.caps.c_b, Capacitance::picofarads(150.838));
        assert!(s.provenance.is_some());
    }

    #[test]
    fn direct_config_passes_through() {
        let cfg = Config::parse(
            "[tx]\nc_x_f = 0.5e-12\n[rx]\nc_x_f = 0.5e-12\nc_gb_f = 3e-12\nc_l_f = 10e-12\n\
             [body]\nc_b_f = 150.838e-12\n[coupling]\nc_c_f = 0\n",
        )
        .unwrap();
        let s = build_scenario(&cfg).unwrap();
        assert_eq!(s.caps.c_x_tx.value(), 0.5e-12);
        assert_eq!(s.caps.c_gb_rx.value(), 3e-12);
        assert_eq!(s.caps.c_c.value(), 0.0);
        assert!(s.provenance.is_none());
    }

    #[test]
    fn missing_load_is_named() {
        let text = SAMPLE.replace("c_l_f = 10e-12", "");
        let err = build_scenario_with_table(&Config::parse(&text).unwrap(), Some(&table())).unwrap_err();
        match err {
            HbcError::Config(ConfigError::Missing { section, key }) => {
                assert_eq!((section.as_str(), key.as_str()), ("rx", "c_l_f"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn consistent_direct_values_accepted() {
        let text = SAMPLE.replace("[body]", "c_gb_f = 5.7569252495e-12\n[body]\nc_b_f = 150.838e-12");
        let s = build_scenario_with_table(&Config::parse(&text).unwrap(), Some(&table())).unwrap();
        assert!(s.provenance.is_some());
    }

    #[test]
    fn inconsistent_direct_values_rejected() {
        let text = SAMPLE.replace("[body]", "[body]\nc_b_f = 120e-12");
        let err = build_scenario_with_table(&Config::parse(&text).unwrap(), Some(&table())).unwrap_err();
        assert!(matches!(err, HbcError::Config(ConfigError::Inconsistent { .. })), "{err}");
    }

    #[test]
    fn position_uses_profile() {
        let text = SAMPLE.replace("[tx]\nradius_m = 0.03\nthickness_m = 0.005\nx = 0.5", "[tx]\nradius_m = 0.03\nposition = 0.5")
            + "\n[tx_profile]\nsegment = arm\nanchors = 0:0.2, 1:0.6\n";
        let s = build_scenario_with_table(&Config::parse(&text).unwrap(), Some(&table())).unwrap();
        let x = s.provenance.unwrap().inputs.x_tx.value();
        assert!((x - 0.4).abs() < 1e-12);
    }

    #[test]
    fn distant_coupling_needs_no_k() {
        let text = SAMPLE.replace("k_f_per_m = 2.0e-12\nseparation_m = 0.1", "distant = true");
        let s = build_scenario_with_table(&Config::parse(&text).unwrap(), Some(&table())).unwrap();
        assert_eq!(s.caps.c_c, Capacitance::ZERO);
        assert!(s.provenance.unwrap().distant);
    }

    #[test]
    fn calibration_keys_derive_k() {
        let text = SAMPLE.replace(
            "k_f_per_m = 2.0e-12",
            "reference_c_c_f = 60e-15\nreference_separation_m = 0.1\nreference_area_m2 = 30e-4",
        );
        let s = build_scenario_with_table(&Config::parse(&text).unwrap(), Some(&table())).unwrap();
        let k = s.provenance.unwrap().inputs.coupling.unwrap().k.value();
        assert!(rel(k, 2.0e-12) < 1e-12);
    }

    #[test]
    fn missing_table_named() {
        let err = build_scenario_with_table(&Config::parse(SAMPLE).unwrap(), None).unwrap_err();
        assert!(matches!(err, HbcError::Config(ConfigError::Missing { ref key, .. }) if key == "table"));
    }

    #[test]
    fn eqs_guard() {
        assert!(eqs_warning(Frequency::megahertz(1.0)).is_none());
        assert!(eqs_warning(Frequency::megahertz(2.0)).is_some());
    }
    #[test]
    fn resonance_bench_from_config() {
        let cfg = Config::parse("[resonance]\ninductance_h = 1e-3\n[body]\nc_b_f = 150.838e-12\n").unwrap();
        let setup = build_resonance(&cfg).unwrap();
        assert_eq!(setup.grid.len(), DEFAULT_GRID_POINTS);
        assert_eq!(setup.circuit.capacitance, Capacitance::picofarads(150.838));
        let cfg = Config::parse("[resonance]\ncapacitance_f = 1e-10\n").unwrap();
        assert!(matches!(build_resonance(&cfg), Err(HbcError::Config(ConfigError::Missing { .. }))));
    }
}
