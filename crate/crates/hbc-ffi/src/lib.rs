//! C ABI over `hbc-core`.
//!
//! Every function returns an [`HbcStatus`] and writes results through out
//! pointers. On failure the message is available from
//! [`hbc_last_error_message`] on the same thread until the next call.
//! Scenarios are opaque handles created by `hbc_scenario_from_*` and
//! released with [`hbc_scenario_free`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;

use hbc_core::geometry::{
    calibrate_coupling_constant, coupling_capacitance, plate_to_plate_capacitance, return_path_capacitance,
    CouplingConstant, DeviceGeometry, ShadowingFraction,
};
use hbc_core::network::{build_channel_network, solve_transfer};
use hbc_core::resonance::{self, FrequencySweep, ResonanceCircuit};
use hbc_core::scenario::{analysis_frequency, build_scenario, Config, DEFAULT_FREQUENCY};
use hbc_core::transfer::{self, compare_closed_forms};
use hbc_core::{
    Area, Capacitance, ChannelCapacitances, ChannelScenario, Frequency, HbcError, Inductance, Length, Resistance,
};

/// Outcome of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HbcStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// An argument lies outside its physical domain.
    Domain = 2,
    /// A denominator vanished or the scenario is degenerate.
    Degenerate = 3,
    /// The nodal system is singular.
    Singular = 4,
    /// Config text, table or profile could not be used.
    Config = 5,
    Io = 6,
    /// A lookup coordinate lies outside its table or profile.
    Range = 7,
    /// No interior resonance peak in the sweep.
    Peak = 8,
    /// Internal panic; the message carries the payload.
    Panic = 9,
}

/// Lumped channel capacitances in farads.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HbcCapacitances {
    pub c_x_tx: f64,
    pub c_x_rx: f64,
    pub c_gb_rx: f64,
    pub c_l: f64,
    pub c_b: f64,
    pub c_c: f64,
}

/// Every transfer estimate for one scenario. Geometric forms are NaN when
/// the matching `has_` flag is false.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HbcReport {
    pub capacitances: HbcCapacitances,
    pub frequency_hz: f64,
    pub body_potential: f64,
    pub rx_distant: f64,
    pub simplified: f64,
    pub full: f64,
    pub has_geometric: bool,
    pub geometric: f64,
    pub has_geometric_distant: bool,
    pub geometric_distant: f64,
    pub oracle: f64,
    pub oracle_imag: f64,
    pub distant_vs_full: f64,
    pub simplified_vs_full: f64,
    pub oracle_vs_full: f64,
    pub distant: bool,
    pub coupled: bool,
    pub invalid_approximation: bool,
}

/// Result of a resonance-based capacitance extraction.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HbcExtraction {
    pub resonant_frequency_hz: f64,
    pub capacitance_f: f64,
    /// True when the peak lies inside the quasi-static range.
    pub eqs: bool,
}

/// Opaque scenario handle.
pub struct HbcScenario {
    scenario: ChannelScenario,
    frequency: Frequency,
}

struct Failure {
    status: HbcStatus,
    message: String,
}

fn status_of(e: &HbcError) -> HbcStatus {
    match e {
        HbcError::Domain { .. } | HbcError::InvalidNetwork(_) => HbcStatus::Domain,
        HbcError::Degenerate(_) => HbcStatus::Degenerate,
        HbcError::Singular { .. } => HbcStatus::Singular,
        HbcError::OutOfRange { .. } => HbcStatus::Range,
        HbcError::BoundaryPeak { .. } | HbcError::FlatSweep => HbcStatus::Peak,
        HbcError::Io { .. } => HbcStatus::Io,
        HbcError::SweepStep { source, .. } => status_of(source),
        _ => HbcStatus::Config,
    }
}

impl From<HbcError> for Failure {
    fn from(e: HbcError) -> Self {
        Failure {
            status: status_of(&e),
            message: e.to_string(),
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> HbcStatus {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
    match panic::catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HbcStatus::Ok,
        Ok(Err(failure)) => {
            set_last_error(failure.message);
            failure.status
        }
        Err(payload) => {
            let text = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {text}"));
            HbcStatus::Panic
        }
    }
}

fn null(name: &str) -> Failure {
    Failure {
        status: HbcStatus::NullPointer,
        message: format!("`{name}` is null"),
    }
}

unsafe fn read<'a, T>(ptr: *const T, name: &str) -> Result<&'a T, Failure> {
    ptr.as_ref().ok_or_else(|| null(name))
}

unsafe fn write<T>(ptr: *mut T, name: &str, value: T) -> Result<(), Failure> {
    if ptr.is_null() {
        return Err(null(name));
    }
    ptr.write(value);
    Ok(())
}

unsafe fn text<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if ptr.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| Failure {
        status: HbcStatus::Config,
        message: format!("`{name}` is not valid UTF-8"),
    })
}

impl From<HbcCapacitances> for ChannelCapacitances {
    fn from(c: HbcCapacitances) -> Self {
        ChannelCapacitances {
            c_x_tx: Capacitance::farads(c.c_x_tx),
            c_x_rx: Capacitance::farads(c.c_x_rx),
            c_gb_rx: Capacitance::farads(c.c_gb_rx),
            c_l: Capacitance::farads(c.c_l),
            c_b: Capacitance::farads(c.c_b),
            c_c: Capacitance::farads(c.c_c),
        }
    }
}

impl From<ChannelCapacitances> for HbcCapacitances {
    fn from(c: ChannelCapacitances) -> Self {
        HbcCapacitances {
            c_x_tx: c.c_x_tx.value(),
            c_x_rx: c.c_x_rx.value(),
            c_gb_rx: c.c_gb_rx.value(),
            c_l: c.c_l.value(),
            c_b: c.c_b.value(),
            c_c: c.c_c.value(),
        }
    }
}

/// Message for the last failed call on this thread, or null after a
/// successful call. The pointer stays valid until the next call.
#[no_mangle]
pub extern "C" fn hbc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hbc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

fn frequency_or_default(frequency_hz: f64) -> Result<Frequency, Failure> {
    if frequency_hz == 0.0 {
        return Ok(DEFAULT_FREQUENCY);
    }
    if !(frequency_hz > 0.0 && frequency_hz.is_finite()) {
        return Err(Failure {
            status: HbcStatus::Domain,
            message: format!("frequency {frequency_hz:e} Hz must be finite and > 0"),
        });
    }
    Ok(Frequency::hertz(frequency_hz))
}

/// Creates a scenario from lumped capacitances. `frequency_hz = 0` selects
/// the default analysis frequency.
///
/// # Safety
/// `caps` must point to a readable `HbcCapacitances`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hbc_scenario_from_capacitances(
    caps: *const HbcCapacitances,
    frequency_hz: f64,
    out: *mut *mut HbcScenario,
) -> HbcStatus {
    guard(|| {
        let caps = *read(caps, "caps")?;
        let scenario = ChannelScenario::from_capacitances(caps.into())?;
        let handle = Box::new(HbcScenario {
            scenario,
            frequency: frequency_or_default(frequency_hz)?,
        });
        write(out, "out", Box::into_raw(handle))
    })
}

/// Creates a scenario from config text. Relative table paths resolve
/// against `base_dir`, which may be null.
///
/// # Safety
/// `config_text` and a non-null `base_dir` must be NUL-terminated strings;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hbc_scenario_from_config(
    config_text: *const c_char,
    base_dir: *const c_char,
    out: *mut *mut HbcScenario,
) -> HbcStatus {
    guard(|| {
        let mut config = Config::parse(text(config_text, "config_text")?).map_err(HbcError::from)?;
        if !base_dir.is_null() {
            config = config.with_base_dir(Path::new(text(base_dir, "base_dir")?));
        }
        let handle = Box::new(HbcScenario {
            scenario: build_scenario(&config)?,
            frequency: analysis_frequency(&config)?,
        });
        write(out, "out", Box::into_raw(handle))
    })
}

/// Releases a scenario. Null is ignored.
///
/// # Safety
/// `scenario` must be null or a handle from `hbc_scenario_from_*` that has
/// not been freed.
#[no_mangle]
pub unsafe extern "C" fn hbc_scenario_free(scenario: *mut HbcScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// # Safety
/// `scenario` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hbc_scenario_capacitances(
    scenario: *const HbcScenario,
    out: *mut HbcCapacitances,
) -> HbcStatus {
    guard(|| {
        let s = read(scenario, "scenario")?;
        write(out, "out", s.scenario.caps.into())
    })
}

/// Evaluates every closed form and the nodal solve.
///
/// # Safety
/// `scenario` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hbc_scenario_report(scenario: *const HbcScenario, out: *mut HbcReport) -> HbcStatus {
    guard(|| {
        let s = read(scenario, "scenario")?;
        let r = compare_closed_forms(&s.scenario, s.frequency)?;
        write(
            out,
            "out",
            HbcReport {
                capacitances: r.capacitances.into(),
                frequency_hz: r.frequency_hz,
                body_potential: r.body_potential,
                rx_distant: r.rx_distant,
                simplified: r.simplified,
                full: r.full,
                has_geometric: r.geometric.is_some(),
                geometric: r.geometric.unwrap_or(f64::NAN),
                has_geometric_distant: r.geometric_distant.is_some(),
                geometric_distant: r.geometric_distant.unwrap_or(f64::NAN),
                oracle: r.oracle,
                oracle_imag: r.oracle_imag,
                distant_vs_full: r.errors.distant_vs_full,
                simplified_vs_full: r.errors.simplified_vs_full,
                oracle_vs_full: r.errors.oracle_vs_full,
                distant: r.flags.distant,
                coupled: r.flags.coupled,
                invalid_approximation: r.flags.invalid_approximation,
            },
        )
    })
}

unsafe fn transfer_call(
    caps: *const HbcCapacitances,
    out: *mut f64,
    f: fn(&ChannelCapacitances) -> hbc_core::Result<f64>,
) -> HbcStatus {
    guard(|| {
        let caps: ChannelCapacitances = (*read(caps, "caps")?).into();
        write(out, "out", f(&caps)?)
    })
}

/// Full coupled transfer ratio.
///
/// # Safety
/// `caps` must be readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hbc_full_transfer(caps: *const HbcCapacitances, out: *mut f64) -> HbcStatus {
    transfer_call(caps, out, transfer::full_transfer)
}

/// Simplified coupled transfer ratio (large body and load capacitance).
///
/// # Safety
/// `caps` must be readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hbc_simplified_transfer(caps: *const HbcCapacitances, out: *mut f64) -> HbcStatus {
    transfer_call(caps, out, transfer::simplified_transfer)
}

/// Transfer ratio ignoring inter-device coupling.
///
/// # Safety
/// `caps` must be readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hbc_rx_transfer_distant(caps: *const HbcCapacitances, out: *mut f64) -> HbcStatus {
    transfer_call(caps, out, transfer::rx_transfer_distant)
}

/// Solves the lumped channel circuit at `frequency_hz`; writes the real
/// and imaginary parts of the transfer ratio.
///
/// # Safety
/// `caps` must be readable; `out_re` and `out_im` writable.
#[no_mangle]
pub unsafe extern "C" fn hbc_oracle_transfer(
    caps: *const HbcCapacitances,
    frequency_hz: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> HbcStatus {
    guard(|| {
        let caps: ChannelCapacitances = (*read(caps, "caps")?).into();
        let sol = solve_transfer(&build_channel_network(&caps)?, frequency_or_default(frequency_hz)?)?;
        write(out_re, "out_re", sol.ratio.re)?;
        write(out_im, "out_im", sol.ratio.im)
    })
}

/// Return-path capacitance of a disc device with shadowing fraction `x`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hbc_return_path_capacitance(
    radius_m: f64,
    thickness_m: f64,
    disc_height_m: f64,
    x: f64,
    out: *mut f64,
) -> HbcStatus {
    guard(|| {
        let geom = DeviceGeometry::with_disc_height(
            Length::meters(radius_m),
            Length::meters(thickness_m),
            Length::meters(disc_height_m),
        )?;
        let c = return_path_capacitance(&geom, ShadowingFraction::new(x)?)?;
        write(out, "out", c.value())
    })
}

/// Capacitance between the two plates of a device.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hbc_plate_to_plate_capacitance(radius_m: f64, thickness_m: f64, out: *mut f64) -> HbcStatus {
    guard(|| {
        let geom = DeviceGeometry::new(Length::meters(radius_m), Length::meters(thickness_m))?;
        write(out, "out", plate_to_plate_capacitance(&geom)?.value())
    })
}

/// Inter-device coupling `k π a² / d`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hbc_coupling_capacitance(
    radius_m: f64,
    separation_m: f64,
    k_f_per_m: f64,
    out: *mut f64,
) -> HbcStatus {
    guard(|| {
        // plate spacing does not enter the coupling law
        let geom = DeviceGeometry::new(Length::meters(radius_m), Length::meters(1.0))?;
        let c = coupling_capacitance(&geom, Length::meters(separation_m), CouplingConstant::new(k_f_per_m)?)?;
        write(out, "out", c.value())
    })
}

/// Fits `k` from one coupling measurement.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hbc_calibrate_coupling_constant(
    c_c_f: f64,
    separation_m: f64,
    area_m2: f64,
    out: *mut f64,
) -> HbcStatus {
    guard(|| {
        let k = calibrate_coupling_constant(
            Capacitance::farads(c_c_f),
            Length::meters(separation_m),
            Area::square_meters(area_m2),
        )?;
        write(out, "out", k.value())
    })
}

/// Channel ratio in dB, `20 log10(ratio)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hbc_ratio_to_db(ratio: f64, out: *mut f64) -> HbcStatus {
    guard(|| write(out, "out", transfer::ratio_to_db(ratio)?.0))
}

/// Locates the resonance peak of a measured magnitude sweep and converts it
/// to a capacitance for series inductance `inductance_h`.
///
/// # Safety
/// `frequencies_hz` and `magnitudes` must each point to `len` readable
/// doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hbc_capacitance_from_sweep(
    frequencies_hz: *const f64,
    magnitudes: *const f64,
    len: usize,
    inductance_h: f64,
    out: *mut HbcExtraction,
) -> HbcStatus {
    guard(|| {
        if frequencies_hz.is_null() {
            return Err(null("frequencies_hz"));
        }
        if magnitudes.is_null() {
            return Err(null("magnitudes"));
        }
        let f = std::slice::from_raw_parts(frequencies_hz, len).to_vec();
        let m = std::slice::from_raw_parts(magnitudes, len).to_vec();
        let f_r = resonance::find_resonant_frequency(&FrequencySweep::new(f, m)?)?;
        let c = resonance::capacitance_from_resonance(f_r, Inductance::henries(inductance_h))?;
        write(
            out,
            "out",
            HbcExtraction {
                resonant_frequency_hz: f_r.value(),
                capacitance_f: c.value(),
                eqs: resonance::is_eqs(f_r),
            },
        )
    })
}

/// Simulates the series LC bench over a log grid of `points` frequencies
/// and recovers the capacitance from its peak.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hbc_simulate_extraction(
    inductance_h: f64,
    capacitance_f: f64,
    resistance_ohm: f64,
    f_start_hz: f64,
    f_stop_hz: f64,
    points: usize,
    out: *mut HbcExtraction,
) -> HbcStatus {
    guard(|| {
        let circuit = ResonanceCircuit::new(
            Inductance::henries(inductance_h),
            Capacitance::farads(capacitance_f),
            Resistance::ohms(resistance_ohm),
        )?;
        let grid = resonance::log_grid(Frequency::hertz(f_start_hz), Frequency::hertz(f_stop_hz), points)?;
        let ex = resonance::extract_body_capacitance(&circuit, &grid)?;
        write(
            out,
            "out",
            HbcExtraction {
                resonant_frequency_hz: ex.resonant_frequency.value(),
                capacitance_f: ex.capacitance.value(),
                eqs: ex.eqs,
            },
        )
    })
}
