//! Closed-form voltage transfer functions of the capacitive channel.
//!
//! All ratios are `V_out / V_in` magnitudes of a purely capacitive circuit
//! and are therefore real and frequency independent.

use serde::{Deserialize, Serialize};

use crate::error::{HbcError, Result};
use crate::geometry::{
    self, coupling_capacitance, ground_to_body_capacitance, plate_to_plate_capacitance,
    return_path_capacitance, CouplingConstant, DeviceGeometry, ShadowingFraction, EPSILON_0,
};
use crate::network::{build_channel_network, solve_transfer};
use crate::quantity::{Capacitance, Decibels, Frequency, Length};

/// Coupling below this is treated as the distant regime.
pub const DISTANT_COUPLING_THRESHOLD: Capacitance = Capacitance::femtofarads(1.0);
/// Coupling above this is treated as the coupled regime.
pub const COUPLED_COUPLING_THRESHOLD: Capacitance = Capacitance::femtofarads(10.0);
/// "Much larger than" in the approximation checks means at least this factor.
pub const APPROXIMATION_MARGIN: f64 = 10.0;

const DENOMINATOR_FLOOR: f64 = 1e-30;

/// The six lumped capacitances of the channel circuit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelCapacitances {
    /// Tx ground plate to earth (return path).
    pub c_x_tx: Capacitance,
    /// Rx ground plate to earth (return path).
    pub c_x_rx: Capacitance,
    /// Body to Rx ground plate.
    pub c_gb_rx: Capacitance,
    /// Receiver load.
    pub c_l: Capacitance,
    /// Body to earth.
    pub c_b: Capacitance,
    /// Tx ground plate to Rx ground plate; zero when the devices are far apart.
    pub c_c: Capacitance,
}

impl ChannelCapacitances {
    pub fn validate(&self) -> Result<()> {
        geometry::positive("c_x_tx", self.c_x_tx.value())?;
        geometry::positive("c_x_rx", self.c_x_rx.value())?;
        geometry::positive("c_gb_rx", self.c_gb_rx.value())?;
        geometry::positive("c_l", self.c_l.value())?;
        geometry::positive("c_b", self.c_b.value())?;
        geometry::nonnegative("c_c", self.c_c.value())?;
        Ok(())
    }

    pub fn with_coupling(self, c_c: Capacitance) -> Self {
        ChannelCapacitances { c_c, ..self }
    }
}

/// Separation and calibrated constant of the inter-device coupling law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub separation: Length,
    pub k: CouplingConstant,
}

/// Geometric parameter set from which every channel capacitance follows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometricInputs {
    pub tx: DeviceGeometry,
    pub rx: DeviceGeometry,
    /// `None` describes devices too far apart for any coupling.
    pub coupling: Option<Coupling>,
    pub x_tx: ShadowingFraction,
    pub x_rx: ShadowingFraction,
    /// Fringe part of the body to Rx-ground capacitance.
    pub c_fringe: Capacitance,
    pub c_l: Capacitance,
    pub c_b: Capacitance,
}

impl GeometricInputs {
    /// Composes the capacitance laws into the circuit parameters. With
    /// `distant` set, or without coupling data, `c_c` is zero.
    ///
    /// The coupling area is that of the smaller plate.
    pub fn capacitances(&self, distant: bool) -> Result<ChannelCapacitances> {
        self.tx.validate()?;
        self.rx.validate()?;
        let c_c = match (distant, self.coupling) {
            (false, Some(c)) => {
                let plate = if self.tx.radius <= self.rx.radius { &self.tx } else { &self.rx };
                coupling_capacitance(plate, c.separation, c.k)?
            }
            _ => Capacitance::ZERO,
        };
        let caps = ChannelCapacitances {
            c_x_tx: return_path_capacitance(&self.tx, self.x_tx)?,
            c_x_rx: return_path_capacitance(&self.rx, self.x_rx)?,
            c_gb_rx: ground_to_body_capacitance(plate_to_plate_capacitance(&self.rx)?, self.c_fringe)?,
            c_l: self.c_l,
            c_b: self.c_b,
            c_c,
        };
        caps.validate()?;
        Ok(caps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometricProvenance {
    pub inputs: GeometricInputs,
    pub distant: bool,
}

/// A fully specified channel: its capacitances, plus the geometry they were
/// derived from when known.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelScenario {
    pub caps: ChannelCapacitances,
    pub provenance: Option<GeometricProvenance>,
}

impl ChannelScenario {
    pub fn from_capacitances(caps: ChannelCapacitances) -> Result<Self> {
        caps.validate()?;
        Ok(ChannelScenario { caps, provenance: None })
    }

    pub fn from_geometry(inputs: GeometricInputs, distant: bool) -> Result<Self> {
        let caps = inputs.capacitances(distant)?;
        Ok(ChannelScenario {
            caps,
            provenance: Some(GeometricProvenance { inputs, distant }),
        })
    }

    /// Checks the invariants, including agreement with the recorded geometry.
    pub fn validate(&self) -> Result<()> {
        self.caps.validate()?;
        if let Some(p) = &self.provenance {
            let derived = p.inputs.capacitances(p.distant)?;
            let pairs = [
                ("c_x_tx", self.caps.c_x_tx, derived.c_x_tx),
                ("c_x_rx", self.caps.c_x_rx, derived.c_x_rx),
                ("c_gb_rx", self.caps.c_gb_rx, derived.c_gb_rx),
                ("c_l", self.caps.c_l, derived.c_l),
                ("c_b", self.caps.c_b, derived.c_b),
                ("c_c", self.caps.c_c, derived.c_c),
            ];
            for (name, stored, derived) in pairs {
                if relative_difference(stored.value(), derived.value()) > 1e-12 {
                    return Err(HbcError::Degenerate(format!(
                        "{name} = {stored} disagrees with its geometric value {derived}"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn guarded_ratio(num: f64, den: f64, what: &str) -> Result<f64> {
    if !(den.abs() >= DENOMINATOR_FLOOR) || !den.is_finite() || !num.is_finite() {
        return Err(HbcError::Degenerate(format!("{what}: denominator {den:e} vanishes")));
    }
    Ok(num / den)
}

/// Body potential of the simple divider, `C_return / C_B`.
pub fn body_potential_ratio(c_return: Capacitance, c_b: Capacitance) -> Result<f64> {
    let c = geometry::positive("c_return", c_return.value())?;
    let c_b = geometry::positive("c_b", c_b.value())?;
    guarded_ratio(c, c_b, "body potential")
}

/// Recovers the return-path capacitance from a measured body potential,
/// `C_B · V_body / V_in`.
pub fn extract_return_path(v_ratio: f64, c_b: Capacitance) -> Result<Capacitance> {
    if !(v_ratio > 0.0 && v_ratio < 1.0) {
        return Err(HbcError::domain("v_ratio", v_ratio, "must lie in (0, 1)"));
    }
    let c_b = geometry::positive("c_b", c_b.value())?;
    geometry::finish("return-path capacitance", c_b * v_ratio)
}

/// Receiver voltage with no inter-device coupling:
/// `(C_x-Tx / C_B) · C_x-Rx / (C_GB-Rx + C_L)`.
pub fn rx_transfer_distant(caps: &ChannelCapacitances) -> Result<f64> {
    caps.validate()?;
    let [c_xt, c_xr, c_gb, c_l, c_b] = [caps.c_x_tx, caps.c_x_rx, caps.c_gb_rx, caps.c_l, caps.c_b]
        .map(Capacitance::value);
    let through_body = guarded_ratio(c_xt, c_b, "body potential")? * c_xr;
    guarded_ratio(through_body, c_l + c_gb, "receiver divider")
}

/// Full transfer including inter-device coupling, evaluated exactly as the
/// published closed form:
///
/// ```text
///            C_c (C_B + C_xr + C_xt) + C_xr C_xt
/// ------------------------------------------------------------------
/// C_c (C_B + C_xr + C_xt) + (C_B + C_xr)(C_L + C_GB + C_xt) + C_xt (C_L + C_GB)
/// ```
pub fn full_transfer(caps: &ChannelCapacitances) -> Result<f64> {
    caps.validate()?;
    let [c_xt, c_xr, c_gb, c_l, c_b, c_c] =
        [caps.c_x_tx, caps.c_x_rx, caps.c_gb_rx, caps.c_l, caps.c_b, caps.c_c].map(Capacitance::value);
    let coupled = c_c * (c_b + c_xr + c_xt);
    let num = coupled + c_xr * c_xt;
    let den = coupled + (c_b + c_xr) * (c_l + c_gb + c_xt) + c_xt * (c_l + c_gb);
    guarded_ratio(num, den, "full transfer")
}

/// Numerator polynomial of [`full_transfer`], in F².
pub fn full_transfer_numerator(caps: &ChannelCapacitances) -> f64 {
    let [c_xt, c_xr, c_b, c_c] = [caps.c_x_tx, caps.c_x_rx, caps.c_b, caps.c_c].map(Capacitance::value);
    c_c * (c_b + c_xr + c_xt) + c_xr * c_xt
}

/// Large-`C_B`, large-load simplification:
/// `(C_c + C_xr C_xt / C_B) / (C_c + C_L + C_GB-Rx)`.
pub fn simplified_transfer(caps: &ChannelCapacitances) -> Result<f64> {
    caps.validate()?;
    let [c_xt, c_xr, c_gb, c_l, c_b, c_c] =
        [caps.c_x_tx, caps.c_x_rx, caps.c_gb_rx, caps.c_l, caps.c_b, caps.c_c].map(Capacitance::value);
    // Same evaluation order as the distant form, so the two agree bit for bit at C_c = 0.
    let through_body = guarded_ratio(c_xt, c_b, "body path")? * c_xr;
    guarded_ratio(c_c + through_body, c_c + c_l + c_gb, "simplified transfer")
}

/// Transfer written directly in device geometry for equal Tx/Rx radii.
///
/// ```text
///   k π a²/d + x_tx x_rx (8 ε0 a)² / C_B
/// ---------------------------------------  (coupling terms dropped when distant)
///   k π a²/d + ε0 π a²/t + C_F + C_L
/// ```
pub fn geometric_transfer(inputs: &GeometricInputs, distant: bool) -> Result<f64> {
    inputs.tx.validate()?;
    inputs.rx.validate()?;
    let a = inputs.tx.radius.value();
    if inputs.rx.radius.value() != a {
        return Err(HbcError::domain(
            "rx radius",
            inputs.rx.radius.value(),
            "must equal the tx radius",
        ));
    }
    let t = inputs.rx.thickness.value();
    let c_f = geometry::nonnegative("c_fringe", inputs.c_fringe.value())?;
    let c_l = geometry::positive("c_l", inputs.c_l.value())?;
    let c_b = geometry::positive("c_b", inputs.c_b.value())?;
    let x_tx = ShadowingFraction::new(inputs.x_tx.value())?.value();
    let x_rx = ShadowingFraction::new(inputs.x_rx.value())?.value();

    let area = std::f64::consts::PI * a * a;
    let coupling = if distant {
        0.0
    } else {
        let c = inputs.coupling.ok_or_else(|| {
            HbcError::Degenerate("coupled evaluation needs a separation and k".into())
        })?;
        let d = c.separation.value();
        if !(d > 0.0) {
            return Err(HbcError::domain("separation", d, "must be > 0"));
        }
        geometry::positive("k", c.k.value())? * area / d
    };
    let self_cap = 8.0 * EPSILON_0 * a;
    let num = coupling + x_tx * x_rx * self_cap * self_cap / c_b;
    let den = coupling + EPSILON_0 * area / t + c_f + c_l;
    guarded_ratio(num, den, "geometric transfer")
}

/// `20 log10(ratio)`.
pub fn ratio_to_db(ratio: f64) -> Result<Decibels> {
    if !(ratio > 0.0) || !ratio.is_finite() {
        return Err(HbcError::domain("ratio", ratio, "must be finite and > 0"));
    }
    Ok(Decibels(20.0 * ratio.log10()))
}

/// `|a - b| / max(|a|, |b|)`; zero when both vanish.
pub fn relative_difference(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RegimeFlags {
    /// Coupling below [`DISTANT_COUPLING_THRESHOLD`].
    pub distant: bool,
    /// Coupling above [`COUPLED_COUPLING_THRESHOLD`].
    pub coupled: bool,
    /// One of the "much larger than" assumptions behind the simplified forms fails.
    pub invalid_approximation: bool,
}

impl RegimeFlags {
    pub fn classify(caps: &ChannelCapacitances) -> Self {
        let c_c = caps.c_c.value();
        let c_x_max = caps.c_x_tx.value().max(caps.c_x_rx.value());
        let load = caps.c_l.value() + caps.c_gb_rx.value();
        RegimeFlags {
            distant: c_c < DISTANT_COUPLING_THRESHOLD.value(),
            coupled: c_c > COUPLED_COUPLING_THRESHOLD.value(),
            invalid_approximation: caps.c_b.value() < APPROXIMATION_MARGIN * c_x_max
                || load < APPROXIMATION_MARGIN * caps.c_x_rx.value(),
        }
    }

    /// Compact label: `distant`, `coupled`, `-`, with `+invalid` appended when set.
    pub fn label(&self) -> String {
        let base = if self.distant {
            "distant"
        } else if self.coupled {
            "coupled"
        } else {
            "-"
        };
        if self.invalid_approximation {
            format!("{base}+invalid")
        } else {
            base.to_string()
        }
    }

    pub fn parse(label: &str) -> Option<Self> {
        let (base, invalid) = match label.strip_suffix("+invalid") {
            Some(b) => (b, true),
            None => (label, false),
        };
        let (distant, coupled) = match base {
            "distant" => (true, false),
            "coupled" => (false, true),
            "-" => (false, false),
            _ => return None,
        };
        Some(RegimeFlags { distant, coupled, invalid_approximation: invalid })
    }
}

/// Pairwise symmetric relative differences between the transfer estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativeErrors {
    pub distant_vs_full: f64,
    pub simplified_vs_full: f64,
    pub distant_vs_simplified: f64,
    pub oracle_vs_full: f64,
    pub oracle_vs_simplified: f64,
    pub geometric_vs_simplified: Option<f64>,
    pub geometric_distant_vs_distant: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferReport {
    pub capacitances: ChannelCapacitances,
    pub frequency_hz: f64,
    /// `C_x-Tx / C_B`.
    pub body_potential: f64,
    pub rx_distant: f64,
    pub simplified: f64,
    pub full: f64,
    /// Coupled geometric form, when the scenario carries coupling geometry.
    pub geometric: Option<f64>,
    /// Distant geometric form, when the scenario carries geometry.
    pub geometric_distant: Option<f64>,
    /// Nodal solution of the lumped circuit (real part).
    pub oracle: f64,
    pub oracle_imag: f64,
    pub errors: RelativeErrors,
    pub flags: RegimeFlags,
}

/// Evaluates every applicable closed form and the nodal oracle.
pub fn compare_closed_forms(scenario: &ChannelScenario, frequency: Frequency) -> Result<TransferReport> {
    scenario.validate()?;
    let caps = &scenario.caps;
    let body_potential = body_potential_ratio(caps.c_x_tx, caps.c_b)?;
    let rx_distant = rx_transfer_distant(caps)?;
    let simplified = simplified_transfer(caps)?;
    let full = full_transfer(caps)?;
    let solution = solve_transfer(&build_channel_network(caps)?, frequency)?;
    let oracle = solution.ratio.re;

    let same_radius = scenario
        .provenance
        .as_ref()
        .filter(|p| p.inputs.tx.radius == p.inputs.rx.radius);
    let geometric_distant = same_radius
        .map(|p| geometric_transfer(&p.inputs, true))
        .transpose()?;
    let geometric = same_radius
        .filter(|p| !p.distant && p.inputs.coupling.is_some())
        .map(|p| geometric_transfer(&p.inputs, false))
        .transpose()?;

    let errors = RelativeErrors {
        distant_vs_full: relative_difference(rx_distant, full),
        simplified_vs_full: relative_difference(simplified, full),
        distant_vs_simplified: relative_difference(rx_distant, simplified),
        oracle_vs_full: relative_difference(oracle, full),
        oracle_vs_simplified: relative_difference(oracle, simplified),
        geometric_vs_simplified: geometric.map(|g| relative_difference(g, simplified)),
        geometric_distant_vs_distant: geometric_distant.map(|g| relative_difference(g, rx_distant)),
    };

    Ok(TransferReport {
        capacitances: *caps,
        frequency_hz: frequency.value(),
        body_potential,
        rx_distant,
        simplified,
        full,
        geometric,
        geometric_distant,
        oracle,
        oracle_imag: solution.ratio.im,
        errors,
        flags: RegimeFlags::classify(caps),
    })
}
