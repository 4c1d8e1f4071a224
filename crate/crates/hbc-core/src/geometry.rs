//! Capacitance laws for wearable disc devices.
//!
//! A device is modeled as two circular plates: a signal plate on the skin
//! and a floating ground plate separated from it by `thickness`. Everything
//! here is a closed-form function of that geometry plus the shadowing
//! fraction and the calibrated coupling constant.

use serde::{Deserialize, Serialize};

use crate::error::{HbcError, Result};
use crate::quantity::{Area, Capacitance, Length};

/// Vacuum permittivity, F/m (CODATA 2018).
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;

/// Physical constants used by the capacitance laws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub epsilon0: f64,
}

impl PhysicalConstants {
    pub const SI: PhysicalConstants = PhysicalConstants {
        epsilon0: EPSILON_0,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceGeometry {
    /// Ground-plate radius.
    pub radius: Length,
    /// Signal-plate to ground-plate separation.
    pub thickness: Length,
    /// Disc height used by the finite-thickness self-capacitance law.
    pub disc_height: Length,
}

impl DeviceGeometry {
    pub fn new(radius: Length, thickness: Length) -> Result<Self> {
        Self::with_disc_height(radius, thickness, Length::ZERO)
    }

    pub fn with_disc_height(radius: Length, thickness: Length, disc_height: Length) -> Result<Self> {
        let geom = DeviceGeometry {
            radius,
            thickness,
            disc_height,
        };
        geom.validate()?;
        Ok(geom)
    }

    pub fn validate(&self) -> Result<()> {
        positive("radius", self.radius.value())?;
        positive("thickness", self.thickness.value())?;
        let h = self.disc_height.value();
        if !(h.is_finite() && h >= 0.0) {
            return Err(HbcError::domain("disc_height", h, "must be finite and >= 0"));
        }
        Ok(())
    }

    pub fn area(&self) -> Area {
        Area::disc(self.radius)
    }
}

/// Proportionality constant of the inter-device coupling law, F/m.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CouplingConstant(f64);

impl CouplingConstant {
    pub fn new(farads_per_meter: f64) -> Result<Self> {
        positive("k", farads_per_meter)?;
        Ok(CouplingConstant(farads_per_meter))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Fraction of the unshadowed self-capacitance that survives body shadowing.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ShadowingFraction(f64);

impl ShadowingFraction {
    pub const UNSHADOWED: ShadowingFraction = ShadowingFraction(1.0);

    pub fn new(x: f64) -> Result<Self> {
        if !(x > 0.0 && x <= 1.0) {
            return Err(HbcError::domain("x", x, "shadowing fraction must lie in (0, 1]"));
        }
        Ok(ShadowingFraction(x))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

pub(crate) fn positive(quantity: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(HbcError::domain(quantity, value, "must be finite and > 0"))
    }
}

/// Validates a computed capacitance and flushes subnormals to zero.
pub(crate) fn finish(quantity: &'static str, farads: f64) -> Result<Capacitance> {
    if !farads.is_finite() || farads < 0.0 {
        return Err(HbcError::domain(quantity, farads, "result must be finite and >= 0"));
    }
    if farads.is_subnormal() {
        return Ok(Capacitance::ZERO);
    }
    Ok(Capacitance::farads(farads))
}

/// Self-capacitance of an isolated disc of radius `a` and height `h`:
/// `8 ε0 a [1 + 0.87 (h / 2a)^0.76]`, which is exactly `8 ε0 a` for `h = 0`.
pub fn disc_self_capacitance(geom: &DeviceGeometry) -> Result<Capacitance> {
    let a = positive("radius", geom.radius.value())?;
    let h = geom.disc_height.value();
    if !(h.is_finite() && h >= 0.0) {
        return Err(HbcError::domain("disc_height", h, "must be finite and >= 0"));
    }
    let thin = 8.0 * EPSILON_0 * a;
    if h == 0.0 {
        return finish("disc self-capacitance", thin);
    }
    finish(
        "disc self-capacitance",
        thin * (1.0 + 0.87 * (h / (2.0 * a)).powf(0.76)),
    )
}

/// Parallel-plate capacitance between signal and ground plates, `ε0 π a² / t`.
pub fn plate_to_plate_capacitance(geom: &DeviceGeometry) -> Result<Capacitance> {
    let a = positive("radius", geom.radius.value())?;
    let t = positive("thickness", geom.thickness.value())?;
    finish(
        "plate-to-plate capacitance",
        EPSILON_0 * std::f64::consts::PI * a * a / t,
    )
}

/// Ground-plate to earth capacitance under shadowing, `x · 8 ε0 a`.
pub fn return_path_capacitance(geom: &DeviceGeometry, x: ShadowingFraction) -> Result<Capacitance> {
    let a = positive("radius", geom.radius.value())?;
    let x = ShadowingFraction::new(x.value())?;
    finish("return-path capacitance", x.value() * 8.0 * EPSILON_0 * a)
}

/// Inter-device coupling, `k π a² / d`. An infinite separation yields zero.
pub fn coupling_capacitance(
    geom: &DeviceGeometry,
    separation: Length,
    k: CouplingConstant,
) -> Result<Capacitance> {
    let a = positive("radius", geom.radius.value())?;
    let d = separation.value();
    if !(d > 0.0) {
        return Err(HbcError::domain("separation", d, "must be > 0"));
    }
    let k = positive("k", k.value())?;
    finish(
        "coupling capacitance",
        k * std::f64::consts::PI * a * a / d,
    )
}

/// Body to floating-ground-plate capacitance, `C_PP + C_F`.
pub fn ground_to_body_capacitance(c_pp: Capacitance, c_fringe: Capacitance) -> Result<Capacitance> {
    nonnegative("c_pp", c_pp.value())?;
    nonnegative("c_fringe", c_fringe.value())?;
    finish("ground-to-body capacitance", c_pp.value() + c_fringe.value())
}

/// Inverts the coupling law at a reference point: `k = C_c d / A`.
pub fn calibrate_coupling_constant(
    c_c_ref: Capacitance,
    d_ref: Length,
    area_ref: Area,
) -> Result<CouplingConstant> {
    let c = positive("c_c_ref", c_c_ref.value())?;
    let d = positive("d_ref", d_ref.value())?;
    let area = positive("area_ref", area_ref.value())?;
    CouplingConstant::new(c * d / area)
}

/// Coupling from an explicit plate area rather than a radius, `k A / d`.
pub fn coupling_capacitance_for_area(
    area: Area,
    separation: Length,
    k: CouplingConstant,
) -> Result<Capacitance> {
    let area = positive("area", area.value())?;
    let d = separation.value();
    if !(d > 0.0) {
        return Err(HbcError::domain("separation", d, "must be > 0"));
    }
    finish("coupling capacitance", k.value() * area / d)
}

pub(crate) fn nonnegative(quantity: &'static str, value: f64) -> Result<f64> {
    if value >= 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(HbcError::domain(quantity, value, "must be finite and >= 0"))
    }
}
