//! Unit-tagged scalar quantities.
//!
//! Each type wraps an `f64` in SI base units. Construction is unchecked;
//! operations that consume a quantity validate it against their own
//! preconditions and return [`HbcError::Domain`](crate::HbcError::Domain).

use std::fmt;
use std::ops::{Add, Div, Mul, Sub};

use serde::{Deserialize, Serialize};

macro_rules! quantity {
    ($(#[$meta:meta])* $name:ident, $unit:literal, $si:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(f64);

        impl $name {
            pub const ZERO: $name = $name(0.0);

            pub const fn $si(value: f64) -> Self {
                $name(value)
            }

            pub const fn value(self) -> f64 {
                self.0
            }
        }

        impl Add for $name {
            type Output = $name;
            fn add(self, rhs: $name) -> $name {
                $name(self.0 + rhs.0)
            }
        }

        impl Sub for $name {
            type Output = $name;
            fn sub(self, rhs: $name) -> $name {
                $name(self.0 - rhs.0)
            }
        }

        impl Mul<f64> for $name {
            type Output = $name;
            fn mul(self, rhs: f64) -> $name {
                $name(self.0 * rhs)
            }
        }

        impl Mul<$name> for f64 {
            type Output = $name;
            fn mul(self, rhs: $name) -> $name {
                $name(self * rhs.0)
            }
        }

        impl Div for $name {
            type Output = f64;
            fn div(self, rhs: $name) -> f64 {
                self.0 / rhs.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{:e} {}", self.0, $unit)
            }
        }
    };
}

quantity!(
    /// Length in meters.
    Length, "m", meters
);
quantity!(
    /// Area in square meters.
    Area, "m^2", square_meters
);
quantity!(
    /// Capacitance in farads.
    Capacitance, "F", farads
);
quantity!(
    /// Inductance in henries.
    Inductance, "H", henries
);
quantity!(
    /// Resistance in ohms.
    Resistance, "ohm", ohms
);
quantity!(
    /// Frequency in hertz.
    Frequency, "Hz", hertz
);

impl Length {
    pub const fn centimeters(value: f64) -> Self {
        Length(value * 1e-2)
    }

    pub const fn millimeters(value: f64) -> Self {
        Length(value * 1e-3)
    }

    pub fn to_centimeters(self) -> f64 {
        self.0 * 1e2
    }
}

impl Mul for Length {
    type Output = Area;
    fn mul(self, rhs: Length) -> Area {
        Area(self.0 * rhs.0)
    }
}

impl Area {
    pub const fn square_centimeters(value: f64) -> Self {
        Area(value * 1e-4)
    }

    /// Area of a disc of the given radius.
    pub fn disc(radius: Length) -> Self {
        Area(std::f64::consts::PI * radius.0 * radius.0)
    }

    /// Radius of the disc with this area.
    pub fn disc_radius(self) -> Length {
        Length((self.0 / std::f64::consts::PI).sqrt())
    }
}

impl Capacitance {
    pub const fn picofarads(value: f64) -> Self {
        Capacitance(value * 1e-12)
    }

    pub const fn femtofarads(value: f64) -> Self {
        Capacitance(value * 1e-15)
    }

    pub fn to_picofarads(self) -> f64 {
        self.0 * 1e12
    }

    pub fn to_femtofarads(self) -> f64 {
        self.0 * 1e15
    }
}

impl Inductance {
    pub const fn millihenries(value: f64) -> Self {
        Inductance(value * 1e-3)
    }

    pub const fn microhenries(value: f64) -> Self {
        Inductance(value * 1e-6)
    }
}

impl Frequency {
    pub const fn kilohertz(value: f64) -> Self {
        Frequency(value * 1e3)
    }

    pub const fn megahertz(value: f64) -> Self {
        Frequency(value * 1e6)
    }

    pub fn angular(self) -> f64 {
        2.0 * std::f64::consts::PI * self.0
    }
}

/// Voltage ratio expressed in decibels, `20 log10(ratio)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Decibels(pub f64);

impl Decibels {
    /// Channel loss is the negated gain.
    pub fn loss(self) -> f64 {
        -self.0
    }
}

impl fmt::Display for Decibels {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2} dB", self.0)
    }
}
