//! Body-capacitance extraction by LC resonance.
//!
//! A known inductor in series with the body-to-earth capacitance forms a
//! resonant divider. Sweeping the source frequency, locating the peak of
//! the capacitor voltage and inverting `f_r = 1 / (2π √(LC))` recovers the
//! capacitance. Dielectric-thickness tables map stand-off height to `C_B`.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{HbcError, Result};
use crate::geometry::positive;
use crate::quantity::{Capacitance, Frequency, Inductance, Length, Resistance};

/// Upper edge of the electro-quasistatic regime assumed by the lumped model.
pub const EQS_LIMIT: Frequency = Frequency::megahertz(1.0);

pub const DEFAULT_SERIES_RESISTANCE: Resistance = Resistance::ohms(10.0);
pub const DEFAULT_GRID_POINTS: usize = 2000;
pub const DEFAULT_GRID_START: Frequency = Frequency::kilohertz(10.0);
pub const DEFAULT_GRID_STOP: Frequency = Frequency::megahertz(1.0);

/// Header of the dielectric table file format.
pub const TABLE_HEADER: [&str; 2] = ["thickness_m", "c_b_farads"];

pub fn is_eqs(frequency: Frequency) -> bool {
    frequency.value() <= EQS_LIMIT.value()
}

/// Series `L`–`R` feeding a shunt capacitance; the output is the capacitor voltage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonanceCircuit {
    pub inductance: Inductance,
    pub capacitance: Capacitance,
    pub series_resistance: Resistance,
}

impl ResonanceCircuit {
    pub fn new(inductance: Inductance, capacitance: Capacitance, series_resistance: Resistance) -> Result<Self> {
        positive("inductance", inductance.value())?;
        positive("capacitance", capacitance.value())?;
        positive("series_resistance", series_resistance.value())?;
        Ok(ResonanceCircuit {
            inductance,
            capacitance,
            series_resistance,
        })
    }

    /// Undamped resonance `1 / (2π √(LC))`.
    pub fn natural_frequency(&self) -> Frequency {
        resonant_frequency(self.inductance, self.capacitance)
    }

    /// `|Z_C / (R + Z_L + Z_C)|` at one frequency.
    pub fn magnitude_at(&self, frequency: Frequency) -> f64 {
        let w = frequency.angular();
        let z_c = Complex64::new(0.0, -1.0 / (w * self.capacitance.value()));
        let z = Complex64::new(self.series_resistance.value(), w * self.inductance.value()) + z_c;
        (z_c / z).norm()
    }
}

pub fn resonant_frequency(inductance: Inductance, capacitance: Capacitance) -> Frequency {
    Frequency::hertz(1.0 / (2.0 * std::f64::consts::PI * (inductance.value() * capacitance.value()).sqrt()))
}

/// `n` logarithmically spaced points from `start` to `stop` inclusive.
pub fn log_grid(start: Frequency, stop: Frequency, n: usize) -> Result<Vec<Frequency>> {
    let lo = positive("grid start", start.value())?;
    let hi = positive("grid stop", stop.value())?;
    if hi <= lo {
        return Err(HbcError::InvalidSweep(format!("grid stop {hi:e} must exceed start {lo:e}")));
    }
    if n < 2 {
        return Err(HbcError::InvalidSweep(format!("grid needs at least 2 points, got {n}")));
    }
    let (l0, l1) = (lo.ln(), hi.ln());
    let step = (l1 - l0) / (n - 1) as f64;
    Ok((0..n)
        .map(|i| {
            if i == n - 1 {
                Frequency::hertz(hi)
            } else {
                Frequency::hertz((l0 + step * i as f64).exp())
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencySweep {
    frequencies: Vec<f64>,
    magnitudes: Vec<f64>,
}

impl FrequencySweep {
    pub fn new(frequencies: Vec<f64>, magnitudes: Vec<f64>) -> Result<Self> {
        if frequencies.is_empty() {
            return Err(HbcError::InvalidSweep("empty frequency grid".into()));
        }
        if frequencies.len() != magnitudes.len() {
            return Err(HbcError::InvalidSweep(format!(
                "{} frequencies but {} magnitudes",
                frequencies.len(),
                magnitudes.len()
            )));
        }
        if frequencies.windows(2).any(|w| !(w[1] > w[0])) || !(frequencies[0] > 0.0) {
            return Err(HbcError::InvalidSweep("frequencies must be positive and strictly ascending".into()));
        }
        if magnitudes.iter().any(|m| !(*m >= 0.0) || !m.is_finite()) {
            return Err(HbcError::InvalidSweep("magnitudes must be finite and >= 0".into()));
        }
        Ok(FrequencySweep { frequencies, magnitudes })
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn magnitudes(&self) -> &[f64] {
        &self.magnitudes
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    /// Writes `frequency_hz,magnitude` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| HbcError::Csv(e.to_string());
        w.write_record(["frequency_hz", "magnitude"]).map_err(csv_err)?;
        for (f, m) in self.frequencies.iter().zip(&self.magnitudes) {
            w.write_record([format!("{f:e}"), format!("{m:e}")]).map_err(csv_err)?;
        }
        w.flush().map_err(|e| HbcError::Csv(e.to_string()))
    }
}

/// Magnitude response of `circuit` over `grid`.
pub fn lc_response(circuit: &ResonanceCircuit, grid: &[Frequency]) -> Result<FrequencySweep> {
    if grid.is_empty() {
        return Err(HbcError::InvalidSweep("empty frequency grid".into()));
    }
    let frequencies: Vec<f64> = grid.iter().map(|f| f.value()).collect();
    let magnitudes = grid.iter().map(|&f| circuit.magnitude_at(f)).collect();
    FrequencySweep::new(frequencies, magnitudes)
}

/// Locates the response peak: the grid maximum refined by a parabola
/// through the three points around it, in (ln f, ln |H|) coordinates.
pub fn find_resonant_frequency(sweep: &FrequencySweep) -> Result<Frequency> {
    let (f, m) = (sweep.frequencies(), sweep.magnitudes());
    if f.len() < 3 {
        return Err(HbcError::InvalidSweep(format!("need at least 3 points, got {}", f.len())));
    }
    let (peak, &max) = m
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty sweep");
    let min = m.iter().copied().fold(f64::INFINITY, f64::min);
    if max <= 0.0 || max - min <= max * 1e-12 {
        return Err(HbcError::FlatSweep);
    }
    if peak == 0 || peak == f.len() - 1 {
        return Err(HbcError::BoundaryPeak { frequency_hz: f[peak] });
    }

    let x = [f[peak - 1].ln(), f[peak].ln(), f[peak + 1].ln()];
    let y = [m[peak - 1], m[peak], m[peak + 1]].map(|v| v.max(f64::MIN_POSITIVE).ln());
    let vertex = parabola_vertex(x, y).unwrap_or(x[1]).clamp(x[0], x[2]);
    Ok(Frequency::hertz(vertex.exp()))
}

/// Abscissa of the extremum of the parabola through three points.
fn parabola_vertex(x: [f64; 3], y: [f64; 3]) -> Option<f64> {
    let d0 = (y[1] - y[0]) / (x[1] - x[0]);
    let d1 = (y[2] - y[1]) / (x[2] - x[1]);
    let curvature = (d1 - d0) / (x[2] - x[0]);
    if curvature >= 0.0 {
        return None;
    }
    // y' = d0 + curvature * (2x - x0 - x1) = 0
    Some(0.5 * (x[0] + x[1] - d0 / curvature))
}

/// `C = 1 / ((2π f_r)² L)`.
pub fn capacitance_from_resonance(f_r: Frequency, inductance: Inductance) -> Result<Capacitance> {
    let f = positive("resonant frequency", f_r.value())?;
    let l = positive("inductance", inductance.value())?;
    let w = 2.0 * std::f64::consts::PI * f;
    Ok(Capacitance::farads(1.0 / (w * w * l)))
}

/// Outcome of a full synthetic extraction run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Extraction {
    pub sweep: FrequencySweep,
    pub resonant_frequency: Frequency,
    pub capacitance: Capacitance,
    pub eqs: bool,
}

/// Sweeps `circuit` over `grid`, finds the peak and converts it back to a capacitance.
pub fn extract_body_capacitance(circuit: &ResonanceCircuit, grid: &[Frequency]) -> Result<Extraction> {
    let sweep = lc_response(circuit, grid)?;
    let f_r = find_resonant_frequency(&sweep)?;
    let capacitance = capacitance_from_resonance(f_r, circuit.inductance)?;
    Ok(Extraction {
        sweep,
        resonant_frequency: f_r,
        capacitance,
        eqs: is_eqs(f_r),
    })
}

/// Body capacitance against dielectric stand-off thickness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DielectricTable {
    rows: Vec<(Length, Capacitance)>,
}

impl DielectricTable {
    /// Rows must have strictly ascending thickness and strictly descending capacitance.
    pub fn new(rows: Vec<(Length, Capacitance)>) -> Result<Self> {
        if rows.is_empty() {
            return Err(HbcError::InvalidTable("table has no rows".into()));
        }
        for (i, (t, c)) in rows.iter().enumerate() {
            if !(t.value() > 0.0 && t.value().is_finite() && c.value() > 0.0 && c.value().is_finite()) {
                return Err(HbcError::InvalidTable(format!("row {i}: values must be finite and > 0")));
            }
        }
        for (i, w) in rows.windows(2).enumerate() {
            if !(w[1].0 > w[0].0) {
                return Err(HbcError::InvalidTable(format!("row {}: thickness not strictly ascending", i + 1)));
            }
            if !(w[1].1 < w[0].1) {
                return Err(HbcError::InvalidTable(format!(
                    "row {}: body capacitance must decrease as thickness grows",
                    i + 1
                )));
            }
        }
        Ok(DielectricTable { rows })
    }

    pub fn rows(&self) -> &[(Length, Capacitance)] {
        &self.rows
    }

    pub fn thickness_range(&self) -> (Length, Length) {
        (self.rows[0].0, self.rows[self.rows.len() - 1].0)
    }

    /// Parses the two-column `thickness_m,c_b_farads` format.
    pub fn from_csv<R: Read>(input: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let headers = reader.headers().map_err(|e| HbcError::Csv(e.to_string()))?;
        if headers.iter().collect::<Vec<_>>() != TABLE_HEADER {
            return Err(HbcError::InvalidTable(format!(
                "expected header `{}`, found `{}`",
                TABLE_HEADER.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record.map_err(|e| HbcError::Csv(e.to_string()))?;
            if record.len() != 2 {
                return Err(HbcError::InvalidTable(format!("row {i}: expected 2 columns")));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| HbcError::InvalidTable(format!("row {i}: `{s}` is not a number")))
            };
            rows.push((Length::meters(parse(&record[0])?), Capacitance::farads(parse(&record[1])?)));
        }
        Self::new(rows)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| HbcError::io(path, e))?;
        Self::from_csv(file)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| HbcError::Csv(e.to_string());
        w.write_record(TABLE_HEADER).map_err(csv_err)?;
        for (t, c) in &self.rows {
            w.write_record([format!("{:e}", t.value()), format!("{:e}", c.value())])
                .map_err(csv_err)?;
        }
        w.flush().map_err(|e| HbcError::Csv(e.to_string()))
    }
}

/// Piecewise-linear body capacitance at `thickness`; no extrapolation.
pub fn body_capacitance_lookup(thickness: Length, table: &DielectricTable) -> Result<Capacitance> {
    let t = thickness.value();
    let (lo, hi) = table.thickness_range();
    if !(t >= lo.value() && t <= hi.value()) {
        return Err(HbcError::OutOfRange {
            quantity: "dielectric thickness",
            value: t,
            min: lo.value(),
            max: hi.value(),
        });
    }
    let rows = table.rows();
    let i = rows.partition_point(|(rt, _)| rt.value() < t);
    if rows[i].0.value() == t {
        return Ok(rows[i].1);
    }
    let (t0, c0) = (rows[i - 1].0.value(), rows[i - 1].1.value());
    let (t1, c1) = (rows[i].0.value(), rows[i].1.value());
    Ok(Capacitance::farads(c0 + (c1 - c0) * (t - t0) / (t1 - t0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn circuit(c_pf: f64) -> ResonanceCircuit {
        ResonanceCircuit::new(
            Inductance::millihenries(1.0),
            Capacitance::picofarads(c_pf),
            DEFAULT_SERIES_RESISTANCE,
        )
        .unwrap()
    }

    fn default_grid() -> Vec<Frequency> {
        log_grid(DEFAULT_GRID_START, DEFAULT_GRID_STOP, DEFAULT_GRID_POINTS).unwrap()
    }

    #[test]
    fn response_limits() {
        let c = circuit(150.838);
        assert!((c.magnitude_at(Frequency::hertz(1.0)) - 1.0).abs() < 1e-9);
        assert!(c.magnitude_at(Frequency::megahertz(1e3)) < 1e-6);
        assert!(lc_response(&c, &[]).is_err());
    }

    #[test]
    fn peak_at_natural_frequency() {
        let c = circuit(150.838);
        // 1 / (2π √(1e-3 · 150.838e-12)) = 409.79 kHz
        assert!((c.natural_frequency().value() - 409.8e3).abs() < 100.0);
        let sweep = lc_response(&c, &default_grid()).unwrap();
        let f = find_resonant_frequency(&sweep).unwrap();
        assert!(((f.value() - 409.8e3) / 409.8e3).abs() < 1e-3, "{f}");
    }

    #[test]
    fn capacitance_recovery() {
        let c = capacitance_from_resonance(Frequency::kilohertz(409.8), Inductance::millihenries(1.0)).unwrap();
        assert!(((c.to_picofarads() - 150.838) / 150.838).abs() < 1e-3);
        let c2 = capacitance_from_resonance(Frequency::kilohertz(819.6), Inductance::millihenries(1.0)).unwrap();
        assert!((c2 / c - 0.25).abs() < 1e-12);
        assert!(capacitance_from_resonance(Frequency::ZERO, Inductance::millihenries(1.0)).is_err());
        assert!(capacitance_from_resonance(Frequency::kilohertz(1.0), Inductance::ZERO).is_err());
    }

    #[test]
    fn microhenry_moves_peak_out_of_eqs() {
        let f = resonant_frequency(Inductance::microhenries(1.0), Capacitance::picofarads(150.838));
        assert!(((f.value() - 12.96e6) / 12.96e6).abs() < 1e-3);
        assert!(!is_eqs(f));
        let back = capacitance_from_resonance(f, Inductance::microhenries(1.0)).unwrap();
        assert!(((back.to_picofarads() - 150.838) / 150.838).abs() < 1e-12);
    }

    #[test]
    fn symmetric_peak_is_exact() {
        let freqs: Vec<f64> = (0..5).map(|i| 1e3 * 2f64.powi(i)).collect();
        let sweep = FrequencySweep::new(freqs, vec![1.0, 2.0, 3.0, 2.0, 1.0]).unwrap();
        let f = find_resonant_frequency(&sweep).unwrap();
        assert!((f.value() - 4e3).abs() < 1e-9);
    }

    #[test]
    fn monotone_and_flat_sweeps_rejected() {
        let freqs = vec![1.0, 2.0, 3.0, 4.0];
        let rising = FrequencySweep::new(freqs.clone(), vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!(matches!(find_resonant_frequency(&rising), Err(HbcError::BoundaryPeak { .. })));
        let flat = FrequencySweep::new(freqs.clone(), vec![1.0; 4]).unwrap();
        assert!(matches!(find_resonant_frequency(&flat), Err(HbcError::FlatSweep)));
        let short = FrequencySweep::new(vec![1.0, 2.0], vec![1.0, 2.0]).unwrap();
        assert!(find_resonant_frequency(&short).is_err());
    }

    #[test]
    fn sweep_validation() {
        assert!(FrequencySweep::new(vec![], vec![]).is_err());
        assert!(FrequencySweep::new(vec![2.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(FrequencySweep::new(vec![1.0, 2.0], vec![1.0]).is_err());
        assert!(FrequencySweep::new(vec![1.0, 2.0], vec![1.0, -1.0]).is_err());
    }

    fn synthetic_table() -> DielectricTable {
        DielectricTable::new(vec![
            (Length::centimeters(30.0), Capacitance::picofarads(200.0)),
            (Length::centimeters(50.0), Capacitance::picofarads(100.0)),
        ])
        .unwrap()
    }

    #[test]
    fn table_lookup() {
        let t = synthetic_table();
        let mid = body_capacitance_lookup(Length::centimeters(40.0), &t).unwrap();
        assert!((mid.to_picofarads() - 150.0).abs() < 1e-9);
        for (th, c) in t.rows() {
            assert_eq!(body_capacitance_lookup(*th, &t).unwrap(), *c);
        }
        assert!(matches!(
            body_capacitance_lookup(Length::centimeters(60.0), &t),
            Err(HbcError::OutOfRange { .. })
        ));
        let anchored = DielectricTable::new(vec![
            (Length::centimeters(20.0), Capacitance::picofarads(250.0)),
            (Length::centimeters(40.0), Capacitance::picofarads(150.838)),
            (Length::centimeters(80.0), Capacitance::picofarads(90.0)),
        ])
        .unwrap();
        let c = body_capacitance_lookup(Length::centimeters(40.0), &anchored).unwrap();
        assert_eq!(c, Capacitance::picofarads(150.838));
    }

    #[test]
    fn table_rejects_non_monotone() {
        let rising = DielectricTable::new(vec![
            (Length::centimeters(30.0), Capacitance::picofarads(100.0)),
            (Length::centimeters(50.0), Capacitance::picofarads(200.0)),
        ]);
        assert!(rising.is_err());
        let unsorted = DielectricTable::new(vec![
            (Length::centimeters(50.0), Capacitance::picofarads(200.0)),
            (Length::centimeters(30.0), Capacitance::picofarads(100.0)),
        ]);
        assert!(unsorted.is_err());
    }

    #[test]
    fn table_csv_format() {
        let text = "thickness_m,c_b_farads\n0.3,2e-10\n0.5,1e-10\n";
        let t = DielectricTable::from_csv(text.as_bytes()).unwrap();
        assert_eq!(t, synthetic_table_exact());
        let mut out = Vec::new();
        t.write_csv(&mut out).unwrap();
        assert_eq!(DielectricTable::from_csv(out.as_slice()).unwrap(), t);
        assert!(DielectricTable::from_csv("t,c\n0.3,2e-10\n".as_bytes()).is_err());
    }

    fn synthetic_table_exact() -> DielectricTable {
        DielectricTable::new(vec![
            (Length::meters(0.3), Capacitance::farads(2e-10)),
            (Length::meters(0.5), Capacitance::farads(1e-10)),
        ])
        .unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn extraction_round_trip(c_pf in 50.0f64..500.0, r in 1.0f64..50.0) {
            let circuit = ResonanceCircuit::new(
                Inductance::millihenries(1.0),
                Capacitance::picofarads(c_pf),
                Resistance::ohms(r),
            ).unwrap();
            let out = extract_body_capacitance(&circuit, &default_grid()).unwrap();
            prop_assert!(((out.capacitance.to_picofarads() - c_pf) / c_pf).abs() < 5e-3);
            prop_assert!(out.eqs);
        }

        #[test]
        fn peak_falls_with_capacitance(c_pf in 25.0f64..500.0, dc in 1.0f64..100.0) {
            let l = Inductance::millihenries(1.0);
            let f0 = resonant_frequency(l, Capacitance::picofarads(c_pf));
            let f1 = resonant_frequency(l, Capacitance::picofarads(c_pf + dc));
            prop_assert!(f1 < f0);
            prop_assert!(f0.value() < EQS_LIMIT.value());
        }
    }
}
