//! One-parameter sweeps over channel scenarios and their CSV form.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{ConfigError, HbcError, Result};
use crate::network::{build_channel_network, solve_transfer};
use crate::quantity::{Area, Capacitance, Frequency};
use crate::resonance::DielectricTable;
use crate::transfer::{
    full_transfer, ratio_to_db, relative_difference, rx_transfer_distant, simplified_transfer,
    ChannelCapacitances, RegimeFlags,
};

use super::build::{analysis_frequency, build_scenario_with_table, load_profile, load_table};
use super::config::{missing, Config};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SweepKind {
    Separation,
    Radius,
    TxPosition,
    RxPosition,
    DielectricThickness,
    DeviceArea,
}

impl SweepKind {
    pub const ALL: [SweepKind; 6] = [
        SweepKind::Separation,
        SweepKind::Radius,
        SweepKind::TxPosition,
        SweepKind::RxPosition,
        SweepKind::DielectricThickness,
        SweepKind::DeviceArea,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepKind::Separation => "separation",
            SweepKind::Radius => "radius",
            SweepKind::TxPosition => "tx_position",
            SweepKind::RxPosition => "rx_position",
            SweepKind::DielectricThickness => "dielectric_thickness",
            SweepKind::DeviceArea => "device_area",
        }
    }

    /// Header of the swept column in CSV output.
    pub fn column(self) -> &'static str {
        match self {
            SweepKind::Separation => "separation_m",
            SweepKind::Radius => "radius_m",
            SweepKind::TxPosition => "tx_position",
            SweepKind::RxPosition => "rx_position",
            SweepKind::DielectricThickness => "dielectric_thickness_m",
            SweepKind::DeviceArea => "device_area_m2",
        }
    }

    /// Config keys that the sweep overrides and must therefore be left unset.
    fn swept_keys(self) -> &'static [(&'static str, &'static str)] {
        match self {
            SweepKind::Separation => &[("coupling", "separation_m"), ("coupling", "c_c_f"), ("coupling", "distant")],
            SweepKind::Radius | SweepKind::DeviceArea => &[
                ("tx", "radius_m"),
                ("rx", "radius_m"),
                ("tx", "c_x_f"),
                ("rx", "c_x_f"),
                ("rx", "c_gb_f"),
                ("coupling", "c_c_f"),
            ],
            SweepKind::TxPosition => &[("tx", "position"), ("tx", "x"), ("tx", "c_x_f")],
            SweepKind::RxPosition => &[("rx", "position"), ("rx", "x"), ("rx", "c_x_f")],
            SweepKind::DielectricThickness => &[("body", "dielectric_thickness_m"), ("body", "c_b_f")],
        }
    }
}

impl FromStr for SweepKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        SweepKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| ConfigError::Invalid(format!("unknown sweep kind `{s}`")))
    }
}

impl fmt::Display for SweepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct SweepOptions {
    /// Solve the lumped network for every row.
    pub oracle: bool,
    /// Emit per-form losses in dB in addition to the ratios.
    pub db: bool,
}

/// Linear sweep of one parameter over a base configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub kind: SweepKind,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
    pub base: Config,
    pub options: SweepOptions,
}

impl SweepSpec {
    /// Reads `[sweep] kind, min, max, steps` from `config`.
    pub fn from_config(config: &Config, options: SweepOptions) -> Result<Self> {
        let kind: SweepKind = config
            .get_str("sweep", "kind")
            .ok_or_else(|| missing("sweep", "kind"))?
            .parse()?;
        let spec = SweepSpec {
            kind,
            min: config.require_f64("sweep", "min")?,
            max: config.require_f64("sweep", "max")?,
            steps: config.get_usize("sweep", "steps")?.ok_or_else(|| missing("sweep", "steps"))?,
            base: config.clone(),
            options,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min < self.max) {
            return Err(HbcError::InvalidSweep(format!("min {} must be below max {}", self.min, self.max)));
        }
        if self.steps < 2 {
            return Err(HbcError::InvalidSweep(format!("steps must be >= 2, got {}", self.steps)));
        }
        for &(section, key) in self.kind.swept_keys() {
            if self.base.contains(section, key) {
                return Err(HbcError::InvalidSweep(format!(
                    "`{section}.{key}` is fixed but the sweep varies it ({})",
                    self.kind
                )));
            }
        }
        if self.derives_separation() && self.base.contains("coupling", "separation_m") {
            return Err(HbcError::InvalidSweep(
                "`coupling.separation_m` is fixed but sweep.segment_length_m derives it from positions".into(),
            ));
        }
        Ok(())
    }

    fn derives_separation(&self) -> bool {
        matches!(self.kind, SweepKind::TxPosition | SweepKind::RxPosition)
            && self.base.contains("sweep", "segment_length_m")
    }

    /// Swept values, evenly spaced with both ends included.
    pub fn values(&self) -> Vec<f64> {
        let n = self.steps;
        (0..n)
            .map(|i| {
                if i == n - 1 {
                    self.max
                } else {
                    self.min + (self.max - self.min) * i as f64 / (n - 1) as f64
                }
            })
            .collect()
    }

    fn step_config(&self, value: f64) -> Result<Config> {
        let mut cfg = self.base.clone();
        match self.kind {
            SweepKind::Separation => cfg.set("coupling", "separation_m", value),
            SweepKind::Radius => {
                cfg.set("tx", "radius_m", value);
                cfg.set("rx", "radius_m", value);
            }
            SweepKind::DeviceArea => {
                let r = Area::square_meters(value).disc_radius().value();
                cfg.set("tx", "radius_m", r);
                cfg.set("rx", "radius_m", r);
            }
            SweepKind::TxPosition => cfg.set("tx", "position", value),
            SweepKind::RxPosition => cfg.set("rx", "position", value),
            SweepKind::DielectricThickness => cfg.set("body", "dielectric_thickness_m", value),
        }
        if self.derives_separation() {
            let length = self.base.require_f64("sweep", "segment_length_m")?;
            let offset = self.base.get_f64("sweep", "separation_offset_m")?.unwrap_or(0.0);
            let s_tx = cfg.require_f64("tx", "position")?;
            let s_rx = cfg.require_f64("rx", "position")?;
            let d = (s_rx - s_tx).abs() * length + offset;
            if !(d > 0.0) {
                return Err(HbcError::domain("separation", d, "derived separation must be > 0"));
            }
            cfg.set("coupling", "separation_m", d);
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub x_tx: Option<f64>,
    pub x_rx: Option<f64>,
    pub separation_m: Option<f64>,
    pub caps: ChannelCapacitances,
    pub ratio_full: f64,
    pub ratio_simplified: f64,
    pub ratio_distant: f64,
    pub ratio_oracle: Option<f64>,
    pub oracle_error: Option<f64>,
    /// Channel loss of the full form, `-20 log10(ratio_full)`.
    pub loss_db: f64,
    pub flags: RegimeFlags,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub kind: SweepKind,
    pub options: SweepOptions,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn column(&self, f: impl Fn(&SweepRow) -> f64) -> Vec<f64> {
        self.rows.iter().map(f).collect()
    }
}

/// Evaluates every step of `spec` in order.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let table = load_table(&spec.base)?;
    run_sweep_with_table(spec, table.as_ref())
}

/// As [`run_sweep`], with the dielectric table supplied by the caller.
pub fn run_sweep_with_table(spec: &SweepSpec, table: Option<&DielectricTable>) -> Result<SweepResult> {
    spec.validate()?;
    let frequency = analysis_frequency(&spec.base)?;
    if matches!(spec.kind, SweepKind::TxPosition) {
        load_profile(&spec.base, "tx_profile")?.ok_or_else(|| missing("tx_profile", "anchors"))?;
    }
    if matches!(spec.kind, SweepKind::RxPosition) {
        load_profile(&spec.base, "rx_profile")?.ok_or_else(|| missing("rx_profile", "anchors"))?;
    }
    let rows = spec
        .values()
        .into_iter()
        .enumerate()
        .map(|(step, value)| {
            evaluate_step(spec, table, frequency, value).map_err(|e| HbcError::SweepStep {
                step,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        kind: spec.kind,
        options: spec.options,
        rows,
    })
}

fn evaluate_step(spec: &SweepSpec, table: Option<&DielectricTable>, frequency: Frequency, value: f64) -> Result<SweepRow> {
    let cfg = spec.step_config(value)?;
    let scenario = build_scenario_with_table(&cfg, table)?;
    let caps = scenario.caps;
    let ratio_full = full_transfer(&caps)?;
    let (ratio_oracle, oracle_error) = if spec.options.oracle {
        let sol = solve_transfer(&build_channel_network(&caps)?, frequency)?;
        (Some(sol.ratio.re), Some(relative_difference(sol.ratio.re, ratio_full)))
    } else {
        (None, None)
    };
    let provenance = scenario.provenance.as_ref();
    Ok(SweepRow {
        value,
        x_tx: provenance.map(|p| p.inputs.x_tx.value()),
        x_rx: provenance.map(|p| p.inputs.x_rx.value()),
        separation_m: cfg.get_f64("coupling", "separation_m")?,
        caps,
        ratio_full,
        ratio_simplified: simplified_transfer(&caps)?,
        ratio_distant: rx_transfer_distant(&caps)?,
        ratio_oracle,
        oracle_error,
        loss_db: ratio_to_db(ratio_full)?.loss(),
        flags: RegimeFlags::classify(&caps),
    })
}

fn header(kind: SweepKind, options: SweepOptions) -> Vec<&'static str> {
    let mut h = vec![
        kind.column(),
        "x_tx",
        "x_rx",
        "separation_m",
        "c_x_tx_f",
        "c_x_rx_f",
        "c_gb_rx_f",
        "c_l_f",
        "c_b_f",
        "c_c_f",
        "ratio_full",
        "ratio_simplified",
        "ratio_distant",
    ];
    if options.oracle {
        h.extend(["ratio_oracle", "oracle_rel_err"]);
    }
    if options.db {
        h.extend(["loss_simplified_db", "loss_distant_db"]);
    }
    h.extend(["loss_db", "flags"]);
    h
}

fn num(v: f64) -> String {
    format!("{v:e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Writes the sweep as CSV: a header row, then one row per step. Numbers
/// use the shortest representation that parses back to the same `f64`.
pub fn emit_csv<W: Write>(result: &SweepResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| HbcError::Csv(e.to_string());
    w.write_record(header(result.kind, result.options)).map_err(csv_err)?;
    for row in &result.rows {
        let c = &row.caps;
        let mut rec = vec![
            num(row.value),
            opt(row.x_tx),
            opt(row.x_rx),
            opt(row.separation_m),
            num(c.c_x_tx.value()),
            num(c.c_x_rx.value()),
            num(c.c_gb_rx.value()),
            num(c.c_l.value()),
            num(c.c_b.value()),
            num(c.c_c.value()),
            num(row.ratio_full),
            num(row.ratio_simplified),
            num(row.ratio_distant),
        ];
        if result.options.oracle {
            rec.push(opt(row.ratio_oracle));
            rec.push(opt(row.oracle_error));
        }
        if result.options.db {
            rec.push(num(ratio_to_db(row.ratio_simplified)?.loss()));
            rec.push(num(ratio_to_db(row.ratio_distant)?.loss()));
        }
        rec.push(num(row.loss_db));
        rec.push(row.flags.label());
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| HbcError::Csv(e.to_string()))
}

pub fn emit_csv_to_path(result: &SweepResult, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| HbcError::io(path, e))?;
    let mut buf = std::io::BufWriter::new(file);
    emit_csv(result, &mut buf)?;
    buf.flush().map_err(|e| HbcError::io(path, e))
}

/// Parses CSV produced by [`emit_csv`].
pub fn parse_csv<R: Read>(input: R) -> Result<SweepResult> {
    let mut reader = csv::Reader::from_reader(input);
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| HbcError::Csv(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let first = headers.first().ok_or_else(|| HbcError::Csv("empty header".into()))?;
    let kind = SweepKind::ALL
        .into_iter()
        .find(|k| k.column() == first)
        .ok_or_else(|| HbcError::Csv(format!("unknown swept column `{first}`")))?;
    let options = SweepOptions {
        oracle: headers.iter().any(|h| h == "ratio_oracle"),
        db: headers.iter().any(|h| h == "loss_distant_db"),
    };
    if headers != header(kind, options) {
        return Err(HbcError::Csv(format!("unexpected header `{}`", headers.join(","))));
    }

    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| HbcError::Csv(e.to_string()))?;
        let mut fields = record.iter();
        let mut next = || fields.next().ok_or_else(|| HbcError::Csv(format!("row {i}: too few fields")));
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| HbcError::Csv(format!("row {i}: `{s}` is not a number")))
        };
        let parse_opt = |s: &str| if s.is_empty() { Ok(None) } else { parse(s).map(Some) };
        let value = parse(next()?)?;
        let x_tx = parse_opt(next()?)?;
        let x_rx = parse_opt(next()?)?;
        let separation_m = parse_opt(next()?)?;
        let mut cap = || -> Result<Capacitance> { Ok(Capacitance::farads(parse(next()?)?)) };
        let caps = ChannelCapacitances {
            c_x_tx: cap()?,
            c_x_rx: cap()?,
            c_gb_rx: cap()?,
            c_l: cap()?,
            c_b: cap()?,
            c_c: cap()?,
        };
        let ratio_full = parse(next()?)?;
        let ratio_simplified = parse(next()?)?;
        let ratio_distant = parse(next()?)?;
        let (ratio_oracle, oracle_error) = if options.oracle {
            (parse_opt(next()?)?, parse_opt(next()?)?)
        } else {
            (None, None)
        };
        if options.db {
            next()?;
            next()?;
        }
        let loss_db = parse(next()?)?;
        let flag_text = next()?;
        let flags = RegimeFlags::parse(flag_text)
            .ok_or_else(|| HbcError::Csv(format!("row {i}: unknown flags `{flag_text}`")))?;
        rows.push(SweepRow {
            value,
            x_tx,
            x_rx,
            separation_m,
            caps,
            ratio_full,
            ratio_simplified,
            ratio_distant,
            ratio_oracle,
            oracle_error,
            loss_db,
            flags,
        });
    }
    Ok(SweepResult { kind, options, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "
[tx]
radius_m = 0.03
x = 0.5
[rx]
radius_m = 0.03
thickness_m = 0.005
x = 0.5
fringe_f = 0.75e-12
c_l_f = 10e-12
[body]
c_b_f = 150.838e-12
[coupling]
k_f_per_m = 2.0e-12
[sweep]
kind = separation
min = 0.1
max = 1.0
steps = 10
";

    fn spec(text: &str, options: SweepOptions) -> SweepSpec {
        SweepSpec::from_config(&Config::parse(text).unwrap(), options).unwrap()
    }

    #[test]
    fn values_cover_range() {
        let s = spec(BASE, SweepOptions::default());
        let v = s.values();
        assert_eq!(v.len(), 10);
        assert_eq!(v[0], 0.1);
        assert_eq!(v[9], 1.0);
        assert!(v.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn separation_sweep_rows() {
        let r = run_sweep(&spec(BASE, SweepOptions { oracle: true, db: false })).unwrap();
        assert_eq!(r.rows.len(), 10);
        let cc = r.column(|row| row.caps.c_c.value());
        assert!(cc.windows(2).all(|w| w[1] < w[0]));
        for row in &r.rows {
            assert!(row.oracle_error.unwrap() < 0.05);
            assert_eq!(row.separation_m, Some(row.value));
        }
    }

    #[test]
    fn fixed_swept_parameter_rejected() {
        let text = BASE.replace("k_f_per_m = 2.0e-12", "k_f_per_m = 2.0e-12\nseparation_m = 0.2");
        let err = SweepSpec::from_config(&Config::parse(&text).unwrap(), SweepOptions::default()).unwrap_err();
        assert!(matches!(err, HbcError::InvalidSweep(_)));
    }

    #[test]
    fn invalid_ranges_rejected() {
        for (from, to) in [("steps = 10", "steps = 1"), ("min = 0.1", "min = 2.0")] {
            let text = BASE.replace(from, to);
            assert!(SweepSpec::from_config(&Config::parse(&text).unwrap(), SweepOptions::default()).is_err());
        }
        let text = BASE.replace("kind = separation", "kind = altitude");
        assert!(SweepSpec::from_config(&Config::parse(&text).unwrap(), SweepOptions::default()).is_err());
    }

    #[test]
    fn step_errors_carry_index() {
        // separation 0 at the first step
        let text = BASE.replace("min = 0.1", "min = 0.0");
        let err = run_sweep(&spec(&text, SweepOptions::default())).unwrap_err();
        assert!(matches!(err, HbcError::SweepStep { step: 0, .. }), "{err}");
    }

    #[test]
    fn csv_layout_and_round_trip() {
        for options in [
            SweepOptions::default(),
            SweepOptions { oracle: true, db: true },
        ] {
            let mut s = spec(BASE, options);
            s.steps = 2;
            let r = run_sweep(&s).unwrap();
            let mut out = Vec::new();
            emit_csv(&r, &mut out).unwrap();
            let text = String::from_utf8(out.clone()).unwrap();
            assert_eq!(text.lines().count(), 3);
            let back = parse_csv(out.as_slice()).unwrap();
            assert_eq!(back, r);
            let mut again = Vec::new();
            emit_csv(&back, &mut again).unwrap();
            assert_eq!(again, out);
        }
    }

    #[test]
    fn unwritable_destination() {
        let r = run_sweep(&spec(BASE, SweepOptions::default())).unwrap();
        assert!(matches!(emit_csv_to_path(&r, Path::new("")), Err(HbcError::Io { .. })));
    }

    #[test]
    fn position_sweep_derives_separation() {
        let text = BASE
            .replace("[tx]\nradius_m = 0.03\nx = 0.5", "[tx]\nradius_m = 0.03\nposition = 1.0")
            .replace("x = 0.5\nfringe_f", "fringe_f")
            .replace("kind = separation\nmin = 0.1\nmax = 1.0", "kind = rx_position\nmin = 0.0\nmax = 0.8\nsegment_length_m = 0.6")
            + "[tx_profile]\nsegment = arm\nanchors = 0:0.2, 1:0.6\n[rx_profile]\nsegment = arm\nanchors = 0:0.2, 1:0.6\n";
        let r = run_sweep(&spec(&text, SweepOptions::default())).unwrap();
        let first = &r.rows[0];
        assert!((first.separation_m.unwrap() - 0.6).abs() < 1e-12);
        assert!((first.x_rx.unwrap() - 0.2).abs() < 1e-12);
        assert_eq!(first.x_tx, Some(0.6));
    }
}
