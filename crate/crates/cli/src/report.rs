//! Trace CSV and summary JSON writers.
//!
//! Both traces share the column set
//! `k_or_t, norm, phi, rq, ratio_or_speed, slope, residual`:
//!
//! | column           | inverse iteration              | flow                          |
//! |------------------|--------------------------------|-------------------------------|
//! | `k_or_t`         | step `k`                       | time `t_n`                    |
//! | `norm`           | `‖u_k‖`                        | `‖v_n‖`                       |
//! | `phi`            | `Φ(u_k)`                       | `Φ(v_n)`                      |
//! | `rq`             | `pΦ(u_k)/‖u_k‖^p`              | `pΦ(v_n)/‖v_n‖^p`             |
//! | `ratio_or_speed` | `‖u_{k−1}‖/‖u_k‖`              | `‖v_n − v_{n−1}‖/τ`           |
//! | `slope`          | `‖∇Φ(u_k)‖_*`                  | `‖∇Φ(v_n)‖_*`                 |
//! | `residual`       | inner-solve residual           | energy-identity residual      |
//!
//! Floats are written with 17 significant digits; undefined entries are
//! `NaN` in CSV and `null` in JSON.

use std::io::{self, Write};
use std::path::Path;

use nlrq::flow::local_slope;
use nlrq::{FlowTrace, IterationTrace, ProblemInstance};
use serde::Serialize;

pub const CSV_COLUMNS: [&str; 7] = ["k_or_t", "norm", "phi", "rq", "ratio_or_speed", "slope", "residual"];

pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

fn write_csv(path: &Path, rows: impl Iterator<Item = [String; 7]>) -> io::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?;
    w.write_record(CSV_COLUMNS)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()
}

pub fn write_iteration_csv(path: &Path, problem: &ProblemInstance, trace: &IterationTrace) -> io::Result<()> {
    let pm1 = problem.exponent().p() - 1.0;
    let rows = trace.rows.iter().enumerate().map(|(k, r)| {
        // ∇Φ is (p−1)-homogeneous; evaluate on the normalized direction
        let slope = local_slope(problem, &trace.directions[k]).map_or(f64::NAN, |s| s * (pm1 * trace.log_scales[k]).exp());
        [
            r.k.to_string(),
            fmt_float(r.norm),
            fmt_float(r.phi),
            fmt_float(r.rq),
            fmt_float(r.ratio),
            fmt_float(slope),
            fmt_float(r.residual),
        ]
    });
    write_csv(path, rows)
}

pub fn write_flow_csv(path: &Path, trace: &FlowTrace) -> io::Result<()> {
    let rows = trace.rows.iter().map(|r| {
        [
            fmt_float(r.t),
            fmt_float(r.norm),
            fmt_float(r.phi),
            fmt_float(r.rq),
            fmt_float(r.speed),
            fmt_float(r.slope),
            fmt_float(r.energy_residual),
        ]
    });
    write_csv(path, rows)
}

/// Compact JSON with 17 significant digits per float. Non-finite floats
/// become `null` before reaching the formatter.
struct Digits17;

impl serde_json::ser::Formatter for Digits17 {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Digits17);
    value.serialize(&mut ser).expect("in-memory serialization");
    buf.push(b'\n');
    String::from_utf8(buf).expect("JSON is UTF-8")
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    std::fs::write(path, to_json(value))
}
