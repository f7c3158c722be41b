//! Strict CSV trace ingestion and emission.
//!
//! Format: header `t,a_kw,h_kw,p_usd_per_kwh`, then one row per slot with
//! t counting 1, 2, 3, ... Demands must be nonnegative and prices inside
//! the configured band. Row numbers in errors refer to data rows (the t
//! column); 0 marks the header.

use std::path::{Path, PathBuf};

use thiserror::Error;

use gridsched::{InputSlot, SystemParams, Trace};

pub const TRACE_HEADER: &str = "t,a_kw,h_kw,p_usd_per_kwh";

#[derive(Debug, Error)]
pub enum TraceIoError {
    #[error("cannot access {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("trace row {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("trace row {line}: bad {field}: {message}")]
    Validation { field: &'static str, line: usize, message: String },
}

fn parse_number(raw: &str, field: &'static str, line: usize) -> Result<f64, TraceIoError> {
    let value: f64 = raw.trim().parse().map_err(|_| TraceIoError::Parse {
        line,
        message: format!("{field} is not a number: {raw:?}"),
    })?;
    if !value.is_finite() {
        return Err(TraceIoError::Validation {
            field,
            line,
            message: "must be finite".to_string(),
        });
    }
    Ok(value)
}

pub fn parse_trace(text: &str, params: &SystemParams) -> Result<Trace, TraceIoError> {
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header.trim_end() == TRACE_HEADER => {}
        Some(header) => {
            return Err(TraceIoError::Parse {
                line: 0,
                message: format!("bad header {:?}; expected {TRACE_HEADER:?}", header.trim_end()),
            })
        }
        None => {
            return Err(TraceIoError::Parse { line: 0, message: "empty trace file".to_string() })
        }
    }
    let mut slots = Vec::new();
    for (i, line) in lines.enumerate() {
        let row = i + 1;
        let fields: Vec<&str> = line.trim_end().split(',').collect();
        if fields.len() != 4 {
            return Err(TraceIoError::Parse {
                line: row,
                message: format!("expected 4 columns, got {}", fields.len()),
            });
        }
        let t: usize = fields[0].trim().parse().map_err(|_| TraceIoError::Parse {
            line: row,
            message: format!("t is not an integer: {:?}", fields[0]),
        })?;
        if t != row {
            return Err(TraceIoError::Validation {
                field: "t",
                line: row,
                message: format!("expected {row}, got {t}; slots count 1, 2, 3, ..."),
            });
        }
        let demand = parse_number(fields[1], "a_kw", row)?;
        if demand < 0.0 {
            return Err(TraceIoError::Validation {
                field: "a_kw",
                line: row,
                message: format!("must be >= 0, got {demand}"),
            });
        }
        let heat = parse_number(fields[2], "h_kw", row)?;
        if heat < 0.0 {
            return Err(TraceIoError::Validation {
                field: "h_kw",
                line: row,
                message: format!("must be >= 0, got {heat}"),
            });
        }
        let price = parse_number(fields[3], "p_usd_per_kwh", row)?;
        if price < params.price_min || price > params.price_max {
            return Err(TraceIoError::Validation {
                field: "p_usd_per_kwh",
                line: row,
                message: format!(
                    "must lie in [{}, {}], got {price}",
                    params.price_min, params.price_max
                ),
            });
        }
        slots.push(InputSlot::new(demand, heat, price));
    }
    Ok(Trace::hourly(slots))
}

pub fn load_trace(path: &Path, params: &SystemParams) -> Result<Trace, TraceIoError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| TraceIoError::Io { path: path.to_path_buf(), source })?;
    parse_trace(&text, params)
}

pub fn trace_to_csv(trace: &Trace) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for (i, slot) in trace.slots.iter().enumerate() {
        out.push_str(&format!("{},{},{},{}\n", i + 1, slot.demand, slot.heat, slot.price));
    }
    out
}

pub fn write_trace(trace: &Trace, path: &Path) -> Result<(), TraceIoError> {
    std::fs::write(path, trace_to_csv(trace))
        .map_err(|source| TraceIoError::Io { path: path.to_path_buf(), source })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> SystemParams {
        SystemParams {
            startup_cost: 100.0,
            running_cost: 10.0,
            output_cost: 1.0,
            capacity: 100.0,
            heat_efficiency: 1.0,
            gas_price: 0.5,
            price_min: 0.0,
            price_max: 2.0,
        }
    }

    #[test]
    fn parses_a_week_of_slots() {
        let mut text = String::from("t,a_kw,h_kw,p_usd_per_kwh\n");
        for t in 1..=168 {
            text.push_str(&format!("{t},50,30,1.5\n"));
        }
        let trace = parse_trace(&text, &params()).unwrap();
        assert_eq!(trace.len(), 168);
        assert_eq!(trace.slots[167], InputSlot::new(50.0, 30.0, 1.5));
    }

    #[test]
    fn missing_column_is_a_parse_error_with_the_row() {
        let text = "t,a_kw,h_kw,p_usd_per_kwh\n1,50,30,1.5\n2,50,30\n";
        match parse_trace(text, &params()) {
            Err(TraceIoError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn negative_demand_is_a_validation_error_naming_field_and_row() {
        let text = "t,a_kw,h_kw,p_usd_per_kwh\n1,50,30,1.5\n2,50,30,1.5\n3,-5,30,1.5\n";
        match parse_trace(text, &params()) {
            Err(TraceIoError::Validation { field, line, .. }) => {
                assert_eq!(field, "a_kw");
                assert_eq!(line, 3);
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn out_of_band_price_and_bad_indices_are_rejected() {
        let text = "t,a_kw,h_kw,p_usd_per_kwh\n1,50,30,2.5\n";
        assert!(matches!(
            parse_trace(text, &params()),
            Err(TraceIoError::Validation { field: "p_usd_per_kwh", line: 1, .. })
        ));
        let text = "t,a_kw,h_kw,p_usd_per_kwh\n1,50,30,1\n3,50,30,1\n";
        assert!(matches!(
            parse_trace(text, &params()),
            Err(TraceIoError::Validation { field: "t", line: 2, .. })
        ));
        let text = "time,a,h,p\n1,50,30,1\n";
        assert!(matches!(parse_trace(text, &params()), Err(TraceIoError::Parse { line: 0, .. })));
        let text = "t,a_kw,h_kw,p_usd_per_kwh\n1,50,nan,1\n";
        assert!(matches!(
            parse_trace(text, &params()),
            Err(TraceIoError::Validation { field: "h_kw", line: 1, .. })
        ));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let trace = Trace::hourly(vec![
            InputSlot::new(12.340000000000001, 7.0, 0.1),
            InputSlot::new(0.0, 99.25, 1.9999),
            InputSlot::new(33.3, 0.017, 0.0),
        ]);
        let text = trace_to_csv(&trace);
        let back = parse_trace(&text, &params()).unwrap();
        assert_eq!(back, trace);
    }
}
