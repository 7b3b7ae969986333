//! Breakpoint files and CSV/JSON output.
//!
//! A breakpoint file holds one piecewise-linear function, either as CSV with
//! header `t,value` or as JSON `{"knots": [...], "values": [...]}`.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integral::IterationTrace;
use crate::measure::{Cumulative, PiecewiseLinear, SignedPath};
use crate::reflection::ReflectionResult;
use crate::scalar::Scalar;
use crate::SCHEMA_VERSION;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Breakpoints {
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
}

impl Breakpoints {
    pub fn into_function<T: Scalar>(self) -> Result<PiecewiseLinear<T>> {
        let conv = |v: Vec<f64>| v.into_iter().map(T::lit).collect::<Vec<_>>();
        PiecewiseLinear::new(conv(self.knots), conv(self.values))
    }

    pub fn into_cumulative<T: Scalar>(self) -> Result<Cumulative<T>> {
        Cumulative::from_function(self.into_function()?)
    }
}

#[derive(Debug, Deserialize)]
struct Row {
    t: f64,
    value: f64,
}

pub fn parse_breakpoints_csv(reader: impl Read) -> Result<Breakpoints> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["t", "value"] {
        return Err(Error::Parse(format!(
            "expected header `t,value`, found `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Breakpoints {
        knots: Vec::new(),
        values: Vec::new(),
    };
    for row in rdr.deserialize() {
        let row: Row = row?;
        out.knots.push(row.t);
        out.values.push(row.value);
    }
    Ok(out)
}

pub fn parse_breakpoints_json(text: &str) -> Result<Breakpoints> {
    Ok(serde_json::from_str(text)?)
}

/// Reads a breakpoint file; JSON when the content starts with `{`, CSV otherwise.
pub fn read_breakpoints(path: &Path) -> Result<Breakpoints> {
    let text = fs::read_to_string(path)?;
    if text.trim_start().starts_with('{') {
        parse_breakpoints_json(&text)
    } else {
        parse_breakpoints_csv(text.as_bytes())
    }
}

pub fn read_path<T: Scalar>(arrivals: &Path, services: &Path) -> Result<SignedPath<T>> {
    SignedPath::new(
        read_breakpoints(arrivals)?.into_cumulative()?,
        read_breakpoints(services)?.into_cumulative()?,
    )
}

pub fn write_function_csv<T: Scalar>(mut w: impl Write, f: &PiecewiseLinear<T>) -> Result<()> {
    writeln!(w, "t,value")?;
    for (t, v) in f.knots().iter().zip(f.values()) {
        writeln!(w, "{t},{v}")?;
    }
    Ok(())
}

pub fn write_reflection_csv<T: Scalar>(
    mut w: impl Write,
    r: &ReflectionResult<T>,
    x: &SignedPath<T>,
) -> Result<()> {
    writeln!(w, "t,qstar,regulator,sigma_star")?;
    let sigma = r.sigma_star_on_grid(x);
    let q = r.qstar();
    for ((t, qv), s) in q.knots().iter().zip(q.values()).zip(&sigma) {
        writeln!(w, "{t},{qv},{},{s}", r.regulator().at(*t))?;
    }
    Ok(())
}

/// Long-form trace: one row per iterate and grid point.
pub fn write_trace_csv<T: Scalar>(mut w: impl Write, trace: &IterationTrace<T>) -> Result<()> {
    writeln!(w, "k,t,{}", trace.label)?;
    for (i, iterate) in trace.iterates.iter().enumerate() {
        for (t, v) in trace.grid.points().iter().zip(iterate) {
            writeln!(w, "{},{t},{v}", i + 1)?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub spec: String,
    pub label: String,
    pub iterations: usize,
    pub gaps: Vec<f64>,
    pub converged: bool,
    pub tolerance: f64,
    /// Last ratio of successive gaps, when defined.
    pub last_gap_ratio: Option<f64>,
}

impl TraceSummary {
    pub fn new<T: Scalar>(trace: &IterationTrace<T>) -> Self {
        let f = |v: T| v.to_f64().unwrap_or(f64::NAN);
        Self {
            spec: SCHEMA_VERSION.to_string(),
            label: trace.label.to_string(),
            iterations: trace.steps(),
            gaps: trace.gaps.iter().copied().map(f).collect(),
            converged: trace.converged,
            tolerance: f(trace.tolerance),
            last_gap_ratio: trace.gap_ratios().last().copied().map(f),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_and_json_parse_identically() {
        let csv = "t,value\n0,0\n1,2\n2,2\n";
        let json = r#"{"knots":[0,1,2],"values":[0,2,2]}"#;
        let a = parse_breakpoints_csv(csv.as_bytes()).unwrap();
        let b = parse_breakpoints_json(json).unwrap();
        assert_eq!(a, b);
        let f: Cumulative<f64> = a.into_cumulative().unwrap();
        assert_eq!(f.at(1.5), 2.0);
    }

    #[test]
    fn wrong_header_is_a_parse_error() {
        let err = parse_breakpoints_csv("time,v\n0,0\n1,1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse(_)));
        let err = parse_breakpoints_csv("t,value\n0,zero\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse(_)));
    }

    #[test]
    fn decreasing_cumulative_is_rejected_after_parsing() {
        let b = parse_breakpoints_json(r#"{"knots":[0,1],"values":[0,-1]}"#).unwrap();
        assert!(matches!(
            b.into_cumulative::<f64>(),
            Err(Error::DecreasingValues { index: 1 })
        ));
    }
}
