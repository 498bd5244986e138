//! CSV trace emission and replay.
//!
//! One row per inner iteration, ordered by (sweep, update). Every numeric
//! cell is a decimal string in the scalar's canonical form, so exact-mode
//! traces are loss-free: summing the delta column per coordinate
//! reconstructs the final point from the initial one.

use std::collections::HashMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::observe::{StepEvent, StepObserver};
use crate::scalar::Scalar;

pub const TRACE_HEADER: [&str; 9] = [
    "sweep",
    "update",
    "block",
    "coord",
    "delta",
    "eta_running",
    "objective",
    "energy_before",
    "energy_after",
];

/// One parsed trace row; numeric fields stay textual.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRow {
    pub sweep: u64,
    pub update: u64,
    pub block: String,
    pub coord: String,
    pub delta: String,
    pub eta_running: String,
    pub objective: String,
    pub energy_before: String,
    pub energy_after: String,
}

/// Streams step events into CSV.
pub struct CsvTracer<W: Write> {
    writer: csv::Writer<W>,
    error: Option<csv::Error>,
}

impl<W: Write> CsvTracer<W> {
    pub fn new(sink: W) -> Result<Self> {
        let mut writer = csv::Writer::from_writer(sink);
        writer
            .write_record(TRACE_HEADER)
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
        Ok(CsvTracer {
            writer,
            error: None,
        })
    }

    /// Flushes and surfaces any write error seen along the way.
    pub fn finish(mut self) -> Result<()> {
        if let Some(e) = self.error.take() {
            return Err(Error::Io(std::io::Error::other(e)));
        }
        self.writer
            .flush()
            .map_err(Error::Io)
    }
}

impl<W: Write, T: Scalar> StepObserver<T> for CsvTracer<W> {
    fn on_step(&mut self, event: &StepEvent<T>) {
        if self.error.is_some() {
            return;
        }
        let (eb, ea) = match &event.energy {
            Some((b, a)) => (b.decimal_string(), a.decimal_string()),
            None => (String::new(), String::new()),
        };
        let row = [
            event.sweep.to_string(),
            event.update.to_string(),
            event.block.to_string(),
            event.coord.to_string(),
            event.delta.decimal_string(),
            event.eta.decimal_string(),
            event.objective.decimal_string(),
            eb,
            ea,
        ];
        if let Err(e) = self.writer.write_record(row) {
            self.error = Some(e);
        }
    }
}

/// Reads a trace produced by [`CsvTracer`].
pub fn read_trace(text: &str) -> Result<Vec<TraceRow>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Io(std::io::Error::other(e)))?;
        let field = |idx: usize| record.get(idx).unwrap_or("").to_string();
        let int = |idx: usize| -> Result<u64> {
            record
                .get(idx)
                .unwrap_or("")
                .parse()
                .map_err(|_| Error::Io(std::io::Error::other(format!("bad integer in column {idx}"))))
        };
        rows.push(TraceRow {
            sweep: int(0)?,
            update: int(1)?,
            block: field(2),
            coord: field(3),
            delta: field(4),
            eta_running: field(5),
            objective: field(6),
            energy_before: field(7),
            energy_after: field(8),
        });
    }
    Ok(rows)
}

/// Net change of every coordinate: the per-coordinate sum of the delta
/// column. Adding these to the initial point reproduces the final one.
pub fn replay_deltas<T: Scalar>(rows: &[TraceRow]) -> Result<HashMap<String, T>> {
    let mut out: HashMap<String, T> = HashMap::new();
    for row in rows {
        let d = T::parse_decimal(&row.delta)?;
        let entry = out.entry(row.coord.clone()).or_insert_with(T::zero);
        *entry = entry.clone() + d;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;
    use crate::solver::{run, SolveConfig};

    #[test]
    fn trace_round_trip_replays_exactly() {
        let inst = crate::solver::tests::two_var_example();
        let mut config = SolveConfig::new(Rational::from_ratio(1, 1_000_000));
        config.energy_ledger = true;
        let mut buf = Vec::new();
        {
            let mut tracer = CsvTracer::new(&mut buf).unwrap();
            let x0 = vec![Rational::from_int(1), Rational::from_int(1)];
            let report = run(&inst, &x0, &config, Some(&mut tracer)).unwrap();
            tracer.finish().unwrap();

            let text = String::from_utf8(buf.clone()).unwrap();
            let rows = read_trace(&text).unwrap();
            assert_eq!(rows.len() as u64, report.updates);
            assert!(!rows[0].energy_before.is_empty());
            let sums: HashMap<String, Rational> = replay_deltas(&rows).unwrap();
            for (j, x0j) in x0.iter().enumerate() {
                let total = sums.get(&j.to_string()).cloned().unwrap_or_else(
                    num_traits::Zero::zero,
                );
                assert_eq!(x0j.clone() + total, report.x[j], "coordinate {j}");
            }
        }
    }

    #[test]
    fn rows_are_ordered_and_objective_monotone() {
        let inst = crate::solver::tests::divergence_example();
        let mut config = SolveConfig::new(Rational::from_int(0));
        config.max_sweeps = 4;
        let mut buf = Vec::new();
        let mut tracer = CsvTracer::new(&mut buf).unwrap();
        run(
            &inst,
            &[Rational::from_int(0), Rational::from_int(0), Rational::from_int(0)],
            &config,
            Some(&mut tracer),
        )
        .unwrap();
        tracer.finish().unwrap();
        let rows = read_trace(&String::from_utf8(buf).unwrap()).unwrap();
        let mut last_key = (0u64, 0u64);
        let mut last_obj: Option<Rational> = None;
        for row in &rows {
            let key = (row.sweep, row.update);
            assert!(key > last_key);
            last_key = key;
            let obj = Rational::parse_decimal(&row.objective).unwrap();
            if let Some(prev) = last_obj {
                assert!(obj <= prev);
            }
            last_obj = Some(obj);
        }
    }
}
