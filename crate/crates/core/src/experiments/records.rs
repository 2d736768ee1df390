use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::config::OutputFormat;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "experiment,params,metric,value,stderr,seed,wall_time";

/// One output row. `stderr` holds a standard error or a residual where the
/// metric has one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub experiment: String,
    pub params: String,
    pub metric: String,
    pub value: f64,
    pub stderr: Option<f64>,
    pub seed: u64,
    pub wall_time: f64,
}

impl ResultRecord {
    fn numeric_fields(&self) -> String {
        let stderr = self.stderr.map(|s| s.to_string()).unwrap_or_default();
        format!("{},{},{},{},{},{}", self.experiment, quote(&self.params), self.metric, self.value, stderr, self.seed)
    }

    fn csv_row(&self) -> String {
        format!("{},{}", self.numeric_fields(), self.wall_time)
    }
}

fn quote(s: &str) -> String {
    if s.contains(',') || s.contains('"') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn write_records(records: &[ResultRecord], format: OutputFormat, mut out: impl Write) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            writeln!(out, "{CSV_HEADER}")?;
            for r in records {
                writeln!(out, "{}", r.csv_row())?;
            }
        }
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut out, records).map_err(|e| Error::Parse(e.to_string()))?;
            writeln!(out)?;
        }
    }
    Ok(())
}

/// The CSV rendering without the `wall_time` column; equal digests mean
/// byte-identical numeric output.
pub fn numeric_digest(records: &[ResultRecord]) -> String {
    let mut s = String::new();
    for r in records {
        let _ = writeln!(s, "{}", r.numeric_fields());
    }
    s
}

/// Parses a CSV file written by [`write_records`].
pub fn read_records_csv(text: &str) -> Result<Vec<ResultRecord>> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::Parse("missing result header".into()));
    }
    lines.filter(|l| !l.is_empty()).map(parse_row).collect()
}

fn parse_row(line: &str) -> Result<ResultRecord> {
    let mut fields = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '"' if quoted && chars.peek() == Some(&'"') => {
                cur.push('"');
                chars.next();
            }
            '"' => quoted = !quoted,
            ',' if !quoted => fields.push(std::mem::take(&mut cur)),
            c => cur.push(c),
        }
    }
    fields.push(cur);
    if fields.len() != 7 {
        return Err(Error::Parse(format!("expected 7 fields, got {}: {line}", fields.len())));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("`{s}`: {e}")));
    Ok(ResultRecord {
        experiment: fields[0].clone(),
        params: fields[1].clone(),
        metric: fields[2].clone(),
        value: num(&fields[3])?,
        stderr: if fields[4].is_empty() { None } else { Some(num(&fields[4])?) },
        seed: fields[5].parse().map_err(|e| Error::Parse(format!("seed: {e}")))?,
        wall_time: num(&fields[6])?,
    })
}

/// Collects records for one experiment, stamping each with the time elapsed
/// since the recorder was created.
pub(crate) struct Recorder {
    experiment: String,
    start: std::time::Instant,
    pub records: Vec<ResultRecord>,
}

impl Recorder {
    pub fn new(experiment: &str) -> Self {
        Recorder { experiment: experiment.to_string(), start: std::time::Instant::now(), records: Vec::new() }
    }

    pub fn push(&mut self, params: &str, metric: &str, value: f64, stderr: Option<f64>, seed: u64) {
        self.records.push(ResultRecord {
            experiment: self.experiment.clone(),
            params: params.to_string(),
            metric: metric.to_string(),
            value,
            stderr,
            seed,
            wall_time: self.start.elapsed().as_secs_f64(),
        });
    }
}
