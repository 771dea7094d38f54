//! Sweep records and their CSV/JSON serialization.

use std::io::{self, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::protocols::ProtocolPoint;
use crate::runner::config::{Output, OutputFormat};

pub const COLUMNS: [&str; 16] = [
    "model",
    "g_or_lambda",
    "delta",
    "eta",
    "time",
    "n",
    "mean",
    "variance",
    "chi",
    "inv_var",
    "qfi_analytic",
    "qfi_exact",
    "cutoff",
    "converged",
    "ratio",
    "dephasing",
];

/// One grid point of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRecord {
    pub model: String,
    pub g_or_lambda: f64,
    pub delta: f64,
    pub eta: Option<f64>,
    pub time: f64,
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub chi: f64,
    pub inv_var: f64,
    pub qfi_analytic: Option<f64>,
    pub qfi_exact: Option<f64>,
    pub cutoff: usize,
    pub converged: bool,
    /// `inv_var` over its closed-form prediction, where one exists.
    pub ratio: Option<f64>,
    /// Dephasing rate of noisy runs.
    pub dephasing: Option<f64>,
}

impl SweepRecord {
    pub fn from_point(p: &ProtocolPoint) -> Self {
        Self {
            model: p.model.name().to_string(),
            g_or_lambda: p.param,
            delta: p.delta,
            eta: p.eta,
            time: p.time,
            n: p.n,
            mean: p.mean,
            variance: p.variance,
            chi: p.chi,
            inv_var: p.inverted_variance,
            qfi_analytic: None,
            qfi_exact: p.qfi_reference,
            cutoff: p.cutoff,
            converged: p.converged,
            ratio: p.closed_form.map(|c| p.inverted_variance / c),
            dephasing: None,
        }
    }

    fn fields(&self) -> [String; 16] {
        [
            self.model.clone(),
            float(self.g_or_lambda),
            float(self.delta),
            opt(self.eta),
            float(self.time),
            self.n.to_string(),
            float(self.mean),
            float(self.variance),
            float(self.chi),
            float(self.inv_var),
            opt(self.qfi_analytic),
            opt(self.qfi_exact),
            self.cutoff.to_string(),
            self.converged.to_string(),
            opt(self.ratio),
            opt(self.dephasing),
        ]
    }

    fn from_fields(row: &csv::StringRecord) -> std::result::Result<Self, String> {
        if row.len() != COLUMNS.len() {
            return Err(format!("expected {} fields, got {}", COLUMNS.len(), row.len()));
        }
        let f = |i: usize| parse_float(&row[i]).map_err(|e| format!("{}: {e}", COLUMNS[i]));
        let o = |i: usize| parse_opt(&row[i]).map_err(|e| format!("{}: {e}", COLUMNS[i]));
        let u = |i: usize| row[i].parse::<usize>().map_err(|e| format!("{}: {e}", COLUMNS[i]));
        Ok(Self {
            model: row[0].to_string(),
            g_or_lambda: f(1)?,
            delta: f(2)?,
            eta: o(3)?,
            time: f(4)?,
            n: u(5)?,
            mean: f(6)?,
            variance: f(7)?,
            chi: f(8)?,
            inv_var: f(9)?,
            qfi_analytic: o(10)?,
            qfi_exact: o(11)?,
            cutoff: u(12)?,
            converged: row[13].parse::<bool>().map_err(|e| format!("converged: {e}"))?,
            ratio: o(14)?,
            dephasing: o(15)?,
        })
    }
}

/// 17 significant digits; round-trips exactly through `parse::<f64>`.
fn float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

fn parse_float(s: &str) -> std::result::Result<f64, String> {
    s.parse::<f64>().map_err(|e| format!("'{s}': {e}"))
}

fn parse_opt(s: &str) -> std::result::Result<Option<f64>, String> {
    if s.is_empty() {
        Ok(None)
    } else {
        parse_float(s).map(Some)
    }
}

fn json_value(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_finite() => float(v),
        _ => "null".to_string(),
    }
}

pub fn write_csv<W: Write>(records: &[SweepRecord], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS)?;
    for r in records {
        w.write_record(r.fields())?;
    }
    w.flush()?;
    Ok(())
}

/// One JSON object per record, one record per line.
pub fn write_json<W: Write>(records: &[SweepRecord], mut out: W) -> io::Result<()> {
    if records.is_empty() {
        return writeln!(out, "[]");
    }
    writeln!(out, "[")?;
    for (i, r) in records.iter().enumerate() {
        let values = [
            format!("\"{}\"", r.model.replace('\\', "\\\\").replace('"', "\\\"")),
            json_value(Some(r.g_or_lambda)),
            json_value(Some(r.delta)),
            json_value(r.eta),
            json_value(Some(r.time)),
            r.n.to_string(),
            json_value(Some(r.mean)),
            json_value(Some(r.variance)),
            json_value(Some(r.chi)),
            json_value(Some(r.inv_var)),
            json_value(r.qfi_analytic),
            json_value(r.qfi_exact),
            r.cutoff.to_string(),
            r.converged.to_string(),
            json_value(r.ratio),
            json_value(r.dephasing),
        ];
        let body: Vec<String> = COLUMNS.iter().zip(values).map(|(k, v)| format!("\"{k}\":{v}")).collect();
        let sep = if i + 1 < records.len() { "," } else { "" };
        writeln!(out, "{{{}}}{sep}", body.join(","))?;
    }
    writeln!(out, "]")
}

pub fn write_records<W: Write>(records: &[SweepRecord], format: OutputFormat, out: W) -> Result<()> {
    let io_err = |source| Error::Io { path: "<output>".into(), source };
    match format {
        OutputFormat::Csv => write_csv(records, out).map_err(|source| Error::Csv { path: "<output>".into(), source }),
        OutputFormat::Json => write_json(records, out).map_err(io_err),
    }
}

/// Writes records to a file or standard output.
pub fn emit(records: &[SweepRecord], format: OutputFormat, output: &Output) -> Result<()> {
    match output {
        Output::Stdout => write_records(records, format, io::stdout().lock()),
        Output::File(path) => {
            let file = std::fs::File::create(path).map_err(|source| Error::Io { path: path.clone(), source })?;
            let w = io::BufWriter::new(file);
            match format {
                OutputFormat::Csv => write_csv(records, w).map_err(|source| Error::Csv { path: path.clone(), source }),
                OutputFormat::Json => write_json(records, w).map_err(|source| Error::Io { path: path.clone(), source }),
            }
        }
    }
}

pub fn read_csv<R: Read>(input: R) -> std::result::Result<Vec<SweepRecord>, String> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(|e| e.to_string())?.clone();
    if header.iter().ne(COLUMNS.iter().copied()) {
        return Err(format!("unexpected header {header:?}"));
    }
    let mut out = Vec::new();
    for (i, row) in r.records().enumerate() {
        let row = row.map_err(|e| e.to_string())?;
        out.push(SweepRecord::from_fields(&row).map_err(|e| format!("row {}: {e}", i + 1))?);
    }
    Ok(out)
}

pub fn read_csv_path(path: &Path) -> Result<Vec<SweepRecord>> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    read_csv(file).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}
