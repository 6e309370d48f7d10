//! Network files and result tables.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use samn_core::codec::{self, CodecError};
use samn_core::{AssociativeMemory, Network};
use thiserror::Error;

use crate::experiments::ExperimentResult;

pub const CSV_HEADER: [&str; 16] = [
    "model",
    "policy",
    "n",
    "c",
    "l",
    "M",
    "alpha",
    "rho",
    "trials",
    "error_rate",
    "stderr",
    "mean_iters",
    "cycle_rate",
    "notfound_rate",
    "efficiency",
    "seed",
];

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Codec { path: PathBuf, source: CodecError },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{}: {msg}", path.display())]
    Format { path: PathBuf, msg: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> IoError + '_ {
    move |source| IoError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

pub fn save_network(path: &Path, network: &Network, include_stored: bool) -> Result<(), IoError> {
    let bytes = codec::encode(network, include_stored && network.stored_set().is_some());
    fs::write(path, bytes).map_err(io_err(path))
}

pub fn load_network(path: &Path) -> Result<Network, IoError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    codec::decode(&bytes).map_err(|source| IoError::Codec {
        path: path.to_path_buf(),
        source,
    })
}

/// `%.9g`: nine significant digits, trailing zeros dropped, exponent form
/// outside `1e-4 <= |x| < 1e9`.
pub fn format_g9(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..9).contains(&exp) {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mantissa}e{sign}{:02}", exp.abs());
    }
    strip_zeros(&format!("{x:.*}", (8 - exp) as usize)).to_string()
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// One CSV line.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub model: String,
    pub policy: String,
    pub n: u64,
    pub c: f64,
    pub l: u64,
    pub m: u64,
    pub alpha: f64,
    pub rho: f64,
    pub trials: u64,
    pub error_rate: f64,
    pub stderr: f64,
    pub mean_iters: f64,
    pub cycle_rate: f64,
    pub notfound_rate: f64,
    pub efficiency: f64,
    pub seed: u64,
}

impl ResultRow {
    fn fields(&self) -> [String; 16] {
        [
            self.model.clone(),
            self.policy.clone(),
            self.n.to_string(),
            format_g9(self.c),
            self.l.to_string(),
            self.m.to_string(),
            format_g9(self.alpha),
            format_g9(self.rho),
            self.trials.to_string(),
            format_g9(self.error_rate),
            format_g9(self.stderr),
            format_g9(self.mean_iters),
            format_g9(self.cycle_rate),
            format_g9(self.notfound_rate),
            format_g9(self.efficiency),
            self.seed.to_string(),
        ]
    }

    fn parse(record: &csv::StringRecord) -> Result<Self, String> {
        if record.len() != CSV_HEADER.len() {
            return Err(format!(
                "expected {} fields, found {}",
                CSV_HEADER.len(),
                record.len()
            ));
        }
        let f = |k: usize| -> Result<f64, String> {
            record[k]
                .parse()
                .map_err(|_| format!("{}: bad number {:?}", CSV_HEADER[k], &record[k]))
        };
        let u = |k: usize| -> Result<u64, String> {
            record[k]
                .parse()
                .map_err(|_| format!("{}: bad integer {:?}", CSV_HEADER[k], &record[k]))
        };
        Ok(ResultRow {
            model: record[0].to_string(),
            policy: record[1].to_string(),
            n: u(2)?,
            c: f(3)?,
            l: u(4)?,
            m: u(5)?,
            alpha: f(6)?,
            rho: f(7)?,
            trials: u(8)?,
            error_rate: f(9)?,
            stderr: f(10)?,
            mean_iters: f(11)?,
            cycle_rate: f(12)?,
            notfound_rate: f(13)?,
            efficiency: f(14)?,
            seed: u(15)?,
        })
    }
}

/// Rows of `result`, sorted by `M`.
pub fn result_rows(result: &ExperimentResult) -> Vec<ResultRow> {
    let setup = &result.spec.setup;
    let l = setup
        .space
        .layout()
        .map_or(0, |layout| layout.per_cluster() as u64);
    let mut rows: Vec<ResultRow> = result
        .points
        .iter()
        .map(|p| ResultRow {
            model: setup.model.name().into(),
            policy: result.spec.policy.to_string(),
            n: setup.space.n() as u64,
            c: setup.sparsity(),
            l,
            m: p.m,
            alpha: p.alpha,
            rho: p.rho(),
            trials: p.trials(),
            error_rate: p.error_rate(),
            stderr: p.stderr(),
            mean_iters: p.mean_iters(),
            cycle_rate: p.cycle_rate(),
            notfound_rate: p.notfound_rate(),
            efficiency: p.efficiency,
            seed: result.spec.run.seed,
        })
        .collect();
    rows.sort_by_key(|r| r.m);
    rows
}

/// Writes `rows` under a `# config` comment. With `append`, an existing
/// non-empty file keeps its header and the rows are added after it.
pub fn write_rows(
    path: &Path,
    config: &str,
    rows: &[ResultRow],
    append: bool,
) -> Result<(), IoError> {
    let existing = append && path.exists() && fs::metadata(path).map_err(io_err(path))?.len() > 0;
    if existing {
        check_header(path)?;
    }
    let file = OpenOptions::new()
        .create(true)
        .write(true)
        .append(existing)
        .truncate(!existing)
        .open(path)
        .map_err(io_err(path))?;
    write_table(std::io::BufWriter::new(file), config, rows, !existing).map_err(csv_err(path))
}

/// Writes the comment lines, optionally the header, and `rows` sorted by `M`.
pub fn write_table<W: Write>(
    mut out: W,
    config: &str,
    rows: &[ResultRow],
    header: bool,
) -> Result<(), csv::Error> {
    for line in config.lines() {
        writeln!(out, "# {line}")?;
    }
    let mut out = csv::WriterBuilder::new().from_writer(out);
    if header {
        out.write_record(CSV_HEADER)?;
    }
    let mut sorted: Vec<&ResultRow> = rows.iter().collect();
    sorted.sort_by_key(|r| r.m);
    for row in sorted {
        out.write_record(row.fields())?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_results(
    result: &ExperimentResult,
    config: &str,
    path: &Path,
    append: bool,
) -> Result<(), IoError> {
    write_rows(path, config, &result_rows(result), append)
}

fn check_header(path: &Path) -> Result<(), IoError> {
    let reader = BufReader::new(File::open(path).map_err(io_err(path))?);
    for line in reader.lines() {
        let line = line.map_err(io_err(path))?;
        if line.starts_with('#') {
            continue;
        }
        if line.trim_end() != CSV_HEADER.join(",") {
            return Err(IoError::Format {
                path: path.to_path_buf(),
                msg: "existing file has a different header".into(),
            });
        }
        return Ok(());
    }
    Err(IoError::Format {
        path: path.to_path_buf(),
        msg: "existing file has no header".into(),
    })
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>, IoError> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(csv_err(path))?;
    let header = reader.headers().map_err(csv_err(path))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(IoError::Format {
            path: path.to_path_buf(),
            msg: "unexpected header".into(),
        });
    }
    reader
        .records()
        .enumerate()
        .map(|(k, rec)| {
            let rec = rec.map_err(csv_err(path))?;
            ResultRow::parse(&rec).map_err(|msg| IoError::Format {
                path: path.to_path_buf(),
                msg: format!("row {}: {msg}", k + 1),
            })
        })
        .collect()
}
