//! gnuplot script emission for sweep tables.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::io::{read_results, IoError};

/// A `(model, policy)` curve in one CSV file.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Series {
    pub csv: PathBuf,
    pub model: String,
    pub policy: String,
}

/// Distinct series over all inputs, in input order then lexicographic.
pub fn collect_series(csvs: &[PathBuf]) -> Result<Vec<Series>, IoError> {
    let mut out = Vec::new();
    for path in csvs {
        let keys: BTreeSet<(String, String)> = read_results(path)?
            .into_iter()
            .map(|r| (r.model, r.policy))
            .collect();
        out.extend(keys.into_iter().map(|(model, policy)| Series {
            csv: path.clone(),
            model,
            policy,
        }));
    }
    Ok(out)
}

fn quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', "''"))
}

fn plot_lines(series: &[Series], x: &str) -> String {
    series
        .iter()
        .map(|s| {
            format!(
                "    {} using (column('{x}')):(strcol('model') eq {} && strcol('policy') eq {} ? column('error_rate') : NaN) with linespoints title {}",
                quote(&s.csv.display().to_string()),
                quote(&s.model),
                quote(&s.policy),
                quote(&format!("{} {}", s.model, s.policy)),
            )
        })
        .collect::<Vec<_>>()
        .join(", \\\n")
}

/// Two-panel script: error rate against `M`, then against efficiency.
pub fn plot_script(series: &[Series], image: &Path) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "set terminal pngcairo size 1400,560");
    let _ = writeln!(s, "set output {}", quote(&image.display().to_string()));
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set datafile columnheaders");
    let _ = writeln!(s, "set datafile missing NaN");
    let _ = writeln!(s, "set key bottom right");
    let _ = writeln!(s, "set grid");
    let _ = writeln!(s, "set yrange [0:1]");
    let _ = writeln!(s, "set multiplot layout 1,2");
    let _ = writeln!(s, "set xlabel 'M'");
    let _ = writeln!(s, "set ylabel 'error_rate'");
    let _ = writeln!(s, "plot \\\n{}", plot_lines(series, "M"));
    let _ = writeln!(s, "set xlabel 'efficiency'");
    let _ = writeln!(s, "plot \\\n{}", plot_lines(series, "efficiency"));
    let _ = writeln!(s, "unset multiplot");
    s
}

/// Reads the tables and writes the script to `out`; the image goes next to
/// it with a `.png` extension.
pub fn emit_plot_script(csvs: &[PathBuf], out: &Path) -> Result<(), IoError> {
    let series = collect_series(csvs)?;
    let script = plot_script(&series, &out.with_extension("png"));
    std::fs::write(out, script).map_err(|source| IoError::Io {
        path: out.to_path_buf(),
        source,
    })
}
