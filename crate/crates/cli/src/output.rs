//! CSV and text emission. Every writer renders to a `String` first so callers
//! can compare bytes or write atomically; floats use 17 significant digits
//! and infinities are spelled `inf` / `-inf`.

use std::fmt::Write as _;
use std::path::Path;

use fbm_stm_core::fbm::IncrementBlock;
use fbm_stm_core::lab::{MeanSquareSeries, StabilityVerdict};
use fbm_stm_core::stm::Trajectory;
use fbm_stm_core::theory::TheoremVerdict;

use crate::error::{CliError, CliResult};

pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.16e}")
    }
}

/// Builds a CSV document with LF terminators.
pub struct CsvDoc {
    w: csv::Writer<Vec<u8>>,
}

impl CsvDoc {
    pub fn new(header: &[&str]) -> Self {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(header).expect("in-memory write");
        Self { w }
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.w.write_record(fields).expect("in-memory write");
    }

    pub fn finish(self) -> String {
        let bytes = self.w.into_inner().expect("in-memory flush");
        String::from_utf8(bytes).expect("utf-8 fields")
    }
}

pub fn increments_csv(block: &IncrementBlock) -> String {
    let mut doc = CsvDoc::new(&["step", "t", "value"]);
    for (k, v) in block.values.iter().enumerate() {
        let step = k + 1;
        doc.row([step.to_string(), fmt_f64(block.grid.t(step)), fmt_f64(*v)]);
    }
    doc.finish()
}

pub fn path_csv(block: &IncrementBlock) -> String {
    let mut doc = CsvDoc::new(&["step", "t", "value"]);
    for (k, v) in block.cumulative_path().iter().enumerate() {
        doc.row([k.to_string(), fmt_f64(block.grid.t(k)), fmt_f64(*v)]);
    }
    doc.finish()
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut doc = CsvDoc::new(&["step", "t", "sign", "log_abs", "value_or_inf"]);
    for (k, s) in traj.states.iter().enumerate() {
        doc.row([
            k.to_string(),
            fmt_f64(traj.scheme.t(k)),
            s.sign.to_string(),
            fmt_f64(s.log_abs),
            fmt_f64(s.value()),
        ]);
    }
    doc.finish()
}

pub fn mean_square_csv(series: &MeanSquareSeries) -> String {
    let mut doc = CsvDoc::new(&["step", "t", "log_mean_square", "log_std_error", "diverged_fraction"]);
    for i in 0..series.len() {
        doc.row([
            series.steps[i].to_string(),
            fmt_f64(series.t(i)),
            fmt_f64(series.log_mean_square[i]),
            fmt_f64(series.log_std_error[i]),
            fmt_f64(series.diverged_fraction),
        ]);
    }
    doc.finish()
}

/// `(step, t, ln E X(t)^2)` rows.
pub fn exact_mean_square_csv(rows: &[(usize, f64, f64)]) -> String {
    let mut doc = CsvDoc::new(&["step", "t", "log_exact_mean_square"]);
    for &(k, t, v) in rows {
        doc.row([k.to_string(), fmt_f64(t), fmt_f64(v)]);
    }
    doc.finish()
}

/// One `key=value` line per field.
#[derive(Debug, Default, Clone)]
pub struct Record {
    lines: Vec<(String, String)>,
}

impl Record {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) -> &mut Self {
        self.lines.push((key.into(), value.to_string()));
        self
    }

    pub fn theory(&mut self, v: &TheoremVerdict) -> &mut Self {
        self.push("theorem_source", v.source.as_str());
        self.push("guaranteed", v.guaranteed.as_str());
        for (name, value) in &v.thresholds {
            self.push(format!("threshold.{name}"), value);
        }
        if !v.requires.is_empty() {
            let req: Vec<&str> = v.requires.iter().map(|c| c.as_str()).collect();
            self.push("requires", req.join(","));
        }
        self.push("detail", &v.detail)
    }

    pub fn empirical(&mut self, v: &StabilityVerdict, series: &MeanSquareSeries) -> &mut Self {
        self.push("label", v.label.as_str())
            .push("slope", v.slope)
            .push("slope_ci", v.slope_ci)
            .push("drop", v.drop)
            .push("n_paths", series.n_paths)
            .push("diverged_fraction", series.diverged_fraction)
            .push("evidence", "Empirical")
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.lines {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }
}

/// gnuplot script drawing `ln E X^2` against `t` on log-scaled time, with the
/// exact curve when present.
pub fn gnuplot_script(title: &str, with_exact: bool) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set key autotitle columnhead");
    let _ = writeln!(s, "set logscale x");
    let _ = writeln!(s, "set xlabel 't'");
    let _ = writeln!(s, "set ylabel 'ln E X^2'");
    let _ = writeln!(s, "set title '{}'", title.replace('\'', ""));
    let _ = writeln!(s, "set terminal pngcairo size 900,600");
    let _ = writeln!(s, "set output 'mean_square.png'");
    if with_exact {
        let _ = writeln!(
            s,
            "plot 'mean_square.csv' using 2:3 with lines title 'STM', \\\n     'exact_mean_square.csv' using 2:3 with lines dashtype 2 title 'exact'"
        );
    } else {
        let _ = writeln!(s, "plot 'mean_square.csv' using 2:3 with lines title 'STM'");
    }
    s
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display().to_string(), e))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| CliError::io(path.display().to_string(), e))
}
