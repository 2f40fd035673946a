use fbm_stm_core::lab::{classify, PathExecutor};

use crate::commands::simulate::{ensemble, theory_for};
use crate::config::{Kappa, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{fmt_f64, write_file, CsvDoc};

pub const MAX_CELLS: usize = 1024;

/// Axis values; an empty axis keeps the configured value.
#[derive(Debug, Clone, Default)]
pub struct ScanGrid {
    pub theta: Vec<f64>,
    pub hurst: Vec<f64>,
    pub kappa: Vec<Kappa>,
    pub dt: Vec<f64>,
}

fn axis<T: Copy>(values: &[T], fallback: Option<T>) -> Vec<Option<T>> {
    if values.is_empty() {
        vec![fallback]
    } else {
        values.iter().map(|&v| Some(v)).collect()
    }
}

/// One row per cell, theta outermost and dt innermost.
pub fn scan<E: PathExecutor>(cfg: &RunConfig, grid: &ScanGrid, exec: &E) -> CliResult<String> {
    let thetas = axis(&grid.theta, cfg.scheme.theta);
    let hursts = axis(&grid.hurst, cfg.fbm.hurst);
    let kappas = axis(&grid.kappa, cfg.model.kappa);
    let dts = axis(&grid.dt, cfg.scheme.dt);
    let cells = thetas.len() * hursts.len() * kappas.len() * dts.len();
    if cells > MAX_CELLS {
        return Err(CliError::config(
            "scan",
            format!("{cells} cells exceed the limit of {MAX_CELLS}"),
        ));
    }
    let mut doc = CsvDoc::new(&[
        "theta",
        "hurst",
        "kappa",
        "dt",
        "theorem_source",
        "guaranteed",
        "empirical",
        "slope",
    ]);
    for &theta in &thetas {
        for &hurst in &hursts {
            for &kappa in &kappas {
                for &dt in &dts {
                    let mut cell = cfg.clone();
                    cell.scheme.theta = theta;
                    cell.fbm.hurst = hurst;
                    cell.model.kappa = kappa;
                    cell.scheme.dt = dt;
                    let setup = cell.simulation()?;
                    let series = ensemble(&setup, exec)?;
                    let verdict = classify(&series, setup.slope_tol, setup.drop_margin)?;
                    let h = setup.sampling.grid.hurst();
                    let theory = theory_for(&setup.model, &setup.scheme, h);
                    doc.row([
                        fmt_f64(setup.scheme.theta),
                        fmt_f64(h),
                        fmt_f64(setup.model.kappa()),
                        fmt_f64(setup.scheme.dt),
                        theory.source.as_str().to_string(),
                        theory.guaranteed.as_str().to_string(),
                        verdict.label.as_str().to_string(),
                        fmt_f64(verdict.slope),
                    ]);
                }
            }
        }
    }
    Ok(doc.finish())
}

pub fn run<E: PathExecutor>(cfg: &RunConfig, grid: &ScanGrid, exec: &E) -> CliResult<String> {
    let csv = scan(cfg, grid, exec)?;
    write_file(&cfg.output_dir()?, "scan.csv", &csv)?;
    Ok(csv)
}
