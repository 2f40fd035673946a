use fbm_stm_core::special::{gaussian_raw_moment, kummer_phi, log_gamma, parabolic_u, GaussianScalar};

use crate::app::SpecialCmd;
use crate::error::CliResult;
use crate::output::Record;

pub fn run(cmd: &SpecialCmd) -> CliResult<String> {
    let value = match *cmd {
        SpecialCmd::Phi { a, b, z } => kummer_phi(a, b, z)?,
        SpecialCmd::U { a, z } => parabolic_u(a, z)?,
        SpecialCmd::Lgamma { x } => log_gamma(x)?,
        SpecialCmd::Moment { mean, std, order } => gaussian_raw_moment(GaussianScalar::new(mean, std)?, order)?,
    };
    let mut rec = Record::new();
    rec.push("value", value);
    Ok(rec.render())
}
