use fbm_stm_core::models::{AssumptionConstants, SignConvention};
use fbm_stm_core::theory::{
    brownian_classify, brownian_criterion, brownian_dt_threshold, brownian_step_factor, continuous_stability,
    envelope_bound, remark_p_threshold, sigma_tilde_sq, theorem1_classify, theorem2_classify,
};

use crate::app::{Convention, TheoryCmd};
use crate::error::{CliError, CliResult};
use crate::output::Record;

fn canonical(lambda: f64, convention: Convention) -> f64 {
    match convention {
        Convention::Canonical => SignConvention::Canonical,
        Convention::PlusLambda => SignConvention::PlusLambda,
    }
    .to_canonical(lambda)
}

pub fn run(cmd: &TheoryCmd) -> CliResult<String> {
    let mut rec = Record::new();
    match *cmd {
        TheoryCmd::Classify {
            kappa,
            hurst,
            theta,
            lambda,
            mu,
            dt,
            convention,
        } => {
            let k = kappa.resolve(hurst);
            let verdict = if hurst == 0.5 {
                let lambda = lambda.ok_or_else(|| CliError::config("lambda", "required when hurst = 0.5"))?;
                let mu = mu.ok_or_else(|| CliError::config("mu", "required when hurst = 0.5"))?;
                let dt = dt.ok_or_else(|| CliError::config("dt", "required when hurst = 0.5"))?;
                brownian_classify(canonical(lambda, convention), mu, k, theta, dt)
            } else {
                theorem1_classify(k, hurst, theta)
            };
            rec.push("kappa", k).theory(&verdict);
            if let (Some(l), Some(m)) = (lambda, mu) {
                rec.push(
                    "continuous_stable",
                    continuous_stability(canonical(l, convention), m, k, hurst),
                );
            }
        }
        TheoryCmd::RemarkP { p } => {
            let t = remark_p_threshold(p)?;
            rec.push("p", p)
                .push("m_p", t.m_p)
                .push("theta_threshold", t.theta_threshold);
        }
        TheoryCmd::Brownian {
            lambda,
            mu2,
            theta,
            dt,
            kappa,
        } => {
            if mu2.is_nan() || mu2 < 0.0 {
                return Err(CliError::config("mu2", "must be non-negative"));
            }
            let mu = mu2.sqrt();
            match brownian_dt_threshold(lambda, mu, theta) {
                Some(d) => rec.push("dt_star", d),
                None => rec.push("dt_star", "none"),
            };
            if let Some(dt) = dt {
                rec.push("criterion", brownian_criterion(lambda, mu, theta, dt))
                    .push("step_factor", brownian_step_factor(lambda, mu, theta, dt))
                    .theory(&brownian_classify(lambda, mu, kappa, theta, dt));
            }
        }
        TheoryCmd::Theorem2 {
            lambda,
            lambda_bar,
            mu,
            kappa,
            theta,
            hurst,
        } => {
            let c = AssumptionConstants::new(lambda, lambda_bar, mu, kappa)?;
            rec.push("ratio", c.ratio())
                .theory(&theorem2_classify(&c, theta, hurst));
        }
        TheoryCmd::Continuous {
            lambda,
            mu,
            kappa,
            hurst,
            convention,
        } => {
            let k = kappa.resolve(hurst);
            rec.push("kappa", k).push(
                "continuous_stable",
                continuous_stability(canonical(lambda, convention), mu, k, hurst),
            );
        }
        TheoryCmd::Envelope { n, theta } => {
            rec.push("n", n).push("log_envelope", envelope_bound(n, theta)?);
        }
        TheoryCmd::SigmaTilde {
            n,
            theta,
            lambda,
            mu,
            kappa,
            dt,
            hurst,
            ref signs,
        } => {
            let signs = if signs.is_empty() { vec![1; n] } else { signs.clone() };
            let s = sigma_tilde_sq(n, theta, lambda, mu, kappa.resolve(hurst), dt, hurst, &signs)?;
            rec.push("n", n).push("sigma_tilde_sq", s.sigma_sq).push("mean", s.mean);
        }
    }
    Ok(rec.render())
}
