use serde::{Deserialize, Serialize};

use crate::HarnessError;

/// How the error is expected to respond to the parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Refinement {
    /// Error falls as the parameter grows (resolution `N`): rate is `-slope`.
    Resolution,
    /// Error falls with the parameter (time step `τ`): rate is `slope`.
    Step,
}

/// One run of a convergence study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub parameter: f64,
    pub l2_error: Option<f64>,
    pub h1_error: Option<f64>,
    /// Rate against the previous row.
    pub local_rate: Option<f64>,
    pub seconds: f64,
}

/// Least-squares slope of `log y` against `log x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> Result<f64, HarnessError> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(HarnessError::DegenerateFit("need at least two points".into()));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(HarnessError::DegenerateFit("parameters and errors must be positive".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(HarnessError::DegenerateFit("all parameters coincide".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    Ok(sxy / sxx)
}

/// Convergence rate of an error sequence: the fitted slope, oriented so that a convergent
/// study has a positive rate.
pub fn fit_rate(params: &[f64], errors: &[f64], refinement: Refinement) -> Result<f64, HarnessError> {
    let s = fit_slope(params, errors)?;
    Ok(match refinement {
        Refinement::Resolution => -s,
        Refinement::Step => s,
    })
}

/// Fills `local_rate` of each row from its predecessor, using `error`.
pub fn fill_local_rates(rows: &mut [ConvergenceRow], error: impl Fn(&ConvergenceRow) -> Option<f64>, refinement: Refinement) {
    for i in 1..rows.len() {
        let rate = match (error(&rows[i - 1]), error(&rows[i])) {
            (Some(a), Some(b)) => {
                fit_rate(&[rows[i - 1].parameter, rows[i].parameter], &[a, b], refinement).ok()
            }
            _ => None,
        };
        rows[i].local_rate = rate;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn halving_errors_give_rate_one() {
        let r = fit_rate(&[1.0, 2.0, 4.0], &[1.0, 0.5, 0.25], Refinement::Resolution).unwrap();
        assert!((r - 1.0).abs() < 1e-14);
    }

    #[test]
    fn constant_errors_give_rate_zero() {
        let r = fit_rate(&[8.0, 16.0, 32.0], &[0.3, 0.3, 0.3], Refinement::Resolution).unwrap();
        assert!(r.abs() < 1e-14);
    }

    #[test]
    fn noisy_second_order_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let taus = [0.1, 0.05, 0.025, 0.0125, 0.00625];
        let errs: Vec<f64> = taus.iter().map(|t| 3.0 * t * t * (1.0 + rng.gen_range(-0.05..0.05))).collect();
        let r = fit_rate(&taus, &errs, Refinement::Step).unwrap();
        assert!((r - 2.0).abs() <= 0.05, "{r}");
    }

    #[test]
    fn degenerate_fits_are_reported() {
        assert!(matches!(fit_slope(&[1.0, 2.0], &[0.0, 1.0]), Err(HarnessError::DegenerateFit(_))));
        assert!(fit_slope(&[1.0], &[1.0]).is_err());
        assert!(fit_slope(&[2.0, 2.0], &[1.0, 3.0]).is_err());
    }

    #[test]
    fn local_rates_follow_consecutive_rows() {
        let mut rows: Vec<ConvergenceRow> = [(8.0, 1.0), (16.0, 0.25), (32.0, 0.0625)]
            .iter()
            .map(|(p, e)| ConvergenceRow { parameter: *p, l2_error: None, h1_error: Some(*e), local_rate: None, seconds: 0.0 })
            .collect();
        fill_local_rates(&mut rows, |r| r.h1_error, Refinement::Resolution);
        assert_eq!(rows[0].local_rate, None);
        assert!((rows[2].local_rate.unwrap() - 2.0).abs() < 1e-14);
    }
}
