mod darcy;
mod deeponet;
mod emulate;
mod ns;
mod properties;
mod spectral;

use std::path::Path;
use std::time::Instant;

use crate::config::{Experiment, ExperimentConfig};
use crate::report::Outcome;
use crate::HarnessError;

pub use darcy::darcy_converge;
pub use deeponet::deeponet_export;
pub use emulate::{darcy_emulate, ft_emulate, ns_emulate};
pub use ns::ns_converge;
pub use properties::property_suite;
pub use spectral::spectral_check;

pub(crate) fn dispatch(config: &ExperimentConfig, out: &Path) -> Result<Outcome, HarnessError> {
    let seed = config.seed;
    let start = Instant::now();
    let mut outcome = match &config.experiment {
        Experiment::SpectralCheck(p) => spectral_check(p, seed)?,
        Experiment::DarcyConverge(p) => darcy_converge(p)?,
        Experiment::NsConverge(p) => ns_converge(p)?,
        Experiment::DarcyEmulate(p) => darcy_emulate(p, seed)?,
        Experiment::NsEmulate(p) => ns_emulate(p, seed)?,
        Experiment::FtEmulate(p) => ft_emulate(p, seed)?,
        Experiment::DeeponetExport(p) => deeponet_export(p, seed, out)?,
        Experiment::PropertySuite(p) => property_suite(p, seed)?,
    };
    outcome.timings.insert("total".into(), start.elapsed().as_secs_f64());
    Ok(outcome)
}

/// Runs `f` and returns its value with the elapsed wall-clock seconds.
pub(crate) fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let v = f();
    (v, start.elapsed().as_secs_f64())
}
