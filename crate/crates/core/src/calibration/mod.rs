//! Fits of the source and detection model to measured data: channel
//! efficiencies and squeezing from count rates, photon overlap from HOM
//! visibilities, and the coupler loss needed to explain a nominal visibility.

mod counts;
mod overlap;
mod simplex;

pub use counts::{
    count_objective, fit_efficiencies, fit_efficiencies_with, CountRecord, FitOptions, FitResult, RATE_FLOOR,
};
pub use overlap::{
    fit_overlap, scan_loss_explanations, LossExplanation, OverlapFit, VisibilityRecord, BOOTSTRAP_RESAMPLES,
};
pub use simplex::{nelder_mead, SimplexOptions, SimplexResult};
