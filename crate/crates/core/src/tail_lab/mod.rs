//! Tail-probability experiments for `X̌_n`: exact enumeration, plain and
//! importance-sampled Monte Carlo, and empirical checks of the shape of
//! several tail bounds.

mod bounds;
mod estimators;
mod exact;
mod monotone;

pub use bounds::{
    check_concentration, check_concentration_contrast, check_nagaev, check_return_tail, check_zeta_regimes, plus_shape,
    BoundCheckReport, BoundRow, Comparison, ConcentrationContrast, FitRecord,
};
pub use estimators::{
    naive_tail, naive_tail_grid, rate_curve, tilted_tail, tilted_tail_grid, RateCurve, RateRow, TailEstimate,
    TailMethod, TargetRule, ThetaRule, TiltPlan,
};
pub use exact::{exact_distribution, exact_tail, ExactDistribution, EXACT_TERM_LIMIT};
pub use monotone::{check_monotonicity, DiscreteLaw, MonotonicityReport, Violation};
