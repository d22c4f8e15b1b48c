//! Box/cone schedules, strip concatenation, the return map and the
//! verification of a hyperbolic periodic point.

mod certify;
mod cones;
pub(crate) use cones::lse;
mod frame;
mod hyperbolic;
mod ret;
mod schedule;
mod strips;

pub use cones::{analytic_margins, cone_step_check, AnalyticMargins, ConeMode, SampledMargins, StepReport};
pub use frame::{chart_constant, frame_map, FrameChain, FrameMap, C0_FORMULA};
pub use hyperbolic::{
    chart_newton, closing_residual, directional_bound, fixed_point_degree, iterate_with_jacobian, prime_period, strip_boundary, verify_hyperbolic_like,
    winding_number, HyperbolicReport, NewtonReport, WindingReport, NEWTON_MAX_ITER, NEWTON_TOL, PERIOD_TOL,
};
pub use ret::{return_map_check, return_report, ReturnReport, RETURN_THRESHOLD_FACTOR};
pub use schedule::{build_schedule, c_cap, BoxDims, BoxSchedule, LogFixed, ScheduleCheck, ScheduleParams, GEOMETRIC_LN_FLOOR};

pub use strips::{
    build_strip_pair, crossing, image_horizontal_graph, preimage_vertical_graph, Crossing, Graph, MapPair, Strip, StripKind,
    StripLimits, StripPair, DEFAULT_REFINE_BUDGET,
};

pub use certify::{
    certify, certify_with_diagnostics, max_geometric_m, pipeline_min_return, CertifyOptions, ConeMarginSummary, Diagnostics,
    HyperbolicityCertificate, MAttempt, NUMERIC_REGIME, VERIFY_TOL,
};
