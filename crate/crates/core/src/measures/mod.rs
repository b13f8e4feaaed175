//! Discrete measures, Frostman-type checks, packing sums and the tangent
//! pipeline.

mod measure;
mod packing;
mod tangent;

pub use measure::{
    counting_measure, frostman_lower_check, packing_upper_bound, pushforward, DiscreteMeasure, FrostmanCheck,
    FrostmanWitness, Homothety,
};
pub use packing::{greedy_packing_centres, greedy_packing_sum, is_packing, packing_sum, PackingEstimate};
pub use tangent::{
    symbolic_bound, tangent_pipeline, Beta, CylinderRoute, EllReport, ScaleSample, SymbolicBound, TangentConfig,
    TangentReport, AUTO_MIN_GAP, DEFAULT_MAX_LEVEL, PACKING_SLACK, SAMPLES_PER_ELL,
};
