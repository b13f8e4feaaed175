//! Generalized dyadic cubes (inner regular partitions) over point clouds.

mod cloud;
mod lowerdim;
mod partition;

pub use cloud::PointCloud;
pub use lowerdim::{cloud_lower_dim_estimate, greedy_net_size, CloudDimEstimate, CENTRE_SAMPLE};
pub use partition::{
    build_partition, max_resolved_level, partition_to_tree, provable_inner_constant, target_constants,
    validate_partition, InnerPartition, PartitionCube, PropertyCheck, ValidationReport, Violation, INNER_CAP,
    PROPERTY_NAMES,
};
