//! Analysis engine for heterogeneous interaction networks: weighted bipartite
//! graphs between two entity types built from interaction logs.
//!
//! * [`hin`] holds the immutable graph and its canonical JSON form.
//! * [`ingest`] builds graphs from delimiter-separated logs.
//! * [`metrics`] computes per-node quantity and diversity.
//! * [`pruning`] keeps edges that are significant under a binomial null model.
//! * [`mdl`] clusters Set1 nodes by minimizing a description length.
//! * [`synth`] generates fixture networks and interaction logs.

pub mod hin;
pub mod ingest;
pub mod mdl;
pub mod metrics;
pub mod pruning;
pub mod synth;

pub use hin::{Edge, Hin, HinError, HinMeta, Node, NodeLabel, NodeRef, SetSide};
pub use ingest::{ingest, ingest_report, HinSpec, IngestError, IngestReport, Table, WeightMode};
pub use mdl::{
    cluster, description_length, exhaustive_cluster, project_cluster, prune_projection,
    ClusterError, ClusterResult, Partition, PartitionSearch, ProjectedNetwork, SearchOptions,
    SearchRegistry,
};
pub use metrics::{diversity, metrics_table, quantity, quantity_group, MetricsError, NodeMetrics};
pub use pruning::{
    binomial_quantile, null_simulation, prune, CalibrationReport, FixDeg, NullModelSpec,
    PruneError, PruneResult,
};
