//! Synapse association, cluster formation and sorting, branch classes.

mod associate;
mod classify;
mod cluster;

pub use associate::{associate, AssociationSummary};
pub use classify::{bulk_set, classify_branches, BulkField};
pub use cluster::{form_clusters, parse_cluster_rows, render_clusters, sort_clusters, traversal_points, ClusterRow, TraversalPoint};

pub const DEFAULT_ASSOC_RADIUS_NM: f64 = 750.0;
pub const DEFAULT_CLUSTER_RADIUS_NM: f64 = 2000.0;
