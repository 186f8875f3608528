//! Graph artifacts from fitted models: adjacency, clustering and blockmodels.

pub mod adjacency;
pub mod blockmodel;
pub mod correlation;
pub mod hcluster;

pub use adjacency::{extract_adjacency, symmetrize, threshold_graph, Adjacency, LagAggregation};
pub use blockmodel::{
    adjusted_rand_index, hierarchical_blockmodel, kmeans, spectral_blockmodel, svd_sorted, BlockClustering, KMeansResult,
};
pub use correlation::{abnormality_correlation, correlation_to_distance, DEFAULT_FAR_CONSTANT};
pub use hcluster::{hierarchical_cluster, Dendrogram, Linkage, Merge};
