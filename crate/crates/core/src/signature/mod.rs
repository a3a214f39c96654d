//! Complete-linkage clustering of anomalous windows and signature matching.

mod entropy;
mod linkage;
mod matching;

pub use entropy::{
    baseline_entropy, column_medians, conditional_entropy, conditional_entropy_within, entropy_bits,
    EntropyProfile,
};
pub use linkage::{agglomerate, linkage_distance, max_pairwise_distance, Agglomeration, Dendrogram, Merge};
pub use matching::{
    active_features, best_signature, clusters_from, significant_features, signature_match_prob,
    valid_clusters, BaselineProfile, Cluster, EntropySource, MatchParams, MatchResult, MatchTriple,
};
