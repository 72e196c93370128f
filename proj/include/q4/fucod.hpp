#pragma once

// Outlier-level engine: four detectors (extreme-deviation test, kNN mean
// distance, cluster membership, local outlier factor) scored into [0,1] and
// fused per sample by a small Mamdani fuzzy system.

#include <cstddef>
#include <vector>

#include "q4/model.hpp"

namespace q4::fucod {

struct FucodConfig {
    double alpha = 0.05;             // significance of the deviation test
    std::size_t k_nn = 10;           // neighbor count for distance and LOF
    std::size_t k_clusters = 3;
    double lof_cap = 2.0;            // raw LOF mapped to score 1
    double robust_spread_mult = 5.0; // multiplier on MAD when normalizing
    double eps = 1e-12;
};

/// Range checks independent of data size. Size-dependent checks (k_nn < N,
/// k_clusters <= N, N >= 3) happen inside fucod_run.
void validate(const FucodConfig& config);

/// Column-standardized features. `z` keeps only the columns whose sample
/// standard deviation (N-1 divisor) reached eps; `retained` maps its columns
/// back to original indices.
struct Standardized {
    FeatureMatrix z;
    std::vector<double> mean;     // per original column
    std::vector<double> stddev;   // per original column
    std::vector<bool> dropped;    // per original column
    std::vector<std::size_t> retained;
};

Standardized standardize(const FeatureMatrix& features, double eps);

/// Two-sided critical value of the extreme studentized deviate test at
/// significance alpha, computed from the Student-t quantile.
double grubbs_critical(std::size_t n, double alpha);

/// Per sample: max |z| across retained columns, divided by the critical
/// value and capped at 1. All columns dropped means no evidence: all zeros.
std::vector<double> grubbs_scores(const Standardized& s, double alpha);

/// k-nearest-neighbor table shared by the distance and LOF detectors.
/// Row j holds the k neighbors of sample j ordered by (distance, index),
/// self excluded. Flat row-major layout: entry m of row j is [j*k + m].
struct NeighborTable {
    std::size_t k = 0;
    std::vector<std::size_t> index;
    std::vector<double> dist;

    std::size_t neighbor(std::size_t j, std::size_t m) const { return index[j * k + m]; }
    double distance(std::size_t j, std::size_t m) const { return dist[j * k + m]; }
    /// Distance from sample j to its k-th nearest neighbor.
    double k_distance(std::size_t j) const { return dist[j * k + k - 1]; }
};

NeighborTable knn_table(const FeatureMatrix& z, std::size_t k_nn);

struct DistanceResult {
    std::vector<double> raw;    // mean distance to the k nearest neighbors
    std::vector<double> score;  // robust-normalized, clamped to [0,1]
};

DistanceResult distance_scores(const FeatureMatrix& z, std::size_t k_nn,
                               double robust_spread_mult, double eps);
DistanceResult distance_scores(const NeighborTable& nn, double robust_spread_mult,
                               double eps);

struct ClusterResult {
    std::vector<std::size_t> assignment;  // cluster index per sample
    FeatureMatrix centroids;              // k_clusters rows
    std::vector<double> radial;           // distance to assigned centroid
    std::vector<double> score;
};

/// Deterministic k-means (farthest-first init seeded from the max-norm
/// sample, lowest-index tie-breaks), then robust normalization of the
/// centroid distances within each cluster. Singleton clusters score 0.
ClusterResult cluster_scores(const FeatureMatrix& z, std::size_t k_clusters,
                             double robust_spread_mult, double eps);

struct LofResult {
    std::vector<double> raw;    // the local outlier factor itself
    std::vector<double> score;  // (raw - 1) / (lof_cap - 1), clamped
};

LofResult lof_scores(const FeatureMatrix& z, std::size_t k_nn, double lof_cap,
                     double eps);
LofResult lof_scores(const NeighborTable& nn, double lof_cap, double eps);

/// Fuses the four detector scores into one outlier level via the fixed
/// six-rule Mamdani system (centroid defuzzification on a 201-point grid).
double fis_fuse(const DetectorScores& s);

struct FucodResult {
    std::vector<double> levels;           // fused outlier level per sample
    std::vector<DetectorScores> scores;   // the four detector scores behind it
    std::vector<bool> dropped_dims;       // per original feature column
};

/// standardize -> four detectors -> per-sample fusion. Deterministic for a
/// fixed input and config, including under permutations of tie-free inputs.
FucodResult fucod_run(const FeatureMatrix& features, const FucodConfig& config);

/// Median of a copy of v (even count: mean of the two middle values).
double median_of(std::vector<double> v);

/// median(|v - median(v)|), the robust spread used by the score normalizers.
double mad_of(const std::vector<double>& v);

}  // namespace q4::fucod
