#pragma once

// Independent brute-force transcriptions of the neighbor-based detector
// definitions. These deliberately avoid the production code paths (full sort
// instead of partial selection, no shared tables) so agreement between the
// two is meaningful.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "q4/model.hpp"
#include "q4/rng.hpp"

namespace oracle {

inline double euclid(const q4::FeatureMatrix& m, std::size_t a, std::size_t b) {
    double acc = 0.0;
    for (std::size_t c = 0; c < m.cols; ++c) {
        const double d = m.at(a, c) - m.at(b, c);
        acc += d * d;
    }
    return std::sqrt(acc);
}

struct Neighborhood {
    std::vector<std::size_t> idx;
    std::vector<double> dist;
};

/// Exactly the k nearest neighbors of j, ordered by (distance, index),
/// self excluded. Ties beyond position k are cut, not extended.
inline Neighborhood neighbors(const q4::FeatureMatrix& m, std::size_t j, std::size_t k) {
    std::vector<std::pair<double, std::size_t>> all;
    all.reserve(m.rows - 1);
    for (std::size_t i = 0; i < m.rows; ++i) {
        if (i == j) continue;
        all.emplace_back(euclid(m, j, i), i);
    }
    std::sort(all.begin(), all.end());
    Neighborhood out;
    for (std::size_t t = 0; t < k; ++t) {
        out.dist.push_back(all[t].first);
        out.idx.push_back(all[t].second);
    }
    return out;
}

inline std::vector<double> knn_mean_distance(const q4::FeatureMatrix& m, std::size_t k) {
    std::vector<double> out(m.rows, 0.0);
    for (std::size_t j = 0; j < m.rows; ++j) {
        const Neighborhood nb = neighbors(m, j, k);
        double sum = 0.0;
        for (double d : nb.dist) sum += d;
        out[j] = sum / static_cast<double>(k);
    }
    return out;
}

/// Literal local-outlier-factor definition: k-distance, reachability
/// distance, local reachability density, mean density ratio.
inline std::vector<double> lof(const q4::FeatureMatrix& m, std::size_t k, double eps) {
    const std::size_t n = m.rows;
    std::vector<Neighborhood> nb(n);
    for (std::size_t j = 0; j < n; ++j) nb[j] = neighbors(m, j, k);

    std::vector<double> kdist(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) kdist[j] = nb[j].dist.back();

    std::vector<double> lrd(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double reach_sum = 0.0;
        for (std::size_t t = 0; t < k; ++t) {
            reach_sum += std::max(kdist[nb[j].idx[t]], nb[j].dist[t]);
        }
        const double mean_reach = reach_sum / static_cast<double>(k);
        lrd[j] = mean_reach > 0.0 ? 1.0 / mean_reach : 1.0 / eps;
    }

    std::vector<double> out(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double sum = 0.0;
        for (std::size_t t = 0; t < k; ++t) sum += lrd[nb[j].idx[t]];
        out[j] = sum / static_cast<double>(k) / lrd[j];
    }
    return out;
}

inline q4::FeatureMatrix random_matrix(std::uint64_t seed, std::size_t rows,
                                       std::size_t cols) {
    q4::SplitMix64 rng(seed);
    q4::FeatureMatrix m;
    m.rows = rows;
    m.cols = cols;
    m.data.resize(rows * cols);
    for (double& v : m.data) v = rng.next_uniform() * 20.0 - 10.0;
    return m;
}

// ---------------------------------------------------------------------------
// Independent Mamdani transcription for the fusion contract: same membership
// functions and rulebase, written as a direct rule table plus an explicit
// grid accumulation that also reports the aggregate mass and the strongest
// rule activation.

struct FisTrace {
    double centroid = 0.0;
    double mass = 0.0;          // sum of aggregated memberships over the grid
    double max_strength = 0.0;  // strongest single rule activation
};

inline double trap_up_down(double x, double a, double b, double c, double d) {
    if (x < a || x > d) return 0.0;
    if (x >= b && x <= c) return 1.0;
    if (x < b) return (x - a) / (b - a);
    return (d - x) / (d - c);
}

inline FisTrace fis_reference(const q4::DetectorScores& s) {
    const auto low = [](double v) { return trap_up_down(v, -1.0, -1.0, 0.3, 0.6); };
    const auto high = [](double v) { return trap_up_down(v, 0.4, 0.7, 2.0, 2.0); };

    const double gl = low(s.grubbs), gh = high(s.grubbs);
    const double ll = low(s.lof), lh = high(s.lof);
    const double dl = low(s.distance), dh = high(s.distance);
    const double cl = low(s.cluster), ch = high(s.cluster);

    double w_low = 0.0, w_med = 0.0, w_high = 0.0;
    const auto fire = [](double& slot, double strength) {
        if (strength > slot) slot = strength;
    };
    fire(w_high, std::min(gh, lh));
    fire(w_high, std::min(dh, ch));
    fire(w_low, std::min(std::min(gl, ll), std::min(dl, cl)));
    fire(w_med, std::min({std::max(gh, lh), dl, cl}));
    fire(w_med, std::min({std::max(dh, ch), gl, ll}));
    fire(w_high, std::max({std::min(gh, dh), std::min(gh, ch), std::min(lh, dh),
                           std::min(lh, ch)}));

    FisTrace trace;
    trace.max_strength = std::max({w_low, w_med, w_high});
    double num = 0.0;
    double den = 0.0;
    for (int i = 0; i <= 200; ++i) {
        const double x = static_cast<double>(i) / 200.0;
        const double mu =
            std::max({std::min(w_low, trap_up_down(x, -1.0, -1.0, 0.2, 0.4)),
                      std::min(w_med, trap_up_down(x, 0.3, 0.45, 0.55, 0.7)),
                      std::min(w_high, trap_up_down(x, 0.6, 0.8, 2.0, 2.0))});
        num += mu * x;
        den += mu;
    }
    trace.mass = den;
    trace.centroid = den > 0.0 ? num / den : 0.0;
    return trace;
}

}  // namespace oracle
