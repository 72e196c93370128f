#include "q4/fucod.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

namespace q4::fucod {

namespace {

// Sums in ascending value order so the result does not depend on the order
// the inputs arrived in (needed for exact permutation equivariance).
double ordered_sum(std::vector<double>& scratch) {
    std::sort(scratch.begin(), scratch.end());
    double sum = 0.0;
    for (double v : scratch) sum += v;
    return sum;
}

double sq_dist(const double* a, const double* b, std::size_t dims) {
    double s = 0.0;
    for (std::size_t d = 0; d < dims; ++d) {
        const double diff = a[d] - b[d];
        s += diff * diff;
    }
    return s;
}

double robust_score(double value, double center, double mad, double mult, double eps) {
    return std::clamp((value - center) / (mult * mad + eps), 0.0, 1.0);
}

}  // namespace

void validate(const FucodConfig& config) {
    if (!(config.alpha > 0.0 && config.alpha < 1.0)) {
        throw Error(ErrorCode::InvalidValue, "alpha must lie in (0,1)");
    }
    if (config.k_nn < 2) {
        throw Error(ErrorCode::InvalidValue, "k_nn must be >= 2");
    }
    if (config.k_clusters < 1) {
        throw Error(ErrorCode::InvalidValue, "k_clusters must be >= 1");
    }
    if (!(config.lof_cap > 1.0)) {
        throw Error(ErrorCode::InvalidValue, "lof_cap must be > 1");
    }
    if (!(config.robust_spread_mult > 0.0)) {
        throw Error(ErrorCode::InvalidValue, "robust_spread_mult must be > 0");
    }
    if (!(config.eps > 0.0)) {
        throw Error(ErrorCode::InvalidValue, "eps must be > 0");
    }
}

double median_of(std::vector<double> v) {
    if (v.empty()) {
        throw Error(ErrorCode::EmptySeries, "median of empty vector");
    }
    std::sort(v.begin(), v.end());
    const std::size_t mid = v.size() / 2;
    if (v.size() % 2 == 1) return v[mid];
    return (v[mid - 1] + v[mid]) / 2.0;
}

double mad_of(const std::vector<double>& v) {
    const double med = median_of(v);
    std::vector<double> dev;
    dev.reserve(v.size());
    for (double x : v) dev.push_back(std::abs(x - med));
    return median_of(std::move(dev));
}

Standardized standardize(const FeatureMatrix& features, double eps) {
    const std::size_t n = features.rows;
    const std::size_t dims = features.cols;
    if (n < 2) {
        throw Error(ErrorCode::TooFewSamples, "standardize needs at least 2 samples");
    }

    Standardized out;
    out.mean.resize(dims);
    out.stddev.resize(dims);
    out.dropped.resize(dims, false);

    std::vector<double> scratch(n);
    for (std::size_t d = 0; d < dims; ++d) {
        for (std::size_t r = 0; r < n; ++r) scratch[r] = features.at(r, d);
        const double mean = ordered_sum(scratch) / static_cast<double>(n);
        for (std::size_t r = 0; r < n; ++r) {
            const double diff = features.at(r, d) - mean;
            scratch[r] = diff * diff;
        }
        const double var = ordered_sum(scratch) / static_cast<double>(n - 1);
        const double sd = std::sqrt(var);
        out.mean[d] = mean;
        out.stddev[d] = sd;
        if (sd < eps) {
            out.dropped[d] = true;
        } else {
            out.retained.push_back(d);
        }
    }

    out.z.rows = n;
    out.z.cols = out.retained.size();
    out.z.data.resize(n * out.z.cols);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < out.retained.size(); ++c) {
            const std::size_t d = out.retained[c];
            out.z.at(r, c) = (features.at(r, d) - out.mean[d]) / out.stddev[d];
        }
    }
    return out;
}

double grubbs_critical(std::size_t n, double alpha) {
    if (n < 3) {
        throw Error(ErrorCode::TooFewSamples, "critical value needs N >= 3");
    }
    const auto nd = static_cast<double>(n);
    const boost::math::students_t dist(nd - 2.0);
    const double t = boost::math::quantile(dist, 1.0 - alpha / (2.0 * nd));
    return (nd - 1.0) / std::sqrt(nd) * std::sqrt(t * t / (nd - 2.0 + t * t));
}

std::vector<double> grubbs_scores(const Standardized& s, double alpha) {
    const std::size_t n = s.z.rows;
    if (n < 3) {
        throw Error(ErrorCode::TooFewSamples, "deviation test needs N >= 3");
    }
    std::vector<double> scores(n, 0.0);
    if (s.z.cols == 0) return scores;

    const double crit = grubbs_critical(n, alpha);
    for (std::size_t r = 0; r < n; ++r) {
        double worst = 0.0;
        for (std::size_t c = 0; c < s.z.cols; ++c) {
            worst = std::max(worst, std::abs(s.z.at(r, c)));
        }
        scores[r] = std::min(1.0, worst / crit);
    }
    return scores;
}

NeighborTable knn_table(const FeatureMatrix& z, std::size_t k_nn) {
    const std::size_t n = z.rows;
    if (k_nn < 1 || k_nn >= n) {
        throw Error(ErrorCode::KTooLarge, "k_nn must lie in [1, sample count)");
    }

    NeighborTable nn;
    nn.k = k_nn;
    nn.index.resize(n * k_nn);
    nn.dist.resize(n * k_nn);

    std::vector<std::pair<double, std::size_t>> cand;
    cand.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
        cand.clear();
        for (std::size_t i = 0; i < n; ++i) {
            if (i == j) continue;
            cand.emplace_back(std::sqrt(sq_dist(z.row(j), z.row(i), z.cols)), i);
        }
        std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k_nn),
                          cand.end());
        for (std::size_t m = 0; m < k_nn; ++m) {
            nn.dist[j * k_nn + m] = cand[m].first;
            nn.index[j * k_nn + m] = cand[m].second;
        }
    }
    return nn;
}

DistanceResult distance_scores(const NeighborTable& nn, double robust_spread_mult,
                               double eps) {
    const std::size_t n = nn.index.size() / nn.k;
    DistanceResult out;
    out.raw.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        double sum = 0.0;
        for (std::size_t m = 0; m < nn.k; ++m) sum += nn.distance(j, m);
        out.raw[j] = sum / static_cast<double>(nn.k);
    }

    const double med = median_of(out.raw);
    const double mad = mad_of(out.raw);
    out.score.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        out.score[j] = robust_score(out.raw[j], med, mad, robust_spread_mult, eps);
    }
    return out;
}

DistanceResult distance_scores(const FeatureMatrix& z, std::size_t k_nn,
                               double robust_spread_mult, double eps) {
    return distance_scores(knn_table(z, k_nn), robust_spread_mult, eps);
}

namespace {

struct KMeans {
    FeatureMatrix centroids;
    std::vector<std::size_t> assignment;
    std::vector<double> radial;  // distance to assigned centroid
};

// Deterministic k-means: farthest-first initialization seeded from the
// max-norm sample, lowest-index tie-breaking everywhere, stop at centroid
// movement < 1e-9 or 100 iterations, empty clusters re-seeded with the
// sample farthest from its assigned centroid.
KMeans run_kmeans(const FeatureMatrix& z, std::size_t k) {
    const std::size_t n = z.rows;
    const std::size_t dims = z.cols;

    std::vector<std::size_t> seeds;
    seeds.reserve(k);
    {
        std::size_t best = 0;
        double best_norm = -1.0;
        for (std::size_t j = 0; j < n; ++j) {
            double norm = 0.0;
            for (std::size_t d = 0; d < dims; ++d) norm += z.at(j, d) * z.at(j, d);
            if (norm > best_norm) {
                best_norm = norm;
                best = j;
            }
        }
        seeds.push_back(best);
    }
    std::vector<double> min_sq(n, std::numeric_limits<double>::infinity());
    while (seeds.size() < k) {
        const std::size_t last = seeds.back();
        for (std::size_t j = 0; j < n; ++j) {
            min_sq[j] = std::min(min_sq[j], sq_dist(z.row(j), z.row(last), dims));
        }
        std::size_t best = 0;
        double best_d = -1.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (min_sq[j] > best_d) {
                best_d = min_sq[j];
                best = j;
            }
        }
        seeds.push_back(best);
    }

    KMeans km;
    km.centroids.rows = k;
    km.centroids.cols = dims;
    km.centroids.data.resize(k * dims);
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t d = 0; d < dims; ++d) {
            km.centroids.at(c, d) = z.at(seeds[c], d);
        }
    }

    km.assignment.assign(n, 0);
    km.radial.assign(n, 0.0);
    std::vector<double> member_values;  // per-(cluster, dimension) scratch
    FeatureMatrix next = km.centroids;

    for (int iter = 0; iter < 100; ++iter) {
        for (std::size_t j = 0; j < n; ++j) {
            std::size_t best = 0;
            double best_sq = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k; ++c) {
                const double dsq = sq_dist(z.row(j), km.centroids.row(c), dims);
                if (dsq < best_sq) {
                    best_sq = dsq;
                    best = c;
                }
            }
            km.assignment[j] = best;
            km.radial[j] = std::sqrt(best_sq);
        }

        std::vector<std::size_t> count(k, 0);
        for (std::size_t j = 0; j < n; ++j) ++count[km.assignment[j]];

        bool reseeded = false;
        for (std::size_t c = 0; c < k; ++c) {
            if (count[c] != 0) continue;
            std::size_t farthest = 0;
            double worst = -1.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (km.radial[j] > worst) {
                    worst = km.radial[j];
                    farthest = j;
                }
            }
            for (std::size_t d = 0; d < dims; ++d) {
                km.centroids.at(c, d) = z.at(farthest, d);
            }
            reseeded = true;
        }
        if (reseeded) continue;  // re-assign against the repaired centroids

        double movement_sq = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            for (std::size_t d = 0; d < dims; ++d) {
                member_values.clear();
                for (std::size_t j = 0; j < n; ++j) {
                    if (km.assignment[j] == c) member_values.push_back(z.at(j, d));
                }
                next.at(c, d) = ordered_sum(member_values) / static_cast<double>(count[c]);
            }
            movement_sq = std::max(
                movement_sq, sq_dist(next.row(c), km.centroids.row(c), dims));
        }
        km.centroids = next;
        if (movement_sq < 1e-9 * 1e-9) break;
    }

    for (std::size_t j = 0; j < n; ++j) {
        km.radial[j] =
            std::sqrt(sq_dist(z.row(j), km.centroids.row(km.assignment[j]), dims));
    }
    return km;
}

}  // namespace

ClusterResult cluster_scores(const FeatureMatrix& z, std::size_t k_clusters,
                             double robust_spread_mult, double eps) {
    const std::size_t n = z.rows;
    if (k_clusters > n) {
        throw Error(ErrorCode::KTooLarge, "k_clusters must be <= sample count");
    }
    if (k_clusters < 1) {
        throw Error(ErrorCode::InvalidValue, "k_clusters must be >= 1");
    }

    KMeans km = run_kmeans(z, k_clusters);

    ClusterResult out;
    out.assignment = std::move(km.assignment);
    out.centroids = std::move(km.centroids);
    out.radial = std::move(km.radial);
    out.score.assign(n, 0.0);

    for (std::size_t c = 0; c < k_clusters; ++c) {
        std::vector<std::size_t> members;
        for (std::size_t j = 0; j < n; ++j) {
            if (out.assignment[j] == c) members.push_back(j);
        }
        if (members.size() <= 1) continue;  // singletons carry no spread evidence

        std::vector<double> r;
        r.reserve(members.size());
        for (std::size_t j : members) r.push_back(out.radial[j]);
        const double med = median_of(r);
        const double mad = mad_of(r);
        for (std::size_t j : members) {
            out.score[j] = robust_score(out.radial[j], med, mad, robust_spread_mult, eps);
        }
    }
    return out;
}

LofResult lof_scores(const NeighborTable& nn, double lof_cap, double eps) {
    const std::size_t n = nn.index.size() / nn.k;
    const auto kd = static_cast<double>(nn.k);

    std::vector<double> lrd(n);
    for (std::size_t j = 0; j < n; ++j) {
        double reach_sum = 0.0;
        for (std::size_t m = 0; m < nn.k; ++m) {
            const std::size_t o = nn.neighbor(j, m);
            reach_sum += std::max(nn.k_distance(o), nn.distance(j, m));
        }
        const double mean_reach = reach_sum / kd;
        lrd[j] = mean_reach > 0.0 ? 1.0 / mean_reach : 1.0 / eps;
    }

    LofResult out;
    out.raw.resize(n);
    out.score.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        double ratio_sum = 0.0;
        for (std::size_t m = 0; m < nn.k; ++m) {
            ratio_sum += lrd[nn.neighbor(j, m)] / lrd[j];
        }
        out.raw[j] = ratio_sum / kd;
        out.score[j] = std::clamp((out.raw[j] - 1.0) / (lof_cap - 1.0), 0.0, 1.0);
    }
    return out;
}

LofResult lof_scores(const FeatureMatrix& z, std::size_t k_nn, double lof_cap,
                     double eps) {
    return lof_scores(knn_table(z, k_nn), lof_cap, eps);
}

namespace {

double trap(double x, double a, double b, double c, double d) {
    if (x >= b && x <= c) return 1.0;
    if (x <= a || x >= d) return 0.0;
    if (x < b) return (x - a) / (b - a);
    return (d - x) / (d - c);
}

double in_low(double x) { return trap(x, 0.0, 0.0, 0.3, 0.6); }
double in_high(double x) { return trap(x, 0.4, 0.7, 1.0, 1.0); }

double out_low(double x) { return trap(x, 0.0, 0.0, 0.2, 0.4); }
double out_med(double x) { return trap(x, 0.3, 0.45, 0.55, 0.7); }
double out_high(double x) { return trap(x, 0.6, 0.8, 1.0, 1.0); }

}  // namespace

double fis_fuse(const DetectorScores& s) {
    const double gl = in_low(s.grubbs), gh = in_high(s.grubbs);
    const double dl = in_low(s.distance), dh = in_high(s.distance);
    const double cl = in_low(s.cluster), ch = in_high(s.cluster);
    const double ll = in_low(s.lof), lh = in_high(s.lof);

    // Corroborated alarms are HIGH, a lone alarm is MED, quiet is LOW.
    const double r1 = std::min(gh, lh);
    const double r2 = std::min(dh, ch);
    const double r3 = std::min(std::min(gl, dl), std::min(cl, ll));
    const double r4 = std::min(std::max(gh, lh), std::min(dl, cl));
    const double r5 = std::min(std::max(dh, ch), std::min(gl, ll));
    const double r6 = std::max(std::max(std::min(gh, dh), std::min(gh, ch)),
                               std::max(std::min(lh, dh), std::min(lh, ch)));

    const double w_low = r3;
    const double w_med = std::max(r4, r5);
    const double w_high = std::max(std::max(r1, r2), r6);

    double num = 0.0;
    double den = 0.0;
    for (int i = 0; i <= 200; ++i) {
        const double x = static_cast<double>(i) / 200.0;
        const double mu = std::max(std::max(std::min(w_low, out_low(x)),
                                            std::min(w_med, out_med(x))),
                                   std::min(w_high, out_high(x)));
        num += mu * x;
        den += mu;
    }
    if (den / 200.0 < 1e-9) {
        // Defensive only: the rulebase covers every input-corner pattern, so
        // the aggregate always has mass (asserted unreachable in tests).
        return (s.grubbs + s.distance + s.cluster + s.lof) / 4.0;
    }
    return num / den;
}

FucodResult fucod_run(const FeatureMatrix& features, const FucodConfig& config) {
    validate(config);
    const std::size_t n = features.rows;
    if (n < 3) {
        throw Error(ErrorCode::TooFewSamples, "outlier engine needs N >= 3");
    }
    if (config.k_nn >= n) {
        throw Error(ErrorCode::KTooLarge, "k_nn must be < sample count");
    }
    if (config.k_clusters > n) {
        throw Error(ErrorCode::KTooLarge, "k_clusters must be <= sample count");
    }

    const Standardized s = standardize(features, config.eps);
    const std::vector<double> g = grubbs_scores(s, config.alpha);
    const NeighborTable nn = knn_table(s.z, config.k_nn);
    const DistanceResult dist = distance_scores(nn, config.robust_spread_mult, config.eps);
    const ClusterResult clus =
        cluster_scores(s.z, config.k_clusters, config.robust_spread_mult, config.eps);
    const LofResult lof = lof_scores(nn, config.lof_cap, config.eps);

    FucodResult out;
    out.dropped_dims = s.dropped;
    out.scores.resize(n);
    out.levels.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        out.scores[j] = DetectorScores{g[j], dist.score[j], clus.score[j], lof.score[j]};
        out.levels[j] = fis_fuse(out.scores[j]);
    }
    return out;
}

}  // namespace q4::fucod
