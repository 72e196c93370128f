#include "q4/plausibility.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace q4::plaus {

namespace {

void require_finite(double x) {
    if (!std::isfinite(x)) {
        throw Error(ErrorCode::NonFiniteInput, "measure input is not finite");
    }
}

}  // namespace

void validate(const MeasureSpec& spec) {
    std::visit(
        [](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, ConstantMeasure>) {
                if (!(m.p >= 0.0 && m.p <= 1.0)) {
                    throw Error(ErrorCode::InvalidValue, "constant measure p outside [0,1]");
                }
            } else if constexpr (std::is_same_v<T, ThresholdMeasure>) {
                if (!std::isfinite(m.t_min) || !std::isfinite(m.t_max) || m.t_min > m.t_max) {
                    throw Error(ErrorCode::InvalidValue, "threshold requires t_min <= t_max");
                }
            } else if constexpr (std::is_same_v<T, FuzzyMeasure>) {
                if (!std::isfinite(m.t0) || !std::isfinite(m.t3) || m.t0 > m.t1 ||
                    m.t1 > m.t2 || m.t2 > m.t3) {
                    throw Error(ErrorCode::InvalidValue,
                                "fuzzy measure requires t0 <= t1 <= t2 <= t3");
                }
            } else if constexpr (std::is_same_v<T, VariationMeasure>) {
                if (m.n < 2) {
                    throw Error(ErrorCode::InvalidValue, "variation window must be >= 2");
                }
            } else if constexpr (std::is_same_v<T, DataDrivenMeasure>) {
                if (m.source.empty()) {
                    throw Error(ErrorCode::InvalidValue, "data-driven source name empty");
                }
            }
        },
        spec);
}

const char* to_string(CombineOp op) {
    switch (op) {
        case CombineOp::Min: return "min";
        case CombineOp::Max: return "max";
        case CombineOp::Product: return "product";
        case CombineOp::WeightedMean: return "weighted_mean";
    }
    return "min";
}

CombineOp combine_op_from_string(const std::string& s) {
    if (s == "min") return CombineOp::Min;
    if (s == "max") return CombineOp::Max;
    if (s == "product") return CombineOp::Product;
    if (s == "weighted_mean") return CombineOp::WeightedMean;
    throw Error(ErrorCode::InvalidValue, "unknown combine operator '" + s + "'");
}

AssessmentNode AssessmentNode::leaf(std::string channel, MeasureSpec measure) {
    AssessmentNode n;
    n.node_ = Leaf{std::move(channel), std::move(measure)};
    return n;
}

AssessmentNode AssessmentNode::combine(CombineOp op, std::vector<AssessmentNode> children,
                                       std::vector<double> weights) {
    AssessmentNode n;
    n.node_ = Combine{op, std::move(weights), std::move(children)};
    return n;
}

void validate(const AssessmentNode& tree) {
    if (tree.is_leaf()) {
        validate(tree.as_leaf().measure);
        return;
    }
    const auto& c = tree.as_combine();
    if (c.children.empty()) {
        throw Error(ErrorCode::InvalidValue, "combine node needs at least one child");
    }
    if (c.op == CombineOp::WeightedMean) {
        if (c.weights.size() != c.children.size()) {
            throw Error(ErrorCode::InvalidValue, "weighted_mean weight count != child count");
        }
        double sum = 0.0;
        for (double w : c.weights) {
            if (!(w >= 0.0) || !std::isfinite(w)) {
                throw Error(ErrorCode::InvalidValue, "weighted_mean weights must be >= 0");
            }
            sum += w;
        }
        if (std::abs(sum - 1.0) > 1e-9) {
            throw Error(ErrorCode::InvalidValue, "weighted_mean weights must sum to 1");
        }
    } else if (!c.weights.empty()) {
        throw Error(ErrorCode::InvalidValue, "weights only allowed on weighted_mean");
    }
    for (const auto& child : c.children) validate(child);
}

PlausibilityValue eval_constant(const ConstantMeasure& spec) {
    return PlausibilityValue(spec.p);
}

PlausibilityValue eval_threshold(double x, double t_min, double t_max) {
    require_finite(x);
    return PlausibilityValue(x >= t_min && x <= t_max ? 1.0 : 0.0);
}

// Trapezoid with plateau [t1,t2]. The plateau test runs first so that
// degenerate edges (t0==t1 or t2==t3) behave as steps with value 1 at the
// plateau boundary itself.
PlausibilityValue eval_fuzzy(double x, double t0, double t1, double t2, double t3) {
    require_finite(x);
    if (x >= t1 && x <= t2) return PlausibilityValue(1.0);
    if (x <= t0 || x > t3) return PlausibilityValue(0.0);
    if (x < t1) return PlausibilityValue((x - t0) / (t1 - t0));
    return PlausibilityValue((t3 - x) / (t3 - t2));
}

PvSeries eval_variation(std::span<const double> series, std::size_t n) {
    if (n < 2) {
        throw Error(ErrorCode::InvalidValue, "variation window must be >= 2");
    }
    for (double v : series) require_finite(v);

    PvSeries out;
    out.reserve(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (i + 1 < n) {
            out.emplace_back(1.0);  // warm-up: no stuck-sensor evidence yet
            continue;
        }
        const auto window = series.subspan(i + 1 - n, n);
        auto [lo, hi] = std::minmax_element(window.begin(), window.end());
        out.emplace_back(*hi - *lo == 0.0 ? 0.0 : 1.0);
    }
    return out;
}

namespace {

// Resolves a channel name against the coil; the p4 series is its width-mean.
std::vector<double> channel_series(const CoilRecord& coil, const std::string& name) {
    if (name == "p1") return coil.p1;
    if (name == "p2") return coil.p2;
    if (name == "p3") return coil.p3;
    if (name == "p4") {
        std::vector<double> mean;
        mean.reserve(coil.p4.size());
        for (const auto& row : coil.p4) {
            mean.push_back(std::accumulate(row.begin(), row.end(), 0.0) /
                           static_cast<double>(row.size()));
        }
        return mean;
    }
    throw Error(ErrorCode::UnknownChannel, "channel '" + name + "' does not exist");
}

PvSeries eval_leaf(const AssessmentNode::Leaf& leaf, const CoilRecord& coil,
                   const PvSeries* external_pv) {
    const std::size_t n = coil.samples();

    if (const auto* dd = std::get_if<DataDrivenMeasure>(&leaf.measure)) {
        if (external_pv == nullptr) {
            throw Error(ErrorCode::MissingDataDrivenSource,
                        "no external PV series supplied for source '" + dd->source + "'");
        }
        if (external_pv->size() != n) {
            throw Error(ErrorCode::LengthMismatch,
                        "external PV series length != coil sample count");
        }
        return *external_pv;
    }

    const std::vector<double> series = channel_series(coil, leaf.channel);
    if (const auto* var = std::get_if<VariationMeasure>(&leaf.measure)) {
        return eval_variation(series, var->n);
    }

    PvSeries out;
    out.reserve(n);
    for (double x : series) {
        if (const auto* c = std::get_if<ConstantMeasure>(&leaf.measure)) {
            out.push_back(eval_constant(*c));
        } else if (const auto* t = std::get_if<ThresholdMeasure>(&leaf.measure)) {
            out.push_back(eval_threshold(x, t->t_min, t->t_max));
        } else {
            const auto& f = std::get<FuzzyMeasure>(leaf.measure);
            out.push_back(eval_fuzzy(x, f.t0, f.t1, f.t2, f.t3));
        }
    }
    return out;
}

}  // namespace

PvSeries eval_assessment(const AssessmentNode& tree, const CoilRecord& coil,
                         const PvSeries* external_pv) {
    if (tree.is_leaf()) {
        return eval_leaf(tree.as_leaf(), coil, external_pv);
    }

    const auto& node = tree.as_combine();
    validate(tree);

    std::vector<PvSeries> child_pv;
    child_pv.reserve(node.children.size());
    for (const auto& child : node.children) {
        child_pv.push_back(eval_assessment(child, coil, external_pv));
    }

    const std::size_t n = coil.samples();
    PvSeries out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        double acc;
        switch (node.op) {
            case CombineOp::Min:
                acc = 1.0;
                for (const auto& pv : child_pv) acc = std::min(acc, pv[i].value());
                break;
            case CombineOp::Max:
                acc = 0.0;
                for (const auto& pv : child_pv) acc = std::max(acc, pv[i].value());
                break;
            case CombineOp::Product:
                acc = 1.0;
                for (const auto& pv : child_pv) acc *= pv[i].value();
                break;
            case CombineOp::WeightedMean:
            default:
                acc = 0.0;
                for (std::size_t k = 0; k < child_pv.size(); ++k) {
                    acc += node.weights[k] * child_pv[k][i].value();
                }
                acc = std::clamp(acc, 0.0, 1.0);
                break;
        }
        out.emplace_back(acc);
    }
    return out;
}

PvSummary pv_summary(const PvSeries& pv) {
    if (pv.empty()) {
        throw Error(ErrorCode::EmptySeries, "pv_summary over empty series");
    }
    double mn = 1.0;
    double sum = 0.0;
    for (const auto& v : pv) {
        mn = std::min(mn, v.value());
        sum += v.value();
    }
    return {mn, sum / static_cast<double>(pv.size())};
}

}  // namespace q4::plaus
