#pragma once

// Per-sample plausibility measures and the combinator tree that turns them
// into a per-channel assessment. Every measure maps a sample to a value in
// [0,1]; trees combine child series elementwise.

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "q4/model.hpp"

namespace q4::plaus {

struct ConstantMeasure {
    double p = 1.0;  // must lie in [0,1]
};

struct ThresholdMeasure {
    double t_min = 0.0;
    double t_max = 0.0;  // t_min <= t_max
};

struct FuzzyMeasure {
    double t0 = 0.0, t1 = 0.0, t2 = 0.0, t3 = 0.0;  // t0 <= t1 <= t2 <= t3
};

struct VariationMeasure {
    std::size_t n = 2;  // trailing window length, n >= 2
};

/// PV comes from an externally supplied series (in this toolkit: 1 minus the
/// fused outlier level). `source` names the series for documentation; a
/// single external series is supplied per evaluation.
struct DataDrivenMeasure {
    std::string source = "fucod";
};

using MeasureSpec = std::variant<ConstantMeasure, ThresholdMeasure, FuzzyMeasure,
                                 VariationMeasure, DataDrivenMeasure>;

void validate(const MeasureSpec& spec);

enum class CombineOp { Min, Max, Product, WeightedMean };

const char* to_string(CombineOp op);
CombineOp combine_op_from_string(const std::string& s);

/// Finite tree: leaves evaluate one measure against one channel, inner nodes
/// combine child PV series elementwise.
class AssessmentNode {
public:
    struct Leaf {
        std::string channel;  // p1, p2, p3, or p4 (width-mean series)
        MeasureSpec measure;
    };
    struct Combine {
        CombineOp op = CombineOp::Min;
        std::vector<double> weights;  // WeightedMean only: >= 0, sum to 1
        std::vector<AssessmentNode> children;
    };

    static AssessmentNode leaf(std::string channel, MeasureSpec measure);
    static AssessmentNode combine(CombineOp op, std::vector<AssessmentNode> children,
                                  std::vector<double> weights = {});

    bool is_leaf() const noexcept { return std::holds_alternative<Leaf>(node_); }
    const Leaf& as_leaf() const { return std::get<Leaf>(node_); }
    const Combine& as_combine() const { return std::get<Combine>(node_); }

private:
    std::variant<Leaf, Combine> node_;
};

/// Validates measure parameters, child counts and weight normalization over
/// the whole tree.
void validate(const AssessmentNode& tree);

PlausibilityValue eval_constant(const ConstantMeasure& spec);
PlausibilityValue eval_threshold(double x, double t_min, double t_max);
PlausibilityValue eval_fuzzy(double x, double t0, double t1, double t2, double t3);

/// Variation measure over a whole series: PV 0 where the trailing window of
/// the n most recent samples is exactly flat, 1 otherwise. The first n-1
/// samples are warm-up and get PV 1.
PvSeries eval_variation(std::span<const double> series, std::size_t n);

/// Evaluates the tree against a validated coil. DataDriven leaves read from
/// external_pv (must have length N when present).
PvSeries eval_assessment(const AssessmentNode& tree, const CoilRecord& coil,
                         const PvSeries* external_pv = nullptr);

struct PvSummary {
    double pv_min = 0.0;
    double pv_mean = 0.0;
};

PvSummary pv_summary(const PvSeries& pv);

}  // namespace q4::plaus
