#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "q4/model.hpp"
#include "q4/plausibility.hpp"
#include "q4/rng.hpp"

#include "helpers.hpp"

using namespace q4;
using namespace q4::plaus;
using testutil::error_code;

namespace {

CoilRecord tiny_coil(std::size_t n) {
    CoilRecord c;
    c.coil_id = "T";
    c.sample_step_m = 0.5;
    for (std::size_t j = 0; j < n; ++j) {
        c.positions_m.push_back(0.5 * static_cast<double>(j));
        c.p1.push_back(10.0 + static_cast<double>(j));
        c.p2.push_back(5.0);
        c.p3.push_back(static_cast<double>(j % 3));
        c.p4.push_back({1.0, 2.0});
    }
    return require_valid(std::move(c));
}

std::vector<double> values_of(const PvSeries& pv) { return to_doubles(pv); }

}  // namespace

TEST_CASE("constant measure returns its parameter") {
    CHECK(std::abs(eval_constant({0.7}).value() - 0.7) <= 1e-12);
    CHECK(eval_constant({0.0}).value() == 0.0);
    CHECK(eval_constant({1.0}).value() == 1.0);
    CHECK(error_code([] { validate(MeasureSpec{ConstantMeasure{1.5}}); }) ==
          ErrorCode::InvalidValue);
    CHECK(error_code([] { validate(MeasureSpec{ConstantMeasure{-0.1}}); }) ==
          ErrorCode::InvalidValue);
}

TEST_CASE("threshold measure is the closed interval indicator") {
    CHECK(eval_threshold(5.0, 1.0, 10.0).value() == 1.0);
    CHECK(eval_threshold(0.5, 1.0, 10.0).value() == 0.0);
    CHECK(eval_threshold(1.0, 1.0, 10.0).value() == 1.0);
    CHECK(eval_threshold(10.0, 1.0, 10.0).value() == 1.0);
    CHECK(eval_threshold(10.0000001, 1.0, 10.0).value() == 0.0);
    CHECK(error_code([] {
              eval_threshold(std::numeric_limits<double>::quiet_NaN(), 0.0, 1.0);
          }) == ErrorCode::NonFiniteInput);

    SplitMix64 rng(7);
    for (int i = 0; i < 2000; ++i) {
        const double a = rng.next_uniform() * 10.0 - 5.0;
        const double b = a + rng.next_uniform() * 10.0;
        const double x = rng.next_uniform() * 20.0 - 10.0;
        const double pv = eval_threshold(x, a, b).value();
        CHECK(pv == ((a <= x && x <= b) ? 1.0 : 0.0));
    }
}

TEST_CASE("fuzzy measure trapezoid values") {
    CHECK(std::abs(eval_fuzzy(1.5, 1, 2, 3, 4).value() - 0.5) <= 1e-12);
    CHECK(eval_fuzzy(2.5, 1, 2, 3, 4).value() == 1.0);
    CHECK(std::abs(eval_fuzzy(4.0, 1, 2, 3, 4).value() - 0.0) <= 1e-12);
    // continuity closure at the ramp tops
    CHECK(eval_fuzzy(2.0, 1, 2, 3, 4).value() == 1.0);
    CHECK(eval_fuzzy(3.0, 1, 2, 3, 4).value() == 1.0);
    CHECK(eval_fuzzy(1.0, 1, 2, 3, 4).value() == 0.0);
    CHECK(eval_fuzzy(4.5, 1, 2, 3, 4).value() == 0.0);
    // degenerate edges behave as steps
    CHECK(eval_fuzzy(2.0, 2, 2, 3, 4).value() == 1.0);
    CHECK(eval_fuzzy(1.999999, 2, 2, 3, 4).value() == 0.0);
    CHECK(eval_fuzzy(3.0, 1, 2, 3, 3).value() == 1.0);
    CHECK(eval_fuzzy(3.000001, 1, 2, 3, 3).value() == 0.0);
    CHECK(error_code([] {
              eval_fuzzy(std::numeric_limits<double>::infinity(), 0, 1, 2, 3);
          }) == ErrorCode::NonFiniteInput);
    CHECK(error_code([] { validate(MeasureSpec{FuzzyMeasure{0, 2, 1, 3}}); }) ==
          ErrorCode::InvalidValue);
}

TEST_CASE("fuzzy with collapsed ramps degenerates to threshold") {
    SplitMix64 rng(11);
    for (int i = 0; i < 100000; ++i) {
        double t1 = rng.next_uniform() * 10.0 - 5.0;
        double t2 = t1 + rng.next_uniform() * 10.0;
        // snap a share of draws onto the boundaries to exercise the edges
        double x = rng.next_uniform() * 24.0 - 12.0;
        const double pick = rng.next_uniform();
        if (pick < 0.05) x = t1;
        else if (pick < 0.1) x = t2;
        REQUIRE(eval_fuzzy(x, t1, t1, t2, t2).value() ==
                eval_threshold(x, t1, t2).value());
    }
}

TEST_CASE("fuzzy is continuous when the ramps have width") {
    SplitMix64 rng(13);
    for (int i = 0; i < 2000; ++i) {
        const double t0 = rng.next_uniform() * 4.0;
        const double t1 = t0 + 0.5 + rng.next_uniform();
        const double t2 = t1 + rng.next_uniform();
        const double t3 = t2 + 0.5 + rng.next_uniform();
        const double x = rng.next_uniform() * (t3 - t0 + 2.0) + t0 - 1.0;
        const double h = 1e-9;
        const double left = eval_fuzzy(x - h, t0, t1, t2, t3).value();
        const double right = eval_fuzzy(x + h, t0, t1, t2, t3).value();
        CHECK(std::abs(left - right) <= 1e-7);
    }
}

TEST_CASE("variation measure flags exactly flat windows") {
    const std::vector<double> a = {3, 3, 3, 3};
    CHECK(values_of(eval_variation(a, 3)) == std::vector<double>{1, 1, 0, 0});
    const std::vector<double> b = {1, 2, 3};
    CHECK(values_of(eval_variation(b, 3)) == std::vector<double>{1, 1, 1});
    const std::vector<double> c = {1, 1, 2, 2, 2};
    CHECK(values_of(eval_variation(c, 2)) == std::vector<double>{1, 0, 1, 0, 0});
    CHECK(error_code([] { validate(MeasureSpec{VariationMeasure{1}}); }) ==
          ErrorCode::InvalidValue);
    CHECK(error_code([] {
              const std::vector<double> bad = {1.0, std::nan("")};
              eval_variation(bad, 2);
          }) == ErrorCode::NonFiniteInput);
}

TEST_CASE("variation measure is translation invariant") {
    SplitMix64 rng(17);
    std::vector<double> series(64);
    for (double& v : series) {
        v = rng.next_uniform() < 0.3 ? 2.5 : rng.next_uniform() * 4.0;
    }
    std::vector<double> shifted = series;
    for (double& v : shifted) v += 123.25;
    for (std::size_t n = 2; n <= 6; ++n) {
        CHECK(values_of(eval_variation(series, n)) ==
              values_of(eval_variation(shifted, n)));
    }
}

TEST_CASE("combinators aggregate child series elementwise") {
    const CoilRecord coil = tiny_coil(4);
    const auto leaf_const = [](double p) {
        return AssessmentNode::leaf("p1", ConstantMeasure{p});
    };

    auto pv = eval_assessment(
        AssessmentNode::combine(CombineOp::Min, {leaf_const(0.8), leaf_const(0.6)}), coil);
    for (const auto& v : pv) CHECK(v.value() == 0.6);

    pv = eval_assessment(
        AssessmentNode::combine(CombineOp::Product, {leaf_const(0.5), leaf_const(0.5)}),
        coil);
    for (const auto& v : pv) CHECK(std::abs(v.value() - 0.25) <= 1e-12);

    pv = eval_assessment(AssessmentNode::combine(CombineOp::WeightedMean,
                                                 {leaf_const(0.0), leaf_const(1.0)},
                                                 {0.25, 0.75}),
                         coil);
    for (const auto& v : pv) CHECK(std::abs(v.value() - 0.75) <= 1e-12);

    pv = eval_assessment(
        AssessmentNode::combine(CombineOp::Max, {leaf_const(0.2), leaf_const(0.9)}), coil);
    for (const auto& v : pv) CHECK(v.value() == 0.9);
}

TEST_CASE("combinator ordering: product <= min <= weighted mean <= max") {
    const CoilRecord coil = tiny_coil(3);
    SplitMix64 rng(19);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<AssessmentNode> children;
        std::vector<double> weights;
        double wsum = 0.0;
        const int n = 2 + static_cast<int>(rng.next() % 4);
        for (int i = 0; i < n; ++i) {
            children.push_back(AssessmentNode::leaf("p2", ConstantMeasure{rng.next_uniform()}));
            weights.push_back(0.05 + rng.next_uniform());
            wsum += weights.back();
        }
        for (double& w : weights) w /= wsum;

        const double prod =
            eval_assessment(AssessmentNode::combine(CombineOp::Product, children), coil)[0]
                .value();
        const double mn =
            eval_assessment(AssessmentNode::combine(CombineOp::Min, children), coil)[0]
                .value();
        const double wm = eval_assessment(AssessmentNode::combine(CombineOp::WeightedMean,
                                                                  children, weights),
                                          coil)[0]
                              .value();
        const double mx =
            eval_assessment(AssessmentNode::combine(CombineOp::Max, children), coil)[0]
                .value();
        CHECK(prod <= mn + 1e-15);
        CHECK(mn <= wm + 1e-15);
        CHECK(wm <= mx + 1e-15);
    }
}

TEST_CASE("leaves read the channel they name") {
    const CoilRecord coil = tiny_coil(4);
    // p1 runs 10,11,12,13
    auto pv = eval_assessment(AssessmentNode::leaf("p1", ThresholdMeasure{10.5, 12.5}), coil);
    CHECK(values_of(pv) == std::vector<double>{0, 1, 1, 0});
    // p4 rows are all {1,2}: the width mean is 1.5
    pv = eval_assessment(AssessmentNode::leaf("p4", ThresholdMeasure{1.0, 2.0}), coil);
    CHECK(values_of(pv) == std::vector<double>{1, 1, 1, 1});
    pv = eval_assessment(AssessmentNode::leaf("p4", ThresholdMeasure{1.6, 2.0}), coil);
    CHECK(values_of(pv) == std::vector<double>{0, 0, 0, 0});
}

TEST_CASE("assessment tree validation rejects bad shapes") {
    const auto leaf = AssessmentNode::leaf("p1", ConstantMeasure{0.5});
    CHECK(error_code([&] {
              validate(AssessmentNode::combine(CombineOp::WeightedMean, {leaf, leaf},
                                               {0.5, 0.4}));
          }) == ErrorCode::InvalidValue);
    CHECK(error_code([&] {
              validate(AssessmentNode::combine(CombineOp::Min, {leaf, leaf}, {0.5, 0.5}));
          }) == ErrorCode::InvalidValue);
    CHECK(error_code([&] { validate(AssessmentNode::combine(CombineOp::Min, {})); }) ==
          ErrorCode::InvalidValue);
    CHECK(error_code([&] {
              validate(AssessmentNode::combine(CombineOp::WeightedMean, {leaf, leaf},
                                               {1.2, -0.2}));
          }) == ErrorCode::InvalidValue);
}

TEST_CASE("assessment evaluation errors") {
    const CoilRecord coil = tiny_coil(3);
    CHECK(error_code([&] {
              eval_assessment(AssessmentNode::leaf("p9", ConstantMeasure{1.0}), coil);
          }) == ErrorCode::UnknownChannel);
    CHECK(error_code([&] {
              eval_assessment(AssessmentNode::leaf("p1", DataDrivenMeasure{}), coil);
          }) == ErrorCode::MissingDataDrivenSource);
    CHECK(error_code([&] {
              const PvSeries short_pv(2, PlausibilityValue(1.0));
              eval_assessment(AssessmentNode::leaf("p1", DataDrivenMeasure{}), coil,
                              &short_pv);
          }) == ErrorCode::LengthMismatch);

    const PvSeries external = {PlausibilityValue(0.1), PlausibilityValue(0.2),
                               PlausibilityValue(0.3)};
    const auto pv = eval_assessment(AssessmentNode::leaf("p1", DataDrivenMeasure{}), coil,
                                    &external);
    CHECK(values_of(pv) == std::vector<double>{0.1, 0.2, 0.3});
}

TEST_CASE("every measure stays in range on random input") {
    SplitMix64 rng(23);
    for (int i = 0; i < 20000; ++i) {
        const double x = rng.next_uniform() * 2000.0 - 1000.0;
        const double a = rng.next_uniform() * 100.0 - 50.0;
        const double w1 = rng.next_uniform() * 10.0;
        const double w2 = rng.next_uniform() * 10.0;
        const double w3 = rng.next_uniform() * 10.0;
        const double t = eval_threshold(x, a, a + w1).value();
        CHECK((t == 0.0 || t == 1.0));
        const double f = eval_fuzzy(x, a, a + w1, a + w1 + w2, a + w1 + w2 + w3).value();
        CHECK(f >= 0.0);
        CHECK(f <= 1.0);
    }
}

TEST_CASE("pv summary") {
    const PvSeries ones = {PlausibilityValue(1.0), PlausibilityValue(1.0),
                           PlausibilityValue(1.0)};
    auto s = pv_summary(ones);
    CHECK(s.pv_min == 1.0);
    CHECK(s.pv_mean == 1.0);

    const PvSeries half = {PlausibilityValue(0.0), PlausibilityValue(1.0)};
    s = pv_summary(half);
    CHECK(s.pv_min == 0.0);
    CHECK(std::abs(s.pv_mean - 0.5) <= 1e-12);

    const PvSeries mixed = {PlausibilityValue(0.2), PlausibilityValue(0.4),
                            PlausibilityValue(0.6)};
    s = pv_summary(mixed);
    CHECK(std::abs(s.pv_min - 0.2) <= 1e-12);
    CHECK(std::abs(s.pv_mean - 0.4) <= 1e-12);

    CHECK(error_code([] { pv_summary(PvSeries{}); }) == ErrorCode::EmptySeries);
}
