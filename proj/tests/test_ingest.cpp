#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "q4/ingest.hpp"
#include "q4/model.hpp"
#include "q4/rng.hpp"

#include "helpers.hpp"

using namespace q4;
using namespace q4::ingest;
using testutil::error_code;

namespace {

SynthParams small_params() {
    SynthParams p;
    p.seed = 42;
    p.n_samples = 60;
    p.width_positions = 4;
    p.coil_id = "C-0042";
    return p;
}

}  // namespace

TEST_CASE("splitmix64 golden word") {
    SplitMix64 rng(42);
    CHECK(rng.next() == 0xBDD732262FEB6E95ULL);
}

TEST_CASE("synthetic coils are deterministic in their parameters") {
    const auto a = synth_coil(small_params());
    const auto b = synth_coil(small_params());
    CHECK(write_coil_csv(a.coil) == write_coil_csv(b.coil));

    SynthParams other = small_params();
    other.seed = 43;
    CHECK(write_coil_csv(a.coil) != write_coil_csv(synth_coil(other).coil));
}

TEST_CASE("coil csv round trips bit-exactly") {
    const auto made = synth_coil(small_params());
    const std::string bytes = write_coil_csv(made.coil);
    const CoilRecord parsed = parse_coil_csv(bytes);

    CHECK(parsed.coil_id == made.coil.coil_id);
    CHECK(parsed.sample_step_m == made.coil.sample_step_m);
    CHECK(parsed.positions_m == made.coil.positions_m);
    CHECK(parsed.p1 == made.coil.p1);
    CHECK(parsed.p2 == made.coil.p2);
    CHECK(parsed.p3 == made.coil.p3);
    CHECK(parsed.p4 == made.coil.p4);
    CHECK(write_coil_csv(parsed) == bytes);
}

TEST_CASE("coil csv parser rejects damaged input") {
    const std::string good = write_coil_csv(synth_coil(small_params()).coil);

    auto broken = good;
    broken[0] = 'X';
    CHECK(error_code([&] { parse_coil_csv(broken); }) == ErrorCode::BadHeader);

    // drop one field from the first data row
    broken = good;
    const auto row_start = broken.find('\n', broken.find('\n') + 1) + 1;
    const auto first_comma = broken.find(',', row_start);
    broken.erase(row_start, first_comma - row_start + 1);
    CHECK(error_code([&] { parse_coil_csv(broken); }) == ErrorCode::BadRow);

    // non-numeric cell
    broken = good;
    broken.replace(broken.find(',', row_start) + 1, 1, "x");
    CHECK(error_code([&] { parse_coil_csv(broken); }) == ErrorCode::BadRow);

    // truncated file without the final newline
    broken = good;
    broken.pop_back();
    CHECK(error_code([&] { parse_coil_csv(broken); }) == ErrorCode::BadRow);

    CHECK(error_code([&] { parse_coil_csv(""); }) == ErrorCode::BadRow);
}

TEST_CASE("spike offsets one sample by its magnitude in sigma units") {
    SynthParams clean = small_params();
    SynthParams spiked = clean;
    spiked.anomalies.push_back({AnomalyKind::Spike, "p1", 5, 1, 10.0});

    const auto base = synth_coil(clean);
    const auto made = synth_coil(spiked);
    for (std::size_t j = 0; j < clean.n_samples; ++j) {
        if (j == 5) {
            CHECK(made.coil.p1[j] == base.coil.p1[j] + 10.0 * clean.p1.sigma);
        } else {
            CHECK(made.coil.p1[j] == base.coil.p1[j]);
        }
    }
    CHECK(made.coil.p2 == base.coil.p2);
    REQUIRE(made.labels.labels.size() == 1);
    CHECK(made.labels.labels[0] == Label{5, AnomalyKind::Spike});
}

TEST_CASE("stuck freezes the first value of the run") {
    SynthParams params = small_params();
    params.anomalies.push_back({AnomalyKind::Stuck, "p2", 10, 5, 0.0});
    const auto base = synth_coil(small_params());
    const auto made = synth_coil(params);

    for (std::size_t j = 10; j < 15; ++j) {
        CHECK(made.coil.p2[j] == base.coil.p2[10]);
    }
    CHECK(made.coil.p2[9] == base.coil.p2[9]);
    CHECK(made.coil.p2[15] == base.coil.p2[15]);
    REQUIRE(made.labels.labels.size() == 5);
    for (std::size_t j = 0; j < 5; ++j) {
        CHECK(made.labels.labels[j] == Label{10 + j, AnomalyKind::Stuck});
    }
}

TEST_CASE("surface burst lifts whole rows of the surface map") {
    SynthParams params = small_params();
    params.anomalies.push_back({AnomalyKind::SurfaceBurst, "p4", 3, 2, 8.0});
    const auto base = synth_coil(small_params());
    const auto made = synth_coil(params);

    for (std::size_t j = 0; j < params.n_samples; ++j) {
        for (std::size_t w = 0; w < params.width_positions; ++w) {
            const double expect = (j == 3 || j == 4)
                                      ? base.coil.p4[j][w] + 8.0 * params.p4.sigma
                                      : base.coil.p4[j][w];
            CHECK(made.coil.p4[j][w] == expect);
        }
    }
}

TEST_CASE("anomaly validation") {
    SynthParams params = small_params();
    params.anomalies.push_back({AnomalyKind::Spike, "p1", 5, 2, 1.0});  // length must be 1
    CHECK(error_code([&] { validate(params); }) == ErrorCode::InvalidParams);

    params.anomalies = {{AnomalyKind::Spike, "p4", 5, 1, 1.0}};  // wrong channel
    CHECK(error_code([&] { validate(params); }) == ErrorCode::InvalidParams);

    params.anomalies = {{AnomalyKind::SurfaceBurst, "p1", 5, 2, 1.0}};  // wrong channel
    CHECK(error_code([&] { validate(params); }) == ErrorCode::InvalidParams);

    params.anomalies = {{AnomalyKind::Stuck, "p2", 58, 10, 0.0}};  // overruns the coil
    CHECK(error_code([&] { validate(params); }) == ErrorCode::InvalidParams);
}

TEST_CASE("label csv round trips") {
    LabelSet labels;
    labels.labels = {{3, AnomalyKind::Spike}, {7, AnomalyKind::Stuck},
                     {8, AnomalyKind::SurfaceBurst}};
    const auto parsed = parse_labels_csv(write_labels_csv(labels));
    CHECK(parsed.labels == labels.labels);
}

TEST_CASE("feature matrix is p1, p2, p3 and the width mean") {
    const auto made = synth_coil(small_params());
    const FeatureMatrix m = feature_matrix(made.coil);
    REQUIRE(m.rows == made.coil.samples());
    REQUIRE(m.cols == 4);
    for (std::size_t j = 0; j < m.rows; ++j) {
        CHECK(m.at(j, 0) == made.coil.p1[j]);
        CHECK(m.at(j, 1) == made.coil.p2[j]);
        CHECK(m.at(j, 2) == made.coil.p3[j]);
        double mean = 0.0;
        for (double v : made.coil.p4[j]) mean += v;
        mean /= static_cast<double>(made.coil.p4[j].size());
        CHECK(std::abs(m.at(j, 3) - mean) <= 1e-15);
    }
}

TEST_CASE("coil validation accumulates every violation") {
    CoilRecord raw;
    raw.coil_id = "bad";
    raw.sample_step_m = 1.0;
    raw.positions_m = {0.0, 1.0, 1.0};
    raw.p1 = {1.0, 2.0, 3.0};
    raw.p2 = {1.0, 2.0};  // short
    raw.p3 = {1.0, std::numeric_limits<double>::quiet_NaN(), 3.0};
    raw.p4 = {{1.0}, {1.0}, {1.0}};

    const auto issues = validate_coil(raw);
    const auto has = [&](ErrorCode code) {
        return std::any_of(issues.begin(), issues.end(),
                           [&](const ValidationIssue& i) { return i.code == code; });
    };
    CHECK(has(ErrorCode::LengthMismatch));
    CHECK(has(ErrorCode::NonMonotonePositions));
    CHECK(has(ErrorCode::NonFiniteValue));
    CHECK(issues.size() >= 3);
    CHECK(error_code([&] { require_valid(raw); }) != std::nullopt);

    // a valid record passes unchanged, and validating it again stays clean
    const auto good = synth_coil(small_params()).coil;
    CHECK(validate_coil(good).empty());
    const auto same = require_valid(good);
    CHECK(same.p1 == good.p1);
    CHECK(validate_coil(same).empty());
}
