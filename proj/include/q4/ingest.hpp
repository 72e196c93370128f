#pragma once

// Coil CSV parsing/serialization, the 4-column feature construction for the
// outlier engine, and a deterministic synthetic-coil generator that also
// emits ground-truth anomaly labels.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "q4/model.hpp"

namespace q4::ingest {

enum class AnomalyKind { Spike, Stuck, SurfaceBurst };

const char* to_string(AnomalyKind kind);
AnomalyKind anomaly_kind_from_string(const std::string& s);

/// One injected defect. SPIKE and STUCK act on a 1-D channel (p1/p2/p3);
/// SURFACE_BURST acts on the p4 map over a full-width run of rows.
struct AnomalySpec {
    AnomalyKind kind = AnomalyKind::Spike;
    std::string channel = "p1";
    std::size_t start = 0;
    std::size_t length = 1;       // SPIKE requires 1
    double magnitude_sigma = 0.0; // offset in units of the channel sigma
};

struct ChannelParams {
    double base = 0.0;
    double amplitude = 0.0;     // sine amplitude
    double period = 1000.0;     // sine period in samples
    double sigma = 1.0;         // Gaussian noise level
};

struct SynthParams {
    std::uint64_t seed = 42;
    std::size_t n_samples = 10000;
    std::size_t width_positions = 64;
    std::string coil_id = "synthetic";
    double sample_step_m = 0.5;
    ChannelParams p1{100.0, 6.0, 997.0, 1.0};
    ChannelParams p2{50.0, 5.0, 1409.0, 0.8};
    ChannelParams p3{200.0, 12.0, 1999.0, 2.0};
    ChannelParams p4{5.0, 0.8, 1201.0, 0.6};  // per surface cell
    std::vector<AnomalySpec> anomalies;
};

/// Throws Error(InvalidParams) on out-of-range fields or anomalies.
void validate(const SynthParams& params);

struct Label {
    std::size_t index = 0;
    AnomalyKind kind = AnomalyKind::Spike;
    bool operator==(const Label&) const = default;
};

struct LabelSet {
    std::vector<Label> labels;
};

/// Parses the coil CSV format and returns a fully validated record.
/// Throws Error(BadHeader) or Error(BadRow) with the 1-based line number,
/// plus any model validation error.
CoilRecord parse_coil_csv(const std::string& bytes);

/// Canonical emission: header line, column header, one row per sample,
/// shortest round-trip decimals, LF endings, exactly one LF after the last
/// row. parse_coil_csv inverts it bit-exactly.
std::string write_coil_csv(const CoilRecord& coil);

/// Row j = (p1_j, p2_j, p3_j, width-mean of p4 row j).
FeatureMatrix feature_matrix(const CoilRecord& coil);

struct SynthResult {
    CoilRecord coil;
    LabelSet labels;
};

/// Deterministic generator: channels are base + amplitude*sin(2*pi*j/period)
/// + sigma*gauss, rounded to 9 significant digits, then anomalies applied on
/// top (they draw no randomness). Same params always give identical bytes.
SynthResult synth_coil(const SynthParams& params);

std::string write_labels_csv(const LabelSet& labels);
LabelSet parse_labels_csv(const std::string& bytes);

}  // namespace q4::ingest
