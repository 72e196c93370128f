#pragma once

// Shared domain types for the quality supervision toolkit. Everything here is
// an immutable value type once validated; modules pass them around freely.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace q4 {

enum class ErrorCode {
    // validation
    LengthMismatch,
    NonMonotonePositions,
    NonFiniteValue,
    NonFiniteInput,
    InvalidValue,
    EmptySeries,
    UnknownChannel,
    MissingDataDrivenSource,
    ChannelMismatch,
    // detector preconditions
    TooFewSamples,
    KTooLarge,
    // file formats
    BadHeader,
    BadRow,
    InvalidParams,
    MalformedDocument,
    UnsupportedSchemaVersion,
    MissingField,
    // wire protocol
    BadMagic,
    UnknownType,
    FrameTruncated,
    FrameTooLarge,
    BindFailed,
    ConnectFailed,
    ProtocolError,
    Timeout,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string message);
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Confidence in a quality measurement. 0 = not plausible, 1 = fully
/// reliable. Construction outside [0,1] (or from NaN) is rejected.
class PlausibilityValue {
public:
    explicit PlausibilityValue(double v);
    double value() const noexcept { return v_; }
    bool operator==(const PlausibilityValue&) const = default;

private:
    double v_;
};

using PvSeries = std::vector<PlausibilityValue>;

std::vector<double> to_doubles(const PvSeries& pv);

/// One product's raw measurements: three 1-D channels sampled along the coil
/// length plus a 2-D surface map (length positions x width positions).
struct CoilRecord {
    std::string coil_id;
    double sample_step_m = 0.0;
    std::vector<double> positions_m;
    std::vector<double> p1;
    std::vector<double> p2;
    std::vector<double> p3;
    std::vector<std::vector<double>> p4;  // N rows, each of width W

    std::size_t samples() const noexcept { return positions_m.size(); }
    std::size_t width() const noexcept { return p4.empty() ? 0 : p4.front().size(); }
};

struct ValidationIssue {
    ErrorCode code;
    std::size_t index;
    std::string detail;
};

/// Checks every invariant of a CoilRecord candidate and returns the complete
/// list of violations (empty means valid). Never stops at the first problem.
std::vector<ValidationIssue> validate_coil(const CoilRecord& raw);

/// Convenience wrapper: returns the record unchanged or throws an Error whose
/// message lists every violation.
CoilRecord require_valid(CoilRecord raw);

/// Per-sample feature vectors for the outlier engine. Row-major, generic in
/// column count so detectors can run on test matrices of any dimension; coil
/// features always have exactly 4 columns (p1, p2, p3, width-mean of p4).
struct FeatureMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // rows * cols, row-major

    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }
};

struct ChannelStats {
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
    double pv_min = 0.0;
    double pv_mean = 0.0;
    bool operator==(const ChannelStats&) const = default;
};

struct ChannelSeries {
    std::vector<double> values;
    PvSeries pv;
    ChannelStats summary;
};

/// The four detector scores for one sample, each in [0,1].
struct DetectorScores {
    double grubbs = 0.0;
    double distance = 0.0;
    double cluster = 0.0;
    double lof = 0.0;
};

struct OutlierSummary {
    std::int64_t count = 0;
    double fraction = 0.0;
    double threshold = 0.5;
    std::vector<std::int64_t> positions;  // sample indices with level >= threshold
};

/// Everything the QGS knows about one coil: values, per-channel and combined
/// plausibility series, fused outlier levels and the detector scores behind
/// them (kept for audit).
struct QualityRecord {
    std::string coil_id;
    double sample_step_m = 0.0;
    std::vector<double> positions_m;
    std::map<std::string, ChannelSeries> channels;
    PvSeries combined_pv;
    std::vector<double> outlier_levels;
    std::vector<DetectorScores> detector_scores;
    OutlierSummary outliers;

    std::size_t samples() const noexcept { return positions_m.size(); }
};

struct ToleranceBand {
    double lo = 0.0;
    double hi = 0.0;
};

/// Conditions under which a coil fits an order: tolerance bands per channel,
/// the plausibility gate, and the coverage/sufficiency/outlier limits.
struct OrderSpec {
    std::string order_id;
    std::string customer_id;
    std::map<std::string, ToleranceBand> tolerances;
    double pv_threshold = 0.0;
    double coverage_req = 1.0;
    double data_sufficiency = 0.0;
    double max_outlier_frac = 1.0;
    double outlier_level_threshold = 0.5;
};

/// Throws Error(InvalidValue) on any out-of-range field.
void validate(const OrderSpec& order);

enum class Intimacy { Basic, Standard, Full };

const char* to_string(Intimacy level);
Intimacy intimacy_from_string(const std::string& s);

struct CustomerProfile {
    std::string customer_id;
    Intimacy intimacy = Intimacy::Basic;
};

enum class Verdict { Accept, Reject, InsufficientData };

const char* to_string(Verdict v);
Verdict verdict_from_string(const std::string& s);

struct DecisionReason {
    std::string channel;
    std::string rule;
    double measured = 0.0;
    double limit = 0.0;
};

/// REJECT and INSUFFICIENT_DATA carry at least one reason; ACCEPT carries none.
struct AllocationDecision {
    Verdict verdict = Verdict::Accept;
    std::vector<DecisionReason> reasons;
};

inline constexpr const char* kCertificateSchemaVersion = "q4-cert/1";

struct CertificateChannel {
    ChannelStats stats;
    std::optional<std::vector<double>> values;  // FULL only
    std::optional<std::vector<double>> pv;      // FULL only
    bool operator==(const CertificateChannel&) const = default;
};

struct CertificateOutliers {
    std::int64_t count = 0;
    double fraction = 0.0;
    std::optional<std::vector<std::int64_t>> positions;  // FULL only
    bool operator==(const CertificateOutliers&) const = default;
};

/// The canonical exchanged document of the QXS protocol. Payload detail is
/// bound to the intimacy level: BASIC carries the verdict only, STANDARD adds
/// per-channel aggregates and the outlier summary, FULL adds sample series
/// and outlier positions.
struct QualityCertificate {
    std::string certificate_id;
    std::string coil_id;
    std::string order_id;
    std::string customer_id;
    Intimacy intimacy = Intimacy::Basic;
    Verdict verdict = Verdict::Accept;
    std::int64_t generated_at = 0;  // UTC, whole seconds since epoch
    std::map<std::string, CertificateChannel> channels;     // empty for BASIC
    std::optional<CertificateOutliers> outliers;            // absent for BASIC
    bool operator==(const QualityCertificate&) const = default;
};

enum class FeedbackKind { OutOfTolerance, LowPlausibility, Outlier };

const char* to_string(FeedbackKind k);
FeedbackKind feedback_kind_from_string(const std::string& s);

struct FeedbackItem {
    std::string channel;
    double position_m = 0.0;
    FeedbackKind kind = FeedbackKind::OutOfTolerance;
    double value = 0.0;
    bool operator==(const FeedbackItem&) const = default;
};

struct FeedbackReport {
    std::string certificate_id;
    std::string coil_id;
    std::vector<FeedbackItem> items;
    bool operator==(const FeedbackReport&) const = default;
};

}  // namespace q4
