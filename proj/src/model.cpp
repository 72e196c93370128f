#include "q4/model.hpp"

#include <cmath>
#include <sstream>

namespace q4 {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::LengthMismatch: return "LENGTH_MISMATCH";
        case ErrorCode::NonMonotonePositions: return "NON_MONOTONE_POSITIONS";
        case ErrorCode::NonFiniteValue: return "NON_FINITE_VALUE";
        case ErrorCode::NonFiniteInput: return "NON_FINITE_INPUT";
        case ErrorCode::InvalidValue: return "INVALID_VALUE";
        case ErrorCode::EmptySeries: return "EMPTY_SERIES";
        case ErrorCode::UnknownChannel: return "UNKNOWN_CHANNEL";
        case ErrorCode::MissingDataDrivenSource: return "MISSING_DATA_DRIVEN_SOURCE";
        case ErrorCode::ChannelMismatch: return "CHANNEL_MISMATCH";
        case ErrorCode::TooFewSamples: return "TOO_FEW_SAMPLES";
        case ErrorCode::KTooLarge: return "K_TOO_LARGE";
        case ErrorCode::BadHeader: return "BAD_HEADER";
        case ErrorCode::BadRow: return "BAD_ROW";
        case ErrorCode::InvalidParams: return "INVALID_PARAMS";
        case ErrorCode::MalformedDocument: return "MALFORMED_DOCUMENT";
        case ErrorCode::UnsupportedSchemaVersion: return "UNSUPPORTED_SCHEMA_VERSION";
        case ErrorCode::MissingField: return "MISSING_FIELD";
        case ErrorCode::BadMagic: return "BAD_MAGIC";
        case ErrorCode::UnknownType: return "UNKNOWN_TYPE";
        case ErrorCode::FrameTruncated: return "FRAME_TRUNCATED";
        case ErrorCode::FrameTooLarge: return "FRAME_TOO_LARGE";
        case ErrorCode::BindFailed: return "BIND_FAILED";
        case ErrorCode::ConnectFailed: return "CONNECT_FAILED";
        case ErrorCode::ProtocolError: return "PROTOCOL_ERROR";
        case ErrorCode::Timeout: return "TIMEOUT";
    }
    return "UNKNOWN_ERROR";
}

Error::Error(ErrorCode code, std::string message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

PlausibilityValue::PlausibilityValue(double v) : v_(v) {
    if (!(v >= 0.0 && v <= 1.0)) {
        throw Error(ErrorCode::InvalidValue,
                    "plausibility value " + std::to_string(v) + " outside [0,1]");
    }
}

std::vector<double> to_doubles(const PvSeries& pv) {
    std::vector<double> out;
    out.reserve(pv.size());
    for (const auto& v : pv) out.push_back(v.value());
    return out;
}

namespace {

void check_finite(const std::vector<double>& series, const char* name,
                  std::vector<ValidationIssue>& issues) {
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (!std::isfinite(series[i])) {
            issues.push_back({ErrorCode::NonFiniteValue, i,
                              std::string(name) + "[" + std::to_string(i) + "]"});
        }
    }
}

}  // namespace

std::vector<ValidationIssue> validate_coil(const CoilRecord& raw) {
    std::vector<ValidationIssue> issues;
    const std::size_t n = raw.positions_m.size();

    if (n == 0) {
        issues.push_back({ErrorCode::LengthMismatch, 0, "positions_m is empty (N must be >= 1)"});
    }
    if (!(raw.sample_step_m > 0.0) || !std::isfinite(raw.sample_step_m)) {
        issues.push_back({ErrorCode::InvalidValue, 0, "sample_step_m must be finite and > 0"});
    }

    auto check_len = [&](const std::vector<double>& s, const char* name) {
        if (s.size() != n) {
            issues.push_back({ErrorCode::LengthMismatch, s.size(),
                              std::string(name) + " has " + std::to_string(s.size()) +
                                  " samples, expected " + std::to_string(n)});
        }
    };
    check_len(raw.p1, "p1");
    check_len(raw.p2, "p2");
    check_len(raw.p3, "p3");
    if (raw.p4.size() != n) {
        issues.push_back({ErrorCode::LengthMismatch, raw.p4.size(),
                          "p4 has " + std::to_string(raw.p4.size()) + " rows, expected " +
                              std::to_string(n)});
    }

    const std::size_t w = raw.p4.empty() ? 0 : raw.p4.front().size();
    if (!raw.p4.empty() && w == 0) {
        issues.push_back({ErrorCode::LengthMismatch, 0, "p4 width must be >= 1"});
    }
    for (std::size_t i = 0; i < raw.p4.size(); ++i) {
        if (raw.p4[i].size() != w) {
            issues.push_back({ErrorCode::LengthMismatch, i,
                              "p4 row " + std::to_string(i) + " has width " +
                                  std::to_string(raw.p4[i].size()) + ", expected " +
                                  std::to_string(w)});
        }
    }

    // Strictly increasing positions; duplicates are rejected so downstream
    // window logic can assume ordered, unique positions.
    for (std::size_t i = 1; i < raw.positions_m.size(); ++i) {
        if (!(raw.positions_m[i] > raw.positions_m[i - 1])) {
            issues.push_back({ErrorCode::NonMonotonePositions, i,
                              "positions_m[" + std::to_string(i) + "] does not increase"});
        }
    }

    check_finite(raw.positions_m, "positions_m", issues);
    check_finite(raw.p1, "p1", issues);
    check_finite(raw.p2, "p2", issues);
    check_finite(raw.p3, "p3", issues);
    for (std::size_t i = 0; i < raw.p4.size(); ++i) {
        for (std::size_t j = 0; j < raw.p4[i].size(); ++j) {
            if (!std::isfinite(raw.p4[i][j])) {
                issues.push_back({ErrorCode::NonFiniteValue, i,
                                  "p4[" + std::to_string(i) + "][" + std::to_string(j) + "]"});
            }
        }
    }

    return issues;
}

CoilRecord require_valid(CoilRecord raw) {
    auto issues = validate_coil(raw);
    if (!issues.empty()) {
        std::ostringstream msg;
        msg << "coil '" << raw.coil_id << "' has " << issues.size() << " violation(s):";
        for (const auto& issue : issues) {
            msg << "\n  " << to_string(issue.code) << " at index " << issue.index << ": "
                << issue.detail;
        }
        throw Error(issues.front().code, msg.str());
    }
    return raw;
}

void validate(const OrderSpec& order) {
    auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in_unit(order.pv_threshold)) {
        throw Error(ErrorCode::InvalidValue, "pv_threshold outside [0,1]");
    }
    if (!in_unit(order.coverage_req)) {
        throw Error(ErrorCode::InvalidValue, "coverage_req outside [0,1]");
    }
    if (!in_unit(order.data_sufficiency)) {
        throw Error(ErrorCode::InvalidValue, "data_sufficiency outside [0,1]");
    }
    if (!in_unit(order.max_outlier_frac)) {
        throw Error(ErrorCode::InvalidValue, "max_outlier_frac outside [0,1]");
    }
    if (!in_unit(order.outlier_level_threshold)) {
        throw Error(ErrorCode::InvalidValue, "outlier_level_threshold outside [0,1]");
    }
    for (const auto& [name, band] : order.tolerances) {
        if (!std::isfinite(band.lo) || !std::isfinite(band.hi) || band.lo > band.hi) {
            throw Error(ErrorCode::InvalidValue, "tolerance band for " + name + " invalid");
        }
    }
}

const char* to_string(Intimacy level) {
    switch (level) {
        case Intimacy::Basic: return "BASIC";
        case Intimacy::Standard: return "STANDARD";
        case Intimacy::Full: return "FULL";
    }
    return "BASIC";
}

Intimacy intimacy_from_string(const std::string& s) {
    if (s == "BASIC") return Intimacy::Basic;
    if (s == "STANDARD") return Intimacy::Standard;
    if (s == "FULL") return Intimacy::Full;
    throw Error(ErrorCode::InvalidValue, "unknown intimacy level '" + s + "'");
}

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Accept: return "ACCEPT";
        case Verdict::Reject: return "REJECT";
        case Verdict::InsufficientData: return "INSUFFICIENT_DATA";
    }
    return "REJECT";
}

Verdict verdict_from_string(const std::string& s) {
    if (s == "ACCEPT") return Verdict::Accept;
    if (s == "REJECT") return Verdict::Reject;
    if (s == "INSUFFICIENT_DATA") return Verdict::InsufficientData;
    throw Error(ErrorCode::InvalidValue, "unknown verdict '" + s + "'");
}

const char* to_string(FeedbackKind k) {
    switch (k) {
        case FeedbackKind::OutOfTolerance: return "OUT_OF_TOLERANCE";
        case FeedbackKind::LowPlausibility: return "LOW_PLAUSIBILITY";
        case FeedbackKind::Outlier: return "OUTLIER";
    }
    return "OUTLIER";
}

FeedbackKind feedback_kind_from_string(const std::string& s) {
    if (s == "OUT_OF_TOLERANCE") return FeedbackKind::OutOfTolerance;
    if (s == "LOW_PLAUSIBILITY") return FeedbackKind::LowPlausibility;
    if (s == "OUTLIER") return FeedbackKind::Outlier;
    throw Error(ErrorCode::InvalidValue, "unknown feedback kind '" + s + "'");
}

}  // namespace q4
