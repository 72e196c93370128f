#pragma once

// Order allocation: decides whether a quality record satisfies an order,
// selects how much of the record a customer may see, and compiles feedback
// for the supplier.

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "q4/model.hpp"

namespace q4::qas {

/// Rule names used in decision reasons.
inline constexpr const char* kRuleDataSufficiency = "DATA_SUFFICIENCY";
inline constexpr const char* kRuleToleranceCoverage = "TOLERANCE_COVERAGE";
inline constexpr const char* kRuleOutlierFraction = "OUTLIER_FRACTION";

/// The channel name carried by record-wide (not per-channel) reasons and
/// feedback items.
inline constexpr const char* kCombinedChannel = "combined";

/// Decides in two phases over the channels the order constrains. Phase 1:
/// any channel whose plausible-sample share (PV >= pv_threshold) falls below
/// data_sufficiency makes the verdict INSUFFICIENT_DATA. Phase 2: any channel
/// whose in-tolerance fraction among plausible samples falls below
/// coverage_req, or an overall outlier fraction above max_outlier_frac,
/// makes it REJECT. Every violated rule of the deciding phase is reported.
/// Throws Error(ChannelMismatch) if the order names a channel the record
/// does not carry.
AllocationDecision allocate(const QualityRecord& record, const OrderSpec& order);

/// What a certificate carries before identity fields are attached. Content
/// grows strictly with intimacy: BASIC is the verdict alone, STANDARD adds
/// per-channel aggregates and the outlier summary, FULL adds the sample
/// series and outlier positions.
struct CertificatePayload {
    Verdict verdict = Verdict::Accept;
    std::map<std::string, CertificateChannel> channels;
    std::optional<CertificateOutliers> outliers;
};

CertificatePayload select_payload(const QualityRecord& record,
                                  const AllocationDecision& decision,
                                  const CustomerProfile& profile);

/// Payload plus identity fields, ready for encoding and transmission.
QualityCertificate build_certificate(const QualityRecord& record,
                                     const AllocationDecision& decision,
                                     const CustomerProfile& profile,
                                     const OrderSpec& order,
                                     std::string certificate_id,
                                     std::int64_t generated_at);

/// One item per offending sample and constrained channel: LOW_PLAUSIBILITY
/// where PV < pv_threshold (this gate wins over the tolerance check),
/// OUT_OF_TOLERANCE where a plausible value leaves its band, plus one
/// OUTLIER item per sample at or above the order's outlier level threshold.
/// Items are sorted by position, then channel name.
FeedbackReport build_feedback(const QualityRecord& record, const OrderSpec& order);

}  // namespace q4::qas
