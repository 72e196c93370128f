#include "q4/qas.hpp"

#include <algorithm>

namespace q4::qas {

namespace {

const ChannelSeries& channel_or_throw(const QualityRecord& record,
                                      const std::string& name) {
    const auto it = record.channels.find(name);
    if (it == record.channels.end()) {
        throw Error(ErrorCode::ChannelMismatch,
                    "order constrains channel '" + name + "' missing from the record");
    }
    return it->second;
}

double outlier_fraction(const QualityRecord& record, double level_threshold) {
    if (record.outlier_levels.empty()) return 0.0;
    std::size_t count = 0;
    for (double level : record.outlier_levels) {
        if (level >= level_threshold) ++count;
    }
    return static_cast<double>(count) / static_cast<double>(record.outlier_levels.size());
}

}  // namespace

AllocationDecision allocate(const QualityRecord& record, const OrderSpec& order) {
    validate(order);
    const auto n = static_cast<double>(record.samples());

    AllocationDecision decision;
    for (const auto& [name, band] : order.tolerances) {
        const ChannelSeries& ch = channel_or_throw(record, name);
        std::size_t plausible = 0;
        for (const auto& pv : ch.pv) {
            if (pv.value() >= order.pv_threshold) ++plausible;
        }
        const double share = n > 0.0 ? static_cast<double>(plausible) / n : 0.0;
        if (share < order.data_sufficiency) {
            decision.reasons.push_back(
                {name, kRuleDataSufficiency, share, order.data_sufficiency});
        }
        (void)band;
    }
    if (!decision.reasons.empty()) {
        decision.verdict = Verdict::InsufficientData;
        return decision;
    }

    for (const auto& [name, band] : order.tolerances) {
        const ChannelSeries& ch = channel_or_throw(record, name);
        std::size_t plausible = 0;
        std::size_t in_band = 0;
        for (std::size_t i = 0; i < ch.values.size(); ++i) {
            if (ch.pv[i].value() < order.pv_threshold) continue;
            ++plausible;
            if (ch.values[i] >= band.lo && ch.values[i] <= band.hi) ++in_band;
        }
        // No plausible samples means nothing contradicts the band.
        const double coverage =
            plausible == 0 ? 1.0
                           : static_cast<double>(in_band) / static_cast<double>(plausible);
        if (coverage < order.coverage_req) {
            decision.reasons.push_back(
                {name, kRuleToleranceCoverage, coverage, order.coverage_req});
        }
    }
    const double frac = outlier_fraction(record, order.outlier_level_threshold);
    if (frac > order.max_outlier_frac) {
        decision.reasons.push_back(
            {kCombinedChannel, kRuleOutlierFraction, frac, order.max_outlier_frac});
    }
    decision.verdict = decision.reasons.empty() ? Verdict::Accept : Verdict::Reject;
    return decision;
}

CertificatePayload select_payload(const QualityRecord& record,
                                  const AllocationDecision& decision,
                                  const CustomerProfile& profile) {
    CertificatePayload payload;
    payload.verdict = decision.verdict;
    if (profile.intimacy == Intimacy::Basic) {
        return payload;
    }

    for (const auto& [name, series] : record.channels) {
        CertificateChannel ch;
        ch.stats = series.summary;
        if (profile.intimacy == Intimacy::Full) {
            ch.values = series.values;
            ch.pv = to_doubles(series.pv);
        }
        payload.channels.emplace(name, std::move(ch));
    }

    CertificateOutliers outliers;
    outliers.count = record.outliers.count;
    outliers.fraction = record.outliers.fraction;
    if (profile.intimacy == Intimacy::Full) {
        outliers.positions = record.outliers.positions;
    }
    payload.outliers = std::move(outliers);
    return payload;
}

QualityCertificate build_certificate(const QualityRecord& record,
                                     const AllocationDecision& decision,
                                     const CustomerProfile& profile,
                                     const OrderSpec& order,
                                     std::string certificate_id,
                                     std::int64_t generated_at) {
    CertificatePayload payload = select_payload(record, decision, profile);

    QualityCertificate cert;
    cert.certificate_id = std::move(certificate_id);
    cert.coil_id = record.coil_id;
    cert.order_id = order.order_id;
    cert.customer_id = profile.customer_id;
    cert.intimacy = profile.intimacy;
    cert.verdict = payload.verdict;
    cert.generated_at = generated_at;
    cert.channels = std::move(payload.channels);
    cert.outliers = std::move(payload.outliers);
    return cert;
}

FeedbackReport build_feedback(const QualityRecord& record, const OrderSpec& order) {
    validate(order);

    FeedbackReport report;
    report.coil_id = record.coil_id;

    for (const auto& [name, band] : order.tolerances) {
        const ChannelSeries& ch = channel_or_throw(record, name);
        for (std::size_t i = 0; i < ch.values.size(); ++i) {
            const double pv = ch.pv[i].value();
            if (pv < order.pv_threshold) {
                report.items.push_back(
                    {name, record.positions_m[i], FeedbackKind::LowPlausibility, pv});
            } else if (ch.values[i] < band.lo || ch.values[i] > band.hi) {
                report.items.push_back(
                    {name, record.positions_m[i], FeedbackKind::OutOfTolerance,
                     ch.values[i]});
            }
        }
    }

    for (std::size_t i = 0; i < record.outlier_levels.size(); ++i) {
        if (record.outlier_levels[i] >= order.outlier_level_threshold) {
            report.items.push_back({kCombinedChannel, record.positions_m[i],
                                    FeedbackKind::Outlier, record.outlier_levels[i]});
        }
    }

    std::stable_sort(report.items.begin(), report.items.end(),
                     [](const FeedbackItem& a, const FeedbackItem& b) {
                         if (a.position_m != b.position_m) {
                             return a.position_m < b.position_m;
                         }
                         return a.channel < b.channel;
                     });
    return report;
}

}  // namespace q4::qas
