#include "q4/pipeline.hpp"

#include <algorithm>
#include <array>

#include "q4/fucod.hpp"
#include "q4/ingest.hpp"
#include "q4/numfmt.hpp"
#include "q4/plausibility.hpp"

namespace q4::pipeline {

namespace {

constexpr std::array<const char*, 4> kChannels = {"p1", "p2", "p3", "p4"};

ChannelStats make_stats(const std::vector<double>& values, const PvSeries& pv) {
    ChannelStats stats;
    stats.min = values.front();
    stats.max = values.front();
    double sum = 0.0;
    for (double v : values) {
        stats.min = std::min(stats.min, v);
        stats.max = std::max(stats.max, v);
        sum += v;
    }
    stats.mean = sum / static_cast<double>(values.size());
    const auto summary = plaus::pv_summary(pv);
    stats.pv_min = summary.pv_min;
    stats.pv_mean = summary.pv_mean;
    return stats;
}

}  // namespace

QualityRecord qgs_run(const CoilRecord& coil, const docs::RunConfig& config) {
    require_valid(coil);
    for (const auto& [name, tree] : config.channel_trees) {
        if (std::find(kChannels.begin(), kChannels.end(), name) == kChannels.end()) {
            throw Error(ErrorCode::UnknownChannel,
                        "config names channel '" + name + "' outside p1..p4");
        }
        plaus::validate(tree);
    }
    if (config.combined_tree) plaus::validate(*config.combined_tree);

    const FeatureMatrix features = ingest::feature_matrix(coil);
    const fucod::FucodResult engine = fucod::fucod_run(features, config.fucod);

    PvSeries external_pv;
    external_pv.reserve(engine.levels.size());
    for (double level : engine.levels) {
        external_pv.emplace_back(std::clamp(1.0 - level, 0.0, 1.0));
    }

    QualityRecord record;
    record.coil_id = coil.coil_id;
    record.sample_step_m = coil.sample_step_m;
    record.positions_m = coil.positions_m;

    std::vector<plaus::AssessmentNode> combined_children;
    for (std::size_t c = 0; c < kChannels.size(); ++c) {
        const std::string name = kChannels[c];
        const auto it = config.channel_trees.find(name);
        plaus::AssessmentNode tree =
            it != config.channel_trees.end()
                ? it->second
                : plaus::AssessmentNode::leaf(name, plaus::ConstantMeasure{1.0});
        combined_children.push_back(tree);

        ChannelSeries series;
        series.values.reserve(coil.samples());
        for (std::size_t r = 0; r < coil.samples(); ++r) {
            series.values.push_back(features.at(r, c));
        }
        series.pv = plaus::eval_assessment(tree, coil, &external_pv);
        series.summary = make_stats(series.values, series.pv);
        record.channels.emplace(name, std::move(series));
    }

    if (config.combined_tree) {
        record.combined_pv = plaus::eval_assessment(*config.combined_tree, coil, &external_pv);
    } else {
        combined_children.push_back(
            plaus::AssessmentNode::leaf("combined", plaus::DataDrivenMeasure{}));
        const auto combined = plaus::AssessmentNode::combine(plaus::CombineOp::Min,
                                                             std::move(combined_children));
        record.combined_pv = plaus::eval_assessment(combined, coil, &external_pv);
    }

    record.outlier_levels = engine.levels;
    record.detector_scores = engine.scores;
    record.outliers.threshold = config.outlier_level_threshold;
    for (std::size_t i = 0; i < engine.levels.size(); ++i) {
        if (engine.levels[i] >= config.outlier_level_threshold) {
            record.outliers.positions.push_back(static_cast<std::int64_t>(i));
        }
    }
    record.outliers.count = static_cast<std::int64_t>(record.outliers.positions.size());
    record.outliers.fraction = static_cast<double>(record.outliers.count) /
                               static_cast<double>(engine.levels.size());
    return record;
}

std::string write_report_csv(const QualityRecord& record) {
    std::string out = "pos_m";
    for (const auto& [name, series] : record.channels) {
        out += ',';
        out += name;
        out += ',';
        out += name;
        out += "_pv";
    }
    out += ",combined_pv,grubbs,distance,cluster,lof,outlier_level\n";

    for (std::size_t i = 0; i < record.samples(); ++i) {
        out += format_double(record.positions_m[i]);
        for (const auto& [name, series] : record.channels) {
            out += ',';
            out += format_double(series.values[i]);
            out += ',';
            out += format_double(series.pv[i].value());
        }
        out += ',';
        out += format_double(record.combined_pv[i].value());
        const auto& s = record.detector_scores[i];
        out += ',';
        out += format_double(s.grubbs);
        out += ',';
        out += format_double(s.distance);
        out += ',';
        out += format_double(s.cluster);
        out += ',';
        out += format_double(s.lof);
        out += ',';
        out += format_double(record.outlier_levels[i]);
        out += '\n';
    }
    return out;
}

}  // namespace q4::pipeline
