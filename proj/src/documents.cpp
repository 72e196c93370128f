#include "q4/documents.hpp"

#include <algorithm>

#include "q4/canon.hpp"

namespace q4::docs {

using nlohmann::json;

using canon::check_keys;
using canon::get_integer;
using canon::get_number;
using canon::get_number_array;
using canon::get_string;
using canon::malformed;

namespace {

json measure_to_json(const plaus::MeasureSpec& spec) {
    json j;
    std::visit(
        [&j](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, plaus::ConstantMeasure>) {
                j["type"] = "constant";
                j["p"] = m.p;
            } else if constexpr (std::is_same_v<T, plaus::ThresholdMeasure>) {
                j["type"] = "threshold";
                j["t_min"] = m.t_min;
                j["t_max"] = m.t_max;
            } else if constexpr (std::is_same_v<T, plaus::FuzzyMeasure>) {
                j["type"] = "fuzzy";
                j["t0"] = m.t0;
                j["t1"] = m.t1;
                j["t2"] = m.t2;
                j["t3"] = m.t3;
            } else if constexpr (std::is_same_v<T, plaus::VariationMeasure>) {
                j["type"] = "variation";
                j["n"] = static_cast<std::int64_t>(m.n);
            } else {
                j["type"] = "data_driven";
                j["source"] = m.source;
            }
        },
        spec);
    return j;
}

plaus::MeasureSpec measure_from_json(const json& j) {
    if (!j.is_object()) malformed("measure must be an object");
    const std::string type = get_string(j, "type");
    plaus::MeasureSpec spec;
    if (type == "constant") {
        check_keys(j, {"p", "type"}, "constant measure");
        spec = plaus::ConstantMeasure{get_number(j.at("p"), "p")};
    } else if (type == "threshold") {
        check_keys(j, {"t_max", "t_min", "type"}, "threshold measure");
        spec = plaus::ThresholdMeasure{get_number(j.at("t_min"), "t_min"),
                                       get_number(j.at("t_max"), "t_max")};
    } else if (type == "fuzzy") {
        check_keys(j, {"t0", "t1", "t2", "t3", "type"}, "fuzzy measure");
        spec = plaus::FuzzyMeasure{get_number(j.at("t0"), "t0"), get_number(j.at("t1"), "t1"),
                                   get_number(j.at("t2"), "t2"), get_number(j.at("t3"), "t3")};
    } else if (type == "variation") {
        check_keys(j, {"n", "type"}, "variation measure");
        const std::int64_t n = get_integer(j.at("n"), "n");
        if (n < 0) malformed("'n' must be non-negative");
        spec = plaus::VariationMeasure{static_cast<std::size_t>(n)};
    } else if (type == "data_driven") {
        check_keys(j, {"source", "type"}, "data_driven measure");
        spec = plaus::DataDrivenMeasure{get_string(j, "source")};
    } else {
        malformed("unknown measure type '" + type + "'");
    }
    plaus::validate(spec);
    return spec;
}

}  // namespace

json assessment_to_json(const plaus::AssessmentNode& tree) {
    json j;
    if (tree.is_leaf()) {
        const auto& leaf = tree.as_leaf();
        json inner;
        inner["channel"] = leaf.channel;
        inner["measure"] = measure_to_json(leaf.measure);
        j["leaf"] = std::move(inner);
        return j;
    }
    const auto& node = tree.as_combine();
    json inner;
    inner["op"] = plaus::to_string(node.op);
    json children = json::array();
    for (const auto& child : node.children) children.push_back(assessment_to_json(child));
    inner["children"] = std::move(children);
    if (!node.weights.empty()) inner["weights"] = node.weights;
    j["combine"] = std::move(inner);
    return j;
}

plaus::AssessmentNode assessment_from_json(const json& j) {
    if (!j.is_object()) malformed("assessment node must be an object");
    if (j.contains("leaf")) {
        check_keys(j, {"leaf"}, "assessment node");
        const json& leaf = j.at("leaf");
        if (!leaf.is_object()) malformed("'leaf' must be an object");
        check_keys(leaf, {"channel", "measure"}, "leaf");
        return plaus::AssessmentNode::leaf(get_string(leaf, "channel"),
                                           measure_from_json(leaf.at("measure")));
    }
    if (!j.contains("combine")) {
        malformed("assessment node needs 'leaf' or 'combine'");
    }
    check_keys(j, {"combine"}, "assessment node");
    const json& node = j.at("combine");
    if (!node.is_object()) malformed("'combine' must be an object");
    for (const auto& item : node.items()) {
        if (item.key() != "op" && item.key() != "children" && item.key() != "weights") {
            malformed("unexpected field '" + item.key() + "' in combine node");
        }
    }
    if (!node.contains("children")) {
        throw Error(ErrorCode::MissingField, "combine node lacks 'children'");
    }

    plaus::CombineOp op = plaus::CombineOp::Min;
    if (node.contains("op")) {
        try {
            op = plaus::combine_op_from_string(get_string(node, "op"));
        } catch (const Error& e) {
            if (e.code() == ErrorCode::MalformedDocument) throw;
            malformed(e.what());
        }
    }
    const json& children = node.at("children");
    if (!children.is_array()) malformed("'children' must be an array");
    std::vector<plaus::AssessmentNode> parsed;
    parsed.reserve(children.size());
    for (const auto& child : children) parsed.push_back(assessment_from_json(child));

    std::vector<double> weights;
    if (node.contains("weights")) {
        weights = get_number_array(node.at("weights"), "weights");
    }
    auto tree = plaus::AssessmentNode::combine(op, std::move(parsed), std::move(weights));
    plaus::validate(tree);
    return tree;
}

RunConfig parse_run_config(const std::string& bytes) {
    const json j = canon::parse_object(bytes);
    for (const auto& item : j.items()) {
        if (item.key() != "assessment" && item.key() != "fucod" &&
            item.key() != "outlier_level_threshold") {
            malformed("unexpected field '" + item.key() + "' in run config");
        }
    }

    RunConfig config;
    if (j.contains("fucod")) {
        const json& f = j.at("fucod");
        if (!f.is_object()) malformed("'fucod' must be an object");
        for (const auto& item : f.items()) {
            const std::string& key = item.key();
            if (key == "alpha") {
                config.fucod.alpha = get_number(item.value(), key);
            } else if (key == "k_nn" || key == "k_clusters") {
                const std::int64_t v = get_integer(item.value(), key);
                if (v < 0) malformed("'" + key + "' must be non-negative");
                (key == "k_nn" ? config.fucod.k_nn : config.fucod.k_clusters) =
                    static_cast<std::size_t>(v);
            } else if (key == "lof_cap") {
                config.fucod.lof_cap = get_number(item.value(), key);
            } else if (key == "robust_spread_mult") {
                config.fucod.robust_spread_mult = get_number(item.value(), key);
            } else if (key == "eps") {
                config.fucod.eps = get_number(item.value(), key);
            } else {
                malformed("unexpected field '" + key + "' in fucod config");
            }
        }
        try {
            fucod::validate(config.fucod);
        } catch (const Error& e) {
            malformed(e.what());
        }
    }
    if (j.contains("assessment")) {
        const json& a = j.at("assessment");
        if (!a.is_object()) malformed("'assessment' must be an object");
        for (const auto& item : a.items()) {
            if (item.key() == "channels") {
                if (!item.value().is_object()) malformed("'channels' must be an object");
                for (const auto& ch : item.value().items()) {
                    config.channel_trees.emplace(ch.key(), assessment_from_json(ch.value()));
                }
            } else if (item.key() == "combined") {
                config.combined_tree = assessment_from_json(item.value());
            } else {
                malformed("unexpected field '" + item.key() + "' in assessment config");
            }
        }
    }
    if (j.contains("outlier_level_threshold")) {
        config.outlier_level_threshold =
            get_number(j.at("outlier_level_threshold"), "outlier_level_threshold");
        if (!(config.outlier_level_threshold >= 0.0 &&
              config.outlier_level_threshold <= 1.0)) {
            malformed("'outlier_level_threshold' must lie in [0,1]");
        }
    }
    return config;
}

std::string write_run_config(const RunConfig& config) {
    json j;
    json f;
    f["alpha"] = config.fucod.alpha;
    f["k_nn"] = static_cast<std::int64_t>(config.fucod.k_nn);
    f["k_clusters"] = static_cast<std::int64_t>(config.fucod.k_clusters);
    f["lof_cap"] = config.fucod.lof_cap;
    f["robust_spread_mult"] = config.fucod.robust_spread_mult;
    f["eps"] = config.fucod.eps;
    j["fucod"] = std::move(f);

    json a = json::object();
    if (!config.channel_trees.empty()) {
        json channels = json::object();
        for (const auto& [name, tree] : config.channel_trees) {
            channels[name] = assessment_to_json(tree);
        }
        a["channels"] = std::move(channels);
    }
    if (config.combined_tree) {
        a["combined"] = assessment_to_json(*config.combined_tree);
    }
    if (!a.empty()) j["assessment"] = std::move(a);
    j["outlier_level_threshold"] = config.outlier_level_threshold;
    return canon::canonical_dump(j);
}

namespace {

json stats_to_json(const ChannelStats& stats) {
    json j;
    j["mean"] = stats.mean;
    j["min"] = stats.min;
    j["max"] = stats.max;
    j["pv_min"] = stats.pv_min;
    j["pv_mean"] = stats.pv_mean;
    return j;
}

ChannelStats stats_from_json(const json& j, const std::string& where) {
    if (!j.is_object()) malformed("'" + where + "' must be an object");
    check_keys(j, {"max", "mean", "min", "pv_mean", "pv_min"}, where);
    ChannelStats stats;
    stats.mean = get_number(j.at("mean"), "mean");
    stats.min = get_number(j.at("min"), "min");
    stats.max = get_number(j.at("max"), "max");
    stats.pv_min = get_number(j.at("pv_min"), "pv_min");
    stats.pv_mean = get_number(j.at("pv_mean"), "pv_mean");
    return stats;
}

PvSeries pv_from_doubles(const std::vector<double>& values) {
    PvSeries pv;
    pv.reserve(values.size());
    for (double v : values) {
        try {
            pv.emplace_back(v);
        } catch (const Error& e) {
            malformed(e.what());
        }
    }
    return pv;
}

}  // namespace

std::string encode_record(const QualityRecord& record) {
    json j;
    j["schema_version"] = kRecordSchemaVersion;
    j["coil_id"] = record.coil_id;
    j["sample_step_m"] = record.sample_step_m;
    j["positions_m"] = record.positions_m;

    json channels = json::object();
    for (const auto& [name, series] : record.channels) {
        json c;
        c["values"] = series.values;
        c["pv"] = to_doubles(series.pv);
        c["summary"] = stats_to_json(series.summary);
        channels[name] = std::move(c);
    }
    j["channels"] = std::move(channels);
    j["combined_pv"] = to_doubles(record.combined_pv);
    j["outlier_levels"] = record.outlier_levels;

    json scores;
    std::vector<double> g, d, c, l;
    g.reserve(record.detector_scores.size());
    d.reserve(record.detector_scores.size());
    c.reserve(record.detector_scores.size());
    l.reserve(record.detector_scores.size());
    for (const auto& s : record.detector_scores) {
        g.push_back(s.grubbs);
        d.push_back(s.distance);
        c.push_back(s.cluster);
        l.push_back(s.lof);
    }
    scores["grubbs"] = std::move(g);
    scores["distance"] = std::move(d);
    scores["cluster"] = std::move(c);
    scores["lof"] = std::move(l);
    j["detector_scores"] = std::move(scores);

    json outliers;
    outliers["count"] = record.outliers.count;
    outliers["fraction"] = record.outliers.fraction;
    outliers["threshold"] = record.outliers.threshold;
    outliers["positions"] = record.outliers.positions;
    j["outliers"] = std::move(outliers);
    return canon::canonical_dump(j);
}

QualityRecord decode_record(const std::string& bytes) {
    const json j = canon::parse_object(bytes);
    if (!j.contains("schema_version")) {
        throw Error(ErrorCode::MissingField, "record lacks 'schema_version'");
    }
    const std::string version = get_string(j, "schema_version");
    if (version != kRecordSchemaVersion) {
        throw Error(ErrorCode::UnsupportedSchemaVersion,
                    "unsupported record schema '" + version + "'");
    }
    check_keys(j,
               {"channels", "coil_id", "combined_pv", "detector_scores", "outlier_levels",
                "outliers", "positions_m", "sample_step_m", "schema_version"},
               "record");

    QualityRecord record;
    record.coil_id = get_string(j, "coil_id");
    record.sample_step_m = get_number(j.at("sample_step_m"), "sample_step_m");
    record.positions_m = get_number_array(j.at("positions_m"), "positions_m");

    const json& channels = j.at("channels");
    if (!channels.is_object()) malformed("'channels' must be an object");
    for (const auto& item : channels.items()) {
        const json& c = item.value();
        if (!c.is_object()) malformed("channel '" + item.key() + "' must be an object");
        check_keys(c, {"pv", "summary", "values"}, "channel '" + item.key() + "'");
        ChannelSeries series;
        series.values = get_number_array(c.at("values"), "values");
        series.pv = pv_from_doubles(get_number_array(c.at("pv"), "pv"));
        series.summary = stats_from_json(c.at("summary"), "summary");
        if (series.values.size() != series.pv.size() ||
            series.values.size() != record.positions_m.size()) {
            malformed("channel '" + item.key() + "' series lengths disagree");
        }
        record.channels.emplace(item.key(), std::move(series));
    }

    record.combined_pv = pv_from_doubles(get_number_array(j.at("combined_pv"), "combined_pv"));
    record.outlier_levels = get_number_array(j.at("outlier_levels"), "outlier_levels");

    const json& scores = j.at("detector_scores");
    if (!scores.is_object()) malformed("'detector_scores' must be an object");
    check_keys(scores, {"cluster", "distance", "grubbs", "lof"}, "detector_scores");
    const auto g = get_number_array(scores.at("grubbs"), "grubbs");
    const auto d = get_number_array(scores.at("distance"), "distance");
    const auto c = get_number_array(scores.at("cluster"), "cluster");
    const auto l = get_number_array(scores.at("lof"), "lof");
    if (g.size() != d.size() || g.size() != c.size() || g.size() != l.size()) {
        malformed("detector score arrays must share one length");
    }
    record.detector_scores.reserve(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        record.detector_scores.push_back({g[i], d[i], c[i], l[i]});
    }

    const json& outliers = j.at("outliers");
    if (!outliers.is_object()) malformed("'outliers' must be an object");
    check_keys(outliers, {"count", "fraction", "positions", "threshold"}, "outliers");
    record.outliers.count = get_integer(outliers.at("count"), "count");
    record.outliers.fraction = get_number(outliers.at("fraction"), "fraction");
    record.outliers.threshold = get_number(outliers.at("threshold"), "threshold");
    const json& positions = outliers.at("positions");
    if (!positions.is_array()) malformed("'positions' must be an array");
    for (const auto& p : positions) {
        record.outliers.positions.push_back(get_integer(p, "positions"));
    }

    if (record.combined_pv.size() != record.positions_m.size() ||
        record.outlier_levels.size() != record.positions_m.size() ||
        record.detector_scores.size() != record.positions_m.size()) {
        malformed("record series lengths disagree");
    }
    return record;
}

std::string encode_order(const OrderSpec& order) {
    validate(order);
    json j;
    j["schema_version"] = kOrderSchemaVersion;
    j["order_id"] = order.order_id;
    j["customer_id"] = order.customer_id;
    json tolerances = json::object();
    for (const auto& [name, band] : order.tolerances) {
        json b;
        b["lo"] = band.lo;
        b["hi"] = band.hi;
        tolerances[name] = std::move(b);
    }
    j["tolerances"] = std::move(tolerances);
    j["pv_threshold"] = order.pv_threshold;
    j["coverage_req"] = order.coverage_req;
    j["data_sufficiency"] = order.data_sufficiency;
    j["max_outlier_frac"] = order.max_outlier_frac;
    j["outlier_level_threshold"] = order.outlier_level_threshold;
    return canon::canonical_dump(j);
}

OrderSpec decode_order(const std::string& bytes) {
    const json j = canon::parse_object(bytes);
    if (!j.contains("schema_version")) {
        throw Error(ErrorCode::MissingField, "order lacks 'schema_version'");
    }
    const std::string version = get_string(j, "schema_version");
    if (version != kOrderSchemaVersion) {
        throw Error(ErrorCode::UnsupportedSchemaVersion,
                    "unsupported order schema '" + version + "'");
    }
    for (const auto& item : j.items()) {
        static const std::vector<std::string> allowed = {
            "coverage_req",     "customer_id",      "data_sufficiency",
            "max_outlier_frac", "order_id",         "outlier_level_threshold",
            "pv_threshold",     "schema_version",   "tolerances"};
        if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
            malformed("unexpected field '" + item.key() + "' in order");
        }
    }
    for (const char* key : {"order_id", "customer_id", "tolerances", "pv_threshold",
                            "coverage_req", "data_sufficiency", "max_outlier_frac"}) {
        if (!j.contains(key)) {
            throw Error(ErrorCode::MissingField, std::string("order lacks '") + key + "'");
        }
    }

    OrderSpec order;
    order.order_id = get_string(j, "order_id");
    order.customer_id = get_string(j, "customer_id");
    const json& tolerances = j.at("tolerances");
    if (!tolerances.is_object()) malformed("'tolerances' must be an object");
    for (const auto& item : tolerances.items()) {
        const json& b = item.value();
        if (!b.is_object()) malformed("band '" + item.key() + "' must be an object");
        check_keys(b, {"hi", "lo"}, "band '" + item.key() + "'");
        order.tolerances[item.key()] = {get_number(b.at("lo"), "lo"),
                                        get_number(b.at("hi"), "hi")};
    }
    order.pv_threshold = get_number(j.at("pv_threshold"), "pv_threshold");
    order.coverage_req = get_number(j.at("coverage_req"), "coverage_req");
    order.data_sufficiency = get_number(j.at("data_sufficiency"), "data_sufficiency");
    order.max_outlier_frac = get_number(j.at("max_outlier_frac"), "max_outlier_frac");
    if (j.contains("outlier_level_threshold")) {
        order.outlier_level_threshold =
            get_number(j.at("outlier_level_threshold"), "outlier_level_threshold");
    }
    try {
        validate(order);
    } catch (const Error& e) {
        malformed(e.what());
    }
    return order;
}

std::string encode_profile(const CustomerProfile& profile) {
    json j;
    j["schema_version"] = kProfileSchemaVersion;
    j["customer_id"] = profile.customer_id;
    j["intimacy"] = to_string(profile.intimacy);
    return canon::canonical_dump(j);
}

CustomerProfile decode_profile(const std::string& bytes) {
    const json j = canon::parse_object(bytes);
    if (!j.contains("schema_version")) {
        throw Error(ErrorCode::MissingField, "profile lacks 'schema_version'");
    }
    const std::string version = get_string(j, "schema_version");
    if (version != kProfileSchemaVersion) {
        throw Error(ErrorCode::UnsupportedSchemaVersion,
                    "unsupported profile schema '" + version + "'");
    }
    check_keys(j, {"customer_id", "intimacy", "schema_version"}, "profile");
    CustomerProfile profile;
    profile.customer_id = get_string(j, "customer_id");
    try {
        profile.intimacy = intimacy_from_string(get_string(j, "intimacy"));
    } catch (const Error& e) {
        malformed(e.what());
    }
    return profile;
}

std::string encode_decision(const AllocationDecision& decision) {
    json j;
    j["schema_version"] = kDecisionSchemaVersion;
    j["verdict"] = to_string(decision.verdict);
    json reasons = json::array();
    for (const auto& reason : decision.reasons) {
        json r;
        r["channel"] = reason.channel;
        r["rule"] = reason.rule;
        r["measured"] = reason.measured;
        r["limit"] = reason.limit;
        reasons.push_back(std::move(r));
    }
    j["reasons"] = std::move(reasons);
    return canon::canonical_dump(j);
}

AllocationDecision decode_decision(const std::string& bytes) {
    const json j = canon::parse_object(bytes);
    if (!j.contains("schema_version")) {
        throw Error(ErrorCode::MissingField, "decision lacks 'schema_version'");
    }
    const std::string version = get_string(j, "schema_version");
    if (version != kDecisionSchemaVersion) {
        throw Error(ErrorCode::UnsupportedSchemaVersion,
                    "unsupported decision schema '" + version + "'");
    }
    check_keys(j, {"reasons", "schema_version", "verdict"}, "decision");

    AllocationDecision decision;
    try {
        decision.verdict = verdict_from_string(get_string(j, "verdict"));
    } catch (const Error& e) {
        malformed(e.what());
    }
    const json& reasons = j.at("reasons");
    if (!reasons.is_array()) malformed("'reasons' must be an array");
    for (const auto& r : reasons) {
        if (!r.is_object()) malformed("reason must be an object");
        check_keys(r, {"channel", "limit", "measured", "rule"}, "reason");
        decision.reasons.push_back({get_string(r, "channel"), get_string(r, "rule"),
                                    get_number(r.at("measured"), "measured"),
                                    get_number(r.at("limit"), "limit")});
    }
    return decision;
}

}  // namespace q4::docs
