#pragma once

// JSON document schemas for everything the CLI reads and writes besides coil
// CSVs and certificates: run configuration, quality records, orders,
// customer profiles and allocation decisions. All writers emit canonical
// bytes; all readers are strict (exact key sets, typed fields).

#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "q4/fucod.hpp"
#include "q4/model.hpp"
#include "q4/plausibility.hpp"

namespace q4::docs {

inline constexpr const char* kRecordSchemaVersion = "q4-record/1";
inline constexpr const char* kOrderSchemaVersion = "q4-order/1";
inline constexpr const char* kProfileSchemaVersion = "q4-profile/1";
inline constexpr const char* kDecisionSchemaVersion = "q4-decision/1";

/// Everything a QGS run needs beyond the coil itself. Channels without an
/// explicit tree default to a constant-1 measure; a missing combined tree
/// defaults to min(all channel trees, the fused outlier PV).
struct RunConfig {
    fucod::FucodConfig fucod;
    std::map<std::string, plaus::AssessmentNode> channel_trees;
    std::optional<plaus::AssessmentNode> combined_tree;
    double outlier_level_threshold = 0.5;
};

nlohmann::json assessment_to_json(const plaus::AssessmentNode& tree);
plaus::AssessmentNode assessment_from_json(const nlohmann::json& j);

RunConfig parse_run_config(const std::string& bytes);
std::string write_run_config(const RunConfig& config);

std::string encode_record(const QualityRecord& record);
QualityRecord decode_record(const std::string& bytes);

std::string encode_order(const OrderSpec& order);
OrderSpec decode_order(const std::string& bytes);

std::string encode_profile(const CustomerProfile& profile);
CustomerProfile decode_profile(const std::string& bytes);

std::string encode_decision(const AllocationDecision& decision);
AllocationDecision decode_decision(const std::string& bytes);

}  // namespace q4::docs
