#pragma once

// The QGS pipeline: runs the outlier engine over a coil's feature matrix,
// evaluates the per-channel assessment trees (the fused outlier level feeds
// any data-driven leaf as PV = 1 - level), and assembles the full quality
// record.

#include <string>

#include "q4/documents.hpp"
#include "q4/model.hpp"

namespace q4::pipeline {

/// Channel trees default to a constant-1 measure; the combined tree defaults
/// to the minimum of all channel trees and the data-driven PV. Throws
/// Error(UnknownChannel) if the config names a channel outside p1..p4.
QualityRecord qgs_run(const CoilRecord& coil, const docs::RunConfig& config);

/// Per-sample CSV for external plotting: positions, channel values and PVs,
/// combined PV, the four detector scores and the fused outlier level.
std::string write_report_csv(const QualityRecord& record);

}  // namespace q4::pipeline
