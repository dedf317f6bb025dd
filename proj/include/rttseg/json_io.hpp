#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "rttseg/hdphmm.hpp"

namespace rttseg {

using Json = nlohmann::json;

Json config_to_json(const HdpHmmConfig& config);
/// Missing keys keep their defaults; throws SchemaError on wrong types.
HdpHmmConfig config_from_json(const Json& j);

/// Per-state table: id, mean_ms, std_ms, expected_duration_steps (null when
/// the state never leaves), occupancy_fraction, components.
Json state_table(const SegmentationResult& result);

/// Full result document, including the series, the finalized model and the
/// config that produced it.
Json result_to_json(const SegmentationResult& result);
/// Throws SchemaError when a required field is absent or mistyped.
SegmentationResult result_from_json(const Json& j);

SegmentationResult read_result(const std::filesystem::path& path);
void write_result(const std::filesystem::path& path, const SegmentationResult& result);

}  // namespace rttseg
