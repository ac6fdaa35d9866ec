#pragma once

#include <string>

#include "json.hpp"

#include "chainid/model.hpp"
#include "chainid/regroup.hpp"
#include "chainid/signal.hpp"
#include "chainid/simulate.hpp"
#include "chainid/sysid.hpp"

namespace chainid {

/// Shortest round-trip decimal form, locale independent.
std::string format_double(double v);
/// Whole-string parse; throws ParseError.
double parse_double(const std::string& s);

/// Writes `text` to a sibling temp file and renames it over `path`.
void atomic_write(const std::string& path, const std::string& text);
std::string read_file(const std::string& path);

/// Trajectory CSV. Optional blocks are written when present; `ea` adds
/// tracking error columns.
std::string dataset_to_csv(const RobotModel& model, const TrajectoryDataset& ds, const Mat* ea = nullptr);
TrajectoryDataset dataset_from_csv(const RobotModel& model, const std::string& text);
TrajectoryDataset load_dataset(const RobotModel& model, const std::string& path);

/// `{"theta": [...]}` or a bare array.
Vec theta_from_json(const nlohmann::json& doc, int n_params);
Vec load_theta(const std::string& path, int n_params);

nlohmann::json vec_json(const Vec& v);
nlohmann::json mat_json(const Mat& m);
Vec json_vec(const nlohmann::json& j);
Mat json_mat(const nlohmann::json& j);

nlohmann::json maps_to_json(const RegroupingMaps& maps);
RegroupingMaps maps_from_json(const nlohmann::json& j);

/// Identified parameters and diagnostics; `theta0` is what validate and track read.
nlohmann::json result_to_json(const IdentificationResult& res, const RegroupingMaps& maps);

/// `sine:amp=..,freq=..,maxvel=..,phase=..,offset=..` (per-joint values joined
/// with '/'), or a path to a reference JSON file written by `excite`.
ReferenceTrajectory parse_reference(const RobotModel& model, const std::string& spec);
nlohmann::json reference_to_json(const ReferenceTrajectory& ref);
ReferenceTrajectory reference_from_json(const nlohmann::json& j);

/// Serialization with shortest doubles and sorted keys; byte-stable.
std::string dump_json(const nlohmann::json& j);

}  // namespace chainid
