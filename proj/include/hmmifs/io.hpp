#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include <json.hpp>

#include "hmmifs/estimation.hpp"
#include "hmmifs/model.hpp"

namespace hmmifs::io {

/// A model family plus the parameter value the config pins it at.
struct ModelConfig {
  ModelSpec spec;
  Vector theta;

  Model model() const { return build_model(spec, theta); }
};

/// Reads the JSON model description:
///   grid.points, grid.weights (optional, default 1),
///   transition.logits | transition.matrix,
///   emission.family, emission.params {shift, ar, offsets, symbols, table},
///   theta.layout [{name, role, row, col, state}], theta.values (optional).
/// Errors name the offending field.
ModelConfig parse_model_config(const nlohmann::json& doc);
ModelConfig load_model_config(const std::filesystem::path& path);

nlohmann::json to_json(const ModelSpec& spec, const Vector& theta);

/// Observation CSV: optional '#' comment lines ("# seed=N" is recognized), a
/// header naming at least the column `xi` (optionally `t`, `hidden_state`),
/// then one row per time step. Errors carry the line number.
ObservationSequence read_observations(std::istream& in, const std::string& source = "<stream>");
ObservationSequence load_observations(const std::filesystem::path& path);

void write_observations(std::ostream& out, const ObservationSequence& obs);

/// 17 significant digits, so the text reads back to the same double.
std::string format_double(double value);

nlohmann::json to_json(const FitResult& fit);

struct RunManifest {
  std::string subcommand;
  std::string config_path;
  std::string data_path;
  std::optional<std::uint64_t> seed;
  std::string tool_version;
  std::string started_at;  // UTC, ISO 8601
  double wall_seconds = 0.0;
};

nlohmann::json to_json(const RunManifest& manifest);

/// Writes manifest.json into `directory`, replacing any previous one.
void write_manifest(const std::filesystem::path& directory, const RunManifest& manifest);

}  // namespace hmmifs::io
