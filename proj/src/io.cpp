#include "hmmifs/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "hmmifs/errors.hpp"

namespace hmmifs::io {

using nlohmann::json;

namespace {

[[noreturn]] void field_error(const std::string& field, const std::string& what) {
  throw ValidationError(field + ": " + what);
}

const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) field_error(path + key, "missing");
  return obj.at(key);
}

double number(const json& v, const std::string& field) {
  if (!v.is_number()) field_error(field, "expected a number");
  return v.get<double>();
}

Vector vector_field(const json& v, const std::string& field) {
  if (!v.is_array()) field_error(field, "expected an array of numbers");
  Vector out(static_cast<Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    out(static_cast<Index>(i)) = number(v[i], field + "[" + std::to_string(i) + "]");
  }
  return out;
}

Matrix matrix_field(const json& v, const std::string& field) {
  if (!v.is_array() || v.empty()) field_error(field, "expected a nonempty array of rows");
  const std::size_t cols = v[0].is_array() ? v[0].size() : 0;
  Matrix out(static_cast<Index>(v.size()), static_cast<Index>(cols));
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string row_field = field + "[" + std::to_string(i) + "]";
    if (!v[i].is_array() || v[i].size() != cols) field_error(row_field, "rows must have equal length");
    out.row(static_cast<Index>(i)) = vector_field(v[i], row_field).transpose();
  }
  return out;
}

Index index_field(const json& obj, const std::string& key, const std::string& field) {
  if (!obj.contains(key)) field_error(field + "." + key, "missing");
  const json& v = obj.at(key);
  if (!v.is_number_integer()) field_error(field + "." + key, "expected an integer");
  return v.get<Index>();
}

json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) rows.push_back(vector_json(m.row(i).transpose()));
  return rows;
}

}  // namespace

ModelConfig parse_model_config(const json& doc) {
  if (!doc.is_object()) field_error("<root>", "expected an object");
  ModelConfig config;
  ModelSpec& spec = config.spec;

  const json& grid = require(doc, "grid", "");
  spec.grid.points = vector_field(require(grid, "points", "grid."), "grid.points");
  spec.grid.weights = grid.contains("weights") ? vector_field(grid.at("weights"), "grid.weights")
                                               : Vector::Ones(spec.grid.points.size());

  const json& transition = require(doc, "transition", "");
  if (transition.contains("matrix")) {
    spec.fixed_transition = matrix_field(transition.at("matrix"), "transition.matrix");
  } else if (transition.contains("logits")) {
    spec.base_logits = matrix_field(transition.at("logits"), "transition.logits");
  } else {
    field_error("transition", "needs either 'logits' or 'matrix'");
  }

  const json& emission = require(doc, "emission", "");
  const json& family = require(emission, "family", "emission.");
  if (!family.is_string()) field_error("emission.family", "expected a string");
  spec.emission.family = emission_family_from_string(family.get<std::string>());
  if (emission.contains("params")) {
    const json& params = emission.at("params");
    if (!params.is_object()) field_error("emission.params", "expected an object");
    if (params.contains("shift")) spec.emission.shift = number(params.at("shift"), "emission.params.shift");
    if (params.contains("ar")) spec.emission.ar = number(params.at("ar"), "emission.params.ar");
    if (params.contains("offsets")) spec.emission.offsets = vector_field(params.at("offsets"), "emission.params.offsets");
    if (params.contains("symbols")) spec.emission.symbols = vector_field(params.at("symbols"), "emission.params.symbols");
    if (params.contains("table")) spec.emission.table = matrix_field(params.at("table"), "emission.params.table");
  }

  std::vector<ParamComponent> components;
  std::optional<Vector> values;
  if (doc.contains("theta")) {
    const json& theta = doc.at("theta");
    const json& layout = require(theta, "layout", "theta.");
    if (!layout.is_array()) field_error("theta.layout", "expected an array");
    for (std::size_t k = 0; k < layout.size(); ++k) {
      const std::string field = "theta.layout[" + std::to_string(k) + "]";
      const json& entry = layout[k];
      const json& name = require(entry, "name", field + ".");
      const json& role = require(entry, "role", field + ".");
      if (!name.is_string() || !role.is_string()) field_error(field, "name and role must be strings");
      ParamComponent c;
      c.name = name.get<std::string>();
      c.role = param_role_from_string(role.get<std::string>());
      if (c.role == ParamRole::TransitionLogit) {
        c.row = index_field(entry, "row", field);
        c.col = index_field(entry, "col", field);
      } else if (c.role == ParamRole::EmissionOffset) {
        c.row = index_field(entry, "state", field);
      }
      components.push_back(std::move(c));
    }
    if (theta.contains("values")) values = vector_field(theta.at("values"), "theta.values");
  }
  spec.layout = ParamLayout(std::move(components));
  spec.validate();

  config.theta = values ? *values : spec.default_theta();
  if (config.theta.size() != spec.layout.size()) {
    field_error("theta.values", "expected " + std::to_string(spec.layout.size()) + " entries");
  }
  return config;
}

ModelConfig load_model_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path.string() + ": cannot open");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": malformed JSON at byte " + std::to_string(e.byte));
  }
  try {
    return parse_model_config(doc);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

json to_json(const ModelSpec& spec, const Vector& theta) {
  json doc;
  doc["grid"] = {{"points", vector_json(spec.grid.points)}, {"weights", vector_json(spec.grid.weights)}};
  if (spec.fixed_transition) {
    doc["transition"] = {{"matrix", matrix_json(*spec.fixed_transition)}};
  } else {
    doc["transition"] = {{"logits", matrix_json(spec.base_logits)}};
  }
  json params = {{"shift", spec.emission.shift}, {"ar", spec.emission.ar}};
  if (spec.emission.offsets.size()) params["offsets"] = vector_json(spec.emission.offsets);
  if (spec.emission.symbols.size()) params["symbols"] = vector_json(spec.emission.symbols);
  if (spec.emission.table.size()) params["table"] = matrix_json(spec.emission.table);
  doc["emission"] = {{"family", to_string(spec.emission.family)}, {"params", params}};
  json layout = json::array();
  for (const auto& c : spec.layout.components()) {
    json entry = {{"name", c.name}, {"role", to_string(c.role)}};
    if (c.role == ParamRole::TransitionLogit) {
      entry["row"] = c.row;
      entry["col"] = c.col;
    } else if (c.role == ParamRole::EmissionOffset) {
      entry["state"] = c.row;
    }
    layout.push_back(entry);
  }
  doc["theta"] = {{"layout", layout}, {"values", vector_json(theta)}};
  return doc;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

bool parse_number(const std::string& text, double& out) {
  if (text.empty()) return false;
  std::size_t used = 0;
  try {
    out = std::stod(text, &used);
  } catch (const std::exception&) {
    return false;
  }
  return used == text.size();
}

}  // namespace

ObservationSequence read_observations(std::istream& in, const std::string& source) {
  ObservationSequence seq;
  std::vector<double> xs;
  std::vector<Index> hidden;
  std::string line;
  std::size_t line_no = 0;
  int xi_col = -1, hidden_col = -1;
  std::size_t columns = 0;
  auto fail = [&](const std::string& what) {
    throw ValidationError(source + ":" + std::to_string(line_no) + ": " + what);
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (line.front() == '#') {
      const auto pos = line.find("seed=");
      if (pos != std::string::npos) {
        try {
          seq.seed = std::stoull(line.substr(pos + 5));
        } catch (const std::exception&) {
          fail("malformed seed comment");
        }
      }
      continue;
    }
    const auto cells = split_csv(line);
    if (xi_col < 0) {
      for (std::size_t c = 0; c < cells.size(); ++c) {
        if (cells[c] == "xi") xi_col = static_cast<int>(c);
        if (cells[c] == "hidden_state") hidden_col = static_cast<int>(c);
      }
      if (xi_col < 0) fail("header must name an 'xi' column");
      columns = cells.size();
      continue;
    }
    if (cells.size() != columns) fail("expected " + std::to_string(columns) + " columns");
    double xi = 0.0;
    if (!parse_number(cells[static_cast<std::size_t>(xi_col)], xi) || !std::isfinite(xi)) fail("bad xi value");
    xs.push_back(xi);
    if (hidden_col >= 0) {
      const std::string& h = cells[static_cast<std::size_t>(hidden_col)];
      if (!h.empty()) {
        double v = 0.0;
        if (!parse_number(h, v) || v < 0 || v != std::floor(v)) fail("bad hidden_state value");
        hidden.push_back(static_cast<Index>(v));
      }
    }
  }
  if (xi_col < 0) throw ValidationError(source + ": no header found");
  if (xs.empty()) throw ValidationError(source + ": no observations");
  if (!hidden.empty() && hidden.size() != xs.size()) {
    throw ValidationError(source + ": hidden_state column is only partly filled");
  }
  seq.obs = Eigen::Map<const Vector>(xs.data(), static_cast<Index>(xs.size()));
  seq.hidden = std::move(hidden);
  return seq;
}

ObservationSequence load_observations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path.string() + ": cannot open");
  return read_observations(in, path.string());
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void write_observations(std::ostream& out, const ObservationSequence& obs) {
  if (obs.seed) out << "# seed=" << *obs.seed << '\n';
  const bool with_hidden = !obs.hidden.empty();
  out << "t,xi" << (with_hidden ? ",hidden_state" : "") << '\n';
  for (Index t = 0; t < obs.size(); ++t) {
    out << t << ',' << format_double(obs[t]);
    if (with_hidden) out << ',' << obs.hidden[static_cast<std::size_t>(t)];
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Results

json to_json(const FitResult& fit) {
  json names = json::array();
  for (const auto& c : fit.theta_hat.layout.components()) names.push_back(c.name);
  json doc;
  doc["theta_hat"] = {{"names", names}, {"values", vector_json(fit.theta_hat.values)}};
  doc["log_lik"] = fit.log_lik_hat;
  doc["score"] = vector_json(fit.score);
  doc["std_errors"] = vector_json(fit.std_errors);
  doc["information"] = matrix_json(fit.info.matrix);
  doc["converged"] = fit.converged;
  doc["iterations"] = fit.iterations;
  return doc;
}

json to_json(const RunManifest& m) {
  json doc = {{"subcommand", m.subcommand},         {"config_path", m.config_path},
              {"data_path", m.data_path},           {"tool_version", m.tool_version},
              {"started_at", m.started_at},         {"wall_seconds", m.wall_seconds}};
  doc["seed"] = m.seed ? json(*m.seed) : json(nullptr);
  return doc;
}

void write_manifest(const std::filesystem::path& directory, const RunManifest& manifest) {
  std::ofstream out(directory / "manifest.json");
  if (!out) throw ValidationError((directory / "manifest.json").string() + ": cannot write");
  out << to_json(manifest).dump(2) << '\n';
}

}  // namespace hmmifs::io
