#pragma once

// Per-iteration diagnostics as JSON lines. One object per Newton iteration;
// field names are stable so plots can be regenerated from the stream.

#include <cmath>
#include <fstream>
#include <ostream>
#include <string>

#include <json.hpp>

#include "errors.hpp"
#include "ipm.hpp"

namespace mcfipm {

inline nlohmann::json to_json(const IterationRecord& r) {
  nlohmann::json j;
  j["iter"] = r.iter;
  j["mu"] = r.mu;
  j["rel_fx"] = r.rel_fx;
  j["rel_fy"] = r.rel_fy;
  j["krylov_predictor"] = r.krylov_predictor;
  j["krylov_corrector"] = r.krylov_corrector;
  j["linear_iterations"] = r.krylov_predictor + r.krylov_corrector;
  j["lower_active"] = r.lower_active;
  j["upper_active"] = r.upper_active;
  j["active_percent"] = 100.0 * r.active_fraction;
  j["dt"] = r.dt;
  j["beta"] = r.beta;
  j["alpha_x"] = r.alpha_x;
  j["alpha_s"] = r.alpha_s;
  j["sigma"] = r.sigma;
  j["block_residual"] = r.block_residual;
  j["components"] = r.components;
  j["amg_levels"] = r.amg_levels;
  j["operator_complexity"] = r.operator_complexity;
  j["level_sizes"] = r.level_sizes;
  j["cost"] = r.cost;
  // NaN is not valid JSON
  j["relative_error"] = std::isfinite(r.relative_error) ? nlohmann::json(r.relative_error) : nlohmann::json();
  return j;
}

/// Writes one JSON object per line and flushes after each, so a crashed run
/// still leaves every completed iteration on disk.
class JsonlWriter {
public:
  explicit JsonlWriter(const std::string& path) : out_(path) {
    if (!out_) throw std::runtime_error("cannot open diagnostics file " + path);
  }

  void write(const nlohmann::json& j) { out_ << j.dump() << '\n' << std::flush; }
  void write(const IterationRecord& r) { write(to_json(r)); }

private:
  std::ofstream out_;
};

}  // namespace mcfipm
