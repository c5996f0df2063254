#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "roaforge/dynamics.hpp"
#include "roaforge/trainer.hpp"

namespace roaforge {

// Full run configuration. Parsed either from flat key=value text with
// [section] headers or from a JSON document with the same section/key names.
// Unknown keys are rejected; parsing then normalizing is idempotent.
struct RunConfig {
  // [system]
  std::string system_name;
  std::map<std::string, double> system_params;   // e.g. mu for vanderpol
  std::vector<std::string> custom_expressions;   // custom systems: expr1..exprN
  std::optional<Box> box_override;               // original-domain box

  // [sampling] + [trainer]
  TrainerConfig trainer;

  // [oracle]
  double dt = 0.01;
  double t_end = 50.0;
  double roa_threshold = 100.0;  // M
  int n_eval = 100000;
  int n_check = 100000;
  int n_data = 2000;
  int grid_resolution = 64;
  std::string dataset_path;     // optional pre-generated dataset for training

  // [output]
  std::string out_dir = "out";

  // top level
  std::uint64_t seed = 0;
  int threads = 1;

  static RunConfig parse_file(const std::string& path);
  static RunConfig parse_text(const std::string& text);

  // Canonical text form; parsing it again yields the same normalized form.
  std::string normalized() const;

  // FNV-1a hash of the normalized form, as 16 hex digits.
  std::string hash() const;

  // The configured system in original coordinates (box override applied).
  DynamicalSystem build_system() const;

  // The configured system rescaled onto the unit domain.
  DynamicalSystem build_scaled_system() const;
};

}  // namespace roaforge
