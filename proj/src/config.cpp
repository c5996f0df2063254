#include "roaforge/config.hpp"

#include <algorithm>
#include <cctype>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "roaforge/common.hpp"

namespace roaforge {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': cannot parse number from '" + value + "'");
  }
}

int parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long v = std::stol(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return static_cast<int>(v);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': cannot parse integer from '" + value + "'");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': cannot parse integer from '" + value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("config key '" + key + "': expected true/false, got '" + value + "'");
}

struct KeyHandler {
  // Applies one section-qualified key; throws ConfigError on unknown keys.
  static void apply(RunConfig& cfg, const std::string& section, const std::string& key,
                    const std::string& value) {
    const std::string qualified = section.empty() ? key : section + "." + key;
    if (section.empty()) {
      if (key == "seed") {
        cfg.seed = parse_u64(qualified, value);
      } else if (key == "threads") {
        cfg.threads = parse_int(qualified, value);
      } else {
        throw ConfigError("unknown top-level config key '" + key + "'");
      }
      return;
    }
    if (section == "system") {
      if (key == "name") {
        cfg.system_name = value;
      } else if (key == "mu") {
        cfg.system_params["mu"] = parse_double(qualified, value);
      } else if (key.rfind("expr", 0) == 0) {
        const int idx = parse_int(qualified, key.substr(4));
        if (idx < 1 || idx > kMaxDim) throw ConfigError("expression index out of range: " + key);
        if (static_cast<int>(cfg.custom_expressions.size()) < idx) {
          cfg.custom_expressions.resize(idx);
        }
        cfg.custom_expressions[idx - 1] = value;
      } else if (key == "box") {
        std::istringstream bs(value);
        std::vector<double> vals;
        double v;
        while (bs >> v) vals.push_back(v);
        if (vals.empty() || vals.size() % 2 != 0) {
          throw ConfigError("config key 'system.box': expected pairs 'lower1 upper1 ...'");
        }
        Box box;
        const int n = static_cast<int>(vals.size() / 2);
        box.lower.resize(n);
        box.upper.resize(n);
        for (int i = 0; i < n; ++i) {
          box.lower(i) = vals[2 * i];
          box.upper(i) = vals[2 * i + 1];
        }
        cfg.box_override = box;
      } else {
        throw ConfigError("unknown config key '" + qualified + "'");
      }
      return;
    }
    if (section == "sampling") {
      if (key == "n_boundary_obj") {
        cfg.trainer.n_boundary_obj = parse_int(qualified, value);
      } else if (key == "n_interior") {
        cfg.trainer.n_interior = parse_int(qualified, value);
      } else if (key == "n_boundary_c2") {
        cfg.trainer.n_boundary_c2 = parse_int(qualified, value);
      } else {
        throw ConfigError("unknown config key '" + qualified + "'");
      }
      return;
    }
    if (section == "trainer") {
      if (key == "mode") {
        if (value == "unsupervised") {
          cfg.trainer.mode = TrainMode::Unsupervised;
        } else if (value == "supervised") {
          cfg.trainer.mode = TrainMode::Supervised;
        } else {
          throw ConfigError("trainer.mode must be unsupervised or supervised");
        }
      } else if (key == "epochs") {
        cfg.trainer.n_epoch = parse_int(qualified, value);
      } else if (key == "dual_period") {
        cfg.trainer.n_lambda = parse_int(qualified, value);
      } else if (key == "alpha_psi") {
        cfg.trainer.alpha_psi = parse_double(qualified, value);
      } else if (key == "alpha_lambda") {
        cfg.trainer.alpha_lambda = parse_double(qualified, value);
      } else if (key == "alpha_eta") {
        cfg.trainer.alpha_eta = parse_double(qualified, value);
      } else if (key == "alpha_eps") {
        cfg.trainer.alpha_eps = parse_double(qualified, value);
      } else if (key == "xi") {
        cfg.trainer.xi = parse_double(qualified, value);
      } else if (key == "p") {
        cfg.trainer.p = parse_double(qualified, value);
      } else if (key == "lambda_eps") {
        cfg.trainer.lambda_eps = parse_double(qualified, value);
      } else if (key == "stopping_tol") {
        cfg.trainer.stopping_tol = parse_double(qualified, value);
      } else if (key == "optimizer") {
        if (value == "plain") {
          cfg.trainer.optimizer = OptimizerKind::Plain;
        } else if (value == "momentum") {
          cfg.trainer.optimizer = OptimizerKind::Momentum;
        } else {
          throw ConfigError("trainer.optimizer must be plain or momentum");
        }
      } else if (key == "momentum") {
        cfg.trainer.momentum = parse_double(qualified, value);
      } else if (key == "decaying_alpha_eta") {
        cfg.trainer.decaying_alpha_eta = parse_bool(qualified, value);
      } else if (key == "width") {
        cfg.trainer.width = parse_int(qualified, value);
      } else if (key == "depth") {
        cfg.trainer.depth = parse_int(qualified, value);
      } else if (key == "activation") {
        if (value == "tanh") {
          cfg.trainer.activation = Activation::Tanh;
        } else if (value == "sigmoid") {
          cfg.trainer.activation = Activation::Sigmoid;
        } else {
          throw ConfigError("trainer.activation must be tanh or sigmoid");
        }
      } else {
        throw ConfigError("unknown config key '" + qualified + "'");
      }
      return;
    }
    if (section == "oracle") {
      if (key == "dt") {
        cfg.dt = parse_double(qualified, value);
      } else if (key == "t_end") {
        cfg.t_end = parse_double(qualified, value);
      } else if (key == "roa_threshold") {
        cfg.roa_threshold = parse_double(qualified, value);
      } else if (key == "n_eval") {
        cfg.n_eval = parse_int(qualified, value);
      } else if (key == "n_check") {
        cfg.n_check = parse_int(qualified, value);
      } else if (key == "n_data") {
        cfg.n_data = parse_int(qualified, value);
      } else if (key == "grid_resolution") {
        cfg.grid_resolution = parse_int(qualified, value);
      } else if (key == "dataset") {
        cfg.dataset_path = value;
      } else {
        throw ConfigError("unknown config key '" + qualified + "'");
      }
      return;
    }
    if (section == "output") {
      if (key == "dir") {
        cfg.out_dir = value;
      } else {
        throw ConfigError("unknown config key '" + qualified + "'");
      }
      return;
    }
    throw ConfigError("unknown config section '" + section + "'");
  }
};

RunConfig parse_json_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config JSON parse error: ") + e.what());
  }
  RunConfig cfg;
  auto to_string_value = [](const nlohmann::json& v) -> std::string {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
    if (v.is_number_float()) return fmt_double(v.get<double>());
    throw ConfigError("config JSON: unsupported value type");
  };
  for (const auto& [top_key, top_val] : j.items()) {
    if (top_val.is_object()) {
      for (const auto& [key, val] : top_val.items()) {
        KeyHandler::apply(cfg, top_key, key, to_string_value(val));
      }
    } else {
      KeyHandler::apply(cfg, "", top_key, to_string_value(top_val));
    }
  }
  return cfg;
}

}  // namespace

RunConfig RunConfig::parse_text(const std::string& text) {
  // JSON alternative input: first significant character is '{'.
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    if (c == '{') return parse_json_config(text);
    break;
  }

  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("config line " + std::to_string(line_no) + ": malformed section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    }
    try {
      KeyHandler::apply(cfg, section, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  for (std::size_t i = 0; i < cfg.custom_expressions.size(); ++i) {
    if (cfg.custom_expressions[i].empty()) {
      throw ConfigError("custom system: missing expr" + std::to_string(i + 1));
    }
  }
  return cfg;
}

RunConfig RunConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_text(buf.str());
}

std::string RunConfig::normalized() const {
  std::ostringstream os;
  os << "seed = " << seed << "\n";
  os << "threads = " << threads << "\n";
  os << "[system]\n";
  os << "name = " << system_name << "\n";
  if (auto it = system_params.find("mu"); it != system_params.end()) {
    os << "mu = " << fmt_double(it->second) << "\n";
  }
  for (std::size_t i = 0; i < custom_expressions.size(); ++i) {
    os << "expr" << (i + 1) << " = " << custom_expressions[i] << "\n";
  }
  if (box_override) {
    os << "box =";
    for (int i = 0; i < box_override->lower.size(); ++i) {
      os << " " << fmt_double(box_override->lower(i)) << " " << fmt_double(box_override->upper(i));
    }
    os << "\n";
  }
  os << "[sampling]\n";
  os << "n_boundary_obj = " << trainer.n_boundary_obj << "\n";
  os << "n_interior = " << trainer.n_interior << "\n";
  os << "n_boundary_c2 = " << trainer.n_boundary_c2 << "\n";
  os << "[trainer]\n";
  os << "mode = " << (trainer.mode == TrainMode::Supervised ? "supervised" : "unsupervised")
     << "\n";
  os << "epochs = " << trainer.n_epoch << "\n";
  os << "dual_period = " << trainer.n_lambda << "\n";
  os << "alpha_psi = " << fmt_double(trainer.alpha_psi) << "\n";
  os << "alpha_lambda = " << fmt_double(trainer.alpha_lambda) << "\n";
  os << "alpha_eta = " << fmt_double(trainer.alpha_eta) << "\n";
  os << "alpha_eps = " << fmt_double(trainer.alpha_eps) << "\n";
  os << "xi = " << fmt_double(trainer.xi) << "\n";
  os << "p = " << fmt_double(trainer.p) << "\n";
  os << "lambda_eps = " << fmt_double(trainer.lambda_eps) << "\n";
  os << "stopping_tol = " << fmt_double(trainer.stopping_tol) << "\n";
  os << "optimizer = " << (trainer.optimizer == OptimizerKind::Momentum ? "momentum" : "plain")
     << "\n";
  os << "momentum = " << fmt_double(trainer.momentum) << "\n";
  os << "decaying_alpha_eta = " << (trainer.decaying_alpha_eta ? "true" : "false") << "\n";
  os << "width = " << trainer.width << "\n";
  os << "depth = " << trainer.depth << "\n";
  os << "activation = " << (trainer.activation == Activation::Sigmoid ? "sigmoid" : "tanh")
     << "\n";
  os << "[oracle]\n";
  os << "dt = " << fmt_double(dt) << "\n";
  os << "t_end = " << fmt_double(t_end) << "\n";
  os << "roa_threshold = " << fmt_double(roa_threshold) << "\n";
  os << "n_eval = " << n_eval << "\n";
  os << "n_check = " << n_check << "\n";
  os << "n_data = " << n_data << "\n";
  os << "grid_resolution = " << grid_resolution << "\n";
  if (!dataset_path.empty()) os << "dataset = " << dataset_path << "\n";
  os << "[output]\n";
  os << "dir = " << out_dir << "\n";
  return os.str();
}

std::string RunConfig::hash() const {
  const std::string text = normalized();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
  return buf;
}

DynamicalSystem RunConfig::build_system() const {
  if (system_name.empty()) {
    throw ConfigError("config: missing required key 'system.name'");
  }
  if (system_name == "custom") {
    if (custom_expressions.empty()) {
      throw ConfigError("custom system: provide expr1..exprN under [system]");
    }
    if (!box_override) {
      throw ConfigError("custom system: provide the domain box under [system]");
    }
    if (box_override->lower.size() != static_cast<int>(custom_expressions.size())) {
      throw ConfigError("custom system: box dimension does not match the expression count");
    }
    return make_custom_system("custom", custom_expressions, *box_override);
  }
  DynamicalSystem sys = make_system(system_name, system_params);
  if (box_override) {
    if (box_override->lower.size() != sys.dim()) {
      throw ConfigError("system.box dimension does not match the system");
    }
    DriftFn drift = [base = std::make_shared<DynamicalSystem>(sys)](const double* x, double* dx) {
      base->drift(x, dx);
    };
    return DynamicalSystem(sys.name(), sys.dim(), std::move(drift), sys.linearization(),
                           *box_override);
  }
  return sys;
}

DynamicalSystem RunConfig::build_scaled_system() const { return scale_to_unit(build_system()); }

}  // namespace roaforge
