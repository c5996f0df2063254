#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "roaforge/common.hpp"
#include "roaforge/config.hpp"
#include "roaforge/oracle.hpp"
#include "roaforge/trainer.hpp"

namespace {

using namespace roaforge;

struct CommonArgs {
  std::string config_path;
  std::string model_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string resume_path;
};

RunConfig load_config(const CommonArgs& args) {
  if (args.config_path.empty()) throw ConfigError("--config is required");
  RunConfig cfg = RunConfig::parse_file(args.config_path);
  if (args.seed) cfg.seed = *args.seed;
  if (args.threads) cfg.threads = *args.threads;
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  cfg.trainer.seed = cfg.seed;
  cfg.trainer.threads = cfg.threads;
  return cfg;
}

void ensure_out_dir(const RunConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open output file: " + path);
  out << text;
}

Dataset obtain_dataset(const RunConfig& cfg, const DynamicalSystem& scaled) {
  if (!cfg.dataset_path.empty()) return read_dataset_csv(cfg.dataset_path, scaled.dim());
  Rng rng(cfg.seed ^ 0x5851f42d4c957f2dULL);
  return generate_dataset(scaled, cfg.n_data, cfg.dt, cfg.t_end, rng, cfg.threads);
}

nlohmann::json breakdown_json(const LossBreakdown& b) {
  return {{"O_s", b.O_s},   {"C1_s", b.C1_s},   {"C2_s", b.C2_s}, {"O_data", b.O_data},
          {"total", b.total}, {"n_Rs", b.n_Rs}, {"n_Bs", b.n_Bs}};
}

int cmd_train(const CommonArgs& args) {
  const RunConfig cfg = load_config(args);
  ensure_out_dir(cfg);
  DynamicalSystem scaled = cfg.build_scaled_system();

  RunConfig effective = cfg;
  effective.trainer.checkpoint_path = cfg.out_dir + "/checkpoint.json";

  Dataset dataset;
  const Dataset* dataset_ptr = nullptr;
  if (cfg.trainer.mode == TrainMode::Supervised) {
    dataset = obtain_dataset(cfg, scaled);
    dataset_ptr = &dataset;
  }

  const auto start = std::chrono::steady_clock::now();
  TrainOutcome outcome =
      args.resume_path.empty()
          ? train(scaled, effective.trainer, dataset_ptr)
          : train_resume(scaled, effective.trainer, args.resume_path, dataset_ptr);
  const double wall_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const TrainState& st = outcome.state;

  nlohmann::json model_doc = st.model.to_json();
  model_doc["metadata"] = {{"system", scaled.name()},
                           {"seed", cfg.seed},
                           {"epoch", st.epoch},
                           {"config_hash", cfg.hash()}};
  write_text(cfg.out_dir + "/model.json", model_doc.dump(2) + "\n");

  std::ofstream log(cfg.out_dir + "/training_log.csv");
  if (!log) throw ConfigError("cannot open training log for writing");
  log << "epoch,O_s,C1_s,C2_s,O_data,lambda0,lambda1,lambda2,lambda_data,n_Rs,n_Bs\n";
  log.precision(17);
  log << "# config_hash=" << cfg.hash() << "\n";
  for (std::size_t i = 0; i < st.history.size(); ++i) {
    const LossBreakdown& b = st.history[i];
    const DualVector& d = st.dual_history[i];
    log << (i + 1) << "," << b.O_s << "," << b.C1_s << "," << b.C2_s << "," << b.O_data << ","
        << d.objective << "," << d.interior << "," << d.outflow << "," << d.data << "," << b.n_Rs
        << "," << b.n_Bs << "\n";
  }
  log.close();

  nlohmann::json report;
  report["config_hash"] = cfg.hash();
  report["system"] = scaled.name();
  report["mode"] = (st.supervised ? "supervised" : "unsupervised");
  report["fell_back_unsupervised"] = outcome.fell_back_unsupervised;
  report["epochs_run"] = st.epoch;
  report["wall_time_s"] = wall_s;
  report["seed"] = cfg.seed;
  report["final_losses"] = breakdown_json(st.history.empty() ? LossBreakdown{} : st.history.back());
  report["duals"] = {{"lambda0", st.duals.objective},
                     {"lambda1", st.duals.interior},
                     {"lambda2", st.duals.outflow},
                     {"lambda_data", st.duals.data}};
  write_text(cfg.out_dir + "/run_report.json", report.dump(2) + "\n");

  std::cout << "trained " << scaled.name() << " for " << st.epoch << " epochs; final losses: O_s="
            << (st.history.empty() ? 0.0 : st.history.back().O_s)
            << " C1_s=" << (st.history.empty() ? 0.0 : st.history.back().C1_s)
            << " C2_s=" << (st.history.empty() ? 0.0 : st.history.back().C2_s) << "\n";
  return 0;
}

int cmd_evaluate(const CommonArgs& args) {
  const RunConfig cfg = load_config(args);
  ensure_out_dir(cfg);
  if (args.model_path.empty()) throw ConfigError("--model is required for evaluate");
  std::ifstream in(args.model_path);
  if (!in) throw ConfigError("cannot open model file: " + args.model_path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model file is not valid JSON: ") + e.what());
  }
  TaylorLyapunov model = TaylorLyapunov::from_json(doc);
  DynamicalSystem scaled = cfg.build_scaled_system();
  if (model.layout().n != scaled.dim()) {
    throw ConfigError("model dimension does not match the configured system");
  }

  Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  const CertifiedRescale rescale = rescale_certified(model, scaled, cfg.n_check, rng);
  const CoverageReport rep = coverage(model, rescale.c, scaled, cfg.n_eval, cfg.roa_threshold,
                                      cfg.dt, cfg.t_end, cfg.seed, cfg.threads);

  nlohmann::json j;
  j["coverage_pct"] = rep.coverage_pct;
  j["c"] = rep.c;
  j["n_eval"] = rep.n_eval;
  j["M"] = rep.M;
  j["violations"] = rep.violations;
  j["seed"] = rep.seed;
  j["config_hash"] = cfg.hash();
  write_text(cfg.out_dir + "/coverage_report.json", j.dump(2) + "\n");

  std::cout << rep.coverage_pct << "\n";
  return 0;
}

int cmd_generate_data(const CommonArgs& args) {
  const RunConfig cfg = load_config(args);
  ensure_out_dir(cfg);
  DynamicalSystem scaled = cfg.build_scaled_system();
  Rng rng(cfg.seed ^ 0x5851f42d4c957f2dULL);
  const Dataset data = generate_dataset(scaled, cfg.n_data, cfg.dt, cfg.t_end, rng, cfg.threads);
  const std::string path = cfg.out_dir + "/dataset.csv";
  write_dataset_csv(data, path);
  std::ofstream app(path, std::ios::app);
  app << "# config_hash=" << cfg.hash() << "\n";
  std::cout << "wrote " << data.size() << " rows to " << path << "\n";
  return 0;
}

int cmd_export_grid(const CommonArgs& args) {
  const RunConfig cfg = load_config(args);
  ensure_out_dir(cfg);
  if (args.model_path.empty()) throw ConfigError("--model is required for export-grid");
  std::ifstream in(args.model_path);
  if (!in) throw ConfigError("cannot open model file: " + args.model_path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model file is not valid JSON: ") + e.what());
  }
  TaylorLyapunov model = TaylorLyapunov::from_json(doc);
  DynamicalSystem scaled = cfg.build_scaled_system();
  const auto rows = grid_eval(model, scaled, cfg.grid_resolution);
  std::ofstream out(cfg.out_dir + "/grid.csv");
  if (!out) throw ConfigError("cannot open grid file for writing");
  out << "x1,x2,V,DV0\n";
  out.precision(17);
  for (const GridRow& r : rows) {
    out << r.x1 << "," << r.x2 << "," << r.value << "," << r.dv0 << "\n";
  }
  out << "# config_hash=" << cfg.hash() << "\n";
  std::cout << "wrote " << rows.size() << " rows\n";
  return 0;
}

int cmd_list_systems() {
  std::cout << "name        dim\n";
  for (const std::string& name : builtin_system_names()) {
    const DynamicalSystem sys = make_system(name);
    std::cout << name;
    for (std::size_t i = name.size(); i < 12; ++i) std::cout << ' ';
    std::cout << sys.dim() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"roa-forge: learn maximal Lyapunov functions and estimate regions of attraction"};
  app.require_subcommand(1);

  CommonArgs args;
  auto add_common = [&](CLI::App* sub, bool with_model) {
    sub->add_option("--config", args.config_path, "run configuration file (key=value or JSON)");
    if (with_model) sub->add_option("--model", args.model_path, "trained model JSON");
    sub->add_option("--out", args.out_dir, "output directory (overrides config)");
    sub->add_option_function<std::uint64_t>(
        "--seed", [&args](const std::uint64_t& s) { args.seed = s; }, "seed override");
    sub->add_option_function<int>(
        "--threads", [&args](const int& t) { args.threads = t; }, "worker cap");
  };

  CLI::App* train_cmd = app.add_subcommand("train", "train a Lyapunov candidate");
  add_common(train_cmd, false);
  train_cmd->add_option("--resume", args.resume_path, "checkpoint to continue from");
  CLI::App* eval_cmd = app.add_subcommand("evaluate", "certify, rescale and measure coverage");
  add_common(eval_cmd, true);
  CLI::App* gen_cmd = app.add_subcommand("generate-data", "integrate trajectories into a dataset");
  add_common(gen_cmd, false);
  CLI::App* grid_cmd = app.add_subcommand("export-grid", "export a value/derivative grid");
  add_common(grid_cmd, true);
  app.add_subcommand("list-systems", "list built-in systems");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(args);
    if (eval_cmd->parsed()) return cmd_evaluate(args);
    if (gen_cmd->parsed()) return cmd_generate_data(args);
    if (grid_cmd->parsed()) return cmd_export_grid(args);
    return cmd_list_systems();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const CertificationError& e) {
    std::cerr << "certification error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}
