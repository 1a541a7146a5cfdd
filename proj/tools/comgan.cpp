#include "comgan/config.hpp"
#include "comgan/run_io.hpp"
#include "comgan/sweep.hpp"
#include "comgan/train.hpp"
#include "comgan/verify.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace comgan;

namespace {

int run_train(const std::string& config_path, const std::string& out_dir, const std::string& run_id_opt, bool quiet) {
  const TrainConfig cfg = load_config(config_path);
  const std::string run_id = run_id_opt.empty() ? fs::path(config_path).stem().string() : run_id_opt;
  auto progress = [&](const RunRow& r) {
    if (quiet) return;
    std::fprintf(stderr, "step %6d  disc %.4g  gen %.4g  modes %d  hq %.3f  jsd %.4f\n", r.step, r.disc_loss,
                 r.gen_loss, r.modes_captured, r.high_quality_fraction, r.hist_jsd);
  };
  const RunRecord rec = train(cfg, progress);
  const fs::path jsonl = persist_run(rec, out_dir, run_id);
  std::cout << jsonl.string() << "\n";
  if (rec.status == RunStatus::Aborted) {
    std::cerr << rec.abort_reason << "\n";
    return 2;
  }
  std::printf("best hist_jsd %.4f with %d modes, %.1f s\n", rec.best_hist_jsd, rec.modes_at_best,
              rec.wall_clock_seconds);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Comparative and pairwise GAN objectives on toy data"};
  app.require_subcommand(1);

  auto* verify = app.add_subcommand("verify", "Run every oracle check with fixed seeds");

  auto* train_cmd = app.add_subcommand("train", "Train one configuration");
  std::string config_path;
  std::string out_dir = "runs";
  std::string run_id;
  bool quiet = false;
  train_cmd->add_option("config", config_path, "key = value config file")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--out", out_dir, "Output directory");
  train_cmd->add_option("--run-id", run_id, "Output file stem (default: config file stem)");
  train_cmd->add_flag("-q,--quiet", quiet, "No per-row progress on stderr");

  auto* sweep_cmd = app.add_subcommand("sweep", "Train every *.cfg in a directory");
  std::string config_dir;
  std::string sweep_out = "runs";
  int jobs = 1;
  sweep_cmd->add_option("config-dir", config_dir)->required()->check(CLI::ExistingDirectory);
  sweep_cmd->add_option("--out", sweep_out, "Output directory");
  sweep_cmd->add_option("-j,--jobs", jobs, "Parallel runs")->check(CLI::PositiveNumber);

  auto* export_cmd = app.add_subcommand("export", "Re-export a persisted run");
  std::string run_path;
  std::string format;
  std::string export_out;
  export_cmd->add_option("run", run_path, "Run summary file or file prefix")->required();
  export_cmd->add_option("format", format, "csv, jsonl or svg_scatter")->required();
  export_cmd->add_option("--out", export_out, "Output directory (default: next to the run)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (verify->parsed()) {
      const VerifyReport report = verify_all();
      std::cout << report.text();
      return report.passed() ? 0 : 1;
    }
    if (train_cmd->parsed()) return run_train(config_path, out_dir, run_id, quiet);
    if (sweep_cmd->parsed()) {
      const auto entries = sweep(config_dir, sweep_out, jobs);
      for (const SweepEntry& e : entries) {
        const char* status = !e.parsed ? "invalid" : e.status == RunStatus::Completed ? "completed" : "aborted";
        std::cout << e.run_id << "  " << status;
        if (!e.message.empty()) std::cout << "  " << e.message;
        std::cout << "\n";
      }
      return sweep_exit_code(entries);
    }
    if (export_cmd->parsed()) {
      const RunRecord rec = load_run(run_path);
      const ExportFormat f = parse_export_format(format);
      fs::path prefix = run_path;
      std::string stem = prefix.filename().string();
      for (const char* suffix : {".summary.json", ".jsonl", ".csv", ".svg"}) {
        const std::string s(suffix);
        if (stem.size() > s.size() && stem.compare(stem.size() - s.size(), s.size(), s) == 0) {
          stem.resize(stem.size() - s.size());
          break;
        }
      }
      const fs::path dir = export_out.empty() ? prefix.parent_path() : fs::path(export_out);
      std::cout << export_record(rec, f, dir.empty() ? fs::path(".") : dir, stem).string() << "\n";
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
