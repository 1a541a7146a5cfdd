#pragma once

#include "comgan/run_io.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace comgan {

struct SweepEntry {
  std::filesystem::path config;
  std::string run_id;
  bool parsed = false;
  RunStatus status = RunStatus::Completed;
  std::string message;  // parse error or abort reason
};

// Trains every *.cfg in `config_dir` (sorted by name) and persists each run
// under `out_dir`, using up to `jobs` worker threads.
std::vector<SweepEntry> sweep(const std::filesystem::path& config_dir, const std::filesystem::path& out_dir,
                              int jobs = 1);

// 0 when every run completed, 2 when any aborted or failed to parse.
int sweep_exit_code(const std::vector<SweepEntry>& entries);

}  // namespace comgan
