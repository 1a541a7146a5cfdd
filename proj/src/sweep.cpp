#include "comgan/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

namespace comgan {

std::vector<SweepEntry> sweep(const std::filesystem::path& config_dir, const std::filesystem::path& out_dir,
                              int jobs) {
  if (!std::filesystem::is_directory(config_dir))
    throw ExportError("sweep: '" + config_dir.string() + "' is not a directory");
  std::vector<SweepEntry> entries;
  for (const auto& e : std::filesystem::directory_iterator(config_dir))
    if (e.is_regular_file() && e.path().extension() == ".cfg") {
      SweepEntry entry;
      entry.config = e.path();
      entry.run_id = e.path().stem().string();
      entries.push_back(entry);
    }
  std::sort(entries.begin(), entries.end(), [](const SweepEntry& a, const SweepEntry& b) { return a.config < b.config; });

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < entries.size(); i = next++) {
      SweepEntry& entry = entries[i];
      try {
        const TrainConfig cfg = load_config(entry.config.string());
        entry.parsed = true;
        const RunRecord rec = train(cfg);
        persist_run(rec, out_dir, entry.run_id);
        entry.status = rec.status;
        entry.message = rec.abort_reason;
      } catch (const std::exception& ex) {
        entry.status = RunStatus::Aborted;
        entry.message = ex.what();
      }
    }
  };
  const int n = std::clamp(jobs, 1, static_cast<int>(std::max<std::size_t>(entries.size(), 1)));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return entries;
}

int sweep_exit_code(const std::vector<SweepEntry>& entries) {
  for (const SweepEntry& e : entries)
    if (!e.parsed || e.status == RunStatus::Aborted) return 2;
  return 0;
}

}  // namespace comgan
