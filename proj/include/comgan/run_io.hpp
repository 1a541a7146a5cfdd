#pragma once

// Run persistence and export: csv, jsonl, svg scatter and a summary file
// holding the whole record.

#include "comgan/train.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>

namespace comgan {

class ExportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ExportFormat { Csv, Jsonl, SvgScatter };

ExportFormat parse_export_format(const std::string& s);
std::string extension(ExportFormat f);

// Column / key order shared by csv and jsonl.
const std::vector<std::string>& row_fields();

std::string to_csv(const RunRecord& rec);
std::string to_jsonl(const RunRecord& rec);
std::string to_svg_scatter(const RunRecord& rec);
std::string to_summary_json(const RunRecord& rec);

RunRecord record_from_summary_json(const std::string& text);

// Writes <dir>/<run_id>.<ext>. Throws ExportError when the record has no rows
// or the file cannot be written.
std::filesystem::path export_record(const RunRecord& rec, ExportFormat f, const std::filesystem::path& dir,
                                    const std::string& run_id);

// jsonl, csv, svg and summary.json; returns the jsonl path.
std::filesystem::path persist_run(const RunRecord& rec, const std::filesystem::path& dir, const std::string& run_id);

// Accepts the summary file itself or the shared prefix of a run's files.
RunRecord load_run(const std::filesystem::path& run);

}  // namespace comgan
