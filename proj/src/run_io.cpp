#include "comgan/run_io.hpp"

#include "json.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace comgan {

using json = nlohmann::ordered_json;

namespace {

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json optional_number(const std::optional<double>& v) { return v ? number_or_null(*v) : json(nullptr); }

json row_json(const RunRow& r) {
  json j = json::object();
  j["step"] = r.step;
  j["disc_loss"] = number_or_null(r.disc_loss);
  j["gen_loss"] = number_or_null(r.gen_loss);
  j["modes_captured"] = r.modes_captured;
  j["high_quality_fraction"] = number_or_null(r.high_quality_fraction);
  j["hist_jsd"] = number_or_null(r.hist_jsd);
  j["equality_residual_real"] = optional_number(r.equality_residual_real);
  j["equality_residual_fake"] = optional_number(r.equality_residual_fake);
  j["diverged"] = r.diverged ? json(*r.diverged) : json(nullptr);
  return j;
}

double number_from(const json& j) { return j.is_null() ? std::nan("") : j.get<double>(); }

RunRow row_from(const json& j) {
  RunRow r;
  r.step = j.at("step").get<int>();
  r.disc_loss = number_from(j.at("disc_loss"));
  r.gen_loss = number_from(j.at("gen_loss"));
  r.modes_captured = j.at("modes_captured").get<int>();
  r.high_quality_fraction = number_from(j.at("high_quality_fraction"));
  r.hist_jsd = number_from(j.at("hist_jsd"));
  if (!j.at("equality_residual_real").is_null()) r.equality_residual_real = j["equality_residual_real"].get<double>();
  if (!j.at("equality_residual_fake").is_null()) r.equality_residual_fake = j["equality_residual_fake"].get<double>();
  if (!j.at("diverged").is_null()) r.diverged = j["diverged"].get<std::string>();
  return r;
}

json points_json(const Matrix& m) {
  json a = json::array();
  for (Index i = 0; i < m.rows(); ++i) a.push_back({m(i, 0), m(i, 1)});
  return a;
}

Matrix points_from(const json& a) {
  Matrix m(static_cast<Index>(a.size()), 2);
  for (std::size_t i = 0; i < a.size(); ++i) {
    m(static_cast<Index>(i), 0) = number_from(a[i][0]);
    m(static_cast<Index>(i), 1) = number_from(a[i][1]);
  }
  return m;
}

std::string csv_number(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string svg_coord(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << v;
  return os.str();
}

void require_rows(const RunRecord& rec) {
  if (rec.rows.empty()) throw ExportError("export: record has no rows");
}

}  // namespace

ExportFormat parse_export_format(const std::string& raw) {
  std::string s = raw;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (s == "csv") return ExportFormat::Csv;
  if (s == "jsonl") return ExportFormat::Jsonl;
  if (s == "svg" || s == "svg_scatter") return ExportFormat::SvgScatter;
  throw ExportError("unknown export format '" + raw + "' (expected csv, jsonl or svg_scatter)");
}

std::string extension(ExportFormat f) {
  switch (f) {
    case ExportFormat::Csv: return "csv";
    case ExportFormat::Jsonl: return "jsonl";
    case ExportFormat::SvgScatter: return "svg";
  }
  return "";
}

const std::vector<std::string>& row_fields() {
  static const std::vector<std::string> f{"step",     "disc_loss",           "gen_loss",
                                          "modes_captured",   "high_quality_fraction", "hist_jsd",
                                          "equality_residual_real", "equality_residual_fake", "diverged"};
  return f;
}

std::string to_csv(const RunRecord& rec) {
  require_rows(rec);
  std::ostringstream os;
  const auto& fields = row_fields();
  for (std::size_t i = 0; i < fields.size(); ++i) os << (i ? "," : "") << fields[i];
  os << "\n";
  auto opt = [](const std::optional<double>& v) { return v ? csv_number(*v) : std::string(); };
  for (const RunRow& r : rec.rows) {
    os << r.step << ',' << csv_number(r.disc_loss) << ',' << csv_number(r.gen_loss) << ',' << r.modes_captured << ','
       << csv_number(r.high_quality_fraction) << ',' << csv_number(r.hist_jsd) << ',' << opt(r.equality_residual_real)
       << ',' << opt(r.equality_residual_fake) << ',' << r.diverged.value_or("") << "\n";
  }
  return os.str();
}

std::string to_jsonl(const RunRecord& rec) {
  require_rows(rec);
  std::string out;
  for (const RunRow& r : rec.rows) out += row_json(r).dump() + "\n";
  return out;
}

std::string to_svg_scatter(const RunRecord& rec) {
  require_rows(rec);
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"600\" height=\"600\" viewBox=\"-4 -4 8 8\">\n"
     << "<rect x=\"-4\" y=\"-4\" width=\"8\" height=\"8\" fill=\"white\"/>\n"
     << "<g id=\"samples\" fill=\"#1f77b4\" fill-opacity=\"0.5\">\n";
  // SVG y grows downward, so the data y axis is flipped.
  for (Index i = 0; i < rec.final_samples.rows(); ++i) {
    const double x = rec.final_samples(i, 0);
    const double y = rec.final_samples(i, 1);
    os << "<circle cx=\"" << svg_coord(std::isfinite(x) ? x : 0.0) << "\" cy=\""
       << svg_coord(std::isfinite(y) ? -y : 0.0) << "\" r=\"0.02\"/>\n";
  }
  os << "</g>\n<g id=\"centers\" stroke=\"#d62728\" stroke-width=\"0.03\">\n";
  for (Index k = 0; k < rec.centers.rows(); ++k) {
    const double x = rec.centers(k, 0);
    const double y = -rec.centers(k, 1);
    os << "<path d=\"M" << svg_coord(x - 0.1) << ' ' << svg_coord(y) << " H" << svg_coord(x + 0.1) << " M"
       << svg_coord(x) << ' ' << svg_coord(y - 0.1) << " V" << svg_coord(y + 0.1) << "\"/>\n";
  }
  os << "</g>\n</svg>\n";
  return os.str();
}

std::string to_summary_json(const RunRecord& rec) {
  json j;
  j["config"] = to_config_text(rec.config);
  j["status"] = rec.status == RunStatus::Completed ? "completed" : "aborted";
  j["abort_reason"] = rec.abort_reason;
  j["best_hist_jsd"] = number_or_null(rec.best_hist_jsd);
  j["modes_at_best"] = rec.modes_at_best;
  j["wall_clock_seconds"] = rec.wall_clock_seconds;
  json rows = json::array();
  for (const RunRow& r : rec.rows) rows.push_back(row_json(r));
  j["rows"] = rows;
  j["final_samples"] = points_json(rec.final_samples);
  j["centers"] = points_json(rec.centers);
  return j.dump(1) + "\n";
}

RunRecord record_from_summary_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    RunRecord rec;
    rec.config = parse_config(j.at("config").get<std::string>());
    rec.status = j.at("status").get<std::string>() == "completed" ? RunStatus::Completed : RunStatus::Aborted;
    rec.abort_reason = j.at("abort_reason").get<std::string>();
    rec.best_hist_jsd = number_from(j.at("best_hist_jsd"));
    rec.modes_at_best = j.at("modes_at_best").get<int>();
    rec.wall_clock_seconds = j.at("wall_clock_seconds").get<double>();
    for (const json& r : j.at("rows")) rec.rows.push_back(row_from(r));
    rec.final_samples = points_from(j.at("final_samples"));
    rec.centers = points_from(j.at("centers"));
    return rec;
  } catch (const json::exception& e) {
    throw ExportError(std::string("malformed run summary: ") + e.what());
  }
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ExportError("cannot write '" + path.string() + "'");
  f << content;
  f.close();
  if (!f) throw ExportError("failed writing '" + path.string() + "'");
}

}  // namespace

std::filesystem::path export_record(const RunRecord& rec, ExportFormat f, const std::filesystem::path& dir,
                                    const std::string& run_id) {
  require_rows(rec);
  const std::filesystem::path path = dir / (run_id + "." + extension(f));
  switch (f) {
    case ExportFormat::Csv: write_file(path, to_csv(rec)); break;
    case ExportFormat::Jsonl: write_file(path, to_jsonl(rec)); break;
    case ExportFormat::SvgScatter: write_file(path, to_svg_scatter(rec)); break;
  }
  return path;
}

std::filesystem::path persist_run(const RunRecord& rec, const std::filesystem::path& dir, const std::string& run_id) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ExportError("cannot create '" + dir.string() + "': " + ec.message());
  const auto jsonl = export_record(rec, ExportFormat::Jsonl, dir, run_id);
  export_record(rec, ExportFormat::Csv, dir, run_id);
  export_record(rec, ExportFormat::SvgScatter, dir, run_id);
  write_file(dir / (run_id + ".summary.json"), to_summary_json(rec));
  return jsonl;
}

RunRecord load_run(const std::filesystem::path& run) {
  std::filesystem::path path = run;
  const std::string s = run.string();
  const std::string suffix = ".summary.json";
  if (s.size() < suffix.size() || s.compare(s.size() - suffix.size(), suffix.size(), suffix) != 0) {
    path = run;
    if (run.extension() == ".jsonl" || run.extension() == ".csv" || run.extension() == ".svg")
      path.replace_extension();
    path += suffix;
  }
  std::ifstream f(path);
  if (!f) throw ExportError("cannot open run summary '" + path.string() + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return record_from_summary_json(ss.str());
}

}  // namespace comgan
