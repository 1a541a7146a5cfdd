#include "comgan/config.hpp"

#include "comgan/toy.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace comgan {

ConfigError::ConfigError(int line, const std::string& what)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

int TrainConfig::discriminator_steps() const {
  if (n_d) return *n_d;
  return (family == FamilyKind::Hinge || family == FamilyKind::WGAN) ? 5 : 2;
}

double TrainConfig::learning_rate_at(int step) const {
  if (lr_schedule == LrSchedule::Constant || total_steps == 0) return learning_rate;
  return learning_rate * (1.0 - static_cast<double>(step - 1) / static_cast<double>(total_steps));
}

std::vector<Index> TrainConfig::disc_network_sizes() const {
  std::vector<Index> sizes = disc_sizes;
  sizes.front() = structure.network_input_width(disc_sizes.front());
  return sizes;
}

void TrainConfig::validate() const {
  if (discriminator_steps() < 1) throw ConfigError(0, "n_d must be >= 1");
  if (batch_size < 2) throw ConfigError(0, "batch_size must be >= 2 so equality pairs have distinct batchmates");
  if (!(learning_rate > 0.0)) throw ConfigError(0, "learning_rate must be > 0");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
    throw ConfigError(0, "adam betas must lie in [0, 1)");
  if (total_steps < 0) throw ConfigError(0, "total_steps must be >= 0");
  if (log_every < 1) throw ConfigError(0, "log_every must be >= 1");
  if (gen_sizes.size() < 2 || disc_sizes.size() < 2) throw ConfigError(0, "net sizes need at least two entries");
  if (gen_sizes.back() != 2) throw ConfigError(0, "gen_sizes must end in 2 (sample width)");
  if (disc_sizes.front() != 2) throw ConfigError(0, "disc_sizes must start with 2 (sample width)");
  if (disc_sizes.back() != 1) throw ConfigError(0, "disc_sizes must end in 1 (logit)");
  for (Index s : gen_sizes)
    if (s < 1) throw ConfigError(0, "gen_sizes has a zero-width layer");
  for (Index s : disc_sizes)
    if (s < 1) throw ConfigError(0, "disc_sizes has a zero-width layer");
  try {
    check_compatible(structure, reg, source);
    mixture_by_name(data_spec);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(0, e.what());
  }
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

template <typename T>
T parse_number(const std::string& s, const char* what) {
  T v{};
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || ptr != end) throw std::invalid_argument(std::string("bad ") + what + " '" + s + "'");
  return v;
}

double parse_real(const std::string& s) {
  // from_chars for double covers fixed and scientific notation.
  return parse_number<double>(s, "number");
}

// Splits "name(arg)" into name and optional argument.
std::pair<std::string, std::optional<std::string>> split_call(const std::string& s) {
  const auto open = s.find('(');
  if (open == std::string::npos) return {trim(s), std::nullopt};
  if (s.back() != ')') throw std::invalid_argument("unbalanced parentheses in '" + s + "'");
  return {trim(s.substr(0, open)), trim(s.substr(open + 1, s.size() - open - 2))};
}

std::vector<Index> parse_sizes(const std::string& s) {
  std::vector<Index> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<Index>(trim(item), "layer size"));
  if (out.size() < 2) throw std::invalid_argument("need at least two comma-separated layer sizes");
  return out;
}

struct RegSpec {
  RegKind kind = RegKind::None;
  std::optional<double> clip;
  std::optional<double> alpha;
};

RegSpec parse_reg(const std::string& raw) {
  const auto [name, arg] = split_call(lower(raw));
  RegSpec r;
  if (name == "none") r.kind = RegKind::None;
  else if (name == "equality" || name == "eq") r.kind = RegKind::Equality;
  else if (name == "rf") r.kind = RegKind::Rf;
  else if (name == "gp" || name == "gradient_penalty") r.kind = RegKind::GradientPenalty;
  else if (name == "clip" || name == "weight_clip") r.kind = RegKind::WeightClip;
  else if (name == "lecam" || name == "lecam_fixed") r.kind = RegKind::LeCamFixed;
  else throw std::invalid_argument("unknown regularizer '" + raw + "'");
  if (arg) {
    if (r.kind == RegKind::WeightClip) r.clip = parse_real(*arg);
    else if (r.kind == RegKind::LeCamFixed) r.alpha = parse_real(*arg);
    else throw std::invalid_argument("regularizer '" + name + "' takes no argument");
  }
  return r;
}

const char* const kKeys[] = {"loss_family", "disc_structure", "comparative_source", "regularizer",
                             "lambda_reg",  "n_d",            "batch_size",         "learning_rate",
                             "adam_beta1",  "adam_beta2",     "total_steps",        "seed",
                             "data_spec",   "gen_sizes",      "disc_sizes",         "log_every",
                             "lr_schedule"};

std::string join_sizes(const std::vector<Index>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::string fmt_real(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

FamilyKind parse_family(const std::string& raw) {
  const std::string s = lower(trim(raw));
  if (s == "sgan") return FamilyKind::SGAN;
  if (s == "lsgan") return FamilyKind::LSGAN;
  if (s == "hinge") return FamilyKind::Hinge;
  if (s == "wgan") return FamilyKind::WGAN;
  throw std::invalid_argument("unknown loss family '" + raw + "'");
}

DiscStructure parse_structure(const std::string& raw) {
  const auto [name, arg] = split_call(lower(trim(raw)));
  DiscStructure d;
  if (name == "single") d.kind = StructureKind::Single;
  else if (name == "pair_concat") d.kind = StructureKind::PairConcat;
  else if (name == "pair_subtract") d.kind = StructureKind::PairSubtract;
  else if (name == "pair_sum") d.kind = StructureKind::PairSum;
  else if (name == "pack_concat") d.kind = StructureKind::PackConcat;
  else if (name == "multi_comparative_mean" || name == "mcm") d.kind = StructureKind::MultiComparativeMean;
  else throw std::invalid_argument("unknown disc structure '" + raw + "'");
  if (arg) {
    if (d.kind != StructureKind::PackConcat) throw std::invalid_argument("only pack_concat takes a size");
    d.pack = parse_number<int>(*arg, "pack size");
    if (d.pack < 2) throw std::invalid_argument("pack size must be >= 2");
  }
  return d;
}

ComparativeSource parse_source(const std::string& raw) {
  const std::string s = lower(trim(raw));
  if (s == "real_data" || s == "real") return ComparativeSource::RealData;
  if (s == "fake_data" || s == "fake") return ComparativeSource::FakeData;
  if (s == "same_sample" || s == "same") return ComparativeSource::SameSample;
  throw std::invalid_argument("unknown comparative source '" + raw + "'");
}

TrainConfig parse_config(const std::string& text) {
  TrainConfig c;
  RegSpec reg;
  std::optional<double> lambda;
  std::map<std::string, int> seen;

  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(line_no, "expected 'key = value'");
    const std::string key = lower(trim(line.substr(0, eq)));
    const std::string value = trim(line.substr(eq + 1));
    if (std::find(std::begin(kKeys), std::end(kKeys), key) == std::end(kKeys))
      throw ConfigError(line_no, "unknown key '" + key + "'");
    if (seen.count(key)) throw ConfigError(line_no, "duplicate key '" + key + "'");
    if (value.empty()) throw ConfigError(line_no, "missing value for '" + key + "'");
    seen[key] = line_no;
    try {
      if (key == "loss_family") c.family = parse_family(value);
      else if (key == "disc_structure") c.structure = parse_structure(value);
      else if (key == "comparative_source") c.source = parse_source(value);
      else if (key == "regularizer") reg = parse_reg(value);
      else if (key == "lambda_reg") lambda = parse_real(value);
      else if (key == "n_d") c.n_d = parse_number<int>(value, "integer");
      else if (key == "batch_size") c.batch_size = parse_number<Index>(value, "integer");
      else if (key == "learning_rate") c.learning_rate = parse_real(value);
      else if (key == "adam_beta1") c.adam_beta1 = parse_real(value);
      else if (key == "adam_beta2") c.adam_beta2 = parse_real(value);
      else if (key == "total_steps") c.total_steps = parse_number<int>(value, "integer");
      else if (key == "seed") c.seed = parse_number<std::uint64_t>(value, "seed");
      else if (key == "data_spec") c.data_spec = lower(value);
      else if (key == "gen_sizes") c.gen_sizes = parse_sizes(value);
      else if (key == "disc_sizes") c.disc_sizes = parse_sizes(value);
      else if (key == "log_every") c.log_every = parse_number<int>(value, "integer");
      else if (key == "lr_schedule") {
        const std::string v = lower(value);
        if (v == "constant") c.lr_schedule = LrSchedule::Constant;
        else if (v == "linear") c.lr_schedule = LrSchedule::Linear;
        else throw std::invalid_argument("unknown lr_schedule '" + value + "' (expected constant or linear)");
      }
    } catch (const std::invalid_argument& e) {
      throw ConfigError(line_no, e.what());
    }
  }

  c.reg.kind = reg.kind;
  if (lambda) c.reg.lambda = *lambda;
  if (reg.clip) c.reg.clip = *reg.clip;
  if (reg.alpha) c.reg.alpha_r = *reg.alpha;

  try {
    c.validate();
  } catch (const ConfigError& e) {
    // Attribute the failure to the most specific line we can.
    const std::string msg = e.what();
    auto line_of = [&](const char* key) { return seen.count(key) ? seen[key] : 0; };
    int line = 0;
    auto mentions = [&](const char* word) { return msg.find(word) != std::string::npos; };
    if (mentions("batch_size")) line = line_of("batch_size");
    else if (mentions("n_d")) line = line_of("n_d");
    else if (mentions("learning_rate")) line = line_of("learning_rate");
    else if (mentions("betas")) line = std::max(line_of("adam_beta1"), line_of("adam_beta2"));
    else if (mentions("total_steps")) line = line_of("total_steps");
    else if (mentions("log_every")) line = line_of("log_every");
    else if (mentions("gen_sizes")) line = line_of("gen_sizes");
    else if (mentions("disc_sizes")) line = line_of("disc_sizes");
    else if (mentions("data spec")) line = line_of("data_spec");
    else if (mentions("lambda")) line = line_of("lambda_reg");
    else line = std::max({line_of("regularizer"), line_of("disc_structure"), line_of("comparative_source")});
    throw ConfigError(line, e.what());
  }
  return c;
}

TrainConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError(0, "cannot open config '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string to_config_text(const TrainConfig& c) {
  std::ostringstream os;
  os << "loss_family = " << to_string(c.family) << "\n";
  os << "disc_structure = " << to_string(c.structure) << "\n";
  os << "comparative_source = " << to_string(c.source) << "\n";
  std::string reg;
  switch (c.reg.kind) {
    case RegKind::None: reg = "none"; break;
    case RegKind::Equality: reg = "equality"; break;
    case RegKind::Rf: reg = "rf"; break;
    case RegKind::GradientPenalty: reg = "gp"; break;
    case RegKind::WeightClip: reg = "clip(" + fmt_real(c.reg.clip) + ")"; break;
    case RegKind::LeCamFixed: reg = "lecam(" + fmt_real(c.reg.alpha_r) + ")"; break;
  }
  os << "regularizer = " << reg << "\n";
  os << "lambda_reg = " << fmt_real(c.reg.lambda) << "\n";
  os << "n_d = " << c.discriminator_steps() << "\n";
  os << "batch_size = " << c.batch_size << "\n";
  os << "learning_rate = " << fmt_real(c.learning_rate) << "\n";
  os << "adam_beta1 = " << fmt_real(c.adam_beta1) << "\n";
  os << "adam_beta2 = " << fmt_real(c.adam_beta2) << "\n";
  os << "total_steps = " << c.total_steps << "\n";
  os << "seed = " << c.seed << "\n";
  os << "data_spec = " << c.data_spec << "\n";
  os << "gen_sizes = " << join_sizes(c.gen_sizes) << "\n";
  os << "disc_sizes = " << join_sizes(c.disc_sizes) << "\n";
  os << "log_every = " << c.log_every << "\n";
  os << "lr_schedule = " << (c.lr_schedule == LrSchedule::Linear ? "linear" : "constant") << "\n";
  return os.str();
}

}  // namespace comgan
