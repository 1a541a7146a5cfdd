#pragma once

#include "comgan/losses.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace comgan {

// Line 0 means the problem is not tied to one line.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(int line, const std::string& what);
  int line() const { return line_; }

 private:
  int line_;
};

enum class LrSchedule { Constant, Linear };

struct TrainConfig {
  FamilyKind family = FamilyKind::SGAN;
  DiscStructure structure{};
  ComparativeSource source = ComparativeSource::RealData;
  Regularizer reg{};
  std::optional<int> n_d;  // absent: 2 for SGAN/LSGAN, 5 for Hinge/WGAN
  Index batch_size = 64;
  double learning_rate = 2e-4;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.999;
  int total_steps = 5000;
  std::uint64_t seed = 0;
  std::string data_spec = "ring8";
  std::vector<Index> gen_sizes{2, 64, 64, 2};
  std::vector<Index> disc_sizes{2, 64, 64, 1};  // first entry is the sample width
  int log_every = 500;
  // Linear: the rate falls from learning_rate toward 0 across total_steps.
  LrSchedule lr_schedule = LrSchedule::Constant;

  double learning_rate_at(int step) const;

  int discriminator_steps() const;
  // Discriminator layer widths with the first one scaled for the structure.
  std::vector<Index> disc_network_sizes() const;
  void validate() const;
};

// `key = value` lines, `#` starts a comment, enum values are case-insensitive.
TrainConfig parse_config(const std::string& text);
TrainConfig load_config(const std::string& path);

// Canonical text form; parse_config(to_config_text(c)) reproduces c.
std::string to_config_text(const TrainConfig& c);

// Value parsers shared with the command line.
FamilyKind parse_family(const std::string& s);
DiscStructure parse_structure(const std::string& s);
ComparativeSource parse_source(const std::string& s);

}  // namespace comgan
