#pragma once

// Fixed-seed run of every oracle identity, reported check by check.

#include "comgan/oracles.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace comgan {

struct VerifyCheck {
  std::string name;
  double max_discrepancy = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

struct VerifyReport {
  std::vector<VerifyCheck> checks;

  bool passed() const;
  // One line per check plus a verdict line; no timings, so repeat runs match byte for byte.
  std::string text() const;
};

using ClosedFormFn =
    std::function<oracle::PairTable(oracle::PairVariant, const oracle::DiscreteDist&, const oracle::DiscreteDist&)>;

struct VerifyOptions {
  ClosedFormFn closed_form = oracle::closed_form_pair_disc;
  std::uint64_t seed = 7;
};

VerifyReport verify_all(const VerifyOptions& options = {});

}  // namespace comgan
