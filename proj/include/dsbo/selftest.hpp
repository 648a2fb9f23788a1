#pragma once

#include <string>
#include <vector>

namespace dsbo::selftest {

struct Check {
  std::string name;
  bool ok = false;
  std::string detail;
};

/// Fast invariant checks over every module: stochasticity and spectra of the
/// builders, finite-difference gradients, Moreau domination, GT tracking,
/// schedules, determinism and CSV round-trip. Takes a few seconds.
std::vector<Check> run_all();

}  // namespace dsbo::selftest
