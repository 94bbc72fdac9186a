#pragma once

#include <string>
#include <vector>

#include "fraclab/core.hpp"

namespace fraclab {

/// Outcome of one invariant check. `value` is the measured defect, compared with `tolerance`.
struct VerifyCheck {
  std::string suite;
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string detail;
};

/// Suites: identities, harmonics, grushin, quadrature.
std::vector<std::string> verify_suites();
/// Every check name across all suites, usable as a fault target.
std::vector<std::string> verify_check_names();

/// Runs one suite at the order s of `params` (and a = 0 where a check needs it). When `fault`
/// names a check of this suite, that check's input is corrupted slightly so the check must
/// fail; the other checks are unaffected. Throws DomainError for an unknown suite.
std::vector<VerifyCheck> run_verify_suite(const std::string& suite, const WeightParams& params,
                                          const std::string& fault = "");

}  // namespace fraclab
