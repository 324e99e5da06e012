#ifndef QSF_VERIFY_HPP
#define QSF_VERIFY_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace qsf {

enum class Suite { moments, estimators, projections, queue };

Suite suite_from_string(const std::string& name);

struct VerifyOptions {
  long samples = 1'000'000;
  std::uint64_t seed = 20240611;
  double sigmas = 5.0;  ///< statistical checks pass within this many standard errors
};

/// One checked identity. For deterministic checks `standard_error` is 0 and
/// `tolerance` is the absolute bound; otherwise tolerance = sigmas * SE.
struct Check {
  std::string name;
  double target;
  double estimate;
  double standard_error;
  double tolerance;
  bool passed;
};

struct VerifyReport {
  Suite suite;
  std::vector<Check> checks;

  bool passed() const;
};

VerifyReport verify(Suite suite, const VerifyOptions& options = {});

void print_report(std::ostream& out, const VerifyReport& report);

}  // namespace qsf

#endif  // QSF_VERIFY_HPP
