// Acceptance run: one PASS/FAIL line per criterion, then the informational
// large-lambda rate diagnostic. Exit status is nonzero if any criterion fails.
//
//   acceptance [--jobs N] [--verbose] [--skip-diagnostic]

#include "waistlab/acceptance.hpp"
#include "waistlab/parallel.hpp"

#include <cstdio>
#include <cstring>
#include <string>

using namespace waistlab;

int main(int argc, char** argv) {
  int jobs = 1;
  bool verbose = false, diagnostic = true;
  for (int i = 1; i < argc; ++i) {
    if (!std::strcmp(argv[i], "--jobs") && i + 1 < argc)
      jobs = std::stoi(argv[++i]);
    else if (!std::strcmp(argv[i], "--verbose"))
      verbose = true;
    else if (!std::strcmp(argv[i], "--skip-diagnostic"))
      diagnostic = false;
  }

  AcceptanceSettings s;
  s.jobs = jobs;
  AcceptanceContext ctx(s);
  int failed = 0;
  for (const auto& [id, cat] : criterion_catalog()) {
    const CriterionResult r = evaluate_criterion(ctx, id);
    failed += r.pass ? 0 : 1;
    std::printf("criterion %d %s  %s/%s  (%.1f s)\n", id, r.pass ? "PASS" : "FAIL", r.module.c_str(),
                r.check.c_str(), r.seconds);
    if (verbose || !r.pass) {
      for (const auto& v : r.values)
        std::printf("    %s = %.6g\n", v.name.c_str(), v.value);
    }
    for (const auto& n : r.notes)
      std::printf("    note: %s\n", n.c_str());
    std::fflush(stdout);
  }

  if (diagnostic) {
    std::printf("INFO large-lambda rate diagnostic (not a criterion): lambda {512..4096}, grid 32 x 1601\n");
    try {
      const auto d = extended_lambda_diagnostic(jobs);
      for (const auto& b : d.bands) {
        if (b.error.empty())
          std::printf("INFO k=%g band [%g, %g]: rate %.4g, inf P %.4g, rel error %+.3f\n", b.k, b.band.z_lo,
                      b.band.z_hi, b.rate, b.inf_P, b.relative_error);
        else
          std::printf("INFO k=%g band [%g, %g]: %s\n", b.k, b.band.z_lo, b.band.z_hi, b.error.c_str());
      }
      for (const auto& [k, pw] : d.power)
        std::printf("INFO k=%g fitted power %.4f (expected %g)\n", k, pw, 2.0 + k / 2.0);
      for (const auto& n : d.notes)
        std::printf("INFO %s\n", n.c_str());
    } catch (const std::exception& e) {
      std::printf("INFO diagnostic failed: %s\n", e.what());
    }
  }

  std::printf("%d/%zu criteria passed\n", static_cast<int>(criterion_catalog().size()) - failed,
              criterion_catalog().size());
  return failed == 0 ? 0 : 1;
}
