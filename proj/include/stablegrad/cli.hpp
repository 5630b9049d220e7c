#pragma once

// Command-line surface:
//   symbol | kernel | perturb | counterexample <mode> | bounds <variant>
// Exit codes: 0 success or PASS, 1 verification FAIL (output still written),
// 2 usage or validation error.

#include <ostream>
#include <string>
#include <vector>

namespace stablegrad::cli {

/// `args` excludes the program name. Output without --out goes to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// start:stop:step, endpoints inclusive within 1e-12. Throws InvalidArgument.
std::vector<double> parse_grid(const std::string& spec);

}  // namespace stablegrad::cli
