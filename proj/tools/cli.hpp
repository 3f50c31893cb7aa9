#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "fillin/orderings.hpp"

namespace fillin::cli {

/// Runs the command line. Returns the process exit code.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

/// One 0-based index per line.
void write_permutation(const Permutation& p, const std::filesystem::path& path);
Permutation read_permutation(const std::filesystem::path& path);

struct BenchOptions {
  std::vector<OrderingMethod> methods;
  std::string checkpoint;
  std::uint64_t seed = 0;
  Index max_block = 0;
  /// Search simulations per move for learned; 0 plays the greedy policy.
  int search = 0;
  bool timing = true;
};

/// Bench CSV over every .mtx file of `corpus` (sorted by file name). Failed
/// matrices get a `failed` row and a line on `warn`; returns their count.
int bench(const std::filesystem::path& corpus, const BenchOptions& opts, std::ostream& csv,
          std::ostream& warn);

/// Re-renders CSV text as a space-aligned table.
void pretty_table(const std::string& csv, std::ostream& out);

}  // namespace fillin::cli
