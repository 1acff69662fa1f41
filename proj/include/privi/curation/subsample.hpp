#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "privi/curation/types.hpp"

namespace privi::curation {

struct SubsampleResult {
  std::map<std::string, std::size_t> allocation;
  // Continuous water-filling optimum the integer allocation rounds.
  std::map<std::string, double> optimum;
  // Final proportions deviate from the targets (sources ran out).
  bool deviation = false;
  std::vector<std::string> warnings;
};

// Water-filling allocation: find the level L with
//   sum_s min(available_s, target_s * L) = budget,
// so sources that run short are capped and their deficit flows to the others
// in proportion to their targets. The optimum is rounded by largest
// remainder; each allocation is within one snippet of it and never exceeds
// availability. A budget above total availability returns everything with a
// deviation warning. Sources with zero or missing target get nothing.
SubsampleResult subsample(const std::map<std::string, std::size_t>& kept_counts,
                          const std::map<std::string, double>& targets, std::size_t total_budget);

// Keeps a seeded uniform random choice of `allocation[source]` kept snippets
// per source and discards the rest as subsampled_out. Selection depends only
// on snippet ids and the seed.
void apply_subsample(std::vector<Snippet>& snippets, const std::map<std::string, std::size_t>& allocation,
                     std::uint64_t seed);

}  // namespace privi::curation
