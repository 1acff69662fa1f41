#include "privi/curation/subsample.hpp"

#include <algorithm>
#include <cmath>

#include "privi/common/error.hpp"
#include "privi/common/rng.hpp"
#include "privi/providers/frame.hpp"

namespace privi::curation {

SubsampleResult subsample(const std::map<std::string, std::size_t>& kept_counts,
                          const std::map<std::string, double>& targets, std::size_t total_budget) {
  double target_sum = 0.0;
  for (const auto& [id, t] : targets) {
    require(t >= 0.0 && std::isfinite(t), "subsample: target for '" + id + "' must be non-negative");
    target_sum += t;
  }
  require(target_sum <= 1.0 + 1e-9, "subsample: targets sum to more than 1");

  struct Source {
    std::string id;
    double avail;
    double target;
  };
  std::vector<Source> active;
  SubsampleResult out;
  std::size_t available = 0;
  for (const auto& [id, count] : kept_counts) {
    out.allocation[id] = 0;
    out.optimum[id] = 0.0;
    const auto t = targets.find(id);
    if (t == targets.end() || t->second <= 0.0 || count == 0) continue;
    active.push_back({id, static_cast<double>(count), t->second});
    available += count;
  }

  if (total_budget >= available) {
    for (const auto& s : active) {
      out.allocation[s.id] = static_cast<std::size_t>(s.avail);
      out.optimum[s.id] = s.avail;
    }
    if (total_budget > available) {
      out.deviation = true;
      out.warnings.push_back("budget " + std::to_string(total_budget) + " exceeds the " + std::to_string(available) +
                             " available snippets; final proportions deviate from the targets");
    }
    return out;
  }
  if (total_budget == 0) return out;

  // Fill level: walk the cap breakpoints L_s = avail_s / target_s in order.
  std::sort(active.begin(), active.end(),
            [](const Source& a, const Source& b) { return a.avail / a.target < b.avail / b.target; });
  double capped = 0.0, free_weight = 0.0;
  for (const auto& s : active) free_weight += s.target;
  const double budget = static_cast<double>(total_budget);
  double level = active.back().avail / active.back().target;
  for (std::size_t i = 0; i < active.size(); ++i) {
    const double candidate = (budget - capped) / free_weight;
    const double breakpoint = active[i].avail / active[i].target;
    if (candidate <= breakpoint) {
      level = candidate;
      break;
    }
    capped += active[i].avail;
    free_weight -= active[i].target;
  }

  double assigned = 0.0;
  std::vector<std::pair<double, std::size_t>> remainders;
  for (std::size_t i = 0; i < active.size(); ++i) {
    const auto& s = active[i];
    const double x = std::min(s.avail, s.target * level);
    out.optimum[s.id] = x;
    const double whole = std::min(s.avail, std::floor(x + 1e-9));
    out.allocation[s.id] = static_cast<std::size_t>(whole);
    assigned += whole;
    if (whole < s.avail) remainders.push_back({x - whole, i});
  }
  std::stable_sort(remainders.begin(), remainders.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return active[a.second].id < active[b.second].id;
  });
  auto left = static_cast<std::size_t>(std::llround(budget - assigned));
  for (const auto& [frac, i] : remainders) {
    if (left == 0) break;
    ++out.allocation[active[i].id];
    --left;
  }
  return out;
}

void apply_subsample(std::vector<Snippet>& snippets, const std::map<std::string, std::size_t>& allocation,
                     std::uint64_t seed) {
  std::map<std::string, std::vector<std::size_t>> by_source;
  for (std::size_t i = 0; i < snippets.size(); ++i)
    if (snippets[i].kept) by_source[snippets[i].source_id].push_back(i);
  for (auto& [source, idx] : by_source) {
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return snippets[a].snippet_id < snippets[b].snippet_id; });
    Rng rng(seed, stable_hash(source));
    std::shuffle(idx.begin(), idx.end(), rng.engine());
    const auto it = allocation.find(source);
    const std::size_t keep = it == allocation.end() ? 0 : std::min(it->second, idx.size());
    for (std::size_t k = keep; k < idx.size(); ++k) snippets[idx[k]].discard(DiscardReason::subsampled_out);
  }
}

}  // namespace privi::curation
