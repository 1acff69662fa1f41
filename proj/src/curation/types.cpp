#include "privi/curation/types.hpp"

#include <set>

#include "privi/common/error.hpp"

namespace privi::curation {

std::string_view to_string(Setting s) {
  switch (s) {
    case Setting::wild: return "wild";
    case Setting::semi_free: return "semi_free";
    case Setting::captive: return "captive";
  }
  return "wild";
}

std::string_view to_string(Diversity d) { return d == Diversity::low ? "low" : "high"; }

Setting parse_setting(std::string_view s) {
  if (s == "wild") return Setting::wild;
  if (s == "semi_free") return Setting::semi_free;
  if (s == "captive") return Setting::captive;
  throw ContractError("unknown setting '" + std::string(s) + "'");
}

Diversity parse_diversity(std::string_view s) {
  if (s == "low") return Diversity::low;
  if (s == "high") return Diversity::high;
  throw ContractError("unknown diversity '" + std::string(s) + "'");
}

std::string_view to_string(DiscardReason r) {
  switch (r) {
    case DiscardReason::none: return "";
    case DiscardReason::cut_overlap: return "cut_overlap";
    case DiscardReason::irrelevant: return "irrelevant";
    case DiscardReason::no_detection: return "no_detection";
    case DiscardReason::subsampled_out: return "subsampled_out";
  }
  return "";
}

DiscardReason parse_discard_reason(std::string_view s) {
  if (s.empty()) return DiscardReason::none;
  if (s == "cut_overlap") return DiscardReason::cut_overlap;
  if (s == "irrelevant") return DiscardReason::irrelevant;
  if (s == "no_detection") return DiscardReason::no_detection;
  if (s == "subsampled_out") return DiscardReason::subsampled_out;
  throw ContractError("unknown discard_reason '" + std::string(s) + "'");
}

void validate_sources(const std::vector<SourceDataset>& sources) {
  std::set<std::string> ids;
  double total = 0.0;
  for (const auto& s : sources) {
    require(!s.id.empty(), "source id must be non-empty");
    require(ids.insert(s.id).second, "duplicate source id '" + s.id + "'");
    require(s.target_proportion >= 0.0 && s.target_proportion <= 1.0,
            "source '" + s.id + "': target_proportion outside [0, 1]");
    require(s.chunk_stride_s >= 1.0 && s.chunk_stride_s <= 3.0,
            "source '" + s.id + "': chunk_stride_s outside [1, 3]");
    total += s.target_proportion;
  }
  require(total <= 1.0 + 1e-9, "source target proportions sum to more than 1");
}

void Snippet::discard(DiscardReason reason) {
  require(reason != DiscardReason::none, "discard requires a reason");
  if (!kept) return;
  kept = false;
  discard_reason = reason;
}

std::vector<double> CutList::cut_times() const {
  std::vector<double> t;
  t.reserve(cut_frames.size());
  for (auto f : cut_frames) t.push_back(static_cast<double>(f) / fps);
  return t;
}

}  // namespace privi::curation
