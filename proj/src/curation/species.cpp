#include "privi/curation/species.hpp"

#include <algorithm>

#include "privi/common/error.hpp"

namespace privi::curation {

std::optional<std::string> assign_species(const Snippet& snippet, const SourceDataset& source) {
  require(!snippet.boxes.empty(), "assign_species: snippet '" + snippet.snippet_id + "' has no boxes");
  if (source.species.size() == 1) return source.species.front();
  const auto top = std::max_element(snippet.boxes.begin(), snippet.boxes.end(),
                                    [](const DetectionBox& a, const DetectionBox& b) { return a.score < b.score; });
  if (std::find(source.species.begin(), source.species.end(), top->label) != source.species.end()) return top->label;
  return std::nullopt;
}

}  // namespace privi::curation
