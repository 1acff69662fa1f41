#pragma once

#include <optional>
#include <string>

#include "privi/curation/types.hpp"

namespace privi::curation {

// Single-species source: that species. Multi-species source: the label of the
// highest-scoring box if the source lists it, otherwise unlabeled.
std::optional<std::string> assign_species(const Snippet& snippet, const SourceDataset& source);

}  // namespace privi::curation
