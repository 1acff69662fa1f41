#pragma once

#include <string>
#include <vector>

#include "privi/curation/types.hpp"

namespace privi::curation {

inline constexpr double kDefaultSnippetLength = 3.0;

// Splits [0, duration_s) at the cuts into cut-free segments and places
// windows of length_s at start + k * stride_s inside each segment; windows
// running past the segment end are dropped. Keyframes sit at window centers.
// Snippet ids are "<video_ref>@<start in ms, 9 digits>".
std::vector<Snippet> chunk_timeline(const std::string& video_ref, const std::string& source_id, double duration_s,
                                    const CutList& cuts, double length_s, double stride_s);

std::string snippet_id_for(const std::string& video_ref, double start_s);

// Discards (cut_overlap) kept snippets whose interior contains a cut.
// Returns the number newly discarded.
std::size_t mark_cut_overlaps(std::vector<Snippet>& snippets, const CutList& cuts);

}  // namespace privi::curation
