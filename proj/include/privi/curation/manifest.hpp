#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "privi/curation/types.hpp"

namespace privi::curation {

struct Manifest {
  std::vector<Snippet> snippets;
  std::vector<SourceDataset> sources;
};

// One UTF-8 JSON object per line with the fields, in order: snippet_id,
// source_id, video_ref, start_s, end_s, keyframe_time_s, boxes, embedding_ref,
// relevance_score, species, kept, discard_reason. Reals carry at most six
// decimals; absent optionals are null and an empty discard_reason is null.
std::string snippet_to_json_line(const Snippet& s);
Snippet snippet_from_json_line(std::string_view line);

std::string manifest_to_jsonl(const std::vector<Snippet>& snippets);
std::vector<Snippet> manifest_from_jsonl(std::string_view text);
void write_manifest(const std::filesystem::path& path, const std::vector<Snippet>& snippets);
std::vector<Snippet> read_manifest(const std::filesystem::path& path);

std::string sources_to_json(const std::vector<SourceDataset>& sources);
std::vector<SourceDataset> sources_from_json(std::string_view text);

struct CompositionReport {
  double unique_hours = 0.0;
  std::size_t kept_snippets = 0;
  std::size_t total_snippets = 0;
  std::map<std::string, double> species_percent;  // "unlabeled" for snippets without species
  std::map<std::string, double> setting_percent;
  std::map<std::string, std::size_t> source_counts;

  std::string to_json() const;
  // Plain-text table: one block per breakdown, percentages to one decimal.
  std::string to_table() const;
};

struct ManifestBuild {
  Manifest manifest;
  CompositionReport report;
};

// Validates snippet invariants (unique ids, start < end, centered keyframe,
// discard reasons) and tallies the kept snippets. Unique hours count the
// union of kept snippet intervals per video.
ManifestBuild build_manifest(std::vector<Snippet> snippets, const std::vector<SourceDataset>& sources);

}  // namespace privi::curation
