#include "privi/classifier/feature_set.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "privi/common/error.hpp"
#include "privi/common/io.hpp"
#include "privi/common/rng.hpp"
#include "privi/curation/embedding_store.hpp"

namespace privi::clf {

using nlohmann::json;

std::vector<std::string> FeatureSet::sequence_ids() const {
  std::vector<std::string> ids;
  ids.reserve(samples.size());
  for (const auto& s : samples) ids.push_back(s.sequence_id);
  return ids;
}

FeatureSet FeatureSet::subset(const std::vector<std::size_t>& indices) const {
  FeatureSet out{task, classes, class_names, {}};
  out.samples.reserve(indices.size());
  for (auto i : indices) {
    require(i < samples.size(), "subset index out of range");
    out.samples.push_back(samples[i]);
  }
  return out;
}

std::vector<double> FeatureSet::class_frequencies() const {
  std::vector<double> freq(classes, 0.0);
  double total = 0.0;
  for (const auto& s : samples) {
    if (task == Task::single_label) {
      freq[s.label] += 1.0;
      total += 1.0;
    } else {
      for (std::size_t c = 0; c < classes; ++c) {
        freq[c] += s.labels[c];
        total += s.labels[c];
      }
    }
  }
  if (total == 0.0) return std::vector<double>(classes, 1.0 / static_cast<double>(classes));
  for (auto& f : freq) f /= total;
  return freq;
}

void FeatureSet::validate() const {
  require(classes >= 2, "feature set needs at least 2 classes");
  require(class_names.empty() || class_names.size() == classes, "class_names length differs from class count");
  std::set<std::string> seen;
  for (const auto& s : samples) {
    require(seen.insert(s.sample_id).second, "duplicate sample id '" + s.sample_id + "'");
    require(!s.sequence_id.empty(), "sample '" + s.sample_id + "' has no sequence id");
    require(s.features.tokens.size() == s.features.n * s.features.d, "sample '" + s.sample_id + "' token shape mismatch");
    if (task == Task::single_label) {
      require(s.label < classes, "sample '" + s.sample_id + "' label out of range");
    } else {
      require(s.labels.size() == classes, "sample '" + s.sample_id + "' needs a length-C label vector");
      for (int v : s.labels) require(v == 0 || v == 1, "multi-label entries must be 0 or 1");
    }
  }
}

void save_feature_set(const std::filesystem::path& path, const FeatureSet& set) {
  set.validate();
  std::ostringstream out;
  json header = {{"task", to_string(set.task)}, {"classes", set.classes}, {"class_names", set.class_names},
                 {"count", set.samples.size()}};
  out << header.dump() << "\n";
  std::size_t n = 0, d = 0;
  if (!set.samples.empty()) {
    n = set.samples[0].features.n;
    d = set.samples[0].features.d;
  }
  curation::EmbeddingStore tokens(static_cast<std::uint32_t>(std::max<std::size_t>(n * d, 1)));
  for (const auto& s : set.samples) {
    require(s.features.n == n && s.features.d == d, "feature set samples must share one token shape");
    json line = {{"sample_id", s.sample_id}, {"sequence_id", s.sequence_id}, {"view_id", s.view_id},
                 {"n", n},                   {"d", d},                       {"provider_id", s.features.provider_id},
                 {"miniclip_ref", s.features.miniclip_ref}};
    if (set.task == Task::single_label)
      line["label"] = s.label;
    else
      line["labels"] = s.labels;
    out << line.dump() << "\n";
    tokens.add(s.sample_id, s.features.tokens);
  }
  tokens.save(path.string() + ".tokens");
  write_file_atomic(path, out.str());
}

FeatureSet load_feature_set(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "feature set '" + path.string() + "' is empty");
  FeatureSet set;
  try {
    const json header = json::parse(line);
    set.task = parse_task(header.at("task").get<std::string>());
    set.classes = header.at("classes").get<std::size_t>();
    set.class_names = header.at("class_names").get<std::vector<std::string>>();
    const auto tokens = curation::EmbeddingStore::load(path.string() + ".tokens");
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json j = json::parse(line);
      Sample s;
      s.sample_id = j.at("sample_id").get<std::string>();
      s.sequence_id = j.at("sequence_id").get<std::string>();
      s.view_id = j.at("view_id").get<int>();
      s.features.n = j.at("n").get<std::size_t>();
      s.features.d = j.at("d").get<std::size_t>();
      s.features.provider_id = j.at("provider_id").get<std::string>();
      s.features.miniclip_ref = j.at("miniclip_ref").get<std::string>();
      if (set.task == Task::single_label)
        s.label = j.at("label").get<std::size_t>();
      else
        s.labels = j.at("labels").get<std::vector<int>>();
      const auto row = tokens.find(s.sample_id);
      require(row.has_value(), "no tokens stored for sample '" + s.sample_id + "'");
      s.features.tokens.assign(row->begin(), row->end());
      set.samples.push_back(std::move(s));
    }
    require(set.samples.size() == header.at("count").get<std::size_t>(), "feature set sample count mismatch");
  } catch (const json::exception& e) {
    throw ContractError("malformed feature set '" + path.string() + "': " + e.what());
  }
  set.validate();
  return set;
}

FeatureSet make_synthetic_task(const SyntheticTaskOptions& o) {
  require(o.classes >= 2 && o.tokens >= o.informative_tokens && o.informative_tokens >= 1 && o.dim >= 1,
          "synthetic task options are inconsistent");
  // Class directions depend on the seed only; samples also on the split.
  Rng mean_rng(o.seed, 0x7a5c);
  std::vector<std::vector<double>> means(o.classes, std::vector<double>(o.dim));
  for (auto& m : means) {
    double norm = 0.0;
    for (auto& v : m) {
      v = mean_rng.normal();
      norm += v * v;
    }
    for (auto& v : m) v *= o.signal / std::sqrt(norm);
  }
  FeatureSet set;
  set.task = o.task;
  set.classes = o.classes;
  for (std::size_t c = 0; c < o.classes; ++c) set.class_names.push_back("class" + std::to_string(c));

  Rng rng(o.seed, 0x5a3e0000 + o.split);
  for (std::size_t q = 0; q < o.sequences; ++q) {
    char seq[32];
    std::snprintf(seq, sizeof(seq), "s%zu-seq%05zu", o.split, q);
    std::vector<double> offset(o.dim);
    for (auto& v : offset) v = rng.normal(0.0, o.sequence_noise);
    // Single-label sequences are balanced round-robin over classes.
    const std::size_t seq_label = q % o.classes;
    for (std::size_t k = 0; k < o.samples_per_sequence; ++k) {
      Sample s;
      s.sample_id = std::string(seq) + "/" + std::to_string(k);
      s.sequence_id = seq;
      s.features.n = o.tokens;
      s.features.d = o.dim;
      s.features.provider_id = "synthetic-task";
      s.features.miniclip_ref = s.sample_id;
      std::vector<std::size_t> present;
      if (o.task == Task::single_label) {
        s.label = seq_label;
        present.push_back(seq_label);
      } else {
        s.labels.assign(o.classes, 0);
        for (std::size_t c = 0; c < o.classes; ++c)
          if (rng.bernoulli(o.positive_rate)) {
            s.labels[c] = 1;
            present.push_back(c);
          }
      }
      std::vector<std::size_t> slots(o.tokens);
      for (std::size_t i = 0; i < o.tokens; ++i) slots[i] = i;
      std::shuffle(slots.begin(), slots.end(), rng.engine());
      s.features.tokens.resize(o.tokens * o.dim);
      for (std::size_t i = 0; i < o.tokens; ++i)
        for (std::size_t j = 0; j < o.dim; ++j)
          s.features.tokens[i * o.dim + j] = static_cast<float>(rng.normal(0.0, o.noise) + offset[j]);
      for (std::size_t t = 0; t < o.informative_tokens; ++t)
        for (auto c : present)
          for (std::size_t j = 0; j < o.dim; ++j)
            s.features.tokens[slots[t] * o.dim + j] += static_cast<float>(means[c][j]);
      set.samples.push_back(std::move(s));
    }
  }
  return set;
}

}  // namespace privi::clf
