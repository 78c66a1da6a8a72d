#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sagnn/autodiff.hpp"
#include "sagnn/graph.hpp"

namespace sagnn {

// The file-level exchange unit produced by both the weak-labeling pipeline
// and the synthetic generator:
//   labels.tsv      id<TAB>{0|1}
//   edges.tsv       tweet_id<TAB>user_id<TAB>{post|retweet}
//   features.tsv    "dim <d>" then id<TAB>f1<TAB>...<TAB>fd
//   low_signal.tsv  id<TAB>{0|1}   (synthetic corpora only)
struct CorpusFiles {
  std::vector<std::string> ids;
  std::vector<int> labels;  // aligned with ids
  Matrix features;          // row i belongs to ids[i]
  std::vector<EdgeRecord> edges;
  std::optional<std::vector<int>> low_signal;  // aligned with ids

  bool operator==(const CorpusFiles&) const = default;
};

inline constexpr const char* kLabelsFile = "labels.tsv";
inline constexpr const char* kEdgesFile = "edges.tsv";
inline constexpr const char* kFeaturesFile = "features.tsv";
inline constexpr const char* kLowSignalFile = "low_signal.tsv";

void write_corpus(const CorpusFiles& corpus, const std::filesystem::path& dir);
CorpusFiles read_corpus(const std::filesystem::path& dir);

struct IdFlags {
  std::vector<std::string> ids;
  std::vector<int> values;
};

IdFlags read_flags_tsv(const std::filesystem::path& path);
void write_flags_tsv(const std::vector<std::string>& ids, const std::vector<int>& values,
                     const std::filesystem::path& path);

struct FeatureTable {
  std::vector<std::string> ids;
  Matrix rows;
};

FeatureTable read_features(const std::filesystem::path& path);
void write_features(const std::vector<std::string>& ids, const Matrix& rows, const std::filesystem::path& path);

// Graph plus per-tweet arrays aligned with graph tweet indices.
struct Dataset {
  BipartiteGraph graph;
  Matrix features;
  std::vector<int> labels;
  std::optional<std::vector<int>> low_signal;
};

// Builds the graph from the edge list and aligns labels/features to it.
// Every graph tweet needs a label and a feature row.
Dataset make_dataset(const CorpusFiles& corpus, bool strict_author = true);

}  // namespace sagnn
