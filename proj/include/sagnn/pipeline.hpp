#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sagnn/autodiff.hpp"
#include "sagnn/dataset.hpp"
#include "sagnn/graph.hpp"

namespace sagnn {

// The two camps. Which one is label 1 is chosen when labeling.
enum class Polarity : std::uint8_t { ProA, ProB };
enum class LexiconSource : std::uint8_t { Seed, Expanded };

std::string_view to_string(Polarity p);
std::string_view to_string(LexiconSource s);

struct LexiconEntry {
  Polarity polarity = Polarity::ProA;
  LexiconSource source = LexiconSource::Seed;

  bool operator==(const LexiconEntry&) const = default;
};

class HashtagLexicon {
 public:
  // Keys are stored lowercase without '#'. Re-adding a tag with the other
  // polarity is an error.
  void add(std::string_view tag, Polarity polarity, LexiconSource source);
  const LexiconEntry* find(std::string_view tag) const;
  const std::map<std::string, LexiconEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  bool operator==(const HashtagLexicon&) const = default;

 private:
  std::map<std::string, LexiconEntry> entries_;
};

// TSV: tag<TAB>{proA|proB}<TAB>{seed|expanded}
HashtagLexicon read_lexicon_tsv(const std::filesystem::path& path);
void write_lexicon_tsv(const HashtagLexicon& lexicon, const std::filesystem::path& path);

struct RawPost {
  std::string id;
  std::string text;
  std::string author;
  std::vector<std::string> retweeters;
  // Id of the original post when this post is a retweet copy.
  std::optional<std::string> retweet_of;
  std::optional<std::int64_t> timestamp;

  bool operator==(const RawPost&) const = default;
};

// JSON Lines: {"id","text","author","retweeters":[...]} with optional
// "retweet_of" and "timestamp".
std::vector<RawPost> read_posts_jsonl(const std::filesystem::path& path);
void write_posts_jsonl(std::span<const RawPost> posts, const std::filesystem::path& path);

// '#' followed by a maximal run of tag characters (ASCII letters, digits,
// '_', and any non-ASCII byte so UTF-8 letters stay whole). ASCII is
// lowercased; duplicates are kept in order.
std::vector<std::string> extract_hashtags(std::string_view text);

bool is_retweet_copy(std::string_view text);  // starts with "RT @"

struct ExpansionConfig {
  std::size_t min_cooccur = 5;
  double purity = 0.9;
  std::size_t rounds = 1;

  void validate() const;
};

// Per-tag co-occurrence counts with lexicon tags of each polarity: the
// number of posts containing the tag and at least one lexicon tag of that
// polarity.
struct Cooccurrence {
  std::size_t with_a = 0;
  std::size_t with_b = 0;
};

std::map<std::string, Cooccurrence> cooccurrence_counts(const HashtagLexicon& lexicon,
                                                        std::span<const RawPost> posts);

// A non-lexicon tag joins polarity p when count_p >= min_cooccur and
// count_p / (count_a + count_b) >= purity. Retweet copies are ignored.
HashtagLexicon expand_lexicon(const HashtagLexicon& seed, std::span<const RawPost> posts,
                              const ExpansionConfig& cfg);

struct LabeledPost {
  std::string id;
  std::string text;  // lexicon tags removed
  int label = 0;
  std::string author;
  std::vector<std::string> retweeters;

  bool operator==(const LabeledPost&) const = default;
};

struct DropCounts {
  std::size_t retweets_folded = 0;
  std::size_t retweets_orphaned = 0;
  std::size_t no_lexicon_tag = 0;
  std::size_t mixed_polarity = 0;

  bool operator==(const DropCounts&) const = default;
};

struct LabeledCorpus {
  std::vector<LabeledPost> posts;
  DropCounts drops;
};

// Removes every lexicon hashtag occurrence and collapses the whitespace left
// behind. Other hashtags are kept.
std::string strip_lexicon_tags(std::string_view text, const HashtagLexicon& lexicon);

// Folds retweet copies into their originals' retweeter lists, keeps posts
// whose lexicon tags are present and unanimous, labels them (1 when the
// polarity equals `positive`) and strips the lexicon tags.
LabeledCorpus label_and_clean(std::span<const RawPost> posts, const HashtagLexicon& lexicon,
                              Polarity positive = Polarity::ProB);

// One Post edge per post and one Retweet edge per distinct retweeter.
std::vector<EdgeRecord> corpus_edges(std::span<const LabeledPost> posts);

enum class FeatureMode : std::uint8_t { HashedTokens, ExternalFile };

struct FeaturizeConfig {
  FeatureMode mode = FeatureMode::HashedTokens;
  std::size_t dim = 256;
  std::filesystem::path external_path;
};

// Lowercased tokens split at non-tag characters.
std::vector<std::string> tokenize(std::string_view text);
std::uint64_t fnv1a64(std::string_view s);
// Signed feature hashing of unigrams and bigrams, then row L2 normalization.
std::vector<double> hashed_features(std::string_view text, std::size_t dim);

Matrix featurize(std::span<const LabeledPost> posts, const FeaturizeConfig& cfg);

CorpusFiles to_corpus_files(const LabeledCorpus& corpus, const FeaturizeConfig& cfg);

}  // namespace sagnn
