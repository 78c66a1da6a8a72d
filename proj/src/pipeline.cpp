#include "sagnn/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "sagnn/error.hpp"
#include "sagnn/rng.hpp"
#include "text_util.hpp"

namespace sagnn {

namespace {

bool is_tag_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u >= 0x80 || (u >= '0' && u <= '9') || (u >= 'a' && u <= 'z') || (u >= 'A' && u <= 'Z') || u == '_';
}

char lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = lower(c);
  return out;
}

struct TagSpan {
  std::size_t begin;  // position of '#'
  std::size_t end;    // one past the last tag character
  std::string tag;
};

std::vector<TagSpan> scan_tags(std::string_view text) {
  std::vector<TagSpan> spans;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] != '#') {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < text.size() && is_tag_char(text[j])) ++j;
    if (j > i + 1) spans.push_back({i, j, lowercase(text.substr(i + 1, j - i - 1))});
    i = j == i + 1 ? i + 1 : j;
  }
  return spans;
}

Polarity parse_polarity(std::string_view s) {
  if (s == "proA") return Polarity::ProA;
  if (s == "proB") return Polarity::ProB;
  throw ValidationError("unknown polarity '" + std::string(s) + "'");
}

LexiconSource parse_source(std::string_view s) {
  if (s == "seed") return LexiconSource::Seed;
  if (s == "expanded") return LexiconSource::Expanded;
  throw ValidationError("unknown lexicon source '" + std::string(s) + "'");
}

std::string id_string(const nlohmann::json& j, const char* field, const std::string& where) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return j.dump();
  throw ValidationError(where + "field '" + field + "' must be a string");
}

}  // namespace

std::string_view to_string(Polarity p) { return p == Polarity::ProA ? "proA" : "proB"; }
std::string_view to_string(LexiconSource s) { return s == LexiconSource::Seed ? "seed" : "expanded"; }

void HashtagLexicon::add(std::string_view tag, Polarity polarity, LexiconSource source) {
  std::string key = lowercase(tag);
  if (!key.empty() && key.front() == '#') key.erase(0, 1);
  if (key.empty()) throw ValidationError("empty hashtag in lexicon");
  auto [it, inserted] = entries_.emplace(key, LexiconEntry{polarity, source});
  if (!inserted && it->second.polarity != polarity) {
    throw ValidationError("hashtag '" + key + "' listed with both polarities");
  }
}

const LexiconEntry* HashtagLexicon::find(std::string_view tag) const {
  auto it = entries_.find(std::string(tag));
  return it == entries_.end() ? nullptr : &it->second;
}

HashtagLexicon read_lexicon_tsv(const std::filesystem::path& path) {
  auto in = text::open_in(path.string());
  HashtagLexicon lex;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto view = text::strip_cr(line);
    if (view.empty()) continue;
    auto fields = text::split(view, '\t');
    if (fields.size() != 3) {
      throw ValidationError(text::where(path.string(), line_no) + "expected tag<TAB>{proA|proB}<TAB>{seed|expanded}");
    }
    try {
      lex.add(fields[0], parse_polarity(fields[1]), parse_source(fields[2]));
    } catch (const ValidationError& e) {
      throw ValidationError(text::where(path.string(), line_no) + e.what());
    }
  }
  return lex;
}

void write_lexicon_tsv(const HashtagLexicon& lexicon, const std::filesystem::path& path) {
  auto out = text::open_out(path.string());
  for (const auto& [tag, e] : lexicon.entries()) {
    out << tag << '\t' << to_string(e.polarity) << '\t' << to_string(e.source) << '\n';
  }
}

std::vector<RawPost> read_posts_jsonl(const std::filesystem::path& path) {
  auto in = text::open_in(path.string());
  std::vector<RawPost> posts;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto view = text::strip_cr(line);
    if (view.find_first_not_of(" \t") == std::string_view::npos) continue;
    const auto where = text::where(path.string(), line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(view);
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError(where + "invalid JSON: " + e.what());
    }
    if (!j.is_object()) throw ValidationError(where + "expected a JSON object");
    for (const char* field : {"id", "text", "author"}) {
      if (!j.contains(field)) throw ValidationError(where + "missing field '" + field + "'");
    }
    RawPost p;
    p.id = id_string(j["id"], "id", where);
    if (!j["text"].is_string()) throw ValidationError(where + "field 'text' must be a string");
    p.text = j["text"].get<std::string>();
    p.author = id_string(j["author"], "author", where);
    if (j.contains("retweeters")) {
      if (!j["retweeters"].is_array()) throw ValidationError(where + "field 'retweeters' must be an array");
      for (const auto& r : j["retweeters"]) p.retweeters.push_back(id_string(r, "retweeters", where));
    }
    if (j.contains("retweet_of") && !j["retweet_of"].is_null()) p.retweet_of = id_string(j["retweet_of"], "retweet_of", where);
    if (j.contains("timestamp") && !j["timestamp"].is_null()) {
      if (!j["timestamp"].is_number_integer()) throw ValidationError(where + "field 'timestamp' must be an integer");
      p.timestamp = j["timestamp"].get<std::int64_t>();
    }
    if (p.id.empty() || p.author.empty()) throw ValidationError(where + "empty id or author");
    if (!ids.insert(p.id).second) throw ValidationError(where + "duplicate post id '" + p.id + "'");
    posts.push_back(std::move(p));
  }
  return posts;
}

void write_posts_jsonl(std::span<const RawPost> posts, const std::filesystem::path& path) {
  auto out = text::open_out(path.string());
  for (const auto& p : posts) {
    nlohmann::ordered_json j;
    j["id"] = p.id;
    j["text"] = p.text;
    j["author"] = p.author;
    j["retweeters"] = p.retweeters;
    if (p.retweet_of) j["retweet_of"] = *p.retweet_of;
    if (p.timestamp) j["timestamp"] = *p.timestamp;
    out << j.dump() << '\n';
  }
}

std::vector<std::string> extract_hashtags(std::string_view text) {
  std::vector<std::string> tags;
  for (auto& s : scan_tags(text)) tags.push_back(std::move(s.tag));
  return tags;
}

bool is_retweet_copy(std::string_view text) { return text.starts_with("RT @"); }

void ExpansionConfig::validate() const {
  if (!(purity > 0.5 && purity <= 1.0)) throw ValidationError("purity must be in (0.5, 1]");
  if (rounds < 1) throw ValidationError("rounds must be >= 1");
}

std::map<std::string, Cooccurrence> cooccurrence_counts(const HashtagLexicon& lexicon,
                                                        std::span<const RawPost> posts) {
  std::map<std::string, Cooccurrence> counts;
  for (const auto& post : posts) {
    if (is_retweet_copy(post.text)) continue;
    auto tags = extract_hashtags(post.text);
    std::set<std::string> unique(tags.begin(), tags.end());
    bool has_a = false, has_b = false;
    for (const auto& t : unique) {
      if (const auto* e = lexicon.find(t)) (e->polarity == Polarity::ProA ? has_a : has_b) = true;
    }
    if (!has_a && !has_b) continue;
    for (const auto& t : unique) {
      if (lexicon.find(t) != nullptr) continue;
      auto& c = counts[t];
      c.with_a += has_a;
      c.with_b += has_b;
    }
  }
  return counts;
}

HashtagLexicon expand_lexicon(const HashtagLexicon& seed, std::span<const RawPost> posts,
                              const ExpansionConfig& cfg) {
  cfg.validate();
  if (seed.empty()) throw ValidationError("seed lexicon is empty");
  HashtagLexicon lex = seed;
  for (std::size_t round = 0; round < cfg.rounds; ++round) {
    std::size_t added = 0;
    for (const auto& [tag, c] : cooccurrence_counts(lex, posts)) {
      const double total = static_cast<double>(c.with_a + c.with_b);
      const bool qualifies_a = c.with_a >= cfg.min_cooccur && c.with_a / total >= cfg.purity;
      const bool qualifies_b = c.with_b >= cfg.min_cooccur && c.with_b / total >= cfg.purity;
      if (qualifies_a == qualifies_b) continue;  // neither, or a conflict
      lex.add(tag, qualifies_a ? Polarity::ProA : Polarity::ProB, LexiconSource::Expanded);
      ++added;
    }
    if (added == 0) break;
  }
  return lex;
}

std::string strip_lexicon_tags(std::string_view text, const HashtagLexicon& lexicon) {
  std::string kept;
  kept.reserve(text.size());
  std::size_t pos = 0;
  for (const auto& span : scan_tags(text)) {
    if (lexicon.find(span.tag) == nullptr) continue;
    kept.append(text.substr(pos, span.begin - pos));
    pos = span.end;
  }
  kept.append(text.substr(pos));
  std::string out;
  out.reserve(kept.size());
  bool pending_space = false;
  for (char c : kept) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

LabeledCorpus label_and_clean(std::span<const RawPost> posts, const HashtagLexicon& lexicon, Polarity positive) {
  LabeledCorpus corpus;
  std::unordered_map<std::string, std::size_t> original_index;
  std::vector<RawPost> originals;
  for (const auto& p : posts) {
    if (is_retweet_copy(p.text)) continue;
    original_index.emplace(p.id, originals.size());
    originals.push_back(p);
  }
  for (const auto& p : posts) {
    if (!is_retweet_copy(p.text)) continue;
    auto it = p.retweet_of ? original_index.find(*p.retweet_of) : original_index.end();
    if (it == original_index.end()) {
      ++corpus.drops.retweets_orphaned;
      continue;
    }
    originals[it->second].retweeters.push_back(p.author);
    ++corpus.drops.retweets_folded;
  }
  for (auto& p : originals) {
    bool has_a = false, has_b = false;
    for (const auto& tag : extract_hashtags(p.text)) {
      if (const auto* e = lexicon.find(tag)) (e->polarity == Polarity::ProA ? has_a : has_b) = true;
    }
    if (!has_a && !has_b) {
      ++corpus.drops.no_lexicon_tag;
      continue;
    }
    if (has_a && has_b) {
      ++corpus.drops.mixed_polarity;
      continue;
    }
    LabeledPost out;
    out.id = p.id;
    out.text = strip_lexicon_tags(p.text, lexicon);
    out.label = (has_a ? Polarity::ProA : Polarity::ProB) == positive ? 1 : 0;
    out.author = p.author;
    std::unordered_set<std::string> seen;
    for (auto& r : p.retweeters) {
      if (seen.insert(r).second) out.retweeters.push_back(std::move(r));
    }
    corpus.posts.push_back(std::move(out));
  }
  return corpus;
}

std::vector<EdgeRecord> corpus_edges(std::span<const LabeledPost> posts) {
  std::vector<EdgeRecord> edges;
  for (const auto& p : posts) {
    edges.push_back({p.id, p.author, EdgeType::Post});
    for (const auto& r : p.retweeters) edges.push_back({p.id, r, EdgeType::Retweet});
  }
  return edges;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char c : text) {
    if (is_tag_char(c)) {
      cur.push_back(lower(c));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<double> hashed_features(std::string_view text, std::size_t dim) {
  if (dim == 0) throw ValidationError("feature dimension must be > 0");
  std::vector<double> row(dim, 0.0);
  auto bump = [&](std::string_view token) {
    const auto h = fnv1a64(token);
    row[h % dim] += (mix64(h) & 1) ? 1.0 : -1.0;
  };
  auto tokens = tokenize(text);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    bump(tokens[i]);
    if (i + 1 < tokens.size()) bump(tokens[i] + " " + tokens[i + 1]);
  }
  double sq = 0.0;
  for (double v : row) sq += v * v;
  if (sq > 0.0) {
    const double inv = 1.0 / std::sqrt(sq);
    for (auto& v : row) v *= inv;
  }
  return row;
}

Matrix featurize(std::span<const LabeledPost> posts, const FeaturizeConfig& cfg) {
  if (cfg.mode == FeatureMode::HashedTokens) {
    if (cfg.dim == 0) throw ValidationError("feature dimension must be > 0");
    Matrix m(posts.size(), cfg.dim);
    for (std::size_t i = 0; i < posts.size(); ++i) {
      auto row = hashed_features(posts[i].text, cfg.dim);
      std::copy(row.begin(), row.end(), m.row(i).begin());
    }
    return m;
  }
  auto table = read_features(cfg.external_path);
  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < table.ids.size(); ++i) position.emplace(table.ids[i], i);
  Matrix m(posts.size(), table.rows.cols());
  for (std::size_t i = 0; i < posts.size(); ++i) {
    auto it = position.find(posts[i].id);
    if (it == position.end()) {
      throw ValidationError("embedding file " + cfg.external_path.string() + " has no row for post '" + posts[i].id + "'");
    }
    std::copy(table.rows.row(it->second).begin(), table.rows.row(it->second).end(), m.row(i).begin());
  }
  return m;
}

CorpusFiles to_corpus_files(const LabeledCorpus& corpus, const FeaturizeConfig& cfg) {
  CorpusFiles files;
  for (const auto& p : corpus.posts) {
    files.ids.push_back(p.id);
    files.labels.push_back(p.label);
  }
  files.features = featurize(corpus.posts, cfg);
  files.edges = corpus_edges(corpus.posts);
  return files;
}

}  // namespace sagnn
