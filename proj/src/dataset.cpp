#include "sagnn/dataset.hpp"

#include <cmath>
#include <fstream>
#include <unordered_map>

#include "sagnn/error.hpp"
#include "text_util.hpp"

namespace sagnn {

IdFlags read_flags_tsv(const std::filesystem::path& path) {
  auto in = text::open_in(path.string());
  IdFlags out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto view = text::strip_cr(line);
    if (view.empty()) continue;
    auto fields = text::split(view, '\t');
    if (fields.size() != 2 || fields[0].empty() || (fields[1] != "0" && fields[1] != "1")) {
      throw ValidationError(text::where(path.string(), line_no) + "expected id<TAB>{0|1}");
    }
    out.ids.emplace_back(fields[0]);
    out.values.push_back(fields[1] == "1" ? 1 : 0);
  }
  return out;
}

void write_flags_tsv(const std::vector<std::string>& ids, const std::vector<int>& values,
                     const std::filesystem::path& path) {
  if (ids.size() != values.size()) throw ValidationError("ids and values differ in length");
  auto out = text::open_out(path.string());
  for (std::size_t i = 0; i < ids.size(); ++i) out << ids[i] << '\t' << values[i] << '\n';
}

FeatureTable read_features(const std::filesystem::path& path) {
  auto in = text::open_in(path.string());
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path.string() + ": empty features file");
  auto header = text::split(text::strip_cr(line), ' ');
  std::size_t dim = 0;
  if (header.size() != 2 || header[0] != "dim" || !text::parse_int(header[1], dim) || dim == 0) {
    throw ValidationError(text::where(path.string(), 1) + "expected header 'dim <d>' with d > 0");
  }
  FeatureTable table;
  std::vector<double> data;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    auto view = text::strip_cr(line);
    if (view.empty()) continue;
    auto fields = text::split(view, '\t');
    if (fields.size() != dim + 1 || fields[0].empty()) {
      throw ValidationError(text::where(path.string(), line_no) + "expected id and " + std::to_string(dim) +
                            " values");
    }
    table.ids.emplace_back(fields[0]);
    for (std::size_t c = 1; c <= dim; ++c) {
      double v = 0.0;
      if (!text::parse_double(fields[c], v) || !std::isfinite(v)) {
        throw ValidationError(text::where(path.string(), line_no) + "bad feature value '" + std::string(fields[c]) +
                              "'");
      }
      data.push_back(v);
    }
  }
  table.rows = Matrix(table.ids.size(), dim, std::move(data));
  return table;
}

void write_features(const std::vector<std::string>& ids, const Matrix& rows, const std::filesystem::path& path) {
  if (ids.size() != rows.rows()) throw ValidationError("ids and feature rows differ in length");
  if (rows.cols() == 0) throw ValidationError("feature dimension must be > 0");
  auto out = text::open_out(path.string());
  out << "dim " << rows.cols() << '\n';
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out << ids[i];
    for (double v : rows.row(i)) out << '\t' << text::format_double(v);
    out << '\n';
  }
}

void write_corpus(const CorpusFiles& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_flags_tsv(corpus.ids, corpus.labels, dir / kLabelsFile);
  write_edge_tsv(corpus.edges, dir / kEdgesFile);
  write_features(corpus.ids, corpus.features, dir / kFeaturesFile);
  if (corpus.low_signal) {
    write_flags_tsv(corpus.ids, *corpus.low_signal, dir / kLowSignalFile);
  } else {
    std::filesystem::remove(dir / kLowSignalFile);
  }
}

CorpusFiles read_corpus(const std::filesystem::path& dir) {
  CorpusFiles corpus;
  auto labels = read_flags_tsv(dir / kLabelsFile);
  corpus.ids = std::move(labels.ids);
  corpus.labels = std::move(labels.values);
  corpus.edges = read_edge_tsv(dir / kEdgesFile);

  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < corpus.ids.size(); ++i) {
    if (!position.emplace(corpus.ids[i], i).second) {
      throw ValidationError("duplicate id '" + corpus.ids[i] + "' in labels");
    }
  }
  auto features = read_features(dir / kFeaturesFile);
  corpus.features = Matrix(corpus.ids.size(), features.rows.cols());
  std::vector<bool> filled(corpus.ids.size(), false);
  for (std::size_t i = 0; i < features.ids.size(); ++i) {
    auto it = position.find(features.ids[i]);
    if (it == position.end()) continue;  // extra rows are allowed
    std::copy(features.rows.row(i).begin(), features.rows.row(i).end(), corpus.features.row(it->second).begin());
    filled[it->second] = true;
  }
  for (std::size_t i = 0; i < filled.size(); ++i) {
    if (!filled[i]) throw ValidationError("features file has no row for id '" + corpus.ids[i] + "'");
  }
  if (std::filesystem::exists(dir / kLowSignalFile)) {
    auto flags = read_flags_tsv(dir / kLowSignalFile);
    std::vector<int> low(corpus.ids.size(), 0);
    for (std::size_t i = 0; i < flags.ids.size(); ++i) {
      auto it = position.find(flags.ids[i]);
      if (it != position.end()) low[it->second] = flags.values[i];
    }
    corpus.low_signal = std::move(low);
  }
  return corpus;
}

Dataset make_dataset(const CorpusFiles& corpus, bool strict_author) {
  if (corpus.labels.size() != corpus.ids.size() || corpus.features.rows() != corpus.ids.size()) {
    throw ValidationError("corpus arrays are not aligned with ids");
  }
  Dataset ds;
  ds.graph = build_graph(corpus.edges, strict_author);
  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < corpus.ids.size(); ++i) position.emplace(corpus.ids[i], i);
  const auto n = ds.graph.num_tweets();
  ds.features = Matrix(n, corpus.features.cols());
  ds.labels.resize(n);
  if (corpus.low_signal) ds.low_signal = std::vector<int>(n, 0);
  for (std::uint32_t t = 0; t < n; ++t) {
    const auto& id = ds.graph.tweet_ids()[t];
    auto it = position.find(id);
    if (it == position.end()) throw ValidationError("graph tweet '" + id + "' has no label/feature row");
    ds.labels[t] = corpus.labels[it->second];
    std::copy(corpus.features.row(it->second).begin(), corpus.features.row(it->second).end(),
              ds.features.row(t).begin());
    if (ds.low_signal) (*ds.low_signal)[t] = (*corpus.low_signal)[it->second];
  }
  return ds;
}

}  // namespace sagnn
