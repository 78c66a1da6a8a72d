#include "sagnn/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <unordered_set>

#include "sagnn/error.hpp"
#include "sagnn/rng.hpp"

namespace sagnn {

namespace {

enum : std::uint64_t { kStructure = 1, kFeatures = 2, kLowSignal = 3, kDirection = 4 };

std::vector<double> powerlaw_cdf(double exponent, std::size_t cap) {
  std::vector<double> cdf(cap);
  double total = 0.0;
  for (std::size_t k = 1; k <= cap; ++k) {
    total += std::pow(static_cast<double>(k), -exponent);
    cdf[k - 1] = total;
  }
  for (auto& c : cdf) c /= total;
  return cdf;
}

// Draws `count` distinct members of `pool`, skipping `exclude`.
void draw_distinct(const std::vector<std::uint32_t>& pool, std::uint32_t exclude, std::size_t count,
                   std::unordered_set<std::uint32_t>& chosen, Rng& rng) {
  std::size_t available = pool.size();
  for (auto u : chosen) available -= std::binary_search(pool.begin(), pool.end(), u);
  available -= std::binary_search(pool.begin(), pool.end(), exclude) && !chosen.contains(exclude);
  count = std::min(count, available);
  while (count > 0) {
    const auto u = pool[uniform_index(rng, pool.size())];
    if (u == exclude || chosen.contains(u)) continue;
    chosen.insert(u);
    --count;
  }
}

}  // namespace

void SynthConfig::validate() const {
  if (num_users < 2) throw ValidationError("num_users must be >= 2 (one per camp)");
  if (!(mean_tweets_per_user >= 1.0) || !std::isfinite(mean_tweets_per_user)) {
    throw ValidationError("mean_tweets_per_user must be >= 1");
  }
  if (!(epsilon >= 0.0 && epsilon < 0.5)) throw ValidationError("epsilon must be in [0, 0.5)");
  if (!(retweet_rate >= 0.0) || !std::isfinite(retweet_rate)) throw ValidationError("retweet_rate must be >= 0");
  if (!(powerlaw_exponent > 0.0) || !std::isfinite(powerlaw_exponent)) {
    throw ValidationError("powerlaw_exponent must be > 0");
  }
  if (retweet_cap < 1) throw ValidationError("retweet_cap must be >= 1");
  if (feature_dim < 1) throw ValidationError("feature_dim must be >= 1");
  if (!(class_separation >= 0.0) || !std::isfinite(class_separation)) {
    throw ValidationError("class_separation must be >= 0");
  }
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) throw ValidationError("noise_sigma must be >= 0");
  if (!(low_signal_fraction >= 0.0 && low_signal_fraction <= 1.0)) {
    throw ValidationError("low_signal_fraction must be in [0, 1]");
  }
}

double capped_powerlaw_mean(double exponent, std::size_t cap) {
  double num = 0.0, den = 0.0;
  for (std::size_t k = 1; k <= cap; ++k) {
    const double p = std::pow(static_cast<double>(k), -exponent);
    num += static_cast<double>(k) * p;
    den += p;
  }
  return num / den;
}

CorpusFiles generate(const SynthConfig& cfg) {
  cfg.validate();
  const auto num_users = static_cast<std::uint32_t>(cfg.num_users);
  std::vector<std::uint32_t> camp_users[2];
  for (std::uint32_t u = 0; u < num_users; ++u) camp_users[u % 2].push_back(u);

  Rng structure(substream(cfg.seed, kStructure));
  std::geometric_distribution<std::size_t> extra_tweets(1.0 / cfg.mean_tweets_per_user);
  const auto cdf = powerlaw_cdf(cfg.powerlaw_exponent, cfg.retweet_cap);
  const double engaged = std::min(1.0, cfg.retweet_rate / capped_powerlaw_mean(cfg.powerlaw_exponent, cfg.retweet_cap));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  CorpusFiles out;
  std::vector<std::string> user_ids(num_users);
  for (std::uint32_t u = 0; u < num_users; ++u) user_ids[u] = "u" + std::to_string(u);

  for (std::uint32_t author = 0; author < num_users; ++author) {
    const std::size_t n_tweets = 1 + extra_tweets(structure);
    const int camp = static_cast<int>(author % 2);
    for (std::size_t i = 0; i < n_tweets; ++i) {
      const std::string id = "t" + std::to_string(out.ids.size());
      out.ids.push_back(id);
      out.labels.push_back(camp);
      out.edges.push_back({id, user_ids[author], EdgeType::Post});

      std::size_t retweets = 0;
      if (cfg.retweet_rate > 0.0 && unit(structure) < engaged) {
        const double r = unit(structure);
        retweets = static_cast<std::size_t>(std::lower_bound(cdf.begin(), cdf.end(), r) - cdf.begin()) + 1;
        retweets = std::min(retweets, cfg.retweet_cap);
      }
      std::size_t cross = 0;
      for (std::size_t k = 0; k < retweets; ++k) cross += unit(structure) < cfg.epsilon;
      std::unordered_set<std::uint32_t> same_set, cross_set;
      draw_distinct(camp_users[camp], author, retweets - cross, same_set, structure);
      draw_distinct(camp_users[1 - camp], author, cross, cross_set, structure);
      std::vector<std::uint32_t> retweeters(same_set.begin(), same_set.end());
      retweeters.insert(retweeters.end(), cross_set.begin(), cross_set.end());
      std::sort(retweeters.begin(), retweeters.end());
      for (auto u : retweeters) out.edges.push_back({id, user_ids[u], EdgeType::Retweet});
    }
  }

  const std::size_t n = out.ids.size();
  const std::size_t d = cfg.feature_dim;
  Rng direction_rng(substream(cfg.seed, kDirection));
  std::normal_distribution<double> standard(0.0, 1.0);
  std::vector<double> direction(d);
  double norm = 0.0;
  while (norm == 0.0) {
    for (auto& x : direction) x = standard(direction_rng);
    norm = 0.0;
    for (double x : direction) norm += x * x;
    norm = std::sqrt(norm);
  }
  for (auto& x : direction) x /= norm;

  Rng low_rng(substream(cfg.seed, kLowSignal));
  std::vector<int> low(n);
  for (auto& f : low) f = unit(low_rng) < cfg.low_signal_fraction ? 1 : 0;

  Rng feature_rng(substream(cfg.seed, kFeatures));
  out.features = Matrix(n, d);
  for (std::size_t t = 0; t < n; ++t) {
    const double offset = low[t] ? 0.0 : (out.labels[t] == 1 ? 0.5 : -0.5) * cfg.class_separation;
    auto row = out.features.row(t);
    for (std::size_t c = 0; c < d; ++c) row[c] = offset * direction[c] + cfg.noise_sigma * standard(feature_rng);
  }
  out.low_signal = std::move(low);
  return out;
}

DegreeReport degree_report(const BipartiteGraph& graph) {
  const auto n = graph.num_tweets();
  DegreeReport report;
  report.first_order.resize(n);
  report.second_order.resize(n);
  std::vector<std::uint32_t> user_mark(graph.num_users(), UINT32_MAX);
  std::vector<std::uint32_t> tweet_mark(n, UINT32_MAX);
  for (std::uint32_t t = 0; t < n; ++t) {
    std::size_t users = 0, tweets = 0;
    tweet_mark[t] = t;
    for (const auto& u : graph.users_of(t)) {
      if (user_mark[u.index] == t) continue;
      user_mark[u.index] = t;
      ++users;
      for (const auto& w : graph.tweets_of(u.index)) {
        if (tweet_mark[w.index] == t) continue;
        tweet_mark[w.index] = t;
        ++tweets;
      }
    }
    report.first_order[t] = users;
    report.second_order[t] = tweets;
    ++report.first_order_histogram[users];
    ++report.second_order_histogram[tweets];
  }
  return report;
}

}  // namespace sagnn
