#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "sagnn/dataset.hpp"
#include "sagnn/graph.hpp"

namespace sagnn {

struct SynthConfig {
  std::size_t num_users = 2000;
  double mean_tweets_per_user = 5.0;  // geometric on {1, 2, ...}
  double epsilon = 0.05;              // probability that a retweeter is cross-camp
  double retweet_rate = 3.0;          // expected retweets per tweet
  double powerlaw_exponent = 2.2;
  std::size_t retweet_cap = 200;
  std::size_t feature_dim = 32;
  double class_separation = 1.0;
  double noise_sigma = 1.0;
  double low_signal_fraction = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

// Users alternate camps (user i is in camp i % 2); every tweet takes its
// author's camp as label. Ids are "t<n>" for tweets and "u<n>" for users.
CorpusFiles generate(const SynthConfig& cfg);

// Mean of the capped power law on {1..cap}; with the zero-inflation used by
// the generator a tweet gets retweets with probability min(1, rate / mean).
double capped_powerlaw_mean(double exponent, std::size_t cap);

struct DegreeReport {
  std::vector<std::size_t> first_order;   // distinct users per tweet
  std::vector<std::size_t> second_order;  // distinct other tweets two hops away
  std::map<std::size_t, std::size_t> first_order_histogram;
  std::map<std::size_t, std::size_t> second_order_histogram;
};

DegreeReport degree_report(const BipartiteGraph& graph);

}  // namespace sagnn
