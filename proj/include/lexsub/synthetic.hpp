#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lexsub/candidates.hpp"
#include "lexsub/corpus.hpp"
#include "lexsub/io.hpp"

namespace lexsub {

struct PlantedPair {
  std::string control_word;
  std::string treatment_word;
  double effect = 0.0;  // delta in [-1, 1]
};

// Sentences are uniform bags of noise words. With probability plant_rate a
// sentence additionally receives one planted word: a pair is chosen
// uniformly and then w1 or w2 with equal odds. The label is
// Bernoulli(base_rate), plus delta when w2 was planted, so every sentence
// holding w1 has a true effect of exactly delta.
struct SyntheticSpec {
  std::size_t vocabulary_size = 25;
  std::size_t n_sentences = 2000;
  std::size_t min_length = 6;
  std::size_t max_length = 12;
  std::vector<PlantedPair> planted{{"ctla", "trta", 0.3}};
  double base_rate = 0.35;
  double plant_rate = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
  io::Json to_json() const;
  static SyntheticSpec from_json(const io::Json& j);
};

struct TruthRecord {
  SubstitutionPair pair;
  std::string sentence_id;
  double effect = 0.0;
};

struct SyntheticData {
  Corpus corpus{Domain::kSynthetic};
  ParaphraseTable paraphrases;   // w1 -> w2 at equivalence 1
  std::map<std::string, std::string> tags;  // every word tagged NN
  std::vector<TruthRecord> truth;  // sorted by (w1, w2, sentence id)

  void save_tag_lexicon(const std::string& path) const;
  void save_truth(const std::string& path, const io::Json* meta = nullptr) const;
};

SyntheticData generate_synthetic(const SyntheticSpec& spec);
std::string noise_word(std::size_t index);

// A domain for exercising the perception classifier. Each word has a
// weight; a sentence is perceived positive with probability
// sigmoid(bias + sum of its word weights). Raters report
// clamp(round(1 + 4 p + noise), 1, 5), and tau is the median-rating
// difference after replacing w1 with w2.
struct PerceptionDomainSpec {
  Domain domain = Domain::kYelp;
  std::string prefix = "d";
  std::size_t n_words = 60;
  double weight_scale = 1.0;
  double bias = 1.5;
  std::size_t n_sentences = 1500;
  std::size_t min_length = 5;
  std::size_t max_length = 9;
  std::size_t n_pairs = 150;
  std::size_t sentences_per_pair = 4;
  int raters = 10;
  double rating_noise = 0.7;
  std::uint64_t seed = 0;
};

struct PerceptionDomain {
  Corpus corpus;
  std::map<std::string, double> weights;
  std::vector<LseTuple> tuples;  // rct_effect set from simulated ratings
};

PerceptionDomain generate_perception_domain(const PerceptionDomainSpec& spec);

}  // namespace lexsub
