// Small hand-traceable fixtures shared by unit and acceptance tests.
#pragma once

#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "lexsub/candidates.hpp"
#include "lexsub/corpus.hpp"
#include "lexsub/random.hpp"

namespace fixture {

// Twelve sentences, a three-row paraphrase table and a hand-chosen
// representative set.
//
//   shop -> boutique 0.30  boutique is representative, both NN
//   store -> boutique 0.10 below the 0.15 cut
//   fast -> quickly 0.40   quickly is representative, but JJ vs RB
//
// shop occurs in s01, s02, s04, s10. Bigrams come from the corpus itself:
//   s01 the shop was      (the boutique) s03, (boutique was) s03  -> keep
//   s02 a shop on         (a boutique) s07, (boutique on) s07     -> keep
//   s04 the shop quickly  (boutique quickly) never seen           -> drop
//   s10 shop prices       initial, (boutique prices) never seen   -> drop
struct Toy {
  lexsub::Corpus corpus{lexsub::Domain::kOther};
  lexsub::ParaphraseTable table;
  lexsub::PosMap pos;
  lexsub::BigramVocabulary bigrams;
  std::map<std::string, double> reps;
};

inline Toy toy() {
  using lexsub::Sentence;
  Toy t;
  const std::vector<std::tuple<const char*, const char*, int>> rows = {
      {"s01", "The shop was lovely.", 1},      {"s02", "a shop on main street", 1},
      {"s03", "the boutique was lovely", 1},   {"s04", "we left the shop quickly", 0},
      {"s05", "my store closed early", 0},     {"s06", "that store was lovely", 1},
      {"s07", "a boutique on main street", 1}, {"s08", "he drove fast today", 0},
      {"s09", "she drove quickly home", 0},    {"s10", "shop prices are high", 0},
      {"s11", "the market was busy", 0},       {"s12", "we walked quickly there", 0},
  };
  for (const auto& [id, text, label] : rows) t.corpus.add(Sentence::make(id, text, label, lexsub::Domain::kOther));
  t.table.add("shop", "boutique", 0.30);
  t.table.add("store", "boutique", 0.10);
  t.table.add("fast", "quickly", 0.40);
  t.pos = lexsub::PosMap({{"shop", "NN"}, {"boutique", "NN"}, {"store", "NN"}, {"fast", "JJ"}, {"quickly", "RB"}});
  t.bigrams = lexsub::build_bigram_vocabulary({&t.corpus});
  t.reps = {{"boutique", 1.2}, {"quickly", -0.8}};
  return t;
}

// (w1, w2, sentence id) of every tuple the toy must produce.
inline std::vector<std::tuple<std::string, std::string, std::string>> toy_expected() {
  return {{"shop", "boutique", "s01"}, {"shop", "boutique", "s02"}};
}

// Corpus and estimate table for RCT sampling: pair k is "ctl<k>" -> "trt<k>"
// and appears in `per_pair` sentences; every estimator scores every tuple
// with an independent pseudo-random value.
struct EstimateTable {
  lexsub::Corpus corpus{lexsub::Domain::kYelp};
  std::vector<lexsub::LseTuple> table;
};

inline EstimateTable estimate_table(int n_pairs, int per_pair, const std::vector<std::string>& estimators,
                                    std::uint64_t seed = 1) {
  EstimateTable out;
  lexsub::Rng rng(seed);
  for (int k = 0; k < n_pairs; ++k) {
    for (int j = 0; j < per_pair; ++j) {
      const std::string id = "p" + std::to_string(100 + k) + "s" + std::to_string(j);
      const std::string w1 = "ctl" + std::to_string(k);
      out.corpus.add(lexsub::Sentence::make(id, "The " + w1 + " was here " + std::to_string(j) + ".", j % 2,
                                            lexsub::Domain::kYelp));
      lexsub::LseTuple t;
      t.pair = {w1, "trt" + std::to_string(k), 0.5, "NN"};
      t.sentence_id = id;
      t.domain = lexsub::Domain::kYelp;
      for (const auto& e : estimators) t.estimates[e] = rng.uniform() * 2.0 - 1.0;
      out.table.push_back(std::move(t));
    }
  }
  return out;
}

}  // namespace fixture
