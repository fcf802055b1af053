#include "lexsub/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "lexsub/error.hpp"
#include "lexsub/linear_model.hpp"
#include "lexsub/random.hpp"
#include "lexsub/rct.hpp"

namespace lexsub {

std::string noise_word(std::size_t index) {
  // Letters only, so the tokenizer leaves it intact: a, b, ..., z, ba, bb, ...
  std::string word;
  do {
    word.insert(word.begin(), static_cast<char>('a' + index % 26));
    index /= 26;
  } while (index > 0);
  return "w" + word;
}

void SyntheticSpec::validate() const {
  const auto fail = [](const std::string& m) { throw Error(ErrorKind::kInvalidArgument, "synthetic spec: " + m); };
  if (vocabulary_size < 1) fail("vocabulary_size must be >= 1");
  if (n_sentences < 2) fail("n_sentences must be >= 2");
  if (min_length < 1 || max_length < min_length) fail("need 1 <= min_length <= max_length");
  if (!(base_rate >= 0.0 && base_rate <= 1.0)) fail("base_rate must be in [0, 1]");
  if (!(plant_rate >= 0.0 && plant_rate <= 1.0)) fail("plant_rate must be in [0, 1]");
  std::set<std::string> words;
  for (std::size_t i = 0; i < vocabulary_size; ++i) words.insert(noise_word(i));
  for (const auto& p : planted) {
    if (!(p.effect >= -1.0 && p.effect <= 1.0)) fail("effect must be in [-1, 1]");
    const double treated = base_rate + p.effect;
    if (!(treated >= 0.0 && treated <= 1.0)) fail("base_rate + effect must be in [0, 1] for " + p.control_word);
    if (p.control_word == p.treatment_word) fail("pair words must differ");
    for (const auto* w : {&p.control_word, &p.treatment_word}) {
      const auto tokens = tokenize(*w);
      if (tokens.size() != 1 || tokens[0] != *w) fail("planted word '" + *w + "' is not a lowercase token");
      if (!words.insert(*w).second) fail("planted word '" + *w + "' is used twice");
    }
  }
}

io::Json SyntheticSpec::to_json() const {
  io::Json pairs = io::Json::array();
  for (const auto& p : planted) pairs.push_back({{"control", p.control_word}, {"treatment", p.treatment_word}, {"effect", p.effect}});
  return {{"vocabulary_size", vocabulary_size}, {"n_sentences", n_sentences}, {"min_length", min_length},
          {"max_length", max_length}, {"planted", pairs}, {"base_rate", base_rate}, {"plant_rate", plant_rate},
          {"seed", seed}};
}

SyntheticSpec SyntheticSpec::from_json(const io::Json& j) {
  SyntheticSpec s;
  if (!j.is_object()) throw Error(ErrorKind::kSchema, "synthetic spec must be an object");
  const auto size = [&](const char* key, std::size_t fallback) {
    if (!j.contains(key)) return fallback;
    const auto v = io::require_integer(j, key, "synthetic");
    if (v < 0) throw Error(ErrorKind::kSchema, std::string("synthetic.") + key + " must be >= 0");
    return static_cast<std::size_t>(v);
  };
  s.vocabulary_size = size("vocabulary_size", s.vocabulary_size);
  s.n_sentences = size("n_sentences", s.n_sentences);
  s.min_length = size("min_length", s.min_length);
  s.max_length = size("max_length", s.max_length);
  if (j.contains("base_rate")) s.base_rate = io::require_number(j, "base_rate", "synthetic");
  if (j.contains("plant_rate")) s.plant_rate = io::require_number(j, "plant_rate", "synthetic");
  if (j.contains("seed")) s.seed = static_cast<std::uint64_t>(io::require_integer(j, "seed", "synthetic"));
  if (j.contains("planted")) {
    s.planted.clear();
    for (const auto& p : j["planted"]) {
      s.planted.push_back({io::require_string(p, "control", "synthetic.planted"),
                           io::require_string(p, "treatment", "synthetic.planted"),
                           io::require_number(p, "effect", "synthetic.planted")});
    }
  }
  return s;
}

void SyntheticData::save_tag_lexicon(const std::string& path) const {
  std::string out;
  for (const auto& [word, tag] : tags) out += word + "\t" + tag + "\t1\n";
  io::write_file(path, out);
}

void SyntheticData::save_truth(const std::string& path, const io::Json* meta) const {
  std::vector<io::Json> rows;
  if (meta != nullptr) rows.push_back({{"_meta", *meta}});
  for (const auto& t : truth) {
    rows.push_back({{"pair", t.pair.to_json()}, {"sentence_id", t.sentence_id}, {"effect", t.effect}});
  }
  io::write_jsonl(path, rows);
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(derive_seed(spec.seed, 0x53594e));
  SyntheticData data;
  for (std::size_t i = 0; i < spec.vocabulary_size; ++i) data.tags[noise_word(i)] = "NN";
  for (const auto& p : spec.planted) {
    data.tags[p.control_word] = "NN";
    data.tags[p.treatment_word] = "NN";
    data.paraphrases.add(p.control_word, p.treatment_word, 1.0);
  }
  const int width = static_cast<int>(std::to_string(spec.n_sentences).size());
  for (std::size_t s = 0; s < spec.n_sentences; ++s) {
    const std::size_t length = spec.min_length + rng.uniform_index(spec.max_length - spec.min_length + 1);
    std::vector<std::string> tokens;
    for (std::size_t k = 0; k < length; ++k) tokens.push_back(noise_word(rng.uniform_index(spec.vocabulary_size)));
    double p = spec.base_rate;
    const PlantedPair* planted = nullptr;
    bool treated = false;
    if (!spec.planted.empty() && rng.bernoulli(spec.plant_rate)) {
      planted = &spec.planted[rng.uniform_index(spec.planted.size())];
      treated = rng.bernoulli(0.5);
      const auto at = rng.uniform_index(tokens.size() + 1);
      tokens.insert(tokens.begin() + static_cast<std::ptrdiff_t>(at),
                    treated ? planted->treatment_word : planted->control_word);
      if (treated) p += planted->effect;
    }
    const int label = rng.bernoulli(p) ? 1 : 0;
    char id[32];
    std::snprintf(id, sizeof id, "syn-%0*zu", width, s + 1);
    data.corpus.add(Sentence::make(id, join_tokens(tokens) + ".", label, Domain::kSynthetic));
    if (planted != nullptr && !treated) {
      data.truth.push_back({SubstitutionPair{planted->control_word, planted->treatment_word, 1.0, "NN"}, id,
                            planted->effect});
    }
  }
  std::sort(data.truth.begin(), data.truth.end(), [](const TruthRecord& a, const TruthRecord& b) {
    return std::tie(a.pair.control_word, a.pair.treatment_word, a.sentence_id) <
           std::tie(b.pair.control_word, b.pair.treatment_word, b.sentence_id);
  });
  return data;
}

namespace {

int simulated_rating(double p, double noise, Rng& rng) {
  const double r = std::round(1.0 + 4.0 * p + noise * rng.normal());
  return static_cast<int>(std::clamp(r, 1.0, 5.0));
}

}  // namespace

PerceptionDomain generate_perception_domain(const PerceptionDomainSpec& spec) {
  if (spec.n_words < 2 || spec.n_sentences < 2 || spec.min_length < 1 || spec.max_length < spec.min_length ||
      spec.raters < 1) {
    throw Error(ErrorKind::kInvalidArgument, "perception domain spec out of range");
  }
  Rng rng(derive_seed(spec.seed, 0x504552));
  PerceptionDomain out;
  out.corpus = Corpus(spec.domain);
  std::vector<std::string> words;
  for (std::size_t i = 0; i < spec.n_words; ++i) {
    words.push_back(spec.prefix + noise_word(i).substr(1));
    out.weights[words.back()] = spec.weight_scale * rng.normal();
  }
  const auto logit_of = [&](const std::vector<std::string>& tokens) {
    double z = spec.bias;
    for (const auto& t : tokens) z += out.weights.at(t);
    return z;
  };
  for (std::size_t s = 0; s < spec.n_sentences; ++s) {
    const std::size_t length = spec.min_length + rng.uniform_index(spec.max_length - spec.min_length + 1);
    std::vector<std::string> tokens;
    for (std::size_t k = 0; k < length; ++k) tokens.push_back(words[rng.uniform_index(words.size())]);
    const int label = rng.bernoulli(sigmoid(logit_of(tokens))) ? 1 : 0;
    char id[48];
    std::snprintf(id, sizeof id, "%s-%05zu", spec.prefix.c_str(), s + 1);
    out.corpus.add(Sentence::make(id, join_tokens(tokens), label, spec.domain));
  }

  std::set<std::pair<std::string, std::string>> used;
  std::size_t attempts = 0;
  while (used.size() < spec.n_pairs && attempts++ < 100 * spec.n_pairs) {
    const auto& w1 = words[rng.uniform_index(words.size())];
    const auto& w2 = words[rng.uniform_index(words.size())];
    if (w1 == w2 || !used.insert({w1, w2}).second) continue;
    std::vector<std::size_t> holders;
    for (std::size_t i = 0; i < out.corpus.size(); ++i) {
      if (out.corpus[i].contains(w1)) holders.push_back(i);
    }
    // Partial shuffle picks the sentences for this pair.
    const std::size_t take = std::min(spec.sentences_per_pair, holders.size());
    for (std::size_t k = 0; k < take; ++k) {
      std::swap(holders[k], holders[k + rng.uniform_index(holders.size() - k)]);
    }
    for (std::size_t k = 0; k < take; ++k) {
      const auto& sentence = out.corpus[holders[k]];
      auto swapped = sentence.tokens;
      *std::find(swapped.begin(), swapped.end(), w1) = w2;
      const double pc = sigmoid(logit_of(sentence.tokens));
      const double pt = sigmoid(logit_of(swapped));
      std::vector<int> control, treatment;
      for (int r = 0; r < spec.raters; ++r) control.push_back(simulated_rating(pc, spec.rating_noise, rng));
      for (int r = 0; r < spec.raters; ++r) treatment.push_back(simulated_rating(pt, spec.rating_noise, rng));
      LseTuple t;
      t.pair = SubstitutionPair{w1, w2, 1.0, "NN"};
      t.sentence_id = sentence.id;
      t.domain = spec.domain;
      t.rct_effect = aggregate_effect(control, treatment);
      out.tuples.push_back(std::move(t));
    }
  }
  std::sort(out.tuples.begin(), out.tuples.end());
  return out;
}

}  // namespace lexsub
