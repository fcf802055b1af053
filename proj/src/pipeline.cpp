#include "lexsub/pipeline.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>

#include "lexsub/candidates.hpp"
#include "lexsub/estimators.hpp"
#include "lexsub/eval.hpp"
#include "lexsub/perception.hpp"
#include "lexsub/random.hpp"
#include "lexsub/rct.hpp"

namespace lexsub {
namespace fs = std::filesystem;

namespace {

using io::Json;

void check_keys(const Json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw Error(ErrorKind::kSchema, "config: " + where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
    if (!known) throw Error(ErrorKind::kSchema, "config: unknown key '" + (where.empty() ? key : where + "." + key) + "'");
  }
}

std::size_t get_size(const Json& j, const char* key, std::size_t fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  const auto v = io::require_integer(j, key, where);
  if (v < 0) throw Error(ErrorKind::kSchema, "config: " + where + "." + key + " must be >= 0");
  return static_cast<std::size_t>(v);
}

int get_int(const Json& j, const char* key, int fallback, const std::string& where) {
  return j.contains(key) ? static_cast<int>(io::require_integer(j, key, where)) : fallback;
}

std::string get_string(const Json& j, const char* key, const std::string& fallback, const std::string& where) {
  return j.contains(key) ? io::require_string(j, key, where) : fallback;
}

ForestConfig forest_from(const Json& j, const std::string& where) {
  check_keys(j, where, {"n_trees", "max_features", "min_samples_leaf", "bootstrap", "honest"});
  try {
    return ForestConfig::from_json(j);
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::kSchema, "config: " + where + ": " + e.what());
  }
}

Json forest_json(const ForestConfig& c) {
  Json j = c.to_json();
  j.erase("seed");  // per-pair seeds derive from the run seed
  return j;
}

}  // namespace

PipelineConfig PipelineConfig::from_json(const Json& j, const std::string& base_dir) {
  check_keys(j, "", {"seed", "output_dir", "domain", "corpora", "paraphrase_table", "tag_lexicon", "stop_list",
                     "truth", "thresholds", "logistic", "estimators", "synthetic", "rct", "perception", "eval"});
  PipelineConfig c;
  c.base_dir = base_dir;
  if (j.contains("seed")) {
    const auto seed = io::require_integer(j, "seed", "config");
    if (seed < 0) throw Error(ErrorKind::kSchema, "config: seed must be >= 0");
    c.seed = static_cast<std::uint64_t>(seed);
  }
  c.output_dir = get_string(j, "output_dir", c.output_dir, "config");
  if (j.contains("domain")) c.domain = parse_domain(io::require_string(j, "domain", "config"));
  if (j.contains("corpora")) {
    if (!j["corpora"].is_object()) throw Error(ErrorKind::kSchema, "config: corpora must map domain to path");
    for (const auto& [name, path] : j["corpora"].items()) {
      parse_domain(name);
      if (!path.is_string()) throw Error(ErrorKind::kSchema, "config: corpora." + name + " must be a path");
      c.corpora[name] = path.get<std::string>();
    }
  }
  c.paraphrase_table = get_string(j, "paraphrase_table", "", "config");
  c.tag_lexicon = get_string(j, "tag_lexicon", "", "config");
  c.stop_list = get_string(j, "stop_list", "", "config");
  c.truth = get_string(j, "truth", "", "config");
  if (j.contains("thresholds")) {
    const auto& t = j["thresholds"];
    check_keys(t, "thresholds", {"coefficient", "equivalence", "min_doc_count", "min_bigram_count"});
    if (t.contains("coefficient")) c.coefficient_threshold = io::require_number(t, "coefficient", "thresholds");
    if (t.contains("equivalence")) c.min_equivalence = io::require_number(t, "equivalence", "thresholds");
    c.min_doc_count = get_size(t, "min_doc_count", c.min_doc_count, "thresholds");
    c.min_bigram_count = get_size(t, "min_bigram_count", c.min_bigram_count, "thresholds");
  }
  if (j.contains("logistic")) {
    const auto& l = j["logistic"];
    check_keys(l, "logistic", {"l2_strength"});
    if (l.contains("l2_strength") && !l["l2_strength"].is_null()) {
      c.l2_strength = io::require_number(l, "l2_strength", "logistic");
    }
  }
  if (j.contains("estimators")) {
    const auto& e = j["estimators"];
    check_keys(e, "estimators", {"names", "knn_k", "forest", "causal_forest"});
    if (e.contains("names")) {
      if (!e["names"].is_array()) throw Error(ErrorKind::kSchema, "config: estimators.names must be a list");
      c.estimators.clear();
      for (const auto& n : e["names"]) {
        if (!n.is_string()) throw Error(ErrorKind::kSchema, "config: estimators.names must hold strings");
        c.estimators.push_back(n.get<std::string>());
      }
    }
    c.knn_k = get_int(e, "knn_k", c.knn_k, "estimators");
    if (e.contains("forest")) c.forest = forest_from(e["forest"], "estimators.forest");
    if (e.contains("causal_forest")) c.causal_forest = forest_from(e["causal_forest"], "estimators.causal_forest");
  }
  if (j.contains("synthetic")) {
    check_keys(j["synthetic"], "synthetic", {"vocabulary_size", "n_sentences", "min_length", "max_length", "planted",
                                             "base_rate", "plant_rate", "seed"});
    c.synthetic = SyntheticSpec::from_json(j["synthetic"]);
  }
  if (j.contains("rct")) {
    const auto& r = j["rct"];
    check_keys(r, "rct", {"top_pairs", "per_pair", "batch_size", "dummies", "ratings"});
    c.top_pairs = get_int(r, "top_pairs", c.top_pairs, "rct");
    c.per_pair = get_int(r, "per_pair", c.per_pair, "rct");
    c.batch_size = get_int(r, "batch_size", c.batch_size, "rct");
    c.dummies = get_string(r, "dummies", "", "rct");
    c.ratings = get_string(r, "ratings", "", "rct");
  }
  if (j.contains("perception")) {
    const auto& p = j["perception"];
    check_keys(p, "perception", {"model", "training"});
    c.perception_model = get_string(p, "model", "", "perception");
    if (p.contains("training")) {
      for (const auto& s : p["training"]) {
        check_keys(s, "perception.training", {"corpus", "tuples"});
        c.perception_training.push_back({io::require_string(s, "corpus", "perception.training"),
                                         io::require_string(s, "tuples", "perception.training")});
      }
    }
  }
  if (j.contains("eval")) {
    check_keys(j["eval"], "eval", {"top_k"});
    c.top_k = get_size(j["eval"], "top_k", c.top_k, "eval");
  }
  c.validate();
  return c;
}

PipelineConfig PipelineConfig::load(const std::string& path) {
  if (!io::file_exists(path)) throw Error(ErrorKind::kMissingInput, "config file not found: " + path);
  Json j;
  try {
    j = Json::parse(io::read_file(path));
  } catch (const Json::parse_error& e) {
    throw Error(ErrorKind::kSchema, path + ": " + e.what());
  }
  const auto dir = fs::path(path).parent_path();
  return from_json(j, dir.empty() ? "." : dir.string());
}

void PipelineConfig::validate() const {
  const auto fail = [](const std::string& m) { throw Error(ErrorKind::kInvalidArgument, "config: " + m); };
  if (output_dir.empty()) fail("output_dir must not be empty");
  if (!(min_equivalence >= 0.0 && min_equivalence <= 1.0)) fail("thresholds.equivalence must be in [0, 1]");
  if (!(coefficient_threshold >= 0.0)) fail("thresholds.coefficient must be >= 0");
  if (min_doc_count < 1) fail("thresholds.min_doc_count must be >= 1");
  if (l2_strength && !(*l2_strength >= 0.0 && std::isfinite(*l2_strength))) fail("logistic.l2_strength must be >= 0");
  for (const auto& n : estimators) {
    if (!is_estimator_name(n)) fail("unknown estimator '" + n + "'");
  }
  if (knn_k < 1) fail("estimators.knn_k must be >= 1");
  if (top_pairs < 1) fail("rct.top_pairs must be >= 1");
  if (per_pair < 1 || per_pair > 3) fail("rct.per_pair must be 1, 2 or 3");
  if (batch_size < 1) fail("rct.batch_size must be >= 1");
  if (top_k < 1) fail("eval.top_k must be >= 1");
  synthetic.validate();
}

Json PipelineConfig::to_json() const {
  Json training = Json::array();
  for (const auto& s : perception_training) training.push_back({{"corpus", s.corpus}, {"tuples", s.tuples}});
  Json synth = synthetic.to_json();
  return {{"seed", seed},
          {"domain", std::string(domain_name(domain))},
          {"corpora", corpora},
          {"paraphrase_table", paraphrase_table},
          {"tag_lexicon", tag_lexicon},
          {"stop_list", stop_list},
          {"truth", truth},
          {"thresholds",
           {{"coefficient", coefficient_threshold},
            {"equivalence", min_equivalence},
            {"min_doc_count", min_doc_count},
            {"min_bigram_count", min_bigram_count}}},
          {"logistic", {{"l2_strength", l2_strength ? Json(*l2_strength) : Json(nullptr)}}},
          {"estimators",
           {{"names", estimators},
            {"knn_k", knn_k},
            {"forest", forest_json(forest)},
            {"causal_forest", forest_json(causal_forest)}}},
          {"synthetic", synth},
          {"rct",
           {{"top_pairs", top_pairs},
            {"per_pair", per_pair},
            {"batch_size", batch_size},
            {"dummies", dummies},
            {"ratings", ratings}}},
          {"perception", {{"model", perception_model}, {"training", training}}},
          {"eval", {{"top_k", top_k}}}};
}

std::string PipelineConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, stable_hash(to_json().dump()));
  return buf;
}

std::string PipelineConfig::resolve(const std::string& path) const {
  if (path.empty()) return path;
  const fs::path p(path);
  return p.is_absolute() ? path : (fs::path(base_dir) / p).lexically_normal().string();
}

const std::vector<std::string>& pipeline_commands() {
  static const std::vector<std::string> commands{"synth", "ingest", "candidates", "estimate",
                                                 "rank", "rct-sample", "rct-aggregate", "eval"};
  return commands;
}

Json error_record(const Error& error, const std::string& command) {
  return {{"error",
           {{"kind", error_kind_name(error.kind())},
            {"exit_code", error.exit_code()},
            {"message", error.what()},
            {"command", command}}}};
}

namespace {

// Paths of every file the stages exchange.
struct Layout {
  fs::path root;
  std::string file(const std::string& name) const { return (root / name).string(); }
};

class Stage {
 public:
  Stage(const std::string& command, const PipelineConfig& config, const RunOptions& options)
      : command_(command), config_(config), options_(options), layout_{fs::path(config.output_dir)} {
    if (!fs::path(config.output_dir).is_absolute()) layout_.root = fs::path(config.resolve(config.output_dir));
    meta_ = {{"config_hash", config.hash()}, {"seed", config.seed}, {"command", command}};
  }

  void run();

 private:
  void log(const std::string& message) const {
    if (options_.log != nullptr) *options_.log << "[" << command_ << "] " << message << '\n';
  }
  const Json* meta() const { return &meta_; }

  void write_json(const std::string& name, Json doc) const {
    doc["meta"] = meta_;
    io::write_file(layout_.file(name), doc.dump(2) + "\n");
  }
  void write_text(const std::string& name, const std::string& body) const {
    io::write_file(layout_.file(name), "# " + meta_.dump() + "\n" + body);
  }
  std::string input(const std::string& name) const {
    const auto path = layout_.file(name);
    if (!io::file_exists(path)) {
      throw Error(ErrorKind::kMissingInput, "missing input " + path + " (run the earlier pipeline stage first)");
    }
    return path;
  }
  std::string configured(const std::string& path, const std::string& synth_name, const char* what) const {
    std::string resolved;
    if (!path.empty()) {
      resolved = config_.resolve(path);
    } else if (config_.domain == Domain::kSynthetic) {
      resolved = layout_.file(synth_name);
    } else {
      throw Error(ErrorKind::kMissingInput, std::string("config does not name a ") + what);
    }
    if (!io::file_exists(resolved)) throw Error(ErrorKind::kMissingInput, std::string(what) + " not found: " + resolved);
    return resolved;
  }

  std::string corpus_path(Domain domain) const {
    const auto it = config_.corpora.find(std::string(domain_name(domain)));
    return configured(it == config_.corpora.end() ? "" : it->second, "synthetic_corpus.jsonl", "corpus");
  }
  Corpus load_corpus() const {
    auto corpus = Corpus::load_jsonl(corpus_path(config_.domain));
    if (corpus.empty()) throw Error(ErrorKind::kDegenerate, "corpus is empty");
    if (corpus.domain() != config_.domain) throw Error(ErrorKind::kSchema, "corpus domain does not match config domain");
    return corpus;
  }
  std::optional<StopList> stop_list() const {
    if (config_.stop_list.empty()) return std::nullopt;
    const auto path = config_.resolve(config_.stop_list);
    if (!io::file_exists(path)) throw Error(ErrorKind::kMissingInput, "stop list not found: " + path);
    return load_stop_list(path);
  }
  LogisticOptions logistic() const {
    LogisticOptions o;
    o.l2_strength = config_.l2_strength;
    return o;
  }
  std::vector<std::string> estimator_names() const { return options_.estimators.value_or(config_.estimators); }

  void synth();
  void ingest();
  void candidates();
  void estimate();
  void rank();
  void rct_sample();
  void rct_aggregate();
  void evaluate();

  std::string command_;
  const PipelineConfig& config_;
  const RunOptions& options_;
  Layout layout_;
  Json meta_;
};

void Stage::run() {
  fs::create_directories(layout_.root);
  write_json("config.resolved.json", config_.to_json());
  if (command_ == "synth") return synth();
  if (command_ == "ingest") return ingest();
  if (command_ == "candidates") return candidates();
  if (command_ == "estimate") return estimate();
  if (command_ == "rank") return rank();
  if (command_ == "rct-sample") return rct_sample();
  if (command_ == "rct-aggregate") return rct_aggregate();
  if (command_ == "eval") return evaluate();
  throw Error(ErrorKind::kInvalidArgument, "unknown command '" + command_ + "'");
}

void Stage::synth() {
  SyntheticSpec spec = config_.synthetic;
  spec.seed = derive_seed(config_.seed, spec.seed);
  const auto data = generate_synthetic(spec);
  data.corpus.save_jsonl(layout_.file("synthetic_corpus.jsonl"), meta());
  data.save_truth(layout_.file("synthetic_truth.jsonl"), meta());
  std::string paraphrases;
  for (const auto& from : data.paraphrases.sources()) {
    for (const auto& c : data.paraphrases.candidates(from, 0.0)) {
      paraphrases += from + "\t" + c.word + "\t" + Json(c.equivalence).dump() + "\n";
    }
  }
  write_text("synthetic_paraphrases.tsv", paraphrases);
  std::string tags;
  for (const auto& [word, tag] : data.tags) tags += word + "\t" + tag + "\t1\n";
  write_text("synthetic_tags.tsv", tags);
  log(std::to_string(data.corpus.size()) + " sentences, " + std::to_string(data.truth.size()) + " truth records");
}

void Stage::ingest() {
  const auto corpus = load_corpus();
  const auto stops = stop_list();
  const auto vocab = Vocabulary::build(corpus, config_.min_doc_count, stops ? &*stops : nullptr);
  std::string vocab_tsv;
  for (std::uint32_t i = 0; i < vocab.size(); ++i) {
    vocab_tsv += vocab.word(i) + "\t" + std::to_string(vocab.doc_frequency(i)) + "\n";
  }
  write_text("vocabulary.tsv", vocab_tsv);

  const auto classifier = SentenceClassifier::fit(corpus, vocab, logistic());
  const auto reps = representative_words(classifier, config_.coefficient_threshold);
  std::string reps_tsv;
  for (const auto& [word, coef] : reps) reps_tsv += word + "\t" + Json(coef).dump() + "\n";
  write_text("representative.tsv", reps_tsv);

  // Bigrams come from every configured corpus, the active one included.
  std::vector<Corpus> others;
  std::vector<const Corpus*> all{&corpus};
  for (const auto& [name, path] : config_.corpora) {
    if (parse_domain(name) == config_.domain) continue;
    others.push_back(Corpus::load_jsonl(corpus_path(parse_domain(name))));
  }
  for (const auto& c : others) all.push_back(&c);
  const auto bigrams = build_bigram_vocabulary(all);
  std::string bigram_tsv;
  for (const auto& [a, b, n] : bigrams.entries()) bigram_tsv += a + "\t" + b + "\t" + std::to_string(n) + "\n";
  write_text("bigrams.tsv", bigram_tsv);
  log(std::to_string(corpus.size()) + " sentences, " + std::to_string(vocab.size()) + " vocabulary words, " +
      std::to_string(reps.size()) + " representative words, " + std::to_string(bigrams.size()) + " bigrams");
}

void Stage::candidates() {
  const auto corpus = load_corpus();
  std::map<std::string, double> reps;
  const auto reps_path = input("representative.tsv");
  io::read_tsv(reps_path, [&](const std::vector<std::string>& f, std::size_t line) {
    const auto where = reps_path + ":" + std::to_string(line);
    if (f.size() != 2) throw Error(ErrorKind::kSchema, where + ": expected word<TAB>coefficient");
    reps[f[0]] = io::parse_double(f[1], where);
  });
  const auto table = ParaphraseTable::load_tsv(
      configured(config_.paraphrase_table, "synthetic_paraphrases.tsv", "paraphrase table"));
  const auto pos = load_tag_lexicon(configured(config_.tag_lexicon, "synthetic_tags.tsv", "tag lexicon"));
  const auto bigrams = BigramVocabulary::load_tsv(input("bigrams.tsv"));
  CandidateOptions options;
  options.min_equivalence = config_.min_equivalence;
  options.min_bigram_count = config_.min_bigram_count;
  const auto tuples = generate_tuples(corpus, reps, table, pos, bigrams, options);
  save_tuples(layout_.file("tuples.jsonl"), tuples, meta());
  std::set<std::pair<std::string, std::string>> pairs;
  for (const auto& t : tuples) pairs.insert({t.pair.control_word, t.pair.treatment_word});
  log(std::to_string(tuples.size()) + " tuples over " + std::to_string(pairs.size()) + " pairs");
}

void Stage::estimate() {
  const auto names = estimator_names();
  for (const auto& n : names) {
    if (!is_estimator_name(n)) throw Error(ErrorKind::kInvalidArgument, "--estimators: unknown estimator '" + n + "'");
  }
  const auto corpus = load_corpus();
  const auto tuples = load_tuples(input("tuples.jsonl"));
  const auto stops = stop_list();
  const auto features = CorpusFeatures::build(corpus, config_.min_doc_count, stops ? &*stops : nullptr);

  EstimatorConfig ec;
  ec.estimators = names;
  ec.knn_k = config_.knn_k;
  ec.forest = config_.forest;
  ec.causal_forest = config_.causal_forest;
  ec.seed = config_.seed;
  ec.jobs = options_.jobs;

  std::optional<PerceptionModel> perception;
  std::optional<SentenceClassifier> classifier;
  if (std::find(names.begin(), names.end(), "perception_clf") != names.end()) {
    if (!config_.perception_model.empty()) {
      const auto path = config_.resolve(config_.perception_model);
      if (!io::file_exists(path)) throw Error(ErrorKind::kMissingInput, "perception model not found: " + path);
      perception = PerceptionModel::from_json(Json::parse(io::read_file(path)));
    } else if (!config_.perception_training.empty()) {
      std::vector<Corpus> corpora;
      std::vector<SentenceClassifier> classifiers;
      corpora.reserve(config_.perception_training.size());
      classifiers.reserve(config_.perception_training.size());
      std::vector<PerceptionSource> sources;
      for (const auto& s : config_.perception_training) {
        const auto cpath = config_.resolve(s.corpus);
        const auto tpath = config_.resolve(s.tuples);
        for (const auto& p : {cpath, tpath}) {
          if (!io::file_exists(p)) throw Error(ErrorKind::kMissingInput, "perception training input not found: " + p);
        }
        corpora.push_back(Corpus::load_jsonl(cpath));
        const auto vocab = Vocabulary::build(corpora.back(), config_.min_doc_count, stops ? &*stops : nullptr);
        classifiers.push_back(SentenceClassifier::fit(corpora.back(), vocab, logistic()));
        sources.push_back({&corpora.back(), &classifiers.back(), load_tuples(tpath)});
      }
      perception = fit_perception_classifier(std::span<const PerceptionSource>(sources), logistic());
      write_json("perception_model.json", perception->to_json());
    } else {
      throw Error(ErrorKind::kMissingInput, "perception_clf needs perception.model or perception.training");
    }
    classifier = SentenceClassifier::fit(corpus, features.vocab, logistic());
    ec.perception = &*perception;
    ec.sentence_classifier = &*classifier;
  }

  EstimationLog elog;
  const auto table = estimate_all(tuples, features, ec, &elog);
  save_tuples(layout_.file("estimates.jsonl"), table, meta());
  write_json("estimate_log.json", {{"pairs", elog.pairs}, {"skipped_pairs", elog.skipped},
                                   {"tuples", table.size()}, {"messages", elog.messages}});
  log(std::to_string(table.size()) + " tuples, " + std::to_string(elog.pairs) + " pairs, " +
      std::to_string(elog.skipped) + " pairs skipped");
  for (const auto& m : elog.messages) log(m);
}

std::vector<std::string> present_estimators(const std::vector<LseTuple>& table) {
  std::vector<std::string> out;
  for (const char* name : kEstimatorNames) {
    if (std::any_of(table.begin(), table.end(), [&](const LseTuple& t) { return t.estimates.count(name) != 0; })) {
      out.push_back(name);
    }
  }
  return out;
}

void Stage::rank() {
  const auto table = load_tuples(input("estimates.jsonl"));
  for (const auto& name : present_estimators(table)) {
    const auto ranked = rank_estimates(table, name);
    save_tuples(layout_.file("ranked_" + name + ".jsonl"), ranked, meta());
    log(name + ": " + std::to_string(ranked.size()) + " ranked tuples");
  }
}

void Stage::rct_sample() {
  const auto corpus = load_corpus();
  const auto table = load_tuples(input("estimates.jsonl"));
  auto names = present_estimators(table);
  if (options_.estimators) {
    std::erase_if(names, [&](const std::string& n) {
      return std::find(options_.estimators->begin(), options_.estimators->end(), n) == options_.estimators->end();
    });
  }
  if (names.empty()) throw Error(ErrorKind::kDegenerate, "no estimates to sample from");
  std::vector<DummySentence> dummies;
  if (!config_.dummies.empty()) {
    const auto path = config_.resolve(config_.dummies);
    if (!io::file_exists(path)) throw Error(ErrorKind::kMissingInput, "dummy file not found: " + path);
    dummies = load_dummies(path);
  } else {
    dummies = default_dummies(config_.domain);
  }
  SampleOptions so;
  so.top_pairs = config_.top_pairs;
  so.per_pair = config_.per_pair;
  const auto plan = select_rct_sample(table, names, corpus, so, std::move(dummies));
  write_json("rct_plan.json", plan.to_json());
  const auto batches = make_batches(plan, config_.batch_size);
  fs::remove_all(layout_.root / "batches");
  for (const auto& b : batches) {
    io::write_file(layout_.file("batches/" + b.batch_id + ".jsonl"),
                   Json{{"_meta", meta_}}.dump() + "\n" + b.to_jsonl());
  }
  log(std::to_string(plan.items.size()) + " control + " + std::to_string(plan.items.size()) +
      " treatment sentences in " + std::to_string(batches.size()) + " batches");
  for (const auto& f : plan.flags) log(f);
}

void Stage::rct_aggregate() {
  const auto plan = RctPlan::from_json(Json::parse(io::read_file(input("rct_plan.json"))));
  if (config_.ratings.empty()) throw Error(ErrorKind::kMissingInput, "config does not name rct.ratings");
  const auto path = config_.resolve(config_.ratings);
  if (!io::file_exists(path)) throw Error(ErrorKind::kMissingInput, "ratings not found: " + path);
  const auto ratings = load_ratings_csv(path);
  const auto valid = filter_workers(ratings, plan.dummies);
  std::set<std::string> all_workers, kept_workers;
  for (const auto& r : ratings) all_workers.insert(r.worker_id);
  for (const auto& r : valid) kept_workers.insert(r.worker_id);
  const auto tuples = aggregate_plan(plan, valid);
  save_tuples(layout_.file("rct_tuples.jsonl"), tuples, meta());
  write_text("valid_ratings.csv", ratings_to_csv(valid));
  Json summary = {{"ratings", ratings.size()},
                  {"valid_ratings", valid.size()},
                  {"workers", all_workers.size()},
                  {"valid_workers", kept_workers.size()}};
  try {
    summary["agreement_pearson"] = pairwise_agreement(valid);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kDegenerate) throw;
    summary["agreement_pearson"] = nullptr;
    summary["agreement_note"] = e.what();
  }
  std::size_t covered = 0;
  for (const auto& t : tuples) covered += t.rct_effect.has_value();
  summary["tuples"] = tuples.size();
  summary["covered_tuples"] = covered;
  write_json("rct_summary.json", summary);
  log(std::to_string(valid.size()) + " of " + std::to_string(ratings.size()) + " ratings valid; " +
      std::to_string(covered) + " of " + std::to_string(tuples.size()) + " tuples covered");
}

using TupleKey = std::tuple<std::string, std::string, std::string>;
TupleKey key_of(const LseTuple& t) { return {t.pair.control_word, t.pair.treatment_word, t.sentence_id}; }

// Runs a metric; degenerate inputs become null with a note.
template <class F>
Json guarded(F&& f, Json& notes, const std::string& label) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kDegenerate) throw;
    notes.push_back(label + ": " + e.what());
    return nullptr;
  }
}

void Stage::evaluate() {
  const auto table = load_tuples(input("estimates.jsonl"));
  const auto names = present_estimators(table);
  const auto corpus = load_corpus();
  Json report = Json::object();
  Json notes = Json::array();

  std::map<TupleKey, double> truth;
  const bool synthetic_truth = config_.truth.empty() && config_.domain == Domain::kSynthetic &&
                               io::file_exists(layout_.file("synthetic_truth.jsonl"));
  if (!config_.truth.empty() || synthetic_truth) {
    const auto path = configured(config_.truth, "synthetic_truth.jsonl", "truth file");
    io::read_jsonl(path, [&](const Json& r, std::size_t line) {
      if (r.contains("_meta")) return;
      const auto where = path + ":" + std::to_string(line);
      const auto pair = SubstitutionPair::from_json(io::require(r, "pair", where), where);
      truth[{pair.control_word, pair.treatment_word, io::require_string(r, "sentence_id", where)}] =
          io::require_number(r, "effect", where);
    });
  }

  std::map<TupleKey, double> rct;
  if (io::file_exists(layout_.file("rct_tuples.jsonl"))) {
    for (const auto& t : load_tuples(layout_.file("rct_tuples.jsonl"))) {
      if (t.rct_effect) rct[key_of(t)] = *t.rct_effect;
    }
  }

  Json per = Json::object();
  for (const auto& name : names) {
    Json m = Json::object();
    std::vector<double> values;
    for (const auto& t : table) {
      if (auto it = t.estimates.find(name); it != t.estimates.end()) values.push_back(it->second);
    }
    double sum = 0.0;
    for (double v : values) sum += v;
    m["tuples"] = values.size();
    m["mean_estimate"] = sum / static_cast<double>(values.size());
    const auto ranked = rank_estimates(table, name);
    m["negative_fraction_top_k"] = negative_fraction_top_k(ranked, corpus, config_.top_k);

    if (!truth.empty()) {
      double err = 0.0, est_sum = 0.0, truth_sum = 0.0;
      std::size_t n = 0, signs = 0, signed_n = 0;
      for (const auto& t : table) {
        const auto e = t.estimates.find(name);
        const auto g = truth.find(key_of(t));
        if (e == t.estimates.end() || g == truth.end()) continue;
        ++n;
        err += std::abs(e->second - g->second);
        est_sum += e->second;
        truth_sum += g->second;
        if (g->second != 0.0) {
          ++signed_n;
          signs += (e->second > 0.0) == (g->second > 0.0);
        }
      }
      if (n > 0) {
        m["truth_tuples"] = n;
        m["mean_absolute_error"] = err / static_cast<double>(n);
        m["mean_truth"] = truth_sum / static_cast<double>(n);
        m["bias"] = (est_sum - truth_sum) / static_cast<double>(n);
        m["sign_accuracy"] = signed_n > 0 ? Json(static_cast<double>(signs) / static_cast<double>(signed_n)) : Json(nullptr);
      }
    }

    if (!rct.empty()) {
      std::vector<double> est, tau;
      std::vector<int> labels;
      for (const auto& t : table) {
        const auto e = t.estimates.find(name);
        const auto r = rct.find(key_of(t));
        if (e == t.estimates.end() || r == rct.end()) continue;
        est.push_back(e->second);
        tau.push_back(r->second);
        labels.push_back(rct_sign_label(r->second));
      }
      m["rct_tuples"] = est.size();
      m["pearson_vs_rct"] = guarded([&] { return Json(pearson(est, tau)); }, notes, name + " pearson");
      m["roc_auc"] = guarded(
          [&] {
            const auto roc = roc_auc(est, labels);
            write_text("roc_" + name + ".csv", roc_curve_csv(roc));
            return Json(roc.auc);
          },
          notes, name + " roc");
    }
    per[name] = m;
  }
  report["estimators"] = per;

  if (names.size() >= 2) {
    std::vector<LseTuple> common;
    for (const auto& t : table) {
      if (std::all_of(names.begin(), names.end(), [&](const auto& n) { return t.estimates.count(n) != 0; })) {
        common.push_back(t);
      }
    }
    report["agreement_tuples"] = common.size();
    report["agreement_spearman"] = guarded(
        [&] {
          const auto m = estimator_agreement_matrix(common, names);
          return Json{{"estimators", m.estimators}, {"matrix", m.values}};
        },
        notes, "agreement");
  }
  report["notes"] = notes;
  write_json("metrics.json", report);
  log(std::to_string(names.size()) + " estimators evaluated over " + std::to_string(table.size()) + " tuples");
}

}  // namespace

void run_command(const std::string& command, const PipelineConfig& config, const RunOptions& options) {
  if (options.jobs < 1) throw Error(ErrorKind::kInvalidArgument, "--jobs must be >= 1");
  if (std::find(pipeline_commands().begin(), pipeline_commands().end(), command) == pipeline_commands().end()) {
    throw Error(ErrorKind::kInvalidArgument, "unknown command '" + command + "'");
  }
  Stage stage(command, config, options);
  try {
    stage.run();
  } catch (const io::Json::exception& e) {
    throw Error(ErrorKind::kSchema, std::string("malformed JSON input: ") + e.what());
  } catch (const fs::filesystem_error& e) {
    throw Error(ErrorKind::kMissingInput, e.what());
  }
}

}  // namespace lexsub
