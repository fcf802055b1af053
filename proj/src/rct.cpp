#include "lexsub/rct.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "lexsub/error.hpp"
#include "lexsub/eval.hpp"

namespace lexsub {

std::string_view variant_name(Variant variant) {
  return variant == Variant::kControl ? "control" : "treatment";
}

Variant parse_variant(std::string_view name) {
  if (name == "control") return Variant::kControl;
  if (name == "treatment") return Variant::kTreatment;
  throw Error(ErrorKind::kSchema, "unknown variant '" + std::string(name) + "'");
}

std::string SentenceKey::str() const {
  return sentence_id + "|" + control_word + "|" + treatment_word + "|" + std::string(variant_name(variant));
}

SentenceKey SentenceKey::parse(std::string_view key) {
  std::string_view rest = key;
  std::string_view fields[3];
  for (int i = 2; i >= 0; --i) {
    const auto bar = rest.rfind('|');
    if (bar == std::string_view::npos) throw Error(ErrorKind::kSchema, "malformed sentence key '" + std::string(key) + "'");
    fields[i] = rest.substr(bar + 1);
    rest = rest.substr(0, bar);
  }
  SentenceKey k;
  k.sentence_id = std::string(rest);
  k.control_word = std::string(fields[0]);
  k.treatment_word = std::string(fields[1]);
  k.variant = parse_variant(fields[2]);
  if (k.sentence_id.empty() || k.control_word.empty() || k.treatment_word.empty()) {
    throw Error(ErrorKind::kSchema, "malformed sentence key '" + std::string(key) + "'");
  }
  return k;
}

io::Json DummySentence::to_json() const {
  return {{"key", key}, {"text", text}, {"expects", expects_high ? "high" : "low"}};
}

DummySentence DummySentence::from_json(const io::Json& j, const std::string& where) {
  DummySentence d;
  d.key = io::require_string(j, "key", where);
  d.text = io::require_string(j, "text", where);
  const auto expects = io::require_string(j, "expects", where);
  if (expects != "high" && expects != "low") throw Error(ErrorKind::kSchema, where + ": expects must be high or low");
  d.expects_high = expects == "high";
  return d;
}

std::vector<DummySentence> default_dummies(Domain domain) {
  std::vector<std::pair<const char*, bool>> rows;
  switch (domain) {
    case Domain::kYelp:
      rows = {{"My wife likes this place.", true},
              {"I like coming here with my fraternity brothers.", true},
              {"My brother and I come here for guys night out.", true},
              {"My husband likes this place.", false},
              {"I like coming here with my sorority sisters.", false},
              {"My sister and I come here for girl's night out.", false}};
      break;
    case Domain::kTwitter:
      rows = {{"I love playing football and video games.", true},
              {"My wife is waiting on me.", true},
              {"I am my father's son.", true},
              {"I love getting a pedicure at girls night out.", false},
              {"My husband says I smile too much.", false},
              {"I am my mom's daughter.", false}};
      break;
    case Domain::kAirbnb:
      rows = {{"This is by far the best neighborhood in the city.", true},
              {"This neighborhood is amazing in every way.", true},
              {"What a world-class neighborhood this is!", true},
              {"This neighborhood is not so great.", false},
              {"Yes, there is a lot of crime in this neighborhood.", false},
              {"Lots of shootings in this neighborhood.", false}};
      break;
    default:
      break;
  }
  std::vector<DummySentence> out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.push_back({"dummy:" + std::string(domain_name(domain)) + ":" + std::to_string(i + 1), rows[i].first,
                   rows[i].second});
  }
  return out;
}

std::vector<DummySentence> load_dummies(const std::string& path) {
  std::vector<DummySentence> out;
  std::set<std::string> seen;
  io::read_jsonl(path, [&](const io::Json& j, std::size_t line) {
    auto d = DummySentence::from_json(j, path + ":" + std::to_string(line));
    if (!seen.insert(d.key).second) throw Error(ErrorKind::kSchema, "duplicate dummy key '" + d.key + "'");
    out.push_back(std::move(d));
  });
  return out;
}

SentenceKey RctItem::key(Variant variant) const {
  return {tuple.sentence_id, tuple.pair.control_word, tuple.pair.treatment_word, variant};
}

io::Json RctPlan::to_json() const {
  io::Json items_json = io::Json::array();
  for (const auto& item : items) {
    items_json.push_back({{"tuple", item.tuple.to_json()},
                          {"estimator", item.estimator},
                          {"role", item.role},
                          {"estimate", item.estimate},
                          {"control_text", item.control_text},
                          {"treatment_text", item.treatment_text}});
  }
  io::Json dummies_json = io::Json::array();
  for (const auto& d : dummies) dummies_json.push_back(d.to_json());
  return {{"format", "lexsub.rct_plan"}, {"version", 1}, {"items", items_json}, {"dummies", dummies_json},
          {"flags", flags}};
}

RctPlan RctPlan::from_json(const io::Json& j) {
  if (!j.is_object() || j.value("format", "") != "lexsub.rct_plan") {
    throw Error(ErrorKind::kSchema, "not an RCT plan document");
  }
  if (j.value("version", 0) != 1) throw Error(ErrorKind::kSchema, "unsupported RCT plan version");
  RctPlan plan;
  const auto& items = io::require(j, "items", "plan");
  for (std::size_t i = 0; i < items.size(); ++i) {
    const std::string where = "plan item " + std::to_string(i);
    RctItem item;
    item.tuple = LseTuple::from_json(io::require(items[i], "tuple", where), where);
    item.estimator = io::require_string(items[i], "estimator", where);
    item.role = io::require_string(items[i], "role", where);
    item.estimate = io::require_number(items[i], "estimate", where);
    item.control_text = io::require_string(items[i], "control_text", where);
    item.treatment_text = io::require_string(items[i], "treatment_text", where);
    plan.items.push_back(std::move(item));
  }
  const auto& dummies = io::require(j, "dummies", "plan");
  for (std::size_t i = 0; i < dummies.size(); ++i) {
    plan.dummies.push_back(DummySentence::from_json(dummies[i], "plan dummy " + std::to_string(i)));
  }
  if (j.contains("flags")) plan.flags = j["flags"].get<std::vector<std::string>>();
  return plan;
}

namespace {

struct PairGroup {
  std::string control_word;
  std::string treatment_word;
  // (estimate, tuple index) sorted ascending by estimate then sentence id.
  std::vector<std::pair<double, std::size_t>> sentences;
  double best = 0.0;
};

}  // namespace

RctPlan select_rct_sample(const std::vector<LseTuple>& table, const std::vector<std::string>& estimators,
                          const Corpus& corpus, const SampleOptions& options, std::vector<DummySentence> dummies) {
  if (options.top_pairs < 1) throw Error(ErrorKind::kInvalidArgument, "top_pairs must be >= 1");
  if (options.per_pair < 1 || options.per_pair > 3) {
    throw Error(ErrorKind::kInvalidArgument, "per_pair must be 1, 2 or 3");
  }
  std::vector<std::string> names(estimators);
  std::sort(names.begin(), names.end());
  if (std::adjacent_find(names.begin(), names.end()) != names.end()) {
    throw Error(ErrorKind::kInvalidArgument, "duplicate estimator name");
  }

  RctPlan plan;
  plan.dummies = std::move(dummies);

  // Per estimator: its pairs ranked by best sentence estimate.
  std::vector<std::vector<PairGroup>> ranked(names.size());
  for (std::size_t e = 0; e < names.size(); ++e) {
    std::map<std::pair<std::string, std::string>, PairGroup> groups;
    for (std::size_t i = 0; i < table.size(); ++i) {
      const auto it = table[i].estimates.find(names[e]);
      if (it == table[i].estimates.end()) continue;
      auto& g = groups[{table[i].pair.control_word, table[i].pair.treatment_word}];
      g.control_word = table[i].pair.control_word;
      g.treatment_word = table[i].pair.treatment_word;
      g.sentences.emplace_back(it->second, i);
    }
    for (auto& [key, g] : groups) {
      std::sort(g.sentences.begin(), g.sentences.end(), [&](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first < b.first;
        return table[a.second].sentence_id < table[b.second].sentence_id;
      });
      g.best = g.sentences.back().first;
      ranked[e].push_back(std::move(g));
    }
    std::stable_sort(ranked[e].begin(), ranked[e].end(),
                     [](const PairGroup& a, const PairGroup& b) { return a.best > b.best; });
    if (ranked[e].size() < static_cast<std::size_t>(options.top_pairs)) {
      plan.flags.push_back(names[e] + ": only " + std::to_string(ranked[e].size()) + " pairs available");
    }
  }

  // Walk (rank, estimator) in order; a pair goes to the first estimator that
  // reaches it while it still has room.
  std::set<std::pair<std::string, std::string>> claimed;
  std::vector<std::vector<const PairGroup*>> kept(names.size());
  std::size_t longest = 0;
  for (const auto& r : ranked) longest = std::max(longest, r.size());
  for (std::size_t rank = 0; rank < longest; ++rank) {
    for (std::size_t e = 0; e < names.size(); ++e) {
      if (rank >= ranked[e].size() || kept[e].size() >= static_cast<std::size_t>(options.top_pairs)) continue;
      const auto& g = ranked[e][rank];
      if (!claimed.insert({g.control_word, g.treatment_word}).second) continue;
      kept[e].push_back(&g);
    }
  }

  for (std::size_t e = 0; e < names.size(); ++e) {
    const auto want = static_cast<std::size_t>(options.top_pairs);
    if (ranked[e].size() >= want && kept[e].size() < want) {
      plan.flags.push_back(names[e] + ": only " + std::to_string(kept[e].size()) + " unclaimed pairs");
    }
  }

  static const char* kRoles[] = {"max", "min", "median"};
  for (std::size_t e = 0; e < names.size(); ++e) {
    for (const auto* g : kept[e]) {
      const std::size_t n = g->sentences.size();
      std::vector<std::pair<const char*, std::size_t>> picks;
      if (n < static_cast<std::size_t>(options.per_pair)) {
        plan.flags.push_back(names[e] + ": pair " + g->control_word + "->" + g->treatment_word + " has only " +
                             std::to_string(n) + " sentences");
        for (std::size_t k = 0; k < n; ++k) picks.emplace_back(kRoles[k], k == 0 ? n - 1 : 0);
      } else {
        const std::size_t positions[] = {n - 1, 0, (n - 1) / 2};
        for (int k = 0; k < options.per_pair; ++k) picks.emplace_back(kRoles[k], positions[k]);
      }
      for (const auto& [role, pos] : picks) {
        const auto& [estimate, index] = g->sentences[pos];
        const auto& tuple = table[index];
        const auto* sentence = corpus.find(tuple.sentence_id);
        if (sentence == nullptr) throw Error(ErrorKind::kSchema, "unknown sentence id '" + tuple.sentence_id + "'");
        RctItem item;
        item.tuple = tuple;
        item.tuple.rct_effect.reset();
        item.estimator = names[e];
        item.role = role;
        item.estimate = estimate;
        item.control_text = sentence->text;
        item.treatment_text =
            substitute_first_word(sentence->text, tuple.pair.control_word, tuple.pair.treatment_word);
        plan.items.push_back(std::move(item));
      }
    }
  }
  return plan;
}

std::size_t Batch::sentence_count() const {
  return static_cast<std::size_t>(std::count_if(entries.begin(), entries.end(), [](const auto& e) { return !e.dummy; }));
}

std::string Batch::to_jsonl() const {
  std::string out;
  for (const auto& e : entries) {
    out += io::Json{{"batch_id", batch_id}, {"sentence_key", e.sentence_key}, {"text", e.text}, {"dummy", e.dummy}}
               .dump();
    out += '\n';
  }
  return out;
}

std::vector<Batch> make_batches(const RctPlan& plan, int batch_size) {
  if (batch_size < 1) throw Error(ErrorKind::kInvalidArgument, "batch size must be >= 1");
  std::vector<Batch> batches;
  for (const auto variant : {Variant::kControl, Variant::kTreatment}) {
    std::vector<BatchEntry> pool;
    for (const auto& item : plan.items) pool.push_back({item.key(variant).str(), item.text(variant), false});
    std::sort(pool.begin(), pool.end(), [](const auto& a, const auto& b) { return a.sentence_key < b.sentence_key; });
    const std::size_t size = static_cast<std::size_t>(batch_size);
    for (std::size_t start = 0, number = 1; start < pool.size(); start += size, ++number) {
      Batch b;
      b.variant = variant;
      char id[32];
      std::snprintf(id, sizeof id, "%s-%03zu", variant == Variant::kControl ? "control" : "treatment", number);
      b.batch_id = id;
      const std::size_t end = std::min(pool.size(), start + size);
      std::vector<BatchEntry> sentences(pool.begin() + static_cast<std::ptrdiff_t>(start),
                                        pool.begin() + static_cast<std::ptrdiff_t>(end));
      // Spread dummies evenly through the batch.
      const std::size_t d = plan.dummies.size();
      std::size_t next = 0;
      for (std::size_t k = 0; k < d; ++k) {
        const std::size_t at = (k + 1) * sentences.size() / (d + 1);
        while (next < at) b.entries.push_back(sentences[next++]);
        b.entries.push_back({plan.dummies[k].key, plan.dummies[k].text, true});
      }
      while (next < sentences.size()) b.entries.push_back(sentences[next++]);
      batches.push_back(std::move(b));
    }
  }
  return batches;
}

namespace {

std::vector<std::string> parse_csv_line(const std::string& line, const std::string& where) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"' && field.empty() && !was_quoted) {
      quoted = was_quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      was_quoted = false;
    } else {
      field.push_back(c);
    }
  }
  if (quoted) throw Error(ErrorKind::kSchema, where + ": unterminated quote");
  fields.push_back(std::move(field));
  return fields;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  return out + "\"";
}

}  // namespace

std::vector<RatingRecord> parse_ratings_csv(const std::string& content, const std::string& where) {
  std::vector<RatingRecord> out;
  std::set<std::pair<std::string, std::string>> seen;
  std::size_t line_no = 0;
  bool header = false;
  std::size_t pos = 0;
  while (pos < content.size()) {
    auto end = content.find('\n', pos);
    if (end == std::string::npos) end = content.size();
    std::string line = content.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::string at = where + ":" + std::to_string(line_no);
    auto fields = parse_csv_line(line, at);
    if (!header) {
      if (fields != std::vector<std::string>{"worker_id", "batch_id", "sentence_key", "rating"}) {
        throw Error(ErrorKind::kSchema, at + ": expected header worker_id,batch_id,sentence_key,rating");
      }
      header = true;
      continue;
    }
    if (fields.size() != 4) throw Error(ErrorKind::kSchema, at + ": expected 4 fields");
    RatingRecord r{fields[0], fields[1], fields[2], 0};
    const auto rating = io::parse_integer(fields[3], at + " rating");
    if (rating < 1 || rating > 5) throw Error(ErrorKind::kSchema, at + ": rating must be in 1..5");
    r.rating = static_cast<int>(rating);
    if (r.worker_id.empty() || r.sentence_key.empty()) throw Error(ErrorKind::kSchema, at + ": empty field");
    if (!seen.insert({r.worker_id, r.sentence_key}).second) {
      throw Error(ErrorKind::kSchema, at + ": duplicate rating by " + r.worker_id + " of " + r.sentence_key);
    }
    out.push_back(std::move(r));
  }
  if (!header) throw Error(ErrorKind::kSchema, where + ": missing header");
  return out;
}

std::vector<RatingRecord> load_ratings_csv(const std::string& path) {
  return parse_ratings_csv(io::read_file(path), path);
}

std::string ratings_to_csv(const std::vector<RatingRecord>& ratings) {
  std::string out = "worker_id,batch_id,sentence_key,rating\n";
  for (const auto& r : ratings) {
    out += csv_field(r.worker_id) + ',' + csv_field(r.batch_id) + ',' + csv_field(r.sentence_key) + ',' +
           std::to_string(r.rating) + '\n';
  }
  return out;
}

std::vector<RatingRecord> filter_workers(const std::vector<RatingRecord>& ratings,
                                         const std::vector<DummySentence>& dummies) {
  std::map<std::string, const DummySentence*> by_key;
  for (const auto& d : dummies) by_key[d.key] = &d;
  std::set<std::string> failed;
  for (const auto& r : ratings) {
    const auto it = by_key.find(r.sentence_key);
    if (it != by_key.end() && !it->second->accepts(r.rating)) failed.insert(r.worker_id);
  }
  std::vector<RatingRecord> out;
  for (const auto& r : ratings) {
    if (failed.count(r.worker_id) != 0 || by_key.count(r.sentence_key) != 0) continue;
    out.push_back(r);
  }
  std::sort(out.begin(), out.end());
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorKind::kDegenerate, "median of no values");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

double aggregate_effect(std::span<const int> control, std::span<const int> treatment) {
  if (control.empty() || treatment.empty()) throw Error(ErrorKind::kDegenerate, "uncovered variant");
  const auto as_double = [](std::span<const int> xs) {
    for (int x : xs) {
      if (x < 1 || x > 5) throw Error(ErrorKind::kInvalidArgument, "rating must be in 1..5");
    }
    return std::vector<double>(xs.begin(), xs.end());
  };
  return median(as_double(treatment)) - median(as_double(control));
}

std::vector<LseTuple> aggregate_plan(const RctPlan& plan, const std::vector<RatingRecord>& valid) {
  std::map<std::string, std::vector<int>> by_key;
  for (const auto& r : valid) by_key[r.sentence_key].push_back(r.rating);
  std::vector<LseTuple> out;
  for (const auto& item : plan.items) {
    LseTuple t = item.tuple;
    const auto c = by_key.find(item.key(Variant::kControl).str());
    const auto tr = by_key.find(item.key(Variant::kTreatment).str());
    if (c == by_key.end() || tr == by_key.end()) {
      t.flags.push_back("rct_uncovered");
    } else {
      t.rct_effect = aggregate_effect(c->second, tr->second);
    }
    out.push_back(std::move(t));
  }
  std::sort(out.begin(), out.end());
  return out;
}

double pairwise_agreement(const std::vector<RatingRecord>& ratings) {
  // batch -> worker -> sentence -> rating, all ordered for determinism
  std::map<std::string, std::map<std::string, std::map<std::string, int>>> batches;
  for (const auto& r : ratings) batches[r.batch_id][r.worker_id][r.sentence_key] = r.rating;
  double sum = 0.0;
  std::size_t defined = 0;
  for (const auto& [batch, workers] : batches) {
    for (auto a = workers.begin(); a != workers.end(); ++a) {
      for (auto b = std::next(a); b != workers.end(); ++b) {
        std::vector<double> xs, ys;
        for (const auto& [key, rating] : a->second) {
          const auto it = b->second.find(key);
          if (it == b->second.end()) continue;
          xs.push_back(rating);
          ys.push_back(it->second);
        }
        if (xs.size() < 2) continue;
        try {
          sum += pearson(xs, ys);
          ++defined;
        } catch (const Error&) {
          // constant ratings: correlation undefined
        }
      }
    }
  }
  if (defined == 0) throw Error(ErrorKind::kDegenerate, "no worker pair with a defined correlation");
  return sum / static_cast<double>(defined);
}

}  // namespace lexsub
