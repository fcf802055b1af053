// Python bindings: metrics, RCT aggregation, synthetic data, estimation on a
// corpus and the pipeline stages.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lexsub/candidates.hpp"
#include "lexsub/corpus.hpp"
#include "lexsub/error.hpp"
#include "lexsub/estimators.hpp"
#include "lexsub/eval.hpp"
#include "lexsub/perception.hpp"
#include "lexsub/pipeline.hpp"
#include "lexsub/rct.hpp"
#include "lexsub/synthetic.hpp"

namespace py = pybind11;
using namespace lexsub;

namespace {

py::object g_error;

py::dict tuple_dict(const LseTuple& t) {
  py::dict d;
  d["control_word"] = t.pair.control_word;
  d["treatment_word"] = t.pair.treatment_word;
  d["sentence_id"] = t.sentence_id;
  d["estimates"] = t.estimates;
  d["rct_effect"] = t.rct_effect ? py::cast(*t.rct_effect) : py::none();
  d["flags"] = t.flags;
  return d;
}

py::list corpus_records(const Corpus& c) {
  py::list out;
  for (const auto& s : c.sentences()) {
    py::dict d;
    d["id"] = s.id;
    d["text"] = s.text;
    d["label"] = s.label;
    out.append(d);
  }
  return out;
}

Corpus corpus_from(const std::vector<std::tuple<std::string, std::string, int>>& rows, const std::string& domain) {
  const auto dom = parse_domain(domain);
  Corpus c(dom);
  for (const auto& [id, text, label] : rows) c.add(Sentence::make(id, text, label, dom));
  return c;
}

ForestConfig forest_of(int n_trees, int min_leaf) {
  ForestConfig f;
  f.n_trees = n_trees;
  f.min_samples_leaf = min_leaf;
  return f;
}

}  // namespace

PYBIND11_MODULE(_lexsub, m) {
  m.doc() = "Lexical substitution effect estimation.";

  g_error = py::exception<Error>(m, "LexsubError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = g_error(e.what());
      exc.attr("kind") = error_kind_name(e.kind());
      exc.attr("exit_code") = e.exit_code();
      PyErr_SetObject(g_error.ptr(), exc.ptr());
    }
  });

  m.def("tokenize", [](const std::string& text) { return tokenize(text); });
  m.def("substitute_first_word", &substitute_first_word, py::arg("text"), py::arg("control"), py::arg("treatment"));

  m.def("pearson", [](std::vector<double> x, std::vector<double> y) { return pearson(x, y); });
  m.def("spearman", [](std::vector<double> x, std::vector<double> y) { return spearman_rank(x, y); });
  m.def(
      "roc_auc",
      [](std::vector<double> scores, std::vector<int> labels) {
        const auto r = roc_auc(scores, labels);
        std::vector<std::tuple<double, double, double>> curve;
        for (const auto& p : r.curve) curve.emplace_back(p.threshold, p.fpr, p.tpr);
        return py::make_tuple(r.auc, curve);
      },
      "Returns (auc, [(threshold, fpr, tpr), ...]).");

  m.def("aggregate_effect", [](std::vector<int> control, std::vector<int> treatment) {
    return aggregate_effect(control, treatment);
  });
  m.def("binarize_rct_effect", &binarize_rct_effect);
  m.def("pairwise_agreement", [](const std::vector<std::tuple<std::string, std::string, std::string, int>>& rows) {
    std::vector<RatingRecord> r;
    for (const auto& [w, b, k, v] : rows) r.push_back({w, b, k, v});
    return pairwise_agreement(r);
  });

  m.def(
      "generate_synthetic",
      [](std::size_t n_sentences, double effect, double base_rate, std::uint64_t seed) {
        SyntheticSpec spec;
        spec.n_sentences = n_sentences;
        spec.planted = {{"ctla", "trta", effect}};
        spec.base_rate = base_rate;
        spec.seed = seed;
        return corpus_records(generate_synthetic(spec).corpus);
      },
      py::arg("n_sentences") = 2000, py::arg("effect") = 0.3, py::arg("base_rate") = 0.35, py::arg("seed") = 0,
      "Synthetic corpus with control word 'ctla' and treatment word 'trta'.");

  m.def(
      "estimate",
      [](const std::vector<std::tuple<std::string, std::string, int>>& rows, const std::string& control,
         const std::string& treatment, std::vector<std::string> estimators, int knn_k, int n_trees,
         int min_samples_leaf, std::size_t min_doc_count, std::uint64_t seed, const std::string& domain) {
        const auto corpus = corpus_from(rows, domain);
        const auto features = CorpusFeatures::build(corpus, min_doc_count);
        std::vector<LseTuple> tuples;
        for (const auto& s : corpus.sentences()) {
          if (!s.contains(control)) continue;
          LseTuple t;
          t.pair = {control, treatment, 1.0, ""};
          t.sentence_id = s.id;
          t.domain = corpus.domain();
          tuples.push_back(std::move(t));
        }
        EstimatorConfig cfg;
        cfg.estimators = std::move(estimators);
        cfg.knn_k = knn_k;
        cfg.forest = forest_of(n_trees, min_samples_leaf);
        cfg.causal_forest = forest_of(n_trees, min_samples_leaf);
        cfg.seed = seed;
        std::vector<LseTuple> table;
        {
          py::gil_scoped_release release;
          table = estimate_all(tuples, features, cfg);
        }
        py::list out;
        for (const auto& t : table) out.append(tuple_dict(t));
        return out;
      },
      py::arg("sentences"), py::arg("control"), py::arg("treatment"),
      py::arg("estimators") = std::vector<std::string>{"knn", "vt_rf", "cf_rf", "csf"}, py::arg("knn_k") = 30,
      py::arg("n_trees") = 200, py::arg("min_samples_leaf") = 10, py::arg("min_doc_count") = 8, py::arg("seed") = 0,
      py::arg("domain") = "other",
      "Estimates the effect of swapping `control` for `treatment` in every sentence holding `control`. "
      "`sentences` is a list of (id, text, label).");

  m.def("commands", &pipeline_commands);
  m.def(
      "run",
      [](const std::string& config_path, const std::string& command, int jobs) {
        const auto config = PipelineConfig::load(config_path);
        RunOptions o;
        o.jobs = jobs;
        py::gil_scoped_release release;
        run_command(command, config, o);
      },
      py::arg("config"), py::arg("command"), py::arg("jobs") = 1, "Runs one pipeline stage.");
}
