// Python module exposing the scoring and meta-evaluation core.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gptscore/aspects.hpp"
#include "gptscore/backends.hpp"
#include "gptscore/datasets.hpp"
#include "gptscore/metaeval.hpp"
#include "gptscore/prompt.hpp"
#include "gptscore/rouge.hpp"
#include "gptscore/scoring.hpp"

namespace py = pybind11;
using namespace gptscore;

namespace {

BackendConfig config_from_kwargs(const std::string& kind, const std::string& model,
                                 const std::string& endpoint, const std::string& cache_dir,
                                 const std::string& corpus) {
    BackendConfig cfg;
    if (kind == "http")
        cfg.kind = BackendKind::Http;
    else if (kind == "fixture")
        cfg.kind = BackendKind::Fixture;
    else if (kind == "unigram")
        cfg.kind = BackendKind::Unigram;
    else
        throw UsageError("unknown backend kind: '" + kind + "'");
    cfg.model_id = model;
    cfg.endpoint_url = endpoint;
    cfg.cache_dir = cache_dir;
    cfg.unigram_corpus = corpus;
    return cfg;
}

PairedScores to_paired(const std::vector<std::vector<std::pair<double, double>>>& groups) {
    PairedScores ps;
    for (const auto& g : groups) {
        std::vector<ScorePair> out;
        for (auto [a, h] : g) out.push_back(ScorePair{a, h});
        ps.groups.push_back(std::move(out));
    }
    return ps;
}

}  // namespace

PYBIND11_MODULE(_gptscore, m) {
    m.doc() = "Conditional-logprob text scoring and metric meta-evaluation";

    py::register_exception<UsageError>(m, "UsageError");
    py::register_exception<DataError>(m, "DataError");
    py::register_exception<BackendError>(m, "BackendError");

    // Aspects.
    m.def("aspect_definition",
          [](const std::string& key) { return builtin_registry().lookup(key).definition; },
          py::arg("key"));
    m.def("aspect_keys", [] { return builtin_registry().keys(); });
    m.def("compose_definition",
          [](const std::string& target, const std::vector<std::string>& extras) {
              return builtin_registry().compose_definition(target, extras);
          },
          py::arg("target"), py::arg("extras"));

    // Prompt rendering.
    m.def("render_prompt",
          [](const std::string& task, const std::string& aspect, const std::string& direction,
             const std::string& setting, const std::map<std::string, std::string>& bindings) {
              const auto& tpl = builtin_templates().get(task_from_string(task), aspect,
                                                        direction_from_string(direction));
              auto r = render_with_bindings(tpl, bindings, {}, setting_from_string(setting));
              return py::make_tuple(r.prefix, r.target);
          },
          py::arg("task"), py::arg("aspect"), py::arg("direction"), py::arg("setting"),
          py::arg("bindings"));

    // Correlations.
    m.def("pearson", &pearson, py::arg("x"), py::arg("y"));
    m.def("spearman", &spearman, py::arg("x"), py::arg("y"));
    m.def("aggregate",
          [](const std::vector<std::vector<std::pair<double, double>>>& groups,
             const std::string& kind, const std::string& strategy) {
              auto rep = aggregate(to_paired(groups), corr_kind_from_string(kind),
                                   strategy_from_string(strategy));
              py::dict d;
              d["value"] = rep.value;
              d["n_used"] = rep.n_used;
              d["n_skipped"] = rep.n_skipped;
              return d;
          },
          py::arg("groups"), py::arg("kind") = "spearman", py::arg("strategy") = "dataset");
    m.def("bootstrap_compare",
          [](const std::vector<std::vector<std::pair<double, double>>>& a,
             const std::vector<std::vector<std::pair<double, double>>>& b,
             const std::string& kind, const std::string& strategy, std::size_t n_resamples,
             double alpha, std::uint64_t seed) {
              auto res = bootstrap_compare(to_paired(a), to_paired(b),
                                           corr_kind_from_string(kind),
                                           strategy_from_string(strategy), n_resamples, alpha,
                                           seed);
              py::dict d;
              d["p_value"] = res.p_value;
              d["significant"] = res.significant;
              d["n_resamples"] = res.n_resamples;
              d["alpha"] = res.alpha;
              d["seed"] = res.seed;
              return d;
          },
          py::arg("a"), py::arg("b"), py::arg("kind") = "spearman",
          py::arg("strategy") = "dataset", py::arg("n_resamples") = 1000,
          py::arg("alpha") = 0.05, py::arg("seed") = 0);

    // ROUGE baselines.
    auto rouge_dict = [](const RougeScore& s) {
        py::dict d;
        d["precision"] = s.precision;
        d["recall"] = s.recall;
        d["f1"] = s.f1;
        return d;
    };
    m.def("rouge_n",
          [rouge_dict](const std::string& h, const std::string& r, int n) {
              return rouge_dict(rouge_n(h, r, n));
          },
          py::arg("hypo"), py::arg("ref"), py::arg("n") = 1);
    m.def("rouge_l",
          [rouge_dict](const std::string& h, const std::string& r) {
              return rouge_dict(rouge_l(h, r));
          },
          py::arg("hypo"), py::arg("ref"));

    // End-to-end scoring over an in-memory JSON-Lines dataset; returns
    // the score records as a JSON-Lines string.
    m.def("score_dataset_jsonl",
          [](const std::string& dataset_jsonl, const std::string& task,
             const std::string& aspect, const std::string& direction,
             const std::string& setting, std::size_t k, std::uint64_t seed,
             const std::string& backend, const std::string& model, const std::string& endpoint,
             const std::string& cache_dir, const std::string& corpus) {
              Task t = task_from_string(task);
              Dataset ds = parse_dataset(dataset_jsonl, t, "<memory>");
              Direction dir = direction.empty() ? ds.default_direction
                                                : direction_from_string(direction);
              auto be = make_backend(
                  config_from_kwargs(backend, model, endpoint, cache_dir, corpus));
              auto recs = score_dataset(*be, builtin_templates(), ds, aspect, dir,
                                        setting_from_string(setting), k, seed);
              return save_records(recs);
          },
          py::arg("dataset_jsonl"), py::arg("task"), py::arg("aspect"),
          py::arg("direction") = "", py::arg("setting") = "ist", py::arg("k") = 0,
          py::arg("seed") = 0, py::arg("backend") = "fixture", py::arg("model") = "fixture",
          py::arg("endpoint") = "", py::arg("cache_dir") = "", py::arg("corpus") = "");

    // Join score records back to human judgments and correlate.
    m.def("metaeval_jsonl",
          [](const std::string& records_jsonl, const std::string& dataset_jsonl,
             const std::string& task, const std::string& aspect, const std::string& kind,
             const std::string& strategy) {
              Task t = task_from_string(task);
              Dataset ds = parse_dataset(dataset_jsonl, t, "<memory>");
              auto recs = parse_records(records_jsonl);
              Strategy st = strategy.empty() ? ds.default_strategy
                                             : strategy_from_string(strategy);
              auto rep = aggregate(join_scores(recs, ds, aspect), corr_kind_from_string(kind),
                                   st);
              py::dict d;
              d["value"] = rep.value;
              d["n_used"] = rep.n_used;
              d["n_skipped"] = rep.n_skipped;
              return d;
          },
          py::arg("records_jsonl"), py::arg("dataset_jsonl"), py::arg("task"),
          py::arg("aspect"), py::arg("kind") = "spearman", py::arg("strategy") = "");
}
