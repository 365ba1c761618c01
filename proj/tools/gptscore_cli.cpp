// gptscore: score generated text with conditional logprobs and
// meta-evaluate metrics against human judgments.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gptscore/aspects.hpp"
#include "gptscore/backends.hpp"
#include "gptscore/datasets.hpp"
#include "gptscore/metaeval.hpp"
#include "gptscore/prompt.hpp"
#include "gptscore/rouge.hpp"
#include "gptscore/scoring.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace gptscore;

namespace {

struct BackendOpts {
    std::string kind = "fixture";
    std::string model = "fixture";
    std::string endpoint;
    std::string cache_dir;
    std::string corpus_file;
    std::string fixture_file;
    int max_parallel = 4;
    int retries = 3;
    int backoff_ms = 250;

    void attach(CLI::App* app) {
        app->add_option("--backend", kind, "Backend kind: http|fixture|unigram");
        app->add_option("--model", model, "Model identifier");
        app->add_option("--endpoint", endpoint, "Base URL of an OpenAI-compatible endpoint");
        app->add_option("--cache-dir", cache_dir, "Response cache directory");
        app->add_option("--corpus-file", corpus_file, "Unigram backend corpus file");
        app->add_option("--fixture-file", fixture_file, "Fixture backend canned responses");
        app->add_option("--max-parallel", max_parallel, "Max in-flight requests");
        app->add_option("--retries", retries, "Max request attempts");
        app->add_option("--backoff-ms", backoff_ms, "Base retry backoff in ms");
    }

    BackendConfig to_config() const {
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
        cfg.max_parallel = max_parallel;
        cfg.retry.max_attempts = retries;
        cfg.retry.base_backoff_ms = backoff_ms;
        cfg.fixture_path = fixture_file;
        if (!corpus_file.empty()) {
            std::ifstream in(corpus_file, std::ios::binary);
            if (!in) throw DataError("cannot open corpus file: " + corpus_file);
            std::stringstream buf;
            buf << in.rdbuf();
            cfg.unigram_corpus = buf.str();
        }
        return cfg;
    }
};

// A JSON config file supplies defaults; explicit flags override it.
void apply_config_defaults(CLI::App* app, const std::string& config_path) {
    if (config_path.empty()) return;
    std::ifstream in(config_path, std::ios::binary);
    if (!in) throw UsageError("cannot open config file: " + config_path);
    json cfg;
    try {
        cfg = json::parse(in);
    } catch (const json::parse_error& e) {
        throw UsageError(std::string("config file is not valid JSON: ") + e.what());
    }
    for (const auto& [key, value] : cfg.items()) {
        CLI::Option* opt = app->get_option_no_throw("--" + key);
        if (!opt) continue;
        if (opt->count() > 0) continue;  // flag wins
        std::string text = value.is_string() ? value.get<std::string>() : value.dump();
        opt->add_result(text);
    }
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path);
    out << text;
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

struct RunContext {
    Dataset ds;
    std::shared_ptr<Backend> backend;
    CachedBackend* cache = nullptr;
};

}  // namespace

int run(int argc, char** argv) {
    CLI::App app{"GPTScore evaluation harness"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "JSON config file; flags override its values")
        ->expected(1);

    // ---- score ----
    auto* score_cmd = app.add_subcommand("score", "Score a dataset with a backend");
    std::string sc_dataset, sc_task = "Summ", sc_aspect, sc_direction, sc_setting = "val",
                sc_out;
    std::size_t sc_k = 0;
    std::uint64_t sc_seed = 0;
    std::size_t sc_subsample = 0;
    std::string sc_require_aspects;
    BackendOpts sc_backend;
    score_cmd->add_option("--dataset", sc_dataset, "JSON-Lines dataset path")->required();
    score_cmd->add_option("--task", sc_task, "Task kind: Summ|MT|D2T|DiagTurn|DiagDialog");
    score_cmd->add_option("--aspect", sc_aspect, "Aspect key, e.g. FLU")->required();
    score_cmd->add_option("--direction", sc_direction,
                          "src->hypo|ref->hypo|hypo->ref|ref<->hypo|boolean-qa "
                          "(default: per-task rule)");
    score_cmd->add_option("--setting", sc_setting, "val|ist|idm");
    score_cmd->add_option("--k", sc_k, "Demonstration count (idm only)");
    score_cmd->add_option("--seed", sc_seed, "Random seed");
    score_cmd->add_option("--subsample", sc_subsample, "Subsample this many samples first");
    score_cmd->add_option("--require-aspects", sc_require_aspects,
                          "Comma-separated aspects preferred when subsampling");
    score_cmd->add_option("--out", sc_out, "Output JSON-Lines score file")->required();
    sc_backend.attach(score_cmd);

    // ---- metaeval ----
    auto* meta_cmd = app.add_subcommand("metaeval", "Correlate scores with human judgments");
    std::string me_scores, me_dataset, me_task = "Summ", me_aspect, me_kind = "spearman",
                me_strategy, me_out, me_csv;
    meta_cmd->add_option("--scores", me_scores, "Score JSON-Lines file")->required();
    meta_cmd->add_option("--dataset", me_dataset, "Dataset path")->required();
    meta_cmd->add_option("--task", me_task, "Task kind");
    meta_cmd->add_option("--aspect", me_aspect, "Aspect key")->required();
    meta_cmd->add_option("--kind", me_kind, "spearman|pearson");
    meta_cmd->add_option("--strategy", me_strategy, "sample|dataset (default: per-task rule)");
    meta_cmd->add_option("--out", me_out, "Write the report JSON here (default: stdout)");
    meta_cmd->add_option("--csv", me_csv, "Append a CSV row to this file");

    // ---- ablate-demos ----
    auto* abl_cmd = app.add_subcommand("ablate-demos",
                                       "Correlation as a function of demonstration count");
    std::string ab_dataset, ab_task = "MT", ab_aspect, ab_direction, ab_kind = "spearman",
                ab_strategy, ab_out, ab_grid = "0,1,2,4,8,12";
    std::uint64_t ab_seed = 0;
    BackendOpts ab_backend;
    abl_cmd->add_option("--dataset", ab_dataset, "Dataset path")->required();
    abl_cmd->add_option("--task", ab_task, "Task kind");
    abl_cmd->add_option("--aspect", ab_aspect, "Aspect key")->required();
    abl_cmd->add_option("--direction", ab_direction, "Scoring direction");
    abl_cmd->add_option("--kind", ab_kind, "spearman|pearson");
    abl_cmd->add_option("--strategy", ab_strategy, "sample|dataset");
    abl_cmd->add_option("--k-grid", ab_grid, "Comma-separated demonstration counts");
    abl_cmd->add_option("--seed", ab_seed, "Random seed");
    abl_cmd->add_option("--out", ab_out, "Output CSV path")->required();
    ab_backend.attach(abl_cmd);

    // ---- compose-aspects ----
    auto* comp_cmd = app.add_subcommand(
        "compose-aspects", "Evaluate a target aspect with composed definitions");
    std::string co_dataset, co_task = "DiagTurn", co_target, co_extras, co_kind = "spearman",
                co_strategy, co_out, co_order_out;
    std::uint64_t co_seed = 0;
    BackendOpts co_backend;
    comp_cmd->add_option("--dataset", co_dataset, "Dialogue dataset path")->required();
    comp_cmd->add_option("--task", co_task, "DiagTurn|DiagDialog");
    comp_cmd->add_option("--target", co_target, "Target aspect key")->required();
    comp_cmd->add_option("--extras", co_extras, "Comma-separated extra aspects, in order")
        ->required();
    comp_cmd->add_option("--kind", co_kind, "spearman|pearson");
    comp_cmd->add_option("--strategy", co_strategy, "sample|dataset");
    comp_cmd->add_option("--seed", co_seed, "Random seed");
    comp_cmd->add_option("--out", co_out, "Output CSV path (x, definition, correlation)")
        ->required();
    comp_cmd->add_option("--order-out", co_order_out,
                         "Aspect-order CSV (aspect, correlation with target), descending");
    co_backend.attach(comp_cmd);

    // ---- significance ----
    auto* sig_cmd = app.add_subcommand("significance",
                                       "Paired bootstrap comparison of two metrics");
    std::string sg_a, sg_b, sg_dataset, sg_task = "Summ", sg_aspect, sg_kind = "spearman",
                sg_strategy, sg_out;
    std::size_t sg_resamples = 1000;
    double sg_alpha = 0.05;
    std::uint64_t sg_seed = 0;
    sig_cmd->add_option("--scores-a", sg_a, "First metric's score file")->required();
    sig_cmd->add_option("--scores-b", sg_b, "Second metric's score file")->required();
    sig_cmd->add_option("--dataset", sg_dataset, "Dataset path")->required();
    sig_cmd->add_option("--task", sg_task, "Task kind");
    sig_cmd->add_option("--aspect", sg_aspect, "Aspect key")->required();
    sig_cmd->add_option("--kind", sg_kind, "spearman|pearson");
    sig_cmd->add_option("--strategy", sg_strategy, "sample|dataset");
    sig_cmd->add_option("--resamples", sg_resamples, "Bootstrap resamples (B)");
    sig_cmd->add_option("--alpha", sg_alpha, "Significance level");
    sig_cmd->add_option("--seed", sg_seed, "Random seed");
    sig_cmd->add_option("--out", sg_out, "Write the result JSON here (default: stdout)");

    // ---- report ----
    auto* rep_cmd = app.add_subcommand("report", "Markdown table from a metaeval CSV");
    std::string rp_csv, rp_out, rp_sig_ist, rp_sig_idm;
    rep_cmd->add_option("--csv", rp_csv, "Metaeval CSV file")->required();
    rep_cmd->add_option("--out", rp_out, "Output Markdown path (default: stdout)");
    rep_cmd->add_option("--sig-ist-vs-val", rp_sig_ist,
                        "Significance JSON marking IST better than VAL (adds †)");
    rep_cmd->add_option("--sig-idm-vs-ist", rp_sig_idm,
                        "Significance JSON marking IDM better than IST (adds ‡)");

    // ---- cache ----
    auto* cache_cmd = app.add_subcommand("cache", "Inspect or clear the response cache");
    std::string ca_dir, ca_action;
    cache_cmd->add_option("action", ca_action, "stats|clear")->required();
    cache_cmd->add_option("--cache-dir", ca_dir, "Cache directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    for (auto* sub : app.get_subcommands()) apply_config_defaults(sub, config_path);

    auto make_cached_backend = [](const BackendOpts& opts, CachedBackend** cache_out) {
        auto backend = make_backend(opts.to_config());
        if (cache_out) *cache_out = dynamic_cast<CachedBackend*>(backend.get());
        return backend;
    };

    auto split_csv = [](const std::string& s) {
        std::vector<std::string> out;
        std::stringstream ss(s);
        std::string part;
        while (std::getline(ss, part, ','))
            if (!part.empty()) out.push_back(part);
        return out;
    };

    if (*score_cmd) {
        Task task = task_from_string(sc_task);
        Dataset ds = load_dataset(sc_dataset, task);
        if (sc_subsample > 0)
            ds = subsample(ds, sc_subsample, sc_seed, split_csv(sc_require_aspects));
        Direction dir = sc_direction.empty() ? ds.default_direction
                                             : direction_from_string(sc_direction);
        Setting setting = setting_from_string(sc_setting);
        if (sc_k > 0 && setting != Setting::IDM)
            throw UsageError("--k > 0 requires --setting idm");
        CachedBackend* cache = nullptr;
        auto backend = make_cached_backend(sc_backend, &cache);
        auto records = score_dataset(*backend, builtin_templates(), ds, sc_aspect, dir, setting,
                                     sc_k, sc_seed);
        save_records(records, sc_out);
        std::size_t tokens = 0;
        for (const auto& r : records) tokens += r.token_count;
        std::cout << "records written: " << records.size() << "\n";
        std::cout << "target tokens scored: " << tokens << "\n";
        if (cache) {
            auto st = cache->stats();
            double rate = st.hits + st.misses
                              ? 100.0 * st.hits / static_cast<double>(st.hits + st.misses)
                              : 0.0;
            std::cout << "cache hit rate: " << std::fixed << std::setprecision(1) << rate
                      << "% (" << st.hits << "/" << (st.hits + st.misses) << ")\n";
        }
        return 0;
    }

    if (*meta_cmd) {
        Task task = task_from_string(me_task);
        Dataset ds = load_dataset(me_dataset, task);
        auto records = load_records(me_scores);
        Strategy strategy = me_strategy.empty() ? ds.default_strategy
                                                : strategy_from_string(me_strategy);
        CorrKind kind = corr_kind_from_string(me_kind);
        auto ps = join_scores(records, ds, me_aspect);
        auto rep = aggregate(ps, kind, strategy);
        std::string out = rep.to_json() + "\n";
        if (me_out.empty())
            std::cout << out;
        else
            write_text(me_out, out);
        if (!me_csv.empty()) {
            bool fresh = !fs::exists(me_csv);
            std::ofstream csv(me_csv, std::ios::app);
            if (!csv) throw DataError("cannot write CSV file: " + me_csv);
            if (fresh) csv << "dataset,aspect,model,setting,kind,strategy,value,p_value\n";
            std::string model = "-", setting = "-";
            for (const auto& r : records)
                if (r.aspect == me_aspect) {
                    setting = to_string(r.setting);
                    break;
                }
            csv << csv_escape(ds.name) << ',' << me_aspect << ',' << model << ',' << setting
                << ',' << to_string(kind) << ',' << to_string(strategy) << ',' << fmt(rep.value)
                << ",\n";
        }
        return 0;
    }

    if (*abl_cmd) {
        Task task = task_from_string(ab_task);
        Dataset ds = load_dataset(ab_dataset, task);
        Direction dir = ab_direction.empty() ? ds.default_direction
                                             : direction_from_string(ab_direction);
        Strategy strategy = ab_strategy.empty() ? ds.default_strategy
                                                : strategy_from_string(ab_strategy);
        CorrKind kind = corr_kind_from_string(ab_kind);
        std::vector<std::size_t> grid;
        for (const auto& part : split_csv(ab_grid))
            grid.push_back(static_cast<std::size_t>(std::stoul(part)));
        if (grid.empty()) throw UsageError("--k-grid is empty");
        // Validate the whole grid before issuing any backend call.
        for (std::size_t k : grid)
            if (ds.samples.size() < k + 1)
                throw UsageError("k=" + std::to_string(k) + " exceeds the demo pool (" +
                                 std::to_string(ds.samples.size() - 1) + " samples available)");
        auto backend = make_cached_backend(ab_backend, nullptr);
        std::string csv = "k,correlation\n";
        for (std::size_t k : grid) {
            auto records = score_dataset(*backend, builtin_templates(), ds, ab_aspect, dir,
                                         Setting::IDM, k, ab_seed);
            auto rep = aggregate(join_scores(records, ds, ab_aspect), kind, strategy);
            csv += std::to_string(k) + "," + fmt(rep.value) + "\n";
        }
        write_text(ab_out, csv);
        std::cout << csv;
        return 0;
    }

    if (*comp_cmd) {
        Task task = task_from_string(co_task);
        if (!is_dialogue(task))
            throw UsageError("compose-aspects requires a dialogue task (DiagTurn|DiagDialog)");
        Dataset ds = load_dataset(co_dataset, task);
        Strategy strategy = co_strategy.empty() ? ds.default_strategy
                                                : strategy_from_string(co_strategy);
        CorrKind kind = corr_kind_from_string(co_kind);
        auto extras = split_csv(co_extras);
        const auto& reg = builtin_registry();
        auto backend = make_cached_backend(co_backend, nullptr);

        std::string csv = "x,definition,correlation\n";
        for (std::size_t x = 1; x <= 1 + extras.size(); ++x) {
            std::vector<std::string> used(extras.begin(), extras.begin() + (x - 1));
            std::string definition = reg.compose_definition(co_target, used);
            // Boolean-QA template whose question is the composed definition.
            PromptTemplate tpl;
            tpl.task = task;
            tpl.aspect = co_target;
            tpl.direction = Direction::BooleanQA;
            tpl.frame =
                "Answer the question based on the conversation between a human and AI.\n"
                "Question: " +
                definition + " (a) Yes. (b) No.\nConversation: {History}\nAnswer:{Answer}";
            tpl.target_marker = "Answer";
            TemplateRegistry custom;
            custom.add(tpl);
            auto records = score_dataset(*backend, custom, ds, co_target,
                                         Direction::BooleanQA, Setting::IST, 0, co_seed);
            auto rep = aggregate(join_scores(records, ds, co_target), kind, strategy);
            csv += std::to_string(x) + "," + csv_escape(definition) + "," + fmt(rep.value) +
                   "\n";
        }
        write_text(co_out, csv);
        std::cout << csv;

        // Aspect order: correlation between the target's human scores
        // and every other aspect's, over all outputs, descending.
        std::vector<std::pair<std::string, double>> order;
        for (const auto& key : reg.keys()) {
            if (key == co_target) continue;
            std::vector<double> tv, ov;
            for (const auto& s : ds.samples)
                for (const auto& o : s.outputs) {
                    auto ti = o.human_scores.find(co_target);
                    auto oi = o.human_scores.find(key);
                    if (ti == o.human_scores.end() || oi == o.human_scores.end()) continue;
                    tv.push_back(ti->second);
                    ov.push_back(oi->second);
                }
            if (tv.size() < 2) continue;
            try {
                order.emplace_back(key, spearman(tv, ov));
            } catch (const DataError&) {
                // constant vector; aspect carries no ordering signal here
            }
        }
        std::stable_sort(order.begin(), order.end(),
                         [](const auto& a, const auto& b) { return a.second > b.second; });
        std::string order_csv = "aspect,correlation\n";
        for (const auto& [key, v] : order) order_csv += key + "," + fmt(v) + "\n";
        if (!co_order_out.empty()) write_text(co_order_out, order_csv);
        std::cout << order_csv;
        return 0;
    }

    if (*sig_cmd) {
        if (sg_resamples == 0) throw UsageError("--resamples must be >= 1");
        Task task = task_from_string(sg_task);
        Dataset ds = load_dataset(sg_dataset, task);
        Strategy strategy = sg_strategy.empty() ? ds.default_strategy
                                                : strategy_from_string(sg_strategy);
        CorrKind kind = corr_kind_from_string(sg_kind);
        auto a = join_scores(load_records(sg_a), ds, sg_aspect);
        auto b = join_scores(load_records(sg_b), ds, sg_aspect);
        auto res = bootstrap_compare(a, b, kind, strategy, sg_resamples, sg_alpha, sg_seed);
        std::string out = res.to_json() + "\n";
        if (sg_out.empty())
            std::cout << out;
        else
            write_text(sg_out, out);
        return 0;
    }

    if (*rep_cmd) {
        std::ifstream in(rp_csv, std::ios::binary);
        if (!in) throw DataError("cannot open CSV file: " + rp_csv);
        auto read_significant = [](const std::string& path) {
            if (path.empty()) return false;
            std::ifstream f(path, std::ios::binary);
            if (!f) throw DataError("cannot open significance file: " + path);
            return json::parse(f).at("significant").get<bool>();
        };
        const bool ist_sig = read_significant(rp_sig_ist);
        const bool idm_sig = read_significant(rp_sig_idm);

        // key: dataset|aspect|model|kind|strategy -> setting -> value
        std::map<std::string, std::map<std::string, std::string>> rows;
        std::string line;
        std::getline(in, line);  // header
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::vector<std::string> f;
            std::stringstream ss(line);
            std::string part;
            while (std::getline(ss, part, ',')) f.push_back(part);
            if (f.size() < 7) continue;
            rows[f[0] + "|" + f[1] + "|" + f[2] + "|" + f[4] + "|" + f[5]][f[3]] = f[6];
        }
        std::string md = "| dataset | aspect | model | VAL | IST | IDM |\n";
        md += "|---|---|---|---|---|---|\n";
        for (const auto& [key, settings] : rows) {
            std::vector<std::string> f;
            std::stringstream ss(key);
            std::string part;
            while (std::getline(ss, part, '|')) f.push_back(part);
            auto cell = [&settings](const std::string& s, const char* mark) {
                auto it = settings.find(s);
                if (it == settings.end()) return std::string("-");
                return it->second + mark;
            };
            md += "| " + f[0] + " | " + f[1] + " | " + f[2] + " | " + cell("val", "") + " | " +
                  cell("ist", ist_sig ? "†" : "") + " | " +
                  cell("idm", idm_sig ? (ist_sig ? "†‡" : "‡")
                                      : (ist_sig ? "†" : "")) +
                  " |\n";
        }
        if (rp_out.empty())
            std::cout << md;
        else
            write_text(rp_out, md);
        return 0;
    }

    if (*cache_cmd) {
        if (ca_action == "stats") {
            std::size_t entries = 0, bytes = 0;
            if (fs::exists(ca_dir))
                for (const auto& e : fs::directory_iterator(ca_dir))
                    if (e.path().extension() == ".json") {
                        ++entries;
                        bytes += fs::file_size(e.path());
                    }
            std::cout << "entries: " << entries << "\nbytes: " << bytes << "\n";
            return 0;
        }
        if (ca_action == "clear") {
            std::size_t removed = 0;
            if (fs::exists(ca_dir))
                for (const auto& e : fs::directory_iterator(ca_dir))
                    if (e.path().extension() == ".json") {
                        fs::remove(e.path());
                        ++removed;
                    }
            std::cout << "removed: " << removed << "\n";
            return 0;
        }
        throw UsageError("unknown cache action: '" + ca_action + "' (expected stats|clear)");
    }

    return 0;
}

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const BackendError& e) {
        std::cerr << "backend error: " << e.what() << "\n";
        return 4;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
