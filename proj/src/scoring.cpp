#include "gptscore/scoring.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace gptscore {

using nlohmann::json;

double gptscore(const std::vector<TokenScore>& tokens) {
    if (tokens.empty()) throw UsageError("gptscore requires a non-empty token list");
    double sum = 0.0;
    for (const auto& t : tokens) {
        if (!std::isfinite(t.logprob))
            throw DataError("non-finite logprob for token '" + t.token + "'");
        sum += t.logprob;
    }
    return sum / static_cast<double>(tokens.size());
}

ScoreRecord score_output(Backend& backend, const TemplateRegistry& templates,
                         const GenSample& sample, const SystemOutput& output,
                         const std::string& aspect, Direction direction, Setting setting,
                         const std::vector<Demonstration>& demos) {
    ScoreRecord rec;
    rec.sample_id = sample.sample_id;
    rec.system_id = output.system_id;
    rec.aspect = aspect;
    rec.direction = direction;
    rec.setting = setting;
    rec.k = demos.size();
    if (setting != Setting::IDM && !demos.empty())
        throw UsageError("demonstrations require the idm setting");

    if (direction == Direction::RefBidir) {
        if (sample.references.empty())
            throw DataError("ref<->hypo scoring requires references (sample '" +
                            sample.sample_id + "')");
        const auto& fwd = templates.get(sample.task, aspect, Direction::RefToHypo);
        const auto& rev = templates.get(sample.task, aspect, Direction::HypoToRef);
        auto fwd_tokens = backend.token_logprobs(render(fwd, sample, output, demos, setting));
        auto rev_tokens = backend.token_logprobs(render(rev, sample, output, demos, setting));
        rec.value = (gptscore(fwd_tokens) + gptscore(rev_tokens)) / 2.0;
        rec.token_count = fwd_tokens.size() + rev_tokens.size();
        return rec;
    }

    const auto& tpl = templates.get(sample.task, aspect, direction);
    RenderedPrompt prompt;
    if (direction == Direction::BooleanQA) {
        if (!demos.empty())
            throw UsageError("boolean-qa templates do not take demonstrations");
        prompt = render_dialogue(tpl, sample.source, output.text);
        prompt.setting = setting;
    } else {
        if ((direction == Direction::RefToHypo || direction == Direction::HypoToRef) &&
            sample.references.empty())
            throw DataError("reference-based scoring requires references (sample '" +
                            sample.sample_id + "')");
        prompt = render(tpl, sample, output, demos, setting);
    }
    auto tokens = backend.token_logprobs(prompt);
    rec.value = gptscore(tokens);
    rec.token_count = tokens.size();
    return rec;
}

std::vector<ScoreRecord> score_dataset(Backend& backend, const TemplateRegistry& templates,
                                       const Dataset& ds, const std::string& aspect,
                                       Direction direction, Setting setting, std::size_t k,
                                       std::uint64_t seed) {
    if (k > 0 && setting != Setting::IDM)
        throw UsageError("k > 0 requires the idm setting");
    if (setting == Setting::IDM && ds.samples.size() < k + 1)
        throw UsageError("idm with k=" + std::to_string(k) + " needs at least " +
                         std::to_string(k + 1) + " samples");

    std::vector<ScoreRecord> records;
    std::size_t completed = 0;
    try {
        for (std::size_t i = 0; i < ds.samples.size(); ++i) {
            const GenSample& sample = ds.samples[i];
            std::vector<Demonstration> demos;
            if (setting == Setting::IDM && k > 0 && direction != Direction::BooleanQA) {
                std::vector<Demonstration> pool;
                for (std::size_t j = 0; j < ds.samples.size(); ++j) {
                    if (j == i) continue;  // never demo the evaluated sample
                    pool.push_back(Demonstration{
                        bindings_for(ds.samples[j], ds.samples[j].outputs.front())});
                }
                demos = select_demos(pool, k, seed ^ static_cast<std::uint64_t>(i));
            }
            for (const auto& output : sample.outputs) {
                records.push_back(score_output(backend, templates, sample, output, aspect,
                                               direction, setting, demos));
                ++completed;
            }
        }
    } catch (const Error&) {
        std::cerr << "scoring failed after " << completed
                  << " completed records (cached work is preserved)\n";
        throw;
    }
    return records;
}

PairedScores join_scores(const std::vector<ScoreRecord>& records, const Dataset& ds,
                         const std::string& aspect) {
    std::map<std::pair<std::string, std::string>, double> values;
    std::vector<std::string> unmatched;
    for (const auto& r : records) {
        if (r.aspect != aspect) continue;
        values[{r.sample_id, r.system_id}] = r.value;
    }
    if (values.empty())
        throw DataError("no score records for aspect '" + aspect + "'");

    std::set<std::pair<std::string, std::string>> consumed;
    PairedScores ps;
    for (const auto& sample : ds.samples) {
        std::vector<ScorePair> group;
        for (const auto& out : sample.outputs) {
            auto it = values.find({sample.sample_id, out.system_id});
            if (it == values.end()) continue;
            auto hit = out.human_scores.find(aspect);
            if (hit == out.human_scores.end())
                throw DataError("output (" + sample.sample_id + ", " + out.system_id +
                                ") has no human score for aspect '" + aspect + "'");
            group.push_back(ScorePair{it->second, hit->second});
            consumed.insert(it->first);
        }
        if (!group.empty()) ps.groups.push_back(std::move(group));
    }
    for (const auto& [key, v] : values)
        if (!consumed.count(key)) unmatched.push_back(key.first + "/" + key.second);
    if (!unmatched.empty()) {
        std::string msg = "score records did not join the dataset:";
        for (const auto& id : unmatched) msg += " " + id;
        throw DataError(msg);
    }
    return ps;
}

std::string save_records(const std::vector<ScoreRecord>& records) {
    std::string out;
    for (const auto& r : records) {
        json j;
        j["sample_id"] = r.sample_id;
        j["system_id"] = r.system_id;
        j["aspect"] = r.aspect;
        j["direction"] = to_string(r.direction);
        j["setting"] = to_string(r.setting);
        j["k"] = r.k;
        j["value"] = r.value;
        j["token_count"] = r.token_count;
        out += j.dump();
        out += '\n';
    }
    return out;
}

void save_records(const std::vector<ScoreRecord>& records, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write score file: " + path);
    out << save_records(records);
}

std::vector<ScoreRecord> parse_records(const std::string& text) {
    std::vector<ScoreRecord> out;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            json j = json::parse(line);
            ScoreRecord r;
            r.sample_id = j.at("sample_id").get<std::string>();
            r.system_id = j.at("system_id").get<std::string>();
            r.aspect = j.at("aspect").get<std::string>();
            r.direction = direction_from_string(j.at("direction").get<std::string>());
            r.setting = setting_from_string(j.at("setting").get<std::string>());
            r.k = j.at("k").get<std::size_t>();
            r.value = j.at("value").get<double>();
            r.token_count = j.at("token_count").get<std::size_t>();
            out.push_back(std::move(r));
        } catch (const json::exception& e) {
            throw DataError("score file line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::vector<ScoreRecord> load_records(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open score file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_records(buf.str());
}

}  // namespace gptscore
