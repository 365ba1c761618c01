#include "gptscore/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "gptscore/rng.hpp"

namespace gptscore {

using nlohmann::json;

const GenSample* Dataset::find(const std::string& sample_id) const {
    for (const auto& s : samples)
        if (s.sample_id == sample_id) return &s;
    return nullptr;
}

Direction default_direction_for(Task t) {
    switch (t) {
        case Task::Summ: return Direction::SrcToHypo;
        case Task::MT:
        case Task::D2T: return Direction::RefBidir;
        case Task::DiagTurn:
        case Task::DiagDialog: return Direction::BooleanQA;
    }
    return Direction::SrcToHypo;
}

Strategy default_strategy_for(Task t) {
    return is_dialogue(t) ? Strategy::DatasetLevel : Strategy::SampleLevel;
}

namespace {

GenSample parse_sample(const json& j, Task schema, std::size_t line_no) {
    auto fail = [line_no](const std::string& msg) -> DataError {
        return DataError("line " + std::to_string(line_no) + ": " + msg);
    };
    if (!j.is_object()) throw fail("expected a JSON object");
    GenSample s;
    if (!j.contains("sample_id")) throw fail("missing field 'sample_id'");
    s.sample_id = j.at("sample_id").get<std::string>();
    if (!j.contains("task")) throw fail("missing field 'task'");
    s.task = task_from_string(j.at("task").get<std::string>());
    if (s.task != schema)
        throw fail("sample task '" + to_string(s.task) + "' does not match dataset task '" +
                   to_string(schema) + "'");
    s.source = j.value("source", std::string{});
    if (j.contains("references"))
        s.references = j.at("references").get<std::vector<std::string>>();
    if (!j.contains("outputs")) throw fail("missing field 'outputs'");
    for (const auto& oj : j.at("outputs")) {
        SystemOutput out;
        if (!oj.contains("system_id")) throw fail("output missing field 'system_id'");
        out.system_id = oj.at("system_id").get<std::string>();
        if (!oj.contains("text")) throw fail("output missing field 'text'");
        out.text = oj.at("text").get<std::string>();
        if (out.text.empty()) throw fail("output text is empty for system '" + out.system_id + "'");
        if (oj.contains("human_scores"))
            for (const auto& [k, v] : oj.at("human_scores").items()) {
                double d = v.get<double>();
                if (!std::isfinite(d))
                    throw fail("non-finite human score for aspect '" + k + "'");
                out.human_scores[k] = d;
            }
        s.outputs.push_back(std::move(out));
    }
    if (s.outputs.empty()) throw fail("'outputs' is empty");
    return s;
}

}  // namespace

Dataset parse_dataset(const std::string& text, Task schema, const std::string& name) {
    Dataset ds;
    ds.name = name;
    ds.task = schema;
    ds.default_direction = default_direction_for(schema);
    ds.default_strategy = default_strategy_for(schema);

    std::set<std::string> ids;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw DataError("line " + std::to_string(line_no) + ": JSON parse error: " + e.what());
        }
        GenSample s = parse_sample(j, schema, line_no);
        if (!ids.insert(s.sample_id).second)
            throw DataError("line " + std::to_string(line_no) + ": duplicate sample_id '" +
                            s.sample_id + "'");
        ds.samples.push_back(std::move(s));
    }
    if (ds.samples.empty()) throw DataError("dataset '" + name + "' is empty");
    return ds;
}

Dataset load_dataset(const std::string& path, Task schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open dataset file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_dataset(buf.str(), schema, path);
}

std::string save_dataset(const Dataset& ds) {
    std::string out;
    for (const auto& s : ds.samples) {
        json j;
        j["sample_id"] = s.sample_id;
        j["task"] = to_string(s.task);
        j["source"] = s.source;
        j["references"] = s.references;
        json outputs = json::array();
        for (const auto& o : s.outputs) {
            json oj;
            oj["system_id"] = o.system_id;
            oj["text"] = o.text;
            oj["human_scores"] = o.human_scores;
            outputs.push_back(oj);
        }
        j["outputs"] = outputs;
        out += j.dump();
        out += '\n';
    }
    return out;
}

void save_dataset(const Dataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write dataset file: " + path);
    out << save_dataset(ds);
}

Dataset subsample(const Dataset& ds, std::size_t n, std::uint64_t seed,
                  const std::vector<std::string>& required_aspects) {
    if (n < 1 || n > ds.samples.size())
        throw UsageError("subsample size " + std::to_string(n) + " out of range [1, " +
                         std::to_string(ds.samples.size()) + "]");

    auto qualifies = [&required_aspects](const GenSample& s) {
        for (const auto& o : s.outputs)
            for (const auto& a : required_aspects)
                if (!o.human_scores.count(a)) return false;
        return true;
    };

    std::vector<std::size_t> preferred, rest;
    for (std::size_t i = 0; i < ds.samples.size(); ++i)
        (required_aspects.empty() || qualifies(ds.samples[i]) ? preferred : rest).push_back(i);

    DetRng rng(seed);
    rng.shuffle(preferred);
    rng.shuffle(rest);

    std::vector<std::size_t> chosen;
    for (std::size_t i : preferred) {
        if (chosen.size() == n) break;
        chosen.push_back(i);
    }
    for (std::size_t i : rest) {
        if (chosen.size() == n) break;
        chosen.push_back(i);
    }
    std::sort(chosen.begin(), chosen.end());  // keep dataset order

    Dataset out = ds;
    out.samples.clear();
    for (std::size_t i : chosen) out.samples.push_back(ds.samples[i]);
    return out;
}

}  // namespace gptscore
