#include "gptscore/aspects.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include <json.hpp>

namespace gptscore {

using nlohmann::json;

namespace {

bool starts_with_vowel(const std::string& s) {
    if (s.empty()) return false;
    char c = static_cast<char>(std::tolower(static_cast<unsigned char>(s[0])));
    return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
}

std::string join_adjectives(const std::vector<std::string>& adjs) {
    // Oxford-comma joining: "x", "x and y", "x, y, and z".
    if (adjs.size() == 1) return adjs[0];
    if (adjs.size() == 2) return adjs[0] + " and " + adjs[1];
    std::string out;
    for (std::size_t i = 0; i + 1 < adjs.size(); ++i) out += adjs[i] + ", ";
    out += "and " + adjs.back();
    return out;
}

}  // namespace

void AspectSpec::validate() const {
    if (key.size() < 2 || key.size() > 4)
        throw DataError("aspect key '" + key + "' must be 2-4 characters");
    for (char c : key)
        if (!std::isupper(static_cast<unsigned char>(c)))
            throw DataError("aspect key '" + key + "' must be uppercase");
    if (definition.empty()) throw DataError("aspect '" + key + "' has empty definition");
    char last = definition.back();
    if (last != '?' && last != '.')
        throw DataError("aspect '" + key + "' definition must end with '?' or '.'");
    if (tasks.empty()) throw DataError("aspect '" + key + "' has no applicable tasks");
}

std::string AspectSpec::definition_for(Task t) const {
    auto it = per_task_definitions.find(t);
    return it != per_task_definitions.end() ? it->second : definition;
}

std::string AspectRegistry::seq_key(const std::string& target,
                                    const std::vector<std::string>& extras) {
    std::string k = target;
    for (const auto& e : extras) k += '\x1f' + e;
    return k;
}

std::string AspectRegistry::set_key(const std::string& target,
                                    const std::vector<std::string>& extras) {
    auto sorted = extras;
    std::sort(sorted.begin(), sorted.end());
    return seq_key(target, sorted);
}

void AspectRegistry::add(AspectSpec spec) {
    spec.validate();
    if (specs_.count(spec.key)) throw DataError("duplicate aspect key '" + spec.key + "'");
    order_.push_back(spec.key);
    specs_.emplace(spec.key, std::move(spec));
}

void AspectRegistry::add_override(const std::string& target,
                                  const std::vector<std::string>& extras,
                                  const std::string& text) {
    overrides_[seq_key(target, extras)] = text;
    overrides_by_set_.emplace(set_key(target, extras), text);
}

const AspectSpec& AspectRegistry::lookup(const std::string& key) const {
    auto it = specs_.find(key);
    if (it == specs_.end()) throw DataError("unknown aspect key '" + key + "'");
    return it->second;
}

bool AspectRegistry::contains(const std::string& key) const { return specs_.count(key) > 0; }

std::vector<std::string> AspectRegistry::keys() const { return order_; }

bool AspectRegistry::has_override(const std::string& target,
                                  const std::vector<std::string>& extras) const {
    return overrides_.count(seq_key(target, extras)) > 0;
}

std::string AspectRegistry::compose_definition(const std::string& target,
                                               const std::vector<std::string>& extras) const {
    const AspectSpec& tgt = lookup(target);
    std::set<Task> common = tgt.tasks;
    std::set<std::string> seen;
    for (const auto& e : extras) {
        if (e == target) throw DataError("composition target '" + target + "' repeated in extras");
        if (!seen.insert(e).second) throw DataError("duplicate extra aspect '" + e + "'");
        const AspectSpec& spec = lookup(e);
        std::set<Task> next;
        std::set_intersection(common.begin(), common.end(), spec.tasks.begin(), spec.tasks.end(),
                              std::inserter(next, next.begin()));
        common = std::move(next);
    }
    if (common.empty())
        throw DataError("aspects in composition do not share a task kind");

    // Override text wins: exact sequence first, then the same extras in
    // any order (the shipped table is order-insensitive on content).
    if (auto it = overrides_.find(seq_key(target, extras)); it != overrides_.end())
        return it->second;
    if (auto it = overrides_by_set_.find(set_key(target, extras)); it != overrides_by_set_.end())
        return it->second;

    if (extras.empty()) return tgt.definition;

    std::vector<std::string> adjs;
    adjs.reserve(extras.size());
    for (const auto& e : extras) adjs.push_back(lookup(e).adjective_form);
    const std::string& tadj = tgt.adjective_form;
    std::string article = starts_with_vowel(tadj) ? "an" : "a";
    return "Is this " + article + " " + tadj + " response that is " + join_adjectives(adjs) + "?";
}

std::string AspectRegistry::to_json() const {
    json arr = json::array();
    for (const auto& key : order_) {
        const AspectSpec& s = specs_.at(key);
        json j;
        j["key"] = s.key;
        j["name"] = s.name;
        j["definition"] = s.definition;
        j["adjective_form"] = s.adjective_form;
        json tasks = json::array();
        for (Task t : s.tasks) tasks.push_back(to_string(t));
        j["tasks"] = tasks;
        if (!s.per_task_definitions.empty()) {
            json ptd = json::object();
            for (const auto& [t, d] : s.per_task_definitions) ptd[to_string(t)] = d;
            j["per_task_definitions"] = ptd;
        }
        json ovr = json::array();
        for (const auto& [k, text] : overrides_) {
            std::vector<std::string> parts;
            std::stringstream ss(k);
            std::string part;
            while (std::getline(ss, part, '\x1f')) parts.push_back(part);
            if (parts.empty() || parts[0] != key) continue;
            json o;
            o["extras"] = std::vector<std::string>(parts.begin() + 1, parts.end());
            o["text"] = text;
            ovr.push_back(o);
        }
        if (!ovr.empty()) j["overrides"] = ovr;
        arr.push_back(j);
    }
    return arr.dump(2);
}

AspectRegistry AspectRegistry::from_json(const std::string& text) {
    json arr = json::parse(text);
    AspectRegistry reg;
    for (const auto& j : arr) {
        AspectSpec s;
        s.key = j.at("key").get<std::string>();
        s.name = j.at("name").get<std::string>();
        s.definition = j.at("definition").get<std::string>();
        s.adjective_form = j.at("adjective_form").get<std::string>();
        for (const auto& t : j.at("tasks")) s.tasks.insert(task_from_string(t.get<std::string>()));
        if (j.contains("per_task_definitions"))
            for (const auto& [k, v] : j.at("per_task_definitions").items())
                s.per_task_definitions[task_from_string(k)] = v.get<std::string>();
        std::string key = s.key;
        reg.add(std::move(s));
        if (j.contains("overrides"))
            for (const auto& o : j.at("overrides"))
                reg.add_override(key, o.at("extras").get<std::vector<std::string>>(),
                                 o.at("text").get<std::string>());
    }
    return reg;
}

namespace {

constexpr Task kSumm = Task::Summ;
constexpr Task kMT = Task::MT;
constexpr Task kD2T = Task::D2T;
constexpr Task kDT = Task::DiagTurn;
constexpr Task kDD = Task::DiagDialog;

AspectRegistry make_builtin() {
    AspectRegistry r;
    auto add = [&r](std::string key, std::string name, std::string def, std::string adj,
                    std::set<Task> tasks) {
        r.add(AspectSpec{std::move(key), std::move(name), std::move(def), std::move(adj),
                         std::move(tasks), {}});
    };

    add("COV", "Semantic Coverage",
        "How many semantic content units from the reference text are covered by the generated "
        "text?",
        "comprehensive", {kSumm});
    add("FAC", "Factuality",
        "Does the generated text preserve the factual statements of the source text?", "factual",
        {kSumm});
    add("CON", "Consistency", "Is the generated text consistent in the information it provides?",
        "consistent", {kSumm, kDT, kDD});
    add("INF", "Informativeness",
        "How well does the generated text capture the key ideas of its source text?",
        "informative", {kSumm, kD2T, kDT, kDD});
    add("COH", "Coherence", "How much does the generated text make sense?", "coherent",
        {kSumm, kDT, kDD});
    add("REL", "Relevance", "How well is the generated text relevant to its source text?",
        "relevant", {kDT, kDD, kSumm, kD2T});
    add("FLU", "Fluency", "Is the generated text well-written and grammatical?", "fluent",
        {kDT, kDD, kSumm, kD2T, kMT});
    add("ACC", "Accuracy",
        "Are there inaccuracies, missing, or unfactual content in the generated text?", "accurate",
        {kMT});
    add("MQM", "Multidimensional Quality Metrics",
        "How is the overall quality of the generated text?", "high-quality", {kMT});
    add("INT", "Interest", "Is the generated text interesting?", "interesting", {kDT, kDD});
    add("ENG", "Engagement", "Is the generated text engaging?", "engaging", {kDT, kDD});
    add("SPE", "Specific", "Is the generated text generic or specific to the source text?",
        "specific", {kDT, kDD});
    add("COR", "Correctness",
        "Is the generated text correct or was there a misunderstanding of the source text?",
        "correct", {kDT, kDD});
    add("SEM", "Semantically appropriate", "Is the generated text semantically appropriate?",
        "semantically appropriate", {kDT, kDD});
    add("UND", "Understandability", "Is the generated text understandable?", "understandable",
        {kDT, kDD});
    add("ERR", "Error Recovery", "Is the system able to recover from errors that it makes?",
        "error-tolerant", {kDT, kDD});
    add("DIV", "Diversity", "Is there diversity in the system responses?", "diverse", {kDT, kDD});
    add("DEP", "Depth", "Does the system discuss topics in depth?", "in-depth", {kDT, kDD});
    add("LIK", "Likeability", "Does the system display a likeable personality?", "likeable",
        {kDT, kDD});
    add("FLE", "Flexibility",
        "Is the system flexible and adaptable to the user and their interests?", "flexible",
        {kDT, kDD});
    add("INQ", "Inquisitiveness", "Is the system inquisitive throughout the conversation?",
        "inquisitive", {kDT, kDD});
    // Data-to-text naturalness; the instruction tables reference it even
    // though the definitions table does not list it.
    add("NAT", "Naturalness", "Is the generated text human-like and natural?", "natural", {kD2T});

    // Shipped composition chains for INT on dialogue data, verbatim
    // (including the source's "convsersation" spelling at x=1).
    r.add_override("INT", {}, "Is this response interesting to the convsersation?");
    r.add_override("INT", {"ENG"}, "Is this an interesting response that is engaging?");
    r.add_override("INT", {"SPE", "ENG"},
                   "Is this an interesting response that is specific and engaging?");
    r.add_override("INT", {"ENG", "SPE", "COR"},
                   "Is this an interesting response that is engaging, specific, and correct?");
    r.add_override(
        "INT", {"SPE", "ENG", "REL", "COR"},
        "Is this an interesting response that is specific, engaging, relevant, and correct?");
    r.add_override("INT", {"SPE", "ENG", "REL", "COR", "UND"},
                   "Is this an interesting response that is specific, engaging, relevant, "
                   "correct, and understandable?");
    r.add_override("INT", {"SPE", "ENG", "REL", "COR", "UND", "SEM"},
                   "Is this an interesting response that is specific, engaging, relevant, "
                   "correct, understandable, and semantically appropriate?");
    r.add_override("INT", {"SPE", "ENG", "REL", "COR", "UND", "SEM", "FLU"},
                   "Is this an interesting response that is specific, engaging, relevant, "
                   "correct, understandable, semantically appropriate, and fluent?");
    return r;
}

}  // namespace

const AspectRegistry& builtin_registry() {
    static const AspectRegistry reg = make_builtin();
    return reg;
}

}  // namespace gptscore
