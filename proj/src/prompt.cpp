#include "gptscore/prompt.hpp"

#include <algorithm>
#include <numeric>

#include <json.hpp>

#include "gptscore/rng.hpp"

namespace gptscore {

using nlohmann::json;

std::string PromptTemplate::id() const {
    return to_string(task) + "/" + aspect + "/" + to_string(direction);
}

namespace {

struct FrameSegment {
    bool is_placeholder = false;
    std::string text;  // literal text, or the placeholder name
};

// Single pass over the frame; anything of the form {name} is treated
// as a placeholder.
std::vector<FrameSegment> split_frame(const std::string& frame) {
    std::vector<FrameSegment> segs;
    std::string literal;
    std::size_t i = 0;
    while (i < frame.size()) {
        if (frame[i] == '{') {
            std::size_t close = frame.find('}', i + 1);
            if (close != std::string::npos) {
                if (!literal.empty()) {
                    segs.push_back({false, literal});
                    literal.clear();
                }
                segs.push_back({true, frame.substr(i + 1, close - i - 1)});
                i = close + 1;
                continue;
            }
        }
        literal += frame[i++];
    }
    if (!literal.empty()) segs.push_back({false, literal});
    return segs;
}

std::string instantiate(const std::vector<FrameSegment>& segs,
                        const std::map<std::string, std::string>& bindings,
                        const std::string& context) {
    std::string out;
    for (const auto& seg : segs) {
        if (!seg.is_placeholder) {
            out += seg.text;
            continue;
        }
        auto it = bindings.find(seg.text);
        if (it == bindings.end())
            throw DataError("missing value for placeholder {" + seg.text + "} in " + context);
        out += it->second;
    }
    return out;
}

}  // namespace

RenderedPrompt render_with_bindings(const PromptTemplate& tpl,
                                    const std::map<std::string, std::string>& bindings,
                                    const std::vector<Demonstration>& demos, Setting setting) {
    auto segs = split_frame(tpl.frame);

    std::size_t marker_count = 0;
    for (const auto& s : segs)
        if (s.is_placeholder && s.text == tpl.target_marker) ++marker_count;
    if (marker_count != 1)
        throw DataError("frame of template " + tpl.id() + " must contain {" + tpl.target_marker +
                        "} exactly once");

    if (setting != Setting::IDM && !demos.empty())
        throw UsageError("demonstrations require the idm setting");

    std::vector<std::string> parts;
    const std::string instruction = setting == Setting::VAL ? std::string{} : tpl.instruction;
    if (!instruction.empty()) parts.push_back(instruction);
    for (std::size_t d = 0; d < demos.size(); ++d)
        parts.push_back(instantiate(segs, demos[d].bindings,
                                    "demonstration " + std::to_string(d + 1) + " of template " +
                                        tpl.id()));

    // Evaluated frame, instantiated up to (but excluding) the target.
    std::string head;
    for (const auto& seg : segs) {
        if (seg.is_placeholder && seg.text == tpl.target_marker) break;
        if (!seg.is_placeholder) {
            head += seg.text;
            continue;
        }
        auto it = bindings.find(seg.text);
        if (it == bindings.end())
            throw DataError("missing value for placeholder {" + seg.text + "} in template " +
                            tpl.id());
        head += it->second;
    }
    parts.push_back(head);

    auto it = bindings.find(tpl.target_marker);
    if (it == bindings.end() || it->second.empty())
        throw DataError("empty target value for {" + tpl.target_marker + "} in template " +
                        tpl.id());

    RenderedPrompt out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out.prefix += kPromptSep;
        out.prefix += parts[i];
    }
    out.target = it->second;
    out.template_id = tpl.id();
    out.k = demos.size();
    out.setting = setting;
    return out;
}

std::map<std::string, std::string> bindings_for(const GenSample& sample,
                                                const SystemOutput& output) {
    std::map<std::string, std::string> b;
    b["src"] = sample.source;
    b["hypo"] = output.text;
    // First-reference policy for multi-reference samples.
    if (!sample.references.empty()) b["ref"] = sample.references.front();
    if (is_dialogue(sample.task)) {
        b["History"] = sample.task == Task::DiagTurn ? sample.source + "\n" + output.text
                                                     : sample.source;
        b["Answer"] = kYesTarget;
    }
    return b;
}

RenderedPrompt render(const PromptTemplate& tpl, const GenSample& sample,
                      const SystemOutput& output, const std::vector<Demonstration>& demos,
                      Setting setting) {
    return render_with_bindings(tpl, bindings_for(sample, output), demos, setting);
}

RenderedPrompt render_dialogue(const PromptTemplate& tpl, const std::string& history,
                               const std::string& response) {
    if (tpl.direction != Direction::BooleanQA || !is_dialogue(tpl.task))
        throw UsageError("render_dialogue requires a boolean-qa dialogue template, got " +
                         tpl.id());
    std::map<std::string, std::string> b;
    b["History"] = tpl.task == Task::DiagTurn ? history + "\n" + response : history;
    b["Answer"] = kYesTarget;
    return render_with_bindings(tpl, b, {}, Setting::IST);
}

std::vector<Demonstration> select_demos(const std::vector<Demonstration>& pool, std::size_t k,
                                        std::uint64_t seed) {
    if (k > pool.size())
        throw UsageError("requested " + std::to_string(k) + " demonstrations from a pool of " +
                         std::to_string(pool.size()));
    std::vector<std::size_t> idx(pool.size());
    std::iota(idx.begin(), idx.end(), 0);
    DetRng rng(seed);
    std::vector<Demonstration> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng.below(idx.size() - i));
        std::swap(idx[i], idx[j]);
        out.push_back(pool[idx[i]]);
    }
    return out;
}

void TemplateRegistry::add(PromptTemplate tpl) {
    std::string key = tpl.id();
    if (by_id_.count(key)) throw DataError("duplicate template " + key);
    order_.push_back(key);
    by_id_.emplace(std::move(key), std::move(tpl));
}

bool TemplateRegistry::contains(Task task, const std::string& aspect, Direction dir) const {
    PromptTemplate probe;
    probe.task = task;
    probe.aspect = aspect;
    probe.direction = dir;
    return by_id_.count(probe.id()) > 0;
}

const PromptTemplate& TemplateRegistry::get(Task task, const std::string& aspect,
                                            Direction dir) const {
    PromptTemplate probe;
    probe.task = task;
    probe.aspect = aspect;
    probe.direction = dir;
    auto it = by_id_.find(probe.id());
    if (it == by_id_.end())
        throw DataError("no template for " + probe.id());
    return it->second;
}

std::vector<const PromptTemplate*> TemplateRegistry::all() const {
    std::vector<const PromptTemplate*> out;
    out.reserve(order_.size());
    for (const auto& k : order_) out.push_back(&by_id_.at(k));
    return out;
}

std::string TemplateRegistry::to_json() const {
    json arr = json::array();
    for (const auto* t : all()) {
        json j;
        j["task"] = to_string(t->task);
        j["aspect"] = t->aspect;
        j["direction"] = to_string(t->direction);
        j["instruction"] = t->instruction;
        j["frame"] = t->frame;
        j["target_marker"] = t->target_marker;
        arr.push_back(j);
    }
    return arr.dump(2);
}

TemplateRegistry TemplateRegistry::from_json(const std::string& text) {
    TemplateRegistry reg;
    for (const auto& j : json::parse(text)) {
        PromptTemplate t;
        t.task = task_from_string(j.at("task").get<std::string>());
        t.aspect = j.at("aspect").get<std::string>();
        t.direction = direction_from_string(j.at("direction").get<std::string>());
        t.instruction = j.at("instruction").get<std::string>();
        t.frame = j.at("frame").get<std::string>();
        t.target_marker = j.at("target_marker").get<std::string>();
        reg.add(std::move(t));
    }
    return reg;
}

namespace {

constexpr const char* kSummFrame = "{src} Tl;dr {hypo}";
constexpr const char* kParaFwd = "{ref} In other words, {hypo}";
constexpr const char* kParaRev = "{hypo} In other words, {ref}";

void add_src_hypo(TemplateRegistry& reg, Task task, const std::string& aspect,
                  const std::string& instruction) {
    PromptTemplate t;
    t.task = task;
    t.aspect = aspect;
    t.direction = Direction::SrcToHypo;
    t.instruction = instruction;
    t.frame = kSummFrame;
    t.target_marker = "hypo";
    reg.add(std::move(t));
}

void add_paraphrase(TemplateRegistry& reg, Task task, const std::string& aspect,
                    const std::string& instruction) {
    // One ref<->hypo row yields three entries: the bidirectional handle
    // plus both concrete directions it averages over.
    PromptTemplate bidir;
    bidir.task = task;
    bidir.aspect = aspect;
    bidir.direction = Direction::RefBidir;
    bidir.instruction = instruction;
    bidir.frame = kParaFwd;
    bidir.target_marker = "hypo";
    reg.add(bidir);

    PromptTemplate fwd = bidir;
    fwd.direction = Direction::RefToHypo;
    reg.add(fwd);

    PromptTemplate rev = bidir;
    rev.direction = Direction::HypoToRef;
    rev.frame = kParaRev;
    rev.target_marker = "ref";
    reg.add(rev);
}

void add_boolean_qa(TemplateRegistry& reg, Task task, const std::string& aspect,
                    const std::string& question) {
    PromptTemplate t;
    t.task = task;
    t.aspect = aspect;
    t.direction = Direction::BooleanQA;
    t.frame = "Answer the question based on the conversation between a human and AI.\nQuestion: " +
              question + " (a) Yes. (b) No.\nConversation: {History}\nAnswer:{Answer}";
    t.target_marker = "Answer";
    reg.add(std::move(t));
}

TemplateRegistry make_builtin() {
    TemplateRegistry r;

    // Text summarization, src->hypo.
    add_src_hypo(r, Task::Summ, "FAC",
                 "Generate a summary with consistent facts for the following text:");
    add_src_hypo(r, Task::Summ, "COV",
                 "Generate a summary with as much semantic coverage as possible for the "
                 "following text:");
    add_src_hypo(r, Task::Summ, "CON",
                 "Generate factually consistent summary for the following text:");
    add_src_hypo(r, Task::Summ, "INF",
                 "Generate an informative summary that captures the key points of the "
                 "following text:");
    add_src_hypo(r, Task::Summ, "COH", "Generate a coherent summary for the following text:");
    add_src_hypo(r, Task::Summ, "REL",
                 "Generate a relevant summary with consistent details for the following text:");
    add_src_hypo(r, Task::Summ, "FLU",
                 "Generate a fluent and grammatical summary for the following text:");

    // Text summarization, ref<->hypo.
    add_paraphrase(r, Task::Summ, "FAC", "Rewrite the following text with consistent facts.");
    add_paraphrase(r, Task::Summ, "COV", "Rewrite the following text with the same semantics.");
    add_paraphrase(r, Task::Summ, "CON", "Rewrite the following text with consistent facts.");
    add_paraphrase(r, Task::Summ, "INF", "Rewrite the following text with its core information.");
    add_paraphrase(r, Task::Summ, "COH", "Rewrite the following text into a coherent text.");
    add_paraphrase(r, Task::Summ, "REL", "Rewrite the following text with consistent details.");
    add_paraphrase(r, Task::Summ, "FLU",
                   "Rewrite the following text into a fluent and grammatical text.");

    // Machine translation, treated as paraphrasing.
    add_paraphrase(r, Task::MT, "ACC",
                   "Rewrite the following text with its core information and consistent facts:");
    add_paraphrase(r, Task::MT, "FLU",
                   "Rewrite the following text to make it more grammatical and well-written:");
    add_paraphrase(r, Task::MT, "MQM",
                   "Rewrite the following text into high-quality text with its core "
                   "information:");

    // Data-to-text.
    add_paraphrase(r, Task::D2T, "INF",
                   "Convert the following text to another expression that preserves key "
                   "information:");
    add_paraphrase(r, Task::D2T, "NAT",
                   "Convert the following text into another expression that is human-like and "
                   "natural:");
    add_paraphrase(r, Task::D2T, "FLU",
                   "Convert the following text into another expression that preserves key "
                   "information and is human-like and natural:");

    // Dialogue, turn level.
    add_boolean_qa(r, Task::DiagTurn, "INT", "Are the responses of AI interesting?");
    add_boolean_qa(r, Task::DiagTurn, "ENG", "Are the responses of AI engaging?");
    add_boolean_qa(r, Task::DiagTurn, "UND", "Are the responses of AI understandable?");
    add_boolean_qa(r, Task::DiagTurn, "REL",
                   "Are the responses of AI relevant to the conversation?");
    add_boolean_qa(r, Task::DiagTurn, "SPE",
                   "Are the responses of AI generic or specific to the conversation?");
    add_boolean_qa(r, Task::DiagTurn, "COR", "Are the responses of AI correct to conversations?");
    add_boolean_qa(r, Task::DiagTurn, "SEM", "Are the responses of AI semantically appropriate?");
    add_boolean_qa(r, Task::DiagTurn, "FLU", "Are the responses of AI fluently written?");

    // Dialogue, dialogue level.
    add_boolean_qa(r, Task::DiagDialog, "COH",
                   "Is the AI coherent and maintains a good conversation flow throughout the "
                   "conversation?");
    add_boolean_qa(r, Task::DiagDialog, "DIV", "Is there diversity in the AI responses?");
    add_boolean_qa(r, Task::DiagDialog, "FLE",
                   "Is the AI flexible and adaptable to human and their interests?");
    add_boolean_qa(r, Task::DiagDialog, "UND", "Does the AI seem to understand the human?");
    add_boolean_qa(r, Task::DiagDialog, "INQ",
                   "Is the AI inquisitive throughout the conversation?");
    add_boolean_qa(r, Task::DiagDialog, "CON",
                   "Are the responses of AI consistent in the information it provides "
                   "throughout the conversation?");
    add_boolean_qa(r, Task::DiagDialog, "INF",
                   "Are the responses of AI informative throughout the conversation?");
    add_boolean_qa(r, Task::DiagDialog, "LIK", "Does the AI display a likeable personality?");
    add_boolean_qa(r, Task::DiagDialog, "DEP", "Does the AI discuss topics in depth?");
    add_boolean_qa(r, Task::DiagDialog, "ERR",
                   "Is the AI able to recover from errors that it makes?");

    return r;
}

}  // namespace

const TemplateRegistry& builtin_templates() {
    static const TemplateRegistry reg = make_builtin();
    return reg;
}

}  // namespace gptscore
