#pragma once

#include <map>
#include <string>
#include <vector>

#include "gptscore/datasets.hpp"
#include "gptscore/types.hpp"

namespace gptscore {

/// Prompt template for one (task, aspect, direction). `frame` holds
/// placeholders like {src}, {ref}, {hypo}, {History}; exactly one of
/// them (`target_marker`) is the scored span.
struct PromptTemplate {
    Task task = Task::Summ;
    std::string aspect;
    Direction direction = Direction::SrcToHypo;
    std::string instruction;  // empty in the VAL setting
    std::string frame;
    std::string target_marker;

    std::string id() const;
};

/// One exemplar instantiation of a frame; must bind every placeholder
/// the frame uses, including the target marker.
struct Demonstration {
    std::map<std::string, std::string> bindings;
};

struct RenderedPrompt {
    std::string prefix;
    std::string target;  // full prompt = prefix ++ target, byte-wise
    std::string template_id;
    std::size_t k = 0;
    Setting setting = Setting::VAL;

    std::string full() const { return prefix + target; }
};

/// Separator between instruction, demonstrations, and the evaluated
/// frame. Frozen by the golden-file suite.
inline constexpr const char* kPromptSep = "\n\n";

/// Fixed continuation scored by boolean-QA dialogue prompts.
inline constexpr const char* kYesTarget = " Yes.";

/// Instantiate `tpl` with explicit placeholder bindings. Substitution
/// is single-pass over the frame: placeholder-like text inside binding
/// values is left alone.
RenderedPrompt render_with_bindings(const PromptTemplate& tpl,
                                    const std::map<std::string, std::string>& bindings,
                                    const std::vector<Demonstration>& demos, Setting setting);

/// Render for one dataset sample/output pair.
RenderedPrompt render(const PromptTemplate& tpl, const GenSample& sample,
                      const SystemOutput& output, const std::vector<Demonstration>& demos,
                      Setting setting);

/// Boolean-QA dialogue rendering; target is always " Yes.". For
/// turn-level tasks the response is appended to the history as the
/// final turn; dialogue-level history already holds the full dialogue.
RenderedPrompt render_dialogue(const PromptTemplate& tpl, const std::string& history,
                               const std::string& response);

/// Deterministic uniform draw of k demonstrations without replacement;
/// selection order is preserved in the result.
std::vector<Demonstration> select_demos(const std::vector<Demonstration>& pool, std::size_t k,
                                        std::uint64_t seed);

/// Placeholder bindings a sample/output pair provides.
std::map<std::string, std::string> bindings_for(const GenSample& sample,
                                                const SystemOutput& output);

class TemplateRegistry {
public:
    void add(PromptTemplate tpl);
    const PromptTemplate& get(Task task, const std::string& aspect, Direction dir) const;
    bool contains(Task task, const std::string& aspect, Direction dir) const;
    std::vector<const PromptTemplate*> all() const;  // insertion order

    std::string to_json() const;
    static TemplateRegistry from_json(const std::string& text);

private:
    std::map<std::string, PromptTemplate> by_id_;
    std::vector<std::string> order_;
};

/// Every instruction row shipped with the project: summarization
/// src->hypo and ref<->hypo, MT and D2T paraphrase rows, and the
/// boolean-QA dialogue questions at turn and dialogue level.
const TemplateRegistry& builtin_templates();

}  // namespace gptscore
