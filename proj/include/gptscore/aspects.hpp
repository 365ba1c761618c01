#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "gptscore/types.hpp"

namespace gptscore {

/// A named evaluation aspect with its natural-language definition.
struct AspectSpec {
    std::string key;             // short uppercase identifier, e.g. "FLU"
    std::string name;            // full name, e.g. "Fluency"
    std::string definition;      // natural-language question/statement
    std::string adjective_form;  // used when composing definitions
    std::set<Task> tasks;        // task kinds where the aspect applies
    // Task-dependent definition variants; these win over `definition`
    // for matching tasks.
    std::map<Task, std::string> per_task_definitions;

    void validate() const;
    std::string definition_for(Task t) const;
};

/// Target aspect plus extra aspects merged into one definition.
struct AspectChain {
    std::string target;
    std::vector<std::string> extras;
    std::string composed_definition;
};

class AspectRegistry {
public:
    void add(AspectSpec spec);
    void add_override(const std::string& target, const std::vector<std::string>& extras,
                      const std::string& text);

    const AspectSpec& lookup(const std::string& key) const;
    bool contains(const std::string& key) const;
    std::vector<std::string> keys() const;  // insertion order
    std::size_t size() const { return order_.size(); }

    /// Merge the definitions of `extras` into `target`'s definition.
    /// Shipped override text wins; otherwise a mechanical template
    /// ("Is this a/an X response that is Y, Z, and W?") is used.
    std::string compose_definition(const std::string& target,
                                   const std::vector<std::string>& extras) const;

    /// True when an override entry covers exactly this chain.
    bool has_override(const std::string& target, const std::vector<std::string>& extras) const;

    std::string to_json() const;
    static AspectRegistry from_json(const std::string& text);

private:
    std::map<std::string, AspectSpec> specs_;
    std::vector<std::string> order_;
    // override key: target + '\x1f' + extras joined by '\x1f'
    std::map<std::string, std::string> overrides_;
    // order-insensitive fallback: target + sorted extras set
    std::map<std::string, std::string> overrides_by_set_;

    static std::string seq_key(const std::string& target, const std::vector<std::string>& extras);
    static std::string set_key(const std::string& target, const std::vector<std::string>& extras);
};

/// All aspects studied in this project, with composition overrides.
const AspectRegistry& builtin_registry();

}  // namespace gptscore
