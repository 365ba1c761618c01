#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gptscore/types.hpp"

namespace gptscore {

/// One system's hypothesis for a sample, with its human judgments.
struct SystemOutput {
    std::string system_id;
    std::string text;
    std::map<std::string, double> human_scores;  // aspect key -> score
};

struct GenSample {
    std::string sample_id;
    Task task = Task::Summ;
    std::string source;
    std::vector<std::string> references;
    std::vector<SystemOutput> outputs;
};

struct Dataset {
    std::string name;
    Task task = Task::Summ;
    std::vector<GenSample> samples;
    Direction default_direction = Direction::SrcToHypo;
    Strategy default_strategy = Strategy::SampleLevel;

    const GenSample* find(const std::string& sample_id) const;
};

/// Load a JSON-Lines dataset (one GenSample object per line) and
/// validate it against `schema`. Malformed lines are reported with
/// their line number.
Dataset load_dataset(const std::string& path, Task schema);

/// Parse from an in-memory JSON-Lines string (same contract as load).
Dataset parse_dataset(const std::string& text, Task schema, const std::string& name);

/// Canonical JSON-Lines serialization; load(save(ds)) is the identity.
std::string save_dataset(const Dataset& ds);
void save_dataset(const Dataset& ds, const std::string& path);

/// Deterministic sub-dataset of n samples. Samples carrying human
/// scores for all of `required_aspects` (on every output) are taken
/// before random fill from the rest.
Dataset subsample(const Dataset& ds, std::size_t n, std::uint64_t seed,
                  const std::vector<std::string>& required_aspects = {});

/// Scoring-direction default per task family.
Direction default_direction_for(Task t);
Strategy default_strategy_for(Task t);

}  // namespace gptscore
