#pragma once

#include <string>
#include <vector>

#include "gptscore/backends.hpp"
#include "gptscore/datasets.hpp"
#include "gptscore/metaeval.hpp"
#include "gptscore/prompt.hpp"
#include "gptscore/types.hpp"

namespace gptscore {

/// One GPTScore value for (sample, system, aspect, direction, setting).
struct ScoreRecord {
    std::string sample_id;
    std::string system_id;
    std::string aspect;
    Direction direction = Direction::SrcToHypo;
    Setting setting = Setting::VAL;
    std::size_t k = 0;
    double value = 0.0;
    std::size_t token_count = 0;
};

/// Length-normalized mean of target-token logprobs (uniform weights
/// w_t = 1/m). The raw sum is value * token_count.
double gptscore(const std::vector<TokenScore>& tokens);

ScoreRecord score_output(Backend& backend, const TemplateRegistry& templates,
                         const GenSample& sample, const SystemOutput& output,
                         const std::string& aspect, Direction direction, Setting setting,
                         const std::vector<Demonstration>& demos);

/// Score every (sample, output) pair in dataset order. For IDM, the
/// demo pool for sample i is every other sample's first output,
/// selected with seed xor i.
std::vector<ScoreRecord> score_dataset(Backend& backend, const TemplateRegistry& templates,
                                       const Dataset& ds, const std::string& aspect,
                                       Direction direction, Setting setting, std::size_t k,
                                       std::uint64_t seed);

/// Join score records to the dataset's human judgments for `aspect`,
/// grouped by sample in dataset order. Records that match no dataset
/// entry (or an output with no human score for the aspect) are an
/// error listing the offending ids.
PairedScores join_scores(const std::vector<ScoreRecord>& records, const Dataset& ds,
                         const std::string& aspect);

std::string save_records(const std::vector<ScoreRecord>& records);
void save_records(const std::vector<ScoreRecord>& records, const std::string& path);
std::vector<ScoreRecord> load_records(const std::string& path);
std::vector<ScoreRecord> parse_records(const std::string& text);

}  // namespace gptscore
