#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gptscore/types.hpp"

namespace gptscore {

enum class CorrKind { Spearman, Pearson };

std::string to_string(CorrKind k);
CorrKind corr_kind_from_string(const std::string& s);

/// Paired (automatic, human) scores grouped by sample: groups[i][j] is
/// system j's pair for sample i.
struct ScorePair {
    double auto_score = 0.0;
    double human_score = 0.0;
};

struct PairedScores {
    std::vector<std::vector<ScorePair>> groups;

    void validate() const;
};

struct CorrelationReport {
    CorrKind kind = CorrKind::Spearman;
    Strategy strategy = Strategy::SampleLevel;
    double value = 0.0;
    std::size_t n_used = 0;
    std::size_t n_skipped = 0;

    std::string to_json() const;
};

struct SignificanceResult {
    double p_value = 1.0;
    std::size_t n_resamples = 0;
    double alpha = 0.05;
    bool significant = false;
    std::uint64_t seed = 0;

    std::string to_json() const;
};

/// Product-moment correlation of raw values.
double pearson(const std::vector<double>& x, const std::vector<double>& y);

/// Pearson over fractional (average) ranks; ties get the mean of the
/// rank positions they occupy.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

/// Fractional ranks of v (1-based, average over ties).
std::vector<double> fractional_ranks(const std::vector<double>& v);

/// Sample-level: mean of per-group correlations, skipping degenerate
/// groups. Dataset-level: one correlation over the flattened pairs.
CorrelationReport aggregate(const PairedScores& ps, CorrKind kind, Strategy strategy);

/// Paired bootstrap over group indices: same resample for both
/// metrics, one-sided p = P(corr_a <= corr_b). Significant when
/// p < alpha, i.e. metric a beats metric b more often than chance
/// allows. Degenerate resamples are redrawn (bounded).
SignificanceResult bootstrap_compare(const PairedScores& a, const PairedScores& b, CorrKind kind,
                                     Strategy strategy, std::size_t n_resamples, double alpha,
                                     std::uint64_t seed);

}  // namespace gptscore
