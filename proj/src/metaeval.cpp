#include "gptscore/metaeval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include <json.hpp>

#include "gptscore/rng.hpp"

namespace gptscore {

using nlohmann::json;

std::string to_string(CorrKind k) { return k == CorrKind::Spearman ? "spearman" : "pearson"; }

CorrKind corr_kind_from_string(const std::string& s) {
    if (s == "spearman") return CorrKind::Spearman;
    if (s == "pearson") return CorrKind::Pearson;
    throw UsageError("unknown correlation kind: '" + s + "' (expected spearman|pearson)");
}

void PairedScores::validate() const {
    if (groups.empty()) throw DataError("paired scores contain no groups");
    for (std::size_t i = 0; i < groups.size(); ++i) {
        if (groups[i].empty())
            throw DataError("group " + std::to_string(i) + " is empty");
        for (const auto& p : groups[i])
            if (!std::isfinite(p.auto_score) || !std::isfinite(p.human_score))
                throw DataError("non-finite score in group " + std::to_string(i));
    }
}

namespace {

bool degenerate(const std::vector<double>& v) {
    if (v.size() < 2) return true;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] != v[0]) return false;
    return true;
}

}  // namespace

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw UsageError("pearson: length mismatch");
    const std::size_t n = x.size();
    if (n < 2) throw UsageError("pearson: need at least 2 points");
    double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        throw DataError("pearson: zero variance input");
    return sxy / std::sqrt(sxx * syy);
}

std::vector<double> fractional_ranks(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&v](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw UsageError("spearman: length mismatch");
    if (x.size() < 2) throw UsageError("spearman: need at least 2 points");
    return pearson(fractional_ranks(x), fractional_ranks(y));
}

namespace {

double correlate(CorrKind kind, const std::vector<double>& x, const std::vector<double>& y) {
    return kind == CorrKind::Spearman ? spearman(x, y) : pearson(x, y);
}

// Aggregated correlation over a selection of group indices; nullopt
// when every group (or the flattened vector) is degenerate.
std::optional<double> try_aggregate(const PairedScores& ps, const std::vector<std::size_t>& sel,
                                    CorrKind kind, Strategy strategy, std::size_t* used = nullptr,
                                    std::size_t* skipped = nullptr) {
    if (strategy == Strategy::DatasetLevel) {
        std::vector<double> xs, ys;
        for (std::size_t g : sel)
            for (const auto& p : ps.groups[g]) {
                xs.push_back(p.auto_score);
                ys.push_back(p.human_score);
            }
        if (degenerate(xs) || degenerate(ys)) return std::nullopt;
        if (used) *used = sel.size();
        return correlate(kind, xs, ys);
    }
    double sum = 0.0;
    std::size_t n_used = 0, n_skipped = 0;
    for (std::size_t g : sel) {
        std::vector<double> xs, ys;
        for (const auto& p : ps.groups[g]) {
            xs.push_back(p.auto_score);
            ys.push_back(p.human_score);
        }
        if (degenerate(xs) || degenerate(ys)) {
            ++n_skipped;
            continue;
        }
        sum += correlate(kind, xs, ys);
        ++n_used;
    }
    if (used) *used = n_used;
    if (skipped) *skipped = n_skipped;
    if (n_used == 0) return std::nullopt;
    return sum / static_cast<double>(n_used);
}

std::vector<std::size_t> all_indices(std::size_t n) {
    std::vector<std::size_t> v(n);
    std::iota(v.begin(), v.end(), 0);
    return v;
}

}  // namespace

CorrelationReport aggregate(const PairedScores& ps, CorrKind kind, Strategy strategy) {
    ps.validate();
    CorrelationReport rep;
    rep.kind = kind;
    rep.strategy = strategy;
    auto value = try_aggregate(ps, all_indices(ps.groups.size()), kind, strategy, &rep.n_used,
                               &rep.n_skipped);
    if (!value)
        throw DataError(strategy == Strategy::SampleLevel
                            ? "all groups are degenerate"
                            : "flattened score vector is degenerate");
    rep.value = *value;
    return rep;
}

SignificanceResult bootstrap_compare(const PairedScores& a, const PairedScores& b, CorrKind kind,
                                     Strategy strategy, std::size_t n_resamples, double alpha,
                                     std::uint64_t seed) {
    a.validate();
    b.validate();
    if (n_resamples < 1) throw UsageError("bootstrap requires n_resamples >= 1");
    if (a.groups.size() != b.groups.size())
        throw DataError("bootstrap: metrics cover different numbers of groups");
    for (std::size_t g = 0; g < a.groups.size(); ++g) {
        if (a.groups[g].size() != b.groups[g].size())
            throw DataError("bootstrap: group " + std::to_string(g) + " size mismatch");
        for (std::size_t j = 0; j < a.groups[g].size(); ++j)
            if (a.groups[g][j].human_score != b.groups[g][j].human_score)
                throw DataError("bootstrap: human scores differ at group " + std::to_string(g) +
                                ", pair " + std::to_string(j));
    }

    const std::size_t n = a.groups.size();
    DetRng rng(seed);
    std::size_t count = 0, done = 0;
    const std::size_t max_attempts = 10 * n_resamples;
    std::size_t attempts = 0;
    std::vector<std::size_t> sel(n);
    while (done < n_resamples) {
        if (++attempts > max_attempts)
            throw DataError("bootstrap: exceeded redraw bound (too many degenerate resamples)");
        for (std::size_t i = 0; i < n; ++i) sel[i] = static_cast<std::size_t>(rng.below(n));
        auto ca = try_aggregate(a, sel, kind, strategy);
        auto cb = try_aggregate(b, sel, kind, strategy);
        if (!ca || !cb) continue;  // degenerate resample: redraw
        if (*ca <= *cb) ++count;   // ties count toward b
        ++done;
    }

    SignificanceResult res;
    res.p_value = static_cast<double>(count) / static_cast<double>(n_resamples);
    res.n_resamples = n_resamples;
    res.alpha = alpha;
    res.significant = res.p_value < alpha;
    res.seed = seed;
    return res;
}

std::string CorrelationReport::to_json() const {
    json j;
    j["kind"] = gptscore::to_string(kind);
    j["strategy"] = gptscore::to_string(strategy);
    j["value"] = value;
    j["n_used"] = n_used;
    j["n_skipped"] = n_skipped;
    return j.dump(2);
}

std::string SignificanceResult::to_json() const {
    json j;
    j["p_value"] = p_value;
    j["n_resamples"] = n_resamples;
    j["alpha"] = alpha;
    j["significant"] = significant;
    j["seed"] = seed;
    return j.dump(2);
}

}  // namespace gptscore
