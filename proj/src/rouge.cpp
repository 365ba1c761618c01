#include "gptscore/rouge.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <vector>

#include "gptscore/backends.hpp"
#include "gptscore/types.hpp"

namespace gptscore {

namespace {

// Lowercase + whitespace split, no stemming.
std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> out;
    for (const auto& [tok, off] : whitespace_tokenize(text)) {
        std::string low = tok;
        std::transform(low.begin(), low.end(), low.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        out.push_back(std::move(low));
    }
    return out;
}

std::map<std::string, std::size_t> ngram_counts(const std::vector<std::string>& toks, int n) {
    std::map<std::string, std::size_t> counts;
    if (toks.size() < static_cast<std::size_t>(n)) return counts;
    for (std::size_t i = 0; i + n <= toks.size(); ++i) {
        std::string key = toks[i];
        for (int k = 1; k < n; ++k) key += ' ' + toks[i + k];
        ++counts[key];
    }
    return counts;
}

RougeScore prf(double overlap, double hypo_total, double ref_total) {
    RougeScore s;
    s.precision = hypo_total > 0 ? overlap / hypo_total : 0.0;
    s.recall = ref_total > 0 ? overlap / ref_total : 0.0;
    s.f1 = (s.precision + s.recall) > 0
               ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
               : 0.0;
    return s;
}

}  // namespace

RougeScore rouge_n(const std::string& hypo, const std::string& ref, int n) {
    if (n != 1 && n != 2) throw UsageError("rouge_n supports n = 1 or 2");
    auto hc = ngram_counts(tokenize(hypo), n);
    auto rc = ngram_counts(tokenize(ref), n);
    double overlap = 0.0, ht = 0.0, rt = 0.0;
    for (const auto& [g, c] : hc) {
        ht += static_cast<double>(c);
        auto it = rc.find(g);
        if (it != rc.end()) overlap += static_cast<double>(std::min(c, it->second));
    }
    for (const auto& [g, c] : rc) rt += static_cast<double>(c);
    return prf(overlap, ht, rt);
}

RougeScore rouge_l(const std::string& hypo, const std::string& ref) {
    auto h = tokenize(hypo);
    auto r = tokenize(ref);
    if (h.empty() || r.empty()) return RougeScore{};
    // Standard O(|h|*|r|) LCS table, rolling rows.
    std::vector<std::size_t> prev(r.size() + 1, 0), cur(r.size() + 1, 0);
    for (std::size_t i = 1; i <= h.size(); ++i) {
        for (std::size_t j = 1; j <= r.size(); ++j)
            cur[j] = h[i - 1] == r[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        std::swap(prev, cur);
    }
    const double lcs = static_cast<double>(prev[r.size()]);
    return prf(lcs, static_cast<double>(h.size()), static_cast<double>(r.size()));
}

}  // namespace gptscore
