#pragma once

#include <string>

namespace gptscore {

struct RougeScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Clipped n-gram overlap over lowercased whitespace tokens (n = 1 or 2).
RougeScore rouge_n(const std::string& hypo, const std::string& ref, int n);

/// Longest-common-subsequence precision/recall/F over tokens.
RougeScore rouge_l(const std::string& hypo, const std::string& ref);

}  // namespace gptscore
