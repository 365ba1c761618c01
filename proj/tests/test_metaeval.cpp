#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "gptscore/metaeval.hpp"
#include "gptscore/rng.hpp"

using namespace gptscore;

namespace {

// Independent brute-force Pearson: direct covariance formula, no
// shortcuts shared with the library implementation.
double oracle_pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (double v : x) mx += v;
    for (double v : y) my += v;
    mx /= n;
    my /= n;
    double cov = 0, vx = 0, vy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        cov += (x[i] - mx) * (y[i] - my);
        vx += (x[i] - mx) * (x[i] - mx);
        vy += (y[i] - my) * (y[i] - my);
    }
    return cov / std::sqrt(vx * vy);
}

// Brute-force fractional ranks via O(n^2) counting.
std::vector<double> oracle_ranks(const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::size_t less = 0, equal = 0;
        for (double w : v) {
            if (w < v[i]) ++less;
            if (w == v[i]) ++equal;
        }
        // mean of the occupied rank positions less+1 .. less+equal
        r[i] = static_cast<double>(less) + (static_cast<double>(equal) + 1.0) / 2.0;
    }
    return r;
}

double oracle_spearman(const std::vector<double>& x, const std::vector<double>& y) {
    return oracle_pearson(oracle_ranks(x), oracle_ranks(y));
}

std::vector<double> random_vector(DetRng& rng, std::size_t n, bool with_ties) {
    std::vector<double> v(n);
    for (auto& x : v)
        x = with_ties ? static_cast<double>(rng.below(5))
                      : static_cast<double>(rng.below(1u << 30)) / 1048576.0;
    return v;
}

bool degenerate(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v[0]; });
}

PairedScores grp(std::vector<std::vector<std::pair<double, double>>> groups) {
    PairedScores ps;
    for (auto& g : groups) {
        std::vector<ScorePair> out;
        for (auto [a, h] : g) out.push_back(ScorePair{a, h});
        ps.groups.push_back(std::move(out));
    }
    return ps;
}

}  // namespace

TEST_CASE("pearson hand values") {
    CHECK(pearson({1, 2, 3}, {3, 5, 7}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(pearson({1, 2, 3}, {-1, -2, -3}) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(pearson({1, 2, 3, 4}, {1, 3, 2, 4}) == doctest::Approx(0.8).epsilon(1e-12));
    CHECK_THROWS_AS(pearson({1, 1, 1}, {1, 2, 3}), DataError);
    CHECK_THROWS_AS(pearson({1}, {1}), UsageError);
    CHECK_THROWS_AS(pearson({1, 2}, {1, 2, 3}), UsageError);
}

TEST_CASE("spearman hand values") {
    CHECK(spearman({1, 2, 3}, {10, 20, 30}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(spearman({1, 2, 3}, {3, 2, 1}) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(spearman({1, 2, 3}, {2, 1, 3}) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK_THROWS_AS(spearman({2, 2, 2}, {1, 2, 3}), DataError);
}

TEST_CASE("fractional ranks with ties") {
    auto r = fractional_ranks({10, 20, 20, 30});
    REQUIRE(r.size() == 4);
    CHECK(r[0] == 1.0);
    CHECK(r[1] == 2.5);
    CHECK(r[2] == 2.5);
    CHECK(r[3] == 4.0);
}

TEST_CASE("correlations match brute-force oracle on 1000 random vectors") {
    DetRng rng(42);
    int done = 0;
    while (done < 1000) {
        const std::size_t n = 2 + rng.below(49);
        const bool ties = rng.below(2) == 0;
        auto x = random_vector(rng, n, ties);
        auto y = random_vector(rng, n, ties);
        if (degenerate(x) || degenerate(y)) continue;
        CHECK(pearson(x, y) == doctest::Approx(oracle_pearson(x, y)).epsilon(1e-12));
        if (!degenerate(fractional_ranks(x)) && !degenerate(fractional_ranks(y)))
            CHECK(spearman(x, y) == doctest::Approx(oracle_spearman(x, y)).epsilon(1e-12));
        ++done;
    }
}

TEST_CASE("spearman equals pearson of fractional ranks") {
    DetRng rng(7);
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 3 + rng.below(20);
        auto x = random_vector(rng, n, true);
        auto y = random_vector(rng, n, true);
        auto rx = fractional_ranks(x), ry = fractional_ranks(y);
        if (degenerate(rx) || degenerate(ry)) continue;
        CHECK(spearman(x, y) == doctest::Approx(pearson(rx, ry)).epsilon(1e-14));
    }
}

TEST_CASE("invariance under monotone maps and antisymmetry") {
    DetRng rng(9);
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 3 + rng.below(20);
        auto x = random_vector(rng, n, false);
        auto y = random_vector(rng, n, false);
        if (degenerate(x) || degenerate(y)) continue;
        std::vector<double> y_affine(n), y_cubed(n), y_neg(n);
        for (std::size_t i = 0; i < n; ++i) {
            y_affine[i] = 3.5 * y[i] + 11.0;
            y_cubed[i] = y[i] * y[i] * y[i];  // strictly increasing, nonlinear
            y_neg[i] = -y[i];
        }
        CHECK(pearson(x, y_affine) == doctest::Approx(pearson(x, y)).epsilon(1e-12));
        CHECK(spearman(x, y_cubed) == doctest::Approx(spearman(x, y)).epsilon(1e-12));
        CHECK(pearson(x, y_neg) == doctest::Approx(-pearson(x, y)).epsilon(1e-12));
        CHECK(spearman(x, y_neg) == doctest::Approx(-spearman(x, y)).epsilon(1e-12));
    }
}

TEST_CASE("aggregate: single group makes strategies agree") {
    DetRng rng(11);
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = 3 + rng.below(10);
        auto a = random_vector(rng, n, false);
        auto h = random_vector(rng, n, false);
        if (degenerate(a) || degenerate(h)) continue;
        PairedScores ps;
        std::vector<ScorePair> g;
        for (std::size_t i = 0; i < n; ++i) g.push_back({a[i], h[i]});
        ps.groups.push_back(g);
        for (CorrKind k : {CorrKind::Spearman, CorrKind::Pearson}) {
            auto s = aggregate(ps, k, Strategy::SampleLevel);
            auto d = aggregate(ps, k, Strategy::DatasetLevel);
            CHECK(s.value == d.value);
        }
    }
}

TEST_CASE("aggregate: opposing groups cancel at sample level") {
    auto ps = grp({{{1, 1}, {2, 2}}, {{1, 2}, {2, 1}}});
    auto rep = aggregate(ps, CorrKind::Spearman, Strategy::SampleLevel);
    CHECK(rep.value == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(rep.n_used == 2);
    CHECK(rep.n_skipped == 0);
}

TEST_CASE("aggregate: degenerate group skipped and counted") {
    auto ps = grp({{{1, 1}, {2, 2}, {3, 3}}, {{1, 5}, {2, 5}, {3, 5}}});
    auto rep = aggregate(ps, CorrKind::Spearman, Strategy::SampleLevel);
    CHECK(rep.value == doctest::Approx(1.0));
    CHECK(rep.n_used == 1);
    CHECK(rep.n_skipped == 1);
    auto all_bad = grp({{{1, 5}, {2, 5}}});
    CHECK_THROWS_AS(aggregate(all_bad, CorrKind::Spearman, Strategy::SampleLevel), DataError);
}

TEST_CASE("aggregate: identical copies of one group keep its correlation") {
    auto one = grp({{{1, 2}, {2, 1}, {3, 3}}});
    double base = aggregate(one, CorrKind::Spearman, Strategy::SampleLevel).value;
    auto five = grp({{{1, 2}, {2, 1}, {3, 3}},
                     {{1, 2}, {2, 1}, {3, 3}},
                     {{1, 2}, {2, 1}, {3, 3}},
                     {{1, 2}, {2, 1}, {3, 3}},
                     {{1, 2}, {2, 1}, {3, 3}}});
    CHECK(aggregate(five, CorrKind::Spearman, Strategy::SampleLevel).value ==
          doctest::Approx(base).epsilon(1e-14));
}

TEST_CASE("bootstrap: identical metrics are never significant") {
    DetRng rng(3);
    PairedScores a;
    for (int g = 0; g < 20; ++g) {
        std::vector<ScorePair> grp_;
        for (int j = 0; j < 4; ++j)
            grp_.push_back({static_cast<double>(rng.below(1000)),
                            static_cast<double>(rng.below(1000))});
        a.groups.push_back(grp_);
    }
    auto res = bootstrap_compare(a, a, CorrKind::Spearman, Strategy::DatasetLevel, 1000, 0.05, 1);
    CHECK(res.p_value == 1.0);  // every resample ties, and ties count toward b
    CHECK_FALSE(res.significant);
}

TEST_CASE("bootstrap: separated metrics are significant and deterministic") {
    DetRng rng(12345);
    PairedScores a, b;  // a mirrors the human scores, b is seeded noise
    for (int g = 0; g < 50; ++g) {
        std::vector<ScorePair> ga, gb;
        for (int j = 0; j < 4; ++j) {
            double h = static_cast<double>(rng.below(100000));
            ga.push_back({h, h});
            gb.push_back({static_cast<double>(rng.below(100000)), h});
        }
        a.groups.push_back(ga);
        b.groups.push_back(gb);
    }
    auto r1 = bootstrap_compare(a, b, CorrKind::Spearman, Strategy::DatasetLevel, 1000, 0.05, 0);
    auto r2 = bootstrap_compare(a, b, CorrKind::Spearman, Strategy::DatasetLevel, 1000, 0.05, 0);
    CHECK(r1.significant);
    CHECK(r1.p_value < 0.01);
    CHECK(r1.p_value == r2.p_value);  // bitwise deterministic for a fixed seed

    // Swap symmetry: p(a,b) + p(b,a) >= 1 (ties land on both sides).
    auto rs = bootstrap_compare(b, a, CorrKind::Spearman, Strategy::DatasetLevel, 1000, 0.05, 0);
    CHECK(r1.p_value + rs.p_value >= 1.0);
}

TEST_CASE("bootstrap: precondition checks") {
    auto a = grp({{{1, 1}, {2, 2}}, {{3, 3}, {4, 4}}});
    auto b = grp({{{1, 1}, {2, 2}}});
    CHECK_THROWS_AS(
        bootstrap_compare(a, b, CorrKind::Spearman, Strategy::DatasetLevel, 100, 0.05, 0),
        DataError);
    auto c = grp({{{1, 9}, {2, 8}}, {{3, 7}, {4, 6}}});  // different human values
    CHECK_THROWS_AS(
        bootstrap_compare(a, c, CorrKind::Spearman, Strategy::DatasetLevel, 100, 0.05, 0),
        DataError);
    CHECK_THROWS_AS(
        bootstrap_compare(a, a, CorrKind::Spearman, Strategy::DatasetLevel, 0, 0.05, 0),
        UsageError);
}

TEST_CASE("report and result serialization") {
    auto rep = aggregate(grp({{{1, 1}, {2, 2}, {3, 3}}}), CorrKind::Pearson,
                         Strategy::DatasetLevel);
    auto js = rep.to_json();
    CHECK(js.find("pearson") != std::string::npos);
    CHECK(js.find("dataset") != std::string::npos);
}
