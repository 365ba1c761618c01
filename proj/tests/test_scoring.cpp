#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>

#include "gptscore/backends.hpp"
#include "gptscore/rng.hpp"
#include "gptscore/scoring.hpp"

using namespace gptscore;

namespace {

std::vector<TokenScore> toks(std::initializer_list<double> lps) {
    std::vector<TokenScore> out;
    std::size_t off = 0;
    for (double lp : lps) {
        out.push_back(TokenScore{"t", lp, off});
        off += 2;
    }
    return out;
}

Dataset tiny_dataset(std::size_t n_samples, std::size_t n_outputs) {
    Dataset ds;
    ds.name = "tiny";
    ds.task = Task::Summ;
    for (std::size_t i = 0; i < n_samples; ++i) {
        GenSample s;
        s.sample_id = "s" + std::to_string(i);
        s.task = Task::Summ;
        s.source = "source number " + std::to_string(i);
        s.references = {"reference number " + std::to_string(i)};
        for (std::size_t j = 0; j < n_outputs; ++j) {
            SystemOutput o;
            o.system_id = "sys" + std::to_string(j);
            o.text = "output " + std::to_string(i) + " " + std::to_string(j);
            o.human_scores["FLU"] = static_cast<double>(i + j);
            s.outputs.push_back(o);
        }
        ds.samples.push_back(s);
    }
    return ds;
}

std::shared_ptr<Backend> fixture_backend() {
    BackendConfig cfg;
    cfg.kind = BackendKind::Fixture;
    return make_backend(cfg);
}

}  // namespace

TEST_CASE("gptscore is the arithmetic mean of token logprobs") {
    CHECK(gptscore::gptscore(toks({-0.5})) == -0.5);
    CHECK(gptscore::gptscore(toks({-1.0, -3.0})) == -2.0);
    CHECK_THROWS_AS(gptscore::gptscore({}), UsageError);
    TokenScore bad{"t", std::nan(""), 0};
    CHECK_THROWS_AS(gptscore::gptscore({bad}), DataError);
}

TEST_CASE("mean property on 1000 random token lists") {
    DetRng rng(5);
    for (int t = 0; t < 1000; ++t) {
        const std::size_t m = 1 + rng.below(40);
        std::vector<TokenScore> ts;
        double sum = 0;
        for (std::size_t i = 0; i < m; ++i) {
            double lp = -static_cast<double>(rng.below(10000)) / 1000.0;
            ts.push_back(TokenScore{"t", lp, 2 * i});
            sum += lp;
        }
        CHECK(static_cast<double>(m) * gptscore::gptscore(ts) == doctest::Approx(sum).epsilon(1e-12));
    }
}

TEST_CASE("monotone dilution: a below-mean token strictly lowers the score") {
    DetRng rng(6);
    for (int t = 0; t < 1000; ++t) {
        const std::size_t m = 1 + rng.below(20);
        std::vector<TokenScore> ts;
        for (std::size_t i = 0; i < m; ++i)
            ts.push_back(TokenScore{"t", -static_cast<double>(rng.below(5000)) / 1000.0, 2 * i});
        const double mean = gptscore::gptscore(ts);
        auto worse = ts;
        worse.push_back(TokenScore{"t", mean - 0.001 - static_cast<double>(rng.below(3)),
                                   2 * m});
        CHECK(gptscore::gptscore(worse) < mean);
    }
}

TEST_CASE("score_output averages both directions for ref<->hypo") {
    // Canned logprobs force the directional scores to -1.0 and -3.0.
    BackendConfig cfg;
    cfg.kind = BackendKind::Fixture;
    auto fb = std::make_shared<FixtureBackend>(cfg);

    GenSample s = tiny_dataset(1, 1).samples[0];
    s.task = Task::MT;
    s.references = {"rr"};
    SystemOutput o;
    o.system_id = "sys0";
    o.text = "hh";

    const auto& reg = builtin_templates();
    auto fwd = render(reg.get(Task::MT, "ACC", Direction::RefToHypo), s, o, {}, Setting::VAL);
    auto rev = render(reg.get(Task::MT, "ACC", Direction::HypoToRef), s, o, {}, Setting::VAL);

    EchoResponse fr;
    fr.tokens = {"hh"};
    fr.logprobs = {-1.0};
    fr.offsets = {fwd.prefix.size()};
    fb->add_canned(fwd.full(), fr);
    EchoResponse rr;
    rr.tokens = {"rr"};
    rr.logprobs = {-3.0};
    rr.offsets = {rev.prefix.size()};
    fb->add_canned(rev.full(), rr);

    auto rec = score_output(*fb, reg, s, o, "ACC", Direction::RefBidir, Setting::VAL, {});
    CHECK(rec.value == -2.0);
    CHECK(rec.token_count == 2);

    // Swap symmetry: exchanging ref and hypo texts leaves the value as is.
    GenSample s2 = s;
    s2.references = {o.text};
    SystemOutput o2 = o;
    o2.text = s.references[0];
    auto f2 = render(reg.get(Task::MT, "ACC", Direction::RefToHypo), s2, o2, {}, Setting::VAL);
    auto r2 = render(reg.get(Task::MT, "ACC", Direction::HypoToRef), s2, o2, {}, Setting::VAL);
    EchoResponse fr2;
    fr2.tokens = {"rr"};
    fr2.logprobs = {-3.0};
    fr2.offsets = {f2.prefix.size()};
    fb->add_canned(f2.full(), fr2);
    EchoResponse rr2;
    rr2.tokens = {"hh"};
    rr2.logprobs = {-1.0};
    rr2.offsets = {r2.prefix.size()};
    fb->add_canned(r2.full(), rr2);
    auto rec2 = score_output(*fb, reg, s2, o2, "ACC", Direction::RefBidir, Setting::VAL, {});
    CHECK(rec2.value == rec.value);

    GenSample noref = s;
    noref.references.clear();
    CHECK_THROWS_AS(
        score_output(*fb, reg, noref, o, "ACC", Direction::RefBidir, Setting::VAL, {}),
        DataError);
}

TEST_CASE("boolean-qa scoring means the answer-span logprobs") {
    BackendConfig cfg;
    cfg.kind = BackendKind::Fixture;
    auto fb = std::make_shared<FixtureBackend>(cfg);
    const auto& reg = builtin_templates();
    const auto& tpl = reg.get(Task::DiagTurn, "INT", Direction::BooleanQA);

    GenSample s;
    s.sample_id = "d1";
    s.task = Task::DiagTurn;
    s.source = "Human: hi\nAI: hello";
    SystemOutput o;
    o.system_id = "bot";
    o.text = "ok then";

    auto prompt = render_dialogue(tpl, s.source, o.text);
    REQUIRE(prompt.target == " Yes.");
    EchoResponse resp;  // " Yes." -> "Yes" and "." with chosen logprobs
    resp.tokens = {"Yes", "."};
    resp.logprobs = {-0.2, -0.4};
    resp.offsets = {prompt.prefix.size() + 1, prompt.prefix.size() + 4};
    fb->add_canned(prompt.full(), resp);

    auto rec = score_output(*fb, reg, s, o, "INT", Direction::BooleanQA, Setting::IST, {});
    CHECK(rec.value == doctest::Approx(-0.3).epsilon(1e-12));
    CHECK(rec.token_count == 2);
}

TEST_CASE("unigram scoring is invariant under prompt setting changes") {
    // The oracle is position-independent, so VAL / IST prefixes (and any
    // instruction text) must not move the score — this exercises slicing.
    BackendConfig cfg;
    cfg.kind = BackendKind::Unigram;
    cfg.unigram_corpus = "output 0 0 output 1 0 some words";
    auto b = make_backend(cfg);
    auto ds = tiny_dataset(2, 1);
    const auto& reg = builtin_templates();
    auto val = score_output(*b, reg, ds.samples[0], ds.samples[0].outputs[0], "FLU",
                            Direction::SrcToHypo, Setting::VAL, {});
    auto ist = score_output(*b, reg, ds.samples[0], ds.samples[0].outputs[0], "FLU",
                            Direction::SrcToHypo, Setting::IST, {});
    CHECK(val.value == ist.value);
    CHECK(val.token_count == ist.token_count);
}

TEST_CASE("score_dataset emits one record per (sample, output) in order") {
    auto ds = tiny_dataset(2, 3);
    auto b = fixture_backend();
    auto recs = score_dataset(*b, builtin_templates(), ds, "FLU", Direction::SrcToHypo,
                              Setting::IST, 0, 0);
    REQUIRE(recs.size() == 6);
    CHECK(recs[0].sample_id == "s0");
    CHECK(recs[0].system_id == "sys0");
    CHECK(recs[5].sample_id == "s1");
    CHECK(recs[5].system_id == "sys2");
    for (const auto& r : recs) {
        CHECK(std::isfinite(r.value));
        CHECK(r.token_count >= 1);
        CHECK(r.aspect == "FLU");
    }
}

TEST_CASE("idm with k=0 equals ist, and reruns are byte-identical") {
    auto ds = tiny_dataset(3, 2);
    auto b = fixture_backend();
    const auto& reg = builtin_templates();
    auto ist = score_dataset(*b, reg, ds, "FLU", Direction::SrcToHypo, Setting::IST, 0, 9);
    auto idm0 = score_dataset(*b, reg, ds, "FLU", Direction::SrcToHypo, Setting::IDM, 0, 9);
    REQUIRE(ist.size() == idm0.size());
    for (std::size_t i = 0; i < ist.size(); ++i) CHECK(ist[i].value == idm0[i].value);

    auto a = score_dataset(*b, reg, ds, "FLU", Direction::SrcToHypo, Setting::IDM, 2, 9);
    auto c = score_dataset(*b, reg, ds, "FLU", Direction::SrcToHypo, Setting::IDM, 2, 9);
    CHECK(save_records(a) == save_records(c));

    CHECK_THROWS_AS(score_dataset(*b, reg, ds, "FLU", Direction::SrcToHypo, Setting::IST, 2, 0),
                    UsageError);
    CHECK_THROWS_AS(score_dataset(*b, reg, ds, "FLU", Direction::SrcToHypo, Setting::IDM, 3, 0),
                    UsageError);  // needs k+1 samples
}

TEST_CASE("records round-trip through JSON-Lines") {
    auto ds = tiny_dataset(2, 2);
    auto b = fixture_backend();
    auto recs = score_dataset(*b, builtin_templates(), ds, "FLU", Direction::SrcToHypo,
                              Setting::IST, 0, 0);
    auto text = save_records(recs);
    auto back = parse_records(text);
    CHECK(save_records(back) == text);
    CHECK_THROWS_AS(parse_records("{\"sample_id\": 1}\n"), DataError);
}

TEST_CASE("join_scores groups records against human judgments") {
    auto ds = tiny_dataset(3, 2);
    auto b = fixture_backend();
    auto recs = score_dataset(*b, builtin_templates(), ds, "FLU", Direction::SrcToHypo,
                              Setting::IST, 0, 0);
    auto ps = join_scores(recs, ds, "FLU");
    REQUIRE(ps.groups.size() == 3);
    for (const auto& g : ps.groups) CHECK(g.size() == 2);
    CHECK(ps.groups[0][1].human_score == 1.0);  // i=0, j=1

    // A record that matches nothing in the dataset is an error.
    auto stray = recs;
    stray.push_back(recs[0]);
    stray.back().sample_id = "ghost";
    CHECK_THROWS_AS(join_scores(stray, ds, "FLU"), DataError);

    // Missing human score for the aspect is an error too.
    CHECK_THROWS_AS(join_scores(recs, ds, "COH"), DataError);
}
