#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gptscore/aspects.hpp"

using namespace gptscore;

TEST_CASE("builtin registry lookups") {
    const auto& reg = builtin_registry();
    CHECK(reg.size() == 22);
    CHECK(reg.lookup("FLU").definition == "Is the generated text well-written and grammatical?");
    CHECK(reg.lookup("COV").tasks == std::set<Task>{Task::Summ});
    CHECK(reg.lookup("FLU").tasks ==
          std::set<Task>{Task::DiagTurn, Task::DiagDialog, Task::Summ, Task::D2T, Task::MT});
    CHECK(reg.lookup("MQM").definition == "How is the overall quality of the generated text?");
    CHECK_THROWS_AS(reg.lookup("ZZZ"), DataError);
    CHECK(reg.contains("INT"));
    CHECK_FALSE(reg.contains("ZZZ"));
}

TEST_CASE("empty extras fall back to the target definition") {
    const auto& reg = builtin_registry();
    CHECK(reg.compose_definition("FLU", {}) == reg.lookup("FLU").definition);
    CHECK(reg.compose_definition("COH", {}) == reg.lookup("COH").definition);
}

TEST_CASE("shipped composition chain for INT, byte-exact") {
    const auto& reg = builtin_registry();
    CHECK(reg.compose_definition("INT", {}) ==
          "Is this response interesting to the convsersation?");
    CHECK(reg.compose_definition("INT", {"ENG"}) ==
          "Is this an interesting response that is engaging?");
    CHECK(reg.compose_definition("INT", {"SPE", "ENG"}) ==
          "Is this an interesting response that is specific and engaging?");
    CHECK(reg.compose_definition("INT", {"ENG", "SPE", "COR"}) ==
          "Is this an interesting response that is engaging, specific, and correct?");
    CHECK(reg.compose_definition("INT", {"SPE", "ENG", "REL", "COR"}) ==
          "Is this an interesting response that is specific, engaging, relevant, and correct?");
    CHECK(reg.compose_definition("INT", {"SPE", "ENG", "REL", "COR", "UND"}) ==
          "Is this an interesting response that is specific, engaging, relevant, correct, and "
          "understandable?");
    CHECK(reg.compose_definition("INT", {"SPE", "ENG", "REL", "COR", "UND", "SEM"}) ==
          "Is this an interesting response that is specific, engaging, relevant, correct, "
          "understandable, and semantically appropriate?");
    CHECK(reg.compose_definition("INT", {"SPE", "ENG", "REL", "COR", "UND", "SEM", "FLU"}) ==
          "Is this an interesting response that is specific, engaging, relevant, correct, "
          "understandable, semantically appropriate, and fluent?");
}

TEST_CASE("override lookup is order-insensitive on the extras set") {
    const auto& reg = builtin_registry();
    CHECK(reg.has_override("INT", {"SPE", "ENG"}));
    CHECK_FALSE(reg.has_override("INT", {"ENG", "SPE"}));  // exact-sequence check
    // ...but composition still finds the shipped text for the same set.
    CHECK(reg.compose_definition("INT", {"ENG", "SPE"}) ==
          "Is this an interesting response that is specific and engaging?");
}

TEST_CASE("mechanical fallback: article and Oxford comma") {
    const auto& reg = builtin_registry();
    // One adjective, vowel-initial target -> "an".
    CHECK(reg.compose_definition("INT", {"UND"}) ==
          "Is this an interesting response that is understandable?");
    // Consonant-initial target, two adjectives.
    CHECK(reg.compose_definition("COH", {"FLU", "REL"}) ==
          "Is this a coherent response that is fluent and relevant?");
    // Three adjectives use the serial comma.
    CHECK(reg.compose_definition("ENG", {"FLU", "UND", "REL"}) ==
          "Is this an engaging response that is fluent, understandable, and relevant?");
}

TEST_CASE("composition rejects bad chains") {
    const auto& reg = builtin_registry();
    CHECK_THROWS_AS(reg.compose_definition("INT", {"INT"}), DataError);       // target repeated
    CHECK_THROWS_AS(reg.compose_definition("INT", {"ENG", "ENG"}), DataError);  // duplicate
    CHECK_THROWS_AS(reg.compose_definition("INT", {"ZZZ"}), DataError);       // unknown key
    CHECK_THROWS_AS(reg.compose_definition("COV", {"ACC"}), DataError);       // no shared task
}

TEST_CASE("registry round-trips through JSON byte-equal") {
    const auto& reg = builtin_registry();
    auto clone = AspectRegistry::from_json(reg.to_json());
    CHECK(clone.size() == reg.size());
    CHECK(clone.keys() == reg.keys());
    for (const auto& key : reg.keys()) {
        CHECK(clone.lookup(key).definition == reg.lookup(key).definition);
        CHECK(clone.lookup(key).name == reg.lookup(key).name);
        CHECK(clone.lookup(key).adjective_form == reg.lookup(key).adjective_form);
        CHECK(clone.lookup(key).tasks == reg.lookup(key).tasks);
    }
    // Overrides survive the round trip.
    CHECK(clone.compose_definition("INT", {"SPE", "ENG"}) ==
          reg.compose_definition("INT", {"SPE", "ENG"}));
    CHECK(clone.compose_definition("INT", {}) == reg.compose_definition("INT", {}));
}

TEST_CASE("spec validation") {
    AspectSpec bad;
    bad.key = "lower";
    bad.definition = "x?";
    bad.tasks = {Task::Summ};
    CHECK_THROWS_AS(bad.validate(), DataError);
    bad.key = "OK";
    bad.definition = "no terminator";
    CHECK_THROWS_AS(bad.validate(), DataError);
}
