#include "gptscore/types.hpp"

namespace gptscore {

std::string to_string(Task t) {
    switch (t) {
        case Task::Summ: return "Summ";
        case Task::MT: return "MT";
        case Task::D2T: return "D2T";
        case Task::DiagTurn: return "DiagTurn";
        case Task::DiagDialog: return "DiagDialog";
    }
    return "?";
}

std::string to_string(Direction d) {
    switch (d) {
        case Direction::SrcToHypo: return "src->hypo";
        case Direction::RefToHypo: return "ref->hypo";
        case Direction::HypoToRef: return "hypo->ref";
        case Direction::RefBidir: return "ref<->hypo";
        case Direction::BooleanQA: return "boolean-qa";
    }
    return "?";
}

std::string to_string(Setting s) {
    switch (s) {
        case Setting::VAL: return "val";
        case Setting::IST: return "ist";
        case Setting::IDM: return "idm";
    }
    return "?";
}

std::string to_string(Strategy s) {
    return s == Strategy::SampleLevel ? "sample" : "dataset";
}

Task task_from_string(const std::string& s) {
    if (s == "Summ") return Task::Summ;
    if (s == "MT") return Task::MT;
    if (s == "D2T") return Task::D2T;
    if (s == "DiagTurn") return Task::DiagTurn;
    if (s == "DiagDialog") return Task::DiagDialog;
    throw DataError("unknown task kind: '" + s + "'");
}

Direction direction_from_string(const std::string& s) {
    if (s == "src->hypo") return Direction::SrcToHypo;
    if (s == "ref->hypo") return Direction::RefToHypo;
    if (s == "hypo->ref") return Direction::HypoToRef;
    if (s == "ref<->hypo") return Direction::RefBidir;
    if (s == "boolean-qa") return Direction::BooleanQA;
    throw DataError("unknown direction: '" + s + "'");
}

Setting setting_from_string(const std::string& s) {
    if (s == "val") return Setting::VAL;
    if (s == "ist") return Setting::IST;
    if (s == "idm") return Setting::IDM;
    throw UsageError("unknown setting: '" + s + "' (expected val|ist|idm)");
}

Strategy strategy_from_string(const std::string& s) {
    if (s == "sample") return Strategy::SampleLevel;
    if (s == "dataset") return Strategy::DatasetLevel;
    throw UsageError("unknown strategy: '" + s + "' (expected sample|dataset)");
}

bool is_dialogue(Task t) {
    return t == Task::DiagTurn || t == Task::DiagDialog;
}

}  // namespace gptscore
