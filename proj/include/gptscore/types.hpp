#pragma once

#include <stdexcept>
#include <string>

namespace gptscore {

enum class Task { Summ, MT, D2T, DiagTurn, DiagDialog };

enum class Direction { SrcToHypo, RefToHypo, HypoToRef, RefBidir, BooleanQA };

enum class Setting { VAL, IST, IDM };

enum class Strategy { SampleLevel, DatasetLevel };

// Error hierarchy; the CLI maps these onto exit codes (2/3/4).
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UsageError : Error {
    using Error::Error;
};
struct DataError : Error {
    using Error::Error;
};
struct BackendError : Error {
    using Error::Error;
};

std::string to_string(Task t);
std::string to_string(Direction d);
std::string to_string(Setting s);
std::string to_string(Strategy s);

Task task_from_string(const std::string& s);
Direction direction_from_string(const std::string& s);
Setting setting_from_string(const std::string& s);
Strategy strategy_from_string(const std::string& s);

bool is_dialogue(Task t);

}  // namespace gptscore
