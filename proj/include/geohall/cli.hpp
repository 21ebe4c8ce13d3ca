#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace geohall::cli {

// Every knob of a CLI invocation. A JSON config file (--config) uses these
// field names as keys; precedence is flags > config file > defaults.
struct RunConfig {
    std::string subcommand;

    std::vector<std::string> domains{"math", "history", "counting", "all"};
    std::vector<std::string> types{"incorrectness", "confidence", "irrelevance", "incoherence", "incompleteness"};
    std::vector<int> levels{1, 2, 3};
    std::uint64_t seed = 0;
    bool perturb = false;
    std::vector<std::int64_t> offsets{-5, -2, -1, 1, 2, 5};
    std::string history_table;

    std::string manifest;
    std::string traces;
    std::string stats;
    std::string out;
    std::string in;

    int layers = 8;
    int dim = 32;
    int heads = 4;
    std::vector<std::string> effects;
    std::vector<std::string> domain_scales;  // "math=1.0"
    double answer_gain = 0.1;
    std::string payload = "hidden";
    std::string dtype = "f32";

    std::vector<std::string> statistics{"HS", "ME", "AS"};
    std::string span = "full";
    bool normalized = false;
    bool baseline_relative = false;
    std::string format = "text";

    std::string log_level = "info";
};

// Exit codes: 0 success, 1 usage, 2 data/format, 3 numerical.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumerical = 3;

int run(const std::vector<std::string>& args);
int run(int argc, const char* const* argv);

}  // namespace geohall::cli
