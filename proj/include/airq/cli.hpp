#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "airq/dataset.hpp"
#include "airq/eval.hpp"

namespace airq::cli {

/// File-backed application settings; command-line flags override fields.
struct AppConfig {
    data::CsvSchema schema = data::CsvSchema::defaults();
    std::filesystem::path breakpoints;  // empty selects the built-in table
    eval::PipelineConfig pipeline;
    data::SplitRatios narx_ratios{0.70, 0.15, 0.15};
    data::SplitRatios lr_ratios{0.75, 0.0, 0.15};
    int runs = 10;
    std::uint64_t seed = 0;
    std::filesystem::path out_dir = "out";

    /// Reads a JSON config. Unknown keys, unknown pollutant or feature names,
    /// and unresolvable paths are rejected with ConfigError.
    static AppConfig load(const std::filesystem::path& path);
};

/// Entry point behind main(): parses argv, dispatches the subcommand, maps
/// errors onto the exit-code contract (0 ok, 2 input/config, 3 runtime).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace airq::cli
