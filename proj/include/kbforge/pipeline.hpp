#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "kbforge/dataset_io.hpp"

namespace kbforge {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int usage = 1;
inline constexpr int data = 2;
inline constexpr int infeasible = 3;
}  // namespace exit_code

/// Everything forge and split need. Relative paths in a config file are
/// resolved against the file's directory.
struct PipelineConfig {
    std::filesystem::path schema;
    std::filesystem::path facts;
    std::filesystem::path questions;
    std::filesystem::path out_dir = "out";
    std::uint64_t seed = 0;
    bool strict = false;
    DegradeConfig degrade;
    SplitConfig split;

    /// Copies `seed` into the module configs.
    void set_seed(std::uint64_t s);
    /// Throws ConfigError on bad fractions or missing inputs.
    void check() const;
};

PipelineConfig config_from_json(const Json& j, const std::filesystem::path& base_dir);
PipelineConfig load_config(const std::filesystem::path& path);
Json config_to_json(const PipelineConfig& config);

/// Forge output layout under the output directory.
struct ForgePaths {
    std::filesystem::path schema, facts, dataset, drop_log, summary;
    explicit ForgePaths(const std::filesystem::path& out_dir);
};

int cmd_forge(const PipelineConfig& config, std::ostream& log);
int cmd_split(const PipelineConfig& config, std::ostream& log);
/// Per-cause statistics of dataset files, named by file stem.
int cmd_stats(const std::vector<std::filesystem::path>& datasets, std::ostream& out, std::ostream& err);
/// Prints answers and their support. Empty results print NA and exit 0;
/// parse and validity errors exit with the data code.
int cmd_exec(const std::filesystem::path& schema, const std::filesystem::path& facts, const std::string& sexpr,
             std::ostream& out, std::ostream& err);

struct EvalOptions {
    std::filesystem::path gold;
    std::filesystem::path predictions;
    std::optional<double> tau_e;
    std::optional<double> tau_l;
    std::optional<std::filesystem::path> tune_gold;
    std::optional<std::filesystem::path> tune_predictions;
    Objective objective = Objective::F1R;
    std::optional<std::filesystem::path> out_dir;
};
int cmd_eval(const EvalOptions& options, std::ostream& out, std::ostream& err);

enum class ReferenceMode { GoldCopy, AllRefuse, NoisyOracle };
ReferenceMode reference_mode_from_string(std::string_view s);

struct ReferenceSpec {
    ReferenceMode mode = ReferenceMode::GoldCopy;
    double error_rate = 0.2;
};

/// GoldCopy copies the gold fields, AllRefuse answers NK/NA everywhere.
/// NoisyOracle corrupts exactly round(error_rate * n) seeded rows and scores
/// corrupted rows lower on average than intact ones.
std::vector<Prediction> make_reference_predictions(const std::vector<QuestionRecord>& gold, const ReferenceSpec& spec,
                                                   std::uint64_t seed);

int cmd_make_preds(const std::filesystem::path& gold, const ReferenceSpec& spec, std::uint64_t seed,
                   const std::filesystem::path& out, std::ostream& err);

/// Checks the inputs of `config` and, when forge outputs exist, that replaying
/// the drop log reproduces them.
int cmd_validate(const PipelineConfig& config, std::ostream& out, std::ostream& err);

}  // namespace kbforge
