// kbforge: degrade a KBQA corpus into an answerability benchmark and score
// predictions against it.

#include <iostream>

#include <CLI11.hpp>

#include "kbforge/pipeline.hpp"

namespace fs = std::filesystem;
using namespace kbforge;

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    bool strict = false;
    std::string out;
};

void add_common(CLI::App* cmd, Common& c, bool need_config) {
    auto* opt = cmd->add_option("-c,--config", c.config, "pipeline config (JSON)");
    if (need_config) opt->required()->check(CLI::ExistingFile);
    cmd->add_option("--seed", c.seed, "global seed, overrides the config");
    cmd->add_flag("--strict", c.strict, "fail with exit code 3 when targets or quotas are infeasible");
    cmd->add_option("--out", c.out, "output directory, overrides the config");
}

PipelineConfig resolve(const Common& c) {
    auto config = load_config(c.config);
    if (c.seed) config.set_seed(*c.seed);
    if (c.strict) config.strict = true;
    if (!c.out.empty()) config.out_dir = c.out;
    return config;
}

int with_config(const Common& c, int (*fn)(const PipelineConfig&, std::ostream&)) {
    try {
        return fn(resolve(c), std::cerr);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code::usage;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"kbforge: answerability benchmark workbench"};
    app.require_subcommand(1);

    Common forge_opts, split_opts, validate_opts;
    auto* forge = app.add_subcommand("forge", "degrade the KB and relabel questions");
    add_common(forge, forge_opts, true);
    auto* split = app.add_subcommand("split", "build train/dev/test splits from forge outputs");
    add_common(split, split_opts, true);
    auto* validate_cmd = app.add_subcommand("validate", "check inputs and replay forge outputs");
    add_common(validate_cmd, validate_opts, true);

    std::vector<std::string> stats_files;
    auto* stats_cmd = app.add_subcommand("stats", "per-cause statistics of dataset files");
    stats_cmd->add_option("files", stats_files, "dataset JSON-lines files")->required()->check(CLI::ExistingFile);

    std::string schema, facts, sexpr;
    auto* exec = app.add_subcommand("exec", "run one s-expression and print answers with support facts");
    exec->add_option("--schema", schema)->required()->check(CLI::ExistingFile);
    exec->add_option("--facts", facts)->required()->check(CLI::ExistingFile);
    exec->add_option("sexpr", sexpr, "logical form")->required();

    EvalOptions eval_opts;
    std::string gold, preds, tune_on, dev_preds, objective = "f1r", eval_out;
    auto* eval = app.add_subcommand("eval", "score predictions against a gold split");
    eval->add_option("--gold", gold)->required()->check(CLI::ExistingFile);
    eval->add_option("--predictions", preds)->required()->check(CLI::ExistingFile);
    eval->add_option("--tau-e", eval_opts.tau_e, "entity score threshold");
    eval->add_option("--tau-l", eval_opts.tau_l, "logical form score threshold");
    eval->add_option("--tune-on", tune_on, "dev gold file to tune thresholds on")->check(CLI::ExistingFile);
    eval->add_option("--dev-predictions", dev_preds, "predictions for the tuning file")->check(CLI::ExistingFile);
    eval->add_option("--objective", objective, "tuning objective: em or f1r");
    eval->add_option("--out", eval_out, "directory for report.txt and report.json");

    std::string mp_gold, mp_mode = "gold", mp_out;
    double error_rate = 0.2;
    std::uint64_t mp_seed = 0;
    auto* make_preds = app.add_subcommand("make-preds", "write reference predictions for a gold split");
    make_preds->add_option("--gold", mp_gold)->required()->check(CLI::ExistingFile);
    make_preds->add_option("--mode", mp_mode, "gold, refuse or noisy");
    make_preds->add_option("--error-rate", error_rate, "corrupted share for noisy mode");
    make_preds->add_option("--seed", mp_seed);
    make_preds->add_option("--out", mp_out, "predictions file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : exit_code::usage;
    }

    if (forge->parsed()) return with_config(forge_opts, cmd_forge);
    if (split->parsed()) return with_config(split_opts, cmd_split);
    if (validate_cmd->parsed()) {
        try {
            return cmd_validate(resolve(validate_opts), std::cout, std::cerr);
        } catch (const ConfigError& e) {
            std::cerr << "error: " << e.what() << '\n';
            return exit_code::usage;
        }
    }
    if (stats_cmd->parsed()) {
        std::vector<fs::path> files(stats_files.begin(), stats_files.end());
        return cmd_stats(files, std::cout, std::cerr);
    }
    if (exec->parsed()) return cmd_exec(schema, facts, sexpr, std::cout, std::cerr);
    if (eval->parsed()) {
        try {
            eval_opts.gold = gold;
            eval_opts.predictions = preds;
            if (!tune_on.empty()) eval_opts.tune_gold = tune_on;
            if (!dev_preds.empty()) eval_opts.tune_predictions = dev_preds;
            if (!eval_out.empty()) eval_opts.out_dir = eval_out;
            eval_opts.objective = objective_from_string(objective);
        } catch (const ConfigError& e) {
            std::cerr << "error: " << e.what() << '\n';
            return exit_code::usage;
        }
        return cmd_eval(eval_opts, std::cout, std::cerr);
    }
    if (make_preds->parsed()) {
        ReferenceSpec spec;
        try {
            spec.mode = reference_mode_from_string(mp_mode);
        } catch (const ConfigError& e) {
            std::cerr << "error: " << e.what() << '\n';
            return exit_code::usage;
        }
        spec.error_rate = error_rate;
        return cmd_make_preds(mp_gold, spec, mp_seed, mp_out, std::cerr);
    }
    return exit_code::usage;
}
