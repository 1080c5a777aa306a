#include "kbforge/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <iostream>

#include "kbforge/kb_io.hpp"

namespace fs = std::filesystem;

namespace kbforge {

void PipelineConfig::set_seed(std::uint64_t s) {
    seed = s;
    degrade.seed = s;
    split.seed = s;
}

void PipelineConfig::check() const {
    degrade.check();
    split.check();
    for (const auto& [name, p] : {std::pair{"schema", &schema}, {"facts", &facts}, {"questions", &questions}}) {
        if (p->empty()) throw ConfigError(std::string("input path '") + name + "' is not set");
        if (!fs::exists(*p)) throw ConfigError(std::string(name) + " file not found: " + p->string());
    }
    if (out_dir.empty()) throw ConfigError("output directory is not set");
}

namespace {

template <typename T>
void take(const Json& j, const char* key, T& slot) {
    auto it = j.find(key);
    if (it != j.end()) slot = it->get<T>();
}

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

}  // namespace

PipelineConfig config_from_json(const Json& j, const fs::path& base_dir) {
    PipelineConfig c;
    try {
        if (auto it = j.find("format_version"); it != j.end() && it->get<int>() != kFormatVersion)
            throw ConfigError("unsupported config format_version " + it->dump());
        std::uint64_t seed = 0;
        take(j, "seed", seed);
        if (auto it = j.find("inputs"); it != j.end()) {
            if (auto p = it->find("schema"); p != it->end()) c.schema = resolve(base_dir, p->get<std::string>());
            if (auto p = it->find("facts"); p != it->end()) c.facts = resolve(base_dir, p->get<std::string>());
            if (auto p = it->find("questions"); p != it->end())
                c.questions = resolve(base_dir, p->get<std::string>());
        }
        if (auto it = j.find("output_dir"); it != j.end()) c.out_dir = resolve(base_dir, it->get<std::string>());
        take(j, "strict", c.strict);
        if (auto d = j.find("degrade"); d != j.end()) {
            take(*d, "target_unanswerable_fraction", c.degrade.target_unanswerable_fraction);
            take(*d, "max_steps", c.degrade.max_steps);
            take(*d, "overshoot_tolerance", c.degrade.overshoot_tolerance);
            if (auto pc = d->find("per_cause_fractions"); pc != d->end()) {
                c.degrade.per_cause_fractions.clear();
                for (const auto& [name, v] : pc->items())
                    c.degrade.per_cause_fractions[cause_from_string(name)] = v.get<double>();
            } else {
                c.degrade = [&] {
                    auto eq = DegradeConfig::equal_split(c.degrade.target_unanswerable_fraction, 0);
                    eq.max_steps = c.degrade.max_steps;
                    eq.overshoot_tolerance = c.degrade.overshoot_tolerance;
                    return eq;
                }();
            }
        }
        if (auto s = j.find("split"); s != j.end()) {
            take(*s, "train", c.split.train);
            take(*s, "test", c.split.test);
            take(*s, "dev", c.split.dev);
            take(*s, "iid_share", c.split.iid_share);
            take(*s, "partial_share", c.split.partial_share);
            take(*s, "full_share", c.split.full_share);
        }
        c.set_seed(seed);
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const DataError& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return c;
}

PipelineConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    Json j;
    try {
        j = Json::parse(in, nullptr, true, true);
    } catch (const Json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return config_from_json(j, path.parent_path());
}

Json config_to_json(const PipelineConfig& c) {
    Json j;
    j["format_version"] = kFormatVersion;
    j["seed"] = c.seed;
    j["inputs"] = {{"schema", c.schema.string()}, {"facts", c.facts.string()}, {"questions", c.questions.string()}};
    j["output_dir"] = c.out_dir.string();
    j["strict"] = c.strict;
    Json per;
    for (const auto& [cause, v] : c.degrade.per_cause_fractions) per[std::string(to_string(cause))] = v;
    j["degrade"] = {{"target_unanswerable_fraction", c.degrade.target_unanswerable_fraction},
                    {"per_cause_fractions", per},
                    {"max_steps", c.degrade.max_steps},
                    {"overshoot_tolerance", c.degrade.overshoot_tolerance}};
    j["split"] = {{"train", c.split.train},       {"test", c.split.test},
                  {"dev", c.split.dev},           {"iid_share", c.split.iid_share},
                  {"partial_share", c.split.partial_share}, {"full_share", c.split.full_share}};
    return j;
}

ForgePaths::ForgePaths(const fs::path& out)
    : schema(out / "kb" / "schema.tsv"),
      facts(out / "kb" / "facts.tsv"),
      dataset(out / "dataset.jsonl"),
      drop_log(out / "drop_log.jsonl"),
      summary(out / "forge_summary.json") {}

// ---------------------------------------------------------------------------

namespace {

/// Runs `body` and maps exceptions onto exit codes.
template <typename F>
int guarded(std::ostream& err, F&& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return exit_code::usage;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << '\n';
        return exit_code::data;
    } catch (const DataError& e) {
        err << "error: " << e.what() << '\n';
        return exit_code::data;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code::data;
    } catch (const Json::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_code::data;
    }
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
    if (!out) throw DataError("write failed: " + path.string());
}

/// Stages outputs in a scratch directory next to the target, then moves them
/// into place. The scratch directory is removed on any failure.
class Staging {
public:
    explicit Staging(const fs::path& out_dir) : out_(out_dir) {
        fs::create_directories(out_dir);
        tmp_ = out_dir / ".staging";
        fs::remove_all(tmp_);
        fs::create_directories(tmp_);
    }
    ~Staging() {
        std::error_code ec;
        fs::remove_all(tmp_, ec);
    }
    const fs::path& dir() const { return tmp_; }

    /// Moves every staged file to the same relative path under out_dir.
    void commit() {
        std::vector<fs::path> files;
        for (const auto& e : fs::recursive_directory_iterator(tmp_))
            if (e.is_regular_file()) files.push_back(fs::relative(e.path(), tmp_));
        for (const auto& rel : files) {
            fs::create_directories((out_ / rel).parent_path());
            fs::rename(tmp_ / rel, out_ / rel);
        }
    }

private:
    fs::path out_, tmp_;
};

KnowledgeBase load_ideal(const PipelineConfig& c) { return load_kb(c.schema, c.facts); }

std::vector<QuestionRecord> load_questions(const PipelineConfig& c, const KnowledgeBase& ideal) {
    return read_dataset(c.questions, types_of(ideal));
}

}  // namespace

int cmd_forge(const PipelineConfig& config, std::ostream& log) {
    return guarded(log, [&] {
        config.check();
        auto ideal = load_ideal(config);
        auto questions = load_questions(config, ideal);
        for (const auto& q : questions)
            if (q.status != Status::Answerable)
                throw DataError("input question '" + q.qid + "' is already unanswerable");
        auto state = run_degrade(std::move(questions), std::move(ideal), config.degrade);

        std::vector<std::string> warnings;
        for (const auto& p : state.phases()) {
            if (!p.reached)
                warnings.push_back(std::string(to_string(p.cause)) + ": reached " + std::to_string(p.achieved) +
                                   "/" + std::to_string(p.target_count) +
                                   (p.warning.empty() ? "" : " (" + p.warning + ")"));
            if (p.audit_mismatches)
                throw DataError("audit after " + std::string(to_string(p.cause)) + " phase found " +
                                std::to_string(p.audit_mismatches) + " mismatching question(s)");
        }
        for (const auto& w : warnings) log << "warning: target not reached for " << w << '\n';
        if (config.strict && !warnings.empty()) {
            log << "error: infeasible targets under --strict, nothing written\n";
            return exit_code::infeasible;
        }

        Staging stage(config.out_dir);
        ForgePaths staged(stage.dir());
        fs::create_directories(staged.schema.parent_path());
        write_kb(state.kb(), staged.schema, staged.facts);
        write_dataset(staged.dataset, state.questions());
        {
            std::ofstream out(staged.drop_log, std::ios::binary);
            write_drop_log(out, state.drop_log());
        }
        Json summary = phases_to_json(state, config.degrade);
        summary["warnings"] = warnings;
        write_text(staged.summary, summary.dump(2) + "\n");
        stage.commit();

        log << "forge: " << state.unanswerable_count() << "/" << state.questions().size()
            << " questions unanswerable after " << state.drop_log().size() << " drops\n";
        for (const auto& p : state.phases())
            log << "  " << to_string(p.cause) << ": " << p.achieved << " (target " << p.target_count << ")\n";
        return exit_code::ok;
    });
}

int cmd_split(const PipelineConfig& config, std::ostream& log) {
    return guarded(log, [&] {
        config.check();
        ForgePaths in(config.out_dir);
        for (const auto& p : {in.schema, in.facts, in.dataset, in.drop_log})
            if (!fs::exists(p)) throw DataError("forge output missing: " + p.string() + " (run forge first)");
        auto ideal = load_ideal(config);
        auto degraded = load_kb(in.schema, in.facts);
        auto records = read_dataset(in.dataset, types_of(ideal));
        auto drops = read_drop_log(in.drop_log);
        auto state = DegradeState::restore(std::move(ideal), std::move(degraded), std::move(records), std::move(drops));
        auto splits = build_splits(state, config.split);
        auto report = stats(splits);

        for (const auto& w : splits.warnings) log << "warning: " << w << '\n';
        if (config.strict && !splits.warnings.empty()) {
            log << "error: infeasible split quotas under --strict, nothing written\n";
            return exit_code::infeasible;
        }

        Staging stage(config.out_dir);
        fs::create_directories(stage.dir() / "splits");
        write_dataset(stage.dir() / "splits" / "train.jsonl", splits.train);
        write_dataset(stage.dir() / "splits" / "dev.jsonl", splits.dev);
        write_dataset(stage.dir() / "splits" / "test.jsonl", splits.test);
        write_text(stage.dir() / "split_manifest.json", manifest_to_json(splits, config.split).dump(2) + "\n");
        write_text(stage.dir() / "stats.txt", render_stats_text(report));
        write_text(stage.dir() / "stats.json", stats_to_json(report).dump(2) + "\n");
        stage.commit();

        log << "split: train " << splits.train.size() << ", dev " << splits.dev.size() << ", test "
            << splits.test.size() << ", removed " << splits.removed_for_leakage.size() << '\n';
        log << render_stats_text(report);
        return exit_code::ok;
    });
}

int cmd_stats(const std::vector<fs::path>& datasets, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (datasets.empty()) throw ConfigError("stats needs at least one dataset file");
        std::vector<std::vector<QuestionRecord>> loaded;
        loaded.reserve(datasets.size());
        for (const auto& p : datasets) loaded.push_back(read_dataset(p, {}));
        std::vector<std::pair<std::string, const std::vector<QuestionRecord>*>> named;
        for (std::size_t i = 0; i < datasets.size(); ++i) named.emplace_back(datasets[i].stem().string(), &loaded[i]);
        out << render_stats_text(stats(named));
        return exit_code::ok;
    });
}

int cmd_exec(const fs::path& schema, const fs::path& facts, const std::string& sexpr, std::ostream& out,
             std::ostream& err) {
    return guarded(err, [&] {
        auto kb = load_kb(schema, facts);
        auto lf = parse(sexpr, types_of(kb));
        auto report = validate(lf, kb);
        if (!report.valid) {
            std::string missing;
            for (const auto& m : report.missing) missing += (missing.empty() ? "" : ", ") + render_element(m);
            throw ExecutionError("invalid logical form, missing: " + missing);
        }
        auto run = execute(lf, kb);
        out << "form: " << render(lf) << '\n';
        if (run.empty()) {
            out << "answers: NA\n";
            return exit_code::ok;
        }
        out << "answers: " << run.support.size() << '\n';
        for (const auto& [answer, support] : run.support) {
            out << render_term(answer) << '\n';
            for (const auto& f : support) out << "  " << render_fact(f) << '\n';
        }
        return exit_code::ok;
    });
}

int cmd_eval(const EvalOptions& o, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        auto gold = read_dataset(o.gold, {});
        auto preds = read_predictions(o.predictions);
        std::optional<Thresholds> thresholds;
        if (o.tune_gold || o.tune_predictions) {
            if (!o.tune_gold || !o.tune_predictions)
                throw ConfigError("--tune-on needs both the dev gold file and --dev-predictions");
            if (o.tau_e || o.tau_l) throw ConfigError("--tune-on cannot be combined with explicit thresholds");
            auto dev_gold = read_dataset(*o.tune_gold, {});
            auto dev_preds = read_predictions(*o.tune_predictions);
            thresholds = tune_thresholds(dev_preds, dev_gold, o.objective);
        } else if (o.tau_e || o.tau_l) {
            Thresholds t;
            if (o.tau_e) t.entity = *o.tau_e;
            if (o.tau_l) t.lf = *o.tau_l;
            thresholds = t;
        }
        auto report = evaluate(preds, gold, thresholds);
        const auto text = render_report_text(report);
        out << text;
        if (o.out_dir) {
            Staging stage(*o.out_dir);
            write_text(stage.dir() / "report.txt", text);
            write_text(stage.dir() / "report.json", report_to_json(report).dump(2) + "\n");
            stage.commit();
        }
        return exit_code::ok;
    });
}

// ---------------------------------------------------------------------------
// Reference predictions

ReferenceMode reference_mode_from_string(std::string_view s) {
    if (s == "gold") return ReferenceMode::GoldCopy;
    if (s == "refuse") return ReferenceMode::AllRefuse;
    if (s == "noisy") return ReferenceMode::NoisyOracle;
    throw ConfigError("unknown prediction mode '" + std::string(s) + "' (expected gold, refuse or noisy)");
}

std::vector<Prediction> make_reference_predictions(const std::vector<QuestionRecord>& gold, const ReferenceSpec& spec,
                                                   std::uint64_t seed) {
    if (!(spec.error_rate >= 0.0 && spec.error_rate <= 1.0)) throw ConfigError("error rate must be in [0,1]");
    std::vector<Prediction> out;
    out.reserve(gold.size());
    for (const auto& g : gold) {
        Prediction p;
        p.qid = g.qid;
        if (spec.mode != ReferenceMode::AllRefuse) {
            if (g.current_lf) p.lf = render(*g.current_lf);
            p.answers = g.current_answers;
        }
        out.push_back(std::move(p));
    }
    if (spec.mode != ReferenceMode::NoisyOracle) return out;

    Rng rng(derive_seed(seed, "noisy"));
    std::vector<std::size_t> order(gold.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    const auto corrupt_n = static_cast<std::size_t>(std::llround(spec.error_rate * static_cast<double>(gold.size())));
    std::vector<bool> corrupt(gold.size(), false);
    for (std::size_t k = 0; k < corrupt_n; ++k) corrupt[order[k]] = true;

    for (std::size_t i = 0; i < gold.size(); ++i) {
        const auto& g = gold[i];
        auto& p = out[i];
        const double u = rng.uniform();
        const double v = rng.uniform();
        if (!corrupt[i]) {
            p.entity_score = 0.5 + 0.5 * u;
            p.lf_score = 0.4 + 0.6 * v;
            continue;
        }
        p.entity_score = u;
        p.lf_score = 0.6 * v;
        if (g.status == Status::Answerable) {
            // Swap one answer for a wrong one and wrap the form in COUNT.
            AnswerSet answers = *g.current_answers;
            answers.erase(answers.begin());
            answers.insert(Term::entity("noise_" + g.qid));
            p.answers = std::move(answers);
            p.lf = render(Expr::count(*g.current_lf));
        } else {
            // Hallucinate the ideal answer as if the KB were intact.
            p.answers = g.ideal_answers;
            p.lf = g.is_nk() ? render(g.ideal_lf) : render(Expr::count(*g.current_lf));
        }
    }
    return out;
}

int cmd_make_preds(const fs::path& gold_path, const ReferenceSpec& spec, std::uint64_t seed, const fs::path& out,
                   std::ostream& err) {
    return guarded(err, [&] {
        auto gold = read_dataset(gold_path, {});
        auto preds = make_reference_predictions(gold, spec, seed);
        if (out.has_parent_path()) fs::create_directories(out.parent_path());
        std::ofstream file(out, std::ios::binary);
        if (!file) throw DataError("cannot write " + out.string());
        write_predictions(file, preds);
        return exit_code::ok;
    });
}

int cmd_validate(const PipelineConfig& config, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        config.check();
        auto ideal = load_ideal(config);
        auto questions = load_questions(config, ideal);
        out << "kb: " << ideal.types().size() << " types, " << ideal.relations().size() << " relations, "
            << ideal.entities().size() << " entities, " << ideal.facts().size() << " facts\n";
        DegradeState fresh(ideal, questions);
        out << "questions: " << fresh.questions().size() << " answerable on the ideal KB\n";

        ForgePaths forged(config.out_dir);
        if (!fs::exists(forged.drop_log)) {
            out << "no forge outputs under " << config.out_dir.string() << '\n';
            return exit_code::ok;
        }
        auto log = read_drop_log(forged.drop_log);
        auto replayed = replay(std::move(ideal), std::move(questions), log);
        auto degraded = load_kb(forged.schema, forged.facts);
        if (!(replayed.kb() == degraded)) throw DataError("replayed KB differs from " + forged.schema.string());
        auto records = read_dataset(forged.dataset, types_of(replayed.ideal_kb()));
        if (records != replayed.questions()) throw DataError("replayed labels differ from " + forged.dataset.string());
        out << "replay: " << log.size() << " drops reproduce the forge outputs\n";
        return exit_code::ok;
    });
}

}  // namespace kbforge
