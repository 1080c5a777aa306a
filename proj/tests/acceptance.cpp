// End-to-end acceptance checks on the 200-question desk fixture. Prints one
// PASS/FAIL line per criterion and exits nonzero if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>

#include "kbforge/pipeline.hpp"
#include "kbforge/splitter.hpp"
#include "support.hpp"

using namespace kbforge;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
    std::printf("%s %d %s: %s\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
    failures += !ok;
}

std::string pct(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", 100 * x);
    return buf;
}

struct Run {
    PipelineConfig config;
    KnowledgeBase ideal;
    std::vector<QuestionRecord> questions;
    DegradeState state;
    DatasetSplits splits;
    double forge_seconds = 0;
};

Run forge_desk() {
    auto t0 = std::chrono::steady_clock::now();
    auto config = load_config(testkit::fixtures() / "desk" / "config.json");
    auto ideal = load_kb(config.schema, config.facts);
    auto questions = read_dataset(config.questions, types_of(ideal));
    auto state = run_degrade(questions, ideal, config.degrade);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    auto splits = build_splits(state, config.split);
    return Run{config, ideal, questions, std::move(state), std::move(splits), secs};
}

void label_consistency(const Run& r) {
    const auto& kb = r.state.kb();
    std::size_t ok = 0;
    for (const auto& q : r.state.questions()) {
        bool good;
        if (oracle::cites_missing(kb, q.ideal_lf)) {
            good = q.is_nk() && q.is_na() && q.status == Status::Unanswerable;
        } else {
            auto answers = oracle::eval(kb, q.ideal_lf);
            good = !q.is_nk() && (answers.empty() ? q.is_na() && q.status == Status::Unanswerable
                                                  : q.current_answers == answers && q.status == Status::Answerable);
        }
        ok += good;
    }
    const auto n = r.state.questions().size();
    report(1, "label-oracle consistency", ok == n && r.forge_seconds < 10,
           std::to_string(ok) + "/" + std::to_string(n) + " agree, forge " + std::to_string(r.forge_seconds) + " s");
}

void degradation_targets(const Run& r) {
    const double n = static_cast<double>(r.state.questions().size());
    const double overall = static_cast<double>(r.state.unanswerable_count()) / n;
    bool ok = std::abs(overall - r.config.degrade.target_unanswerable_fraction) <= 0.03;
    std::string detail = "overall " + pct(overall);
    for (const auto& phase : r.state.phases()) {
        const double got = static_cast<double>(r.state.primary_cause_count(phase.cause)) / n;
        const bool within = std::abs(got - phase.target_fraction) <= 0.03;
        // Falling short is acceptable only when the phase says so.
        ok &= within || !phase.warning.empty();
        detail += std::string(", ") + std::string(to_string(phase.cause)) + " " + pct(got) +
                  (within ? "" : " (reported infeasible)");
    }
    report(2, "unanswerable fractions", ok, detail);
}

void split_shape(const Run& r) {
    const auto& s = r.splits;
    const double kept = static_cast<double>(s.train.size() + s.dev.size() + s.test.size());
    auto share = [&](std::size_t k) { return static_cast<double>(k) / kept; };
    bool ok = std::abs(share(s.train.size()) - 0.7) <= 0.03 && std::abs(share(s.test.size()) - 0.2) <= 0.03 &&
              std::abs(share(s.dev.size()) - 0.1) <= 0.03;
    std::map<Scenario, double> mix;
    double una = 0;
    for (const auto* part : {&s.dev, &s.test})
        for (const auto& q : *part)
            if (q.status == Status::Unanswerable) {
                mix[q.scenario] += 1;
                una += 1;
            }
    for (auto& [_, v] : mix) v /= una;
    ok &= una > 0 && std::abs(mix[Scenario::Iid] - 0.5) <= 0.05 &&
          std::abs(mix[Scenario::PartialZeroShot] - 0.375) <= 0.05 &&
          std::abs(mix[Scenario::FullZeroShot] - 0.125) <= 0.05;
    std::size_t leaks = 0;
    for (const auto& g : s.zero_shot_elements)
        for (const auto& q : s.train) leaks += contains_element(q.ideal_lf, g);
    std::set<std::string> seen;
    for (const auto* part : {&s.train, &s.dev, &s.test})
        for (const auto& q : *part) leaks += !seen.insert(q.qid).second;
    ok &= leaks == 0;
    report(3, "split sizes and composition", ok,
           "train/test/dev " + pct(share(s.train.size())) + "/" + pct(share(s.test.size())) + "/" +
               pct(share(s.dev.size())) + ", iid/partial/full " + pct(mix[Scenario::Iid]) + "/" +
               pct(mix[Scenario::PartialZeroShot]) + "/" + pct(mix[Scenario::FullZeroShot]) + ", leaks " +
               std::to_string(leaks));
}

void scenario_soundness(const Run& r) {
    const auto cited = unanswerable_cited(r.splits.train);
    std::size_t bad_cause = 0, mismatched = 0, checked = 0;
    for (const auto* part : {&r.splits.dev, &r.splits.test})
        for (const auto& q : *part) {
            if (q.status != Status::Unanswerable) continue;
            ++checked;
            if (q.scenario == Scenario::PartialZeroShot || q.scenario == Scenario::FullZeroShot)
                bad_cause += q.causes.front() != Cause::TypeDrop && q.causes.front() != Cause::RelationDrop;
            mismatched += classify_scenario(q, cited, r.state.kb()) != q.scenario;
        }
    report(4, "zero-shot scenarios", bad_cause == 0 && mismatched == 0 && checked > 0,
           std::to_string(checked) + " rederived, " + std::to_string(mismatched) + " mismatched, " +
               std::to_string(bad_cause) + " zero-shot with entity/fact cause");
}

void executor_oracle() {
    Rng rng(20240601);
    int agree = 0, trials = 1000;
    for (int i = 0; i < trials; ++i) {
        auto kb = testkit::random_kb(rng, 30);
        auto lf = testkit::random_form(rng, kb, 4);
        agree += depth(lf) <= 4 && execute(lf, kb).answers() == oracle::eval(kb, lf);
    }
    report(5, "executor vs naive oracle", agree == trials,
           std::to_string(agree) + "/" + std::to_string(trials) + " trials exact");
}

void metric_identities(const Run& r) {
    const auto& gold = r.splits.test;
    bool ok = true;
    std::string detail;
    auto copy = evaluate(make_reference_predictions(gold, {ReferenceMode::GoldCopy, 0}, 0), gold);
    for (const auto& [name, a] : copy.groups)
        if (a.count > 0) ok &= a.em == 100 && a.f1_regular == 100 && a.f1_lenient == 100;
    detail += ok ? "gold copy 100" : "gold copy below 100";
    auto refuse = evaluate(make_reference_predictions(gold, {ReferenceMode::AllRefuse, 0}, 0), gold);
    const bool refuse_ok =
        refuse.group("answerable").f1_regular == 0 && refuse.group("unanswerable").f1_regular == 100;
    ok &= refuse_ok;
    detail += refuse_ok ? ", refuse A=0/U=100" : ", refuse wrong";
    std::size_t lenient_violations = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto noisy = evaluate(make_reference_predictions(gold, {ReferenceMode::NoisyOracle, 0.5}, seed), gold);
        for (const auto& row : noisy.rows) lenient_violations += row.f1_lenient + 1e-12 < row.f1_regular;
    }
    ok &= lenient_violations == 0;
    detail += ", F1L<F1R rows " + std::to_string(lenient_violations);
    std::size_t ideal_rows = 0, ideal_ok = 0;
    std::vector<Prediction> ideal_preds;
    std::vector<QuestionRecord> na_gold;
    for (const auto& q : gold)
        if (q.is_na()) {
            na_gold.push_back(q);
            ideal_preds.push_back(Prediction{q.qid, render(q.ideal_lf), q.ideal_answers, std::nullopt, std::nullopt});
        }
    for (const auto& row : evaluate(ideal_preds, na_gold).rows) {
        ++ideal_rows;
        ideal_ok += row.f1_lenient == 1 && row.f1_regular == 0;
    }
    ok &= ideal_rows > 0 && ideal_ok == ideal_rows;
    detail += ", ideal-vs-NA " + std::to_string(ideal_ok) + "/" + std::to_string(ideal_rows);
    report(6, "metric identities", ok, detail);
}

void threshold_tuning(const Run& r) {
    const auto& dev = r.splits.dev;
    const auto& test = r.splits.test;
    auto dev_preds = make_reference_predictions(dev, {ReferenceMode::NoisyOracle, 0.2}, 1);
    auto test_preds = make_reference_predictions(test, {ReferenceMode::NoisyOracle, 0.2}, 2);
    bool ok = true;
    std::string detail;
    for (Objective o : {Objective::EM, Objective::F1R}) {
        auto t = tune_thresholds(dev_preds, dev, o);
        const double before = objective_value(dev_preds, dev, {}, o);
        const double after = objective_value(dev_preds, dev, t, o);
        ok &= after + 1e-12 >= before;
        char buf[96];
        std::snprintf(buf, sizeof buf, "%s %.4f -> %.4f; ", std::string(to_string(o)).c_str(), before, after);
        detail += buf;
    }
    std::size_t prev = 0;
    bool monotone = true;
    for (int i = 0; i < 20; ++i) {
        const double tau = i / 19.0;
        std::size_t nk = 0;
        for (const auto& p : test_preds) nk += !apply_thresholds(p, {-INFINITY, tau}).lf.has_value();
        monotone &= nk >= prev;
        prev = nk;
    }
    ok &= monotone;
    detail += std::string("NK count over tau_l sweep ") + (monotone ? "monotone" : "not monotone") + ", max " +
              std::to_string(prev);
    report(7, "threshold tuning", ok, detail);
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = read_file(e.path());
    return out;
}

void determinism(const Run& r) {
    const auto base = fs::temp_directory_path() / "kbforge_acceptance";
    fs::remove_all(base);
    std::ostringstream log;
    bool ok = true;
    for (const char* name : {"a", "b"}) {
        auto c = r.config;
        c.out_dir = base / name;
        ok &= cmd_forge(c, log) == exit_code::ok && cmd_split(c, log) == exit_code::ok;
    }
    const auto a = snapshot(base / "a");
    const bool identical = ok && a == snapshot(base / "b");

    const ForgePaths paths(base / "a");
    auto log_entries = read_drop_log(paths.drop_log);
    auto replayed = replay(r.ideal, r.questions, log_entries);
    auto written_kb = load_kb(paths.schema, paths.facts);
    auto written = read_dataset(paths.dataset, types_of(r.ideal));
    const bool replay_ok = replayed.kb() == written_kb && replayed.questions() == written;
    fs::remove_all(base);
    report(8, "determinism and replay", identical && replay_ok,
           std::to_string(a.size()) + " files " + (identical ? "byte-identical" : "differ") + ", replay of " +
               std::to_string(log_entries.size()) + " drops " + (replay_ok ? "matches" : "differs"));
}

}  // namespace

int main() {
    try {
        const auto run = forge_desk();
        label_consistency(run);
        degradation_targets(run);
        split_shape(run);
        scenario_soundness(run);
        executor_oracle();
        metric_identities(run);
        threshold_tuning(run);
        determinism(run);
    } catch (const std::exception& e) {
        std::printf("FAIL acceptance aborted: %s\n", e.what());
        return 1;
    }
    return failures == 0 ? 0 : 1;
}
