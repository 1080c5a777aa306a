#include "kbforge/splitter.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace kbforge {

void SplitConfig::check() const {
    auto in_unit = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };
    for (double v : {train, test, dev, iid_share, partial_share, full_share})
        if (!in_unit(v)) throw ConfigError("split fractions must be in [0,1]");
    if (std::abs(train + test + dev - 1.0) > 1e-9) throw ConfigError("train + test + dev must equal 1");
    if (std::abs(iid_share + partial_share + full_share - 1.0) > 1e-9)
        throw ConfigError("iid + partial + full shares must equal 1");
}

std::vector<ElementRef> missing_schema_elements(const QuestionRecord& record, const KnowledgeBase& degraded) {
    std::vector<ElementRef> out;
    for (auto& e : elements(record.ideal_lf))
        if ((e.kind == ElementKind::Type || e.kind == ElementKind::Relation) && !degraded.has(e)) out.push_back(e);
    return out;
}

std::set<ElementRef> unanswerable_cited(const std::vector<QuestionRecord>& train) {
    std::set<ElementRef> out;
    for (const auto& q : train)
        if (q.status == Status::Unanswerable)
            for (auto& e : elements(q.ideal_lf)) out.insert(e);
    return out;
}

Scenario classify_scenario(const QuestionRecord& record, const std::set<ElementRef>& train_unanswerable_cited,
                           const KnowledgeBase& degraded) {
    if (record.status != Status::Unanswerable)
        throw DataError("classify_scenario: question '" + record.qid + "' is answerable");
    std::size_t unseen = 0;
    for (const auto& m : missing_schema_elements(record, degraded))
        if (!train_unanswerable_cited.count(m)) ++unseen;
    if (unseen == 0) return Scenario::Iid;
    std::size_t schema = 0;
    for (const auto& e : elements(record.ideal_lf))
        if (e.kind == ElementKind::Type || e.kind == ElementKind::Relation) ++schema;
    return unseen == schema ? Scenario::FullZeroShot : Scenario::PartialZeroShot;
}

namespace {

enum class Slot { None, Partial, Full, Iid, Removed };

bool cites_any(const QuestionRecord& q, const std::set<ElementRef>& refs) {
    for (const auto& e : elements(q.ideal_lf))
        if (refs.count(e)) return true;
    return false;
}

std::size_t round_count(double x) { return static_cast<std::size_t>(std::llround(x)); }

// Largest-remainder apportionment of `total` over groups proportionally to sizes.
std::vector<std::size_t> apportion(const std::vector<std::size_t>& sizes, double ratio, std::size_t total) {
    std::vector<std::size_t> out(sizes.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t g = 0; g < sizes.size(); ++g) {
        double exact = static_cast<double>(sizes[g]) * ratio;
        out[g] = static_cast<std::size_t>(std::floor(exact));
        assigned += out[g];
        remainders.emplace_back(exact - std::floor(exact), g);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (const auto& [rem, g] : remainders) {
        if (assigned >= total) break;
        if (out[g] < sizes[g]) {
            ++out[g];
            ++assigned;
        }
    }
    return out;
}

}  // namespace

DatasetSplits build_splits(const DegradeState& state, const SplitConfig& config) {
    config.check();
    DatasetSplits out;
    const auto& questions = state.questions();
    const auto& degraded = state.kb();
    const std::size_t n = questions.size();
    Rng rng(derive_seed(config.seed, "split"));

    std::vector<Slot> slot(n, Slot::None);
    std::vector<std::vector<ElementRef>> missing(n);
    std::vector<std::size_t> unanswerable;
    for (std::size_t i = 0; i < n; ++i) {
        if (questions[i].status != Status::Unanswerable) continue;
        unanswerable.push_back(i);
        missing[i] = missing_schema_elements(questions[i], degraded);
    }

    const double side_fraction = config.test + config.dev;
    const double unans_side = n == 0 ? 0.0 : static_cast<double>(unanswerable.size()) * side_fraction;
    const std::size_t unans_side_n = round_count(unans_side);
    const std::size_t iid_quota = round_count(static_cast<double>(unans_side_n) * config.iid_share);
    const std::size_t partial_quota = round_count(static_cast<double>(unans_side_n) * config.partial_share);
    const std::size_t full_quota = unans_side_n - std::min(unans_side_n, iid_quota + partial_quota);

    if (unanswerable.empty()) out.warnings.push_back("no unanswerable questions: zero-shot pools are empty");

    // (1) Zero-shot selection from dropped schema elements.
    std::set<ElementRef> dropped_schema;
    for (const auto& entry : state.drop_log()) {
        for (const auto& t : entry.cascade.removed_types) dropped_schema.insert(ElementRef::type(t));
        for (const auto& r : entry.cascade.removed_relations) dropped_schema.insert(ElementRef::relation(r));
    }
    std::map<ElementRef, std::vector<std::size_t>> citing;
    for (auto i : unanswerable)
        for (const auto& e : elements(questions[i].ideal_lf))
            if (dropped_schema.count(e)) citing[e].push_back(i);
    std::vector<ElementRef> order;
    for (const auto& [e, qs] : citing) order.push_back(e);
    rng.shuffle(order);

    std::size_t partial_n = 0, full_n = 0;
    for (const auto& g : order) {
        if (partial_n >= partial_quota && full_n >= full_quota) break;
        std::vector<std::size_t> group;
        for (auto i : citing[g])
            if (slot[i] == Slot::None) group.push_back(i);
        if (group.empty()) continue;

        std::set<ElementRef> zs = out.zero_shot_elements;
        zs.insert(g);
        std::set<std::size_t> in_group(group.begin(), group.end());
        // An element counts as seen when some still-unassigned question outside
        // this group cites it; those questions end up in train or iid test.
        auto seen_elsewhere = [&](const ElementRef& m) {
            auto it = citing.find(m);
            if (it == citing.end()) {
                for (auto j : unanswerable)
                    if (slot[j] == Slot::None && !in_group.count(j) && contains_element(questions[j].ideal_lf, m))
                        return true;
                return false;
            }
            for (auto j : it->second)
                if (slot[j] == Slot::None && !in_group.count(j)) return true;
            return false;
        };
        auto provisional_full = [&](std::size_t i) {
            std::size_t schema = 0, unseen = 0;
            for (const auto& e : elements(questions[i].ideal_lf)) {
                if (e.kind != ElementKind::Type && e.kind != ElementKind::Relation) continue;
                ++schema;
                bool is_missing = std::find(missing[i].begin(), missing[i].end(), e) != missing[i].end();
                if (is_missing && (zs.count(e) || !seen_elsewhere(e))) ++unseen;
            }
            return unseen == schema;
        };

        std::vector<std::pair<std::size_t, Slot>> plan;
        std::size_t fits = 0, p = partial_n, f = full_n;
        rng.shuffle(group);
        for (auto i : group) {
            if (provisional_full(i)) {
                if (f < full_quota) {
                    plan.emplace_back(i, Slot::Full);
                    ++f;
                    ++fits;
                } else {
                    plan.emplace_back(i, Slot::Removed);
                }
            } else if (p < partial_quota) {
                plan.emplace_back(i, Slot::Partial);
                ++p;
                ++fits;
            } else {
                plan.emplace_back(i, Slot::Removed);
            }
        }
        if (fits == 0) continue;
        for (const auto& [i, s] : plan) slot[i] = s;
        partial_n = p;
        full_n = f;
        out.zero_shot_elements.insert(g);
    }
    if (partial_n < partial_quota || full_n < full_quota)
        out.warnings.push_back("zero-shot quota not reached: partial " + std::to_string(partial_n) + "/" +
                               std::to_string(partial_quota) + ", full " + std::to_string(full_n) + "/" +
                               std::to_string(full_quota));

    // (2) Leakage removal: nothing else may cite a zero-shot element.
    for (std::size_t i = 0; i < n; ++i)
        if (slot[i] == Slot::None && cites_any(questions[i], out.zero_shot_elements)) slot[i] = Slot::Removed;

    // (3) Iid unanswerable test questions, keeping every missing element they
    // cite covered by at least one unanswerable train question.
    std::vector<std::size_t> rest;
    for (auto i : unanswerable)
        if (slot[i] == Slot::None) rest.push_back(i);
    std::map<ElementRef, std::size_t> cover;
    for (auto i : rest)
        for (const auto& m : missing[i]) ++cover[m];
    rng.shuffle(rest);
    std::size_t iid_n = 0;
    for (auto i : rest) {
        if (iid_n >= iid_quota) break;
        bool ok = std::all_of(missing[i].begin(), missing[i].end(), [&](const ElementRef& m) { return cover[m] >= 2; });
        if (!ok) continue;
        for (const auto& m : missing[i]) --cover[m];
        slot[i] = Slot::Iid;
        ++iid_n;
    }
    if (iid_n < iid_quota)
        out.warnings.push_back("iid quota not reached: " + std::to_string(iid_n) + "/" + std::to_string(iid_quota));

    // Answerable questions fill the test side up to its size.
    std::size_t removed_n = 0;
    for (auto s : slot) removed_n += s == Slot::Removed;
    const std::size_t kept = n - removed_n;
    const std::size_t side_n = round_count(static_cast<double>(kept) * side_fraction);
    const std::size_t unans_side_actual = partial_n + full_n + iid_n;
    std::vector<std::size_t> answerable;
    for (std::size_t i = 0; i < n; ++i)
        if (questions[i].status == Status::Answerable) answerable.push_back(i);
    rng.shuffle(answerable);
    const std::size_t answerable_side = std::min(answerable.size(), side_n > unans_side_actual ? side_n - unans_side_actual : 0);
    std::vector<bool> on_side(n, false);
    for (std::size_t k = 0; k < answerable_side; ++k) on_side[answerable[k]] = true;
    for (std::size_t i = 0; i < n; ++i)
        if (slot[i] == Slot::Partial || slot[i] == Slot::Full || slot[i] == Slot::Iid) on_side[i] = true;

    // Final scenario tags against the actual train split.
    std::vector<QuestionRecord> train;
    std::vector<std::size_t> side;
    for (std::size_t i = 0; i < n; ++i) {
        if (slot[i] == Slot::Removed) {
            out.removed_for_leakage.push_back(questions[i].qid);
        } else if (on_side[i]) {
            side.push_back(i);
        } else {
            QuestionRecord r = questions[i];
            r.scenario = Scenario::NotApplicable;
            train.push_back(std::move(r));
        }
    }
    const auto seen = unanswerable_cited(train);
    std::vector<QuestionRecord> side_records;
    for (auto i : side) {
        QuestionRecord r = questions[i];
        r.scenario = r.status == Status::Answerable ? Scenario::Iid : classify_scenario(r, seen, degraded);
        side_records.push_back(std::move(r));
    }

    // (4) Stratified 2:1 test/dev carve by (status, scenario, primary cause).
    std::map<std::string, std::vector<std::size_t>> strata;
    for (std::size_t k = 0; k < side_records.size(); ++k) {
        const auto& r = side_records[k];
        std::string key = std::string(to_string(r.status)) + "/" + std::string(to_string(r.scenario)) + "/" +
                          (r.causes.empty() ? std::string("-") : std::string(to_string(r.causes.front())));
        strata[key].push_back(k);
    }
    const double dev_ratio = side_fraction > 0 ? config.dev / side_fraction : 0.0;
    std::vector<std::size_t> sizes;
    for (auto& [key, members] : strata) {
        rng.shuffle(members);
        sizes.push_back(members.size());
    }
    const auto dev_counts = apportion(sizes, dev_ratio, round_count(static_cast<double>(side_records.size()) * dev_ratio));
    std::vector<bool> to_dev(side_records.size(), false);
    std::size_t g = 0;
    for (const auto& [key, members] : strata) {
        for (std::size_t k = 0; k < dev_counts[g]; ++k) to_dev[members[k]] = true;
        ++g;
    }
    for (std::size_t k = 0; k < side_records.size(); ++k)
        (to_dev[k] ? out.dev : out.test).push_back(std::move(side_records[k]));
    out.train = std::move(train);

    // Reported-only: kept questions whose ideal support touches a zero-shot element.
    for (std::size_t i = 0; i < n; ++i) {
        if (slot[i] == Slot::Removed) continue;
        bool touches = false;
        for (const auto& f : state.ideal_support(i)) {
            if (out.zero_shot_elements.count(ElementRef::relation(f.relation))) touches = true;
            for (const std::string* e : {&f.subject, f.object.is_literal ? nullptr : &f.object.id}) {
                if (!e || touches) continue;
                auto it = state.ideal_kb().entities().find(*e);
                if (it == state.ideal_kb().entities().end()) continue;
                for (const auto& t : it->second.types)
                    if (out.zero_shot_elements.count(ElementRef::type(t))) touches = true;
            }
        }
        if (touches && !cites_any(questions[i], out.zero_shot_elements))
            out.path_contained.push_back(questions[i].qid);
    }

    const double kept_d = kept == 0 ? 1.0 : static_cast<double>(kept);
    out.figures["train"] = {config.train, static_cast<double>(out.train.size()) / kept_d};
    out.figures["test"] = {config.test, static_cast<double>(out.test.size()) / kept_d};
    out.figures["dev"] = {config.dev, static_cast<double>(out.dev.size()) / kept_d};
    std::size_t side_iid = 0, side_partial = 0, side_full = 0;
    for (const auto* split : {&out.test, &out.dev})
        for (const auto& r : *split) {
            if (r.status != Status::Unanswerable) continue;
            side_iid += r.scenario == Scenario::Iid;
            side_partial += r.scenario == Scenario::PartialZeroShot;
            side_full += r.scenario == Scenario::FullZeroShot;
        }
    const double side_unans = std::max<double>(1.0, static_cast<double>(side_iid + side_partial + side_full));
    out.figures["iid"] = {config.iid_share, static_cast<double>(side_iid) / side_unans};
    out.figures["partial_zero_shot"] = {config.partial_share, static_cast<double>(side_partial) / side_unans};
    out.figures["full_zero_shot"] = {config.full_share, static_cast<double>(side_full) / side_unans};
    return out;
}

// ---------------------------------------------------------------------------

StatsReport stats(const std::vector<std::pair<std::string, const std::vector<QuestionRecord>*>>& splits) {
    StatsReport report;
    for (const auto& [name, records] : splits) {
        LabelCounts labels;
        std::map<std::string, std::size_t> cells;
        for (const char* c : kStatsCells) cells[c] = 0;
        for (const auto& r : *records) {
            if (r.status == Status::Answerable) {
                ++labels.answerable;
                continue;
            }
            const char* label = r.is_nk() ? "NK" : "NA";
            (r.is_nk() ? labels.nk : labels.na)++;
            std::string cause = r.causes.empty() ? "none" : std::string(to_string(r.causes.front()));
            cause = cause.substr(0, cause.find('_'));
            std::string scenario = "iid";
            if (r.scenario == Scenario::PartialZeroShot) scenario = "partial";
            if (r.scenario == Scenario::FullZeroShot) scenario = "full";
            std::string cell = cause + "/" + scenario + "/" + label;
            auto it = cells.find(cell);
            if (it != cells.end())
                ++it->second;
            else
                ++report.outside_table[cell];
        }
        report.labels.emplace_back(name, labels);
        report.cells.emplace_back(name, std::move(cells));
    }
    return report;
}

StatsReport stats(const DatasetSplits& splits) {
    return stats({{"train", &splits.train}, {"dev", &splits.dev}, {"test", &splits.test}});
}

std::string render_stats_text(const StatsReport& report) {
    std::ostringstream os;
    os << std::left << std::setw(8) << "Split" << std::right << std::setw(8) << "A" << std::setw(8) << "NK"
       << std::setw(8) << "NA" << '\n';
    for (const auto& [name, c] : report.labels)
        os << std::left << std::setw(8) << name << std::right << std::setw(8) << c.answerable << std::setw(8) << c.nk
           << std::setw(8) << c.na << '\n';
    os << '\n';
    os << std::left << std::setw(8) << "" << "|" << std::setw(32) << " Type Drop" << "|" << std::setw(32)
       << " Relation Drop" << "|" << std::setw(20) << " Entity Drop" << "|" << " Fact Drop\n";
    os << std::left << std::setw(8) << "" << "|" << std::setw(32) << " IID      Z-Shot" << "|" << std::setw(32)
       << " IID      Z-Shot" << "|" << std::setw(20) << " IID" << "|" << " IID\n";
    os << std::left << std::setw(8) << "Split" << "|";
    const char* heads[] = {"NK", "Partial(NK)", "Full(NK)", "NK", "Partial(NK)", "Full(NK)", "NA", "NK", "NA"};
    const int widths[] = {8, 13, 11, 8, 13, 11, 10, 10, 10};
    const bool bar_after[] = {false, false, true, false, false, true, false, true, false};
    for (std::size_t k = 0; k < 9; ++k) {
        os << std::right << std::setw(widths[k]) << heads[k];
        if (bar_after[k]) os << "|";
    }
    os << '\n';
    for (const auto& [name, cells] : report.cells) {
        os << std::left << std::setw(8) << name << "|";
        for (std::size_t k = 0; k < 9; ++k) {
            os << std::right << std::setw(widths[k]) << cells.at(kStatsCells[k]);
            if (bar_after[k]) os << "|";
        }
        os << '\n';
    }
    if (!report.outside_table.empty()) {
        os << "\noutside table:";
        for (const auto& [cell, count] : report.outside_table) os << ' ' << cell << '=' << count;
        os << '\n';
    }
    return os.str();
}

}  // namespace kbforge
