#include "kbforge/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>
#include <unordered_map>

namespace kbforge {

namespace {

double harmonic(double p, double r) { return p + r > 0 ? 2 * p * r / (p + r) : 0.0; }

std::optional<AnswerSet> as_label(const std::optional<AnswerSet>& a) {
    if (a && a->empty()) return std::nullopt;
    return a;
}

std::pair<double, double> pr(const std::optional<AnswerSet>& pred, const std::optional<AnswerSet>& gold) {
    auto p = answer_prf(pred, gold);
    return {p.precision, p.recall};
}

}  // namespace

PRF answer_prf(const std::optional<AnswerSet>& pred_in, const std::optional<AnswerSet>& gold_in) {
    // An empty set carries no answer; it is read as the NA label.
    const auto pred = as_label(pred_in);
    const auto gold = as_label(gold_in);
    if (!pred && !gold) return {1, 1, 1};
    if (!pred || !gold) return {0, 0, 0};
    std::size_t hit = 0;
    for (const auto& a : *pred) hit += gold->count(a);
    PRF out;
    out.precision = static_cast<double>(hit) / static_cast<double>(pred->size());
    out.recall = static_cast<double>(hit) / static_cast<double>(gold->size());
    out.f1 = harmonic(out.precision, out.recall);
    return out;
}

double lenient_f1(const std::optional<AnswerSet>& pred, const std::optional<AnswerSet>& gold_degraded,
                  const std::optional<AnswerSet>& gold_ideal) {
    auto [p1, r1] = pr(pred, gold_degraded);
    auto [p2, r2] = pr(pred, gold_ideal);
    return harmonic(std::max(p1, p2), std::max(r1, r2));
}

EmResult em(const std::optional<std::string>& pred_lf, const std::optional<LogicalForm>& gold_lf) {
    if (!pred_lf || !gold_lf) return {(!pred_lf && !gold_lf) ? 1 : 0, false};
    try {
        return {render(parse(*pred_lf)) == render(*gold_lf) ? 1 : 0, false};
    } catch (const std::exception&) {
        return {0, true};
    }
}

EmResult em(const std::optional<std::string>& pred_lf, const std::optional<std::string>& gold_lf) {
    if (!gold_lf) return em(pred_lf, std::optional<LogicalForm>{});
    return em(pred_lf, std::optional<LogicalForm>{parse(*gold_lf)});
}

bool forced_by(const Prediction& pred, const Thresholds& t) {
    return (pred.entity_score && *pred.entity_score < t.entity) || (pred.lf_score && *pred.lf_score < t.lf);
}

Prediction apply_thresholds(Prediction pred, const Thresholds& t) {
    if (forced_by(pred, t)) {
        pred.lf.reset();
        pred.answers.reset();
    }
    return pred;
}

std::string_view to_string(Objective o) { return o == Objective::EM ? "em" : "f1r"; }

Objective objective_from_string(std::string_view s) {
    if (s == "em" || s == "EM") return Objective::EM;
    if (s == "f1r" || s == "F1R" || s == "f1") return Objective::F1R;
    throw ConfigError("unknown objective '" + std::string(s) + "' (expected em or f1r)");
}

// ---------------------------------------------------------------------------

namespace {

/// Gold-aligned view of the predictions; validates qids.
std::vector<const Prediction*> align(const std::vector<Prediction>& preds, const std::vector<QuestionRecord>& gold) {
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < gold.size(); ++i)
        if (!index.emplace(gold[i].qid, i).second) throw DataError("duplicate gold qid '" + gold[i].qid + "'");
    std::vector<const Prediction*> out(gold.size(), nullptr);
    for (const auto& p : preds) {
        auto it = index.find(p.qid);
        if (it == index.end()) throw DataError("prediction for unknown qid '" + p.qid + "'");
        if (out[it->second]) throw DataError("duplicate prediction qid '" + p.qid + "'");
        out[it->second] = &p;
    }
    return out;
}

EvalRow score_row(const Prediction* pred, const QuestionRecord& g, const std::optional<Thresholds>& t) {
    EvalRow row;
    row.qid = g.qid;
    row.status = g.status;
    row.scenario = g.scenario;
    if (!g.causes.empty()) row.cause = g.causes.front();
    Prediction p;
    if (pred) {
        p = *pred;
        if (t && forced_by(p, *t)) {
            row.forced = true;
            p = apply_thresholds(std::move(p), *t);
        }
    } else {
        row.missing = true;
    }
    auto e = em(p.lf, g.current_lf);
    row.em = e.value;
    row.unparseable = e.unparseable;
    auto prf = answer_prf(p.answers, g.current_answers);
    row.precision = prf.precision;
    row.recall = prf.recall;
    row.f1_regular = prf.f1;
    row.f1_lenient = lenient_f1(p.answers, g.current_answers, g.ideal_answers);
    return row;
}

EvalReport assemble(std::vector<EvalRow> rows, const std::optional<Thresholds>& t) {
    EvalReport report;
    report.thresholds = t;
    std::vector<std::pair<std::string, std::vector<const EvalRow*>>> groups = {
        {"all", {}}, {"answerable", {}}, {"unanswerable", {}}, {"iid", {}}, {"partial_zero_shot", {}},
        {"full_zero_shot", {}}};
    for (Cause c : kAllCauses) groups.emplace_back(std::string(to_string(c)), std::vector<const EvalRow*>{});
    auto find = [&](std::string_view name) -> std::vector<const EvalRow*>& {
        for (auto& [n, members] : groups)
            if (n == name) return members;
        throw std::logic_error("unknown group");
    };
    for (const auto& r : rows) {
        report.missing += r.missing;
        report.unparseable += r.unparseable;
        report.forced += r.forced;
        find("all").push_back(&r);
        if (r.status == Status::Answerable) {
            find("answerable").push_back(&r);
            continue;
        }
        find("unanswerable").push_back(&r);
        if (r.scenario != Scenario::NotApplicable)
            find(to_string(r.scenario)).push_back(&r);
        else
            find("iid").push_back(&r);  // unsplit data: every question is in-distribution
        if (r.cause) find(to_string(*r.cause)).push_back(&r);
    }
    for (const auto& [name, members] : groups) {
        Aggregate a;
        a.count = members.size();
        for (const auto* r : members) {
            a.em += r->em;
            a.f1_regular += r->f1_regular;
            a.f1_lenient += r->f1_lenient;
        }
        if (a.count) {
            const double scale = 100.0 / static_cast<double>(a.count);
            a.em *= scale;
            a.f1_regular *= scale;
            a.f1_lenient *= scale;
        }
        report.groups.emplace_back(name, a);
    }
    report.rows = std::move(rows);
    return report;
}

}  // namespace

const Aggregate& EvalReport::group(std::string_view name) const {
    for (const auto& [n, a] : groups)
        if (n == name) return a;
    throw std::out_of_range("no report group '" + std::string(name) + "'");
}

EvalReport evaluate(const std::vector<Prediction>& preds, const std::vector<QuestionRecord>& gold,
                    const std::optional<Thresholds>& thresholds) {
    const auto aligned = align(preds, gold);
    std::vector<EvalRow> rows(gold.size());
    const auto n = static_cast<std::ptrdiff_t>(gold.size());
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < n; ++i) rows[i] = score_row(aligned[i], gold[i], thresholds);
    return assemble(std::move(rows), thresholds);
}

EvalReport evaluate_serial(const std::vector<Prediction>& preds, const std::vector<QuestionRecord>& gold,
                           const std::optional<Thresholds>& thresholds) {
    const auto aligned = align(preds, gold);
    std::vector<EvalRow> rows;
    rows.reserve(gold.size());
    for (std::size_t i = 0; i < gold.size(); ++i) rows.push_back(score_row(aligned[i], gold[i], thresholds));
    return assemble(std::move(rows), thresholds);
}

// ---------------------------------------------------------------------------
// Threshold tuning

namespace {

struct TuneRow {
    std::optional<double> e, l;
    double kept = 0;    // objective when the prediction stands
    double forced = 0;  // objective when forced to NK/NA
};

std::vector<TuneRow> tune_rows(const std::vector<Prediction>& preds, const std::vector<QuestionRecord>& gold,
                               Objective objective) {
    const auto aligned = align(preds, gold);
    std::vector<TuneRow> rows(gold.size());
    auto value = [&](const EvalRow& r) { return objective == Objective::EM ? double(r.em) : r.f1_regular; };
    for (std::size_t i = 0; i < gold.size(); ++i) {
        TuneRow& t = rows[i];
        Prediction refused;
        if (aligned[i]) {
            t.e = aligned[i]->entity_score;
            t.l = aligned[i]->lf_score;
            t.kept = value(score_row(aligned[i], gold[i], std::nullopt));
            refused.qid = gold[i].qid;
            t.forced = value(score_row(&refused, gold[i], std::nullopt));
        } else {
            t.kept = t.forced = value(score_row(nullptr, gold[i], std::nullopt));
        }
    }
    return rows;
}

double total(const std::vector<TuneRow>& rows, const Thresholds& t) {
    double sum = 0;
    for (const auto& r : rows) {
        bool f = (r.e && *r.e < t.entity) || (r.l && *r.l < t.lf);
        sum += f ? r.forced : r.kept;
    }
    return sum;
}

std::vector<double> grid(const std::vector<TuneRow>& rows, bool entity) {
    std::vector<double> g{-std::numeric_limits<double>::infinity()};
    for (const auto& r : rows) {
        const auto& s = entity ? r.e : r.l;
        if (s) g.push_back(*s);
    }
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    // Forcing is strict, so only a point above the top score forces every row.
    if (g.size() > 1) g.push_back(std::nextafter(g.back(), std::numeric_limits<double>::infinity()));
    return g;
}

constexpr double kTieEps = 1e-9;
constexpr std::size_t kExhaustiveBudget = 50'000'000;

}  // namespace

double objective_value(const std::vector<Prediction>& preds, const std::vector<QuestionRecord>& gold,
                       const Thresholds& t, Objective objective) {
    if (gold.empty()) return 0;
    return total(tune_rows(preds, gold, objective), t) / static_cast<double>(gold.size());
}

Thresholds tune_thresholds(const std::vector<Prediction>& preds, const std::vector<QuestionRecord>& gold,
                           Objective objective) {
    bool scored = std::any_of(preds.begin(), preds.end(),
                              [](const Prediction& p) { return p.entity_score || p.lf_score; });
    if (!scored) throw DataError("tune_thresholds: no prediction carries a score");
    const auto rows = tune_rows(preds, gold, objective);
    const auto ge = grid(rows, true);
    const auto gl = grid(rows, false);

    Thresholds best;
    double best_v = total(rows, best);
    auto consider = [&](const Thresholds& t) {
        double v = total(rows, t);
        if (v > best_v + kTieEps) {
            best_v = v;
            best = t;
        }
    };

    if (ge.size() * gl.size() * std::max<std::size_t>(rows.size(), 1) <= kExhaustiveBudget) {
        for (double e : ge)
            for (double l : gl) consider({e, l});
        return best;
    }
    // Coordinate ascent from the unthresholded point.
    for (int round = 0; round < 16; ++round) {
        const Thresholds before = best;
        for (double e : ge) consider({e, best.lf});
        for (double l : gl) consider({best.entity, l});
        if (best == before) break;
    }
    return best;
}

// ---------------------------------------------------------------------------

std::string render_report_text(const EvalReport& report) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(1);
    if (report.thresholds)
        os << "thresholds: entity=" << report.thresholds->entity << " lf=" << report.thresholds->lf << "\n\n";
    os << std::left << std::setw(20) << "Group" << std::right << std::setw(7) << "N" << std::setw(8) << "EM"
       << std::setw(8) << "F1(R)" << std::setw(8) << "F1(L)" << '\n';
    for (const auto& [name, a] : report.groups) {
        os << std::left << std::setw(20) << name << std::right << std::setw(7) << a.count;
        if (a.count == 0) {
            os << std::setw(8) << "-" << std::setw(8) << "-" << std::setw(8) << "-" << '\n';
            continue;
        }
        os << std::setw(8) << a.em << std::setw(8) << a.f1_regular << std::setw(8) << a.f1_lenient << '\n';
    }
    os << "\nmissing predictions: " << report.missing << ", unparseable forms: " << report.unparseable
       << ", forced by thresholds: " << report.forced << '\n';
    return os.str();
}

}  // namespace kbforge
