#include "kbforge/dataset_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace kbforge {

namespace {

constexpr const char* kNK = "NK";
constexpr const char* kNA = "NA";

Json answers_json(const std::optional<AnswerSet>& a) {
    if (!a) return kNA;
    Json out = Json::array();
    for (const auto& t : *a) out.push_back(render_term(t));
    return out;
}

std::optional<AnswerSet> answers_from(const Json& j, const char* field) {
    if (j.is_string() && j.get<std::string>() == kNA) return std::nullopt;
    if (!j.is_array()) throw DataError(std::string(field) + " must be a list or \"NA\"");
    AnswerSet out;
    for (const auto& v : j) {
        if (v.is_number_integer()) {
            out.insert(Term::of(make_literal(std::to_string(v.get<long long>()), LiteralKind::Integer)));
        } else if (v.is_string()) {
            out.insert(parse_term(v.get<std::string>()));
        } else {
            throw DataError(std::string(field) + " entries must be strings");
        }
    }
    return out;
}

std::optional<LogicalForm> lf_from(const Json& j, const char* field, const TypeResolver& is_type) {
    if (!j.is_string()) throw DataError(std::string(field) + " must be a string");
    auto s = j.get<std::string>();
    if (s == kNK) return std::nullopt;
    return parse(s, is_type);
}

const Json& need(const Json& j, const char* field) {
    auto it = j.find(field);
    if (it == j.end()) throw DataError(std::string("missing field '") + field + "'");
    return *it;
}

void check_version(const Json& j) {
    auto it = j.find("format_version");
    if (it != j.end() && (!it->is_number_integer() || it->get<int>() != kFormatVersion))
        throw DataError("unsupported format_version " + it->dump());
}

template <typename T, typename F>
std::vector<T> read_lines(std::istream& in, const std::string& source, F&& convert) {
    std::vector<T> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            Json j = Json::parse(line);
            if (!j.is_object()) throw DataError("expected a JSON object");
            check_version(j);
            out.push_back(convert(j));
        } catch (const Json::exception& e) {
            throw DataError(source + ":" + std::to_string(n) + ": " + e.what());
        } catch (const std::exception& e) {
            throw DataError(source + ":" + std::to_string(n) + ": " + e.what());
        }
    }
    return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    return in;
}

Json fact_json(const Fact& f) { return Json::array({f.subject, f.relation, render_term(f.object)}); }

Fact fact_from(const Json& j) {
    if (!j.is_array() || j.size() != 3) throw DataError("fact must be [subject, relation, object]");
    return Fact{j[0].get<std::string>(), j[1].get<std::string>(), parse_term(j[2].get<std::string>())};
}

Json threshold_json(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

}  // namespace

std::string read_file(const std::filesystem::path& path) {
    auto in = open_in(path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// ---------------------------------------------------------------------------
// Dataset

Json record_to_json(const QuestionRecord& r) {
    Json j;
    j["format_version"] = kFormatVersion;
    j["qid"] = r.qid;
    j["question"] = r.question;
    j["s_expression"] = r.current_lf ? Json(render(*r.current_lf)) : Json(kNK);
    j["answers"] = answers_json(r.current_answers);
    j["status"] = to_string(r.status);
    Json causes = Json::array();
    for (Cause c : r.causes) causes.push_back(to_string(c));
    j["causes"] = causes;
    j["scenario"] = to_string(r.scenario);
    j["ideal_s_expression"] = render(r.ideal_lf);
    j["ideal_answers"] = answers_json(r.ideal_answers);
    j["ideal_not_for_training"] = true;
    return j;
}

QuestionRecord record_from_json(const Json& j, const TypeResolver& is_type) {
    QuestionRecord r;
    r.qid = need(j, "qid").get<std::string>();
    if (r.qid.empty()) throw DataError("empty qid");
    if (auto it = j.find("question"); it != j.end()) r.question = it->get<std::string>();
    r.current_lf = lf_from(need(j, "s_expression"), "s_expression", is_type);
    r.current_answers = answers_from(need(j, "answers"), "answers");
    if (auto it = j.find("status"); it != j.end()) r.status = status_from_string(it->get<std::string>());
    if (auto it = j.find("causes"); it != j.end())
        for (const auto& c : *it) r.causes.push_back(cause_from_string(c.get<std::string>()));
    if (auto it = j.find("scenario"); it != j.end()) r.scenario = scenario_from_string(it->get<std::string>());

    auto ideal_lf = j.find("ideal_s_expression");
    auto ideal_ans = j.find("ideal_answers");
    if (ideal_lf != j.end()) {
        auto lf = lf_from(*ideal_lf, "ideal_s_expression", is_type);
        if (!lf) throw DataError("ideal_s_expression cannot be NK");
        r.ideal_lf = std::move(*lf);
    } else if (r.current_lf) {
        r.ideal_lf = *r.current_lf;
    } else {
        throw DataError("record without a form needs ideal_s_expression");
    }
    if (ideal_ans != j.end()) {
        auto a = answers_from(*ideal_ans, "ideal_answers");
        if (!a) throw DataError("ideal_answers cannot be NA");
        r.ideal_answers = std::move(*a);
    } else if (r.current_answers) {
        r.ideal_answers = *r.current_answers;
    } else {
        throw DataError("record without answers needs ideal_answers");
    }
    if (r.is_nk() && !r.is_na()) throw DataError("an NK record must have NA answers");
    return r;
}

std::vector<QuestionRecord> read_dataset(std::istream& in, const TypeResolver& is_type, const std::string& source) {
    return read_lines<QuestionRecord>(in, source, [&](const Json& j) { return record_from_json(j, is_type); });
}

std::vector<QuestionRecord> read_dataset(const std::filesystem::path& path, const TypeResolver& is_type) {
    auto in = open_in(path);
    return read_dataset(in, is_type, path.filename().string());
}

void write_dataset(std::ostream& out, const std::vector<QuestionRecord>& records) {
    for (const auto& r : records) out << record_to_json(r).dump() << '\n';
}

void write_dataset(const std::filesystem::path& path, const std::vector<QuestionRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    write_dataset(out, records);
}

// ---------------------------------------------------------------------------
// Drop log

Json drop_entry_to_json(const DropLogEntry& e) {
    Json j;
    j["format_version"] = kFormatVersion;
    j["step"] = e.step;
    j["cause"] = to_string(e.cause);
    const auto& root = e.cascade.root;
    j["kind"] = to_string(root.kind);
    if (root.kind == ElementKind::Fact)
        j["fact"] = fact_json(root.fact);
    else
        j["id"] = root.id;
    j["cascade_sizes"] = {{"facts", e.cascade.removed_facts.size()},
                          {"entities", e.cascade.removed_entities.size()},
                          {"relations", e.cascade.removed_relations.size()},
                          {"types", e.cascade.removed_types.size()}};
    Json facts = Json::array();
    for (const auto& f : e.cascade.removed_facts) facts.push_back(fact_json(f));
    j["removed_facts"] = facts;
    j["removed_entities"] = e.cascade.removed_entities;
    j["removed_relations"] = e.cascade.removed_relations;
    j["removed_types"] = e.cascade.removed_types;
    j["newly_unanswerable"] = e.newly_unanswerable;
    j["affected"] = e.affected;
    return j;
}

DropLogEntry drop_entry_from_json(const Json& j) {
    DropLogEntry e;
    e.step = need(j, "step").get<std::size_t>();
    e.cause = cause_from_string(need(j, "cause").get<std::string>());
    auto kind = need(j, "kind").get<std::string>();
    if (kind == "type")
        e.cascade.root = ElementRef::type(need(j, "id").get<std::string>());
    else if (kind == "relation")
        e.cascade.root = ElementRef::relation(need(j, "id").get<std::string>());
    else if (kind == "entity")
        e.cascade.root = ElementRef::entity(need(j, "id").get<std::string>());
    else if (kind == "fact")
        e.cascade.root = ElementRef::of(fact_from(need(j, "fact")));
    else
        throw DataError("unknown element kind '" + kind + "'");
    for (const auto& f : need(j, "removed_facts")) e.cascade.removed_facts.push_back(fact_from(f));
    e.cascade.removed_entities = need(j, "removed_entities").get<std::vector<std::string>>();
    e.cascade.removed_relations = need(j, "removed_relations").get<std::vector<std::string>>();
    e.cascade.removed_types = need(j, "removed_types").get<std::vector<std::string>>();
    e.newly_unanswerable = need(j, "newly_unanswerable").get<std::vector<std::string>>();
    e.affected = need(j, "affected").get<std::vector<std::string>>();
    return e;
}

std::vector<DropLogEntry> read_drop_log(std::istream& in, const std::string& source) {
    return read_lines<DropLogEntry>(in, source, drop_entry_from_json);
}

std::vector<DropLogEntry> read_drop_log(const std::filesystem::path& path) {
    auto in = open_in(path);
    return read_drop_log(in, path.filename().string());
}

void write_drop_log(std::ostream& out, const std::vector<DropLogEntry>& log) {
    for (const auto& e : log) out << drop_entry_to_json(e).dump() << '\n';
}

// ---------------------------------------------------------------------------
// Predictions

Json prediction_to_json(const Prediction& p) {
    Json j;
    j["format_version"] = kFormatVersion;
    j["qid"] = p.qid;
    j["s_expression"] = p.lf ? Json(*p.lf) : Json(kNK);
    j["answers"] = answers_json(p.answers);
    if (p.entity_score) j["entity_score"] = *p.entity_score;
    if (p.lf_score) j["lf_score"] = *p.lf_score;
    return j;
}

Prediction prediction_from_json(const Json& j) {
    Prediction p;
    p.qid = need(j, "qid").get<std::string>();
    const auto& lf = need(j, "s_expression");
    if (!lf.is_string()) throw DataError("s_expression must be a string");
    if (lf.get<std::string>() != kNK) p.lf = lf.get<std::string>();
    p.answers = answers_from(need(j, "answers"), "answers");
    if (!p.lf && p.answers) throw DataError("an NK prediction must have NA answers");
    for (auto [field, slot] : {std::pair{"entity_score", &p.entity_score}, std::pair{"lf_score", &p.lf_score}}) {
        auto it = j.find(field);
        if (it == j.end() || it->is_null()) continue;
        if (!it->is_number()) throw DataError(std::string(field) + " must be a number");
        double v = it->get<double>();
        if (!std::isfinite(v)) throw DataError(std::string(field) + " must be finite");
        *slot = v;
    }
    return p;
}

std::vector<Prediction> read_predictions(std::istream& in, const std::string& source) {
    return read_lines<Prediction>(in, source, prediction_from_json);
}

std::vector<Prediction> read_predictions(const std::filesystem::path& path) {
    auto in = open_in(path);
    return read_predictions(in, path.filename().string());
}

void write_predictions(std::ostream& out, const std::vector<Prediction>& preds) {
    for (const auto& p : preds) out << prediction_to_json(p).dump() << '\n';
}

// ---------------------------------------------------------------------------
// Summaries and reports

Json phases_to_json(const DegradeState& state, const DegradeConfig& config) {
    const double n = std::max<double>(1.0, static_cast<double>(state.questions().size()));
    Json j;
    j["format_version"] = kFormatVersion;
    j["seed"] = config.seed;
    j["questions"] = state.questions().size();
    j["target_unanswerable_fraction"] = config.target_unanswerable_fraction;
    j["achieved_unanswerable_fraction"] = static_cast<double>(state.unanswerable_count()) / n;
    j["unanswerable"] = state.unanswerable_count();
    j["drops"] = state.drop_log().size();
    Json phases = Json::array();
    for (const auto& p : state.phases()) {
        Json ph;
        ph["cause"] = to_string(p.cause);
        ph["target_fraction"] = p.target_fraction;
        ph["target_count"] = p.target_count;
        ph["achieved"] = p.achieved;
        ph["achieved_fraction"] = static_cast<double>(p.achieved) / n;
        ph["drops"] = p.drops;
        ph["rejected"] = p.rejected;
        ph["reached"] = p.reached;
        ph["audit_mismatches"] = p.audit_mismatches;
        if (!p.warning.empty()) ph["warning"] = p.warning;
        phases.push_back(ph);
    }
    j["phases"] = phases;
    const auto& kb = state.kb();
    j["degraded_kb"] = {{"types", kb.types().size()},
                        {"relations", kb.relations().size()},
                        {"entities", kb.entities().size()},
                        {"facts", kb.facts().size()}};
    return j;
}

Json manifest_to_json(const DatasetSplits& splits, const SplitConfig& config) {
    Json j;
    j["format_version"] = kFormatVersion;
    j["seed"] = config.seed;
    j["sizes"] = {{"train", splits.train.size()}, {"dev", splits.dev.size()}, {"test", splits.test.size()}};
    Json zs = Json::array();
    for (const auto& e : splits.zero_shot_elements) zs.push_back(render_element(e));
    j["zero_shot_elements"] = zs;
    j["removed_for_leakage"] = splits.removed_for_leakage;
    j["path_contained"] = splits.path_contained;
    Json figures;
    for (const auto& [name, f] : splits.figures) figures[name] = {{"target", f.target}, {"achieved", f.achieved}};
    j["figures"] = figures;
    j["warnings"] = splits.warnings;
    return j;
}

Json stats_to_json(const StatsReport& report) {
    Json j;
    j["format_version"] = kFormatVersion;
    Json labels;
    for (const auto& [name, c] : report.labels) labels[name] = {{"A", c.answerable}, {"NK", c.nk}, {"NA", c.na}};
    j["labels"] = labels;
    Json cells;
    for (const auto& [name, m] : report.cells) {
        Json row;
        for (const char* cell : kStatsCells) row[cell] = m.at(cell);
        cells[name] = row;
    }
    j["cells"] = cells;
    j["outside_table"] = report.outside_table;
    return j;
}

Json report_to_json(const EvalReport& report) {
    Json j;
    j["format_version"] = kFormatVersion;
    if (report.thresholds)
        j["thresholds"] = {{"entity", threshold_json(report.thresholds->entity)},
                           {"lf", threshold_json(report.thresholds->lf)}};
    Json groups;
    for (const auto& [name, a] : report.groups)
        groups[name] = {{"count", a.count}, {"em", a.em}, {"f1_regular", a.f1_regular}, {"f1_lenient", a.f1_lenient}};
    j["groups"] = groups;
    j["missing"] = report.missing;
    j["unparseable"] = report.unparseable;
    j["forced"] = report.forced;
    Json rows = Json::array();
    for (const auto& r : report.rows) {
        Json row;
        row["qid"] = r.qid;
        row["status"] = to_string(r.status);
        row["scenario"] = to_string(r.scenario);
        row["cause"] = r.cause ? Json(std::string(to_string(*r.cause))) : Json(nullptr);
        row["em"] = r.em;
        row["precision"] = r.precision;
        row["recall"] = r.recall;
        row["f1_regular"] = r.f1_regular;
        row["f1_lenient"] = r.f1_lenient;
        if (r.forced) row["forced"] = true;
        if (r.missing) row["missing"] = true;
        if (r.unparseable) row["unparseable"] = true;
        rows.push_back(row);
    }
    j["rows"] = rows;
    return j;
}

}  // namespace kbforge
