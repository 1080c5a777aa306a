#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "kbforge/degrader.hpp"
#include "kbforge/evaluator.hpp"
#include "kbforge/kb_io.hpp"
#include "kbforge/splitter.hpp"

namespace kbforge {

using Json = nlohmann::ordered_json;

// Dataset JSON lines. Every record carries format_version. A record with no
// status is an input question: its s_expression and answers are the ideal
// ones. Answers are rendered terms (entity ids or "v"^^kind literals); the
// strings "NK" and "NA" stand for a missing form and a missing answer set.

Json record_to_json(const QuestionRecord& r);
/// `is_type` resolves bare atoms of both forms; pass the ideal KB's types.
QuestionRecord record_from_json(const Json& j, const TypeResolver& is_type);

std::vector<QuestionRecord> read_dataset(std::istream& in, const TypeResolver& is_type,
                                         const std::string& source = "dataset");
std::vector<QuestionRecord> read_dataset(const std::filesystem::path& path, const TypeResolver& is_type);
void write_dataset(std::ostream& out, const std::vector<QuestionRecord>& records);
void write_dataset(const std::filesystem::path& path, const std::vector<QuestionRecord>& records);

Json drop_entry_to_json(const DropLogEntry& e);
DropLogEntry drop_entry_from_json(const Json& j);
std::vector<DropLogEntry> read_drop_log(std::istream& in, const std::string& source = "drop_log");
std::vector<DropLogEntry> read_drop_log(const std::filesystem::path& path);
void write_drop_log(std::ostream& out, const std::vector<DropLogEntry>& log);

Json prediction_to_json(const Prediction& p);
Prediction prediction_from_json(const Json& j);
std::vector<Prediction> read_predictions(std::istream& in, const std::string& source = "predictions");
std::vector<Prediction> read_predictions(const std::filesystem::path& path);
void write_predictions(std::ostream& out, const std::vector<Prediction>& preds);

Json phases_to_json(const DegradeState& state, const DegradeConfig& config);
Json manifest_to_json(const DatasetSplits& splits, const SplitConfig& config);
Json stats_to_json(const StatsReport& report);
Json report_to_json(const EvalReport& report);

/// Whole file as a string; throws DataError when it cannot be opened.
std::string read_file(const std::filesystem::path& path);

}  // namespace kbforge
