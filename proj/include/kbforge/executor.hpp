#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "kbforge/kb.hpp"
#include "kbforge/logical_form.hpp"

namespace kbforge {

using AnswerSet = std::set<Term>;

/// Thrown by execute() for invalid forms and type errors during evaluation.
class ExecutionError : public DataError {
public:
    using DataError::DataError;
};

/// Result of running a logical form: each answer with the facts supporting it.
struct Execution {
    /// answer -> union of the grounded facts over all of its derivations.
    std::map<Term, FactSet> support;
    /// Set when the form is a COUNT; zero counts leave `support` empty.
    std::optional<std::size_t> count;

    bool empty() const { return support.empty(); }
    AnswerSet answers() const;
    /// Union of every answer's support.
    FactSet all_support() const;

    bool operator==(const Execution&) const = default;
};

struct ValidityReport {
    bool valid = true;
    /// Cited elements absent from the KB, in document order.
    std::vector<ElementRef> missing;
};

ValidityReport validate(const LogicalForm& lf, const KnowledgeBase& kb);

/// Evaluates `lf` over `kb`. Throws ExecutionError when the form cites missing
/// elements or compares incompatible literals.
Execution execute(const LogicalForm& lf, const KnowledgeBase& kb);

/// One entry per input form; `error` holds the message when execution threw.
struct BatchResult {
    Execution execution;
    std::optional<std::string> error;
};

/// Executes every form against one immutable KB, in parallel when OpenMP is
/// available. Output order matches input order.
std::vector<BatchResult> execute_batch(std::span<const LogicalForm> forms, const KnowledgeBase& kb);

/// Single-threaded reference for execute_batch.
std::vector<BatchResult> execute_batch_serial(std::span<const LogicalForm> forms, const KnowledgeBase& kb);

}  // namespace kbforge
