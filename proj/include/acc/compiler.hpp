#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "acc/evidence.hpp"
#include "acc/token_counter.hpp"
#include "acc/trajectory.hpp"

namespace acc {

inline constexpr std::size_t kDefaultTokenBudget = 131'072;

inline constexpr std::string_view kSearchInstruction =
    "Please reason based on the following documents and answer the question.";

struct DistractorPolicy {
    enum class Kind { KeepAll, DropAll, Max };
    Kind kind = Kind::KeepAll;
    std::size_t max = 0;

    static DistractorPolicy keep_all() { return {}; }
    static DistractorPolicy drop_all() { return {Kind::DropAll, 0}; }
    static DistractorPolicy at_most(std::size_t n) { return {Kind::Max, n}; }

    /// "keep" | "keep-all" | "drop" | "drop-all" | "max:N".
    static DistractorPolicy parse(std::string_view text);
    std::string to_string() const;

    bool operator==(const DistractorPolicy&) const = default;
};

struct CompileOptions {
    std::uint64_t seed = 0;
    std::size_t budget = kDefaultTokenBudget;
    DistractorPolicy policy;
    /// Overrides the prompt framing; defaults to the evidence's agent type.
    std::optional<AgentType> layout;
    TokenCounter counter;
};

/// One compiled training example x = (question, context), y = answer, plus
/// everything needed to reproduce it.
struct CompiledExample {
    std::string example_id;
    std::string question;
    /// Evidence blocks in permuted order, separated by one blank line.
    std::string context;
    std::string answer;
    std::optional<std::string> rationale;
    AgentType agent_type = AgentType::Search;
    AgentType layout = AgentType::Search;
    /// permutation[j] = 1-based index into pieces_included of the piece
    /// rendered at position j.
    std::vector<std::size_t> permutation;
    /// Canonical order: gold first (extraction order), then kept distractors.
    std::vector<std::string> pieces_included;
    std::vector<std::string> pieces_dropped;
    std::size_t gold_count = 0;
    std::size_t token_count = 0;
    std::uint64_t seed = 0;
    std::size_t budget = kDefaultTokenBudget;
};

/// Selects gold plus policy-admitted distractors, drops distractors from the
/// latest permuted position until the estimate fits the budget, and renders
/// the surviving pieces in permuted order. Throws BudgetExceeded when the
/// gold pieces alone do not fit, InvalidArgument on an empty gold set or a
/// zero budget.
CompiledExample compile_context(const EvidenceSet& evidence, AgentType agent_type, std::string_view question,
                                std::string_view answer, const CompileOptions& options);

/// Convenience: extract + compile with seed = example_seed(options.seed, id).
CompiledExample compile_trajectory(const Trajectory& traj, const CompileOptions& options);

/// The "[Doc id] ..." / "[File path] ..." / "[Table: name]\n..." block for a piece.
std::string render_block(const EvidencePiece& piece);

enum class AnswerMode { Omit, Include };

/// Question, then the framed context. With AnswerMode::Include the answer is
/// appended after one blank line as "Answer: ...".
std::string render_prompt(const CompiledExample& example, AnswerMode mode = AnswerMode::Omit);

} // namespace acc
