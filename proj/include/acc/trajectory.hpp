#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "acc/error.hpp"

namespace acc {

enum class AgentType { Search, SWE, SQL };

std::string_view to_string(AgentType type) noexcept;
/// Case-insensitive; accepts "search", "swe", "sql".
std::optional<AgentType> parse_agent_type(std::string_view text);

enum class ActionKind { SearchQuery, VisitDoc, OpenFile, ModifyFile, ExecuteSQL, Other };

std::string_view to_string(ActionKind kind) noexcept;
std::optional<ActionKind> parse_action_kind(std::string_view text);

struct Action {
    ActionKind kind = ActionKind::Other;
    std::string payload;

    bool operator==(const Action&) const = default;
};

struct ObsItem {
    std::string item_id;
    std::optional<std::string> title;
    std::string content;
    bool visited = false;

    bool operator==(const ObsItem&) const = default;
};

struct Observation {
    std::vector<ObsItem> items;

    bool operator==(const Observation&) const = default;
};

struct InteractionTurn {
    std::size_t index = 0;
    std::string reasoning;
    Action action;
    Observation observation;

    bool operator==(const InteractionTurn&) const = default;
};

struct SnapshotFile {
    std::string path;
    std::string content;
    bool opened = false;
    bool in_patch = false;

    bool operator==(const SnapshotFile&) const = default;
};

struct SnapshotTable {
    std::string name;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    bool queried = false;

    bool operator==(const SnapshotTable&) const = default;
};

struct EnvironmentSnapshot {
    std::vector<SnapshotFile> files;
    std::vector<SnapshotTable> tables;

    bool operator==(const EnvironmentSnapshot&) const = default;
};

/// One agent episode: question, k-1 interaction turns, and the final
/// (reasoning, answer) pair. k == turns.size() + 1.
struct Trajectory {
    std::string id;
    AgentType agent_type = AgentType::Search;
    std::string question;
    std::vector<InteractionTurn> turns;
    std::string final_reasoning;
    std::string final_answer;
    std::optional<EnvironmentSnapshot> env;

    std::size_t k() const noexcept { return turns.size() + 1; }

    bool operator==(const Trajectory&) const = default;
};

/// The history H_{<t}: the turns strictly before turn t (1-based).
std::vector<InteractionTurn> history_before(const Trajectory& traj, std::size_t t);

/// Returns the trajectory unchanged if every invariant holds, otherwise throws
/// MissingFinalAnswer, NonContiguousTurns, DuplicateItemId or ArityMismatch.
Trajectory validate_trajectory(Trajectory raw);

enum class Strictness { Lenient, Strict };

struct ParseOptions {
    std::optional<AgentType> agent_type_hint;
    Strictness strictness = Strictness::Lenient;
    /// When visited/opened/in_patch/queried flags are absent, infer them from
    /// VisitDoc / OpenFile / ModifyFile / ExecuteSQL actions instead of failing.
    bool derive_missing_flags = false;
    std::size_t jobs = 1;
};

struct ParseIssue {
    std::size_t line = 0;
    ErrorCode code = ErrorCode::SchemaError;
    std::string message;
};

struct ParseResult {
    std::vector<Trajectory> trajectories;
    std::vector<ParseIssue> issues;
};

/// Parses one trajectory per line; blank lines are ignored. In strict mode the
/// first bad record throws with its line number; in lenient mode it is
/// skipped and reported in `issues`. Output order equals input order.
ParseResult parse_trajectories(std::string_view input, const ParseOptions& options = {});
ParseResult parse_trajectory_file(const std::string& path, const ParseOptions& options = {});

/// Parses a single record (no validation of cross-field invariants beyond the
/// schema). Throws Error on failure.
Trajectory parse_trajectory_record(std::string_view line, const ParseOptions& options = {});

/// Serializes to a single line in the wire schema (no trailing newline).
std::string serialize_trajectory(const Trajectory& traj);

} // namespace acc
