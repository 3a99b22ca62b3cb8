#pragma once

#include <chrono>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "acc/compiler.hpp"
#include "acc/trajectory.hpp"

namespace acc {

// ---------------------------------------------------------------------------
// Answer checking

/// Lowercase, trim, strip terminal punctuation, collapse whitespace, and drop
/// one leading article (a / an / the).
std::string normalize_answer(std::string_view text);

/// One (file, sign, line) entry of a unified diff, with whitespace collapsed.
struct PatchLine {
    std::string file;
    char sign = '+';
    std::string text;

    auto operator<=>(const PatchLine&) const = default;
};

/// Added/removed lines of a unified diff. Context lines, headers, hunk
/// markers, and lines that are empty after whitespace normalization are
/// dropped. <patch> wrappers are ignored.
std::vector<PatchLine> parse_patch_lines(std::string_view diff);

/// Search: normalized exact match. SQL: normalized match with numeric tokens
/// compared at relative tolerance 1e-6. SWE: equality of the sets of changed
/// lines per file (falls back to normalized text when neither side is a diff).
bool verify_answer(std::string_view candidate, std::string_view gold, AgentType type);

inline constexpr std::string_view kDefaultAnswerMarker = "Answer:";

struct ExtractedAnswer {
    std::string rationale;
    std::string answer;
};

/// Answer = text after the last marker, else the last non-empty line.
/// Rationale = everything before it, trimmed.
ExtractedAnswer extract_answer(std::string_view output, std::string_view marker = kDefaultAnswerMarker);

// ---------------------------------------------------------------------------
// Teacher endpoint

struct DecodeParams {
    double temperature = 0.8;
    std::size_t max_tokens = 8192;
};

struct TeacherRequest {
    std::string example_id;
    /// Rendered compiled prompt, without the answer.
    std::string prompt;
    std::size_t n_candidates = 4;
    DecodeParams decode;
};

/// A source of candidate rationales. generate() throws TeacherUnavailable on
/// transport or endpoint errors; any other return value is a candidate.
class TeacherClient {
public:
    virtual ~TeacherClient() = default;
    virtual std::string generate(const TeacherRequest& request) = 0;
};

/// Offline teacher replaying scripted outputs. Script file (JSON):
///   {"default": [...], "examples": {"<example_id>": ["output", null, ...]}}
/// The i-th call for an example returns entry i (the last entry repeats);
/// null entries simulate an endpoint failure.
class StubTeacher final : public TeacherClient {
public:
    using Script = std::vector<std::optional<std::string>>;

    StubTeacher(std::unordered_map<std::string, Script> per_example, Script fallback = {});
    static std::unique_ptr<StubTeacher> from_file(const std::string& path);

    std::string generate(const TeacherRequest& request) override;
    std::size_t calls(const std::string& example_id) const;

private:
    std::unordered_map<std::string, Script> scripts_;
    Script fallback_;
    mutable std::mutex mutex_;
    std::unordered_map<std::string, std::size_t> calls_;
};

struct HttpTeacherConfig {
    /// Full chat-completions URL, e.g. http://host:8000/v1/chat/completions.
    std::string url;
    std::string model = "teacher";
    /// Bearer token; empty means "read ACC_TEACHER_TOKEN".
    std::string token;
    std::chrono::seconds timeout{600};
};

/// Chat-completion client: POSTs {"model", "messages", "temperature",
/// "max_tokens"} and reads choices[0].message.content.
class HttpTeacher final : public TeacherClient {
public:
    explicit HttpTeacher(HttpTeacherConfig config);
    std::string generate(const TeacherRequest& request) override;

private:
    HttpTeacherConfig config_;
    std::string scheme_host_port_;
    std::string path_;
};

/// "stub:<script>" builds a StubTeacher, anything else an HttpTeacher.
std::unique_ptr<TeacherClient> make_teacher(const std::string& target);

// ---------------------------------------------------------------------------
// Verification

struct VerificationResult {
    std::string example_id;
    AgentType agent_type = AgentType::Search;
    std::size_t candidates_tried = 0;
    std::optional<std::string> retained_rationale;
    bool passed = false;
    /// The teacher stayed unavailable after bounded retries; not a failure.
    bool deferred = false;
};

struct VerifyOptions {
    std::size_t n_candidates = 4;
    DecodeParams decode;
    std::string answer_marker = std::string(kDefaultAnswerMarker);
    std::size_t max_attempts = 3;
    std::chrono::milliseconds backoff{500};
};

/// Requests up to n candidates and keeps the first whose extracted answer
/// verifies against the example's answer. On success the example's rationale
/// is set.
VerificationResult attach_rationale(CompiledExample& example, TeacherClient& teacher, const VerifyOptions& options = {});

/// attach_rationale over a batch with at most `in_flight` concurrent teacher
/// calls; results are returned in input order.
std::vector<VerificationResult> attach_rationales(std::vector<CompiledExample>& examples, TeacherClient& teacher,
                                                  const VerifyOptions& options, std::size_t in_flight);

/// passed / total per agent type; deferred results are not counted and types
/// with no counted results are absent.
std::map<AgentType, double> pass_rate_report(const std::vector<VerificationResult>& results);

} // namespace acc
