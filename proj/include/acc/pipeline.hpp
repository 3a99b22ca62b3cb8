#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "acc/compiler.hpp"
#include "acc/dataset.hpp"
#include "acc/trajectory.hpp"
#include "acc/verifier.hpp"

namespace acc {

/// Resolved settings for one compile run.
struct CompileRunConfig {
    std::string input;
    std::string out_dir;
    std::uint64_t seed = 0;
    std::size_t budget = kDefaultTokenBudget;
    DistractorPolicy policy;
    /// Used when a record carries no agent_type.
    std::optional<AgentType> agent_type;
    /// Prompt framing override; empty follows each trajectory's agent type.
    std::optional<AgentType> layout;
    /// "stub:<script>" or an endpoint URL; empty keeps the trajectory's own
    /// final reasoning as the rationale.
    std::optional<std::string> teacher;
    std::size_t n_candidates = 4;
    bool strict = false;
    bool derive_missing_flags = false;
    std::size_t jobs = 1;
    std::optional<std::string> token_table;
    std::size_t histogram_bins = 32;
};

struct CompileRunResult {
    std::vector<DatasetRecord> records;
    ManifestInfo manifest;
    /// Skipped records, compile failures, and deferred verifications.
    std::size_t warnings = 0;
};

/// The configuration as written to the manifest (output paths and worker
/// count are left out so reruns elsewhere stay byte-identical).
std::vector<std::pair<std::string, std::string>> describe_config(const CompileRunConfig& config);

/// extract -> compile -> (optional) verify over already-parsed trajectories.
/// Record order follows input order. In strict mode the first compile
/// failure is rethrown.
CompileRunResult compile_corpus(const ParseResult& parsed, const CompileRunConfig& config,
                                TeacherClient* teacher = nullptr);

/// Full run: parses config.input and writes dataset.jsonl, manifest.json and
/// histogram.csv under config.out_dir.
CompileRunResult run_compile(const CompileRunConfig& config);

} // namespace acc
