#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "acc/compiler.hpp"
#include "acc/error.hpp"
#include "acc/trajectory.hpp"

namespace acc {

inline constexpr std::string_view kToolkitVersion = "0.3.0";

struct Provenance {
    std::string trajectory_id;
    std::vector<std::string> pieces_included;
    std::vector<std::string> pieces_dropped;
    std::vector<std::size_t> permutation;

    bool operator==(const Provenance&) const = default;
};

/// One emitted training record (x = question + context, y = answer, r = rationale).
struct DatasetRecord {
    std::string example_id;
    AgentType agent_type = AgentType::Search;
    std::string question;
    std::string context;
    std::string rationale;
    std::string answer;
    std::size_t token_count = 0;
    std::uint64_t seed = 0;
    Provenance provenance;

    /// Throws InvalidArgument when the example has no rationale attached.
    static DatasetRecord from_example(const CompiledExample& example);

    bool operator==(const DatasetRecord&) const = default;
};

std::string serialize_record(const DatasetRecord& record);
DatasetRecord parse_record(std::string_view line);
std::vector<DatasetRecord> read_dataset(const std::string& path);

struct CompileFailure {
    std::string trajectory_id;
    ErrorCode code = ErrorCode::EmptyEvidence;
    std::string message;
};

/// Everything besides the records that a run writes to its manifest.
struct ManifestInfo {
    std::uint64_t seed = 0;
    std::size_t budget = kDefaultTokenBudget;
    /// Resolved run configuration, in the order it should be written.
    std::vector<std::pair<std::string, std::string>> config;
    std::string rationale_source = "trajectory";
    std::vector<ParseIssue> parse_issues;
    std::vector<CompileFailure> failures;
    std::map<AgentType, double> pass_rates;
    std::vector<std::string> rejected;
    std::vector<std::string> deferred;
};

std::string render_manifest(const std::vector<DatasetRecord>& records, const ManifestInfo& info);

/// Writes one record per line to `data_path` and the manifest (counts per
/// agent type, budget, seed, toolkit version, config) to `manifest_path`.
/// Output is byte-identical for identical inputs. Throws IOError.
void emit_dataset(const std::vector<DatasetRecord>& records, const std::string& data_path,
                  const std::string& manifest_path, const ManifestInfo& info);

struct LengthHistogram {
    /// n_bins + 1 strictly increasing edges; the final bin is right-closed.
    std::vector<double> bin_edges;
    std::map<AgentType, std::vector<std::size_t>> counts;
    std::vector<std::size_t> total;

    std::size_t n_bins() const noexcept { return total.size(); }
};

/// Equal-width bins over [min, max] token_count. Throws EmptyCorpus, or
/// InvalidArgument when n_bins == 0.
LengthHistogram length_histogram(const std::vector<DatasetRecord>& records, std::size_t n_bins);
LengthHistogram length_histogram(const std::vector<std::pair<AgentType, std::size_t>>& lengths, std::size_t n_bins);

/// Columns agent_type,bin_start,bin_end,count; per-type rows (every type
/// present in the corpus) followed by "all".
std::string histogram_csv(const LengthHistogram& hist);

/// Shortest decimal text that round-trips the value.
std::string format_number(double value);

} // namespace acc
