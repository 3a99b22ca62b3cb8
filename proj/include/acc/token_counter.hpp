#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>

namespace acc {

/// max(ceil(bytes / 4), whitespace-delimited words). An upper-bound style
/// estimate; count("") == 0.
std::size_t approximate_token_count(std::string_view text) noexcept;

enum class TokenCounterMode { Approximate, External };

/// Token counting for budget decisions. In External mode evidence pieces are
/// looked up in a sidecar table (exact counts from a real tokenizer); pieces
/// missing from the table, and all template text, fall back to the
/// approximate counter.
class TokenCounter {
public:
    TokenCounter() = default;

    /// Table keys are either "<piece_id>" or "<trajectory_id>\x1f<piece_id>".
    static TokenCounter external(std::unordered_map<std::string, std::size_t> table);
    /// Reads one {"piece_id", "token_count"[, "trajectory_id"]} record per line.
    static TokenCounter from_sidecar(const std::string& path);

    TokenCounterMode mode() const noexcept { return mode_; }

    std::size_t count(std::string_view text) const noexcept { return approximate_token_count(text); }
    std::size_t count_piece(std::string_view trajectory_id, std::string_view piece_id,
                            std::string_view content) const;

private:
    TokenCounterMode mode_ = TokenCounterMode::Approximate;
    std::shared_ptr<const std::unordered_map<std::string, std::size_t>> table_;
};

} // namespace acc
