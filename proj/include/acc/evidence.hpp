#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "acc/token_counter.hpp"
#include "acc/trajectory.hpp"

namespace acc {

enum class PieceKind { WebPage, SourceFile, Table };
enum class PieceRole { Gold, Distractor };

std::string_view to_string(PieceKind kind) noexcept;
std::string_view to_string(PieceRole role) noexcept;

struct EvidencePiece {
    std::string piece_id;
    PieceKind kind = PieceKind::WebPage;
    std::optional<std::string> title;
    std::string content;
    PieceRole role = PieceRole::Gold;
    /// Turn that first returned (Search) the piece. Unset for snapshot pieces.
    std::optional<std::size_t> origin_turn;
    bool from_snapshot = false;
    std::size_t token_estimate = 0;

    bool operator==(const EvidencePiece&) const = default;
};

struct EvidenceSet {
    std::string trajectory_id;
    std::vector<EvidencePiece> gold;
    std::vector<EvidencePiece> distractors;
};

/// Gold = every visited observation item (first visit wins); distractors =
/// items returned but never visited in any turn. Throws EmptyEvidence.
EvidenceSet extract_search_evidence(const Trajectory& traj, const TokenCounter& counter = {});

/// Gold = snapshot files in the patch; distractors = every other snapshot
/// file, opened during debugging or not. Throws EmptyEvidence.
EvidenceSet extract_swe_evidence(const Trajectory& traj, const TokenCounter& counter = {});

/// Gold = one rendered table per queried table; no distractors. Throws
/// EmptyEvidence.
EvidenceSet extract_sql_evidence(const Trajectory& traj, const TokenCounter& counter = {});

EvidenceSet extract_evidence(const Trajectory& traj, const TokenCounter& counter = {});

/// Header line followed by one line per row, each as "| v1 | v2 | ... |".
std::string render_table(const SnapshotTable& table);

} // namespace acc
