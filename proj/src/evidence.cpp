#include "acc/evidence.hpp"

#include <unordered_set>

#include "acc/error.hpp"

namespace acc {

std::string_view to_string(PieceKind kind) noexcept {
    switch (kind) {
    case PieceKind::WebPage: return "WebPage";
    case PieceKind::SourceFile: return "SourceFile";
    case PieceKind::Table: return "Table";
    }
    return "WebPage";
}

std::string_view to_string(PieceRole role) noexcept {
    return role == PieceRole::Gold ? "Gold" : "Distractor";
}

namespace {

void require_type(const Trajectory& traj, AgentType expected) {
    if (traj.agent_type != expected)
        throw Error(ErrorCode::AgentTypeMismatch, "trajectory '" + traj.id + "' is " +
                                                      std::string(to_string(traj.agent_type)) + ", expected " +
                                                      std::string(to_string(expected)));
}

[[noreturn]] void empty_evidence(const Trajectory& traj, std::string_view why) {
    throw Error(ErrorCode::EmptyEvidence, "trajectory '" + traj.id + "': " + std::string(why));
}

} // namespace

EvidenceSet extract_search_evidence(const Trajectory& traj, const TokenCounter& counter) {
    require_type(traj, AgentType::Search);
    EvidenceSet set{traj.id, {}, {}};

    std::unordered_set<std::string> visited_ids;
    for (const auto& turn : traj.turns)
        for (const auto& item : turn.observation.items)
            if (item.visited) visited_ids.insert(item.item_id);

    std::unordered_set<std::string> emitted;
    for (const auto& turn : traj.turns) {
        for (const auto& item : turn.observation.items) {
            bool gold = visited_ids.contains(item.item_id);
            // A gold piece takes its content from a visiting turn, not from an
            // earlier unvisited listing of the same document.
            if (gold && !item.visited) continue;
            if (!emitted.insert(item.item_id).second) continue;
            EvidencePiece piece;
            piece.piece_id = item.item_id;
            piece.kind = PieceKind::WebPage;
            piece.title = item.title;
            piece.content = item.content;
            piece.role = gold ? PieceRole::Gold : PieceRole::Distractor;
            piece.origin_turn = turn.index;
            piece.token_estimate = counter.count_piece(traj.id, piece.piece_id, piece.content);
            (gold ? set.gold : set.distractors).push_back(std::move(piece));
        }
    }
    if (set.gold.empty()) empty_evidence(traj, "no visited documents");
    return set;
}

EvidenceSet extract_swe_evidence(const Trajectory& traj, const TokenCounter& counter) {
    require_type(traj, AgentType::SWE);
    if (!traj.env) empty_evidence(traj, "no codebase snapshot");
    EvidenceSet set{traj.id, {}, {}};
    std::unordered_set<std::string> emitted;
    for (const auto& file : traj.env->files) {
        if (!emitted.insert(file.path).second) continue;
        EvidencePiece piece;
        piece.piece_id = file.path;
        piece.kind = PieceKind::SourceFile;
        piece.content = file.content;
        piece.role = file.in_patch ? PieceRole::Gold : PieceRole::Distractor;
        piece.from_snapshot = true;
        piece.token_estimate = counter.count_piece(traj.id, piece.piece_id, piece.content);
        (file.in_patch ? set.gold : set.distractors).push_back(std::move(piece));
    }
    if (set.gold.empty()) empty_evidence(traj, "no files in the patch");
    return set;
}

std::string render_table(const SnapshotTable& table) {
    auto render_row = [](const std::vector<std::string>& cells) {
        std::string line = "|";
        for (const auto& cell : cells) {
            line += ' ';
            line += cell;
            line += " |";
        }
        return line;
    };
    std::string out = render_row(table.header);
    for (const auto& row : table.rows) {
        out += '\n';
        out += render_row(row);
    }
    return out;
}

EvidenceSet extract_sql_evidence(const Trajectory& traj, const TokenCounter& counter) {
    require_type(traj, AgentType::SQL);
    if (!traj.env) empty_evidence(traj, "no database snapshot");
    EvidenceSet set{traj.id, {}, {}};
    std::unordered_set<std::string> emitted;
    for (const auto& table : traj.env->tables) {
        if (!table.queried || !emitted.insert(table.name).second) continue;
        EvidencePiece piece;
        piece.piece_id = table.name;
        piece.kind = PieceKind::Table;
        piece.content = render_table(table);
        piece.role = PieceRole::Gold;
        piece.from_snapshot = true;
        piece.token_estimate = counter.count_piece(traj.id, piece.piece_id, piece.content);
        set.gold.push_back(std::move(piece));
    }
    if (set.gold.empty()) empty_evidence(traj, "no queried tables");
    return set;
}

EvidenceSet extract_evidence(const Trajectory& traj, const TokenCounter& counter) {
    switch (traj.agent_type) {
    case AgentType::Search: return extract_search_evidence(traj, counter);
    case AgentType::SWE: return extract_swe_evidence(traj, counter);
    case AgentType::SQL: return extract_sql_evidence(traj, counter);
    }
    throw Error(ErrorCode::InvalidArgument, "unknown agent type");
}

} // namespace acc
