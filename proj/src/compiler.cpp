#include "acc/compiler.hpp"

#include <algorithm>
#include <charconv>

#include "acc/error.hpp"
#include "acc/prng.hpp"
#include "text_util.hpp"

namespace acc {

DistractorPolicy DistractorPolicy::parse(std::string_view text) {
    auto t = detail::trim(text);
    if (t == "keep" || t == "keep-all") return keep_all();
    if (t == "drop" || t == "drop-all") return drop_all();
    if (t.starts_with("max:")) {
        auto digits = t.substr(4);
        std::size_t n = 0;
        auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), n);
        if (ec == std::errc{} && end == digits.data() + digits.size() && !digits.empty()) return at_most(n);
    }
    throw Error(ErrorCode::InvalidArgument, "bad distractor policy '" + std::string(text) + "' (keep|drop|max:N)");
}

std::string DistractorPolicy::to_string() const {
    switch (kind) {
    case Kind::KeepAll: return "keep";
    case Kind::DropAll: return "drop";
    case Kind::Max: return "max:" + std::to_string(max);
    }
    return "keep";
}

namespace {

constexpr std::string_view kBlockSeparator = "\n\n";

std::string prompt_prefix(AgentType layout, std::string_view question) {
    std::string out = "Question: ";
    if (layout == AgentType::Search) {
        out += kSearchInstruction;
        out += '\n';
        out += question;
        out += "\n\nDocuments:\n";
    } else {
        out += question;
        out += "\n\nContext:\n";
    }
    return out;
}

std::string answer_suffix(std::string_view answer) {
    std::string out = "\n\nAnswer: ";
    out += answer;
    return out;
}

std::string block_label(const EvidencePiece& piece) {
    switch (piece.kind) {
    case PieceKind::WebPage: return "[Doc " + piece.piece_id + "] ";
    case PieceKind::SourceFile: return "[File " + piece.piece_id + "] ";
    case PieceKind::Table: return "[Table: " + piece.piece_id + "]\n";
    }
    return {};
}

} // namespace

std::string render_block(const EvidencePiece& piece) { return block_label(piece) + piece.content; }

CompiledExample compile_context(const EvidenceSet& evidence, AgentType agent_type, std::string_view question,
                                std::string_view answer, const CompileOptions& options) {
    if (evidence.gold.empty())
        throw Error(ErrorCode::InvalidArgument, "evidence set '" + evidence.trajectory_id + "' has no gold pieces");
    if (options.budget == 0) throw Error(ErrorCode::InvalidArgument, "token budget must be positive");

    const auto& counter = options.counter;
    const AgentType layout = options.layout.value_or(agent_type);

    // Candidates in canonical order: gold, then distractors.
    std::vector<const EvidencePiece*> candidates;
    candidates.reserve(evidence.gold.size() + evidence.distractors.size());
    for (const auto& p : evidence.gold) candidates.push_back(&p);
    for (const auto& p : evidence.distractors) candidates.push_back(&p);
    const std::size_t n_gold = evidence.gold.size();

    // order[pos] = 1-based candidate index rendered at position pos.
    const auto order = permute(candidates.size(), options.seed);
    std::vector<std::size_t> position(candidates.size());
    for (std::size_t pos = 0; pos < order.size(); ++pos) position[order[pos] - 1] = pos;

    std::vector<bool> kept(candidates.size(), true);
    std::vector<std::string> dropped;
    auto drop = [&](std::size_t idx) {
        kept[idx] = false;
        dropped.push_back(candidates[idx]->piece_id);
    };

    // Distractor candidate indices sorted by permuted position.
    std::vector<std::size_t> by_position;
    for (std::size_t i = n_gold; i < candidates.size(); ++i) by_position.push_back(i);
    std::sort(by_position.begin(), by_position.end(),
              [&](std::size_t a, std::size_t b) { return position[a] < position[b]; });

    std::size_t policy_keep = by_position.size();
    if (options.policy.kind == DistractorPolicy::Kind::DropAll) policy_keep = 0;
    if (options.policy.kind == DistractorPolicy::Kind::Max) policy_keep = std::min(policy_keep, options.policy.max);
    for (std::size_t i = policy_keep; i < by_position.size(); ++i) drop(by_position[i]);
    by_position.resize(policy_keep);

    auto block_cost = [&](const EvidencePiece& p) { return counter.count(block_label(p)) + p.token_estimate; };
    const std::size_t separator_cost = counter.count(kBlockSeparator);

    std::size_t total = counter.count(prompt_prefix(layout, question)) + counter.count(answer_suffix(answer));
    std::size_t n_kept = 0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (!kept[i]) continue;
        total += block_cost(*candidates[i]);
        ++n_kept;
    }
    total += separator_cost * (n_kept - 1);

    while (total > options.budget && !by_position.empty()) {
        auto idx = by_position.back();
        by_position.pop_back();
        drop(idx);
        total -= block_cost(*candidates[idx]) + separator_cost;
    }
    if (total > options.budget)
        throw Error(ErrorCode::BudgetExceeded, "example '" + evidence.trajectory_id + "': gold evidence needs " +
                                                   std::to_string(total) + " tokens, budget is " +
                                                   std::to_string(options.budget));

    CompiledExample ex;
    ex.example_id = evidence.trajectory_id;
    ex.question = std::string(question);
    ex.answer = std::string(answer);
    ex.agent_type = agent_type;
    ex.layout = layout;
    ex.seed = options.seed;
    ex.budget = options.budget;
    ex.token_count = total;
    ex.gold_count = n_gold;
    ex.pieces_dropped = std::move(dropped);

    std::vector<std::size_t> included_index(candidates.size(), 0);
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (!kept[i]) continue;
        ex.pieces_included.push_back(candidates[i]->piece_id);
        included_index[i] = ex.pieces_included.size();
    }
    for (auto cand : order) {
        if (!kept[cand - 1]) continue;
        if (!ex.permutation.empty()) ex.context += kBlockSeparator;
        ex.context += render_block(*candidates[cand - 1]);
        ex.permutation.push_back(included_index[cand - 1]);
    }
    return ex;
}

CompiledExample compile_trajectory(const Trajectory& traj, const CompileOptions& options) {
    auto evidence = extract_evidence(traj, options.counter);
    auto per_example = options;
    per_example.seed = example_seed(options.seed, traj.id);
    return compile_context(evidence, traj.agent_type, traj.question, traj.final_answer, per_example);
}

std::string render_prompt(const CompiledExample& example, AnswerMode mode) {
    auto out = prompt_prefix(example.layout, example.question);
    out += example.context;
    if (mode == AnswerMode::Include) out += answer_suffix(example.answer);
    return out;
}

} // namespace acc
