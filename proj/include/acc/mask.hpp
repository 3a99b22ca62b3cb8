#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace acc {

enum class SegmentKind { Question, Reasoning, Action, Observation, FinalReasoning, Answer, CompiledContext };

std::string_view to_string(SegmentKind kind) noexcept;

struct SegmentLabel {
    SegmentKind kind = SegmentKind::Question;
    /// 1-based turn for Reasoning / Action / Observation; 0 otherwise.
    std::size_t turn = 0;

    bool operator==(const SegmentLabel&) const = default;
};

/// Half-open token span [start, end).
struct Segment {
    SegmentLabel label;
    std::size_t start = 0;
    std::size_t end = 0;

    std::size_t length() const noexcept { return end - start; }
};

enum class ChatLayout { Agent, Compiled };

/// A flattened chat whose token spans are labelled by role. Construction
/// validates coverage and ordering; role-marker tokens belong to the segment
/// they enclose.
class SegmentedChat {
public:
    /// Throws LayoutError unless spans tile [0, total) in valid order:
    ///   agent:    Question, (Reasoning t, Action t, Observation t) for t = 1..k-1,
    ///             FinalReasoning, Answer
    ///   compiled: Question, CompiledContext, FinalReasoning, Answer
    explicit SegmentedChat(std::vector<Segment> segments);

    /// Builds contiguous spans from (label, length) pairs.
    static SegmentedChat from_lengths(const std::vector<std::pair<SegmentLabel, std::size_t>>& parts);

    const std::vector<Segment>& segments() const noexcept { return segments_; }
    std::size_t total_tokens() const noexcept { return total_; }
    ChatLayout layout() const noexcept { return layout_; }
    /// k - 1 for agent layouts, 0 for compiled ones.
    std::size_t interaction_turns() const noexcept { return turns_; }

private:
    std::vector<Segment> segments_;
    std::size_t total_ = 0;
    std::size_t turns_ = 0;
    ChatLayout layout_ = ChatLayout::Agent;
};

enum class MaskMode { AgentSFT, ACC };

std::string_view to_string(MaskMode mode) noexcept;

struct SupervisionMask {
    std::vector<std::uint8_t> bits;
    MaskMode mode = MaskMode::AgentSFT;

    std::size_t supervised() const noexcept;
    /// (bit, run length) pairs covering the mask in order.
    std::vector<std::pair<std::uint8_t, std::size_t>> run_lengths() const;
    static SupervisionMask from_run_lengths(MaskMode mode, const std::vector<std::pair<std::uint8_t, std::size_t>>& runs);
};

/// 1 on every Reasoning, Action, FinalReasoning and Answer token; 0 on the
/// question and on every observation. Throws LayoutError on compiled layouts.
SupervisionMask build_agent_mask(const SegmentedChat& chat);

/// 1 exactly on FinalReasoning and Answer. Throws LayoutError on agent layouts.
SupervisionMask build_acc_mask(const SegmentedChat& chat);

struct LossTermReport {
    /// One entry per interaction turn t < k: loss over Reasoning t and Action t.
    std::vector<double> local_terms;
    /// Loss over FinalReasoning and Answer.
    double final_term = 0.0;

    double total() const noexcept;
};

/// Groups per-token losses into local next-tool-selection terms and the final
/// answer term. Throws LengthMismatch, or LayoutError on compiled layouts.
LossTermReport loss_term_report(const SegmentedChat& chat, std::span<const double> per_token_loss);

} // namespace acc
