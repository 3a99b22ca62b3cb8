#include "acc/mask.hpp"

#include "acc/error.hpp"

namespace acc {

std::string_view to_string(SegmentKind kind) noexcept {
    switch (kind) {
    case SegmentKind::Question: return "question";
    case SegmentKind::Reasoning: return "reasoning";
    case SegmentKind::Action: return "action";
    case SegmentKind::Observation: return "observation";
    case SegmentKind::FinalReasoning: return "final_reasoning";
    case SegmentKind::Answer: return "answer";
    case SegmentKind::CompiledContext: return "context";
    }
    return "question";
}

std::string_view to_string(MaskMode mode) noexcept { return mode == MaskMode::ACC ? "ACC" : "AgentSFT"; }

namespace {

[[noreturn]] void layout_error(const std::string& what) { throw Error(ErrorCode::LayoutError, what); }

std::string describe(const SegmentLabel& label) {
    std::string s(to_string(label.kind));
    if (label.turn) s += "(" + std::to_string(label.turn) + ")";
    return s;
}

} // namespace

SegmentedChat::SegmentedChat(std::vector<Segment> segments) : segments_(std::move(segments)) {
    std::size_t cursor = 0;
    for (const auto& seg : segments_) {
        if (seg.start != cursor || seg.end < seg.start)
            layout_error("segment " + describe(seg.label) + " does not continue at token " + std::to_string(cursor));
        cursor = seg.end;
    }
    total_ = cursor;

    const auto n = segments_.size();
    if (n < 3 || segments_.front().label.kind != SegmentKind::Question)
        layout_error("layout must start with the question and end with final reasoning and answer");
    if (segments_[n - 1].label.kind != SegmentKind::Answer || segments_[n - 2].label.kind != SegmentKind::FinalReasoning)
        layout_error("layout must end with final reasoning followed by the answer");

    auto middle_begin = segments_.begin() + 1;
    auto middle_end = segments_.end() - 2;
    const auto middle = static_cast<std::size_t>(middle_end - middle_begin);

    if (middle == 1 && middle_begin->label.kind == SegmentKind::CompiledContext) {
        layout_ = ChatLayout::Compiled;
        return;
    }
    layout_ = ChatLayout::Agent;
    if (middle % 3 != 0)
        layout_error("interaction turns must be complete (reasoning, action, observation) triples");
    constexpr SegmentKind order[] = {SegmentKind::Reasoning, SegmentKind::Action, SegmentKind::Observation};
    for (std::size_t i = 0; i < middle; ++i) {
        const auto& label = middle_begin[static_cast<std::ptrdiff_t>(i)].label;
        const std::size_t turn = i / 3 + 1;
        if (label.kind != order[i % 3] || label.turn != turn)
            layout_error("expected " + std::string(to_string(order[i % 3])) + "(" + std::to_string(turn) + "), found " +
                         describe(label));
    }
    turns_ = middle / 3;
}

SegmentedChat SegmentedChat::from_lengths(const std::vector<std::pair<SegmentLabel, std::size_t>>& parts) {
    std::vector<Segment> segments;
    segments.reserve(parts.size());
    std::size_t cursor = 0;
    for (const auto& [label, length] : parts) {
        segments.push_back({label, cursor, cursor + length});
        cursor += length;
    }
    return SegmentedChat(std::move(segments));
}

std::size_t SupervisionMask::supervised() const noexcept {
    std::size_t n = 0;
    for (auto b : bits) n += b;
    return n;
}

std::vector<std::pair<std::uint8_t, std::size_t>> SupervisionMask::run_lengths() const {
    std::vector<std::pair<std::uint8_t, std::size_t>> runs;
    for (auto b : bits) {
        if (!runs.empty() && runs.back().first == b)
            ++runs.back().second;
        else
            runs.emplace_back(b, 1);
    }
    return runs;
}

SupervisionMask SupervisionMask::from_run_lengths(MaskMode mode,
                                                  const std::vector<std::pair<std::uint8_t, std::size_t>>& runs) {
    SupervisionMask mask;
    mask.mode = mode;
    for (auto [bit, len] : runs) {
        if (bit > 1) throw Error(ErrorCode::FormatError, "mask bits must be 0 or 1");
        mask.bits.insert(mask.bits.end(), len, bit);
    }
    return mask;
}

namespace {

SupervisionMask fill(const SegmentedChat& chat, MaskMode mode, bool (*supervised)(SegmentKind)) {
    SupervisionMask mask;
    mask.mode = mode;
    mask.bits.assign(chat.total_tokens(), 0);
    for (const auto& seg : chat.segments())
        if (supervised(seg.label.kind))
            std::fill(mask.bits.begin() + static_cast<std::ptrdiff_t>(seg.start),
                      mask.bits.begin() + static_cast<std::ptrdiff_t>(seg.end), std::uint8_t{1});
    return mask;
}

} // namespace

SupervisionMask build_agent_mask(const SegmentedChat& chat) {
    if (chat.layout() != ChatLayout::Agent) layout_error("agent mask requested for a compiled-context layout");
    return fill(chat, MaskMode::AgentSFT, [](SegmentKind k) {
        return k == SegmentKind::Reasoning || k == SegmentKind::Action || k == SegmentKind::FinalReasoning ||
               k == SegmentKind::Answer;
    });
}

SupervisionMask build_acc_mask(const SegmentedChat& chat) {
    if (chat.layout() != ChatLayout::Compiled) layout_error("ACC mask requested for a trajectory layout");
    return fill(chat, MaskMode::ACC,
                [](SegmentKind k) { return k == SegmentKind::FinalReasoning || k == SegmentKind::Answer; });
}

double LossTermReport::total() const noexcept {
    double sum = 0.0;
    for (double t : local_terms) sum += t;
    return sum + final_term;
}

LossTermReport loss_term_report(const SegmentedChat& chat, std::span<const double> per_token_loss) {
    if (chat.layout() != ChatLayout::Agent) layout_error("loss term report requires a trajectory layout");
    if (per_token_loss.size() != chat.total_tokens())
        throw Error(ErrorCode::LengthMismatch, "per-token loss has " + std::to_string(per_token_loss.size()) +
                                                   " entries for " + std::to_string(chat.total_tokens()) + " tokens");
    LossTermReport report;
    report.local_terms.assign(chat.interaction_turns(), 0.0);
    for (const auto& seg : chat.segments()) {
        double* target = nullptr;
        switch (seg.label.kind) {
        case SegmentKind::Reasoning:
        case SegmentKind::Action: target = &report.local_terms[seg.label.turn - 1]; break;
        case SegmentKind::FinalReasoning:
        case SegmentKind::Answer: target = &report.final_term; break;
        default: break;
        }
        if (!target) continue;
        for (std::size_t i = seg.start; i < seg.end; ++i) *target += per_token_loss[i];
    }
    return report;
}

} // namespace acc
