#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace acc {

/// Top-k expert selections per (layer, token), layer-major.
struct RouterDump {
    std::uint32_t n_layers = 0;
    std::uint32_t seq_len = 0;
    std::uint32_t n_experts = 0;
    std::uint32_t top_k = 0;
    std::vector<std::uint16_t> experts;

    std::span<const std::uint16_t> selected(std::size_t layer, std::size_t token) const {
        return {experts.data() + (layer * seq_len + token) * top_k, top_k};
    }
};

/// Throws ShapeMismatch on a wrong index count and FormatError when an index
/// is >= E or repeated within one token's selection.
void validate_router_dump(const RouterDump& dump);

/// Binary layout: "RTRF", u32 version = 1, u32 n_layers, u32 T, u32 E, u32 k,
/// then little-endian u16 expert indices, k per token, layer-major.
void write_router_dump(const std::string& path, const RouterDump& dump);
RouterDump read_router_dump(const std::string& path);

/// Token group i covers positions [floor(i*T/G), floor((i+1)*T/G)).
std::vector<std::pair<std::size_t, std::size_t>> token_groups(std::size_t seq_len, std::size_t n_groups);

/// Top-k selection frequencies per (layer, expert, group). `freq` is the
/// running mean over aggregated samples, weighted by group size; `hits` and
/// `group_tokens` keep the exact pooled counts alongside it.
struct ExpertFrequency {
    std::size_t n_layers = 0;
    std::size_t n_experts = 0;
    std::size_t n_groups = 0;
    std::size_t top_k = 0;
    std::size_t samples = 0;
    /// freq[(layer * n_experts + expert) * n_groups + group]
    std::vector<double> freq;
    std::vector<std::uint64_t> hits;
    /// Tokens seen per group, summed over samples.
    std::vector<std::uint64_t> group_tokens;

    std::size_t index(std::size_t layer, std::size_t expert, std::size_t group) const noexcept {
        return (layer * n_experts + expert) * n_groups + group;
    }
    double f(std::size_t layer, std::size_t expert, std::size_t group) const { return freq[index(layer, expert, group)]; }

    /// Folds another sample in with a size-weighted running mean. Throws
    /// ShapeMismatch when the shapes differ.
    void accumulate(const ExpertFrequency& sample);
};

/// Throws EmptyGroup when T < n_groups, InvalidArgument when n_groups == 0.
ExpertFrequency expert_frequencies(const RouterDump& dump, std::size_t n_groups);

/// Running-mean aggregation over several samples (sequence lengths may differ).
ExpertFrequency aggregate_expert_frequencies(const std::vector<RouterDump>& dumps, std::size_t n_groups);

struct ExpertDeltaTable {
    std::vector<std::size_t> layers;
    std::size_t n_groups = 0;
    /// Ranked experts, largest mean |delta| first.
    std::vector<std::size_t> experts;
    std::vector<double> mean_abs_delta;
    /// delta[rank * n_groups + group]
    std::vector<double> delta;
};

/// delta_e^(i) = mean over `layers` of (f_sft - f_base); experts ranked by the
/// mean of |delta| over groups (ties by expert index), top_n retained.
/// Throws LayerSetMismatch (empty or out-of-range layers) or ShapeMismatch.
ExpertDeltaTable expert_delta(const ExpertFrequency& base, const ExpertFrequency& sft,
                              const std::vector<std::size_t>& layers, std::size_t top_n = 20);

/// All layers ranked by mean |f_sft - f_base| over experts and groups.
std::vector<std::pair<std::size_t, double>> rank_routing_layers(const ExpertFrequency& base,
                                                                const ExpertFrequency& sft);

std::string expert_delta_csv(const ExpertDeltaTable& table);

} // namespace acc
