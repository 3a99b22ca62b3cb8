#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace acc {

/// Equal-width distance bins over [0, T-1]. Bin b holds the integer
/// distances d with e_b <= d < e_{b+1}; the final bin is right-closed.
struct DistanceBinning {
    std::size_t seq_len = 0;
    std::size_t n_bins = 0;
    std::vector<double> edges;
    /// Half-open distance range [first, second) per bin; empty when equal.
    std::vector<std::pair<std::size_t, std::size_t>> ranges;

    std::size_t bin_of(std::size_t distance) const noexcept;
    std::vector<std::size_t> empty_bins() const;
    bool degenerate() const { return !empty_bins().empty(); }
};

/// Throws InvalidArgument when T or B is zero. With `strict`, throws
/// DegenerateBins when some bin holds no distance; otherwise empty bins are
/// recorded and their statistics reported as absent.
DistanceBinning make_bins(std::size_t seq_len, std::size_t n_bins, bool strict = false);

/// Per-(layer, head) causal attention matrices, stored layer-major, then
/// head, then row-major T x T.
struct AttentionDump {
    std::uint32_t n_layers = 0;
    std::uint32_t n_heads = 0;
    std::uint32_t seq_len = 0;
    bool normalized = false;
    std::vector<float> values;

    std::size_t matrix_size() const noexcept { return std::size_t{seq_len} * seq_len; }
    std::span<const float> head(std::size_t layer, std::size_t h) const;
    std::span<float> head(std::size_t layer, std::size_t h);
};

/// Throws ShapeMismatch (value count), NonCausal (mass above the diagonal),
/// or FormatError (normalized rows not summing to 1 within 1e-4).
void validate_attention_matrix(std::span<const float> matrix, std::size_t seq_len, bool normalized);
void validate_attention_dump(const AttentionDump& dump);

/// Binary layout: "ATNS", u32 version = 1, u32 n_layers, u32 n_heads, u32 T,
/// u8 normalized, then little-endian f32 values.
void write_attention_dump(const std::string& path, const AttentionDump& dump);
AttentionDump read_attention_dump(const std::string& path);

/// Reads one (layer, head) matrix at a time so T ~ 10^5 dumps stay out of memory.
class AttentionDumpFile {
public:
    explicit AttentionDumpFile(const std::string& path);

    std::uint32_t n_layers() const noexcept { return n_layers_; }
    std::uint32_t n_heads() const noexcept { return n_heads_; }
    std::uint32_t seq_len() const noexcept { return seq_len_; }
    bool normalized() const noexcept { return normalized_; }

    std::vector<float> read_head(std::size_t layer, std::size_t head);

private:
    std::ifstream in_;
    std::string path_;
    std::uint32_t n_layers_ = 0, n_heads_ = 0, seq_len_ = 0;
    bool normalized_ = false;
    std::streamoff data_offset_ = 0;
};

/// m_b = (sum over d in D_b of the d-th sub-diagonal) / (sum over d in D_b of
/// (T - d)), accumulated in double. Absent for empty bins.
std::vector<std::optional<double>> head_bin_means(std::span<const float> matrix, const DistanceBinning& bins);

/// Per-head and per-layer bin means for a set of layers.
struct BinStats {
    std::vector<std::size_t> layers;
    std::size_t n_heads = 0;
    std::size_t n_bins = 0;
    /// m[(layer_pos * n_heads + head) * n_bins + bin]
    std::vector<std::optional<double>> m;
    /// mu[layer_pos * n_bins + bin]: mean of m over heads.
    std::vector<std::optional<double>> mu;

    const std::optional<double>& head_mean(std::size_t layer_pos, std::size_t head, std::size_t bin) const {
        return m[(layer_pos * n_heads + head) * n_bins + bin];
    }
    const std::optional<double>& layer_mean(std::size_t layer_pos, std::size_t bin) const {
        return mu[layer_pos * n_bins + bin];
    }
};

/// `layers` empty means every layer of the dump. Throws ShapeMismatch when the
/// binning was built for a different T or a layer is out of range.
BinStats attn_bin_means(const AttentionDump& dump, const DistanceBinning& bins, std::vector<std::size_t> layers = {},
                        std::size_t jobs = 1);
BinStats attn_bin_means(AttentionDumpFile& dump, const DistanceBinning& bins, std::vector<std::size_t> layers = {});

/// Averages per-head bin means across evaluation samples (absent values are
/// skipped) and recomputes layer means. Throws BinningMismatch.
BinStats average_bin_stats(const std::vector<BinStats>& samples);

struct DeltaTable {
    std::vector<std::size_t> layers;
    std::size_t n_bins = 0;
    /// delta[layer_pos * n_bins + bin] = mu_sft - mu_base; absent if either is.
    std::vector<std::optional<double>> delta;
};

/// Throws BinningMismatch when layers, heads, or bin counts differ.
DeltaTable delta_heatmap(const BinStats& base, const BinStats& sft);

struct HeadTailDelta {
    std::size_t layer = 0;
    std::size_t head = 0;
    double tail_base = 0.0;
    double tail_sft = 0.0;
    double delta = 0.0;
};

/// ceil(B / 4): the far-distance bins used for head ranking.
std::size_t tail_bin_count(std::size_t n_bins) noexcept;

/// Mean of m over the last ceil(B/4) bins per head, SFT minus base, sorted by
/// descending delta (ties by layer then head). Heads whose tail is entirely
/// absent are omitted.
std::vector<HeadTailDelta> tail_deltas(const BinStats& base, const BinStats& sft);

/// Layers ordered by mean |delta| over defined bins, largest first.
std::vector<std::pair<std::size_t, double>> rank_layers(const DeltaTable& table);

std::string delta_table_csv(const DeltaTable& table);
std::string tail_deltas_csv(const std::vector<HeadTailDelta>& deltas);

} // namespace acc
