#include "acc/attention.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "acc/dataset.hpp"
#include "acc/error.hpp"
#include "acc/parallel.hpp"
#include "binary_io.hpp"

namespace acc {

std::size_t DistanceBinning::bin_of(std::size_t distance) const noexcept {
    if (seq_len <= 1) return n_bins - 1;
    return std::min(n_bins - 1, distance * n_bins / (seq_len - 1));
}

std::vector<std::size_t> DistanceBinning::empty_bins() const {
    std::vector<std::size_t> out;
    for (std::size_t b = 0; b < ranges.size(); ++b)
        if (ranges[b].first >= ranges[b].second) out.push_back(b);
    return out;
}

DistanceBinning make_bins(std::size_t seq_len, std::size_t n_bins, bool strict) {
    if (seq_len == 0 || n_bins == 0) throw Error(ErrorCode::InvalidArgument, "binning needs T >= 1 and B >= 1");
    DistanceBinning bins;
    bins.seq_len = seq_len;
    bins.n_bins = n_bins;
    const std::size_t span = seq_len - 1;
    bins.edges.resize(n_bins + 1);
    for (std::size_t b = 0; b <= n_bins; ++b)
        bins.edges[b] = static_cast<double>(span) * static_cast<double>(b) / static_cast<double>(n_bins);
    // First distance of bin b: ceil(b * (T-1) / B), exact in integers.
    auto first = [&](std::size_t b) { return (b * span + n_bins - 1) / n_bins; };
    bins.ranges.resize(n_bins);
    for (std::size_t b = 0; b < n_bins; ++b) {
        std::size_t lo = first(b);
        std::size_t hi = b + 1 == n_bins ? seq_len : first(b + 1);
        bins.ranges[b] = {std::min(lo, hi), hi};
    }
    if (strict && bins.degenerate())
        throw Error(ErrorCode::DegenerateBins, std::to_string(bins.empty_bins().size()) + " of " +
                                                   std::to_string(n_bins) + " distance bins are empty for T = " +
                                                   std::to_string(seq_len));
    return bins;
}

std::span<const float> AttentionDump::head(std::size_t layer, std::size_t h) const {
    return {values.data() + (layer * n_heads + h) * matrix_size(), matrix_size()};
}

std::span<float> AttentionDump::head(std::size_t layer, std::size_t h) {
    return {values.data() + (layer * n_heads + h) * matrix_size(), matrix_size()};
}

void validate_attention_matrix(std::span<const float> matrix, std::size_t seq_len, bool normalized) {
    if (matrix.size() != seq_len * seq_len)
        throw Error(ErrorCode::ShapeMismatch, "attention matrix has " + std::to_string(matrix.size()) +
                                                  " values, expected " + std::to_string(seq_len * seq_len));
    for (std::size_t i = 0; i < seq_len; ++i) {
        const float* row = matrix.data() + i * seq_len;
        double sum = 0.0;
        for (std::size_t j = 0; j <= i; ++j) {
            if (row[j] < 0.0f || !std::isfinite(row[j]))
                throw Error(ErrorCode::FormatError, "attention weight at (" + std::to_string(i) + ", " +
                                                        std::to_string(j) + ") is negative or not finite");
            sum += row[j];
        }
        for (std::size_t j = i + 1; j < seq_len; ++j)
            if (row[j] != 0.0f)
                throw Error(ErrorCode::NonCausal, "attention weight above the diagonal at (" + std::to_string(i) +
                                                      ", " + std::to_string(j) + ")");
        if (normalized && std::fabs(sum - 1.0) > 1e-4)
            throw Error(ErrorCode::FormatError, "row " + std::to_string(i) + " sums to " + std::to_string(sum));
    }
}

void validate_attention_dump(const AttentionDump& dump) {
    const std::size_t expected = std::size_t{dump.n_layers} * dump.n_heads * dump.matrix_size();
    if (dump.values.size() != expected)
        throw Error(ErrorCode::ShapeMismatch, "attention dump holds " + std::to_string(dump.values.size()) +
                                                  " values, header implies " + std::to_string(expected));
    for (std::size_t l = 0; l < dump.n_layers; ++l)
        for (std::size_t h = 0; h < dump.n_heads; ++h)
            validate_attention_matrix(dump.head(l, h), dump.seq_len, dump.normalized);
}

namespace {

constexpr char kAttentionMagic[4] = {'A', 'T', 'N', 'S'};
constexpr std::streamoff kAttentionHeaderSize = 4 + 4 * 4 + 1;

} // namespace

void write_attention_dump(const std::string& path, const AttentionDump& dump) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IOError, "cannot write attention dump: " + path);
    out.write(kAttentionMagic, 4);
    detail::write_u32(out, 1);
    detail::write_u32(out, dump.n_layers);
    detail::write_u32(out, dump.n_heads);
    detail::write_u32(out, dump.seq_len);
    detail::write_u8(out, dump.normalized ? 1 : 0);
    detail::write_f32_array(out, dump.values);
    if (!out) throw Error(ErrorCode::IOError, "write failed: " + path);
}

AttentionDumpFile::AttentionDumpFile(const std::string& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw Error(ErrorCode::IOError, "cannot open attention dump: " + path);
    char magic[4];
    if (!in_.read(magic, 4) || !std::equal(magic, magic + 4, kAttentionMagic))
        throw Error(ErrorCode::FormatError, path + ": not an attention dump (bad magic)");
    auto version = detail::read_u32(in_, path);
    if (version != 1) throw Error(ErrorCode::FormatError, path + ": unsupported version " + std::to_string(version));
    n_layers_ = detail::read_u32(in_, path);
    n_heads_ = detail::read_u32(in_, path);
    seq_len_ = detail::read_u32(in_, path);
    normalized_ = detail::read_u8(in_, path) != 0;
    data_offset_ = kAttentionHeaderSize;

    in_.seekg(0, std::ios::end);
    const auto expected = data_offset_ + static_cast<std::streamoff>(std::size_t{n_layers_} * n_heads_ * seq_len_ *
                                                                     seq_len_ * sizeof(float));
    if (in_.tellg() != expected)
        throw Error(ErrorCode::ShapeMismatch, path + ": file size does not match header dimensions");
}

std::vector<float> AttentionDumpFile::read_head(std::size_t layer, std::size_t head) {
    if (layer >= n_layers_ || head >= n_heads_)
        throw Error(ErrorCode::ShapeMismatch, "head (" + std::to_string(layer) + ", " + std::to_string(head) +
                                                  ") outside dump " + path_);
    const std::size_t count = std::size_t{seq_len_} * seq_len_;
    in_.clear();
    in_.seekg(data_offset_ + static_cast<std::streamoff>((layer * n_heads_ + head) * count * sizeof(float)));
    std::vector<float> values(count);
    detail::read_f32_array(in_, values, path_);
    return values;
}

AttentionDump read_attention_dump(const std::string& path) {
    AttentionDumpFile file(path);
    AttentionDump dump;
    dump.n_layers = file.n_layers();
    dump.n_heads = file.n_heads();
    dump.seq_len = file.seq_len();
    dump.normalized = file.normalized();
    dump.values.reserve(std::size_t{dump.n_layers} * dump.n_heads * dump.matrix_size());
    for (std::size_t l = 0; l < dump.n_layers; ++l)
        for (std::size_t h = 0; h < dump.n_heads; ++h) {
            auto m = file.read_head(l, h);
            dump.values.insert(dump.values.end(), m.begin(), m.end());
        }
    validate_attention_dump(dump);
    return dump;
}

std::vector<std::optional<double>> head_bin_means(std::span<const float> matrix, const DistanceBinning& bins) {
    const std::size_t T = bins.seq_len;
    if (matrix.size() != T * T)
        throw Error(ErrorCode::ShapeMismatch, "binning built for T = " + std::to_string(T) +
                                                  " does not match a matrix of " + std::to_string(matrix.size()) +
                                                  " values");
    // diag[d] = sum_{i=d}^{T-1} A[i][i-d]
    std::vector<double> diag(T, 0.0);
    for (std::size_t i = 0; i < T; ++i) {
        const float* row = matrix.data() + i * T;
        double* out = diag.data() + i;  // out[-j] is diag[i - j]
        for (std::size_t j = 0; j <= i; ++j) *(out - j) += row[j];
    }
    std::vector<std::optional<double>> means(bins.n_bins);
    for (std::size_t b = 0; b < bins.n_bins; ++b) {
        auto [lo, hi] = bins.ranges[b];
        if (lo >= hi) continue;
        double mass = 0.0, positions = 0.0;
        for (std::size_t d = lo; d < hi; ++d) {
            mass += diag[d];
            positions += static_cast<double>(T - d);
        }
        means[b] = mass / positions;
    }
    return means;
}

namespace {

std::vector<std::size_t> resolve_layers(std::vector<std::size_t> layers, std::size_t n_layers) {
    if (layers.empty()) {
        layers.resize(n_layers);
        for (std::size_t l = 0; l < n_layers; ++l) layers[l] = l;
    }
    for (auto l : layers)
        if (l >= n_layers)
            throw Error(ErrorCode::ShapeMismatch,
                        "layer " + std::to_string(l) + " not in dump with " + std::to_string(n_layers) + " layers");
    return layers;
}

void fill_layer_means(BinStats& stats) {
    stats.mu.assign(stats.layers.size() * stats.n_bins, std::nullopt);
    for (std::size_t lp = 0; lp < stats.layers.size(); ++lp)
        for (std::size_t b = 0; b < stats.n_bins; ++b) {
            double sum = 0.0;
            std::size_t n = 0;
            for (std::size_t h = 0; h < stats.n_heads; ++h)
                if (const auto& v = stats.head_mean(lp, h, b)) {
                    sum += *v;
                    ++n;
                }
            // Every head shares the binning, so a bin is either defined for
            // all heads or for none.
            if (n) stats.mu[lp * stats.n_bins + b] = sum / static_cast<double>(n);
        }
}

BinStats empty_stats(std::vector<std::size_t> layers, std::size_t n_heads, std::size_t n_bins) {
    BinStats stats;
    stats.layers = std::move(layers);
    stats.n_heads = n_heads;
    stats.n_bins = n_bins;
    stats.m.assign(stats.layers.size() * n_heads * n_bins, std::nullopt);
    return stats;
}

void store_head(BinStats& stats, std::size_t lp, std::size_t h, const std::vector<std::optional<double>>& means) {
    std::copy(means.begin(), means.end(),
              stats.m.begin() + static_cast<std::ptrdiff_t>((lp * stats.n_heads + h) * stats.n_bins));
}

} // namespace

BinStats attn_bin_means(const AttentionDump& dump, const DistanceBinning& bins, std::vector<std::size_t> layers,
                        std::size_t jobs) {
    if (bins.seq_len != dump.seq_len)
        throw Error(ErrorCode::ShapeMismatch, "binning T = " + std::to_string(bins.seq_len) + " but dump T = " +
                                                  std::to_string(dump.seq_len));
    if (dump.values.size() != std::size_t{dump.n_layers} * dump.n_heads * dump.matrix_size())
        throw Error(ErrorCode::ShapeMismatch, "attention dump value count does not match its header");
    auto stats = empty_stats(resolve_layers(std::move(layers), dump.n_layers), dump.n_heads, bins.n_bins);
    const std::size_t n_heads = dump.n_heads;
    parallel_for(stats.layers.size() * n_heads, jobs, [&](std::size_t task) {
        std::size_t lp = task / n_heads, h = task % n_heads;
        store_head(stats, lp, h, head_bin_means(dump.head(stats.layers[lp], h), bins));
    });
    fill_layer_means(stats);
    return stats;
}

BinStats attn_bin_means(AttentionDumpFile& dump, const DistanceBinning& bins, std::vector<std::size_t> layers) {
    if (bins.seq_len != dump.seq_len())
        throw Error(ErrorCode::ShapeMismatch, "binning T = " + std::to_string(bins.seq_len) + " but dump T = " +
                                                  std::to_string(dump.seq_len()));
    auto stats = empty_stats(resolve_layers(std::move(layers), dump.n_layers()), dump.n_heads(), bins.n_bins);
    for (std::size_t lp = 0; lp < stats.layers.size(); ++lp)
        for (std::size_t h = 0; h < stats.n_heads; ++h) {
            auto matrix = dump.read_head(stats.layers[lp], h);
            validate_attention_matrix(matrix, dump.seq_len(), dump.normalized());
            store_head(stats, lp, h, head_bin_means(matrix, bins));
        }
    fill_layer_means(stats);
    return stats;
}

namespace {

void require_same_shape(const BinStats& a, const BinStats& b) {
    if (a.layers != b.layers || a.n_heads != b.n_heads || a.n_bins != b.n_bins)
        throw Error(ErrorCode::BinningMismatch, "bin statistics differ in layers, heads, or bin count");
}

} // namespace

BinStats average_bin_stats(const std::vector<BinStats>& samples) {
    if (samples.empty()) throw Error(ErrorCode::EmptySet, "no attention samples to average");
    for (const auto& s : samples) require_same_shape(samples.front(), s);
    auto out = empty_stats(samples.front().layers, samples.front().n_heads, samples.front().n_bins);
    for (std::size_t i = 0; i < out.m.size(); ++i) {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& s : samples)
            if (s.m[i]) {
                sum += *s.m[i];
                ++n;
            }
        if (n) out.m[i] = sum / static_cast<double>(n);
    }
    fill_layer_means(out);
    return out;
}

DeltaTable delta_heatmap(const BinStats& base, const BinStats& sft) {
    require_same_shape(base, sft);
    DeltaTable table;
    table.layers = base.layers;
    table.n_bins = base.n_bins;
    table.delta.assign(base.mu.size(), std::nullopt);
    for (std::size_t i = 0; i < base.mu.size(); ++i)
        if (base.mu[i] && sft.mu[i]) table.delta[i] = *sft.mu[i] - *base.mu[i];
    return table;
}

std::size_t tail_bin_count(std::size_t n_bins) noexcept { return (n_bins + 3) / 4; }

std::vector<HeadTailDelta> tail_deltas(const BinStats& base, const BinStats& sft) {
    require_same_shape(base, sft);
    const std::size_t tail = tail_bin_count(base.n_bins);
    auto tail_mean = [&](const BinStats& s, std::size_t lp, std::size_t h) -> std::optional<double> {
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t b = s.n_bins - tail; b < s.n_bins; ++b)
            if (const auto& v = s.head_mean(lp, h, b)) {
                sum += *v;
                ++n;
            }
        if (!n) return std::nullopt;
        return sum / static_cast<double>(n);
    };
    std::vector<HeadTailDelta> out;
    for (std::size_t lp = 0; lp < base.layers.size(); ++lp)
        for (std::size_t h = 0; h < base.n_heads; ++h) {
            auto tb = tail_mean(base, lp, h);
            auto ts = tail_mean(sft, lp, h);
            if (!tb || !ts) continue;
            out.push_back({base.layers[lp], h, *tb, *ts, *ts - *tb});
        }
    std::stable_sort(out.begin(), out.end(),
                     [](const HeadTailDelta& a, const HeadTailDelta& b) { return a.delta > b.delta; });
    return out;
}

std::vector<std::pair<std::size_t, double>> rank_layers(const DeltaTable& table) {
    std::vector<std::pair<std::size_t, double>> out;
    for (std::size_t lp = 0; lp < table.layers.size(); ++lp) {
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t b = 0; b < table.n_bins; ++b)
            if (const auto& v = table.delta[lp * table.n_bins + b]) {
                sum += std::fabs(*v);
                ++n;
            }
        out.emplace_back(table.layers[lp], n ? sum / static_cast<double>(n) : 0.0);
    }
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    return out;
}

std::string delta_table_csv(const DeltaTable& table) {
    std::ostringstream out;
    out << "layer,bin,delta\n";
    for (std::size_t lp = 0; lp < table.layers.size(); ++lp)
        for (std::size_t b = 0; b < table.n_bins; ++b) {
            out << table.layers[lp] << ',' << b << ',';
            if (const auto& v = table.delta[lp * table.n_bins + b]) out << format_number(*v);
            out << '\n';
        }
    return out.str();
}

std::string tail_deltas_csv(const std::vector<HeadTailDelta>& deltas) {
    std::ostringstream out;
    out << "layer,head,tail_base,tail_sft,delta\n";
    for (const auto& d : deltas)
        out << d.layer << ',' << d.head << ',' << format_number(d.tail_base) << ',' << format_number(d.tail_sft) << ','
            << format_number(d.delta) << '\n';
    return out.str();
}

} // namespace acc
