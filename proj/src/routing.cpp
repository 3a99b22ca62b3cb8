#include "acc/routing.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "acc/dataset.hpp"
#include "acc/error.hpp"
#include "binary_io.hpp"

namespace acc {

void validate_router_dump(const RouterDump& dump) {
    const std::size_t expected = std::size_t{dump.n_layers} * dump.seq_len * dump.top_k;
    if (dump.experts.size() != expected)
        throw Error(ErrorCode::ShapeMismatch, "router dump holds " + std::to_string(dump.experts.size()) +
                                                  " indices, header implies " + std::to_string(expected));
    if (dump.top_k == 0 || dump.top_k > dump.n_experts)
        throw Error(ErrorCode::FormatError, "top-k must be in [1, E]");
    std::vector<std::uint32_t> stamp(dump.n_experts, 0);
    std::uint32_t token_id = 0;
    for (std::size_t l = 0; l < dump.n_layers; ++l)
        for (std::size_t t = 0; t < dump.seq_len; ++t) {
            ++token_id;
            for (auto e : dump.selected(l, t)) {
                if (e >= dump.n_experts)
                    throw Error(ErrorCode::FormatError, "expert index " + std::to_string(e) + " >= E at layer " +
                                                            std::to_string(l) + ", token " + std::to_string(t));
                if (stamp[e] == token_id)
                    throw Error(ErrorCode::FormatError, "expert " + std::to_string(e) + " selected twice at layer " +
                                                            std::to_string(l) + ", token " + std::to_string(t));
                stamp[e] = token_id;
            }
        }
}

namespace {
constexpr char kRouterMagic[4] = {'R', 'T', 'R', 'F'};
}

void write_router_dump(const std::string& path, const RouterDump& dump) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IOError, "cannot write router dump: " + path);
    out.write(kRouterMagic, 4);
    detail::write_u32(out, 1);
    detail::write_u32(out, dump.n_layers);
    detail::write_u32(out, dump.seq_len);
    detail::write_u32(out, dump.n_experts);
    detail::write_u32(out, dump.top_k);
    detail::write_u16_array(out, dump.experts);
    if (!out) throw Error(ErrorCode::IOError, "write failed: " + path);
}

RouterDump read_router_dump(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IOError, "cannot open router dump: " + path);
    char magic[4];
    if (!in.read(magic, 4) || !std::equal(magic, magic + 4, kRouterMagic))
        throw Error(ErrorCode::FormatError, path + ": not a router dump (bad magic)");
    auto version = detail::read_u32(in, path);
    if (version != 1) throw Error(ErrorCode::FormatError, path + ": unsupported version " + std::to_string(version));
    RouterDump dump;
    dump.n_layers = detail::read_u32(in, path);
    dump.seq_len = detail::read_u32(in, path);
    dump.n_experts = detail::read_u32(in, path);
    dump.top_k = detail::read_u32(in, path);
    dump.experts.resize(std::size_t{dump.n_layers} * dump.seq_len * dump.top_k);
    detail::read_u16_array(in, dump.experts, path);
    if (in.peek() != std::char_traits<char>::eof())
        throw Error(ErrorCode::ShapeMismatch, path + ": trailing bytes after router indices");
    validate_router_dump(dump);
    return dump;
}

std::vector<std::pair<std::size_t, std::size_t>> token_groups(std::size_t seq_len, std::size_t n_groups) {
    if (n_groups == 0) throw Error(ErrorCode::InvalidArgument, "need at least one token group");
    if (seq_len < n_groups)
        throw Error(ErrorCode::EmptyGroup, "sequence of " + std::to_string(seq_len) + " tokens cannot fill " +
                                               std::to_string(n_groups) + " groups");
    std::vector<std::pair<std::size_t, std::size_t>> groups(n_groups);
    for (std::size_t i = 0; i < n_groups; ++i) groups[i] = {i * seq_len / n_groups, (i + 1) * seq_len / n_groups};
    return groups;
}

namespace {

void require_same_shape(const ExpertFrequency& a, const ExpertFrequency& b) {
    if (a.n_layers != b.n_layers || a.n_experts != b.n_experts || a.n_groups != b.n_groups || a.top_k != b.top_k)
        throw Error(ErrorCode::ShapeMismatch, "expert frequency tables differ in layers, experts, groups, or k");
}

} // namespace

void ExpertFrequency::accumulate(const ExpertFrequency& sample) {
    if (samples == 0) {
        *this = sample;
        return;
    }
    require_same_shape(*this, sample);
    for (std::size_t l = 0; l < n_layers; ++l)
        for (std::size_t e = 0; e < n_experts; ++e)
            for (std::size_t i = 0; i < n_groups; ++i) {
                const auto idx = index(l, e, i);
                const double w = static_cast<double>(sample.group_tokens[i]);
                const double seen = static_cast<double>(group_tokens[i]);
                freq[idx] += (w / (seen + w)) * (sample.freq[idx] - freq[idx]);
                hits[idx] += sample.hits[idx];
            }
    for (std::size_t i = 0; i < n_groups; ++i) group_tokens[i] += sample.group_tokens[i];
    samples += sample.samples;
}

ExpertFrequency expert_frequencies(const RouterDump& dump, std::size_t n_groups) {
    const auto groups = token_groups(dump.seq_len, n_groups);
    ExpertFrequency out;
    out.n_layers = dump.n_layers;
    out.n_experts = dump.n_experts;
    out.n_groups = n_groups;
    out.top_k = dump.top_k;
    out.samples = 1;
    out.hits.assign(out.n_layers * out.n_experts * n_groups, 0);
    out.freq.assign(out.hits.size(), 0.0);
    out.group_tokens.resize(n_groups);
    for (std::size_t i = 0; i < n_groups; ++i) out.group_tokens[i] = groups[i].second - groups[i].first;

    for (std::size_t l = 0; l < out.n_layers; ++l)
        for (std::size_t i = 0; i < n_groups; ++i)
            for (std::size_t t = groups[i].first; t < groups[i].second; ++t)
                for (auto e : dump.selected(l, t)) ++out.hits[out.index(l, e, i)];

    for (std::size_t l = 0; l < out.n_layers; ++l)
        for (std::size_t e = 0; e < out.n_experts; ++e)
            for (std::size_t i = 0; i < n_groups; ++i) {
                auto idx = out.index(l, e, i);
                out.freq[idx] = static_cast<double>(out.hits[idx]) / static_cast<double>(out.group_tokens[i]);
            }
    return out;
}

ExpertFrequency aggregate_expert_frequencies(const std::vector<RouterDump>& dumps, std::size_t n_groups) {
    if (dumps.empty()) throw Error(ErrorCode::EmptySet, "no router dumps to aggregate");
    ExpertFrequency acc;
    for (const auto& d : dumps) acc.accumulate(expert_frequencies(d, n_groups));
    return acc;
}

ExpertDeltaTable expert_delta(const ExpertFrequency& base, const ExpertFrequency& sft,
                              const std::vector<std::size_t>& layers, std::size_t top_n) {
    if (base.n_experts != sft.n_experts || base.n_groups != sft.n_groups)
        throw Error(ErrorCode::ShapeMismatch, "expert frequency tables differ in experts or groups");
    if (layers.empty()) throw Error(ErrorCode::LayerSetMismatch, "layer set is empty");
    for (auto l : layers)
        if (l >= base.n_layers || l >= sft.n_layers)
            throw Error(ErrorCode::LayerSetMismatch, "layer " + std::to_string(l) + " missing from a router table");

    const std::size_t E = base.n_experts, G = base.n_groups;
    std::vector<double> delta(E * G, 0.0);
    for (std::size_t e = 0; e < E; ++e)
        for (std::size_t i = 0; i < G; ++i) {
            double sum = 0.0;
            for (auto l : layers) sum += sft.f(l, e, i) - base.f(l, e, i);
            delta[e * G + i] = sum / static_cast<double>(layers.size());
        }

    std::vector<double> score(E, 0.0);
    for (std::size_t e = 0; e < E; ++e) {
        double sum = 0.0;
        for (std::size_t i = 0; i < G; ++i) sum += std::fabs(delta[e * G + i]);
        score[e] = sum / static_cast<double>(G);
    }
    std::vector<std::size_t> order(E);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
    order.resize(std::min(top_n, E));

    ExpertDeltaTable table;
    table.layers = layers;
    table.n_groups = G;
    table.experts = order;
    for (auto e : order) {
        table.mean_abs_delta.push_back(score[e]);
        table.delta.insert(table.delta.end(), delta.begin() + static_cast<std::ptrdiff_t>(e * G),
                           delta.begin() + static_cast<std::ptrdiff_t>((e + 1) * G));
    }
    return table;
}

std::vector<std::pair<std::size_t, double>> rank_routing_layers(const ExpertFrequency& base,
                                                                const ExpertFrequency& sft) {
    require_same_shape(base, sft);
    std::vector<std::pair<std::size_t, double>> out;
    for (std::size_t l = 0; l < base.n_layers; ++l) {
        double sum = 0.0;
        for (std::size_t e = 0; e < base.n_experts; ++e)
            for (std::size_t i = 0; i < base.n_groups; ++i) sum += std::fabs(sft.f(l, e, i) - base.f(l, e, i));
        out.emplace_back(l, sum / static_cast<double>(base.n_experts * base.n_groups));
    }
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    return out;
}

std::string expert_delta_csv(const ExpertDeltaTable& table) {
    std::ostringstream out;
    out << "expert,group,delta\n";
    for (std::size_t r = 0; r < table.experts.size(); ++r)
        for (std::size_t i = 0; i < table.n_groups; ++i)
            out << table.experts[r] << ',' << i << ',' << format_number(table.delta[r * table.n_groups + i]) << '\n';
    return out.str();
}

} // namespace acc
