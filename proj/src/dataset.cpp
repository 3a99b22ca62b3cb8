#include "acc/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "json_util.hpp"
#include "text_util.hpp"

namespace acc {

using nlohmann::ordered_json;

DatasetRecord DatasetRecord::from_example(const CompiledExample& example) {
    if (!example.rationale)
        throw Error(ErrorCode::InvalidArgument, "example '" + example.example_id + "' has no verified rationale");
    DatasetRecord r;
    r.example_id = example.example_id;
    r.agent_type = example.agent_type;
    r.question = example.question;
    r.context = example.context;
    r.rationale = *example.rationale;
    r.answer = example.answer;
    r.token_count = example.token_count;
    r.seed = example.seed;
    r.provenance = {example.example_id, example.pieces_included, example.pieces_dropped, example.permutation};
    return r;
}

std::string serialize_record(const DatasetRecord& r) {
    ordered_json j;
    j["example_id"] = r.example_id;
    j["agent_type"] = to_string(r.agent_type);
    j["question"] = r.question;
    j["context"] = r.context;
    j["rationale"] = r.rationale;
    j["answer"] = r.answer;
    j["token_count"] = r.token_count;
    j["seed"] = r.seed;
    j["provenance"] = {
        {"trajectory_id", r.provenance.trajectory_id},
        {"pieces_included", r.provenance.pieces_included},
        {"pieces_dropped", r.provenance.pieces_dropped},
        {"permutation", r.provenance.permutation},
    };
    return detail::dump_line(j);
}

DatasetRecord parse_record(std::string_view line) {
    try {
        auto j = nlohmann::json::parse(line);
        DatasetRecord r;
        r.example_id = j.at("example_id").get<std::string>();
        auto type = parse_agent_type(j.at("agent_type").get<std::string>());
        if (!type) throw Error(ErrorCode::FormatError, "unknown agent_type in dataset record");
        r.agent_type = *type;
        r.question = j.at("question").get<std::string>();
        r.context = j.at("context").get<std::string>();
        r.rationale = j.at("rationale").get<std::string>();
        r.answer = j.at("answer").get<std::string>();
        r.token_count = j.at("token_count").get<std::size_t>();
        r.seed = j.at("seed").get<std::uint64_t>();
        const auto& p = j.at("provenance");
        r.provenance.trajectory_id = p.at("trajectory_id").get<std::string>();
        r.provenance.pieces_included = p.at("pieces_included").get<std::vector<std::string>>();
        r.provenance.pieces_dropped = p.at("pieces_dropped").get<std::vector<std::string>>();
        if (auto it = p.find("permutation"); it != p.end())
            r.provenance.permutation = it->get<std::vector<std::size_t>>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::FormatError, std::string("bad dataset record: ") + e.what());
    }
}

std::vector<DatasetRecord> read_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IOError, "cannot open dataset: " + path);
    std::vector<DatasetRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        try {
            records.push_back(parse_record(line));
        } catch (const Error& e) {
            throw Error(e.code(), path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return records;
}

std::string render_manifest(const std::vector<DatasetRecord>& records, const ManifestInfo& info) {
    ordered_json counts;
    for (auto type : {AgentType::Search, AgentType::SWE, AgentType::SQL}) counts[std::string(to_string(type))] = 0;
    for (const auto& r : records) {
        auto& c = counts[std::string(to_string(r.agent_type))];
        c = c.get<std::size_t>() + 1;
    }

    ordered_json j;
    j["toolkit_version"] = kToolkitVersion;
    j["total"] = records.size();
    j["counts"] = std::move(counts);
    j["budget"] = info.budget;
    j["seed"] = info.seed;
    j["rationale_source"] = info.rationale_source;
    ordered_json config = ordered_json::object();
    for (const auto& [k, v] : info.config) config[k] = v;
    j["config"] = std::move(config);

    auto issues = ordered_json::array();
    for (const auto& issue : info.parse_issues)
        issues.push_back({{"line", issue.line}, {"error", to_string(issue.code)}, {"message", issue.message}});
    j["parse_issues"] = std::move(issues);

    auto failures = ordered_json::array();
    for (const auto& f : info.failures)
        failures.push_back({{"trajectory_id", f.trajectory_id}, {"error", to_string(f.code)}, {"message", f.message}});
    j["failures"] = std::move(failures);

    ordered_json rates = ordered_json::object();
    for (const auto& [type, rate] : info.pass_rates) rates[std::string(to_string(type))] = rate;
    j["verification"] = {{"pass_rates", std::move(rates)}, {"rejected", info.rejected}, {"deferred", info.deferred}};
    return j.dump(2, ' ', false, nlohmann::detail::error_handler_t::replace) + "\n";
}

void emit_dataset(const std::vector<DatasetRecord>& records, const std::string& data_path,
                  const std::string& manifest_path, const ManifestInfo& info) {
    {
        std::ofstream out(data_path, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::IOError, "cannot write dataset: " + data_path);
        for (const auto& r : records) out << serialize_record(r) << '\n';
        if (!out) throw Error(ErrorCode::IOError, "write failed: " + data_path);
    }
    std::ofstream out(manifest_path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IOError, "cannot write manifest: " + manifest_path);
    out << render_manifest(records, info);
    if (!out) throw Error(ErrorCode::IOError, "write failed: " + manifest_path);
}

LengthHistogram length_histogram(const std::vector<std::pair<AgentType, std::size_t>>& lengths, std::size_t n_bins) {
    if (n_bins == 0) throw Error(ErrorCode::InvalidArgument, "histogram needs at least one bin");
    if (lengths.empty()) throw Error(ErrorCode::EmptyCorpus, "cannot bin an empty corpus");

    auto [lo_it, hi_it] = std::minmax_element(lengths.begin(), lengths.end(),
                                              [](const auto& a, const auto& b) { return a.second < b.second; });
    const double lo = static_cast<double>(lo_it->second);
    const double hi = static_cast<double>(hi_it->second);
    const double width = hi > lo ? (hi - lo) / static_cast<double>(n_bins) : 1.0;

    LengthHistogram hist;
    hist.bin_edges.resize(n_bins + 1);
    for (std::size_t b = 0; b < n_bins; ++b) hist.bin_edges[b] = lo + static_cast<double>(b) * width;
    hist.bin_edges[n_bins] = hi > lo ? hi : lo + static_cast<double>(n_bins) * width;
    hist.total.assign(n_bins, 0);

    for (const auto& [type, len] : lengths) {
        const double x = static_cast<double>(len);
        // Largest b with edge[b] <= x among the first n_bins edges.
        auto it = std::upper_bound(hist.bin_edges.begin(), hist.bin_edges.end() - 1, x);
        auto b = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - hist.bin_edges.begin()) - 1));
        auto& per_type = hist.counts[type];
        if (per_type.empty()) per_type.assign(n_bins, 0);
        ++per_type[b];
        ++hist.total[b];
    }
    return hist;
}

LengthHistogram length_histogram(const std::vector<DatasetRecord>& records, std::size_t n_bins) {
    std::vector<std::pair<AgentType, std::size_t>> lengths;
    lengths.reserve(records.size());
    for (const auto& r : records) lengths.emplace_back(r.agent_type, r.token_count);
    return length_histogram(lengths, n_bins);
}

std::string format_number(double value) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return ec == std::errc{} ? std::string(buf, end) : std::to_string(value);
}

std::string histogram_csv(const LengthHistogram& hist) {
    std::ostringstream out;
    out << "agent_type,bin_start,bin_end,count\n";
    auto emit = [&](std::string_view label, const std::vector<std::size_t>& counts) {
        for (std::size_t b = 0; b < counts.size(); ++b)
            out << label << ',' << format_number(hist.bin_edges[b]) << ',' << format_number(hist.bin_edges[b + 1])
                << ',' << counts[b] << '\n';
    };
    for (const auto& [type, counts] : hist.counts) emit(to_string(type), counts);
    emit("all", hist.total);
    return out.str();
}

} // namespace acc
