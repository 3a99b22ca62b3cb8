// acc: compile agent trajectories into long-context QA records and run the
// analysis reports over them.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "acc/attention.hpp"
#include "acc/dataset.hpp"
#include "acc/decontam.hpp"
#include "acc/error.hpp"
#include "acc/mask.hpp"
#include "acc/pipeline.hpp"
#include "acc/routing.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitWarnings = 2;

int report_error(std::string_view code, const std::string& message) {
    json summary = {{"status", "error"}, {"error", code}, {"message", message}};
    std::cerr << summary.dump() << '\n';
    return kExitError;
}

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw acc::Error(acc::ErrorCode::IOError, "cannot write " + path.string());
    out << text;
}

std::vector<std::size_t> parse_layers(const std::string& text) {
    std::vector<std::size_t> layers;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            auto dash = item.find('-');
            if (dash == std::string::npos) {
                layers.push_back(std::stoul(item));
            } else {
                auto lo = std::stoul(item.substr(0, dash)), hi = std::stoul(item.substr(dash + 1));
                for (auto l = lo; l <= hi; ++l) layers.push_back(l);
            }
        } catch (const std::logic_error&) {
            throw acc::Error(acc::ErrorCode::InvalidArgument, "bad layer list entry '" + item + "'");
        }
    }
    return layers;
}

std::optional<acc::AgentType> parse_type_flag(const std::string& text, const char* flag) {
    if (text.empty() || text == "auto") return std::nullopt;
    auto t = acc::parse_agent_type(text);
    if (!t) throw acc::Error(acc::ErrorCode::InvalidArgument, std::string(flag) + " must be search, swe, sql or auto");
    return t;
}

std::string ranking_csv(const std::vector<std::pair<std::size_t, double>>& ranking) {
    std::string out = "layer,mean_abs_delta\n";
    for (const auto& [layer, score] : ranking) out += std::to_string(layer) + "," + acc::format_number(score) + "\n";
    return out;
}

// ---------------------------------------------------------------------------

struct CompileArgs {
    acc::CompileRunConfig config;
    std::string seed_text = "0";
    std::string policy = "keep";
    std::string agent_type = "auto";
    std::string layout = "auto";
    std::string teacher;
    std::string token_table;
};

int run_compile(CompileArgs& args) {
    auto& c = args.config;
    c.policy = acc::DistractorPolicy::parse(args.policy);
    c.agent_type = parse_type_flag(args.agent_type, "--agent-type");
    c.layout = parse_type_flag(args.layout, "--template");
    if (!args.teacher.empty()) c.teacher = args.teacher;
    if (!args.token_table.empty()) c.token_table = args.token_table;
    auto result = acc::run_compile(c);
    json summary = {{"status", result.warnings ? "warnings" : "ok"},
                    {"records", result.records.size()},
                    {"parse_issues", result.manifest.parse_issues.size()},
                    {"failures", result.manifest.failures.size()},
                    {"rejected", result.manifest.rejected.size()},
                    {"deferred", result.manifest.deferred.size()}};
    std::cout << summary.dump() << '\n';
    return result.warnings ? kExitWarnings : kExitOk;
}

struct StatsArgs {
    std::string input;
    std::string out;
    std::size_t bins = 32;
};

int run_stats(const StatsArgs& args) {
    auto records = acc::read_dataset(args.input);
    auto hist = acc::length_histogram(records, args.bins);
    write_file(fs::path(args.out) / "histogram.csv", acc::histogram_csv(hist));
    std::cout << json{{"status", "ok"}, {"records", records.size()}}.dump() << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct MaskArgs {
    std::string input;
    std::string out;
    std::string mode = "auto";
    bool strict = false;
};

acc::SegmentKind parse_segment_kind(const std::string& text) {
    using K = acc::SegmentKind;
    for (auto k : {K::Question, K::Reasoning, K::Action, K::Observation, K::FinalReasoning, K::Answer,
                   K::CompiledContext})
        if (acc::to_string(k) == text) return k;
    throw acc::Error(acc::ErrorCode::SchemaError, "unknown segment label '" + text + "'");
}

// Dataset records have no tokenizer spans; approximate counts stand in.
acc::SegmentedChat chat_from_record(const acc::DatasetRecord& r) {
    using K = acc::SegmentKind;
    acc::TokenCounter counter;
    return acc::SegmentedChat::from_lengths({
        {{K::Question, 0}, counter.count(r.question)},
        {{K::CompiledContext, 0}, counter.count(r.context)},
        {{K::FinalReasoning, 0}, counter.count(r.rationale)},
        {{K::Answer, 0}, counter.count(r.answer)},
    });
}

int run_mask(const MaskArgs& args) {
    std::ifstream in(args.input);
    if (!in) throw acc::Error(acc::ErrorCode::IOError, "cannot open " + args.input);
    std::string out_text, line;
    std::size_t line_no = 0, written = 0, skipped = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            json j = json::parse(line);
            std::string id = j.value("example_id", j.value("id", std::to_string(line_no)));
            std::optional<acc::SegmentedChat> chat;
            if (j.contains("segments")) {
                std::vector<acc::Segment> segments;
                for (const auto& s : j.at("segments"))
                    segments.push_back({{parse_segment_kind(s.at("label").get<std::string>()), s.value("turn", 0u)},
                                        s.at("start").get<std::size_t>(), s.at("end").get<std::size_t>()});
                chat.emplace(std::move(segments));
            } else {
                chat.emplace(chat_from_record(acc::parse_record(line)));
            }

            auto mode = args.mode;
            if (mode == "auto") mode = chat->layout() == acc::ChatLayout::Agent ? "agent" : "acc";
            acc::SupervisionMask mask;
            if (mode == "agent")
                mask = acc::build_agent_mask(*chat);
            else if (mode == "acc")
                mask = acc::build_acc_mask(*chat);
            else
                throw acc::Error(acc::ErrorCode::InvalidArgument, "--mode must be agent, acc or auto");

            json runs = json::array();
            for (const auto& [bit, len] : mask.run_lengths()) runs.push_back({bit, len});
            nlohmann::ordered_json rec = {{"example_id", id},
                                          {"mode", acc::to_string(mask.mode)},
                                          {"total_tokens", chat->total_tokens()},
                                          {"supervised", mask.supervised()},
                                          {"bits", runs}};
            if (j.contains("loss") && chat->layout() == acc::ChatLayout::Agent) {
                auto loss = j.at("loss").get<std::vector<double>>();
                auto report = acc::loss_term_report(*chat, loss);
                rec["loss_terms"] = {{"local", report.local_terms}, {"final", report.final_term},
                                     {"total", report.total()}};
            }
            out_text += rec.dump() + "\n";
            ++written;
        } catch (const std::exception& e) {
            if (args.strict) throw acc::Error(acc::ErrorCode::SchemaError, "line " + std::to_string(line_no) + ": " + e.what());
            std::cerr << json{{"warning", "skipped"}, {"line", line_no}, {"message", e.what()}}.dump() << '\n';
            ++skipped;
        }
    }
    write_file(fs::path(args.out) / "masks.jsonl", out_text);
    std::cout << json{{"status", skipped ? "warnings" : "ok"}, {"masks", written}, {"skipped", skipped}}.dump() << '\n';
    return skipped ? kExitWarnings : kExitOk;
}

// ---------------------------------------------------------------------------

struct AttnArgs {
    std::vector<std::string> base;
    std::vector<std::string> sft;
    std::string out;
    std::size_t bins = 32;
    std::string layers;
    bool strict = false;
};

acc::BinStats attention_stats(const std::vector<std::string>& paths, std::size_t n_bins,
                              const std::vector<std::size_t>& layers, bool strict, std::size_t& degenerate) {
    std::vector<acc::BinStats> samples;
    for (const auto& p : paths) {
        acc::AttentionDumpFile dump(p);
        auto bins = acc::make_bins(dump.seq_len(), n_bins, strict);
        if (bins.degenerate()) ++degenerate;
        samples.push_back(acc::attn_bin_means(dump, bins, layers));
    }
    return samples.size() == 1 ? samples.front() : acc::average_bin_stats(samples);
}

int run_analyze_attn(const AttnArgs& args) {
    auto layers = parse_layers(args.layers);
    std::size_t degenerate = 0;
    auto base = attention_stats(args.base, args.bins, layers, args.strict, degenerate);
    auto sft = attention_stats(args.sft, args.bins, layers, args.strict, degenerate);
    auto table = acc::delta_heatmap(base, sft);
    const fs::path out = args.out;
    write_file(out / "attn_delta.csv", acc::delta_table_csv(table));
    write_file(out / "attn_tail_deltas.csv", acc::tail_deltas_csv(acc::tail_deltas(base, sft)));
    write_file(out / "attn_layer_ranking.csv", ranking_csv(acc::rank_layers(table)));
    if (degenerate)
        std::cerr << json{{"warning", "DegenerateBins"}, {"dumps", degenerate}}.dump() << '\n';
    std::cout << json{{"status", degenerate ? "warnings" : "ok"}, {"layers", table.layers.size()},
                      {"bins", table.n_bins}}.dump()
              << '\n';
    return degenerate ? kExitWarnings : kExitOk;
}

struct ExpertArgs {
    std::vector<std::string> base;
    std::vector<std::string> sft;
    std::string out;
    std::size_t groups = 32;
    std::size_t top = 20;
    std::string layers;
};

acc::ExpertFrequency routing_stats(const std::vector<std::string>& paths, std::size_t groups) {
    acc::ExpertFrequency agg;
    for (const auto& p : paths) agg.accumulate(acc::expert_frequencies(acc::read_router_dump(p), groups));
    return agg;
}

int run_analyze_experts(const ExpertArgs& args) {
    auto base = routing_stats(args.base, args.groups);
    auto sft = routing_stats(args.sft, args.groups);
    auto layers = parse_layers(args.layers);
    if (layers.empty())
        for (std::size_t l = 0; l < base.n_layers; ++l) layers.push_back(l);
    auto table = acc::expert_delta(base, sft, layers, args.top);
    const fs::path out = args.out;
    write_file(out / "expert_delta.csv", acc::expert_delta_csv(table));
    write_file(out / "expert_layer_ranking.csv", ranking_csv(acc::rank_routing_layers(base, sft)));
    std::cout << json{{"status", "ok"}, {"experts", table.experts.size()}, {"groups", table.n_groups}}.dump() << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct DecontamArgs {
    std::string train;
    std::vector<std::string> bench;
    std::string out;
    std::string encoder = "file";
    std::size_t jobs = 1;
};

// With the trigram encoder, inputs are JSONL records from which questions
// are extracted (trajectories, chat records, dataset records).
std::vector<acc::EmbeddingRecord> load_set(const std::string& path, const std::string& encoder) {
    if (encoder == "file") return acc::read_embeddings(path);
    if (encoder != "trigram") throw acc::Error(acc::ErrorCode::InvalidArgument, "--encoder must be file or trigram");
    std::ifstream in(path);
    if (!in) throw acc::Error(acc::ErrorCode::IOError, "cannot open " + path);
    std::vector<acc::EmbeddingRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto q = acc::extract_question_json(line);
        if (q.id.empty()) q.id = std::to_string(line_no);
        out.push_back(acc::trigram_embedding(q.id, q.text));
    }
    return out;
}

int run_decontam(const DecontamArgs& args) {
    auto train = load_set(args.train, args.encoder);
    std::vector<acc::NamedEmbeddings> benches;
    for (const auto& entry : args.bench) {
        auto eq = entry.find('=');
        std::string name = eq == std::string::npos ? fs::path(entry).stem().string() : entry.substr(0, eq);
        std::string path = eq == std::string::npos ? entry : entry.substr(eq + 1);
        benches.push_back({name, load_set(path, args.encoder)});
    }
    auto report = acc::decontam_report(train, benches,
                                       args.encoder == "file" ? "external" : "trigram-256 (fallback)", args.jobs);
    write_file(fs::path(args.out) / "decontam.json", acc::render_decontam_report(report));
    std::cout << json{{"status", "ok"}, {"overall_auc", report.overall_auc}}.dump() << '\n';
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Compile agent trajectories into long-context training records and analyze the results"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(acc::kToolkitVersion));

    CompileArgs compile_args;
    auto* compile = app.add_subcommand("compile", "Parse, extract, compile, verify and emit a dataset");
    {
        auto& c = compile_args.config;
        compile->add_option("--input", c.input, "Trajectory JSONL")->required()->check(CLI::ExistingFile);
        compile->add_option("--out", c.out_dir, "Output directory")->required();
        compile->add_option("--seed", c.seed, "Base shuffle seed")->capture_default_str();
        compile->add_option("--budget", c.budget, "Token budget per example")
            ->capture_default_str()
            ->check(CLI::PositiveNumber);
        compile->add_option("--distractor-policy", compile_args.policy, "keep | drop | max:N")->capture_default_str();
        compile->add_option("--agent-type", compile_args.agent_type, "search | swe | sql | auto")->capture_default_str();
        compile->add_option("--template", compile_args.layout, "Prompt framing: search | swe | sql | auto")
            ->capture_default_str();
        compile->add_option("--teacher", compile_args.teacher, "Teacher endpoint URL or stub:<script.json>");
        compile->add_option("--n-candidates", c.n_candidates, "Teacher candidates per example")
            ->capture_default_str()
            ->check(CLI::PositiveNumber);
        compile->add_option("--token-table", compile_args.token_table, "Sidecar JSONL of exact piece token counts");
        compile->add_option("--bins", c.histogram_bins, "Length histogram bins")->capture_default_str();
        compile->add_flag("--strict", c.strict, "Fail on the first bad record");
        compile->add_flag("--derive-flags", c.derive_missing_flags, "Infer missing visited/opened/queried flags");
        compile->add_option("--jobs", c.jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    }

    StatsArgs stats_args;
    auto* stats = app.add_subcommand("stats", "Length histogram of an emitted dataset");
    stats->add_option("--input", stats_args.input, "dataset.jsonl")->required()->check(CLI::ExistingFile);
    stats->add_option("--out", stats_args.out, "Output directory")->required();
    stats->add_option("--bins", stats_args.bins)->capture_default_str()->check(CLI::PositiveNumber);

    MaskArgs mask_args;
    auto* mask = app.add_subcommand("mask", "Supervision masks for segmented chats or dataset records");
    mask->add_option("--input", mask_args.input, "JSONL of segment layouts or dataset records")
        ->required()
        ->check(CLI::ExistingFile);
    mask->add_option("--out", mask_args.out, "Output directory")->required();
    mask->add_option("--mode", mask_args.mode, "agent | acc | auto")->capture_default_str();
    mask->add_flag("--strict", mask_args.strict);

    AttnArgs attn_args;
    auto* attn = app.add_subcommand("analyze-attn", "Attention-distance deltas between base and fine-tuned dumps");
    attn->add_option("--base", attn_args.base, "Base-model attention dumps")->required()->check(CLI::ExistingFile);
    attn->add_option("--sft", attn_args.sft, "Fine-tuned attention dumps")->required()->check(CLI::ExistingFile);
    attn->add_option("--out", attn_args.out, "Output directory")->required();
    attn->add_option("--bins", attn_args.bins)->capture_default_str()->check(CLI::PositiveNumber);
    attn->add_option("--layers", attn_args.layers, "Comma list, ranges allowed (default: all)");
    attn->add_flag("--strict", attn_args.strict, "Treat empty distance bins as an error");

    ExpertArgs expert_args;
    auto* experts = app.add_subcommand("analyze-experts", "Expert-routing frequency deltas");
    experts->add_option("--base", expert_args.base, "Base-model router dumps")->required()->check(CLI::ExistingFile);
    experts->add_option("--sft", expert_args.sft, "Fine-tuned router dumps")->required()->check(CLI::ExistingFile);
    experts->add_option("--out", expert_args.out, "Output directory")->required();
    experts->add_option("--groups", expert_args.groups)->capture_default_str()->check(CLI::PositiveNumber);
    experts->add_option("--top", expert_args.top)->capture_default_str()->check(CLI::PositiveNumber);
    experts->add_option("--layers", expert_args.layers, "Comma list, ranges allowed (default: all)");

    DecontamArgs decontam_args;
    auto* decontam = app.add_subcommand("decontam", "Overlap metrics between training and benchmark questions");
    decontam->add_option("--train", decontam_args.train, "Training set")->required()->check(CLI::ExistingFile);
    decontam->add_option("--bench", decontam_args.bench, "Benchmark set as NAME=PATH (repeatable)")->required();
    decontam->add_option("--out", decontam_args.out, "Output directory")->required();
    decontam->add_option("--encoder", decontam_args.encoder, "file (precomputed embeddings) | trigram")
        ->capture_default_str();
    decontam->add_option("--jobs", decontam_args.jobs)->capture_default_str()->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report_error("UsageError", e.what());
    }

    try {
        if (*compile) return run_compile(compile_args);
        if (*stats) return run_stats(stats_args);
        if (*mask) return run_mask(mask_args);
        if (*attn) return run_analyze_attn(attn_args);
        if (*experts) return run_analyze_experts(expert_args);
        if (*decontam) return run_decontam(decontam_args);
    } catch (const acc::Error& e) {
        return report_error(acc::to_string(e.code()), e.what());
    } catch (const std::exception& e) {
        return report_error("InternalError", e.what());
    }
    return kExitError;
}
