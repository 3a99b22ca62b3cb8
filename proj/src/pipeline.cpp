#include "acc/pipeline.hpp"

#include <filesystem>
#include <fstream>

#include "acc/error.hpp"
#include "acc/parallel.hpp"

namespace acc {

namespace {

struct Slot {
    std::optional<CompiledExample> example;
    std::optional<CompileFailure> failure;
};

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IOError, "cannot write " + path.string());
    out << text;
    if (!out) throw Error(ErrorCode::IOError, "write failed: " + path.string());
}

} // namespace

std::vector<std::pair<std::string, std::string>> describe_config(const CompileRunConfig& config) {
    return {
        {"input", config.input},
        {"seed", std::to_string(config.seed)},
        {"budget", std::to_string(config.budget)},
        {"distractor_policy", config.policy.to_string()},
        {"agent_type", config.agent_type ? std::string(to_string(*config.agent_type)) : "auto"},
        {"template", config.layout ? std::string(to_string(*config.layout)) : "auto"},
        {"teacher", config.teacher.value_or("")},
        {"n_candidates", std::to_string(config.n_candidates)},
        {"strictness", config.strict ? "strict" : "lenient"},
        {"derive_missing_flags", config.derive_missing_flags ? "true" : "false"},
        {"token_table", config.token_table.value_or("")},
        {"histogram_bins", std::to_string(config.histogram_bins)},
    };
}

CompileRunResult compile_corpus(const ParseResult& parsed, const CompileRunConfig& config, TeacherClient* teacher) {
    CompileOptions options;
    options.seed = config.seed;
    options.budget = config.budget;
    options.policy = config.policy;
    options.layout = config.layout;
    if (config.token_table) options.counter = TokenCounter::from_sidecar(*config.token_table);

    const auto& trajectories = parsed.trajectories;
    std::vector<Slot> slots(trajectories.size());
    parallel_for(trajectories.size(), config.jobs, [&](std::size_t i) {
        try {
            slots[i].example = compile_trajectory(trajectories[i], options);
        } catch (const Error& e) {
            if (config.strict) throw;
            slots[i].failure = CompileFailure{trajectories[i].id, e.code(), e.what()};
        }
    });

    CompileRunResult result;
    auto& info = result.manifest;
    info.seed = config.seed;
    info.budget = config.budget;
    info.config = describe_config(config);
    info.parse_issues = parsed.issues;
    result.warnings = parsed.issues.size();

    std::vector<CompiledExample> examples;
    for (auto& s : slots) {
        if (s.failure) {
            info.failures.push_back(std::move(*s.failure));
            ++result.warnings;
        } else {
            examples.push_back(std::move(*s.example));
        }
    }

    if (teacher) {
        info.rationale_source = "teacher";
        VerifyOptions vopts;
        vopts.n_candidates = config.n_candidates;
        auto outcomes = attach_rationales(examples, *teacher, vopts, config.jobs);
        info.pass_rates = pass_rate_report(outcomes);
        for (const auto& o : outcomes) {
            if (o.deferred) {
                info.deferred.push_back(o.example_id);
                ++result.warnings;
            } else if (!o.passed) {
                info.rejected.push_back(o.example_id);
            }
        }
    } else {
        for (std::size_t i = 0, j = 0; i < slots.size(); ++i)
            if (slots[i].example) examples[j++].rationale = trajectories[i].final_reasoning;
    }

    for (const auto& ex : examples)
        if (ex.rationale) result.records.push_back(DatasetRecord::from_example(ex));
    return result;
}

CompileRunResult run_compile(const CompileRunConfig& config) {
    ParseOptions popts;
    popts.agent_type_hint = config.agent_type;
    popts.strictness = config.strict ? Strictness::Strict : Strictness::Lenient;
    popts.derive_missing_flags = config.derive_missing_flags;
    popts.jobs = config.jobs;
    auto parsed = parse_trajectory_file(config.input, popts);

    std::unique_ptr<TeacherClient> teacher;
    if (config.teacher && !config.teacher->empty()) teacher = make_teacher(*config.teacher);

    auto result = compile_corpus(parsed, config, teacher.get());

    const std::filesystem::path out = config.out_dir;
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    if (ec) throw Error(ErrorCode::IOError, "cannot create " + out.string() + ": " + ec.message());
    emit_dataset(result.records, (out / "dataset.jsonl").string(), (out / "manifest.json").string(), result.manifest);
    write_text(out / "histogram.csv", result.records.empty()
                                          ? std::string("agent_type,bin_start,bin_end,count\n")
                                          : histogram_csv(length_histogram(result.records, config.histogram_bins)));
    return result;
}

} // namespace acc
