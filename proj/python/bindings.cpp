#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "acc/attention.hpp"
#include "acc/compiler.hpp"
#include "acc/dataset.hpp"
#include "acc/decontam.hpp"
#include "acc/error.hpp"
#include "acc/mask.hpp"
#include "acc/pipeline.hpp"
#include "acc/prng.hpp"
#include "acc/routing.hpp"
#include "acc/verifier.hpp"

namespace py = pybind11;

namespace {

using Matrix = py::array_t<double, py::array::c_style | py::array::forcecast>;

acc::AgentType agent_type(const std::string& name) {
    auto t = acc::parse_agent_type(name);
    if (!t) throw acc::Error(acc::ErrorCode::InvalidArgument, "unknown agent type '" + name + "'");
    return *t;
}

std::vector<acc::EmbeddingRecord> embeddings(const Matrix& rows) {
    if (rows.ndim() != 2) throw acc::Error(acc::ErrorCode::DimensionMismatch, "expected a 2-D array");
    auto view = rows.unchecked<2>();
    std::vector<acc::EmbeddingRecord> out(static_cast<std::size_t>(view.shape(0)));
    for (py::ssize_t i = 0; i < view.shape(0); ++i) {
        out[i].id = std::to_string(i);
        out[i].vector.assign(view.data(i, 0), view.data(i, 0) + view.shape(1));
        acc::normalize_embedding(out[i]);
    }
    return out;
}

acc::SegmentedChat chat_from_parts(const std::vector<std::tuple<std::string, std::size_t, std::size_t>>& parts) {
    using K = acc::SegmentKind;
    std::vector<std::pair<acc::SegmentLabel, std::size_t>> labelled;
    for (const auto& [name, turn, length] : parts) {
        std::optional<K> kind;
        for (auto k : {K::Question, K::Reasoning, K::Action, K::Observation, K::FinalReasoning, K::Answer,
                       K::CompiledContext})
            if (acc::to_string(k) == name) kind = k;
        if (!kind) throw acc::Error(acc::ErrorCode::SchemaError, "unknown segment label '" + name + "'");
        labelled.push_back({{*kind, turn}, length});
    }
    return acc::SegmentedChat::from_lengths(labelled);
}

py::array_t<std::uint8_t> to_array(const acc::SupervisionMask& mask) {
    py::array_t<std::uint8_t> out(static_cast<py::ssize_t>(mask.bits.size()));
    std::copy(mask.bits.begin(), mask.bits.end(), out.mutable_data());
    return out;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Native core of acc_toolkit";
    m.attr("__version__") = std::string(acc::kToolkitVersion);
    m.attr("DEFAULT_TOKEN_BUDGET") = acc::kDefaultTokenBudget;

    static py::exception<acc::Error> acc_error(m, "AccError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const acc::Error& e) {
            py::object err = acc_error;
            py::object instance = err(std::string(acc::to_string(e.code())) + ": " + e.what());
            instance.attr("code") = std::string(acc::to_string(e.code()));
            PyErr_SetObject(acc_error.ptr(), instance.ptr());
        }
    });

    // PRNG
    m.def("splitmix64", [](std::uint64_t seed, std::size_t n) {
        acc::SplitMix64 rng(seed);
        std::vector<std::uint64_t> out(n);
        for (auto& v : out) v = rng.next();
        return out;
    }, py::arg("seed"), py::arg("n") = 1);
    m.def("permute", &acc::permute, py::arg("n"), py::arg("seed"), "1-based Fisher-Yates permutation");
    m.def("example_seed", &acc::example_seed, py::arg("base_seed"), py::arg("trajectory_id"));
    m.def("approximate_token_count", [](std::string_view text) { return acc::approximate_token_count(text); });

    // Compilation
    m.def("compile_record", [](const std::string& line, std::uint64_t seed, std::size_t budget,
                               const std::string& policy) {
        auto traj = acc::validate_trajectory(acc::parse_trajectory_record(line));
        acc::CompileOptions options;
        options.seed = seed;
        options.budget = budget;
        options.policy = acc::DistractorPolicy::parse(policy);
        auto ex = acc::compile_trajectory(traj, options);
        ex.rationale = traj.final_reasoning;
        return acc::serialize_record(acc::DatasetRecord::from_example(ex));
    }, py::arg("line"), py::arg("seed") = 0, py::arg("budget") = acc::kDefaultTokenBudget,
          py::arg("policy") = "keep", "Compile one trajectory JSON line; returns the dataset record as JSON text");

    m.def("run_compile", [](const std::string& input, const std::string& out_dir, std::uint64_t seed,
                            std::size_t budget, const std::string& policy, std::optional<std::string> teacher,
                            std::size_t jobs) {
        acc::CompileRunConfig config;
        config.input = input;
        config.out_dir = out_dir;
        config.seed = seed;
        config.budget = budget;
        config.policy = acc::DistractorPolicy::parse(policy);
        config.teacher = std::move(teacher);
        config.jobs = jobs;
        acc::CompileRunResult result;
        {
            py::gil_scoped_release release;
            result = acc::run_compile(config);
        }
        return py::make_tuple(result.records.size(), result.manifest.failures.size(), result.warnings);
    }, py::arg("input"), py::arg("out_dir"), py::arg("seed") = 0, py::arg("budget") = acc::kDefaultTokenBudget,
          py::arg("policy") = "keep", py::arg("teacher") = py::none(), py::arg("jobs") = 1,
          "Returns (records, failures, warnings)");

    // Masks
    m.def("agent_mask", [](const std::vector<std::tuple<std::string, std::size_t, std::size_t>>& parts) {
        return to_array(acc::build_agent_mask(chat_from_parts(parts)));
    }, py::arg("parts"), "parts: (label, turn, length) triples");
    m.def("acc_mask", [](const std::vector<std::tuple<std::string, std::size_t, std::size_t>>& parts) {
        return to_array(acc::build_acc_mask(chat_from_parts(parts)));
    }, py::arg("parts"));
    m.def("loss_terms", [](const std::vector<std::tuple<std::string, std::size_t, std::size_t>>& parts,
                           const std::vector<double>& loss) {
        auto report = acc::loss_term_report(chat_from_parts(parts), loss);
        return py::make_tuple(report.local_terms, report.final_term);
    }, py::arg("parts"), py::arg("per_token_loss"), "Returns (local_terms, final_term)");

    // Verification
    m.def("normalize_answer", &acc::normalize_answer);
    m.def("verify_answer", [](std::string_view candidate, std::string_view gold, const std::string& type) {
        return acc::verify_answer(candidate, gold, agent_type(type));
    }, py::arg("candidate"), py::arg("gold"), py::arg("agent_type"));
    m.def("extract_answer", [](std::string_view output, std::string_view marker) {
        auto a = acc::extract_answer(output, marker);
        return py::make_tuple(a.rationale, a.answer);
    }, py::arg("output"), py::arg("marker") = acc::kDefaultAnswerMarker);

    // Attention distance
    m.def("head_bin_means", [](py::array_t<float, py::array::c_style | py::array::forcecast> matrix,
                               std::size_t n_bins, bool validate) {
        if (matrix.ndim() != 2 || matrix.shape(0) != matrix.shape(1))
            throw acc::Error(acc::ErrorCode::ShapeMismatch, "expected a square matrix");
        const auto T = static_cast<std::size_t>(matrix.shape(0));
        std::span<const float> values(matrix.data(), T * T);
        if (validate) acc::validate_attention_matrix(values, T, false);
        return acc::head_bin_means(values, acc::make_bins(T, n_bins));
    }, py::arg("matrix"), py::arg("n_bins") = 32, py::arg("validate") = true,
          "Mean attention per distance bin; None for empty bins");

    // Expert routing
    m.def("expert_frequencies", [](py::array_t<std::uint16_t, py::array::c_style | py::array::forcecast> selected,
                                   std::size_t n_experts, std::size_t n_groups) {
        if (selected.ndim() != 3) throw acc::Error(acc::ErrorCode::ShapeMismatch, "expected (layers, tokens, k)");
        acc::RouterDump dump;
        dump.n_layers = static_cast<std::uint32_t>(selected.shape(0));
        dump.seq_len = static_cast<std::uint32_t>(selected.shape(1));
        dump.top_k = static_cast<std::uint32_t>(selected.shape(2));
        dump.n_experts = static_cast<std::uint32_t>(n_experts);
        dump.experts.assign(selected.data(), selected.data() + selected.size());
        acc::validate_router_dump(dump);
        auto f = acc::expert_frequencies(dump, n_groups);
        py::array_t<double> out({f.n_layers, f.n_experts, f.n_groups});
        std::copy(f.freq.begin(), f.freq.end(), out.mutable_data());
        return out;
    }, py::arg("selected"), py::arg("n_experts"), py::arg("n_groups") = 32,
          "Top-k selection frequency per (layer, expert, group)");

    // Decontamination
    m.def("extract_question", [](std::string_view text) { return acc::extract_core_question(text); });
    m.def("trigram_embedding", [](std::string_view text) {
        return acc::trigram_embedding("", text).vector;
    });
    m.def("avg_nn_cosine", [](const Matrix& bench, const Matrix& train) {
        return acc::avg_nn_cosine(embeddings(bench), embeddings(train));
    }, py::arg("bench"), py::arg("train"));
    m.def("centroid_cosine_distance", [](const Matrix& a, const Matrix& b) {
        return acc::centroid_cosine_distance(embeddings(a), embeddings(b));
    });
    m.def("linear_auc", [](const Matrix& train, const Matrix& bench) {
        return acc::linear_auc(embeddings(train), embeddings(bench));
    }, py::arg("train"), py::arg("bench"));
    m.def("auc", [](const std::vector<double>& scores, const std::vector<int>& labels) {
        return acc::auc_rank_statistic(scores, labels);
    }, py::arg("scores"), py::arg("labels"));
}
