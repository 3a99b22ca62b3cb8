#include "acc/decontam.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "acc/compiler.hpp"
#include "acc/dataset.hpp"
#include "acc/error.hpp"
#include "acc/parallel.hpp"
#include "acc/prng.hpp"
#include "json_util.hpp"
#include "text_util.hpp"

namespace acc {

namespace {

using nlohmann::json;

// Earliest of these starts the attached material in a compiled or agent prompt.
constexpr std::string_view kEvidenceMarkers[] = {
    "\nDocuments:", "\nContext:", "[Doc ", "[File ", "[Table: ", "<patch>", "```", "diff --git ",
};

bool starts_with_ci(std::string_view s, std::string_view prefix) {
    return s.size() >= prefix.size() && detail::iequals(s.substr(0, prefix.size()), prefix);
}

// Cuts after `max_chars` UTF-8 code points.
std::string truncate_code_points(std::string text, std::size_t max_chars) {
    std::size_t chars = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if ((static_cast<unsigned char>(text[i]) & 0xC0) == 0x80) continue;
        if (chars == max_chars) {
            text.resize(i);
            break;
        }
        ++chars;
    }
    return text;
}

void require_nonempty_same_dim(std::span<const EmbeddingRecord> a, std::span<const EmbeddingRecord> b) {
    if (a.empty() || b.empty()) throw Error(ErrorCode::EmptySet, "embedding set is empty");
    const auto dim = a.front().dim();
    auto check = [&](std::span<const EmbeddingRecord> set) {
        for (const auto& r : set)
            if (r.dim() != dim)
                throw Error(ErrorCode::DimensionMismatch, "embedding '" + r.id + "' has dimension " +
                                                              std::to_string(r.dim()) + ", expected " +
                                                              std::to_string(dim));
    };
    check(a);
    check(b);
}

double dot(std::span<const double> a, std::span<const double> b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

std::vector<double> unit_centroid(std::span<const EmbeddingRecord> set) {
    std::vector<double> mean(set.front().dim(), 0.0);
    for (const auto& r : set)
        for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += r.vector[i];
    for (auto& v : mean) v /= static_cast<double>(set.size());
    const double norm = std::sqrt(dot(mean, mean));
    if (norm < 1e-12) throw Error(ErrorCode::ZeroCentroid, "centroid norm is below 1e-12");
    for (auto& v : mean) v /= norm;
    return mean;
}

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

} // namespace

std::string extract_core_question(std::string_view user_text) {
    std::size_t cut = user_text.size();
    for (auto marker : kEvidenceMarkers) cut = std::min(cut, user_text.find(marker));
    std::string_view core = detail::trim(user_text.substr(0, cut));
    if (starts_with_ci(core, "Question:")) core = detail::trim(core.substr(9));
    if (core.starts_with(kSearchInstruction)) core = detail::trim(core.substr(kSearchInstruction.size()));
    auto text = truncate_code_points(detail::collapse_whitespace(core), kMaxQuestionChars);
    if (text.empty()) throw Error(ErrorCode::NoUserContent, "no question text after stripping attachments");
    return text;
}

QuestionRecord extract_question(const Trajectory& trajectory) {
    return {trajectory.id, std::nullopt, extract_core_question(trajectory.question)};
}

QuestionRecord extract_question_json(std::string_view json_line) {
    json j = json::parse(json_line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::SchemaError, "record is not a JSON object");

    QuestionRecord out;
    for (const char* key : {"id", "example_id", "question_id"})
        if (auto it = j.find(key); it != j.end()) {
            out.id = it->is_string() ? it->get<std::string>() : detail::dump_line(*it);
            break;
        }

    std::string user;
    if (auto it = j.find("messages"); it != j.end() && it->is_array()) {
        for (const auto& m : *it) {
            if (!m.is_object() || m.value("role", "") != "user") continue;
            auto content = m.find("content");
            if (content == m.end()) continue;
            if (content->is_string()) {
                if (!user.empty()) user += '\n';
                user += content->get<std::string>();
            } else if (content->is_array()) {
                for (const auto& part : *content)
                    if (part.is_object() && part.contains("text") && part["text"].is_string()) {
                        if (!user.empty()) user += '\n';
                        user += part["text"].get<std::string>();
                    }
            }
        }
    } else {
        for (const char* key : {"question", "prompt", "input"})
            if (auto it = j.find(key); it != j.end() && it->is_string()) {
                user = it->get<std::string>();
                break;
            }
    }
    if (detail::trim(user).empty()) throw Error(ErrorCode::NoUserContent, "record has no user turn or question field");
    out.text = extract_core_question(user);
    return out;
}

void normalize_embedding(EmbeddingRecord& record) {
    const double norm = std::sqrt(dot(record.vector, record.vector));
    if (norm == 0.0 || !std::isfinite(norm))
        throw Error(ErrorCode::InvalidArgument, "embedding '" + record.id + "' cannot be normalized");
    for (auto& v : record.vector) v /= norm;
}

void validate_unit_norm(const EmbeddingRecord& record, double tolerance) {
    const double norm = std::sqrt(dot(record.vector, record.vector));
    if (std::fabs(norm - 1.0) > tolerance)
        throw Error(ErrorCode::FormatError, "embedding '" + record.id + "' has norm " + format_number(norm));
}

std::vector<EmbeddingRecord> read_embeddings(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IOError, "cannot open embedding file: " + path);
    std::vector<EmbeddingRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        auto where = path + ":" + std::to_string(line_no);
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("vec") || !j["vec"].is_array())
            throw Error(ErrorCode::FormatError, where + ": expected {\"id\", \"vec\"}");
        EmbeddingRecord r;
        if (auto it = j.find("id"); it != j.end())
            r.id = it->is_string() ? it->get<std::string>() : detail::dump_line(*it);
        else
            r.id = std::to_string(line_no);
        for (const auto& v : j["vec"]) {
            if (!v.is_number()) throw Error(ErrorCode::FormatError, where + ": non-numeric vector entry");
            r.vector.push_back(v.get<double>());
        }
        if (!out.empty() && r.dim() != out.front().dim())
            throw Error(ErrorCode::DimensionMismatch, where + ": dimension " + std::to_string(r.dim()) +
                                                          " differs from " + std::to_string(out.front().dim()));
        normalize_embedding(r);
        out.push_back(std::move(r));
    }
    return out;
}

EmbeddingRecord trigram_embedding(const std::string& id, std::string_view text, std::size_t dim) {
    if (dim == 0) throw Error(ErrorCode::InvalidArgument, "embedding dimension must be positive");
    auto lowered = detail::to_lower(detail::collapse_whitespace(text));
    EmbeddingRecord r{id, std::vector<double>(dim, 0.0)};
    if (lowered.empty()) throw Error(ErrorCode::NoUserContent, "cannot embed empty text");
    if (lowered.size() < 3) {
        r.vector[fnv1a64(lowered) % dim] = 1.0;
    } else {
        for (std::size_t i = 0; i + 3 <= lowered.size(); ++i)
            r.vector[fnv1a64(std::string_view(lowered).substr(i, 3)) % dim] += 1.0;
    }
    normalize_embedding(r);
    return r;
}

std::vector<double> nn_cosines(std::span<const EmbeddingRecord> bench, std::span<const EmbeddingRecord> train,
                               std::size_t jobs) {
    require_nonempty_same_dim(bench, train);
    std::vector<double> best(bench.size());
    parallel_for(bench.size(), jobs, [&](std::size_t i) {
        double m = -std::numeric_limits<double>::infinity();
        for (const auto& t : train) m = std::max(m, dot(bench[i].vector, t.vector));
        best[i] = m;
    });
    return best;
}

double avg_nn_cosine(std::span<const EmbeddingRecord> bench, std::span<const EmbeddingRecord> train,
                     std::size_t jobs) {
    auto best = nn_cosines(bench, train, jobs);
    return std::accumulate(best.begin(), best.end(), 0.0) / static_cast<double>(best.size());
}

double centroid_cosine_distance(std::span<const EmbeddingRecord> a, std::span<const EmbeddingRecord> b) {
    require_nonempty_same_dim(a, b);
    return 1.0 - dot(unit_centroid(a), unit_centroid(b));
}

double LogisticModel::score(std::span<const double> x) const { return dot(weights, x) + bias; }

LogisticModel fit_logistic(std::span<const EmbeddingRecord> train, std::span<const EmbeddingRecord> bench,
                           const LogisticOptions& options) {
    require_nonempty_same_dim(train, bench);
    const std::size_t dim = train.front().dim();
    const double n = static_cast<double>(train.size() + bench.size());
    LogisticModel model{std::vector<double>(dim, 0.0), 0.0};
    std::vector<double> grad(dim);
    for (std::size_t it = 0; it < options.iterations; ++it) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double grad_bias = 0.0;
        auto add = [&](std::span<const EmbeddingRecord> set, double label) {
            for (const auto& r : set) {
                const double err = sigmoid(model.score(r.vector)) - label;
                for (std::size_t i = 0; i < dim; ++i) grad[i] += err * r.vector[i];
                grad_bias += err;
            }
        };
        add(train, 0.0);
        add(bench, 1.0);
        for (std::size_t i = 0; i < dim; ++i)
            model.weights[i] -= options.learning_rate * (grad[i] / n + options.l2 * model.weights[i]);
        model.bias -= options.learning_rate * grad_bias / n;
    }
    return model;
}

double auc_rank_statistic(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw Error(ErrorCode::LengthMismatch, "scores and labels differ in length");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double pos_rank_sum = 0.0;
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k)
            if (labels[order[k]] != 0) {
                pos_rank_sum += avg_rank;
                ++n_pos;
            }
        i = j;
    }
    const std::size_t n_neg = scores.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) throw Error(ErrorCode::EmptySet, "AUC needs both classes");
    const double np = static_cast<double>(n_pos);
    return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

double linear_auc(std::span<const EmbeddingRecord> train, std::span<const EmbeddingRecord> bench,
                  const LogisticOptions& options) {
    const auto model = fit_logistic(train, bench, options);
    std::vector<double> scores;
    std::vector<int> labels;
    scores.reserve(train.size() + bench.size());
    for (const auto& r : train) {
        scores.push_back(model.score(r.vector));
        labels.push_back(0);
    }
    for (const auto& r : bench) {
        scores.push_back(model.score(r.vector));
        labels.push_back(1);
    }
    return auc_rank_statistic(scores, labels);
}

DecontamReport decontam_report(const std::vector<EmbeddingRecord>& train, const std::vector<NamedEmbeddings>& benchmarks,
                               std::string encoder, std::size_t jobs) {
    if (benchmarks.empty()) throw Error(ErrorCode::EmptySet, "no benchmark sets given");
    DecontamReport report;
    report.encoder = std::move(encoder);
    report.train_size = train.size();
    std::vector<EmbeddingRecord> pooled;
    for (const auto& b : benchmarks) {
        BenchmarkOverlap row;
        row.name = b.name;
        row.size = b.records.size();
        row.nn_sim = avg_nn_cosine(b.records, train, jobs);
        row.center_dist = centroid_cosine_distance(b.records, train);
        row.auc = linear_auc(train, b.records);
        report.benchmarks.push_back(std::move(row));
        pooled.insert(pooled.end(), b.records.begin(), b.records.end());
    }
    report.overall_auc = linear_auc(train, pooled);
    return report;
}

std::string render_decontam_report(const DecontamReport& report) {
    json j = json::object();
    j["encoder"] = report.encoder;
    j["train_size"] = report.train_size;
    j["auc_scoring"] = "in-sample";
    json rows = json::array();
    for (const auto& b : report.benchmarks)
        rows.push_back({{"name", b.name}, {"size", b.size}, {"nn_sim", b.nn_sim}, {"center_dist", b.center_dist},
                        {"auc", b.auc}});
    j["benchmarks"] = std::move(rows);
    j["overall_auc"] = report.overall_auc;
    return j.dump(2) + "\n";
}

} // namespace acc
