#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "acc/trajectory.hpp"

namespace acc {

inline constexpr std::size_t kMaxQuestionChars = 3000;

/// A whitespace-normalized core question. `benchmark` is empty for training data.
struct QuestionRecord {
    std::string id;
    std::optional<std::string> benchmark;
    std::string text;

    bool is_train() const noexcept { return !benchmark.has_value(); }
};

/// Cuts attached evidence (documents, files, tables, patches) and prompt
/// framing from a user turn, collapses whitespace, and keeps at most
/// kMaxQuestionChars code points. Throws NoUserContent if nothing remains.
std::string extract_core_question(std::string_view user_text);

QuestionRecord extract_question(const Trajectory& trajectory);

/// Accepts a chat record ({"messages": [{role, content}, ...]}; user turns
/// are joined) or a flat record with a "question", "prompt", or "input" field.
/// Throws NoUserContent or SchemaError.
QuestionRecord extract_question_json(std::string_view json_line);

struct EmbeddingRecord {
    std::string id;
    std::vector<double> vector;

    std::size_t dim() const noexcept { return vector.size(); }
};

/// Scales to unit L2 norm. Throws InvalidArgument for the zero vector.
void normalize_embedding(EmbeddingRecord& record);

/// Throws FormatError unless the norm is 1 within `tolerance`.
void validate_unit_norm(const EmbeddingRecord& record, double tolerance = 1e-6);

/// One {"id": ..., "vec": [...]} object per line. Vectors are normalized on
/// load. Throws IOError, FormatError, or DimensionMismatch.
std::vector<EmbeddingRecord> read_embeddings(const std::string& path);

/// Offline stand-in for a neural encoder: hashed character-trigram counts,
/// L2-normalized. Not comparable with neural-encoder numbers.
inline constexpr std::size_t kTrigramDim = 256;
EmbeddingRecord trigram_embedding(const std::string& id, std::string_view text, std::size_t dim = kTrigramDim);

/// For each benchmark item, the highest cosine against any training item.
/// Throws EmptySet or DimensionMismatch.
std::vector<double> nn_cosines(std::span<const EmbeddingRecord> bench, std::span<const EmbeddingRecord> train,
                               std::size_t jobs = 1);
double avg_nn_cosine(std::span<const EmbeddingRecord> bench, std::span<const EmbeddingRecord> train,
                     std::size_t jobs = 1);

/// 1 - cos(centroid_a, centroid_b). Throws ZeroCentroid when a mean vector
/// has norm below 1e-12, plus EmptySet or DimensionMismatch.
double centroid_cosine_distance(std::span<const EmbeddingRecord> a, std::span<const EmbeddingRecord> b);

struct LogisticModel {
    std::vector<double> weights;
    double bias = 0.0;

    double score(std::span<const double> x) const;
};

struct LogisticOptions {
    double learning_rate = 0.1;
    std::size_t iterations = 500;
    double l2 = 1e-4;
};

/// Full-batch gradient descent on mean log-loss from a zero start.
/// Labels: train = 0, bench = 1.
LogisticModel fit_logistic(std::span<const EmbeddingRecord> train, std::span<const EmbeddingRecord> bench,
                           const LogisticOptions& options = {});

/// Mann-Whitney estimate of P(score_pos > score_neg), ties counting 1/2.
/// Throws EmptySet when either class is empty.
double auc_rank_statistic(std::span<const double> scores, std::span<const int> labels);

/// Fits the classifier and scores every input point (in-sample).
double linear_auc(std::span<const EmbeddingRecord> train, std::span<const EmbeddingRecord> bench,
                  const LogisticOptions& options = {});

struct BenchmarkOverlap {
    std::string name;
    std::size_t size = 0;
    double nn_sim = 0.0;
    double center_dist = 0.0;
    double auc = 0.0;
};

struct DecontamReport {
    std::string encoder;
    std::size_t train_size = 0;
    std::vector<BenchmarkOverlap> benchmarks;
    double overall_auc = 0.0;
};

struct NamedEmbeddings {
    std::string name;
    std::vector<EmbeddingRecord> records;
};

/// Per-benchmark NN similarity, centroid distance, and AUC, plus the AUC of
/// all benchmarks pooled against the training set.
DecontamReport decontam_report(const std::vector<EmbeddingRecord>& train, const std::vector<NamedEmbeddings>& benchmarks,
                               std::string encoder, std::size_t jobs = 1);

std::string render_decontam_report(const DecontamReport& report);

} // namespace acc
