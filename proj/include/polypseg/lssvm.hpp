#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace polypseg::lssvm {

/// Row-major feature matrix.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

    std::span<const double> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
    std::span<double> row(std::size_t i) { return {values.data() + i * cols, cols}; }
    double& operator()(std::size_t i, std::size_t j) { return values[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }

    void push_row(std::span<const double> r);
};

enum class Label { Normal, Polyp };

inline double to_target(Label l) { return l == Label::Polyp ? 1.0 : -1.0; }

/// Per-feature min-max scaling fitted on training rows.
class Normalizer {
public:
    Normalizer() = default;
    Normalizer(std::vector<double> min, std::vector<double> max);

    static Normalizer fit(const Matrix& train);

    std::size_t dims() const { return min_.size(); }
    /// (x - min) / (max - min) clamped to [0,1]; constant features map to 0.
    std::vector<double> apply(std::span<const double> x) const;
    Matrix apply(const Matrix& m) const;

    const std::vector<double>& min() const { return min_; }
    const std::vector<double>& max() const { return max_; }

private:
    std::vector<double> min_;
    std::vector<double> max_;
};

inline double default_sigma(std::size_t dims) { return std::sqrt(static_cast<double>(dims) / 2.0); }

struct TrainConfig {
    double gamma = 10.0;
    double sigma = default_sigma(164);
    /// Scales the regularization of polyp rows: their ridge term is 1/(gamma*weight_polyp).
    double weight_polyp = 1.0;
};

void validate(const TrainConfig& cfg);

struct SingularSystem : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Gaussian RBF kernel exp(-|a-b|^2 / (2 sigma^2)).
double rbf(std::span<const double> a, std::span<const double> b, double sigma);

struct TrainedModel {
    Matrix support;              ///< normalized training vectors
    std::vector<double> alpha;   ///< one dual coefficient per training row
    double bias = 0;
    double sigma = 1;
    double gamma = 1;
    Normalizer normalizer;
    double residual = 0;         ///< max-norm residual of the KKT system at training time
    std::size_t positives = 0;
    std::size_t negatives = 0;
};

/// Solves [[0, 1^T], [1, K + D]] [b; alpha] = [0; y] with D = diag(1/(gamma*w_i)).
/// `x` must already be normalized; the normalizer is stored with the model for prediction.
TrainedModel train(const Matrix& x, std::span<const Label> y, const TrainConfig& cfg, Normalizer normalizer = {});

/// Fits the normalizer on `raw` and trains on the normalized rows.
TrainedModel fit(const Matrix& raw, std::span<const Label> y, const TrainConfig& cfg);

/// Score on a raw (unnormalized) feature vector.
double predict_score(const TrainedModel& model, std::span<const double> raw);
/// Polyp iff score >= 0.
inline Label label_from_score(double score) { return score >= 0 ? Label::Polyp : Label::Normal; }
Label predict_label(const TrainedModel& model, std::span<const double> raw);

struct GridSearchResult {
    TrainConfig best;
    double best_score = 0;  ///< balanced accuracy of held-out predictions
};

/// Leave-one-group-out search over gamma in {0.1,1,10,100} and sigma in {s/4, s/2, s, 2s}.
/// Groups are typically patient ids. Folds whose training part is single-class are skipped.
GridSearchResult grid_search(const Matrix& raw, std::span<const Label> y, std::span<const std::string> groups,
                             const TrainConfig& base);

nlohmann::json to_json(const TrainedModel& model, std::uint64_t feature_hash);
/// Throws when the stored feature hash differs from `expected_feature_hash`.
TrainedModel from_json(const nlohmann::json& j, std::uint64_t expected_feature_hash);

}  // namespace polypseg::lssvm
