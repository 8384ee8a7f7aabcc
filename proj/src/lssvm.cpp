#include "polypseg/lssvm.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

namespace polypseg::lssvm {

void Matrix::push_row(std::span<const double> r) {
    if (rows == 0 && cols == 0) cols = r.size();
    if (r.size() != cols) throw std::invalid_argument("row length does not match matrix width");
    values.insert(values.end(), r.begin(), r.end());
    ++rows;
}

Normalizer::Normalizer(std::vector<double> min, std::vector<double> max) : min_(std::move(min)), max_(std::move(max)) {
    if (min_.size() != max_.size()) throw std::invalid_argument("normalizer bounds differ in length");
}

Normalizer Normalizer::fit(const Matrix& train) {
    if (train.rows == 0) throw std::invalid_argument("empty training set");
    std::vector<double> lo(train.row(0).begin(), train.row(0).end());
    std::vector<double> hi = lo;
    for (std::size_t i = 1; i < train.rows; ++i)
        for (std::size_t j = 0; j < train.cols; ++j) {
            lo[j] = std::min(lo[j], train(i, j));
            hi[j] = std::max(hi[j], train(i, j));
        }
    return {std::move(lo), std::move(hi)};
}

std::vector<double> Normalizer::apply(std::span<const double> x) const {
    if (x.size() != min_.size())
        throw std::invalid_argument("feature vector has " + std::to_string(x.size()) + " entries, expected " +
                                    std::to_string(min_.size()));
    std::vector<double> out(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double range = max_[j] - min_[j];
        out[j] = range > 0 ? std::clamp((x[j] - min_[j]) / range, 0.0, 1.0) : 0.0;
    }
    return out;
}

Matrix Normalizer::apply(const Matrix& m) const {
    Matrix out;
    for (std::size_t i = 0; i < m.rows; ++i) out.push_row(apply(m.row(i)));
    if (m.rows == 0) out.cols = m.cols;
    return out;
}

void validate(const TrainConfig& cfg) {
    if (!(cfg.gamma > 0)) throw std::invalid_argument("gamma must be positive");
    if (!(cfg.sigma > 0)) throw std::invalid_argument("sigma must be positive");
    if (!(cfg.weight_polyp > 0)) throw std::invalid_argument("weight_polyp must be positive");
}

double rbf(std::span<const double> a, std::span<const double> b, double sigma) {
    double d2 = 0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double d = a[j] - b[j];
        d2 += d * d;
    }
    return std::exp(-d2 / (2.0 * sigma * sigma));
}

TrainedModel train(const Matrix& x, std::span<const Label> y, const TrainConfig& cfg, Normalizer normalizer) {
    validate(cfg);
    const std::size_t n = x.rows;
    if (n != y.size()) throw std::invalid_argument("label count does not match row count");
    if (n < 2) throw std::invalid_argument("training needs at least 2 rows");
    const auto pos = static_cast<std::size_t>(std::count(y.begin(), y.end(), Label::Polyp));
    if (pos == 0 || pos == n) throw std::invalid_argument("single class training set");

    Eigen::MatrixXd a(n + 1, n + 1);
    Eigen::VectorXd rhs(n + 1);
    a(0, 0) = 0;
    rhs(0) = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto ii = static_cast<Eigen::Index>(i + 1);
        a(0, ii) = a(ii, 0) = 1;
        rhs(ii) = to_target(y[i]);
        for (std::size_t j = 0; j < i; ++j) {
            const auto jj = static_cast<Eigen::Index>(j + 1);
            a(ii, jj) = a(jj, ii) = rbf(x.row(i), x.row(j), cfg.sigma);
        }
        const double weight = y[i] == Label::Polyp ? cfg.weight_polyp : 1.0;
        a(ii, ii) = 1.0 + 1.0 / (cfg.gamma * weight);
    }

    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
    const double rcond = lu.rcond();
    const double min_pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
    if (!(rcond > 1e-15) || !(min_pivot > 0)) {
        std::ostringstream msg;
        msg << "singular LS-SVM system (reciprocal condition estimate " << rcond << ")";
        throw SingularSystem(msg.str());
    }
    Eigen::VectorXd sol = lu.solve(rhs);
    double residual = (a * sol - rhs).lpNorm<Eigen::Infinity>();
    if (!(residual <= 1e-8)) {
        sol += lu.solve(rhs - a * sol);
        residual = (a * sol - rhs).lpNorm<Eigen::Infinity>();
    }
    if (!(residual <= 1e-8)) {
        std::ostringstream msg;
        msg << "LS-SVM solve residual " << residual << " exceeds 1e-8 (reciprocal condition estimate " << rcond << ")";
        throw SingularSystem(msg.str());
    }

    TrainedModel model;
    model.support = x;
    model.bias = sol(0);
    model.alpha.assign(sol.data() + 1, sol.data() + n + 1);
    model.sigma = cfg.sigma;
    model.gamma = cfg.gamma;
    model.normalizer = normalizer.dims() ? std::move(normalizer)
                                         : Normalizer(std::vector<double>(x.cols, 0.0), std::vector<double>(x.cols, 1.0));
    model.residual = residual;
    model.positives = pos;
    model.negatives = n - pos;
    return model;
}

TrainedModel fit(const Matrix& raw, std::span<const Label> y, const TrainConfig& cfg) {
    Normalizer norm = Normalizer::fit(raw);
    const Matrix x = norm.apply(raw);
    return train(x, y, cfg, std::move(norm));
}

double predict_score(const TrainedModel& model, std::span<const double> raw) {
    const std::vector<double> x = model.normalizer.apply(raw);
    double score = model.bias;
    for (std::size_t i = 0; i < model.alpha.size(); ++i) score += model.alpha[i] * rbf(x, model.support.row(i), model.sigma);
    return score;
}

Label predict_label(const TrainedModel& model, std::span<const double> raw) {
    return label_from_score(predict_score(model, raw));
}

GridSearchResult grid_search(const Matrix& raw, std::span<const Label> y, std::span<const std::string> groups,
                             const TrainConfig& base) {
    validate(base);
    if (groups.size() != raw.rows || y.size() != raw.rows)
        throw std::invalid_argument("grid search inputs differ in length");
    std::map<std::string, std::vector<std::size_t>> folds;
    for (std::size_t i = 0; i < groups.size(); ++i) folds[groups[i]].push_back(i);
    if (folds.size() < 2) throw std::invalid_argument("grid search needs at least 2 groups");

    GridSearchResult result{base, -1.0};
    for (const double gamma : {0.1, 1.0, 10.0, 100.0})
        for (const double scale : {0.25, 0.5, 1.0, 2.0}) {
            TrainConfig cfg = base;
            cfg.gamma = gamma;
            cfg.sigma = base.sigma * scale;
            std::size_t tp = 0, tn = 0, pos = 0, neg = 0;
            for (const auto& [group, held] : folds) {
                Matrix train_rows;
                std::vector<Label> train_y;
                for (std::size_t i = 0; i < raw.rows; ++i)
                    if (groups[i] != group) {
                        train_rows.push_row(raw.row(i));
                        train_y.push_back(y[i]);
                    }
                const auto p = std::count(train_y.begin(), train_y.end(), Label::Polyp);
                if (p == 0 || static_cast<std::size_t>(p) == train_y.size()) continue;
                const TrainedModel m = fit(train_rows, train_y, cfg);
                for (const std::size_t i : held) {
                    const Label got = predict_label(m, raw.row(i));
                    if (y[i] == Label::Polyp) {
                        ++pos;
                        tp += got == Label::Polyp;
                    } else {
                        ++neg;
                        tn += got == Label::Normal;
                    }
                }
            }
            if (pos == 0 || neg == 0) continue;
            const double score = 0.5 * (double(tp) / double(pos) + double(tn) / double(neg));
            if (score > result.best_score) result = {cfg, score};
        }
    if (result.best_score < 0) throw std::invalid_argument("grid search found no usable fold");
    return result;
}

namespace {

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace

nlohmann::json to_json(const TrainedModel& model, std::uint64_t feature_hash) {
    nlohmann::json vectors = nlohmann::json::array();
    for (std::size_t i = 0; i < model.support.rows; ++i)
        vectors.push_back(std::vector<double>(model.support.row(i).begin(), model.support.row(i).end()));
    return {{"sigma", model.sigma},
            {"gamma", model.gamma},
            {"bias", model.bias},
            {"alphas", model.alpha},
            {"training_vectors", std::move(vectors)},
            {"normalizer", {{"min", model.normalizer.min()}, {"max", model.normalizer.max()}}},
            {"feature_order_hash", hex64(feature_hash)},
            {"residual", model.residual},
            {"class_counts", {{"polyp", model.positives}, {"normal", model.negatives}}}};
}

TrainedModel from_json(const nlohmann::json& j, std::uint64_t expected_feature_hash) {
    const std::string stored = j.at("feature_order_hash").get<std::string>();
    if (stored != hex64(expected_feature_hash))
        throw std::runtime_error("model feature layout " + stored + " does not match " + hex64(expected_feature_hash));
    TrainedModel m;
    m.sigma = j.at("sigma").get<double>();
    m.gamma = j.at("gamma").get<double>();
    m.bias = j.at("bias").get<double>();
    m.alpha = j.at("alphas").get<std::vector<double>>();
    for (const auto& row : j.at("training_vectors")) m.support.push_row(row.get<std::vector<double>>());
    m.normalizer = Normalizer(j.at("normalizer").at("min").get<std::vector<double>>(),
                              j.at("normalizer").at("max").get<std::vector<double>>());
    m.residual = j.value("residual", 0.0);
    if (j.contains("class_counts")) {
        m.positives = j["class_counts"].value("polyp", std::size_t{0});
        m.negatives = j["class_counts"].value("normal", std::size_t{0});
    }
    if (m.alpha.size() != m.support.rows) throw std::runtime_error("model alphas do not match training vectors");
    if (m.support.rows > 0 && m.support.cols != m.normalizer.dims())
        throw std::runtime_error("model normalizer does not match training vector width");
    return m;
}

}  // namespace polypseg::lssvm
