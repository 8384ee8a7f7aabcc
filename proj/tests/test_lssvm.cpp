#include <doctest.h>

#include <random>

#include "polypseg/lssvm.hpp"
#include "support.hpp"

using namespace polypseg::lssvm;

namespace {

Matrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double lo = 0, double hi = 1) {
    Matrix m(rows, cols);
    for (auto& v : m.values) v = testsupport::uniform_real(rng, lo, hi);
    return m;
}

std::vector<Label> random_labels(std::mt19937_64& rng, std::size_t n) {
    std::vector<Label> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = (rng() & 1) ? Label::Polyp : Label::Normal;
    y[0] = Label::Polyp;
    y[1] = Label::Normal;
    return y;
}

std::vector<std::vector<double>> rows_of(const Matrix& m) {
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < m.rows; ++i) out.emplace_back(m.row(i).begin(), m.row(i).end());
    return out;
}

std::vector<double> targets(const std::vector<Label>& y) {
    std::vector<double> t;
    for (const Label l : y) t.push_back(to_target(l));
    return t;
}

}  // namespace

TEST_CASE("normalizer examples") {
    Matrix one(1, 3);
    one.values = {4, -2, 9};
    const Normalizer single = Normalizer::fit(one);
    CHECK(single.apply(std::vector<double>{4, -2, 9}) == std::vector<double>{0, 0, 0});
    CHECK(single.apply(std::vector<double>{100, 100, 100}) == std::vector<double>{0, 0, 0});

    Matrix col(2, 1);
    col.values = {0, 10};
    const Normalizer n = Normalizer::fit(col);
    CHECK(n.apply(std::vector<double>{0})[0] == 0.0);
    CHECK(n.apply(std::vector<double>{10})[0] == 1.0);
    CHECK(n.apply(std::vector<double>{5})[0] == 0.5);
    CHECK(n.apply(std::vector<double>{-3})[0] == 0.0);
    CHECK(n.apply(std::vector<double>{25})[0] == 1.0);
    CHECK_THROWS(n.apply(std::vector<double>{1, 2}));
    CHECK_THROWS(Normalizer::fit(Matrix()));
}

TEST_CASE("kernel matrix is symmetric with unit diagonal and entries in (0,1]") {
    std::mt19937_64 rng(3);
    const Matrix x = random_matrix(rng, 12, 5);
    for (std::size_t i = 0; i < x.rows; ++i) {
        CHECK(rbf(x.row(i), x.row(i), 0.7) == 1.0);
        for (std::size_t j = 0; j < x.rows; ++j) {
            const double k = rbf(x.row(i), x.row(j), 0.7);
            CHECK(k == rbf(x.row(j), x.row(i), 0.7));
            CHECK(k > 0);
            CHECK(k <= 1);
        }
    }
}

TEST_CASE("training agrees with a Gaussian-elimination solve of the same system") {
    std::mt19937_64 rng(7);
    for (int t = 0; t < 30; ++t) {
        const std::size_t n = static_cast<std::size_t>(testsupport::uniform_int(rng, 2, 9));
        const Matrix x = random_matrix(rng, n, 4);
        const auto y = random_labels(rng, n);
        TrainConfig cfg;
        cfg.gamma = testsupport::uniform_real(rng, 0.1, 100);
        cfg.sigma = testsupport::uniform_real(rng, 0.3, 3);
        const TrainedModel m = train(x, y, cfg);
        const auto want = testsupport::lssvm_oracle(rows_of(x), targets(y), cfg.gamma, cfg.sigma);
        CHECK(testsupport::relative_error(m.bias, want[0]) <= 1e-8);
        for (std::size_t i = 0; i < n; ++i) CHECK(testsupport::relative_error(m.alpha[i], want[i + 1]) <= 1e-8);
        CHECK(m.residual <= 1e-8);
        CHECK(m.alpha.size() == n);
    }
}

TEST_CASE("mirrored two-point problem has zero bias") {
    Matrix x(2, 2);
    x.values = {0.2, 0.5, 0.8, 0.5};
    const std::vector<Label> y{Label::Polyp, Label::Normal};
    const TrainedModel m = train(x, y, TrainConfig{});
    CHECK(std::abs(m.bias) <= 1e-12);
    CHECK(m.alpha[0] == doctest::Approx(-m.alpha[1]));
}

TEST_CASE("large gamma nearly interpolates the training labels") {
    std::mt19937_64 rng(19);
    const Matrix x = random_matrix(rng, 5, 6);
    const std::vector<Label> y{Label::Polyp, Label::Normal, Label::Polyp, Label::Normal, Label::Normal};
    TrainConfig cfg;
    cfg.gamma = 1e6;
    cfg.sigma = 1.0;
    const TrainedModel m = train(x, y, cfg);
    for (std::size_t i = 0; i < 5; ++i) CHECK(std::abs(predict_score(m, x.row(i)) - to_target(y[i])) <= 1e-2);
}

TEST_CASE("scores and labels") {
    TrainedModel constant;
    constant.support = Matrix(2, 2);
    constant.alpha = {0, 0};
    constant.bias = 0.5;
    constant.normalizer = Normalizer({0, 0}, {1, 1});
    CHECK(predict_score(constant, std::vector<double>{0.3, 0.9}) == 0.5);
    CHECK(predict_score(constant, std::vector<double>{-7, 42}) == 0.5);

    CHECK(label_from_score(0.3) == Label::Polyp);
    CHECK(label_from_score(-0.3) == Label::Normal);
    CHECK(label_from_score(0.0) == Label::Polyp);
}

TEST_CASE("score is continuous in the input") {
    std::mt19937_64 rng(23);
    const Matrix raw = random_matrix(rng, 20, 5, -3, 8);
    const TrainedModel m = fit(raw, random_labels(rng, 20), TrainConfig{10, 1.0, 1});
    std::vector<double> x(raw.row(3).begin(), raw.row(3).end());
    const double s0 = predict_score(m, x);
    double prev = std::numeric_limits<double>::infinity();
    for (const double eps : {1e-2, 1e-4, 1e-6, 1e-8}) {
        std::vector<double> moved = x;
        for (auto& v : moved) v += eps;
        const double gap = std::abs(predict_score(m, moved) - s0);
        CHECK(gap <= prev + 1e-15);
        prev = gap;
    }
    CHECK(prev < 1e-6);
}

TEST_CASE("affine rescaling of raw features leaves normalized data unchanged") {
    std::mt19937_64 rng(29);
    // Powers of two keep the rescaling exact in floating point.
    const Matrix raw = random_matrix(rng, 15, 4, 0, 64);
    Matrix scaled = raw;
    for (std::size_t i = 0; i < raw.rows; ++i) {
        scaled(i, 0) = raw(i, 0) * 4 + 16;
        scaled(i, 2) = raw(i, 2) * 0.5 - 8;
    }
    const Matrix a = Normalizer::fit(raw).apply(raw);
    const Matrix b = Normalizer::fit(scaled).apply(scaled);
    CHECK(a.values == b.values);

    const auto y = random_labels(rng, 15);
    const TrainedModel ma = fit(raw, y, TrainConfig{});
    const TrainedModel mb = fit(scaled, y, TrainConfig{});
    for (std::size_t i = 0; i < raw.rows; ++i) CHECK(predict_score(ma, raw.row(i)) == predict_score(mb, scaled.row(i)));
}

TEST_CASE("duplicating a training point keeps its predicted label") {
    std::mt19937_64 rng(31);
    for (int t = 0; t < 20; ++t) {
        const std::size_t n = 8;
        const Matrix raw = random_matrix(rng, n, 3);
        const auto y = random_labels(rng, n);
        const TrainedModel base = fit(raw, y, TrainConfig{10, 0.8, 1});
        const std::size_t d = rng() % n;
        Matrix more = raw;
        more.push_row(raw.row(d));
        std::vector<Label> y2 = y;
        y2.push_back(y[d]);
        const TrainedModel dup = fit(more, y2, TrainConfig{10, 0.8, 1});
        if (predict_label(base, raw.row(d)) == y[d]) CHECK(predict_label(dup, raw.row(d)) == y[d]);
    }
}

TEST_CASE("class weights scale the ridge of polyp rows") {
    std::mt19937_64 rng(37);
    const Matrix x = random_matrix(rng, 6, 3);
    const auto y = random_labels(rng, 6);
    TrainConfig cfg{5.0, 1.0, 3.0};
    const TrainedModel m = train(x, y, cfg);
    // Equivalent to an unweighted oracle whose diagonal uses 1/(gamma*w_i).
    const std::size_t n = 6;
    std::vector<std::vector<double>> a(n + 1, std::vector<double>(n + 1, 0.0));
    std::vector<double> rhs(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        a[0][i + 1] = a[i + 1][0] = 1;
        rhs[i + 1] = to_target(y[i]);
        for (std::size_t j = 0; j < n; ++j) a[i + 1][j + 1] = rbf(x.row(i), x.row(j), 1.0);
        a[i + 1][i + 1] += 1.0 / (5.0 * (y[i] == Label::Polyp ? 3.0 : 1.0));
    }
    const auto want = testsupport::gauss_solve(a, rhs);
    CHECK(testsupport::relative_error(m.bias, want[0]) <= 1e-8);
    for (std::size_t i = 0; i < n; ++i) CHECK(testsupport::relative_error(m.alpha[i], want[i + 1]) <= 1e-8);
}

TEST_CASE("training errors") {
    Matrix x(3, 2);
    x.values = {0, 1, 1, 0, 1, 1};
    CHECK_THROWS(train(x, std::vector<Label>(3, Label::Polyp), TrainConfig{}));
    CHECK_THROWS(train(x, std::vector<Label>{Label::Polyp, Label::Normal}, TrainConfig{}));
    CHECK_THROWS(train(Matrix(), std::vector<Label>{}, TrainConfig{}));
    CHECK_THROWS(train(x, std::vector<Label>{Label::Polyp, Label::Normal, Label::Normal}, TrainConfig{0, 1, 1}));
    CHECK_THROWS(train(x, std::vector<Label>{Label::Polyp, Label::Normal, Label::Normal}, TrainConfig{1, -1, 1}));

    // Identical rows with no ridge make the kernel block rank one.
    Matrix same(3, 2);
    same.values = {0.5, 0.5, 0.5, 0.5, 0.5, 0.5};
    CHECK_THROWS_AS(train(same, std::vector<Label>{Label::Polyp, Label::Normal, Label::Normal}, TrainConfig{1e300, 1, 1}),
                    SingularSystem);

    const TrainedModel m = fit(x, std::vector<Label>{Label::Polyp, Label::Normal, Label::Normal}, TrainConfig{});
    CHECK_THROWS(predict_score(m, std::vector<double>{1, 2, 3}));
}

TEST_CASE("residual bound holds on larger training sets") {
    std::mt19937_64 rng(41);
    const Matrix raw = random_matrix(rng, 300, 20, -5, 5);
    const TrainedModel m = fit(raw, random_labels(rng, 300), TrainConfig{100, default_sigma(20), 1});
    CHECK(m.residual <= 1e-8);
    CHECK(m.positives + m.negatives == 300);
}

TEST_CASE("grid search picks a configuration from the documented grid") {
    std::mt19937_64 rng(43);
    Matrix raw(0, 2);
    std::vector<Label> y;
    std::vector<std::string> groups;
    for (int i = 0; i < 60; ++i) {
        const bool polyp = i % 3 == 0;
        const double cx = polyp ? 0.7 : 0.3;
        raw.push_row(std::vector<double>{cx + testsupport::uniform_real(rng, -0.2, 0.2),
                                         cx + testsupport::uniform_real(rng, -0.2, 0.2)});
        y.push_back(polyp ? Label::Polyp : Label::Normal);
        groups.push_back("p" + std::to_string(i % 3 + i % 2 * 3));
    }
    TrainConfig base;
    base.sigma = 1.0;
    const GridSearchResult r = grid_search(raw, y, groups, base);
    CHECK(r.best_score > 0.9);
    CHECK(r.best_score <= 1.0);
    const std::vector<double> gammas{0.1, 1, 10, 100}, sigmas{0.25, 0.5, 1, 2};
    CHECK(std::find(gammas.begin(), gammas.end(), r.best.gamma) != gammas.end());
    CHECK(std::find(sigmas.begin(), sigmas.end(), r.best.sigma) != sigmas.end());
    CHECK_THROWS(grid_search(raw, y, std::vector<std::string>(60, "one"), base));
}

TEST_CASE("model json round trip") {
    std::mt19937_64 rng(47);
    const Matrix raw = random_matrix(rng, 10, 3, -1, 4);
    const TrainedModel m = fit(raw, random_labels(rng, 10), TrainConfig{});
    const nlohmann::json j = to_json(m, 0xabcdef0123456789ull);
    const TrainedModel back = from_json(nlohmann::json::parse(j.dump()), 0xabcdef0123456789ull);
    for (std::size_t i = 0; i < raw.rows; ++i) CHECK(predict_score(back, raw.row(i)) == predict_score(m, raw.row(i)));
    CHECK(back.alpha == m.alpha);
    CHECK(back.bias == m.bias);
    CHECK_THROWS(from_json(j, 0x1ull));
}
