#include <doctest.h>

#include <map>
#include <numeric>
#include <random>
#include <set>

#include "polypseg/features.hpp"
#include "support.hpp"

using namespace polypseg;
using namespace polypseg::features;

namespace {

SuperpixelRegion full_region(int w, int h) {
    SuperpixelRegion r;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) r.pixels.push_back({x, y});
    return r;
}

// Minimal rotation by enumerating all 8 rotations.
int rotation_oracle(int pattern) {
    int best = 255;
    for (int r = 0; r < 8; ++r) best = std::min(best, ((pattern << r) | (pattern >> (8 - r))) & 0xff);
    return best;
}

// Direct-from-definition texture statistics, used to cross-check haralick18.
std::array<double, kHaralickCount> haralick_oracle(const Glcm& g) {
    const int q = g.levels();
    const auto p = [&](int i, int j) { return g.at(i - 1, j - 1); };
    const auto xlog = [](double v) { return v > 0 ? v * std::log2(v) : 0.0; };
    double mx = 0, my = 0;
    for (int i = 1; i <= q; ++i)
        for (int j = 1; j <= q; ++j) {
            mx += i * p(i, j);
            my += j * p(i, j);
        }
    double vx = 0, vy = 0, cov = 0;
    for (int i = 1; i <= q; ++i)
        for (int j = 1; j <= q; ++j) {
            vx += (i - mx) * (i - mx) * p(i, j);
            vy += (j - my) * (j - my) * p(i, j);
            cov += (i - mx) * (j - my) * p(i, j);
        }
    std::map<int, double> psum, pdiff;
    std::vector<double> px(q + 1, 0), py(q + 1, 0);
    for (int i = 1; i <= q; ++i)
        for (int j = 1; j <= q; ++j) {
            psum[i + j] += p(i, j);
            pdiff[std::abs(i - j)] += p(i, j);
            px[i] += p(i, j);
            py[j] += p(i, j);
        }
    std::array<double, kHaralickCount> f{};
    double hxy = 0, hxy1 = 0, hx = 0, hy = 0;
    for (int i = 1; i <= q; ++i) {
        hx -= xlog(px[i]);
        hy -= xlog(py[i]);
    }
    for (int i = 1; i <= q; ++i)
        for (int j = 1; j <= q; ++j) {
            const double v = p(i, j);
            const double d = i - j;
            f[0] += i * j * v;
            f[1] += std::pow(i + j - mx - my, 4) * v;
            f[2] += v * v;
            f[3] += std::pow(i + j - mx - my, 3) * v;
            f[4] += std::abs(d) * v;
            f[5] += d * d * v;
            hxy -= xlog(v);
            f[7] += v / (1 + std::abs(d));
            f[8] = std::max(f[8], v);
            if (v > 0) hxy1 -= v * std::log2(px[i] * py[j]);
            f[17] += v / (1 + d * d);
        }
    f[6] = hxy;
    f[9] = std::sqrt(vx * vy) > 1e-12 ? cov / std::sqrt(vx * vy) : 0.0;
    f[10] = vx;
    for (const auto& [k, v] : psum) f[11] += k * v;
    for (const auto& [k, v] : psum) {
        f[12] += (k - f[11]) * (k - f[11]) * v;
        f[13] -= xlog(v);
    }
    double dmean = 0;
    for (const auto& [k, v] : pdiff) dmean += k * v;
    for (const auto& [k, v] : pdiff) {
        f[14] += (k - dmean) * (k - dmean) * v;
        f[15] -= xlog(v);
    }
    f[16] = std::max(hx, hy) > 0 ? (hxy - hxy1) / std::max(hx, hy) : 0.0;
    return f;
}

}  // namespace

TEST_CASE("lbp code examples") {
    const LbpCodePlane constant = lbp_code_plane(Plane(5, 4, 40));
    for (const auto v : constant.codes.data()) CHECK(v == 255);

    Plane peak(5, 5);
    peak.at(2, 2) = 200;
    CHECK(lbp_code_plane(peak).codes.at(2, 2) == 0);

    CHECK(min_rotation(0b00010000) == 1);
    for (int v = 0; v < 256; ++v) CHECK(min_rotation(static_cast<std::uint8_t>(v)) == rotation_oracle(v));
}

TEST_CASE("lbp codes follow the clockwise ring from the top-left neighbor") {
    // Only the right neighbor (ring position 3) is at least the center value.
    Plane p(3, 3, 10);
    p.at(1, 1) = 100;
    p.at(2, 1) = 100;
    CHECK(lbp_code_plane(p).codes.at(1, 1) == rotation_oracle(1 << 3));
}

TEST_CASE("lbp histogram examples") {
    const LbpCodePlane constant = lbp_code_plane(Plane(4, 4, 9));
    const auto h = lbp_histogram(constant, full_region(4, 4));
    CHECK(h[31] == 1.0);
    CHECK(std::accumulate(h.begin(), h.end(), 0.0) == 1.0);

    Plane peak(5, 5);
    peak.at(2, 2) = 200;
    const LbpCodePlane codes = lbp_code_plane(peak);
    SuperpixelRegion two{0, {{2, 2}, {0, 0}}};
    REQUIRE(codes.codes.at(0, 0) == 255);
    const auto h2 = lbp_histogram(codes, two);
    CHECK(h2[0] == 0.5);
    CHECK(h2[31] == 0.5);

    std::mt19937_64 rng(4);
    const auto random = lbp_histogram(lbp_code_plane(testsupport::random_plane(rng, 19, 23)), full_region(19, 23));
    CHECK(std::accumulate(random.begin(), random.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("lbp histogram is invariant under quarter rotations") {
    std::mt19937_64 rng(90);
    for (int t = 0; t < 10; ++t) {
        const Plane p = testsupport::random_plane(rng, testsupport::uniform_int(rng, 3, 30),
                                                  testsupport::uniform_int(rng, 3, 30));
        const auto base = lbp_histogram(lbp_code_plane(p), full_region(p.width(), p.height()));
        for (int turns = 1; turns < 4; ++turns) {
            const Plane r = rotate_quarter(p, turns);
            CHECK(lbp_histogram(lbp_code_plane(r), full_region(r.width(), r.height())) == base);
        }
    }
}

TEST_CASE("glcm examples") {
    const Glcm constant = glcm(Plane(4, 4, 100), full_region(4, 4), 16);
    // floor(100 * 16 / 256) = 6
    CHECK(constant.at(6, 6) == 1.0);
    CHECK(std::accumulate(constant.matrix().begin(), constant.matrix().end(), 0.0) == 1.0);

    Plane two(4, 3);
    two.at(1, 1) = 32;   // level 2
    two.at(2, 1) = 200;  // level 12
    const Glcm pair = glcm(two, SuperpixelRegion{0, {{1, 1}, {2, 1}}}, 16);
    CHECK(pair.at(2, 12) == 0.5);
    CHECK(pair.at(12, 2) == 0.5);

    CHECK_THROWS_AS(glcm(two, SuperpixelRegion{0, {{0, 0}, {2, 2}}}, 16), NoInteriorPairs);
}

TEST_CASE("glcm of a 4x4 checkerboard matches pair enumeration") {
    const int q = 16;
    Plane board(4, 4);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) board.at(x, y) = (x + y) % 2 ? 255 : 0;
    const Glcm g = glcm(board, full_region(4, 4), q);

    std::map<std::pair<int, int>, double> counts;
    double total = 0;
    const int offsets[4][2] = {{1, 0}, {0, 1}, {1, 1}, {1, -1}};
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x)
            for (const auto& o : offsets) {
                const int x2 = x + o[0], y2 = y + o[1];
                if (x2 < 0 || y2 < 0 || x2 >= 4 || y2 >= 4) continue;
                const int a = board.at(x, y) * q / 256, b = board.at(x2, y2) * q / 256;
                counts[{a, b}] += 1;
                counts[{b, a}] += 1;
                total += 2;
            }
    CHECK(total == 84);
    for (int i = 0; i < q; ++i)
        for (int j = 0; j < q; ++j) CHECK(g.at(i, j) == doctest::Approx(counts[{i, j}] / total).epsilon(1e-15));
    CHECK(g.at(0, q - 1) + g.at(q - 1, 0) == doctest::Approx(24.0 / 42.0).epsilon(1e-15));
}

TEST_CASE("glcm is symmetric and normalized on random regions") {
    std::mt19937_64 rng(31);
    for (int t = 0; t < 20; ++t) {
        const Plane p = testsupport::random_plane(rng, 20, 20);
        SuperpixelRegion r;
        for (int y = 0; y < 20; ++y)
            for (int x = 0; x < 20; ++x)
                if (rng() % 3 != 0) r.pixels.push_back({x, y});
        const int q = testsupport::uniform_int(rng, 2, 32);
        const Glcm g = glcm(p, r, q);
        double sum = 0;
        for (int i = 0; i < q; ++i)
            for (int j = 0; j < q; ++j) {
                CHECK(g.at(i, j) == g.at(j, i));
                CHECK(g.at(i, j) >= 0);
                sum += g.at(i, j);
            }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("haralick analytic values") {
    std::vector<double> point(16 * 16, 0.0);
    point[5 * 16 + 5] = 1.0;
    const auto f = haralick18(Glcm(16, point));
    CHECK(f[std::size_t(Haralick::Energy)] == 1.0);
    CHECK(f[std::size_t(Haralick::Entropy)] == 0.0);
    CHECK(f[std::size_t(Haralick::Contrast)] == 0.0);
    CHECK(f[std::size_t(Haralick::Dissimilarity)] == 0.0);
    CHECK(f[std::size_t(Haralick::MaximumProbability)] == 1.0);
    CHECK(f[std::size_t(Haralick::Homogeneity)] == 1.0);
    CHECK(f[std::size_t(Haralick::Correlation)] == 0.0);
    CHECK(f[std::size_t(Haralick::InformationCorrelation1)] == 0.0);

    const auto u = haralick18(Glcm(2, {0.25, 0.25, 0.25, 0.25}));
    CHECK(u[std::size_t(Haralick::Energy)] == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(u[std::size_t(Haralick::Entropy)] == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("haralick18 agrees with a direct evaluation of each definition") {
    std::mt19937_64 rng(17);
    for (int t = 0; t < 25; ++t) {
        const Plane p = testsupport::random_plane(rng, 12, 12);
        const int q = testsupport::uniform_int(rng, 2, 16);
        const Glcm g = glcm(p, full_region(12, 12), q);
        const auto got = haralick18(g);
        const auto want = haralick_oracle(g);
        for (std::size_t i = 0; i < kHaralickCount; ++i) {
            CAPTURE(haralick_names()[i]);
            CHECK(std::isfinite(got[i]));
            CHECK(testsupport::relative_error(got[i], want[i]) <= 1e-9);
        }
        CHECK(haralick18(g) == got);
    }
}

TEST_CASE("moment examples") {
    Plane p(4, 4, 7);
    const auto constant = moments4(p, full_region(4, 4));
    CHECK(constant == std::array<double, 4>{7, 0, 0, 0});

    Plane two(3, 3);
    two.at(1, 0) = 255;
    const auto sym = moments4(two, SuperpixelRegion{0, {{0, 0}, {1, 0}}});
    CHECK(sym[0] == 127.5);
    CHECK(sym[1] == 16256.25);
    CHECK(sym[2] == 0.0);
    CHECK(sym[3] == doctest::Approx(-2.0).epsilon(1e-12));

    Plane three(3, 3);
    three.at(0, 0) = 1;
    three.at(1, 0) = 2;
    three.at(2, 0) = 3;
    const auto m = moments4(three, SuperpixelRegion{0, {{0, 0}, {1, 0}, {2, 0}}});
    CHECK(m[0] == doctest::Approx(2.0));
    CHECK(m[1] == doctest::Approx(2.0 / 3.0));
    CHECK(m[2] == doctest::Approx(0.0));
}

TEST_CASE("moments4 agrees with the two-pass formulas") {
    std::mt19937_64 rng(12);
    for (int t = 0; t < 40; ++t) {
        const int w = testsupport::uniform_int(rng, 3, 100), h = testsupport::uniform_int(rng, 3, 100);
        const Plane p = testsupport::random_plane(rng, w, h);
        SuperpixelRegion r;
        std::vector<double> values;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                if (rng() % 2) {
                    r.pixels.push_back({x, y});
                    values.push_back(p.at(x, y));
                }
        if (values.empty()) continue;
        const auto got = moments4(p, r);
        const auto want = testsupport::two_pass_moments(values);
        for (int i = 0; i < 4; ++i) CHECK(testsupport::relative_error(got[i], want[i]) <= 1e-9);
    }
}

TEST_CASE("feature layout") {
    CHECK(feature_names().size() == kFeatureCount);
    CHECK(feature_names()[0] == "lbp_hist_00");
    CHECK(feature_names()[31] == "lbp_hist_31");
    CHECK(feature_names()[32] == "lbp_autocorrelation");
    CHECK(feature_names()[32 + 18] == "gray_autocorrelation");
    CHECK(feature_names()[140] == "lbp_mean");
    CHECK(feature_names()[163] == "hue_kurtosis");
    std::set<std::string> unique(feature_names().begin(), feature_names().end());
    CHECK(unique.size() == kFeatureCount);

    // 64-bit FNV-1a over "name," for each name, computed here independently.
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& n : feature_names())
        for (const char c : n + ",") {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ull;
        }
    CHECK(feature_order_hash() == h);
}

TEST_CASE("feature vectors are finite, normalized and deterministic") {
    std::mt19937_64 rng(55);
    const RgbFrame f = testsupport::blobby_frame(rng, 48, 40);
    slic::SlicParams params;
    params.k = 20;
    const auto seg = slic::segment(f, params);
    const FrameFeatures a = extract_all(f, seg.labels);
    const FrameFeatures b = extract_all(f, seg.labels);
    REQUIRE(a.rows.size() + a.dropped.size() == static_cast<std::size_t>(seg.labels.num_labels()));
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].values == b.rows[i].values);
        double lbp = 0;
        for (std::size_t j = 0; j < kFeatureCount; ++j) CHECK(std::isfinite(a.rows[i].values[j]));
        for (std::size_t j = 0; j < kLbpBins; ++j) {
            CHECK(a.rows[i].values[j] >= 0);
            lbp += a.rows[i].values[j];
        }
        CHECK(lbp == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("feature layout places each source block at its documented offset") {
    std::mt19937_64 rng(66);
    const RgbFrame f = testsupport::blobby_frame(rng, 30, 30);
    const SourcePlanes src = SourcePlanes::compute(f);
    const SuperpixelRegion r = full_region(30, 30);
    const FeatureVector v = assemble(src, r);
    CHECK(std::equal(v.begin(), v.begin() + 32, lbp_histogram(src.lbp, r).begin()));
    for (std::size_t s = 0; s < kSourceCount; ++s) {
        const auto t = haralick18(glcm(src.source(s), r));
        const auto m = moments4(src.source(s), r);
        CHECK(std::equal(t.begin(), t.end(), v.begin() + 32 + 18 * s));
        CHECK(std::equal(m.begin(), m.end(), v.begin() + 140 + 4 * s));
    }
    CHECK(src.source(1) == to_grayscale(f));
    CHECK(src.source(5) == to_hue(f));
}

TEST_CASE("region features do not depend on label numbering") {
    std::mt19937_64 rng(8);
    const RgbFrame f = testsupport::blobby_frame(rng, 40, 36);
    slic::SlicParams params;
    params.k = 16;
    const auto seg = slic::segment(f, params);
    const int n = seg.labels.num_labels();
    std::vector<std::int32_t> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::int32_t> relabeled;
    for (const auto l : seg.labels.labels()) relabeled.push_back(perm[l]);
    const slic::LabelMap permuted(40, 36, relabeled);

    const FrameFeatures a = extract_all(f, seg.labels);
    const FrameFeatures b = extract_all(f, permuted);
    REQUIRE(a.rows.size() == b.rows.size());
    std::map<std::int32_t, FeatureVector> by_label;
    for (const auto& row : b.rows) by_label[row.label] = row.values;
    for (const auto& row : a.rows) CHECK(by_label.at(perm[row.label]) == row.values);
}

TEST_CASE("assemble rejects regions inconsistent with the label map") {
    std::mt19937_64 rng(2);
    const RgbFrame f = testsupport::random_frame(rng, 10, 10);
    const slic::LabelMap labels(10, 10, std::vector<std::int32_t>(100, 0));
    CHECK_THROWS(assemble(f, labels, SuperpixelRegion{1, {{0, 0}, {1, 0}}}));
    CHECK(assemble(f, labels, full_region(10, 10)).size() == kFeatureCount);
}

TEST_CASE("single-pixel regions are dropped") {
    std::vector<std::int32_t> l(25, 0);
    l[12] = 1;  // isolated pixel, no in-region neighbor at any offset
    const FrameFeatures out = extract_all(RgbFrame(5, 5), slic::LabelMap(5, 5, l));
    CHECK(out.rows.size() == 1);
    CHECK(out.dropped == std::vector<std::int32_t>{1});
}
