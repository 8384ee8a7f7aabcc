#pragma once

// Shared helpers for the unit and acceptance suites: random inputs, invariant checkers and
// brute-force reference implementations written independently of the library internals.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "polypseg/features.hpp"
#include "polypseg/image.hpp"
#include "polypseg/slic.hpp"

namespace testsupport {

using polypseg::Plane;
using polypseg::RgbFrame;

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
    return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

inline double uniform_real(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline RgbFrame random_frame(std::mt19937_64& rng, int w, int h) {
    std::vector<std::uint8_t> data(static_cast<std::size_t>(w) * h * 3);
    for (auto& v : data) v = static_cast<std::uint8_t>(rng() & 0xff);
    return {w, h, std::move(data)};
}

// Piecewise-smooth frame: a few colored discs over a gradient, plus noise. Closer to real
// images than white noise, so SLIC produces non-trivial boundaries.
inline RgbFrame blobby_frame(std::mt19937_64& rng, int w, int h) {
    RgbFrame f(w, h);
    struct Disc {
        double x, y, r;
        int cr, cg, cb;
    };
    std::vector<Disc> discs;
    const int count = uniform_int(rng, 1, 6);
    for (int i = 0; i < count; ++i)
        discs.push_back({uniform_real(rng, 0, w), uniform_real(rng, 0, h), uniform_real(rng, 4, std::max(w, h) / 3.0),
                         uniform_int(rng, 0, 255), uniform_int(rng, 0, 255), uniform_int(rng, 0, 255)});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            int r = 40 + 150 * x / w, g = 60 + 120 * y / h, b = 90;
            for (const Disc& d : discs)
                if ((x - d.x) * (x - d.x) + (y - d.y) * (y - d.y) <= d.r * d.r) {
                    r = d.cr;
                    g = d.cg;
                    b = d.cb;
                }
            const auto noisy = [&](int v) { return static_cast<std::uint8_t>(std::clamp(v + uniform_int(rng, -12, 12), 0, 255)); };
            f.set(x, y, {noisy(r), noisy(g), noisy(b)});
        }
    return f;
}

inline Plane random_plane(std::mt19937_64& rng, int w, int h) {
    std::vector<std::uint8_t> data(static_cast<std::size_t>(w) * h);
    for (auto& v : data) v = static_cast<std::uint8_t>(rng() & 0xff);
    return {w, h, std::move(data)};
}

// ---------------------------------------------------------------------------
// Label map invariants

inline bool is_partition(const polypseg::slic::LabelMap& m) {
    if (m.labels().size() != static_cast<std::size_t>(m.width()) * m.height() || m.num_labels() < 1) return false;
    std::vector<char> used(static_cast<std::size_t>(m.num_labels()), 0);
    for (const auto l : m.labels()) {
        if (l < 0 || l >= m.num_labels()) return false;
        used[static_cast<std::size_t>(l)] = 1;
    }
    return std::all_of(used.begin(), used.end(), [](char c) { return c != 0; });
}

// Every label's pixel set is a single 4-connected component.
inline bool is_four_connected(const polypseg::slic::LabelMap& m) {
    const int w = m.width(), h = m.height();
    std::vector<char> seen(m.labels().size(), 0);
    std::vector<char> label_started(static_cast<std::size_t>(m.num_labels()), 0);
    std::vector<int> stack;
    for (int start = 0; start < w * h; ++start) {
        if (seen[start]) continue;
        const auto l = m.labels()[start];
        if (label_started[l]) return false;
        label_started[l] = 1;
        seen[start] = 1;
        stack.push_back(start);
        while (!stack.empty()) {
            const int i = stack.back();
            stack.pop_back();
            const int x = i % w, y = i / w;
            const int nbrs[4][2] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
            for (const auto& n : nbrs) {
                if (n[0] < 0 || n[1] < 0 || n[0] >= w || n[1] >= h) continue;
                const int j = n[1] * w + n[0];
                if (!seen[j] && m.labels()[j] == l) {
                    seen[j] = 1;
                    stack.push_back(j);
                }
            }
        }
    }
    return true;
}

// Every pixel lies within Chebyshev distance 2S of the centroid of its label.
inline bool is_local(const polypseg::slic::LabelMap& m, double spacing) {
    const int w = m.width(), h = m.height();
    std::vector<double> sx(static_cast<std::size_t>(m.num_labels()), 0), sy(sx), n(sx);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const auto l = static_cast<std::size_t>(m.at(x, y));
            sx[l] += x;
            sy[l] += y;
            n[l] += 1;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const auto l = static_cast<std::size_t>(m.at(x, y));
            const double cx = sx[l] / n[l], cy = sy[l] / n[l];
            if (std::max(std::abs(x - cx), std::abs(y - cy)) > 2 * spacing + 1e-9) return false;
        }
    return true;
}

// ---------------------------------------------------------------------------
// SLIC oracle for one assignment pass: grid seeding, 3x3 gradient perturbation and an
// exhaustive per-pixel argmin over every center whose window covers the pixel. Pixels outside
// every window take the nearest center overall. Labels are numbered by first appearance.

struct OracleCenter {
    double x, y, r, g, b;
};

inline std::vector<std::int32_t> slic_one_pass_oracle(const RgbFrame& f, int k, double compactness) {
    const int w = f.width(), h = f.height();
    const double s = std::sqrt(static_cast<double>(w) * h / k);

    // Gray and gradient recomputed here from their definitions.
    std::vector<int> gray(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const auto c = f.at(x, y);
            gray[y * w + x] = std::clamp(static_cast<int>(std::lround(0.299 * c.r + 0.587 * c.g + 0.114 * c.b)), 0, 255);
        }
    const auto g_at = [&](int x, int y) { return gray[std::clamp(y, 0, h - 1) * w + std::clamp(x, 0, w - 1)]; };
    const auto grad = [&](int x, int y) {
        return std::abs(g_at(x + 1, y) - g_at(x - 1, y)) + std::abs(g_at(x, y + 1) - g_at(x, y - 1)) + 0.0;
    };

    int nx = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(k) * w / h)));
    nx = std::clamp(nx, 1, std::min(k, w));
    int ny = std::clamp(static_cast<int>(std::lround(static_cast<double>(k) / nx)), 1, h);
    std::vector<OracleCenter> centers;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const int gx = static_cast<int>(std::floor((i + 0.5) * w / nx));
            const int gy = static_cast<int>(std::floor((j + 0.5) * h / ny));
            int bx = gx, by = gy;
            double best = std::numeric_limits<double>::infinity();
            for (int y = gy - 1; y <= gy + 1; ++y)
                for (int x = gx - 1; x <= gx + 1; ++x)
                    if (x >= 0 && y >= 0 && x < w && y < h && grad(x, y) < best) {
                        best = grad(x, y);
                        bx = x;
                        by = y;
                    }
            const auto c = f.at(bx, by);
            centers.push_back({double(bx), double(by), double(c.r), double(c.g), double(c.b)});
        }

    const auto dist = [&](int x, int y, const OracleCenter& c) {
        const auto p = f.at(x, y);
        polypseg::slic::ClusterCenter cc{c.x, c.y, c.r, c.g, c.b, 0};
        return polypseg::slic::joint_distance(polypseg::slic::color_distance(p, cc),
                                              polypseg::slic::spatial_distance({x, y}, cc), compactness, s);
    };

    std::vector<std::int32_t> raw(static_cast<std::size_t>(w) * h, -1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double best = std::numeric_limits<double>::infinity();
            std::int32_t arg = -1;
            for (std::size_t c = 0; c < centers.size(); ++c) {
                if (std::abs(x - centers[c].x) > s || std::abs(y - centers[c].y) > s) continue;
                const double d = dist(x, y, centers[c]);
                if (d < best) {
                    best = d;
                    arg = static_cast<std::int32_t>(c);
                }
            }
            if (arg < 0)
                for (std::size_t c = 0; c < centers.size(); ++c) {
                    const double d = dist(x, y, centers[c]);
                    if (d < best) {
                        best = d;
                        arg = static_cast<std::int32_t>(c);
                    }
                }
            raw[y * w + x] = arg;
        }

    std::vector<std::int32_t> remap(centers.size(), -1);
    std::int32_t next = 0;
    for (auto& l : raw) {
        if (remap[l] < 0) remap[l] = next++;
        l = remap[l];
    }
    return raw;
}

// ---------------------------------------------------------------------------
// Moments by the textbook two-pass formulas.

inline std::array<double, 4> two_pass_moments(const std::vector<double>& v) {
    const double n = static_cast<double>(v.size());
    double mean = 0;
    for (const double x : v) mean += x;
    mean /= n;
    double m2 = 0, m3 = 0, m4 = 0;
    for (const double x : v) {
        const double d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if (m2 < 1e-12) return {mean, m2, 0.0, 0.0};
    return {mean, m2, m3 / std::pow(m2, 1.5), m4 / (m2 * m2) - 3.0};
}

inline double relative_error(double got, double want) {
    const double scale = std::max(1.0, std::abs(want));
    return std::abs(got - want) / scale;
}

// ---------------------------------------------------------------------------
// Dense Gaussian elimination with partial pivoting; reference solver for small systems.

inline std::vector<double> gauss_solve(std::vector<std::vector<double>> a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        std::swap(a[col], a[piv]);
        std::swap(b[col], b[piv]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t c = i + 1; c < n; ++c) s -= a[i][c] * x[c];
        x[i] = s / a[i][i];
    }
    return x;
}

// The LS-SVM KKT system assembled from scratch for normalized rows `x` and targets `y`.
inline std::vector<double> lssvm_oracle(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                                        double gamma, double sigma) {
    const std::size_t n = x.size();
    std::vector<std::vector<double>> a(n + 1, std::vector<double>(n + 1, 0.0));
    std::vector<double> rhs(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        a[0][i + 1] = 1;
        a[i + 1][0] = 1;
        rhs[i + 1] = y[i];
        for (std::size_t j = 0; j < n; ++j) {
            double d2 = 0;
            for (std::size_t f = 0; f < x[i].size(); ++f) d2 += (x[i][f] - x[j][f]) * (x[i][f] - x[j][f]);
            a[i + 1][j + 1] = std::exp(-d2 / (2 * sigma * sigma)) + (i == j ? 1.0 / gamma : 0.0);
        }
    }
    return gauss_solve(a, rhs);
}

}  // namespace testsupport
