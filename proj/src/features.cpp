#include "polypseg/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace polypseg::features {

namespace {

// Clockwise from the top-left neighbor.
constexpr std::array<Pixel, 8> kRing = {{{-1, -1}, {0, -1}, {1, -1}, {1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}}};

constexpr std::array<Pixel, 4> kOffsets = {{{1, 0}, {0, 1}, {1, 1}, {1, -1}}};

// Bounding-box bitmap of region membership.
class RegionMask {
public:
    explicit RegionMask(const SuperpixelRegion& region) {
        if (region.pixels.empty()) throw std::invalid_argument("empty region");
        x0_ = x1_ = region.pixels.front().x;
        y0_ = y1_ = region.pixels.front().y;
        for (const Pixel& p : region.pixels) {
            x0_ = std::min(x0_, p.x);
            x1_ = std::max(x1_, p.x);
            y0_ = std::min(y0_, p.y);
            y1_ = std::max(y1_, p.y);
        }
        w_ = x1_ - x0_ + 1;
        bits_.assign(static_cast<std::size_t>(w_) * (y1_ - y0_ + 1), 0);
        for (const Pixel& p : region.pixels) bits_[index(p.x, p.y)] = 1;
    }

    bool contains(int x, int y) const {
        return x >= x0_ && x <= x1_ && y >= y0_ && y <= y1_ && bits_[index(x, y)] != 0;
    }

private:
    std::size_t index(int x, int y) const { return static_cast<std::size_t>(y - y0_) * w_ + (x - x0_); }

    int x0_, x1_, y0_, y1_, w_;
    std::vector<char> bits_;
};

Glcm glcm_masked(const Plane& plane, const SuperpixelRegion& region, const RegionMask& mask, int levels) {
    if (levels < 2) throw std::invalid_argument("GLCM needs at least 2 levels");
    const auto q = static_cast<std::size_t>(levels);
    std::vector<double> counts(q * q, 0.0);
    double total = 0;
    for (const Pixel& p : region.pixels) {
        const std::size_t a = static_cast<std::size_t>(plane.at(p.x, p.y)) * q / 256;
        for (const Pixel& d : kOffsets) {
            const int nx = p.x + d.x;
            const int ny = p.y + d.y;
            if (!mask.contains(nx, ny)) continue;
            const std::size_t b = static_cast<std::size_t>(plane.at(nx, ny)) * q / 256;
            counts[a * q + b] += 1;
            counts[b * q + a] += 1;
            total += 2;
        }
    }
    if (total == 0) throw NoInteriorPairs();
    for (double& c : counts) c /= total;
    return {levels, std::move(counts)};
}

double plogp(double p) { return p > 0 ? p * std::log2(p) : 0.0; }

}  // namespace

std::vector<SuperpixelRegion> regions_from_labels(const slic::LabelMap& labels) {
    std::vector<SuperpixelRegion> regions(static_cast<std::size_t>(labels.num_labels()));
    for (std::size_t l = 0; l < regions.size(); ++l) regions[l].label = static_cast<std::int32_t>(l);
    for (int y = 0; y < labels.height(); ++y)
        for (int x = 0; x < labels.width(); ++x) regions[static_cast<std::size_t>(labels.at(x, y))].pixels.push_back({x, y});
    return regions;
}

std::uint8_t min_rotation(std::uint8_t pattern) {
    std::uint8_t best = pattern;
    unsigned v = pattern;
    for (int r = 1; r < 8; ++r) {
        v = ((v >> 1) | (v << 7)) & 0xffu;
        best = std::min(best, static_cast<std::uint8_t>(v));
    }
    return best;
}

LbpCodePlane lbp_code_plane(const Plane& gray) {
    std::array<std::uint8_t, 256> table{};
    for (unsigned p = 0; p < 256; ++p) table[p] = min_rotation(static_cast<std::uint8_t>(p));

    Plane codes(gray.width(), gray.height());
    for (int y = 0; y < gray.height(); ++y)
        for (int x = 0; x < gray.width(); ++x) {
            const std::uint8_t center = gray.at(x, y);
            unsigned pattern = 0;
            for (std::size_t i = 0; i < kRing.size(); ++i)
                if (gray.clamped(x + kRing[i].x, y + kRing[i].y) >= center) pattern |= 1u << i;
            codes.at(x, y) = table[pattern];
        }
    return {std::move(codes)};
}

std::array<double, kLbpBins> lbp_histogram(const LbpCodePlane& codes, const SuperpixelRegion& region) {
    if (region.pixels.empty()) throw std::invalid_argument("empty region");
    std::array<double, kLbpBins> hist{};
    for (const Pixel& p : region.pixels) hist[codes.codes.at(p.x, p.y) / 8] += 1;
    const double n = static_cast<double>(region.pixels.size());
    for (double& h : hist) h /= n;
    return hist;
}

Glcm::Glcm(int levels, std::vector<double> matrix) : levels_(levels), matrix_(std::move(matrix)) {
    if (levels_ < 2 || matrix_.size() != static_cast<std::size_t>(levels_) * levels_)
        throw std::invalid_argument("GLCM matrix must be q x q with q >= 2");
}

Glcm glcm(const Plane& plane, const SuperpixelRegion& region, int levels) {
    return glcm_masked(plane, region, RegionMask(region), levels);
}

const std::array<const char*, kHaralickCount>& haralick_names() {
    static const std::array<const char*, kHaralickCount> names = {
        "autocorrelation", "cluster_prominence", "energy", "cluster_shade", "dissimilarity",
        "contrast", "entropy", "homogeneity", "max_probability", "correlation",
        "sum_of_squares_variance", "sum_average", "sum_variance", "sum_entropy",
        "difference_variance", "difference_entropy", "info_measure_correlation1",
        "inverse_difference_moment"};
    return names;
}

std::array<double, kHaralickCount> haralick18(const Glcm& g) {
    const int q = g.levels();
    // Gray levels are indexed from 1.
    std::vector<double> px(q, 0.0), py(q, 0.0);
    std::vector<double> p_sum(2 * q + 1, 0.0);  // index i + j, 2..2q
    std::vector<double> p_diff(q, 0.0);         // index |i - j|
    double autocorr = 0, energy = 0, dissim = 0, contrast = 0, entropy = 0, homog = 0, maxp = 0, idm = 0;
    for (int i = 1; i <= q; ++i)
        for (int j = 1; j <= q; ++j) {
            const double p = g.at(i - 1, j - 1);
            const int d = std::abs(i - j);
            px[i - 1] += p;
            py[j - 1] += p;
            p_sum[i + j] += p;
            p_diff[d] += p;
            autocorr += i * j * p;
            energy += p * p;
            dissim += d * p;
            contrast += d * d * p;
            entropy -= plogp(p);
            homog += p / (1.0 + d);
            idm += p / (1.0 + d * d);
            maxp = std::max(maxp, p);
        }

    double mu_x = 0, mu_y = 0;
    for (int i = 1; i <= q; ++i) {
        mu_x += i * px[i - 1];
        mu_y += i * py[i - 1];
    }
    double var_x = 0, var_y = 0, prominence = 0, shade = 0, hxy1 = 0;
    for (int i = 1; i <= q; ++i)
        for (int j = 1; j <= q; ++j) {
            const double p = g.at(i - 1, j - 1);
            const double s = i + j - mu_x - mu_y;
            var_x += (i - mu_x) * (i - mu_x) * p;
            var_y += (j - mu_y) * (j - mu_y) * p;
            prominence += s * s * s * s * p;
            shade += s * s * s * p;
            const double pp = px[i - 1] * py[j - 1];
            if (p > 0 && pp > 0) hxy1 -= p * std::log2(pp);
        }
    const double sigma = std::sqrt(var_x * var_y);
    const double correlation = sigma > 1e-12 ? (autocorr - mu_x * mu_y) / sigma : 0.0;

    double sum_avg = 0, sum_entropy = 0;
    for (int k = 2; k <= 2 * q; ++k) {
        sum_avg += k * p_sum[k];
        sum_entropy -= plogp(p_sum[k]);
    }
    double sum_var = 0;
    for (int k = 2; k <= 2 * q; ++k) sum_var += (k - sum_avg) * (k - sum_avg) * p_sum[k];

    double diff_mean = 0, diff_entropy = 0;
    for (int k = 0; k < q; ++k) {
        diff_mean += k * p_diff[k];
        diff_entropy -= plogp(p_diff[k]);
    }
    double diff_var = 0;
    for (int k = 0; k < q; ++k) diff_var += (k - diff_mean) * (k - diff_mean) * p_diff[k];

    double hx = 0, hy = 0;
    for (int i = 0; i < q; ++i) {
        hx -= plogp(px[i]);
        hy -= plogp(py[i]);
    }
    const double hmax = std::max(hx, hy);
    const double imc1 = hmax > 0 ? (entropy - hxy1) / hmax : 0.0;

    return {autocorr, prominence, energy, shade, dissim, contrast, entropy, homog, maxp, correlation,
            var_x, sum_avg, sum_var, sum_entropy, diff_var, diff_entropy, imc1, idm};
}

std::array<double, kMomentCount> moments4(const Plane& plane, const SuperpixelRegion& region) {
    if (region.pixels.empty()) throw std::invalid_argument("empty region");
    std::array<std::size_t, 256> hist{};
    for (const Pixel& p : region.pixels) ++hist[plane.at(p.x, p.y)];
    const double n = static_cast<double>(region.pixels.size());
    double mean = 0;
    for (int v = 0; v < 256; ++v) mean += static_cast<double>(v) * static_cast<double>(hist[v]);
    mean /= n;
    double m2 = 0, m3 = 0, m4 = 0;
    for (int v = 0; v < 256; ++v) {
        if (hist[v] == 0) continue;
        const double d = v - mean;
        const double c = static_cast<double>(hist[v]);
        m2 += c * d * d;
        m3 += c * d * d * d;
        m4 += c * d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if (m2 < 1e-12) return {mean, m2, 0.0, 0.0};
    return {mean, m2, m3 / std::pow(m2, 1.5), m4 / (m2 * m2) - 3.0};
}

SourcePlanes SourcePlanes::compute(const RgbFrame& frame) {
    Plane gray = to_grayscale(frame);
    LbpCodePlane lbp = lbp_code_plane(gray);
    return {std::move(lbp),
            std::move(gray),
            extract_channel(frame, Channel::Red),
            extract_channel(frame, Channel::Green),
            extract_channel(frame, Channel::Blue),
            to_hue(frame)};
}

const Plane& SourcePlanes::source(std::size_t index) const {
    switch (index) {
        case 0: return lbp.codes;
        case 1: return gray;
        case 2: return red;
        case 3: return green;
        case 4: return blue;
        case 5: return hue;
        default: throw std::out_of_range("source plane index");
    }
}

const std::array<const char*, kSourceCount>& source_names() {
    static const std::array<const char*, kSourceCount> names = {"lbp", "gray", "red", "green", "blue", "hue"};
    return names;
}

const std::vector<std::string>& feature_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        out.reserve(kFeatureCount);
        char buf[16];
        for (std::size_t b = 0; b < kLbpBins; ++b) {
            std::snprintf(buf, sizeof buf, "lbp_hist_%02zu", b);
            out.emplace_back(buf);
        }
        for (const char* src : source_names())
            for (const char* h : haralick_names()) out.push_back(std::string(src) + "_" + h);
        for (const char* src : source_names())
            for (const char* m : {"mean", "variance", "skewness", "kurtosis"}) out.push_back(std::string(src) + "_" + m);
        return out;
    }();
    return names;
}

std::uint64_t feature_order_hash() {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const std::string& name : feature_names()) {
        for (const char c : name + ",") {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ull;
        }
    }
    return h;
}

FeatureVector assemble(const SourcePlanes& sources, const SuperpixelRegion& region, int levels) {
    const RegionMask mask(region);
    FeatureVector out{};
    const auto hist = lbp_histogram(sources.lbp, region);
    std::copy(hist.begin(), hist.end(), out.begin());
    for (std::size_t s = 0; s < kSourceCount; ++s) {
        const Plane& plane = sources.source(s);
        const auto texture = haralick18(glcm_masked(plane, region, mask, levels));
        std::copy(texture.begin(), texture.end(), out.begin() + kLbpBins + s * kHaralickCount);
        const auto moments = moments4(plane, region);
        std::copy(moments.begin(), moments.end(),
                  out.begin() + kLbpBins + kSourceCount * kHaralickCount + s * kMomentCount);
    }
    return out;
}

FeatureVector assemble(const RgbFrame& frame, const slic::LabelMap& labels, const SuperpixelRegion& region,
                       int levels) {
    if (labels.width() != frame.width() || labels.height() != frame.height())
        throw std::invalid_argument("label map and frame differ in size");
    for (const Pixel& p : region.pixels)
        if (p.x < 0 || p.y < 0 || p.x >= frame.width() || p.y >= frame.height() || labels.at(p.x, p.y) != region.label)
            throw std::invalid_argument("region is inconsistent with the label map");
    return assemble(SourcePlanes::compute(frame), region, levels);
}

FrameFeatures extract_all(const RgbFrame& frame, const slic::LabelMap& labels, int levels) {
    if (labels.width() != frame.width() || labels.height() != frame.height())
        throw std::invalid_argument("label map and frame differ in size");
    const SourcePlanes sources = SourcePlanes::compute(frame);
    FrameFeatures out;
    for (const SuperpixelRegion& region : regions_from_labels(labels)) {
        try {
            out.rows.push_back({region.label, assemble(sources, region, levels)});
        } catch (const NoInteriorPairs&) {
            out.dropped.push_back(region.label);
        }
    }
    return out;
}

}  // namespace polypseg::features
