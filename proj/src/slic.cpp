#include "polypseg/slic.hpp"

#include <algorithm>
#include <limits>
#include <optional>
#include <string>

#include "polypseg/png_io.hpp"

namespace polypseg::slic {

void validate(const SlicParams& params, int width, int height) {
    const long long n = static_cast<long long>(width) * height;
    if (params.k < 1) throw std::invalid_argument("superpixel count k must be positive");
    if (params.k > n / 2)
        throw std::invalid_argument("superpixel count k=" + std::to_string(params.k) + " exceeds the limit of " +
                                    std::to_string(n / 2) + " for a " + std::to_string(width) + "x" +
                                    std::to_string(height) + " frame");
    if (!(params.compactness > 0)) throw std::invalid_argument("compactness must be positive");
    if (params.max_iters < 1) throw std::invalid_argument("max_iters must be at least 1");
    if (!(params.min_region_frac > 0 && params.min_region_frac <= 1))
        throw std::invalid_argument("min_region_frac must lie in (0, 1]");
}

double grid_spacing(int width, int height, int k) {
    return std::sqrt(static_cast<double>(width) * height / k);
}

std::vector<ClusterCenter> init_centers(const RgbFrame& frame, const GradientField& grad, int k) {
    SlicParams p;
    p.k = k;
    validate(p, frame.width(), frame.height());
    const int w = frame.width();
    const int h = frame.height();

    const int nx = std::clamp(static_cast<int>(std::ceil(std::sqrt(static_cast<double>(k) * w / h))), 1, std::min(k, w));
    const int ny = std::clamp(static_cast<int>(std::lround(static_cast<double>(k) / nx)), 1, h);
    const double step_x = static_cast<double>(w) / nx;
    const double step_y = static_cast<double>(h) / ny;

    std::vector<ClusterCenter> centers;
    centers.reserve(static_cast<std::size_t>(nx) * ny);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const int gx = static_cast<int>((i + 0.5) * step_x);
            const int gy = static_cast<int>((j + 0.5) * step_y);
            int bx = gx, by = gy;
            double best = std::numeric_limits<double>::infinity();
            for (int y = gy - 1; y <= gy + 1; ++y)
                for (int x = gx - 1; x <= gx + 1; ++x) {
                    if (x < 0 || y < 0 || x >= w || y >= h) continue;
                    if (grad.at(x, y) < best) {
                        best = grad.at(x, y);
                        bx = x;
                        by = y;
                    }
                }
            const Rgb c = frame.at(bx, by);
            centers.push_back({double(bx), double(by), double(c.r), double(c.g), double(c.b), 0});
        }
    return centers;
}

double color_distance(Rgb pixel, const ClusterCenter& c) {
    const double dr = pixel.r - c.r;
    const double dg = pixel.g - c.g;
    const double db = pixel.b - c.b;
    return std::sqrt(dr * dr + dg * dg + db * db);
}

double spatial_distance(Pixel p, const ClusterCenter& c) {
    const double dx = p.x - c.x;
    const double dy = p.y - c.y;
    return std::sqrt(dx * dx + dy * dy);
}

double joint_distance(double dc, double dp, double nc, double np) {
    if (!(nc > 0) || !(np > 0)) throw std::invalid_argument("distance normalizers must be positive");
    const double a = dc / nc;
    const double b = dp / np;
    return std::sqrt(a * a + b * b);
}

int max_superpixels(int width, int height, int min_polyp_px) {
    if (min_polyp_px < 1) throw std::invalid_argument("minimum polyp size must be at least 1 pixel");
    const long long count = static_cast<long long>(width) * height / (2LL * min_polyp_px);
    if (count < 1) throw std::invalid_argument("no feasible superpixel count");
    return static_cast<int>(count);
}

LabelMap::LabelMap(int width, int height, std::vector<std::int32_t> labels)
    : width_(width), height_(height), labels_(std::move(labels)) {
    if (width_ < 1 || height_ < 1 || labels_.size() != static_cast<std::size_t>(width_) * height_)
        throw std::invalid_argument("label data length does not match dimensions");
    std::int32_t hi = -1;
    for (const std::int32_t v : labels_) {
        if (v < 0) throw std::invalid_argument("negative label in label map");
        hi = std::max(hi, v);
    }
    num_labels_ = hi + 1;
    std::vector<char> used(static_cast<std::size_t>(num_labels_), 0);
    for (const std::int32_t v : labels_) used[v] = 1;
    if (std::find(used.begin(), used.end(), 0) != used.end())
        throw std::invalid_argument("label map ids are not compact");
}

LabelMap compact_labels(int width, int height, const std::vector<std::int32_t>& raw) {
    std::vector<std::int32_t> remap;
    std::vector<std::int32_t> out(raw.size());
    std::int32_t next = 0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const auto v = static_cast<std::size_t>(raw[i]);
        if (v >= remap.size()) remap.resize(v + 1, -1);
        if (remap[v] < 0) remap[v] = next++;
        out[i] = remap[v];
    }
    return {width, height, std::move(out)};
}

namespace {

constexpr std::int32_t kUnassigned = -1;

// Windowed k-means in joint color/space. Returns per-pixel center index or kUnassigned.
std::vector<std::int32_t> cluster(const RgbFrame& frame, std::vector<ClusterCenter>& centers, double spacing,
                                  const SlicParams& params, int& iterations) {
    const int w = frame.width();
    const int h = frame.height();
    const std::size_t n = frame.pixel_count();
    std::vector<std::int32_t> label(n, kUnassigned);
    std::vector<std::int32_t> next(n);
    std::vector<double> best(n);

    iterations = 0;
    for (int iter = 0; iter < params.max_iters; ++iter) {
        std::fill(next.begin(), next.end(), kUnassigned);
        std::fill(best.begin(), best.end(), std::numeric_limits<double>::infinity());
        for (std::size_t ci = 0; ci < centers.size(); ++ci) {
            const ClusterCenter& c = centers[ci];
            const int x0 = std::max(0, static_cast<int>(std::ceil(c.x - spacing)));
            const int x1 = std::min(w - 1, static_cast<int>(std::floor(c.x + spacing)));
            const int y0 = std::max(0, static_cast<int>(std::ceil(c.y - spacing)));
            const int y1 = std::min(h - 1, static_cast<int>(std::floor(c.y + spacing)));
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x) {
                    const std::size_t i = static_cast<std::size_t>(y) * w + x;
                    const double d = joint_distance(color_distance(frame.at(x, y), c), spatial_distance({x, y}, c),
                                                    params.compactness, spacing);
                    if (d < best[i]) {
                        best[i] = d;
                        next[i] = static_cast<std::int32_t>(ci);
                    }
                }
        }
        if (!params.enforce_connectivity) {
            // Pixels outside every window fall back to the nearest center overall.
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    const std::size_t i = static_cast<std::size_t>(y) * w + x;
                    if (next[i] != kUnassigned) continue;
                    for (std::size_t ci = 0; ci < centers.size(); ++ci) {
                        const double d = joint_distance(color_distance(frame.at(x, y), centers[ci]),
                                                        spatial_distance({x, y}, centers[ci]), params.compactness,
                                                        spacing);
                        if (d < best[i]) {
                            best[i] = d;
                            next[i] = static_cast<std::int32_t>(ci);
                        }
                    }
                }
        }
        const bool changed = next != label;
        label.swap(next);
        ++iterations;

        std::vector<ClusterCenter> sums(centers.size());
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const std::int32_t l = label[static_cast<std::size_t>(y) * w + x];
                if (l == kUnassigned) continue;
                ClusterCenter& s = sums[static_cast<std::size_t>(l)];
                const Rgb c = frame.at(x, y);
                s.x += x;
                s.y += y;
                s.r += c.r;
                s.g += c.g;
                s.b += c.b;
                ++s.count;
            }
        for (std::size_t ci = 0; ci < centers.size(); ++ci) {
            const ClusterCenter& s = sums[ci];
            centers[ci].count = s.count;
            if (s.count == 0) continue;
            const double inv = 1.0 / static_cast<double>(s.count);
            centers[ci] = {s.x * inv, s.y * inv, s.r * inv, s.g * inv, s.b * inv, s.count};
        }
        if (!changed) break;
    }
    return label;
}

struct Component {
    std::int32_t raw = kUnassigned;
    std::size_t size = 0;
    double sum_x = 0, sum_y = 0;
    int min_x = 0, max_x = 0, min_y = 0, max_y = 0;
};

struct Group {
    std::size_t size = 0;
    double sum_x = 0, sum_y = 0;
    int min_x = 0, max_x = 0, min_y = 0, max_y = 0;

    void absorb(const Component& c) {
        if (size == 0) {
            min_x = c.min_x;
            max_x = c.max_x;
            min_y = c.min_y;
            max_y = c.max_y;
        } else {
            min_x = std::min(min_x, c.min_x);
            max_x = std::max(max_x, c.max_x);
            min_y = std::min(min_y, c.min_y);
            max_y = std::max(max_y, c.max_y);
        }
        size += c.size;
        sum_x += c.sum_x;
        sum_y += c.sum_y;
    }

    // Chebyshev reach from the centroid to the farthest bounding-box edge if `c` were absorbed.
    double reach_with(const Component& c) const {
        const double n = static_cast<double>(size + c.size);
        const double cx = (sum_x + c.sum_x) / n;
        const double cy = (sum_y + c.sum_y) / n;
        return std::max({cx - std::min(min_x, c.min_x), std::max(max_x, c.max_x) - cx,
                         cy - std::min(min_y, c.min_y), std::max(max_y, c.max_y) - cy});
    }
};

// Splits clusters into 4-connected components, merges small ones into their largest neighbor
// as long as the merged region stays within 2S of its centroid, and compacts the result.
LabelMap enforce_connectivity(int w, int h, const std::vector<std::int32_t>& raw, double min_size, double spacing) {
    const std::size_t n = raw.size();
    std::vector<std::int32_t> comp(n, -1);
    std::vector<Component> comps;
    std::vector<std::size_t> stack;
    for (std::size_t start = 0; start < n; ++start) {
        if (comp[start] >= 0) continue;
        const auto id = static_cast<std::int32_t>(comps.size());
        Component c;
        c.raw = raw[start];
        c.min_x = c.max_x = static_cast<int>(start % w);
        c.min_y = c.max_y = static_cast<int>(start / w);
        comp[start] = id;
        stack.push_back(start);
        while (!stack.empty()) {
            const std::size_t i = stack.back();
            stack.pop_back();
            const int x = static_cast<int>(i % w);
            const int y = static_cast<int>(i / w);
            ++c.size;
            c.sum_x += x;
            c.sum_y += y;
            c.min_x = std::min(c.min_x, x);
            c.max_x = std::max(c.max_x, x);
            c.min_y = std::min(c.min_y, y);
            c.max_y = std::max(c.max_y, y);
            const auto visit = [&](int nx, int ny) {
                const std::size_t j = static_cast<std::size_t>(ny) * w + nx;
                if (comp[j] < 0 && raw[j] == c.raw) {
                    comp[j] = id;
                    stack.push_back(j);
                }
            };
            if (x > 0) visit(x - 1, y);
            if (x + 1 < w) visit(x + 1, y);
            if (y > 0) visit(x, y - 1);
            if (y + 1 < h) visit(x, y + 1);
        }
        comps.push_back(c);
    }

    std::vector<std::vector<std::int32_t>> adjacent(comps.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            if (x + 1 < w && comp[i] != comp[i + 1]) {
                adjacent[comp[i]].push_back(comp[i + 1]);
                adjacent[comp[i + 1]].push_back(comp[i]);
            }
            if (y + 1 < h && comp[i] != comp[i + w]) {
                adjacent[comp[i]].push_back(comp[i + w]);
                adjacent[comp[i + w]].push_back(comp[i]);
            }
        }
    for (auto& a : adjacent) {
        std::sort(a.begin(), a.end());
        a.erase(std::unique(a.begin(), a.end()), a.end());
    }

    std::vector<std::int32_t> group_of(comps.size(), -1);
    std::vector<Group> groups;
    std::vector<std::int32_t> pending;
    // Components are numbered in scan order of their first pixel.
    for (std::size_t ci = 0; ci < comps.size(); ++ci) {
        if (comps[ci].raw != kUnassigned && static_cast<double>(comps[ci].size) >= min_size) {
            group_of[ci] = static_cast<std::int32_t>(groups.size());
            groups.emplace_back().absorb(comps[ci]);
        } else {
            pending.push_back(static_cast<std::int32_t>(ci));
        }
    }

    const double bound = 2.0 * spacing;
    while (!pending.empty()) {
        std::vector<std::int32_t> still;
        for (const std::int32_t ci : pending) {
            std::int32_t target = -1;
            for (const std::int32_t nb : adjacent[ci]) {
                const std::int32_t g = group_of[nb];
                if (g < 0 || g == target) continue;
                if (groups[g].reach_with(comps[ci]) > bound) continue;
                if (target < 0 || groups[g].size > groups[target].size ||
                    (groups[g].size == groups[target].size && g < target))
                    target = g;
            }
            if (target < 0) {
                still.push_back(ci);
                continue;
            }
            group_of[ci] = target;
            groups[target].absorb(comps[ci]);
        }
        if (still.size() == pending.size()) {
            // No fragment could join a neighbor; promote the first one to a region of its own.
            const std::int32_t ci = still.front();
            group_of[ci] = static_cast<std::int32_t>(groups.size());
            groups.emplace_back().absorb(comps[ci]);
            still.erase(still.begin());
        }
        pending.swap(still);
    }

    std::vector<std::int32_t> merged(n);
    for (std::size_t i = 0; i < n; ++i) merged[i] = group_of[comp[i]];
    return compact_labels(w, h, merged);
}

std::vector<ClusterCenter> label_means(const RgbFrame& frame, const LabelMap& labels) {
    std::vector<ClusterCenter> out(static_cast<std::size_t>(labels.num_labels()));
    for (int y = 0; y < frame.height(); ++y)
        for (int x = 0; x < frame.width(); ++x) {
            ClusterCenter& s = out[static_cast<std::size_t>(labels.at(x, y))];
            const Rgb c = frame.at(x, y);
            s.x += x;
            s.y += y;
            s.r += c.r;
            s.g += c.g;
            s.b += c.b;
            ++s.count;
        }
    for (ClusterCenter& s : out) {
        const double inv = 1.0 / static_cast<double>(s.count);
        s.x *= inv;
        s.y *= inv;
        s.r *= inv;
        s.g *= inv;
        s.b *= inv;
    }
    return out;
}

}  // namespace

Segmentation segment(const RgbFrame& frame, const SlicParams& params) {
    validate(params, frame.width(), frame.height());
    const int w = frame.width();
    const int h = frame.height();
    const double spacing = grid_spacing(w, h, params.k);

    std::vector<ClusterCenter> centers = init_centers(frame, gradient_magnitude(to_grayscale(frame)), params.k);
    int iterations = 0;
    std::vector<std::int32_t> raw = cluster(frame, centers, spacing, params, iterations);

    std::optional<LabelMap> labels;
    if (params.enforce_connectivity) {
        const double min_size = params.min_region_frac * static_cast<double>(frame.pixel_count()) / params.k;
        labels = enforce_connectivity(w, h, raw, min_size, spacing);
    } else {
        labels = compact_labels(w, h, raw);
    }
    std::vector<ClusterCenter> means = label_means(frame, *labels);
    return {std::move(*labels), std::move(means), spacing, iterations};
}

void write_label_png(const std::filesystem::path& path, const LabelMap& labels) {
    if (labels.num_labels() > 65535)
        throw std::invalid_argument("label map has " + std::to_string(labels.num_labels()) +
                                    " labels; 16-bit PNG holds at most 65535");
    std::vector<std::uint16_t> data(labels.labels().begin(), labels.labels().end());
    png::write_gray16(path, labels.width(), labels.height(), data);
}

LabelMap read_label_png(const std::filesystem::path& path) {
    int w = 0, h = 0;
    const std::vector<std::uint16_t> data = png::read_gray16(path, w, h);
    return {w, h, std::vector<std::int32_t>(data.begin(), data.end())};
}

}  // namespace polypseg::slic
