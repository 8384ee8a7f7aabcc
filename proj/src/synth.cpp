#include "polypseg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <stdexcept>

namespace polypseg::synth {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

double unit(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

// Uniform draw in [lo, hi) from the generator; avoids std distributions, whose output is
// implementation-defined.
double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * unit(rng()); }

// Smooth lattice noise in [0,1].
class ValueNoise {
public:
    ValueNoise(std::uint64_t seed, double cell) : seed_(seed), cell_(cell) {}

    double operator()(double x, double y) const {
        const double fx = x / cell_;
        const double fy = y / cell_;
        const auto ix = static_cast<std::int64_t>(std::floor(fx));
        const auto iy = static_cast<std::int64_t>(std::floor(fy));
        const double tx = smooth(fx - ix);
        const double ty = smooth(fy - iy);
        const double a = lattice(ix, iy), b = lattice(ix + 1, iy);
        const double c = lattice(ix, iy + 1), d = lattice(ix + 1, iy + 1);
        return (a + (b - a) * tx) * (1 - ty) + (c + (d - c) * tx) * ty;
    }

private:
    static double smooth(double t) { return t * t * (3 - 2 * t); }
    double lattice(std::int64_t x, std::int64_t y) const {
        return unit(splitmix(seed_ ^ splitmix(static_cast<std::uint64_t>(x) * 0x632be59bd9b4e019ull +
                                              static_cast<std::uint64_t>(y))));
    }

    std::uint64_t seed_;
    double cell_;
};

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

}  // namespace

bool Ellipse::contains(double x, double y) const {
    const double dx = x - cx;
    const double dy = y - cy;
    const double c = std::cos(angle), s = std::sin(angle);
    const double u = (dx * c + dy * s) / semi_major;
    const double v = (-dx * s + dy * c) / semi_minor;
    return u * u + v * v <= 1.0;
}

SynthFrame generate_frame(std::uint64_t seed, int patient, int index, int polyp_count, const SynthOptions& opts) {
    if (polyp_count < 0 || polyp_count > 2) throw std::invalid_argument("polyp count must be 0, 1 or 2");
    const int w = opts.width;
    const int h = opts.height;
    const std::uint64_t patient_seed = splitmix(seed ^ splitmix(0x70617469656e74ull + patient));
    const std::uint64_t frame_seed = splitmix(patient_seed ^ splitmix(static_cast<std::uint64_t>(index) + 1));
    std::mt19937_64 patient_rng(patient_seed);
    std::mt19937_64 rng(frame_seed);

    // Mucosa tone is a per-patient trait.
    const double base_r = 200 + uniform(patient_rng, -10, 10);
    const double base_g = 120 + uniform(patient_rng, -8, 8);
    const double base_b = 100 + uniform(patient_rng, -8, 8);

    const ValueNoise broad(splitmix(frame_seed + 1), 110.0);
    const ValueNoise medium(splitmix(frame_seed + 2), 28.0);
    const ValueNoise tint(splitmix(frame_seed + 3), 140.0);
    const ValueNoise bumps(splitmix(frame_seed + 4), 7.0);
    const ValueNoise fine_bumps(splitmix(frame_seed + 5), 3.0);

    std::vector<Ellipse> polyps;
    for (int p = 0; p < polyp_count; ++p) {
        Ellipse e{};
        for (int attempt = 0; attempt < 50; ++attempt) {
            const double major = uniform(rng, 45, 100);
            const double minor = major * uniform(rng, 0.65, 1.0);
            const double margin = major + 12;
            e = {uniform(rng, margin, w - margin), uniform(rng, margin, h - margin), major, minor,
                 uniform(rng, 0, std::numbers::pi)};
            const bool clear = std::none_of(polyps.begin(), polyps.end(), [&](const Ellipse& o) {
                return std::hypot(o.cx - e.cx, o.cy - e.cy) < o.semi_major + e.semi_major + 10;
            });
            if (clear) break;
        }
        polyps.push_back(e);
    }

    RgbFrame image(w, h);
    eval::Mask mask(w, h);
    const double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
    const double rmax2 = cx * cx + cy * cy;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double vignette = 1.0 - 0.4 * ((x - cx) * (x - cx) + (y - cy) * (y - cy)) / rmax2;
            const double lum = 1.0 + 0.24 * (broad(x, y) - 0.5) + 0.10 * (medium(x, y) - 0.5);
            double r = base_r, g = base_g + 16 * (tint(x, y) - 0.5), b = base_b;
            double shade = lum;
            for (const Ellipse& e : polyps) {
                if (!e.contains(x, y)) continue;
                mask.set(x, y, true);
                const double c = std::cos(e.angle), s = std::sin(e.angle);
                const double u = ((x - e.cx) * c + (y - e.cy) * s) / e.semi_major;
                const double v = (-(x - e.cx) * s + (y - e.cy) * c) / e.semi_minor;
                const double rho2 = std::min(1.0, u * u + v * v);
                r = base_r + 20;
                g = base_g + 32;
                b = base_b - 18;
                shade = lum * (1.0 + 0.12 * (1.0 - rho2)) *
                        (1.0 + 0.20 * (bumps(x, y) - 0.5) + 0.10 * (fine_bumps(x, y) - 0.5));
                break;
            }
            const std::uint64_t px = splitmix(frame_seed ^ (static_cast<std::uint64_t>(y) << 32 | static_cast<std::uint32_t>(x)));
            const auto jitter = [&](int shift) { return static_cast<double>((px >> shift) % 7) - 3.0; };
            image.set(x, y, {to_byte(r * shade * vignette + jitter(0)), to_byte(g * shade * vignette + jitter(8)),
                             to_byte(b * shade * vignette + jitter(16))});
        }

    for (const Ellipse& e : polyps) {
        std::size_t area = 0;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) area += e.contains(x, y) ? 1 : 0;
        if (area < static_cast<std::size_t>(opts.min_polyp_px))
            throw std::logic_error("generated polyp smaller than the minimum polyp size");
    }
    return {std::move(image), std::move(mask), std::move(polyps)};
}

std::vector<FramePlan> plan_dataset(int count, int patients, int train_patients, std::uint64_t seed) {
    if (count < 1) throw std::invalid_argument("frame count must be at least 1");
    if (patients < 1) throw std::invalid_argument("patient count must be at least 1");
    if (train_patients < 0 || train_patients > patients)
        throw std::invalid_argument("train patient count must lie in [0, patients]");
    std::mt19937_64 rng(splitmix(seed ^ 0x706c616eull));

    // Fisher-Yates with our own index draw.
    const auto shuffle = [&](std::vector<int>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng() % i]);
    };

    std::vector<int> order(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) order[i] = i;
    shuffle(order);
    const int polyp_frames = static_cast<int>(std::lround(0.55 * count));
    std::vector<int> polyps(static_cast<std::size_t>(count), 0);
    for (int i = 0; i < polyp_frames; ++i) polyps[order[i]] = unit(rng()) < 0.3 ? 2 : 1;

    std::vector<int> patient_order(static_cast<std::size_t>(patients));
    for (int p = 0; p < patients; ++p) patient_order[p] = p;
    shuffle(patient_order);
    std::vector<bool> is_train(static_cast<std::size_t>(patients), false);
    for (int i = 0; i < train_patients; ++i) is_train[patient_order[i]] = true;

    std::vector<FramePlan> plan;
    for (int i = 0; i < count; ++i) {
        FramePlan f;
        char id[32];
        std::snprintf(id, sizeof id, "synth_%04d", i);
        f.frame_id = id;
        f.patient = i % patients;
        f.patient_id = "patient_" + std::to_string(f.patient + 1);
        f.polyp_count = polyps[i];
        f.train = is_train[f.patient];
        plan.push_back(f);
    }
    return plan;
}

}  // namespace polypseg::synth
