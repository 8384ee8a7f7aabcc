#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "polypseg/image.hpp"

namespace polypseg::slic {

struct SlicParams {
    int k = 100;                  ///< requested superpixel count
    double compactness = 10.0;    ///< color normalizer N_c; the spatial normalizer is the grid spacing S
    int max_iters = 10;
    double min_region_frac = 0.25;  ///< fragments below this fraction of N/k are merged away
    bool enforce_connectivity = true;
};

/// Throws std::invalid_argument when params are unusable for a width x height frame.
void validate(const SlicParams& params, int width, int height);

/// Grid spacing S = sqrt(N / k).
double grid_spacing(int width, int height, int k);

struct ClusterCenter {
    double x = 0;
    double y = 0;
    double r = 0;
    double g = 0;
    double b = 0;
    std::size_t count = 0;
};

/// Per-pixel superpixel ids. Labels are compact: every id in [0, num_labels) is used.
class LabelMap {
public:
    LabelMap(int width, int height, std::vector<std::int32_t> labels);

    int width() const { return width_; }
    int height() const { return height_; }
    int num_labels() const { return num_labels_; }
    std::int32_t at(int x, int y) const { return labels_[static_cast<std::size_t>(y) * width_ + x]; }
    const std::vector<std::int32_t>& labels() const { return labels_; }

    bool operator==(const LabelMap&) const = default;

private:
    int width_;
    int height_;
    int num_labels_ = 0;
    std::vector<std::int32_t> labels_;
};

struct Segmentation {
    LabelMap labels;
    /// Final position and mean color of every label, indexed by label id.
    std::vector<ClusterCenter> centers;
    /// Grid spacing S used for the search window and the spatial normalizer.
    double spacing = 0;
    int iterations = 0;
};

/// Regular grid seeding followed by a move to the lowest-gradient pixel of each 3x3 neighborhood.
/// Gradient ties resolve in scan order (smallest y, then smallest x).
std::vector<ClusterCenter> init_centers(const RgbFrame& frame, const GradientField& grad, int k);

/// Euclidean RGB distance.
double color_distance(Rgb pixel, const ClusterCenter& c);
/// Euclidean distance in pixel coordinates.
double spatial_distance(Pixel p, const ClusterCenter& c);
/// sqrt((dc/nc)^2 + (dp/np)^2); throws on non-positive normalizers.
double joint_distance(double dc, double dp, double nc, double np);

/// A center claims pixel p when |p.x - c.x| <= S and |p.y - c.y| <= S (a 2S x 2S window).
inline bool in_window(Pixel p, const ClusterCenter& c, double spacing) {
    return std::abs(p.x - c.x) <= spacing && std::abs(p.y - c.y) <= spacing;
}

Segmentation segment(const RgbFrame& frame, const SlicParams& params);

/// floor(width*height / (2*min_polyp_px)); throws when min_polyp_px is 0 or no count is feasible.
int max_superpixels(int width, int height, int min_polyp_px);

/// Relabel ids in order of first appearance in scan order. Input ids must be >= 0.
LabelMap compact_labels(int width, int height, const std::vector<std::int32_t>& raw);

/// 16-bit grayscale PNG of label ids; throws when num_labels exceeds 65535.
void write_label_png(const std::filesystem::path& path, const LabelMap& labels);
LabelMap read_label_png(const std::filesystem::path& path);

}  // namespace polypseg::slic
