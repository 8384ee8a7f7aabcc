#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "polypseg/image.hpp"
#include "polypseg/slic.hpp"

namespace polypseg::features {

inline constexpr std::size_t kLbpBins = 32;
inline constexpr std::size_t kHaralickCount = 18;
inline constexpr std::size_t kMomentCount = 4;
inline constexpr std::size_t kSourceCount = 6;
inline constexpr std::size_t kFeatureCount = kLbpBins + kSourceCount * (kHaralickCount + kMomentCount);
static_assert(kFeatureCount == 164);

inline constexpr int kDefaultGlcmLevels = 16;

/// Rotation-invariant LBP codes: each code is the minimum over the 8 circular rotations
/// of the raw 3x3 pattern.
struct LbpCodePlane {
    Plane codes;
};

/// Raised when a region has no pair of pixels that both fall inside it at any GLCM offset.
struct NoInteriorPairs : std::runtime_error {
    NoInteriorPairs() : std::runtime_error("no interior pairs") {}
};

/// Pixels of one superpixel.
struct SuperpixelRegion {
    std::int32_t label = 0;
    std::vector<Pixel> pixels;
};

/// One region per label, in label order, pixels in scan order.
std::vector<SuperpixelRegion> regions_from_labels(const slic::LabelMap& labels);

/// Minimal circular rotation of an 8-bit pattern.
std::uint8_t min_rotation(std::uint8_t pattern);

LbpCodePlane lbp_code_plane(const Plane& gray);

std::array<double, kLbpBins> lbp_histogram(const LbpCodePlane& codes, const SuperpixelRegion& region);

/// Symmetric, normalized co-occurrence matrix with q levels.
class Glcm {
public:
    Glcm(int levels, std::vector<double> matrix);

    int levels() const { return levels_; }
    double at(int i, int j) const { return matrix_[static_cast<std::size_t>(i) * levels_ + j]; }
    const std::vector<double>& matrix() const { return matrix_; }

private:
    int levels_;
    std::vector<double> matrix_;
};

/// Offsets (1,0), (0,1), (1,1), (1,-1) accumulated symmetrically into one matrix, counting only
/// pairs with both pixels in the region. Values are quantized with floor(v*q/256).
Glcm glcm(const Plane& plane, const SuperpixelRegion& region, int levels = kDefaultGlcmLevels);
inline Glcm glcm(const LbpCodePlane& codes, const SuperpixelRegion& region, int levels = kDefaultGlcmLevels) {
    return glcm(codes.codes, region, levels);
}

/// Order of haralick18() output.
enum class Haralick : std::size_t {
    Autocorrelation,
    ClusterProminence,
    Energy,
    ClusterShade,
    Dissimilarity,
    Contrast,
    Entropy,
    Homogeneity,
    MaximumProbability,
    Correlation,
    SumOfSquaresVariance,
    SumAverage,
    SumVariance,
    SumEntropy,
    DifferenceVariance,
    DifferenceEntropy,
    InformationCorrelation1,
    InverseDifferenceMoment,
};

const std::array<const char*, kHaralickCount>& haralick_names();

/// The 18 texture statistics listed in `Haralick`. See docs/features.md for formulas.
std::array<double, kHaralickCount> haralick18(const Glcm& g);

/// Population mean, variance, skewness and excess kurtosis. Skewness and kurtosis are 0
/// when the variance is below 1e-12.
std::array<double, kMomentCount> moments4(const Plane& plane, const SuperpixelRegion& region);

/// The six per-frame planes features are computed from, in feature-vector order.
struct SourcePlanes {
    LbpCodePlane lbp;
    Plane gray;
    Plane red;
    Plane green;
    Plane blue;
    Plane hue;

    static SourcePlanes compute(const RgbFrame& frame);
    const Plane& source(std::size_t index) const;
};

const std::array<const char*, kSourceCount>& source_names();

using FeatureVector = std::array<double, kFeatureCount>;

/// Column names in feature-vector order.
const std::vector<std::string>& feature_names();

/// 64-bit FNV-1a over the canonical feature names; identifies the vector layout.
std::uint64_t feature_order_hash();

/// Layout: [0,32) LBP histogram, [32,140) Haralick blocks per source, [140,164) moment blocks.
/// Throws NoInteriorPairs when a GLCM cannot be formed.
FeatureVector assemble(const SourcePlanes& sources, const SuperpixelRegion& region, int levels = kDefaultGlcmLevels);
FeatureVector assemble(const RgbFrame& frame, const slic::LabelMap& labels, const SuperpixelRegion& region,
                       int levels = kDefaultGlcmLevels);

struct RegionFeatures {
    std::int32_t label;
    FeatureVector values;
};

struct FrameFeatures {
    std::vector<RegionFeatures> rows;
    /// Labels whose regions were dropped because no GLCM could be formed.
    std::vector<std::int32_t> dropped;
};

/// Feature vectors for every region of a frame, in label order.
FrameFeatures extract_all(const RgbFrame& frame, const slic::LabelMap& labels, int levels = kDefaultGlcmLevels);

}  // namespace polypseg::features
