#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "polypseg/features.hpp"
#include "polypseg/lssvm.hpp"
#include "polypseg/slic.hpp"

namespace polypseg::eval {

using lssvm::Label;

/// Binary per-pixel mask; 1 = polyp.
class Mask {
public:
    Mask(int width, int height, std::vector<std::uint8_t> bits = {});

    int width() const { return width_; }
    int height() const { return height_; }
    bool at(int x, int y) const { return bits_[static_cast<std::size_t>(y) * width_ + x] != 0; }
    void set(int x, int y, bool v) { bits_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0; }
    const std::vector<std::uint8_t>& bits() const { return bits_; }
    std::size_t count() const;
    bool any() const { return count() > 0; }

    bool operator==(const Mask&) const = default;

private:
    int width_;
    int height_;
    std::vector<std::uint8_t> bits_;
};

/// Ground-truth outline of the polyp region.
using TruthMask = Mask;

/// 8-bit grayscale PNG, 0 = normal, 255 = polyp (any value above 127 reads as polyp).
Mask read_mask_png(const std::filesystem::path& path);
void write_mask_png(const std::filesystem::path& path, const Mask& mask);

struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;

    std::uint64_t total() const { return tp + fp + fn + tn; }
    ConfusionCounts& operator+=(const ConfusionCounts& o) {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        tn += o.tn;
        return *this;
    }
    bool operator==(const ConfusionCounts&) const = default;
};

enum class Granularity { Pixel, Frame };

const char* to_string(Granularity g);

/// Metrics with a zero denominator are std::nullopt ("undefined"), never NaN.
struct MetricsReport {
    std::optional<double> sensitivity;
    std::optional<double> specificity;
    std::optional<double> accuracy;
    std::optional<double> precision;
    ConfusionCounts counts;
    Granularity granularity = Granularity::Pixel;
    int k = 0;

    static MetricsReport from_counts(const ConfusionCounts& c, Granularity g, int k = 0);
    /// sensitivity, specificity, accuracy, precision in that order.
    std::array<std::optional<double>, 4> values() const { return {sensitivity, specificity, accuracy, precision}; }
};

const std::array<const char*, 4>& metric_names();

/// Polyp iff |region ∩ truth| / |region| >= tau.
Label label_superpixel(const features::SuperpixelRegion& region, const TruthMask& truth, double tau = 0.5);

/// Union of all superpixels labeled polyp by label_superpixel.
Mask oracle_segmentation(const slic::LabelMap& labels, const TruthMask& truth, double tau = 0.5);

ConfusionCounts pixel_counts(const Mask& pred, const TruthMask& truth);
MetricsReport pixel_metrics(const Mask& pred, const TruthMask& truth, int k = 0);

/// Polyp iff at least one superpixel is predicted polyp.
Label frame_decision(const std::vector<Label>& superpixel_predictions);

MetricsReport frame_metrics(const std::vector<Label>& decisions, const std::vector<Label>& truths, int k = 0);

/// Union of the superpixels whose predicted label is polyp.
Mask mask_from_predictions(const slic::LabelMap& labels, const std::vector<std::int32_t>& polyp_labels);

/// Mean and population standard deviation of each metric over frames where it is defined.
struct MetricSpread {
    std::array<std::optional<double>, 4> mean;
    std::array<std::optional<double>, 4> stddev;
    std::array<std::size_t, 4> frames{};
};

MetricSpread spread(const std::vector<MetricsReport>& per_frame);

nlohmann::json to_json(const MetricsReport& r);
nlohmann::json to_json(const MetricSpread& s);

// ---------------------------------------------------------------------------
// Superpixel-count sweep

struct SweepFrame {
    std::string frame_id;
    RgbFrame image;
    std::optional<TruthMask> truth;
};

struct SweepConfig {
    slic::SlicParams slic;
    int glcm_levels = features::kDefaultGlcmLevels;
    double tau = 0.5;
};

struct SweepReport {
    int k = 0;
    /// Pooled pixel metrics of oracle segmentation over frames with a mask.
    MetricsReport oracle;
    MetricSpread oracle_spread;
    /// Classified pixel metrics over frames containing polyp pixels; present when a model is given.
    std::optional<MetricsReport> classified;
    std::optional<MetricSpread> classified_spread;
    /// Frame-level decisions over frames with a mask; present when a model is given.
    std::optional<MetricsReport> frame;
};

/// Superpixel predictions for one frame.
struct FramePrediction {
    std::vector<std::int32_t> polyp_labels;
    Label decision = Label::Normal;
};

FramePrediction classify_frame(const lssvm::TrainedModel& model, const features::FrameFeatures& feats);

/// Ground-truth label of each feature row's superpixel.
std::vector<Label> truth_labels(const slic::LabelMap& labels, const features::FrameFeatures& feats,
                                const TruthMask& truth, double tau = 0.5);

/// Segmentation and features of one frame at one k.
struct FrameAnalysis {
    slic::LabelMap labels;
    features::FrameFeatures features;
};

FrameAnalysis analyze_frame(const RgbFrame& image, int k, const SweepConfig& cfg);

/// Oracle segmentation metrics over the frames that have a mask.
void score_oracle(SweepReport& report, const std::vector<SweepFrame>& frames,
                  const std::vector<FrameAnalysis>& analyses, double tau);

/// Classified pixel metrics over frames whose mask has polyp pixels, and frame decisions
/// over frames with a mask.
void score_classified(SweepReport& report, const std::vector<SweepFrame>& frames,
                      const std::vector<FrameAnalysis>& analyses, const lssvm::TrainedModel& model);

/// Segments every frame at k and scores oracle segmentation; with a model, also the classified
/// pixel metrics and frame decisions.
SweepReport sweep_one(const std::vector<SweepFrame>& frames, int k, const SweepConfig& cfg,
                      const lssvm::TrainedModel* model = nullptr);
/// sweep_one for each k, reports in k_list order.
std::vector<SweepReport> sweep(const std::vector<SweepFrame>& frames, const std::vector<int>& k_list,
                               const SweepConfig& cfg, const lssvm::TrainedModel* model = nullptr);

nlohmann::json to_json(const SweepReport& r);

}  // namespace polypseg::eval
