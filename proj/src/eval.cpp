#include "polypseg/eval.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "polypseg/png_io.hpp"

namespace polypseg::eval {

Mask::Mask(int width, int height, std::vector<std::uint8_t> bits)
    : width_(width), height_(height), bits_(std::move(bits)) {
    const std::size_t n = static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0);
    if (width < 1 || height < 1) throw std::invalid_argument("mask dimensions must be positive");
    if (bits_.empty()) bits_.assign(n, 0);
    if (bits_.size() != n) throw std::invalid_argument("mask data length does not match dimensions");
    for (auto& b : bits_) b = b ? 1 : 0;
}

std::size_t Mask::count() const { return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1)); }

Mask read_mask_png(const std::filesystem::path& path) {
    const Plane p = png::read_gray8(path);
    std::vector<std::uint8_t> bits(p.data().size());
    for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = p.data()[i] > 127 ? 1 : 0;
    return {p.width(), p.height(), std::move(bits)};
}

void write_mask_png(const std::filesystem::path& path, const Mask& mask) {
    std::vector<std::uint8_t> data(mask.bits().size());
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = mask.bits()[i] ? 255 : 0;
    png::write_gray8(path, mask.width(), mask.height(), data);
}

const char* to_string(Granularity g) { return g == Granularity::Pixel ? "pixel" : "frame"; }

namespace {

std::optional<double> ratio(std::uint64_t num, std::uint64_t den) {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

nlohmann::json optional_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json("undefined"); }

}  // namespace

MetricsReport MetricsReport::from_counts(const ConfusionCounts& c, Granularity g, int k) {
    MetricsReport r;
    r.sensitivity = ratio(c.tp, c.tp + c.fn);
    r.specificity = ratio(c.tn, c.tn + c.fp);
    r.accuracy = ratio(c.tp + c.tn, c.total());
    r.precision = ratio(c.tp, c.tp + c.fp);
    r.counts = c;
    r.granularity = g;
    r.k = k;
    return r;
}

const std::array<const char*, 4>& metric_names() {
    static const std::array<const char*, 4> names = {"sensitivity", "specificity", "accuracy", "precision"};
    return names;
}

Label label_superpixel(const features::SuperpixelRegion& region, const TruthMask& truth, double tau) {
    if (!(tau > 0 && tau <= 1)) throw std::invalid_argument("overlap threshold tau must lie in (0, 1]");
    if (region.pixels.empty()) throw std::invalid_argument("empty region");
    std::size_t inside = 0;
    for (const Pixel& p : region.pixels) inside += truth.at(p.x, p.y) ? 1 : 0;
    // inside / size >= tau, compared without division.
    return static_cast<double>(inside) >= tau * static_cast<double>(region.pixels.size()) ? Label::Polyp
                                                                                          : Label::Normal;
}

Mask oracle_segmentation(const slic::LabelMap& labels, const TruthMask& truth, double tau) {
    if (labels.width() != truth.width() || labels.height() != truth.height())
        throw std::invalid_argument("label map and truth mask differ in size");
    std::vector<std::int32_t> selected;
    for (const auto& region : features::regions_from_labels(labels))
        if (label_superpixel(region, truth, tau) == Label::Polyp) selected.push_back(region.label);
    return mask_from_predictions(labels, selected);
}

ConfusionCounts pixel_counts(const Mask& pred, const TruthMask& truth) {
    if (pred.width() != truth.width() || pred.height() != truth.height())
        throw std::invalid_argument("predicted and truth masks differ in size");
    ConfusionCounts c;
    for (std::size_t i = 0; i < pred.bits().size(); ++i) {
        const bool p = pred.bits()[i] != 0;
        const bool t = truth.bits()[i] != 0;
        if (p && t) ++c.tp;
        else if (p) ++c.fp;
        else if (t) ++c.fn;
        else ++c.tn;
    }
    return c;
}

MetricsReport pixel_metrics(const Mask& pred, const TruthMask& truth, int k) {
    return MetricsReport::from_counts(pixel_counts(pred, truth), Granularity::Pixel, k);
}

Label frame_decision(const std::vector<Label>& superpixel_predictions) {
    if (superpixel_predictions.empty()) throw std::invalid_argument("frame has no superpixel predictions");
    return std::find(superpixel_predictions.begin(), superpixel_predictions.end(), Label::Polyp) !=
                   superpixel_predictions.end()
               ? Label::Polyp
               : Label::Normal;
}

MetricsReport frame_metrics(const std::vector<Label>& decisions, const std::vector<Label>& truths, int k) {
    if (decisions.size() != truths.size()) throw std::invalid_argument("decision and truth lists differ in length");
    if (decisions.empty()) throw std::invalid_argument("no frames to evaluate");
    ConfusionCounts c;
    for (std::size_t i = 0; i < decisions.size(); ++i) {
        const bool p = decisions[i] == Label::Polyp;
        const bool t = truths[i] == Label::Polyp;
        if (p && t) ++c.tp;
        else if (p) ++c.fp;
        else if (t) ++c.fn;
        else ++c.tn;
    }
    return MetricsReport::from_counts(c, Granularity::Frame, k);
}

Mask mask_from_predictions(const slic::LabelMap& labels, const std::vector<std::int32_t>& polyp_labels) {
    std::vector<std::uint8_t> chosen(static_cast<std::size_t>(labels.num_labels()), 0);
    for (const std::int32_t l : polyp_labels) {
        if (l < 0 || l >= labels.num_labels()) throw std::out_of_range("superpixel label out of range");
        chosen[static_cast<std::size_t>(l)] = 1;
    }
    std::vector<std::uint8_t> bits(labels.labels().size());
    for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = chosen[static_cast<std::size_t>(labels.labels()[i])];
    return {labels.width(), labels.height(), std::move(bits)};
}

MetricSpread spread(const std::vector<MetricsReport>& per_frame) {
    MetricSpread s;
    for (std::size_t m = 0; m < 4; ++m) {
        std::vector<double> v;
        for (const MetricsReport& r : per_frame)
            if (const auto x = r.values()[m]) v.push_back(*x);
        s.frames[m] = v.size();
        if (v.empty()) continue;
        double mean = 0;
        for (const double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double var = 0;
        for (const double x : v) var += (x - mean) * (x - mean);
        var /= static_cast<double>(v.size());
        s.mean[m] = mean;
        s.stddev[m] = std::sqrt(var);
    }
    return s;
}

nlohmann::json to_json(const MetricsReport& r) {
    nlohmann::json j = {{"granularity", to_string(r.granularity)},
                        {"k", r.k},
                        {"counts", {{"tp", r.counts.tp}, {"fp", r.counts.fp}, {"fn", r.counts.fn}, {"tn", r.counts.tn}}}};
    for (std::size_t m = 0; m < 4; ++m) j[metric_names()[m]] = optional_json(r.values()[m]);
    return j;
}

nlohmann::json to_json(const MetricSpread& s) {
    nlohmann::json j;
    for (std::size_t m = 0; m < 4; ++m)
        j[metric_names()[m]] = {{"mean", optional_json(s.mean[m])},
                                {"stddev", optional_json(s.stddev[m])},
                                {"frames", s.frames[m]}};
    return j;
}

FramePrediction classify_frame(const lssvm::TrainedModel& model, const features::FrameFeatures& feats) {
    FramePrediction out;
    for (const auto& row : feats.rows)
        if (lssvm::predict_label(model, row.values) == Label::Polyp) out.polyp_labels.push_back(row.label);
    out.decision = out.polyp_labels.empty() ? Label::Normal : Label::Polyp;
    return out;
}

std::vector<Label> truth_labels(const slic::LabelMap& labels, const features::FrameFeatures& feats,
                                const TruthMask& truth, double tau) {
    if (labels.width() != truth.width() || labels.height() != truth.height())
        throw std::invalid_argument("label map and truth mask differ in size");
    const auto regions = features::regions_from_labels(labels);
    std::vector<Label> out;
    out.reserve(feats.rows.size());
    for (const auto& row : feats.rows) out.push_back(label_superpixel(regions.at(static_cast<std::size_t>(row.label)), truth, tau));
    return out;
}

FrameAnalysis analyze_frame(const RgbFrame& image, int k, const SweepConfig& cfg) {
    slic::SlicParams params = cfg.slic;
    params.k = k;
    slic::Segmentation seg = slic::segment(image, params);
    features::FrameFeatures feats = features::extract_all(image, seg.labels, cfg.glcm_levels);
    return {std::move(seg.labels), std::move(feats)};
}

void score_oracle(SweepReport& report, const std::vector<SweepFrame>& frames,
                  const std::vector<FrameAnalysis>& analyses, double tau) {
    ConfusionCounts pooled;
    std::vector<MetricsReport> per_frame;
    for (std::size_t f = 0; f < frames.size(); ++f) {
        if (!frames[f].truth) continue;
        const Mask pred = oracle_segmentation(analyses[f].labels, *frames[f].truth, tau);
        const MetricsReport r = pixel_metrics(pred, *frames[f].truth, report.k);
        pooled += r.counts;
        per_frame.push_back(r);
    }
    report.oracle = MetricsReport::from_counts(pooled, Granularity::Pixel, report.k);
    report.oracle_spread = spread(per_frame);
}

void score_classified(SweepReport& report, const std::vector<SweepFrame>& frames,
                      const std::vector<FrameAnalysis>& analyses, const lssvm::TrainedModel& model) {
    ConfusionCounts pooled;
    std::vector<MetricsReport> per_frame;
    std::vector<Label> decisions, truths;
    for (std::size_t f = 0; f < frames.size(); ++f) {
        if (!frames[f].truth) continue;
        const FramePrediction pred = classify_frame(model, analyses[f].features);
        decisions.push_back(pred.decision);
        truths.push_back(frames[f].truth->any() ? Label::Polyp : Label::Normal);
        if (!frames[f].truth->any()) continue;
        const MetricsReport r =
            pixel_metrics(mask_from_predictions(analyses[f].labels, pred.polyp_labels), *frames[f].truth, report.k);
        pooled += r.counts;
        per_frame.push_back(r);
    }
    if (!per_frame.empty()) {
        report.classified = MetricsReport::from_counts(pooled, Granularity::Pixel, report.k);
        report.classified_spread = spread(per_frame);
    }
    if (!decisions.empty()) report.frame = frame_metrics(decisions, truths, report.k);
}

SweepReport sweep_one(const std::vector<SweepFrame>& frames, int k, const SweepConfig& cfg,
                      const lssvm::TrainedModel* model) {
    if (frames.empty()) throw std::invalid_argument("no frames to sweep");
    std::vector<FrameAnalysis> analyses;
    analyses.reserve(frames.size());
    for (const SweepFrame& f : frames) analyses.push_back(analyze_frame(f.image, k, cfg));
    SweepReport report;
    report.k = k;
    score_oracle(report, frames, analyses, cfg.tau);
    if (model) score_classified(report, frames, analyses, *model);
    return report;
}

std::vector<SweepReport> sweep(const std::vector<SweepFrame>& frames, const std::vector<int>& k_list,
                               const SweepConfig& cfg, const lssvm::TrainedModel* model) {
    if (k_list.empty()) throw std::invalid_argument("k list is empty");
    std::vector<SweepReport> out;
    for (const int k : k_list) out.push_back(sweep_one(frames, k, cfg, model));
    return out;
}

nlohmann::json to_json(const SweepReport& r) {
    nlohmann::json j = {{"k", r.k}, {"oracle", to_json(r.oracle)}, {"oracle_per_frame", to_json(r.oracle_spread)}};
    j["classified"] = r.classified ? to_json(*r.classified) : nlohmann::json("skipped");
    j["classified_per_frame"] = r.classified_spread ? to_json(*r.classified_spread) : nlohmann::json("skipped");
    j["frame"] = r.frame ? to_json(*r.frame) : nlohmann::json("skipped");
    return j;
}

}  // namespace polypseg::eval
