#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "polypseg/eval.hpp"
#include "polypseg/image.hpp"

namespace polypseg::synth {

struct Ellipse {
    double cx, cy;
    double semi_major, semi_minor;
    double angle;  ///< radians

    bool contains(double x, double y) const;
};

struct SynthFrame {
    RgbFrame image;
    eval::Mask mask;
    std::vector<Ellipse> polyps;
};

struct SynthOptions {
    int width = 576;
    int height = 576;
    int min_polyp_px = 150;
};

/// Procedural endoscopy-like frame: smooth pinkish mucosa with vignetting, plus `polyp_count`
/// elliptical blobs with an orange hue shift and bumpy shading. Deterministic in
/// (seed, patient, index).
SynthFrame generate_frame(std::uint64_t seed, int patient, int index, int polyp_count, const SynthOptions& opts = {});

struct FramePlan {
    std::string frame_id;
    std::string patient_id;
    int patient = 0;
    int polyp_count = 0;
    bool train = false;
};

/// Assigns frames round-robin to patients, marks round(0.55*count) frames as polyp frames
/// (1 or 2 blobs each) and picks `train_patients` patients for the training split.
std::vector<FramePlan> plan_dataset(int count, int patients, int train_patients, std::uint64_t seed);

}  // namespace polypseg::synth
