#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "polypseg/eval.hpp"
#include "polypseg/features.hpp"
#include "polypseg/lssvm.hpp"
#include "polypseg/slic.hpp"

namespace polypseg::app {

namespace fs = std::filesystem;

/// Bad invocation; maps to exit code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Unrecoverable failure; maps to exit code 1.
struct HardError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitHard = 1;
inline constexpr int kExitUsage = 2;

struct PipelineConfig {
    slic::SlicParams slic;  ///< k is taken from k_list
    int glcm_levels = features::kDefaultGlcmLevels;
    double tau = 0.5;
    lssvm::TrainConfig train;
    bool grid_search = false;
    /// Upper bound on LS-SVM training rows; larger sets keep polyp rows and subsample normal ones.
    std::size_t max_train_rows = 3000;
    std::vector<int> k_list = {25, 50, 100, 200, 400, 800};
    std::uint64_t seed = 7;
    int min_polyp_px = 150;

    void validate() const;
};

nlohmann::json to_json(const PipelineConfig& cfg);
/// Missing keys take their defaults; unknown keys are rejected.
PipelineConfig config_from_json(const nlohmann::json& j);
PipelineConfig load_config(const fs::path& path);
/// FNV-1a over the canonical JSON dump, as 16 hex digits.
std::string config_hash(const PipelineConfig& cfg);

enum class Split { Train, Test, Unassigned };

struct ManifestEntry {
    std::string frame_id;
    std::string patient_id;
    fs::path image_path;
    std::optional<fs::path> mask_path;
    Split split = Split::Unassigned;
};

struct Manifest {
    std::vector<ManifestEntry> frames;
};

/// Relative paths resolve against the manifest's directory. Throws HardError on duplicate ids
/// or missing files, UsageError when the manifest lists no frames.
Manifest load_manifest(const fs::path& path);
void write_manifest(const fs::path& path, const Manifest& m);

/// Throws HardError("patient leakage ...") when a patient has frames in both splits.
void check_patient_split(const Manifest& m);

/// Options shared by the commands.
struct RunOptions {
    fs::path out;
    std::optional<std::vector<int>> k_override;
    std::optional<fs::path> model_path;
    std::ostream* log = nullptr;  ///< warnings and progress; defaults to std::cerr
};

struct SynthRequest {
    int count = 40;
    int patients = 5;
    int train_patients = 3;
    std::uint64_t seed = 7;
    fs::path out;
};

int cmd_synth(const SynthRequest& req, std::ostream* log = nullptr);
int cmd_segment(const Manifest& m, const PipelineConfig& cfg, const RunOptions& opts);
int cmd_features(const Manifest& m, const PipelineConfig& cfg, const RunOptions& opts);
int cmd_train(const Manifest& m, const PipelineConfig& cfg, const RunOptions& opts);
int cmd_evaluate(const Manifest& m, const PipelineConfig& cfg, const RunOptions& opts);
int cmd_sweep(const Manifest& m, const PipelineConfig& cfg, const RunOptions& opts);

// Artifact layout under the output directory.
fs::path label_png_path(const fs::path& out, const std::string& frame_id, int k);
fs::path features_csv_path(const fs::path& out, int k);
fs::path model_path(const fs::path& out, int k);

struct FeatureRow {
    std::string frame_id;
    std::int32_t superpixel_id = 0;
    std::optional<lssvm::Label> label;
    features::FeatureVector values{};
};

struct FeatureTable {
    std::string config_hash;
    std::vector<FeatureRow> rows;
};

void write_feature_csv(const fs::path& path, const FeatureTable& table);
FeatureTable read_feature_csv(const fs::path& path);

/// Keeps at most `max_rows` rows: polyp rows first (up to half the budget), the rest drawn
/// from normal rows with a seeded shuffle. Returned indices are sorted.
std::vector<std::size_t> select_training_rows(const std::vector<lssvm::Label>& labels, std::size_t max_rows,
                                              std::uint64_t seed);

/// Sweep and evaluation reports: one CSV row per k and granularity, JSON summary, SVG plot.
void write_reports(const fs::path& dir, const std::string& stem, const std::vector<eval::SweepReport>& reports,
                   const std::string& cfg_hash);

}  // namespace polypseg::app
