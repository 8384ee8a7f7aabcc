#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <thread>

#include "polypseg/app.hpp"
#include "polypseg/png_io.hpp"
#include "polypseg/synth.hpp"

namespace polypseg::app {

using nlohmann::json;

namespace {

std::ostream& log_of(std::ostream* log) { return log ? *log : std::cerr; }

void warn(std::ostream& log, const std::string& msg) { log << "warning: " << msg << '\n'; }

// Runs fn(i) for i in [0, n) on a small thread pool. Results land in their own slots, so the
// output is independent of scheduling; the first failing index (in order) is rethrown.
template <typename T, typename Fn>
std::vector<T> parallel_map(std::size_t n, Fn fn) {
    std::vector<std::optional<T>> slots(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                slots[i].emplace(fn(i));
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t count = std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
    {
        std::vector<std::jthread> pool;
        for (std::size_t t = 1; t < count; ++t) pool.emplace_back(worker);
        worker();
    }
    std::vector<T> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (errors[i]) std::rethrow_exception(errors[i]);
        out.push_back(std::move(*slots[i]));
    }
    return out;
}

std::vector<int> k_values(const PipelineConfig& cfg, const RunOptions& opts) {
    return opts.k_override ? *opts.k_override : cfg.k_list;
}

void warn_infeasible(std::ostream& log, const std::vector<int>& ks, int w, int h, int min_polyp_px) {
    int limit = 0;
    try {
        limit = slic::max_superpixels(w, h, min_polyp_px);
    } catch (const std::invalid_argument&) {
        warn(log, "no feasible superpixel count for " + std::to_string(w) + "x" + std::to_string(h) + " frames");
        return;
    }
    for (const int k : ks)
        if (k > limit)
            warn(log, "k=" + std::to_string(k) + " exceeds the " + std::to_string(limit) +
                          " superpixels that still resolve a " + std::to_string(min_polyp_px) + "-pixel polyp");
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw HardError("missing artifact " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw HardError(path.string() + " is not valid JSON: " + e.what());
    }
}

void write_json(const fs::path& path, const json& j) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw HardError("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw HardError("failed writing " + path.string());
}

void require_hash(const std::string& found, const std::string& expected, const fs::path& artifact) {
    if (found != expected)
        throw HardError("mixed config hashes: " + artifact.string() + " was produced with config " + found +
                        ", current config is " + expected);
}

slic::LabelMap load_label_map(const fs::path& out, const std::string& frame_id, int k, const std::string& hash) {
    const fs::path png = label_png_path(out, frame_id, k);
    fs::path sidecar = png;
    sidecar.replace_extension(".json");
    if (!fs::exists(png) || !fs::exists(sidecar))
        throw HardError("missing label map " + png.string() + " for k=" + std::to_string(k) +
                        " (run `polypseg segment` first)");
    require_hash(read_json(sidecar).value("config_hash", std::string()), hash, sidecar);
    return slic::read_label_png(png);
}

// Trains on feature rows, applying the row cap and optional grid search.
lssvm::TrainedModel train_rows(const lssvm::Matrix& raw, const std::vector<lssvm::Label>& labels,
                               const std::vector<std::string>& groups, const PipelineConfig& cfg, std::ostream& log) {
    const auto pos = std::count(labels.begin(), labels.end(), lssvm::Label::Polyp);
    if (pos == 0 || static_cast<std::size_t>(pos) == labels.size())
        throw HardError("single class training set (" + std::to_string(pos) + " polyp of " +
                        std::to_string(labels.size()) + " rows)");
    const std::vector<std::size_t> keep = select_training_rows(labels, cfg.max_train_rows, cfg.seed);
    lssvm::Matrix x;
    std::vector<lssvm::Label> y;
    std::vector<std::string> g;
    for (const std::size_t i : keep) {
        x.push_row(raw.row(i));
        y.push_back(labels[i]);
        g.push_back(groups[i]);
    }
    if (keep.size() < labels.size())
        log << "training on " << keep.size() << " of " << labels.size() << " rows (max_train_rows)\n";
    lssvm::TrainConfig tc = cfg.train;
    if (cfg.grid_search) {
        const auto best = lssvm::grid_search(x, y, g, tc);
        log << "grid search: gamma=" << best.best.gamma << " sigma=" << best.best.sigma
            << " balanced accuracy=" << best.best_score << '\n';
        tc = best.best;
    }
    try {
        return lssvm::fit(x, y, tc);
    } catch (const lssvm::SingularSystem& e) {
        throw HardError(e.what());
    }
}

json model_json(const lssvm::TrainedModel& model, const std::string& hash, int k) {
    json j = lssvm::to_json(model, features::feature_order_hash());
    j["config_hash"] = hash;
    j["k"] = k;
    return j;
}

lssvm::TrainedModel load_model(const fs::path& path, const std::string& hash) {
    const json j = read_json(path);
    require_hash(j.value("config_hash", std::string()), hash, path);
    try {
        return lssvm::from_json(j, features::feature_order_hash());
    } catch (const std::exception& e) {
        throw HardError(path.string() + ": " + e.what());
    }
}

}  // namespace

int cmd_synth(const SynthRequest& req, std::ostream* logp) {
    std::ostream& log = log_of(logp);
    if (req.count < 1) throw UsageError("count must be at least 1");
    if (req.patients < 1) throw UsageError("patients must be at least 1");
    if (req.train_patients < 0 || req.train_patients > req.patients)
        throw UsageError("train patients must lie in [0, patients]");
    const auto plan = synth::plan_dataset(req.count, req.patients, req.train_patients, req.seed);
    fs::create_directories(req.out / "frames");
    fs::create_directories(req.out / "masks");
    Manifest m;
    for (const synth::FramePlan& p : plan) {
        const synth::SynthFrame f = synth::generate_frame(req.seed, p.patient, static_cast<int>(m.frames.size()),
                                                          p.polyp_count);
        ManifestEntry e;
        e.frame_id = p.frame_id;
        e.patient_id = p.patient_id;
        e.image_path = req.out / "frames" / (p.frame_id + ".png");
        e.mask_path = req.out / "masks" / (p.frame_id + ".png");
        e.split = p.train ? Split::Train : Split::Test;
        try {
            png::write_rgb(e.image_path, f.image);
            eval::write_mask_png(*e.mask_path, f.mask);
        } catch (const png::PngError& err) {
            throw HardError(err.what());
        }
        m.frames.push_back(std::move(e));
    }
    write_manifest(req.out / "manifest.json", m);
    log << "wrote " << m.frames.size() << " frames to " << req.out.string() << '\n';
    return kExitOk;
}

int cmd_segment(const Manifest& m, const PipelineConfig& cfg, const RunOptions& opts) {
    std::ostream& log = log_of(opts.log);
    const std::vector<int> ks = k_values(cfg, opts);
    const std::string hash = config_hash(cfg);
    std::size_t ok = 0;
    bool warned_k = false;
    for (const ManifestEntry& e : m.frames) {
        try {
            const RgbFrame frame = png::read_rgb(e.image_path);
            if (!warned_k) {
                warn_infeasible(log, ks, frame.width(), frame.height(), cfg.min_polyp_px);
                warned_k = true;
            }
            for (const int k : ks) {
                slic::SlicParams params = cfg.slic;
                params.k = k;
                const slic::Segmentation seg = slic::segment(frame, params);
                const fs::path png = label_png_path(opts.out, e.frame_id, k);
                fs::create_directories(png.parent_path());
                slic::write_label_png(png, seg.labels);
                fs::path sidecar = png;
                sidecar.replace_extension(".json");
                write_json(sidecar, {{"width", seg.labels.width()},
                                     {"height", seg.labels.height()},
                                     {"num_labels", seg.labels.num_labels()},
                                     {"iterations", seg.iterations},
                                     {"params",
                                      {{"k", k},
                                       {"compactness", params.compactness},
                                       {"max_iters", params.max_iters},
                                       {"min_region_frac", params.min_region_frac},
                                       {"enforce_connectivity", params.enforce_connectivity}}},
                                     {"config_hash", hash}});
            }
            ++ok;
            log << "segmented " << e.frame_id << '\n';
        } catch (const std::exception& err) {
            warn(log, "frame " + e.frame_id + ": " + err.what());
        }
    }
    if (ok == 0) throw HardError("no frame could be segmented");
    return kExitOk;
}

int cmd_features(const Manifest& m, const PipelineConfig& cfg, const RunOptions& opts) {
    std::ostream& log = log_of(opts.log);
    const std::string hash = config_hash(cfg);
    for (const int k : k_values(cfg, opts)) {
        FeatureTable table;
        table.config_hash = hash;
        for (const ManifestEntry& e : m.frames) {
            RgbFrame frame;
            std::optional<eval::Mask> mask;
            try {
                frame = png::read_rgb(e.image_path);
                if (e.mask_path) mask = eval::read_mask_png(*e.mask_path);
            } catch (const std::exception& err) {
                warn(log, "frame " + e.frame_id + ": " + err.what());
                continue;
            }
            const slic::LabelMap labels = load_label_map(opts.out, e.frame_id, k, hash);
            const features::FrameFeatures feats = features::extract_all(frame, labels, cfg.glcm_levels);
            for (const std::int32_t d : feats.dropped)
                warn(log, "frame " + e.frame_id + " superpixel " + std::to_string(d) +
                              " dropped: no interior pairs for the co-occurrence matrix");
            std::vector<lssvm::Label> truth;
            if (mask) truth = eval::truth_labels(labels, feats, *mask, cfg.tau);
            for (std::size_t i = 0; i < feats.rows.size(); ++i) {
                FeatureRow row{e.frame_id, feats.rows[i].label, std::nullopt, feats.rows[i].values};
                if (mask) row.label = truth[i];
                table.rows.push_back(std::move(row));
            }
        }
        write_feature_csv(features_csv_path(opts.out, k), table);
        log << "k=" << k << ": " << table.rows.size() << " feature rows\n";
    }
    return kExitOk;
}

int cmd_train(const Manifest& m, const PipelineConfig& cfg, const RunOptions& opts) {
    std::ostream& log = log_of(opts.log);
    check_patient_split(m);
    const std::string hash = config_hash(cfg);
    std::map<std::string, const ManifestEntry*> by_id;
    for (const ManifestEntry& e : m.frames) by_id[e.frame_id] = &e;
    for (const int k : k_values(cfg, opts)) {
        const fs::path csv = features_csv_path(opts.out, k);
        const FeatureTable table = read_feature_csv(csv);
        require_hash(table.config_hash, hash, csv);
        lssvm::Matrix x;
        std::vector<lssvm::Label> y;
        std::vector<std::string> groups;
        for (const FeatureRow& r : table.rows) {
            const auto it = by_id.find(r.frame_id);
            if (it == by_id.end() || it->second->split != Split::Train || !r.label) continue;
            x.push_row(r.values);
            y.push_back(*r.label);
            groups.push_back(it->second->patient_id);
        }
        if (y.empty()) throw HardError("k=" + std::to_string(k) + ": no labeled rows from train-split frames");
        const lssvm::TrainedModel model = train_rows(x, y, groups, cfg, log);
        write_json(model_path(opts.out, k), model_json(model, hash, k));
        log << "k=" << k << ": trained on " << model.positives << " polyp / " << model.negatives
            << " normal rows, KKT residual " << model.residual << '\n';
    }
    return kExitOk;
}

int cmd_evaluate(const Manifest& m, const PipelineConfig& cfg, const RunOptions& opts) {
    std::ostream& log = log_of(opts.log);
    check_patient_split(m);
    const std::string hash = config_hash(cfg);
    std::vector<const ManifestEntry*> tests;
    for (const ManifestEntry& e : m.frames)
        if (e.split == Split::Test) tests.push_back(&e);
    if (tests.empty()) throw HardError("manifest has no test-split frames");

    std::vector<eval::SweepReport> reports;
    std::size_t failures = 0;
    for (const int k : k_values(cfg, opts)) {
        try {
            const lssvm::TrainedModel model = load_model(opts.model_path ? *opts.model_path : model_path(opts.out, k), hash);
            const fs::path csv = features_csv_path(opts.out, k);
            const FeatureTable table = read_feature_csv(csv);
            require_hash(table.config_hash, hash, csv);
            std::map<std::string, features::FrameFeatures> feats;
            for (const FeatureRow& r : table.rows) feats[r.frame_id].rows.push_back({r.superpixel_id, r.values});

            std::vector<eval::SweepFrame> frames;
            std::vector<eval::FrameAnalysis> analyses;
            for (const ManifestEntry* e : tests) {
                slic::LabelMap labels = load_label_map(opts.out, e->frame_id, k, hash);
                std::optional<eval::Mask> mask;
                if (e->mask_path) {
                    try {
                        mask = eval::read_mask_png(*e->mask_path);
                    } catch (const std::exception& err) {
                        warn(log, "frame " + e->frame_id + ": " + err.what());
                    }
                }
                frames.push_back({e->frame_id, RgbFrame{}, std::move(mask)});
                analyses.push_back({std::move(labels), feats[e->frame_id]});
            }
            eval::SweepReport report;
            report.k = k;
            eval::score_oracle(report, frames, analyses, cfg.tau);
            eval::score_classified(report, frames, analyses, model);
            if (!report.classified) warn(log, "k=" + std::to_string(k) + ": no test frames with polyp masks; pixel report skipped");
            reports.push_back(std::move(report));
        } catch (const HardError& err) {
            ++failures;
            log << "error: k=" << k << ": " << err.what() << '\n';
        }
    }
    if (reports.empty()) throw HardError("evaluation failed for every k");
    write_reports(opts.out / "reports", "evaluate", reports, hash);
    log << "wrote " << (opts.out / "reports" / "evaluate.csv").string() << '\n';
    return failures ? kExitHard : kExitOk;
}

int cmd_sweep(const Manifest& m, const PipelineConfig& cfg, const RunOptions& opts) {
    std::ostream& log = log_of(opts.log);
    check_patient_split(m);
    const std::string hash = config_hash(cfg);
    const std::vector<int> ks = k_values(cfg, opts);

    std::vector<eval::SweepFrame> frames;
    std::vector<const ManifestEntry*> entries;
    for (const ManifestEntry& e : m.frames) {
        try {
            eval::SweepFrame f{e.frame_id, png::read_rgb(e.image_path), std::nullopt};
            if (e.mask_path) f.truth = eval::read_mask_png(*e.mask_path);
            if (f.truth && (f.truth->width() != f.image.width() || f.truth->height() != f.image.height()))
                throw HardError("mask size differs from frame size");
            frames.push_back(std::move(f));
            entries.push_back(&e);
        } catch (const std::exception& err) {
            warn(log, "frame " + e.frame_id + ": " + err.what());
        }
    }
    if (frames.empty()) throw HardError("no frame could be read");
    warn_infeasible(log, ks, frames.front().image.width(), frames.front().image.height(), cfg.min_polyp_px);

    std::optional<lssvm::TrainedModel> fixed_model;
    if (opts.model_path) fixed_model = load_model(*opts.model_path, hash);
    const bool has_train = std::any_of(entries.begin(), entries.end(), [](auto* e) { return e->split == Split::Train; });
    const bool has_test = std::any_of(entries.begin(), entries.end(), [](auto* e) { return e->split == Split::Test; });

    eval::SweepConfig sc{cfg.slic, cfg.glcm_levels, cfg.tau};
    std::vector<eval::SweepReport> reports;
    for (const int k : ks) {
        const std::vector<eval::FrameAnalysis> analyses = parallel_map<eval::FrameAnalysis>(
            frames.size(), [&](std::size_t i) { return eval::analyze_frame(frames[i].image, k, sc); });
        eval::SweepReport report;
        report.k = k;
        eval::score_oracle(report, frames, analyses, cfg.tau);

        std::optional<lssvm::TrainedModel> trained;
        if (!fixed_model && has_train && has_test) {
            lssvm::Matrix x;
            std::vector<lssvm::Label> y;
            std::vector<std::string> groups;
            for (std::size_t i = 0; i < frames.size(); ++i) {
                if (entries[i]->split != Split::Train || !frames[i].truth) continue;
                const auto truth = eval::truth_labels(analyses[i].labels, analyses[i].features, *frames[i].truth, cfg.tau);
                for (std::size_t r = 0; r < truth.size(); ++r) {
                    x.push_row(analyses[i].features.rows[r].values);
                    y.push_back(truth[r]);
                    groups.push_back(entries[i]->patient_id);
                }
            }
            trained = train_rows(x, y, groups, cfg, log);
            log << "k=" << k << ": trained on " << trained->positives << " polyp / " << trained->negatives
                << " normal rows\n";
        }
        const lssvm::TrainedModel* model = fixed_model ? &*fixed_model : trained ? &*trained : nullptr;
        if (model) {
            std::vector<eval::SweepFrame> test_frames;
            std::vector<eval::FrameAnalysis> test_analyses;
            for (std::size_t i = 0; i < frames.size(); ++i) {
                if (!fixed_model && entries[i]->split != Split::Test) continue;
                test_frames.push_back({frames[i].frame_id, RgbFrame{}, frames[i].truth});
                test_analyses.push_back(analyses[i]);
            }
            eval::score_classified(report, test_frames, test_analyses, *model);
        }
        log << "k=" << k << ": oracle sensitivity " << report.oracle.sensitivity.value_or(-1) << '\n';
        reports.push_back(std::move(report));
    }
    write_reports(opts.out / "reports", "sweep", reports, hash);
    log << "wrote " << (opts.out / "reports" / "sweep.csv").string() << '\n';
    return kExitOk;
}

}  // namespace polypseg::app
