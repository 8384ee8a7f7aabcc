// Config, manifest and artifact persistence for the batch commands.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "polypseg/app.hpp"
#include "polypseg/svg_plot.hpp"

namespace polypseg::app {

using nlohmann::json;

void PipelineConfig::validate() const {
    slic::SlicParams probe = slic;
    probe.k = 1;
    slic::validate(probe, 3, 3);
    if (glcm_levels < 2 || glcm_levels > 256) throw UsageError("glcm_levels must lie in [2, 256]");
    if (!(tau > 0 && tau <= 1)) throw UsageError("tau must lie in (0, 1]");
    lssvm::validate(train);
    if (max_train_rows < 2) throw UsageError("max_train_rows must be at least 2");
    if (k_list.empty()) throw UsageError("k_list must not be empty");
    for (const int k : k_list)
        if (k < 1) throw UsageError("every k in k_list must be positive");
    if (min_polyp_px < 1) throw UsageError("min_polyp_px must be at least 1");
}

json to_json(const PipelineConfig& cfg) {
    return {{"slic",
             {{"compactness", cfg.slic.compactness},
              {"max_iters", cfg.slic.max_iters},
              {"min_region_frac", cfg.slic.min_region_frac},
              {"enforce_connectivity", cfg.slic.enforce_connectivity}}},
            {"glcm_levels", cfg.glcm_levels},
            {"tau", cfg.tau},
            {"train",
             {{"gamma", cfg.train.gamma},
              {"sigma", cfg.train.sigma},
              {"weight_polyp", cfg.train.weight_polyp},
              {"grid_search", cfg.grid_search},
              {"max_train_rows", cfg.max_train_rows}}},
            {"k_list", cfg.k_list},
            {"seed", cfg.seed},
            {"min_polyp_px", cfg.min_polyp_px}};
}

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
    for (const auto& [key, _] : j.items())
        if (std::find_if(known.begin(), known.end(), [&](const char* k) { return key == k; }) == known.end())
            throw UsageError("unknown config key '" + where + key + "'");
}

template <typename T>
void read_key(const json& j, const char* key, T& dst) {
    if (j.contains(key)) dst = j.at(key).get<T>();
}

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ull;
    }
    return h;
}

const char* split_name(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Test: return "test";
        default: return "unassigned";
    }
}

}  // namespace

PipelineConfig config_from_json(const json& j) {
    PipelineConfig cfg;
    try {
        reject_unknown(j, {"slic", "glcm_levels", "tau", "train", "k_list", "seed", "min_polyp_px"}, "");
        if (j.contains("slic")) {
            const json& s = j["slic"];
            reject_unknown(s, {"compactness", "max_iters", "min_region_frac", "enforce_connectivity"}, "slic.");
            read_key(s, "compactness", cfg.slic.compactness);
            read_key(s, "max_iters", cfg.slic.max_iters);
            read_key(s, "min_region_frac", cfg.slic.min_region_frac);
            read_key(s, "enforce_connectivity", cfg.slic.enforce_connectivity);
        }
        read_key(j, "glcm_levels", cfg.glcm_levels);
        read_key(j, "tau", cfg.tau);
        if (j.contains("train")) {
            const json& t = j["train"];
            reject_unknown(t, {"gamma", "sigma", "weight_polyp", "grid_search", "max_train_rows"}, "train.");
            read_key(t, "gamma", cfg.train.gamma);
            read_key(t, "sigma", cfg.train.sigma);
            read_key(t, "weight_polyp", cfg.train.weight_polyp);
            read_key(t, "grid_search", cfg.grid_search);
            read_key(t, "max_train_rows", cfg.max_train_rows);
        }
        read_key(j, "k_list", cfg.k_list);
        read_key(j, "seed", cfg.seed);
        read_key(j, "min_polyp_px", cfg.min_polyp_px);
    } catch (const json::exception& e) {
        throw UsageError(std::string("invalid config: ") + e.what());
    }
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(std::string("invalid config: ") + e.what());
    }
    return cfg;
}

PipelineConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read config " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw UsageError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

std::string config_hash(const PipelineConfig& cfg) { return hex64(fnv1a(to_json(cfg).dump())); }

Manifest load_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read manifest " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw HardError("manifest " + path.string() + " is not valid JSON: " + e.what());
    }
    const fs::path base = path.parent_path();
    const auto resolve = [&](const std::string& p) {
        const fs::path q(p);
        return q.is_absolute() ? q : base / q;
    };
    Manifest m;
    std::set<std::string> ids;
    try {
        for (const json& f : j.at("frames")) {
            ManifestEntry e;
            e.frame_id = f.at("frame_id").get<std::string>();
            e.patient_id = f.value("patient_id", std::string());
            e.image_path = resolve(f.at("image").get<std::string>());
            if (f.contains("mask") && !f["mask"].is_null()) e.mask_path = resolve(f["mask"].get<std::string>());
            const std::string split = f.value("split", std::string("unassigned"));
            if (split == "train") e.split = Split::Train;
            else if (split == "test") e.split = Split::Test;
            else if (split == "unassigned") e.split = Split::Unassigned;
            else throw HardError("frame " + e.frame_id + ": unknown split '" + split + "'");
            if (e.frame_id.empty() || e.frame_id.find_first_of(",\n\r/\\") != std::string::npos)
                throw HardError("frame id '" + e.frame_id + "' is empty or contains , / \\ or newlines");
            if (!ids.insert(e.frame_id).second) throw HardError("duplicate frame id " + e.frame_id);
            if (!fs::exists(e.image_path)) throw HardError("frame " + e.frame_id + ": missing image " + e.image_path.string());
            if (e.mask_path && !fs::exists(*e.mask_path))
                throw HardError("frame " + e.frame_id + ": missing mask " + e.mask_path->string());
            m.frames.push_back(std::move(e));
        }
    } catch (const json::exception& e) {
        throw HardError("malformed manifest " + path.string() + ": " + e.what());
    }
    if (m.frames.empty()) throw UsageError("no frames");
    return m;
}

void write_manifest(const fs::path& path, const Manifest& m) {
    json frames = json::array();
    const fs::path base = path.parent_path();
    for (const ManifestEntry& e : m.frames) {
        json f = {{"frame_id", e.frame_id},
                  {"patient_id", e.patient_id},
                  {"image", e.image_path.lexically_relative(base).generic_string()},
                  {"split", split_name(e.split)}};
        f["mask"] = e.mask_path ? json(e.mask_path->lexically_relative(base).generic_string()) : json(nullptr);
        frames.push_back(std::move(f));
    }
    std::ofstream out(path);
    if (!out) throw HardError("cannot write " + path.string());
    out << json{{"frames", frames}}.dump(2) << '\n';
}

void check_patient_split(const Manifest& m) {
    std::map<std::string, std::set<Split>> seen;
    for (const ManifestEntry& e : m.frames)
        if (e.split != Split::Unassigned) seen[e.patient_id].insert(e.split);
    for (const auto& [patient, splits] : seen)
        if (splits.size() > 1) throw HardError("patient leakage: patient '" + patient + "' has frames in both train and test");
}

fs::path label_png_path(const fs::path& out, const std::string& frame_id, int k) {
    return out / "labels" / frame_id / ("k" + std::to_string(k) + ".png");
}

fs::path features_csv_path(const fs::path& out, int k) { return out / "features" / ("k" + std::to_string(k) + ".csv"); }

fs::path model_path(const fs::path& out, int k) { return out / "models" / ("k" + std::to_string(k) + ".json"); }

void write_feature_csv(const fs::path& path, const FeatureTable& table) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw HardError("cannot write " + path.string());
    out << "# config_hash=" << table.config_hash << '\n';
    out << "frame_id,superpixel_id,label";
    for (const std::string& name : features::feature_names()) out << ',' << name;
    out << '\n';
    char buf[40];
    for (const FeatureRow& r : table.rows) {
        out << r.frame_id << ',' << r.superpixel_id << ','
            << (!r.label ? "unknown" : *r.label == lssvm::Label::Polyp ? "1" : "-1");
        for (const double v : r.values) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out << ',' << buf;
        }
        out << '\n';
    }
    if (!out) throw HardError("failed writing " + path.string());
}

FeatureTable read_feature_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw HardError("missing feature table " + path.string() + " (run `polypseg features` first)");
    FeatureTable table;
    std::string line;
    bool header = false;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line[0] == '#') {
            const std::string key = "# config_hash=";
            if (line.rfind(key, 0) == 0) table.config_hash = line.substr(key.size());
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
        if (!header) {
            header = true;
            if (cells.size() != features::kFeatureCount + 3 ||
                !std::equal(features::feature_names().begin(), features::feature_names().end(), cells.begin() + 3))
                throw HardError(path.string() + ": header does not match the current feature layout");
            continue;
        }
        if (cells.size() != features::kFeatureCount + 3)
            throw HardError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(features::kFeatureCount + 3) + " columns");
        FeatureRow r;
        r.frame_id = cells[0];
        r.superpixel_id = std::stoi(cells[1]);
        if (cells[2] == "1") r.label = lssvm::Label::Polyp;
        else if (cells[2] == "-1") r.label = lssvm::Label::Normal;
        for (std::size_t i = 0; i < features::kFeatureCount; ++i) r.values[i] = std::stod(cells[i + 3]);
        table.rows.push_back(std::move(r));
    }
    if (!header) throw HardError(path.string() + ": no header row");
    return table;
}

std::vector<std::size_t> select_training_rows(const std::vector<lssvm::Label>& labels, std::size_t max_rows,
                                              std::uint64_t seed) {
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] == lssvm::Label::Polyp ? pos : neg).push_back(i);
    if (labels.size() <= max_rows) {
        std::vector<std::size_t> all(labels.size());
        std::iota(all.begin(), all.end(), 0);
        return all;
    }
    std::mt19937_64 rng(seed ^ 0x7261696e726f7773ull);
    const auto take = [&](std::vector<std::size_t>& v, std::size_t n) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng() % i]);
        v.resize(std::min(n, v.size()));
    };
    take(pos, max_rows / 2);
    take(neg, max_rows - pos.size());
    std::vector<std::size_t> out = pos;
    out.insert(out.end(), neg.begin(), neg.end());
    std::sort(out.begin(), out.end());
    return out;
}

namespace {

std::string fmt_opt(const std::optional<double>& v) {
    if (!v) return "undefined";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", *v);
    return buf;
}

void csv_row(std::ostream& out, int k, const char* granularity, const char* source, const eval::MetricsReport& r,
             const eval::MetricSpread* s) {
    out << k << ',' << granularity << ',' << source << ',' << r.counts.tp << ',' << r.counts.fp << ',' << r.counts.fn
        << ',' << r.counts.tn;
    for (const auto& v : r.values()) out << ',' << fmt_opt(v);
    for (std::size_t m = 0; m < 4; ++m) out << ',' << (s ? fmt_opt(s->stddev[m]) : std::string("undefined"));
    out << '\n';
}

}  // namespace

void write_reports(const fs::path& dir, const std::string& stem, const std::vector<eval::SweepReport>& reports,
                   const std::string& cfg_hash) {
    fs::create_directories(dir);
    {
        std::ofstream csv(dir / (stem + ".csv"), std::ios::binary);
        csv << "# config_hash=" << cfg_hash << '\n';
        csv << "k,granularity,source,tp,fp,fn,tn,sensitivity,specificity,accuracy,precision,"
               "sensitivity_std,specificity_std,accuracy_std,precision_std\n";
        for (const eval::SweepReport& r : reports) {
            csv_row(csv, r.k, "pixel", "oracle", r.oracle, &r.oracle_spread);
            if (r.classified)
                csv_row(csv, r.k, "pixel", "classified", *r.classified,
                        r.classified_spread ? &*r.classified_spread : nullptr);
            else
                csv << r.k << ",pixel,classified,skipped,,,,,,,,,,,\n";
            if (r.frame) csv_row(csv, r.k, "frame", "classified", *r.frame, nullptr);
            else csv << r.k << ",frame,classified,skipped,,,,,,,,,,,\n";
        }
        if (!csv) throw HardError("failed writing " + (dir / (stem + ".csv")).string());
    }
    {
        json j = {{"config_hash", cfg_hash}, {"reports", json::array()}};
        for (const eval::SweepReport& r : reports) j["reports"].push_back(eval::to_json(r));
        std::ofstream out(dir / (stem + ".json"), std::ios::binary);
        out << j.dump(2) << '\n';
    }

    std::vector<int> ks;
    for (const auto& r : reports) ks.push_back(r.k);
    static const std::array<const char*, 4> colors = {"#d62728", "#1f77b4", "#2ca02c", "#9467bd"};
    const auto chart = [&](bool classified) {
        std::vector<svg::Series> series;
        for (std::size_t m = 0; m < 4; ++m) {
            svg::Series s{eval::metric_names()[m], colors[m], {}, {}};
            for (const auto& r : reports) {
                if (classified) {
                    s.values.push_back(r.classified ? r.classified->values()[m] : std::nullopt);
                    s.errors.push_back(r.classified_spread ? r.classified_spread->stddev[m] : std::nullopt);
                } else {
                    s.values.push_back(r.oracle.values()[m]);
                    s.errors.push_back(std::nullopt);
                }
            }
            series.push_back(std::move(s));
        }
        return series;
    };
    {
        std::ofstream out(dir / (stem + "_oracle.svg"), std::ios::binary);
        out << svg::line_plot("Oracle superpixel segmentation vs k", ks, chart(false));
    }
    if (std::any_of(reports.begin(), reports.end(), [](const auto& r) { return r.classified.has_value(); })) {
        std::ofstream out(dir / (stem + "_classified.svg"), std::ios::binary);
        out << svg::line_plot("Classified pixel metrics vs k (error bars: per-frame std)", ks, chart(true));
    }
}

}  // namespace polypseg::app
