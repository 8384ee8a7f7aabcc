// polypseg: batch front end for segmentation, features, LS-SVM training and evaluation.

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

#include "polypseg/app.hpp"

namespace app = polypseg::app;

namespace {

std::vector<int> parse_k_list(const std::string& text) {
    std::vector<int> ks;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
        try {
            std::size_t used = 0;
            const int k = std::stoi(item, &used);
            if (used != item.size() || k < 1) throw std::invalid_argument(item);
            ks.push_back(k);
        } catch (const std::exception&) {
            throw app::UsageError("invalid --k value '" + item + "'");
        }
    }
    if (ks.empty()) throw app::UsageError("--k needs at least one value");
    return ks;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App cli{"Superpixel polyp segmentation and classification pipeline"};
    cli.require_subcommand(1);

    std::string manifest, config, out = "out", k_text, model;
    std::uint64_t seed = 7;
    int count = 0, patients = 5, train_patients = 3;

    auto* synth = cli.add_subcommand("synth", "generate synthetic frames, masks and a manifest");
    synth->add_option("--count", count, "number of frames")->required();
    synth->add_option("--seed", seed, "generator seed");
    synth->add_option("--patients", patients, "number of synthetic patients");
    synth->add_option("--train-patients", train_patients, "patients assigned to the training split");
    synth->add_option("--out", out, "output directory")->required();

    const auto pipeline_options = [&](CLI::App* sub, bool wants_model) {
        sub->add_option("--manifest", manifest, "dataset manifest (JSON)")->required();
        sub->add_option("--config", config, "pipeline config (JSON); defaults apply when omitted");
        sub->add_option("--out", out, "artifact directory");
        sub->add_option("--k", k_text, "comma-separated superpixel counts overriding the config k_list");
        sub->add_option("--seed", seed, "seed overriding the config");
        if (wants_model) sub->add_option("--model", model, "model JSON used for every k");
    };
    auto* segment = cli.add_subcommand("segment", "SLIC label maps for every frame and k");
    auto* features = cli.add_subcommand("features", "per-superpixel feature CSV for every k");
    auto* train = cli.add_subcommand("train", "train an LS-SVM per k on train-split frames");
    auto* evaluate = cli.add_subcommand("evaluate", "pixel and frame metrics on test-split frames");
    auto* sweep = cli.add_subcommand("sweep", "segment, extract, train and score for every k in memory");
    pipeline_options(segment, false);
    pipeline_options(features, false);
    pipeline_options(train, false);
    pipeline_options(evaluate, true);
    pipeline_options(sweep, true);

    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = cli.exit(e);
        return rc == 0 ? app::kExitOk : app::kExitUsage;
    }

    try {
        if (synth->parsed()) return app::cmd_synth({count, patients, train_patients, seed, out});

        app::PipelineConfig cfg = config.empty() ? app::PipelineConfig{} : app::load_config(config);
        if (cli.get_subcommands().front()->count("--seed")) cfg.seed = seed;
        app::RunOptions opts;
        opts.out = out;
        if (!k_text.empty()) opts.k_override = parse_k_list(k_text);
        if (!model.empty()) opts.model_path = model;
        const app::Manifest m = app::load_manifest(manifest);

        if (segment->parsed()) return app::cmd_segment(m, cfg, opts);
        if (features->parsed()) return app::cmd_features(m, cfg, opts);
        if (train->parsed()) return app::cmd_train(m, cfg, opts);
        if (evaluate->parsed()) return app::cmd_evaluate(m, cfg, opts);
        return app::cmd_sweep(m, cfg, opts);
    } catch (const app::UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return app::kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return app::kExitHard;
    }
}
