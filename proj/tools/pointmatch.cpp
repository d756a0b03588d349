// pointmatch command-line tool: matching, losses, counting metrics, synthetic
// scenes, the gradient-descent fit harness, and the loss-ablation grid.

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "pointmatch/pointmatch.hpp"

namespace pm = pointmatch;

namespace {

// ------------------------------------------------------------- plumbing

struct CommonOpts {
    std::string config_path;
    std::string out_path;        // empty means stdout
    std::string format = "csv";  // csv | json
    std::uint64_t seed = 0;
    bool seed_given = false;
};

pm::ConfigBundle load_bundle(const CommonOpts& opts) {
    pm::ConfigBundle bundle;
    if (!opts.config_path.empty()) bundle = pm::load_config(opts.config_path);
    if (opts.seed_given) bundle.fit.seed = opts.seed;
    return bundle;
}

void emit(const std::string& out_path, const std::string& text) {
    if (out_path.empty()) {
        std::fwrite(text.data(), 1, text.size(), stdout);
    } else {
        pm::write_text_file(out_path, text);
    }
}

bool want_json(const CommonOpts& opts) {
    if (opts.format == "json") return true;
    if (opts.format == "csv") return false;
    throw pm::ValidationError("unknown report format: " + opts.format);
}

// Per-image failures must name the image in the diagnostic.
template <typename Fn>
auto with_image_context(const std::string& id, Fn&& fn) {
    try {
        return fn();
    } catch (const pm::CountMismatch& e) {
        throw pm::CountMismatch("image_id '" + id + "': " + e.what());
    } catch (const pm::InvalidInput& e) {
        throw pm::InvalidInput("image_id '" + id + "': " + e.what());
    } catch (const pm::Error& e) {
        throw pm::Error("image_id '" + id + "': " + e.what());
    }
}

// Smallest integer extent that keeps every coordinate strictly inside.
int auto_extent(double max_coord) {
    if (max_coord < 0.0) return 1;
    const double c = std::ceil(max_coord);
    const int extent = static_cast<int>(c) + (c == max_coord ? 1 : 0);
    return std::max(1, extent);
}

pm::Scene scene_from_points(const pm::PointSet& points, int width, int height) {
    pm::Scene scene;
    double mx = 0.0, my = 0.0;
    for (const pm::Point& p : points.points) {
        mx = std::max(mx, p.x);
        my = std::max(my, p.y);
    }
    scene.width = width > 0 ? width : auto_extent(mx);
    scene.height = height > 0 ? height : auto_extent(my);
    scene.gt = points;
    return scene;
}

// ----------------------------------------------------------- subcommands

struct MatchOpts : CommonOpts {
    std::string gt_path;
    std::string pred_path;
};

void cmd_match(const MatchOpts& opts) {
    const pm::ConfigBundle bundle = load_bundle(opts);
    auto pairs = pm::pair_by_image_id(pm::parse_ground_truth(opts.gt_path),
                                      pm::parse_predictions(opts.pred_path));
    std::vector<pm::MatchRow> rows(pairs.size());
    pm::parallel_for(pairs.size(), [&](std::size_t i) {
        const auto& [gt, pred] = pairs[i];
        with_image_context(gt.image_id, [&] {
            const pm::CostMatrix cost =
                pm::build_cost_matrix(gt.points, pred.proposals, bundle.loss.gamma);
            pm::Matching m = pm::hungarian_match(cost);
            rows[i] = {gt.image_id, std::move(m), 0.0};
            rows[i].total_cost = pm::matching_cost(cost, rows[i].matching);
        });
    });
    emit(opts.out_path, pm::format_match_jsonl(rows));
}

void cmd_loss(const MatchOpts& opts) {
    const pm::ConfigBundle bundle = load_bundle(opts);
    auto pairs = pm::pair_by_image_id(pm::parse_ground_truth(opts.gt_path),
                                      pm::parse_predictions(opts.pred_path));
    std::vector<pm::LossRow> rows(pairs.size());
    pm::parallel_for(pairs.size(), [&](std::size_t i) {
        const auto& [gt, pred] = pairs[i];
        with_image_context(gt.image_id, [&] {
            const pm::Matching m = pm::match_points(gt.points, pred.proposals, bundle.loss);
            rows[i] = {gt.image_id, pm::ttc_total(gt.points, pred.proposals, m, bundle.loss)};
        });
    });
    emit(opts.out_path, pm::format_loss_jsonl(rows));
}

void cmd_eval(const MatchOpts& opts) {
    const pm::ConfigBundle bundle = load_bundle(opts);
    const bool json = want_json(opts);
    auto pairs = pm::pair_by_image_id(pm::parse_ground_truth(opts.gt_path),
                                      pm::parse_predictions(opts.pred_path));
    std::vector<pm::CountRecord> records(pairs.size());
    pm::parallel_for(pairs.size(), [&](std::size_t i) {
        const auto& [gt, pred] = pairs[i];
        records[i] = {gt.image_id, static_cast<double>(gt.points.size()),
                      static_cast<double>(pm::count_from_proposals(
                          pred.proposals, bundle.loss.count_threshold))};
    });
    const pm::EvalResult result = pm::evaluate_dataset(std::move(records));
    emit(opts.out_path, json ? pm::format_eval_json(result) : pm::format_eval_csv(result));
}

struct GenOpts : CommonOpts {
    int images = 1;
    int width = 256;
    int height = 256;
    int n_points = 50;
    std::string distribution = "uniform";
    int clusters = 5;
    double spread = 0.0;
    double jitter = 0.0;
    double deletion_rate = 0.0;
    std::string clean_out;
};

void cmd_gen(const GenOpts& opts) {
    if (opts.images < 1) throw pm::InvalidInput("--images must be >= 1");
    pm::Distribution dist;
    if (opts.distribution == "uniform") dist = pm::Distribution::Uniform;
    else if (opts.distribution == "clustered") dist = pm::Distribution::Clustered;
    else throw pm::ValidationError("unknown distribution: " + opts.distribution);

    const std::uint64_t master = opts.seed_given ? opts.seed : load_bundle(opts).fit.seed;
    std::vector<pm::NamedPoints> clean, noisy;
    clean.reserve(opts.images);
    noisy.reserve(opts.images);
    for (int i = 0; i < opts.images; ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "scene_%04d", i);
        const pm::Scene base = pm::generate_scene(
            opts.width, opts.height, opts.n_points, dist, pm::mix_seed(master, 3ull * i),
            {opts.clusters, opts.spread});
        pm::Scene scene = pm::inject_jitter(base, opts.jitter, pm::mix_seed(master, 3ull * i + 1));
        scene = pm::inject_deletions(scene, opts.deletion_rate, pm::mix_seed(master, 3ull * i + 2));
        clean.push_back({id, base.gt});
        noisy.push_back({id, scene.gt});
    }
    emit(opts.out_path, pm::format_ground_truth(noisy));
    if (!opts.clean_out.empty()) pm::write_text_file(opts.clean_out, pm::format_ground_truth(clean));
}

struct FitOpts : CommonOpts {
    std::string gt_path;
    std::string image_id;
    int width = 0;   // 0 means derive from the points
    int height = 0;
    std::string variant;
    int steps = -1;  // -1 means config/default
    std::string trace_out;
    std::string pred_out;
};

void cmd_fit(const FitOpts& opts) {
    pm::ConfigBundle bundle = load_bundle(opts);
    const auto records = pm::parse_ground_truth(opts.gt_path);
    if (records.empty()) throw pm::EmptyDataset("no records in " + opts.gt_path);

    const pm::NamedPoints* chosen = nullptr;
    if (opts.image_id.empty()) {
        chosen = &records.front();
    } else {
        for (const auto& r : records)
            if (r.image_id == opts.image_id) { chosen = &r; break; }
        if (!chosen) throw pm::InvalidInput("no record with image_id '" + opts.image_id + "'");
    }

    if (!opts.variant.empty()) bundle.fit.variant = pm::parse_variant(opts.variant);
    if (opts.steps >= 0) bundle.fit.steps = opts.steps;

    const pm::Scene scene = scene_from_points(chosen->points, opts.width, opts.height);
    const pm::FitTrace trace = pm::fit_points(scene, bundle.fit, bundle.loss);

    emit(opts.trace_out.empty() ? opts.out_path : opts.trace_out, pm::format_trace_csv(trace));
    if (!opts.pred_out.empty()) {
        pm::write_text_file(opts.pred_out,
                            pm::format_predictions({{chosen->image_id, trace.final_proposals}}));
    }
}

struct AblateOpts : CommonOpts {
    int scenes = 10;
    int seeds = 20;
    int n_points = 30;
    int width = 128;
    int height = 128;
    double jitter = 3.0;
    double deletion_rate = 0.1;
    std::string variants;  // comma-separated ids/names; empty means all ten
    int steps = -1;        // -1 means config steps if set, else 1500
    std::string init;      // "" means config init if set, else random
};

void cmd_ablate(const AblateOpts& opts) {
    pm::ConfigBundle bundle = load_bundle(opts);
    const bool json = want_json(opts);

    // The desk-scale grid wants shorter fits and a randomized start unless
    // the config or a flag says otherwise.
    if (opts.steps >= 0) bundle.fit.steps = opts.steps;
    else if (!bundle.keys_present.count("steps")) bundle.fit.steps = 1500;
    if (!opts.init.empty()) {
        if (opts.init == "grid") bundle.fit.init = pm::InitMode::Grid;
        else if (opts.init == "random") bundle.fit.init = pm::InitMode::Random;
        else throw pm::ValidationError("invalid value for init: '" + opts.init + "'");
    } else if (!bundle.keys_present.count("init")) {
        bundle.fit.init = pm::InitMode::Random;
    }

    std::vector<pm::LossVariant> grid;
    if (opts.variants.empty()) {
        grid = pm::default_variant_grid();
    } else {
        std::string token;
        for (char c : opts.variants + ",") {
            if (c == ',') {
                if (!token.empty()) grid.push_back(pm::parse_variant(token));
                token.clear();
            } else {
                token += c;
            }
        }
    }

    if (opts.scenes < 1) throw pm::InvalidInput("--scenes must be >= 1");
    const std::uint64_t master = bundle.fit.seed;
    std::vector<pm::Scene> suite;
    suite.reserve(opts.scenes);
    for (int i = 0; i < opts.scenes; ++i) {
        const std::uint64_t base = 1000000ull + 3ull * i;  // clear of the per-fit streams
        pm::Scene scene =
            pm::generate_scene(opts.width, opts.height, opts.n_points, pm::Distribution::Uniform,
                               pm::mix_seed(master, base));
        scene = pm::inject_jitter(scene, opts.jitter, pm::mix_seed(master, base + 1));
        scene = pm::inject_deletions(scene, opts.deletion_rate, pm::mix_seed(master, base + 2));
        suite.push_back(std::move(scene));
    }

    const auto rows = pm::run_ablation(suite, grid, opts.seeds, bundle.fit, bundle.loss);
    emit(opts.out_path, json ? pm::format_ablation_json(rows) : pm::format_ablation_csv(rows));
}

struct DensityOpts : CommonOpts {
    std::string gt_path;
    double sigma = 4.0;
    int width = 0;
    int height = 0;
};

void cmd_density(const DensityOpts& opts) {
    const bool json = want_json(opts);
    const auto records = pm::parse_ground_truth(opts.gt_path);
    std::vector<pm::DensityRow> rows(records.size());
    pm::parallel_for(records.size(), [&](std::size_t i) {
        with_image_context(records[i].image_id, [&] {
            const pm::Scene scene = scene_from_points(records[i].points, opts.width, opts.height);
            const pm::DensityMap map = pm::render_density_map(scene, opts.sigma);
            rows[i] = {records[i].image_id, records[i].points.size(), pm::integrate_density(map)};
        });
    });
    emit(opts.out_path,
         json ? pm::format_density_json(rows, opts.sigma) : pm::format_density_csv(rows, opts.sigma));
}

// --------------------------------------------------------------- wiring

void add_common(CLI::App* sub, CommonOpts& opts, bool with_format, bool with_seed) {
    sub->add_option("--config", opts.config_path, "key=value config file");
    sub->add_option("--out", opts.out_path, "write the report here instead of stdout");
    if (with_format)
        sub->add_option("--format", opts.format, "report format: csv or json")
            ->capture_default_str();
    if (with_seed)
        sub->add_option("--seed", opts.seed, "override the config seed")
            ->each([&opts](const std::string&) { opts.seed_given = true; });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"point-framework crowd counting: matching, TTC loss, metrics, fit harness"};
    app.require_subcommand(1);

    MatchOpts match_opts;
    CLI::App* match = app.add_subcommand("match", "Hungarian-match predictions to ground truth");
    match->add_option("--gt", match_opts.gt_path, "ground-truth JSONL")->required();
    match->add_option("--pred", match_opts.pred_path, "prediction JSONL")->required();
    add_common(match, match_opts, false, false);
    match->callback([&] { cmd_match(match_opts); });

    MatchOpts loss_opts;
    CLI::App* loss = app.add_subcommand("loss", "per-image TTC loss and gradients");
    loss->add_option("--gt", loss_opts.gt_path, "ground-truth JSONL")->required();
    loss->add_option("--pred", loss_opts.pred_path, "prediction JSONL")->required();
    add_common(loss, loss_opts, false, false);
    loss->callback([&] { cmd_loss(loss_opts); });

    MatchOpts eval_opts;
    CLI::App* eval = app.add_subcommand("eval", "counting MAE/MSE over a dataset");
    eval->add_option("--gt", eval_opts.gt_path, "ground-truth JSONL")->required();
    eval->add_option("--pred", eval_opts.pred_path, "prediction JSONL")->required();
    add_common(eval, eval_opts, true, false);
    eval->callback([&] { cmd_eval(eval_opts); });

    GenOpts gen_opts;
    CLI::App* gen = app.add_subcommand("gen", "generate synthetic scenes with annotation noise");
    gen->add_option("--images", gen_opts.images, "number of scenes")->capture_default_str();
    gen->add_option("--width", gen_opts.width, "scene width in pixels")->capture_default_str();
    gen->add_option("--height", gen_opts.height, "scene height in pixels")->capture_default_str();
    gen->add_option("--n-points", gen_opts.n_points, "points per scene")->capture_default_str();
    gen->add_option("--distribution", gen_opts.distribution, "uniform or clustered")
        ->capture_default_str();
    gen->add_option("--clusters", gen_opts.clusters, "cluster count (clustered mode)")
        ->capture_default_str();
    gen->add_option("--spread", gen_opts.spread, "cluster std dev; 0 picks min(w,h)/10")
        ->capture_default_str();
    gen->add_option("--jitter", gen_opts.jitter, "annotation jitter std dev in pixels")
        ->capture_default_str();
    gen->add_option("--deletion-rate", gen_opts.deletion_rate, "per-point deletion probability")
        ->capture_default_str();
    gen->add_option("--clean-out", gen_opts.clean_out, "also write the pre-noise annotations here");
    add_common(gen, gen_opts, false, true);
    gen->callback([&] { cmd_gen(gen_opts); });

    FitOpts fit_opts;
    CLI::App* fit = app.add_subcommand("fit", "fit free proposals to one scene by gradient descent");
    fit->add_option("--gt", fit_opts.gt_path, "ground-truth JSONL")->required();
    fit->add_option("--image-id", fit_opts.image_id, "record to fit (default: first)");
    fit->add_option("--width", fit_opts.width, "scene width; 0 derives it from the points")
        ->capture_default_str();
    fit->add_option("--height", fit_opts.height, "scene height; 0 derives it from the points")
        ->capture_default_str();
    fit->add_option("--variant", fit_opts.variant, "loss variant, e.g. id10 or hsl1+wce+hrc");
    fit->add_option("--steps", fit_opts.steps, "gradient steps (overrides config)");
    fit->add_option("--trace-out", fit_opts.trace_out, "write the trace CSV here instead of stdout");
    fit->add_option("--pred-out", fit_opts.pred_out, "write the fitted proposals as prediction JSONL");
    add_common(fit, fit_opts, false, true);
    fit->callback([&] { cmd_fit(fit_opts); });

    AblateOpts abl_opts;
    CLI::App* ablate = app.add_subcommand("ablate", "loss-ablation grid on a noisy synthetic suite");
    ablate->add_option("--scenes", abl_opts.scenes, "number of scenes")->capture_default_str();
    ablate->add_option("--seeds", abl_opts.seeds, "fits per (scene, variant)")->capture_default_str();
    ablate->add_option("--n-points", abl_opts.n_points, "points per scene")->capture_default_str();
    ablate->add_option("--width", abl_opts.width, "scene width")->capture_default_str();
    ablate->add_option("--height", abl_opts.height, "scene height")->capture_default_str();
    ablate->add_option("--jitter", abl_opts.jitter, "annotation jitter std dev")->capture_default_str();
    ablate->add_option("--deletion-rate", abl_opts.deletion_rate, "per-point deletion probability")
        ->capture_default_str();
    ablate->add_option("--variants", abl_opts.variants,
                       "comma-separated variants (default: the full ten-row grid)");
    ablate->add_option("--steps", abl_opts.steps, "gradient steps per fit (default 1500)");
    ablate->add_option("--init", abl_opts.init, "proposal init: grid or random (default random)");
    add_common(ablate, abl_opts, true, true);
    ablate->callback([&] { cmd_ablate(abl_opts); });

    DensityOpts den_opts;
    CLI::App* density = app.add_subcommand("density", "density-map integral vs true count per scene");
    density->add_option("--gt", den_opts.gt_path, "ground-truth JSONL")->required();
    density->add_option("--sigma", den_opts.sigma, "Gaussian kernel std dev")->capture_default_str();
    density->add_option("--width", den_opts.width, "map width; 0 derives it from the points")
        ->capture_default_str();
    density->add_option("--height", den_opts.height, "map height; 0 derives it from the points")
        ->capture_default_str();
    add_common(density, den_opts, true, false);
    density->callback([&] { cmd_density(den_opts); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "pointmatch: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
