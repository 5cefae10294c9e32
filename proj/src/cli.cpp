/**
 * @file cli.cpp
 * @brief Subcommands: image, video, eval, eval-seq, expand-trimap, synth.
 */

#include <sparsematte/cli.hpp>
#include <sparsematte/error.hpp>
#include <sparsematte/metrics.hpp>
#include <sparsematte/pipeline.hpp>
#include <sparsematte/video.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

namespace sparsematte {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool truthy(const std::string& v) {
    std::string lower = v;
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    return lower == "1" || lower == "true" || lower == "yes" || lower == "on";
}

struct MattingOptions {
    bool skip_laplacian = false;
    std::size_t n_high = 40;
    double low_fraction = 1.0 / 3.0;
    int k = 12;
    double lambda = 100.0;
    double eps = 1e-7;
    double e_thr = 12.0;
    double c_thr = 4.0;
    int band_width = 40;
    int region_size = 10;
    double compactness = 10.0;
    double tol = 1e-7;
    int max_iter = 2000;
    bool rhs_as_printed = false;
    int depth = 8;

    [[nodiscard]] MattingParams params() const {
        MattingParams p;
        p.preprocess.expansion = {e_thr, c_thr};
        p.preprocess.band_width = band_width;
        p.preprocess.slic.region_size = region_size;
        p.preprocess.slic.compactness = compactness;
        p.estimate.dictionary.n_high = n_high;
        p.estimate.dictionary.low_fraction = low_fraction;
        p.graph.K = k;
        p.graph.lambda = lambda;
        p.graph.eps = eps;
        p.graph.use_laplacian = !skip_laplacian;
        p.solve.tol = tol;
        p.solve.max_iter = max_iter;
        p.solve.rhs_as_printed = rhs_as_printed;
        return p;
    }
};

void add_matting_options(CLI::App& cmd, MattingOptions& o) {
    cmd.add_flag("--skip-laplacian", o.skip_laplacian, "Drop the spatial Laplacian term");
    cmd.add_option("--n-high", o.n_high, "Samples per label for high-certainty pixels")->capture_default_str();
    cmd.add_option("--low-fraction", o.low_fraction, "Bank fraction for low-certainty pixels")
        ->capture_default_str();
    cmd.add_option("--k", o.k, "KNN neighbors")->capture_default_str()->check(CLI::PositiveNumber);
    cmd.add_option("--lambda", o.lambda, "Trimap constraint weight")->capture_default_str();
    cmd.add_option("--eps", o.eps, "Laplacian regularization")->capture_default_str();
    cmd.add_option("--e-thr", o.e_thr, "Expansion spatial threshold (pixels)")->capture_default_str();
    cmd.add_option("--c-thr", o.c_thr, "Expansion color budget ([0,255] units)")->capture_default_str();
    cmd.add_option("--band-width", o.band_width, "Sampling band width (pixels)")->capture_default_str();
    cmd.add_option("--region-size", o.region_size, "SLIC region size")->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd.add_option("--compactness", o.compactness, "SLIC compactness")->capture_default_str();
    cmd.add_option("--tol", o.tol, "CG relative residual tolerance")->capture_default_str();
    cmd.add_option("--max-iter", o.max_iter, "CG iteration cap")->capture_default_str();
    cmd.add_flag("--rhs-as-printed", o.rhs_as_printed, "Use H instead of lambda*Gamma*H on the right-hand side");
    cmd.add_option("--depth", o.depth, "Output bit depth")->capture_default_str()->check(CLI::IsMember({8, 16}));
}

std::filesystem::path sibling(const std::filesystem::path& output, const std::string& suffix) {
    return output.parent_path() / (output.stem().string() + suffix);
}

Matte probability_matte(const ProbabilityMap& pmap) {
    return Matte(pmap.extent.width, pmap.extent.height, pmap.p);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

/// Appends config entries not already given on the command line after the subcommand's tokens.
void merge_config(CLI::App& app, std::vector<std::string>& args, const std::map<std::string, std::string>& config) {
    CLI::App* sub = nullptr;
    for (const auto& a : args) {
        if (!a.empty() && a[0] != '-') {
            sub = app.get_subcommand_ptr(a).get();
            break;
        }
    }
    if (sub == nullptr) {
        return;
    }
    for (const auto& [key, value] : config) {
        const std::string flag = "--" + key;
        const bool given = std::any_of(args.begin(), args.end(), [&](const std::string& a) {
            return a == flag || a.rfind(flag + "=", 0) == 0;
        });
        if (given) {
            continue;
        }
        const CLI::Option* opt = sub->get_option_no_throw(flag);
        if (opt != nullptr && opt->get_expected_max() == 0) {
            if (truthy(value)) {
                args.push_back(flag);
            }
            continue;
        }
        args.push_back(flag);
        args.push_back(value);
    }
}

}  // namespace

std::map<std::string, std::string> read_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot read config " + path);
    }
    std::map<std::string, std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw IoError("config line without '=': " + line);
        }
        std::string key = trim(line.substr(0, eq));
        if (key.rfind("--", 0) == 0) {
            key.erase(0, 2);
        }
        out[key] = trim(line.substr(eq + 1));
    }
    return out;
}

int cli_main(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Sparse-coding alpha matting for images and image sequences", "sparsematte"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "key=value file; command-line flags take precedence");

    // image
    MattingOptions image_opts;
    std::string image_in;
    std::string trimap_in;
    std::string image_out;
    bool dump_prob = false;
    bool dump_initial = false;
    bool dump_system = false;
    auto* image_cmd = app.add_subcommand("image", "Extract the alpha matte of one image");
    image_cmd->add_option("--input", image_in, "Input image (PNG/PPM)")->required();
    image_cmd->add_option("--trimap", trimap_in, "Trimap (gray <85 B, >170 F)")->required();
    image_cmd->add_option("--output", image_out, "Output matte PNG")->required();
    image_cmd->add_flag("--dump-prob", dump_prob, "Also write <output>_prob.png");
    image_cmd->add_flag("--dump-initial", dump_initial, "Also write <output>_initial.png and <output>_gamma.png");
    image_cmd->add_flag("--dump-system", dump_system, "Also write the linear system as <output>_system.txt");
    add_matting_options(*image_cmd, image_opts);

    // video
    MattingOptions video_opts;
    std::string frames_dir;
    std::string trimaps_dir;
    std::string video_out;
    int block = 4;
    auto* video_cmd = app.add_subcommand("video", "Extract mattes of an image sequence in blocks of frames");
    video_cmd->add_option("--frames", frames_dir, "Directory of frames")->required();
    video_cmd->add_option("--trimaps", trimaps_dir, "Directory of trimaps (same count)")->required();
    video_cmd->add_option("--out", video_out, "Output directory")->required();
    video_cmd->add_option("--block", block, "Frames solved together")->capture_default_str()
        ->check(CLI::PositiveNumber);
    add_matting_options(*video_cmd, video_opts);

    // eval
    std::string pred_path;
    std::string gt_path;
    std::string eval_trimap;
    std::string metrics = "sad,mse,grad";
    bool csv = false;
    bool full_frame = false;
    auto* eval_cmd = app.add_subcommand("eval", "Compare a matte against ground truth");
    eval_cmd->add_option("--pred", pred_path, "Predicted matte")->required();
    eval_cmd->add_option("--gt", gt_path, "Ground-truth matte")->required();
    eval_cmd->add_option("--trimap", eval_trimap, "Evaluate on its Unknown pixels");
    eval_cmd->add_option("--metrics", metrics, "Comma list of sad,mse,grad")->capture_default_str();
    eval_cmd->add_flag("--full-frame", full_frame, "Ignore the trimap region");
    eval_cmd->add_flag("--csv", csv, "One-line CSV output");

    // eval-seq
    std::string pred_dir;
    std::string gt_dir;
    std::string seq_metrics = "mse,tce";
    bool seq_csv = false;
    auto* seq_cmd = app.add_subcommand("eval-seq", "Compare matte sequences (MSE, temporal coherence)");
    seq_cmd->add_option("--pred-dir", pred_dir, "Predicted mattes")->required();
    seq_cmd->add_option("--gt-dir", gt_dir, "Ground-truth mattes")->required();
    seq_cmd->add_option("--metrics", seq_metrics, "Comma list of mse,tce")->capture_default_str();
    seq_cmd->add_flag("--csv", seq_csv, "One-line CSV output");

    // expand-trimap
    std::string exp_in;
    std::string exp_trimap;
    std::string exp_out;
    double exp_e_thr = 12.0;
    double exp_c_thr = 4.0;
    auto* exp_cmd = app.add_subcommand("expand-trimap", "Grow known regions into the Unknown band");
    exp_cmd->add_option("--input", exp_in, "Input image")->required();
    exp_cmd->add_option("--trimap", exp_trimap, "Trimap")->required();
    exp_cmd->add_option("--output", exp_out, "Expanded trimap PNG")->required();
    exp_cmd->add_option("--e-thr", exp_e_thr, "Spatial threshold (pixels)")->capture_default_str();
    exp_cmd->add_option("--c-thr", exp_c_thr, "Color budget ([0,255] units)")->capture_default_str();

    // synth
    std::string fg_path;
    std::string bg_path;
    std::string alpha_path;
    std::string synth_out;
    int synth_depth = 8;
    auto* synth_cmd = app.add_subcommand("synth", "Composite I = alpha F + (1 - alpha) B");
    synth_cmd->add_option("--fg", fg_path, "Foreground image")->required();
    synth_cmd->add_option("--bg", bg_path, "Background image")->required();
    synth_cmd->add_option("--alpha", alpha_path, "Alpha matte")->required();
    synth_cmd->add_option("--out", synth_out, "Composite PNG")->required();
    synth_cmd->add_option("--depth", synth_depth, "Output bit depth")->capture_default_str()
        ->check(CLI::IsMember({8, 16}));

    std::vector<std::string> args = raw_args;
    try {
        // --config is resolved before parsing so its entries can fill in required options.
        for (std::size_t i = 0; i < args.size(); ++i) {
            std::string path;
            std::size_t erase = 0;
            if (args[i] == "--config" && i + 1 < args.size()) {
                path = args[i + 1];
                erase = 2;
            } else if (args[i].rfind("--config=", 0) == 0) {
                path = args[i].substr(9);
                erase = 1;
            }
            if (erase > 0) {
                args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
                           args.begin() + static_cast<std::ptrdiff_t>(i + erase));
                merge_config(app, args, read_config(path));
                break;
            }
        }
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kExitIo;
    }

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*image_cmd) {
            const RasterImage image = load_image(image_in);
            const Trimap trimap = load_trimap(trimap_in, image);
            const MattingParams params = image_opts.params();
            const MattingResult result = matte_image(image, trimap, params);
            save_matte(result.matte, image_out, image_opts.depth);
            const std::filesystem::path output(image_out);
            if (dump_prob && result.probability) {
                save_matte(probability_matte(*result.probability), sibling(output, "_prob.png"), image_opts.depth);
            }
            if (dump_initial) {
                save_matte(result.initial, sibling(output, "_initial.png"), image_opts.depth);
                save_matte(result.confidence, sibling(output, "_gamma.png"), image_opts.depth);
            }
            if (dump_system) {
                const InitialEstimate stage = estimate_image(image, trimap, params);
                const MatteSystem system = assemble(image, stage.expanded, stage.estimates, params.graph);
                write_system_triplets(normal_equations(system, params.solve.rhs_as_printed),
                                      sibling(output, "_system.txt"));
            }
            out << "samples " << result.samples << ", coded " << result.diagnostics.coded << ", normalized "
                << result.diagnostics.normalized << ", zero codes " << result.diagnostics.fallback
                << ", cg iterations " << result.solve.iterations << ", residual " << result.solve.relative_residual
                << '\n';
            if (!result.solve.converged) {
                err << "warning: conjugate gradient did not reach tol " << params.solve.tol << '\n';
                return kExitNoConvergence;
            }
            return kExitOk;
        }
        if (*video_cmd) {
            VideoParams params;
            params.matting = video_opts.params();
            const SequenceReport report =
                run_sequence(frames_dir, trimaps_dir, video_out, block, params, video_opts.depth);
            out << "blocks " << report.blocks.size() << ", mattes written " << report.written.size() << '\n';
            if (!report.all_converged) {
                err << "warning: conjugate gradient did not converge for every block\n";
                return kExitNoConvergence;
            }
            return kExitOk;
        }
        if (*eval_cmd) {
            const Matte pred = load_matte(pred_path);
            const Matte gt = load_matte(gt_path);
            std::optional<PixelMask> region;
            if (!eval_trimap.empty() && !full_frame) {
                const RasterImage trimap_img = load_image(eval_trimap);
                std::vector<double> gray(trimap_img.size());
                for (std::size_t i = 0; i < gray.size(); ++i) {
                    gray[i] = trimap_img[i][0];
                }
                region = PixelMask::from_trimap(trimap_from_gray(trimap_img.width(), trimap_img.height(), gray),
                                                Label::Unknown);
            }
            MetricReport report;
            report.region_pixels = region ? region->count() : pred.size();
            for (const auto& m : split_list(metrics)) {
                if (m == "sad") {
                    report.sad = sad(pred, gt, region);
                } else if (m == "mse") {
                    report.mse = mse(pred, gt, region);
                } else if (m == "grad") {
                    report.grad_err = gradient_error(pred, gt, region);
                } else {
                    err << "error: unknown metric '" << m << "'\n";
                    return kExitUsage;
                }
            }
            out << (csv ? format_report_csv(report) : format_report(report));
            return kExitOk;
        }
        if (*seq_cmd) {
            const auto pred_files = list_images(pred_dir);
            const auto gt_files = list_images(gt_dir);
            if (pred_files.size() != gt_files.size() || pred_files.empty()) {
                err << "error: " << pred_files.size() << " predicted vs " << gt_files.size()
                    << " ground-truth mattes\n";
                return kExitIo;
            }
            std::vector<Matte> pred;
            std::vector<Matte> gt;
            for (std::size_t i = 0; i < pred_files.size(); ++i) {
                pred.push_back(load_matte(pred_files[i]));
                gt.push_back(load_matte(gt_files[i]));
            }
            MetricReport report;
            report.region_pixels = pred.front().size();
            for (const auto& m : split_list(seq_metrics)) {
                if (m == "mse") {
                    double total = 0.0;
                    for (std::size_t i = 0; i < pred.size(); ++i) {
                        report.per_frame_mse.push_back(mse(pred[i], gt[i]));
                        total += report.per_frame_mse.back();
                    }
                    report.mse = total / static_cast<double>(pred.size());
                } else if (m == "tce") {
                    report.tce = tce(pred, gt);
                } else {
                    err << "error: unknown metric '" << m << "'\n";
                    return kExitUsage;
                }
            }
            out << (seq_csv ? format_report_csv(report) : format_report(report));
            return kExitOk;
        }
        if (*exp_cmd) {
            const RasterImage image = load_image(exp_in);
            const Trimap trimap = load_trimap(exp_trimap, image);
            const Trimap expanded = expand_known_regions(image, trimap, {exp_e_thr, exp_c_thr});
            save_trimap(expanded, exp_out);
            out << "unknown pixels " << trimap.count(Label::Unknown) << " -> " << expanded.count(Label::Unknown)
                << '\n';
            return kExitOk;
        }
        if (*synth_cmd) {
            const RasterImage fg = load_image(fg_path);
            const RasterImage bg = load_image(bg_path);
            const Matte alpha = load_matte(alpha_path);
            save_image(synth_composite(fg, bg, alpha), synth_out, synth_depth);
            return kExitOk;
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitIo;
    }
    return kExitUsage;
}

}  // namespace sparsematte
