#include "genreg/runner.hpp"

#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "genreg/image_io.hpp"

namespace genreg {

namespace {

using nlohmann::json;

Rescaled rescale_or_midgray(const Grid& g) { return affine_rescale(g); }

json json_metric(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return nullptr;
    return v;
}

// stacks per-layer montage rows vertically, padding narrower rows
Grid montage_layers(const std::vector<Grid>& rows, double fill) {
    int w = 0, h = 0;
    for (const Grid& r : rows) {
        w = std::max(w, r.width());
        h += r.height() + 1;
    }
    Grid out = Grid::constant(h - 1, w, fill);
    int at = 0;
    for (const Grid& r : rows) {
        for (int i = 0; i < r.height(); ++i)
            for (int j = 0; j < r.width(); ++j) out(at + i, j) = r(i, j);
        at += r.height() + 1;
    }
    return out;
}

ProblemSpec load_problem(const RunConfig& cfg) {
    ProblemSpec prob;
    prob.variant = cfg.variant;
    switch (cfg.variant) {
        case Variant::denoise:
            prob.observed = load_image(cfg.observed);
            break;
        case Variant::inpaint: {
            prob.observed = load_image(cfg.observed);
            if (cfg.mask.empty()) throw ConfigError("inpaint requires a mask image");
            Grid m = load_image(cfg.mask);
            for (double& x : m.samples()) x = x >= 0.5 ? 1.0 : 0.0;  // tolerate 8-bit rounding
            prob.mask = std::move(m);
            // unknown pixels carry no data
            for (int k = 0; k < prob.observed.size(); ++k)
                prob.observed.samples()[k] *= prob.mask.samples()[k];
            break;
        }
        case Variant::deconv:
            prob.observed = load_image(cfg.observed);
            if (cfg.kernel.empty()) throw ConfigError("deconv requires a blur kernel file");
            prob.blur_kernel = load_blur_kernel(cfg.kernel);
            break;
        case Variant::superres:
            prob.observed = load_image(cfg.observed);
            prob.factor = cfg.recipe.factor;
            break;
        case Variant::jpeg: {
            if (cfg.spectrum.empty()) throw ConfigError("jpeg requires a spectrum sidecar");
            prob.spectrum = load_spectrum(cfg.spectrum);
            prob.observed = prob.spectrum.dequantized();
            break;
        }
    }
    try {
        prob.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return prob;
}

void write_metrics(const std::filesystem::path& path, const json& doc) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << doc.dump(2) << "\n";
}

void run_simulate(const RunConfig& cfg) {
    if (cfg.input.empty()) throw ConfigError("simulate requires an input ground-truth image");
    if (cfg.output_dir.empty()) throw ConfigError("simulate requires an output directory");
    const Grid truth = load_image(cfg.input);
    std::filesystem::create_directories(cfg.output_dir);
    const ProblemSpec prob = simulate_corruption(truth, cfg.recipe, cfg.seed);
    const auto dir = cfg.output_dir;
    json doc;
    doc["variant"] = variant_name(prob.variant);
    doc["seed"] = cfg.seed;
    switch (prob.variant) {
        case Variant::denoise:
        case Variant::superres:
            save_image(prob.observed, dir / "observed.png", cfg.output_bit_depth);
            break;
        case Variant::inpaint:
            save_image(prob.observed, dir / "observed.png", cfg.output_bit_depth);
            save_image(prob.mask, dir / "mask.png", 8);
            break;
        case Variant::deconv:
            save_image(prob.observed, dir / "observed.png", cfg.output_bit_depth);
            save_blur_kernel(prob.blur_kernel, dir / "kernel.txt");
            break;
        case Variant::jpeg: {
            save_spectrum(prob.spectrum, dir / "spectrum.qs", cfg.spectrum_binary);
            save_image(block_dct_inverse(prob.observed), dir / "observed.png",
                       cfg.output_bit_depth);
            break;
        }
    }
    if (prob.variant == Variant::denoise || prob.variant == Variant::deconv)
        doc["psnr_observed_vs_truth"] =
            json_metric(prob.observed.same_shape(truth) ? psnr(prob.observed, truth, 1.0)
                                                        : std::nan(""));
    write_metrics(dir / "metrics.json", doc);
}

void run_sample_net(const RunConfig& cfg) {
    if (cfg.kernels_in.empty()) throw ConfigError("sample-net requires a kernel bank file");
    if (cfg.output.empty()) throw ConfigError("sample-net requires an output image path");
    const KernelBank bank = load_kernel_bank(cfg.kernels_in);
    const SizePlan plan = derive_size_plan(bank.image_h, bank.image_w, bank.config);
    const int layer = cfg.sample_layer < 0 ? plan.layers : cfg.sample_layer;
    if (layer < 1 || layer > plan.layers)
        throw ConfigError("sample_layer outside [1, " + std::to_string(plan.layers) + "]");
    const int l0 = layer - 1;
    if (cfg.sample_channel < 0 ||
        cfg.sample_channel >= static_cast<int>(bank.theta.layers[l0].size()))
        throw ConfigError("sample_channel outside the layer's channel range");
    const int row = cfg.sample_row < 0 ? plan.latent[l0][0] / 2 : cfg.sample_row;
    const int col = cfg.sample_col < 0 ? plan.latent[l0][1] / 2 : cfg.sample_col;
    if (row >= plan.latent[l0][0] || col >= plan.latent[l0][1])
        throw ConfigError("sample position outside the latent grid");
    const Grid response = sample_delta(bank.theta, plan, l0, cfg.sample_channel, row, col);
    const Rescaled shown = rescale_or_midgray(response);
    if (const auto parent = cfg.output.parent_path(); !parent.empty())
        std::filesystem::create_directories(parent);
    save_image(shown.image, cfg.output, cfg.output_bit_depth);
    std::printf("sample-net: layer %d channel %d at (%d,%d), response range [%g, %g]\n", layer,
                cfg.sample_channel, row, col, shown.lo, shown.hi);
}

void run_restore(const RunConfig& cfg) {
    if (cfg.observed.empty() && cfg.variant != Variant::jpeg)
        throw ConfigError(cfg.command + " requires an observed data image");
    if (cfg.output_dir.empty()) throw ConfigError(cfg.command + " requires an output directory");
    const ProblemSpec prob = load_problem(cfg);
    std::filesystem::create_directories(cfg.output_dir);
    const auto dir = cfg.output_dir;

    const auto t0 = std::chrono::steady_clock::now();
    const SolveResult res = solve(prob, cfg.model, cfg.algo, cfg.seed);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const SizePlan plan = derive_size_plan(prob.image_h(), prob.image_w(), cfg.model);
    const Grid v = synthesize(res.mu, res.theta, plan);
    const Grid residual = sub(res.u, v);

    save_image(res.u, dir / "recon.png", cfg.output_bit_depth);
    save_image(v, dir / "generative.png", cfg.output_bit_depth);
    const Rescaled shown_res = rescale_or_midgray(residual);
    save_image(shown_res.image, dir / "residual.png", cfg.output_bit_depth);
    write_trace_csv(res.trace, dir / "trace.csv");
    save_kernel_bank(res.theta, cfg.model, prob.image_h(), prob.image_w(), dir / "kernels.txt");

    json ranges;
    ranges["residual"] = {shown_res.lo, shown_res.hi};

    // kernel montage: one row per layer
    {
        std::vector<Grid> rows;
        double lo = 0, hi = 0;
        bool first = true;
        for (const auto& layer : res.theta.layers) {
            for (const Grid& k : layer) {
                for (double x : k.samples()) {
                    lo = first ? x : std::min(lo, x);
                    hi = first ? x : std::max(hi, x);
                    first = false;
                }
            }
        }
        const double span = hi > lo ? hi - lo : 1.0;
        for (const auto& layer : res.theta.layers) {
            std::vector<Grid> tiles;
            for (const Grid& k : layer) {
                Grid t = k;
                for (double& x : t.samples()) x = (x - lo) / span;
                tiles.push_back(std::move(t));
            }
            rows.push_back(montage_row(tiles));
        }
        save_image(montage_layers(rows, 0.5), dir / "kernels.png", cfg.output_bit_depth);
        ranges["kernels"] = {lo, hi};
    }

    // per-layer latent montages
    for (int l = 0; l < plan.layers; ++l) {
        std::vector<Grid> tiles;
        double lo = 0, hi = 0;
        bool first = true;
        for (const Grid& m : res.mu.layers[l])
            for (double x : m.samples()) {
                lo = first ? x : std::min(lo, x);
                hi = first ? x : std::max(hi, x);
                first = false;
            }
        const double span = hi > lo ? hi - lo : 1.0;
        for (const Grid& m : res.mu.layers[l]) {
            Grid t = m;
            for (double& x : t.samples()) x = (x - lo) / span;
            tiles.push_back(std::move(t));
        }
        const std::string name = "latents_l" + std::to_string(l + 1) + ".png";
        save_image(montage_row(tiles), dir / name, cfg.output_bit_depth);
        ranges["latents_l" + std::to_string(l + 1)] = {lo, hi};
    }

    json doc;
    doc["variant"] = variant_name(cfg.variant);
    doc["seed"] = cfg.seed;
    doc["iterations"] = static_cast<long long>(res.trace.size());
    doc["wall_time_seconds"] = wall;
    doc["final_objective"] = res.trace.empty() ? json(nullptr) : json_metric(res.trace.back().objective);
    doc["display_ranges"] = ranges;
    if (!cfg.truth.empty()) {
        const Grid truth = load_image(cfg.truth);
        if (truth.height() != res.u.height() || truth.width() != res.u.width())
            throw ConfigError("truth image shape does not match the reconstruction");
        doc["psnr"] = json_metric(psnr(res.u, truth, 1.0));
        doc["ssim"] = json_metric(ssim(res.u, truth, 1.0));
        if (prob.observed.same_shape(truth) &&
            (cfg.variant == Variant::denoise || cfg.variant == Variant::deconv))
            doc["psnr_observed"] = json_metric(psnr(prob.observed, truth, 1.0));
    } else {
        doc["psnr"] = nullptr;
        doc["ssim"] = nullptr;
    }
    write_metrics(dir / "metrics.json", doc);
}

}  // namespace

Rescaled affine_rescale(const Grid& g) {
    double lo = g.samples()[0], hi = lo;
    for (double x : g.samples()) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    Rescaled out{Grid(g.height(), g.width()), lo, hi};
    if (hi > lo) {
        const double inv = 1.0 / (hi - lo);
        for (int k = 0; k < g.size(); ++k) out.image.samples()[k] = (g.samples()[k] - lo) * inv;
    } else {
        for (double& x : out.image.samples()) x = 0.5;
    }
    return out;
}

Grid montage_row(const std::vector<Grid>& tiles, double separator_value) {
    if (tiles.empty()) throw std::invalid_argument("montage_row: no tiles");
    const int h = tiles[0].height(), w = tiles[0].width();
    for (const Grid& t : tiles)
        if (t.height() != h || t.width() != w)
            throw std::invalid_argument("montage_row: tiles must share a shape");
    const int n = static_cast<int>(tiles.size());
    Grid out = Grid::constant(h, n * w + (n - 1), separator_value);
    for (int t = 0; t < n; ++t)
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j) out(i, t * (w + 1) + j) = tiles[t](i, j);
    return out;
}

void save_kernel_bank(const KernelSet& theta, const ModelConfig& config, int image_h, int image_w,
                      const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.precision(17);
    out << "GENREG-KERNELS 1\n";
    out << "image " << image_h << " " << image_w << "\n";
    out << "layers " << config.layers << "\n";
    out << "kernel_size " << config.kernel_size << "\n";
    out << "strides";
    for (int s : config.strides) out << " " << s;
    out << "\nchannels";
    for (int n : config.channels) out << " " << n;
    out << "\nnu " << config.nu << "\nlambda " << config.lambda << "\ngamma " << config.gamma
        << "\ntv_epsilon " << config.tv_epsilon << "\n";
    for (int l = 0; l < config.layers; ++l)
        for (int n = 0; n < static_cast<int>(theta.layers[l].size()); ++n) {
            out << "kernel " << l + 1 << " " << n + 1 << "\n";
            const Grid& k = theta.layers[l][n];
            for (int i = 0; i < k.height(); ++i) {
                for (int j = 0; j < k.width(); ++j) out << (j ? " " : "") << k(i, j);
                out << "\n";
            }
        }
    if (!out) throw IoError("write failed for " + path.string());
}

KernelBank load_kernel_bank(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != "GENREG-KERNELS" || version != 1)
        throw IoError(path.string() + ": not a kernel bank file");
    KernelBank bank;
    std::string key;
    in >> key >> bank.image_h >> bank.image_w;
    if (key != "image") throw IoError(path.string() + ": malformed header");
    in >> key >> bank.config.layers;
    if (key != "layers") throw IoError(path.string() + ": malformed header");
    in >> key >> bank.config.kernel_size;
    if (key != "kernel_size") throw IoError(path.string() + ": malformed header");
    in >> key;
    bank.config.strides.assign(bank.config.layers, 1);
    for (int& s : bank.config.strides) in >> s;
    in >> key;
    bank.config.channels.assign(bank.config.layers, 1);
    for (int& n : bank.config.channels) in >> n;
    in >> key >> bank.config.nu;
    in >> key >> bank.config.lambda;
    in >> key >> bank.config.gamma;
    in >> key >> bank.config.tv_epsilon;
    if (!in) throw IoError(path.string() + ": malformed header");
    bank.theta.layers.resize(bank.config.layers);
    const int r = bank.config.kernel_size;
    for (int l = 0; l < bank.config.layers; ++l)
        bank.theta.layers[l].assign(bank.config.channels[l], Grid(r, r));
    int seen = 0;
    while (in >> key) {
        if (key != "kernel") throw IoError(path.string() + ": expected kernel record");
        int l = 0, n = 0;
        in >> l >> n;
        if (l < 1 || l > bank.config.layers || n < 1 || n > bank.config.channels[l - 1])
            throw IoError(path.string() + ": kernel index out of range");
        Grid& k = bank.theta.layers[l - 1][n - 1];
        for (double& x : k.samples()) in >> x;
        if (!in) throw IoError(path.string() + ": truncated kernel record");
        ++seen;
    }
    int expected = 0;
    for (int n : bank.config.channels) expected += n;
    if (seen != expected) throw IoError(path.string() + ": missing kernel records");
    return bank;
}

void save_blur_kernel(const Grid& kernel, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.precision(17);
    out << "BLUR-KERNEL " << kernel.height() << "\n";
    for (int i = 0; i < kernel.height(); ++i) {
        for (int j = 0; j < kernel.width(); ++j) out << (j ? " " : "") << kernel(i, j);
        out << "\n";
    }
    if (!out) throw IoError("write failed for " + path.string());
}

Grid load_blur_kernel(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string magic;
    int size = 0;
    in >> magic >> size;
    if (magic != "BLUR-KERNEL" || size < 1 || size % 2 == 0)
        throw IoError(path.string() + ": not a blur kernel file");
    Grid k(size, size);
    for (double& x : k.samples()) in >> x;
    if (!in) throw IoError(path.string() + ": truncated kernel");
    return k;
}

void write_trace_csv(const std::vector<TraceRow>& trace, const std::filesystem::path& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    std::fputs("iter,stage,objective,fidelity_term,tv_term,l1_term,coupling_term\n", f);
    for (const TraceRow& row : trace)
        std::fprintf(f, "%d,%d,%.12g,%.12g,%.12g,%.12g,%.12g\n", row.iter, row.stage, row.objective,
                     row.fidelity, row.tv, row.sparsity, row.coupling);
    if (std::fclose(f) != 0) throw IoError("write failed for " + path.string());
}

void run_application(const RunConfig& cfg) {
    if (cfg.command == "simulate")
        run_simulate(cfg);
    else if (cfg.command == "sample-net")
        run_sample_net(cfg);
    else
        run_restore(cfg);
}

}  // namespace genreg
