// genreg: discretized generative regularization for linear inverse problems
// on grayscale images.  One subcommand per measurement model plus a
// corruption simulator and a network impulse sampler.
#include <cstdio>
#include <exception>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "genreg/image_io.hpp"
#include "genreg/runner.hpp"

namespace {

// exit codes: 0 ok, 2 configuration, 3 file I/O, 4 solver breakdown
constexpr int kOkExit = 0;
constexpr int kConfigExit = 2;
constexpr int kIoExit = 3;
constexpr int kSolverExit = 4;

struct CommandArgs {
    std::string command;
    std::optional<std::filesystem::path> config_file;
    std::vector<std::pair<std::string, std::string>> overrides;
};

// every value-bearing flag funnels into the shared key=value override list,
// so flags, config files and library calls behave identically
void add_override_flag(CLI::App& cmd, CommandArgs& args, const std::string& flag,
                       const std::string& key, const std::string& help) {
    cmd.add_option_function<std::string>(
           flag, [&args, key](const std::string& v) { args.overrides.emplace_back(key, v); }, help)
        ->type_name("VALUE");
}

void add_common_flags(CLI::App& cmd, CommandArgs& args) {
    cmd.add_option("--config", args.config_file, "flat key = value configuration file")
        ->type_name("FILE");
    add_override_flag(cmd, args, "--seed", "seed", "random seed (default 1)");
}

void add_model_flags(CLI::App& cmd, CommandArgs& args) {
    add_override_flag(cmd, args, "--nu", "nu", "regularizer balance in (0,1)");
    add_override_flag(cmd, args, "--lambda", "lambda", "data fidelity weight");
    add_override_flag(cmd, args, "--gamma", "gamma", "layer coupling weight");
    add_override_flag(cmd, args, "--tv-epsilon", "tv_epsilon", "total-variation smoothing");
    add_override_flag(cmd, args, "--layers", "layers", "network depth");
    add_override_flag(cmd, args, "--channels", "channels", "channels per layer, comma separated");
    add_override_flag(cmd, args, "--strides", "strides", "stride per layer, comma separated");
    add_override_flag(cmd, args, "--kernel-size", "kernel_size", "square kernel edge length");
    add_override_flag(cmd, args, "--iterations", "iterations", "full-depth solver sweeps");
    add_override_flag(cmd, args, "--warmup-iterations", "warmup_iterations",
                      "sweeps per progressive depth stage");
    add_override_flag(cmd, args, "--alg-epsilon", "alg_epsilon", "step rule safety margin");
    add_override_flag(cmd, args, "--alpha", "alpha", "inertial weight for the prox point");
    add_override_flag(cmd, args, "--beta", "beta", "inertial weight for the gradient point");
    add_override_flag(cmd, args, "--initial-lipschitz", "initial_lipschitz",
                      "starting curvature estimates, one or three values");
    add_override_flag(cmd, args, "--backtrack-growth", "backtrack_growth",
                      "curvature growth factor");
    add_override_flag(cmd, args, "--max-backtracks", "max_backtracks",
                      "growth steps before giving up");
    add_override_flag(cmd, args, "--lipschitz-shrink", "lipschitz_shrink",
                      "halve carried curvature before each update (true/false)");
    add_override_flag(cmd, args, "--output-bit-depth", "output_bit_depth",
                      "PNG bit depth, 8 or 16");
}

void add_restore_flags(CLI::App& cmd, CommandArgs& args) {
    add_override_flag(cmd, args, "--observed", "observed", "degraded input image (PNG or PGM)");
    add_override_flag(cmd, args, "--truth", "truth", "optional reference image for metrics");
    add_override_flag(cmd, args, "--output-dir", "output_dir", "artifact directory");
    add_common_flags(cmd, args);
    add_model_flags(cmd, args);
}

void setup_cli(CLI::App& app, CommandArgs& args) {
    app.require_subcommand(1);

    auto* denoise = app.add_subcommand("denoise", "remove additive Gaussian noise");
    add_restore_flags(*denoise, args);

    auto* inpaint = app.add_subcommand("inpaint", "fill pixels hidden by a mask");
    add_restore_flags(*inpaint, args);
    add_override_flag(*inpaint, args, "--mask", "mask", "0/1 image marking known pixels");

    auto* deconv = app.add_subcommand("deconv", "deblur a convolved observation");
    add_restore_flags(*deconv, args);
    add_override_flag(*deconv, args, "--kernel", "kernel", "blur kernel sidecar file");
    add_override_flag(*deconv, args, "--adjoint-init", "deconv_adjoint_init",
                      "start from the adjoint image instead of the data (true/false)");

    auto* superres = app.add_subcommand("superres", "upsample a block-averaged observation");
    add_restore_flags(*superres, args);
    add_override_flag(*superres, args, "--factor", "factor", "upsampling factor");

    auto* jpeg = app.add_subcommand("jpeg", "decompress quantized block-DCT data");
    add_restore_flags(*jpeg, args);
    add_override_flag(*jpeg, args, "--spectrum", "spectrum", "quantized spectrum sidecar");

    auto* simulate = app.add_subcommand("simulate", "degrade a clean image into a test problem");
    add_override_flag(*simulate, args, "--input", "input", "clean ground-truth image");
    add_override_flag(*simulate, args, "--output-dir", "output_dir", "artifact directory");
    add_override_flag(*simulate, args, "--variant", "variant",
                      "denoise|inpaint|deconv|superres|jpeg");
    add_override_flag(*simulate, args, "--noise-std", "noise_std", "noise level relative to range");
    add_override_flag(*simulate, args, "--keep-fraction", "keep_fraction",
                      "inpaint keep probability");
    add_override_flag(*simulate, args, "--blur-half-width", "blur_half_width",
                      "blur kernel half width");
    add_override_flag(*simulate, args, "--blur-std", "blur_std", "blur standard deviation");
    add_override_flag(*simulate, args, "--blur-std-relative", "blur_std_relative",
                      "interpret --blur-std relative to the half width (true/false)");
    add_override_flag(*simulate, args, "--factor", "factor", "block averaging factor");
    add_override_flag(*simulate, args, "--jpeg-quality", "jpeg_quality", "quality in 1..100");
    add_override_flag(*simulate, args, "--spectrum-binary", "spectrum_binary",
                      "binary spectrum payload (true/false)");
    add_override_flag(*simulate, args, "--output-bit-depth", "output_bit_depth",
                      "PNG bit depth, 8 or 16");
    add_common_flags(*simulate, args);

    auto* sample = app.add_subcommand("sample-net", "image response of one latent impulse");
    add_override_flag(*sample, args, "--kernels", "kernels", "learned kernel bank file");
    add_override_flag(*sample, args, "--output", "output", "output image path");
    add_override_flag(*sample, args, "--layer", "sample_layer", "layer, 1-based (default deepest)");
    add_override_flag(*sample, args, "--channel", "sample_channel", "channel, 0-based");
    add_override_flag(*sample, args, "--row", "sample_row", "latent row (default center)");
    add_override_flag(*sample, args, "--col", "sample_col", "latent column (default center)");
    add_override_flag(*sample, args, "--output-bit-depth", "output_bit_depth",
                      "PNG bit depth, 8 or 16");
    add_common_flags(*sample, args);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"generative-prior image restoration"};
    CommandArgs args;
    setup_cli(app, args);
    try {
        app.parse(argc, argv);
        args.command = app.get_subcommands().front()->get_name();
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOkExit : kConfigExit;
    }

    try {
        const genreg::RunConfig cfg =
            genreg::parse_config(args.command, args.config_file, args.overrides);
        genreg::run_application(cfg);
        return kOkExit;
    } catch (const genreg::ConfigError& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return kConfigExit;
    } catch (const genreg::IoError& e) {
        std::fprintf(stderr, "i/o error: %s\n", e.what());
        return kIoExit;
    } catch (const genreg::SolverError& e) {
        std::fprintf(stderr, "solver error: %s\n", e.what());
        return kSolverExit;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kConfigExit;
    }
}
