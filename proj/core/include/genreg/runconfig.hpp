#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "genreg/forward.hpp"
#include "genreg/ipalm.hpp"
#include "genreg/model_config.hpp"

namespace genreg {

// Bad key, bad value or missing input in a run configuration; maps to CLI
// exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Everything one CLI invocation needs.  nu and lambda defaults depend on the
// variant and are filled in by default_run_config.
struct RunConfig {
    std::string command;  // denoise|inpaint|deconv|superres|jpeg|simulate|sample-net
    Variant variant = Variant::denoise;

    // paths
    std::filesystem::path observed;    // data image (restoration commands)
    std::filesystem::path truth;       // optional reference for metrics
    std::filesystem::path mask;        // inpaint
    std::filesystem::path kernel;      // deconv blur kernel file
    std::filesystem::path spectrum;    // jpeg sidecar
    std::filesystem::path input;       // simulate: ground truth image
    std::filesystem::path kernels_in;  // sample-net: learned kernel bank
    std::filesystem::path output_dir;  // artifact directory
    std::filesystem::path output;      // sample-net: output image

    ModelConfig model;
    AlgoParams algo;
    std::uint64_t seed = 1;
    CorruptionRecipe recipe;        // simulate
    bool spectrum_binary = false;   // simulate --variant jpeg payload encoding
    int output_bit_depth = 8;

    int sample_layer = -1;  // sample-net; -1 means deepest layer
    int sample_channel = 0;
    int sample_row = -1;  // -1 means latent-grid center
    int sample_col = -1;
};

// Defaults for a command, including the per-variant nu/lambda pairs.
RunConfig default_run_config(const std::string& command);

// Applies `file` (flat key = value lines, '#' comments) and then `overrides`
// (typically CLI flags) on top of the defaults for `command`.  Unknown keys,
// unparsable values and range violations raise ConfigError naming the key.
RunConfig parse_config(const std::string& command,
                       const std::optional<std::filesystem::path>& file,
                       const std::vector<std::pair<std::string, std::string>>& overrides);

// The key/value assignment primitive behind parse_config, exposed for tests.
void apply_config_pair(RunConfig& cfg, const std::string& key, const std::string& value);

}  // namespace genreg
