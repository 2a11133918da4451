#include "genreg/runconfig.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace genreg {

namespace {

std::string trimmed(const std::string& s) {
    auto b = s.begin(), e = s.end();
    while (b != e && std::isspace(static_cast<unsigned char>(*b))) ++b;
    while (e != b && std::isspace(static_cast<unsigned char>(*(e - 1)))) --e;
    return std::string(b, e);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& why) {
    throw ConfigError("config key '" + key + "': " + why);
}

double parse_real(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) bad_value(key, "expected a real number, got '" + value + "'");
        return v;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        bad_value(key, "expected a real number, got '" + value + "'");
    }
}

long long parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(value, &used);
        if (used != value.size()) bad_value(key, "expected an integer, got '" + value + "'");
        return v;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        bad_value(key, "expected an integer, got '" + value + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "on") return true;
    if (value == "false" || value == "0" || value == "off") return false;
    bad_value(key, "expected true/false, got '" + value + "'");
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
    std::vector<int> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trimmed(item);
        if (item.empty()) bad_value(key, "empty list entry");
        out.push_back(static_cast<int>(parse_int(key, item)));
    }
    if (out.empty()) bad_value(key, "expected a comma-separated integer list");
    return out;
}

double parse_positive(const std::string& key, const std::string& value) {
    const double v = parse_real(key, value);
    if (!(v > 0.0)) bad_value(key, "must be positive");
    return v;
}

int parse_int_min(const std::string& key, const std::string& value, int lo) {
    const long long v = parse_int(key, value);
    if (v < lo) bad_value(key, "must be >= " + std::to_string(lo));
    return static_cast<int>(v);
}

}  // namespace

RunConfig default_run_config(const std::string& command) {
    RunConfig cfg;
    cfg.command = command;
    if (command == "simulate" || command == "sample-net") {
        cfg.variant = Variant::denoise;  // simulate overrides via the variant key
        return cfg;
    }
    cfg.variant = variant_from_name(command);
    cfg.recipe = default_recipe(cfg.variant);
    // per-variant nu / lambda defaults
    switch (cfg.variant) {
        case Variant::denoise:
            cfg.model.nu = 0.925;
            cfg.model.lambda = 22.5;
            break;
        case Variant::deconv:
            cfg.model.nu = 0.925;
            cfg.model.lambda = 600.0;
            break;
        case Variant::inpaint:
            cfg.model.nu = 0.975;
            cfg.model.lambda = 1.0;  // data term is a hard constraint
            break;
        case Variant::superres:
            cfg.model.nu = 0.975;
            cfg.model.lambda = 1.0;
            break;
        case Variant::jpeg:
            cfg.model.nu = 0.875;
            cfg.model.lambda = 1.0;
            break;
    }
    return cfg;
}

void apply_config_pair(RunConfig& cfg, const std::string& key, const std::string& value) {
    // model
    if (key == "nu") {
        const double v = parse_real(key, value);
        if (!(v > 0.0 && v < 1.0)) bad_value(key, "must lie strictly inside (0,1)");
        cfg.model.nu = v;
    } else if (key == "lambda") {
        cfg.model.lambda = parse_positive(key, value);
    } else if (key == "gamma") {
        cfg.model.gamma = parse_positive(key, value);
    } else if (key == "tv_epsilon") {
        cfg.model.tv_epsilon = parse_positive(key, value);
    } else if (key == "layers") {
        const int L = parse_int_min(key, value, 1);
        cfg.model.layers = L;
        // resize channel/stride lists, repeating the trailing entry
        cfg.model.channels.resize(L, cfg.model.channels.empty() ? 8 : cfg.model.channels.back());
        cfg.model.strides.resize(L, cfg.model.strides.size() <= 1 ? 2 : cfg.model.strides.back());
    } else if (key == "channels") {
        auto v = parse_int_list(key, value);
        if (static_cast<int>(v.size()) == 1) v.assign(cfg.model.layers, v[0]);
        if (static_cast<int>(v.size()) != cfg.model.layers)
            bad_value(key, "expected 1 or layers entries");
        cfg.model.channels = v;
    } else if (key == "strides") {
        auto v = parse_int_list(key, value);
        if (static_cast<int>(v.size()) != cfg.model.layers) bad_value(key, "expected layers entries");
        cfg.model.strides = v;
    } else if (key == "kernel_size") {
        cfg.model.kernel_size = parse_int_min(key, value, 1);
    }
    // algorithm
    else if (key == "alg_epsilon") {
        cfg.algo.epsilon = parse_positive(key, value);
    } else if (key == "alpha") {
        const double v = parse_real(key, value);
        if (!(v >= 0.0 && v < 1.0)) bad_value(key, "must lie in [0,1)");
        cfg.algo.alpha.fill(v);
    } else if (key == "beta") {
        const double v = parse_real(key, value);
        if (!(v >= 0.0 && v <= 1.0)) bad_value(key, "must lie in [0,1]");
        cfg.algo.beta.fill(v);
    } else if (key == "iterations") {
        cfg.algo.iterations = parse_int_min(key, value, 0);
    } else if (key == "warmup_iterations") {
        cfg.algo.warmup_iterations = parse_int_min(key, value, 0);
    } else if (key == "initial_lipschitz") {
        cfg.algo.initial_lipschitz.fill(parse_positive(key, value));
    } else if (key == "backtrack_growth") {
        const double v = parse_real(key, value);
        if (!(v > 1.0)) bad_value(key, "must exceed 1");
        cfg.algo.backtrack_growth = v;
    } else if (key == "max_backtracks") {
        cfg.algo.max_backtracks = parse_int_min(key, value, 1);
    } else if (key == "lipschitz_shrink") {
        cfg.algo.shrink_lipschitz = parse_bool(key, value);
    } else if (key == "deconv_adjoint_init") {
        cfg.algo.deconv_adjoint_init = parse_bool(key, value);
    } else if (key == "seed") {
        cfg.seed = static_cast<std::uint64_t>(parse_int(key, value));
    }
    // corruption recipe (simulate)
    else if (key == "variant") {
        try {
            cfg.recipe.variant = variant_from_name(value);
        } catch (const std::exception&) {
            bad_value(key, "unknown variant '" + value + "'");
        }
        if (cfg.command == "simulate") {
            const CorruptionRecipe fresh = default_recipe(cfg.recipe.variant);
            cfg.recipe.noise_std = fresh.noise_std;
            cfg.variant = cfg.recipe.variant;
        }
    } else if (key == "keep_fraction") {
        const double v = parse_real(key, value);
        if (!(v > 0.0 && v <= 1.0)) bad_value(key, "must lie in (0,1]");
        cfg.recipe.keep_fraction = v;
    } else if (key == "noise_std") {
        const double v = parse_real(key, value);
        if (v < 0.0) bad_value(key, "must be >= 0");
        cfg.recipe.noise_std = v;
    } else if (key == "blur_half_width") {
        cfg.recipe.blur_half_width = parse_int_min(key, value, 1);
    } else if (key == "blur_std") {
        cfg.recipe.blur_std = parse_positive(key, value);
    } else if (key == "blur_std_relative") {
        cfg.recipe.blur_std_relative = parse_bool(key, value);
    } else if (key == "factor") {
        cfg.recipe.factor = parse_int_min(key, value, 1);
    } else if (key == "jpeg_quality") {
        const int v = parse_int_min(key, value, 1);
        if (v > 100) bad_value(key, "must lie in [1,100]");
        cfg.recipe.jpeg_quality = v;
    } else if (key == "spectrum_binary") {
        cfg.spectrum_binary = parse_bool(key, value);
    } else if (key == "output_bit_depth") {
        const int v = parse_int_min(key, value, 8);
        if (v != 8 && v != 16) bad_value(key, "must be 8 or 16");
        cfg.output_bit_depth = v;
    }
    // paths
    else if (key == "observed") {
        cfg.observed = value;
    } else if (key == "truth") {
        cfg.truth = value;
    } else if (key == "mask") {
        cfg.mask = value;
    } else if (key == "kernel") {
        cfg.kernel = value;
    } else if (key == "spectrum") {
        cfg.spectrum = value;
    } else if (key == "input") {
        cfg.input = value;
    } else if (key == "kernels") {
        cfg.kernels_in = value;
    } else if (key == "output_dir") {
        cfg.output_dir = value;
    } else if (key == "output") {
        cfg.output = value;
    }
    // sample-net
    else if (key == "sample_layer") {
        cfg.sample_layer = parse_int_min(key, value, 1);
    } else if (key == "sample_channel") {
        cfg.sample_channel = parse_int_min(key, value, 0);
    } else if (key == "sample_row") {
        cfg.sample_row = parse_int_min(key, value, 0);
    } else if (key == "sample_col") {
        cfg.sample_col = parse_int_min(key, value, 0);
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

RunConfig parse_config(const std::string& command,
                       const std::optional<std::filesystem::path>& file,
                       const std::vector<std::pair<std::string, std::string>>& overrides) {
    RunConfig cfg = default_run_config(command);
    if (file) {
        std::ifstream in(*file);
        if (!in) throw ConfigError("cannot open config file " + file->string());
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            line = trimmed(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError("config file " + file->string() + ":" + std::to_string(lineno) +
                                  ": expected key = value");
            apply_config_pair(cfg, trimmed(line.substr(0, eq)), trimmed(line.substr(eq + 1)));
        }
    }
    for (const auto& [key, value] : overrides) apply_config_pair(cfg, key, value);
    try {
        cfg.model.validate();
        cfg.algo.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

}  // namespace genreg
