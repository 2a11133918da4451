#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

namespace genreg {

// Structural and weighting parameters of the generative-regularization
// model: network depth/width/kernel size/strides, total-variation smoothing,
// latent coupling weight, the texture/sparsity balance nu and the data
// weight lambda.
struct ModelConfig {
    int layers = 3;                      // network depth L
    std::vector<int> channels{8, 8, 8};  // channels per layer, size == layers
    int kernel_size = 8;                 // square kernels, kernel_size^2 taps
    std::vector<int> strides{1, 2, 2};   // per-layer upsampling, strides[0] == 1
    double tv_epsilon = 0.05;            // smoothing inside the TV square root
    double gamma = 2000.0;               // inter-layer coupling weight
    double nu = 0.925;                   // balance in (0,1): TV vs sparsity
    double lambda = 22.5;                // data fidelity weight

    void validate() const {
        auto fail = [](const std::string& what) { throw std::invalid_argument("ModelConfig: " + what); };
        if (layers < 1) fail("layers must be >= 1");
        if (static_cast<int>(channels.size()) != layers) fail("channels must list one count per layer");
        if (std::any_of(channels.begin(), channels.end(), [](int n) { return n < 1; }))
            fail("channel counts must be >= 1");
        // the coupling pairs channel n of a layer with channel n below it
        for (std::size_t l = 1; l < channels.size(); ++l)
            if (channels[l] > channels[l - 1]) fail("channel counts must not grow with depth");
        if (kernel_size < 1) fail("kernel_size must be >= 1");
        if (static_cast<int>(strides.size()) != layers) fail("strides must list one factor per layer");
        if (strides[0] != 1) fail("first-layer stride must be 1");
        if (std::any_of(strides.begin(), strides.end(), [](int s) { return s < 1; }))
            fail("strides must be >= 1");
        if (!(tv_epsilon > 0.0)) fail("tv_epsilon must be positive");
        if (!(gamma > 0.0)) fail("gamma must be positive");
        if (!(nu > 0.0 && nu < 1.0)) fail("nu must lie strictly inside (0,1)");
        if (!(lambda > 0.0)) fail("lambda must be positive");
    }

    // config restricted to the first `depth` layers (progressive training)
    ModelConfig truncated(int depth) const {
        ModelConfig c = *this;
        c.layers = depth;
        c.channels.assign(channels.begin(), channels.begin() + depth);
        c.strides.assign(strides.begin(), strides.begin() + depth);
        return c;
    }
};

// Balance weights derived from nu: the smaller side of (nu, 1-nu) is scaled
// up to 1 so exactly one of the two weights exceeds 1.
inline double tv_balance(double nu) { return nu / std::min(nu, 1.0 - nu); }
inline double sparsity_balance(double nu) { return (1.0 - nu) / std::min(nu, 1.0 - nu); }

}  // namespace genreg
