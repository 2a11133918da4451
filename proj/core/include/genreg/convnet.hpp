#pragma once

#include <array>
#include <vector>

#include "genreg/grid.hpp"
#include "genreg/model_config.hpp"
#include "genreg/rng.hpp"

namespace genreg {

// Resolved per-layer shapes of the generative chain for one image size.
//
// Layer numbering is 0-based here; layer 0 synthesizes the image.  For each
// layer, `latent` holds the stored latent dimensions M^l and `interp` the
// zero-interpolated dimensions fed to the valid convolution.  Layer 0 uses
// stride 1 and latent == interp == image + kernel - 1 so that the valid
// convolution lands exactly on the image.  Deeper layers must reproduce the
// latent above them: interp = latent[l-1] + kernel - 1 and
// latent[l] = ceil(interp / stride), which pads the trailing boundary.
struct SizePlan {
    int image_h = 0, image_w = 0;
    int kernel = 0;  // r
    int layers = 0;  // L
    std::vector<int> stride;
    std::vector<std::array<int, 2>> latent;  // [l] -> {h, w} of mu^l
    std::vector<std::array<int, 2>> interp;  // [l] -> {h, w} after zero interpolation

    // grid the layer-l upconvolution writes to: the image for l == 0, the
    // latent of layer l-1 otherwise
    std::array<int, 2> output_dims(int l) const {
        return l == 0 ? std::array<int, 2>{image_h, image_w} : latent[l - 1];
    }
};

// Latent variables mu^l_n: one grid per (layer, channel).
struct LatentStack {
    std::vector<std::vector<Grid>> layers;
};

// Filter kernels theta^l_n, all kernel x kernel.  Feasible kernels satisfy
// sum of squares <= 1 per kernel, and layer-0 kernels additionally sum to 0.
struct KernelSet {
    std::vector<std::vector<Grid>> layers;
};

// Derives the chain of latent sizes for an image; throws std::invalid_argument
// when a latent would shrink below the kernel size.
SizePlan derive_size_plan(int image_h, int image_w, const ModelConfig& config);

// zero-filled LatentStack shaped by the plan
LatentStack zero_latents(const SizePlan& plan, const std::vector<int>& channels);

// kernels drawn iid uniform from [-1/r, 1/r]; caller projects them feasible
KernelSet random_kernels(const ModelConfig& config, Rng& rng);

// Spreads mu onto a larger grid with the stride-spaced lattice carrying the
// samples and zeros elsewhere: out(s*k, s*l) = mu(k, l).  Target dims must
// satisfy s*(M-1)+1 <= target <= s*M per axis.
Grid zero_interpolate(const Grid& mu, int stride, int target_h, int target_w);

// Valid discrete convolution: out(n, m) = sum_{i,j} in(n+kh-1-i, m+kw-1-j) * ker(i, j)
// (0-based; the kernel is flipped relative to a sliding correlation).
// Output shrinks to (in_h - kh + 1) x (in_w - kw + 1).
Grid valid_convolve(const Grid& in, const Grid& kernel);

// zero_interpolate followed by valid_convolve
Grid strided_upconvolve(const Grid& mu, const Grid& kernel, int stride, int target_h, int target_w);

// Adjoint of mu -> strided_upconvolve(mu, kernel, ...) in the latent slot,
// mapping a residual on the output grid back to latent dimensions.  Exact
// under unnormalized inner products.
Grid upconv_adjoint_latent(const Grid& resid, const Grid& kernel, int stride, int latent_h,
                           int latent_w, int target_h, int target_w);

// Adjoint in the kernel slot: gradient of <strided_upconvolve(mu, theta), resid>
// with respect to theta, returned at kernel dimensions.
Grid upconv_adjoint_kernel(const Grid& resid, const Grid& mu, int stride, int kernel_h,
                           int kernel_w, int target_h, int target_w);

// Image-sized synthesis v = sum_n upconv(mu^0_n, theta^0_n); channels are
// computed independently and summed in channel order.
Grid synthesize(const LatentStack& mu, const KernelSet& theta, const SizePlan& plan);

// Places a unit delta in channel `channel` of layer `layer`, propagates it
// down the chain (all other channels zero) and synthesizes the image-sized
// response: the network's impulse atlas at that position.
Grid sample_delta(const KernelSet& theta, const SizePlan& plan, int layer, int channel, int row,
                  int col);

// --- stack arithmetic (solver plumbing) ---------------------------------

template <typename Stack>
concept GridStackLike = requires(Stack s) { s.layers; };

template <GridStackLike S>
S lincomb(double a, const S& x, double b, const S& y) {
    S out = x;
    for (std::size_t l = 0; l < x.layers.size(); ++l)
        for (std::size_t n = 0; n < x.layers[l].size(); ++n)
            out.layers[l][n] = lincomb(a, x.layers[l][n], b, y.layers[l][n]);
    return out;
}

template <GridStackLike S>
S sub(const S& x, const S& y) {
    return lincomb(1.0, x, -1.0, y);
}

template <GridStackLike S>
double dot(const S& x, const S& y) {
    double acc = 0.0;
    for (std::size_t l = 0; l < x.layers.size(); ++l)
        for (std::size_t n = 0; n < x.layers[l].size(); ++n)
            acc += dot(x.layers[l][n], y.layers[l][n]);
    return acc;
}

template <GridStackLike S>
double raw_sq_norm(const S& x) {
    double acc = 0.0;
    for (const auto& layer : x.layers)
        for (const Grid& g : layer) acc += raw_sq_norm(g);
    return acc;
}

}  // namespace genreg
