#pragma once

#include "genreg/convnet.hpp"
#include "genreg/forward.hpp"
#include "genreg/grid.hpp"

namespace genreg {

// Parameters the latent prox needs: the block step tau (weight of the raw
// quadratic tau/2 * ||z - w||^2) and the sparsity balance weight.
struct ProxContext {
    double tau = 1.0;
    double s_gen = 1.0;  // sparsity_balance(nu)
};

// Proximal map of s_gen * sum_l normalized_norm(mu^l, 1) with quadratic
// weight tau/2 under the raw norm: entrywise soft threshold with per-layer
// threshold s_gen / (tau * entries of layer l).
LatentStack prox_sparsity(const LatentStack& mu, const ProxContext& ctx);

// Scalar building block: argmin_z t*|z| + 1/2*(z - x)^2.
double soft_threshold(double x, double t);

// Euclidean projection onto the kernel feasible set.  Synthesis-layer
// kernels (layer 0) are first recentred to zero mean, then every kernel is
// scaled onto the unit ball of summed squares.  The composition is the exact
// projection onto the intersection because recentring cannot grow the norm.
KernelSet project_kernels(const KernelSet& theta);

// Euclidean projection of the image onto the variant's hard data constraint:
//  - inpaint: overwrite the pixels the mask marks as known;
//  - superres: subtract the block-replicated block-mean misfit (the block
//    average of the output equals the data exactly);
//  - jpeg: clamp each block-DCT coefficient into its quantization interval;
//  - denoise/deconv: identity (no hard constraint).
Grid prox_data(const Grid& u, const ProblemSpec& prob);

}  // namespace genreg
