#include "genreg/prox.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace genreg {

double soft_threshold(double x, double t) {
    if (x > t) return x - t;
    if (x < -t) return x + t;
    return 0.0;
}

LatentStack prox_sparsity(const LatentStack& mu, const ProxContext& ctx) {
    if (!(ctx.tau > 0.0)) throw std::invalid_argument("prox_sparsity: tau must be positive");
    LatentStack out = mu;
    for (auto& layer : out.layers)
        for (Grid& g : layer) {
            const double t = ctx.s_gen / (ctx.tau * static_cast<double>(g.size()));
            for (double& x : g.samples()) x = soft_threshold(x, t);
        }
    return out;
}

KernelSet project_kernels(const KernelSet& theta) {
    KernelSet out = theta;
    for (std::size_t l = 0; l < out.layers.size(); ++l)
        for (Grid& k : out.layers[l]) {
            if (l == 0) {
                double mean = 0.0;
                for (double x : k.samples()) mean += x;
                mean /= static_cast<double>(k.size());
                for (double& x : k.samples()) x -= mean;
            }
            const double sq = raw_sq_norm(k);
            if (sq > 1.0) {
                const double inv = 1.0 / std::sqrt(sq);
                for (double& x : k.samples()) x *= inv;
            }
        }
    return out;
}

Grid prox_data(const Grid& u, const ProblemSpec& prob) {
    switch (prob.variant) {
        case Variant::denoise:
        case Variant::deconv: return u;
        case Variant::inpaint: {
            Grid out = u;
            for (int i = 0; i < u.height(); ++i)
                for (int j = 0; j < u.width(); ++j)
                    if (prob.mask(i, j) != 0.0) out(i, j) = prob.observed(i, j);
            return out;
        }
        case Variant::superres: {
            // A A^T = I / factor^2 makes the affine projection closed-form:
            // u - replicate(A u - y).
            const Grid misfit = sub(block_average(u, prob.factor), prob.observed);
            return sub(u, block_replicate(misfit, prob.factor));
        }
        case Variant::jpeg: {
            Grid z = block_dct(u);
            for (int i = 0; i < z.height(); ++i)
                for (int j = 0; j < z.width(); ++j) {
                    const double q = prob.spectrum.step(i, j);
                    const double mid = q * prob.spectrum.index(i, j);
                    z(i, j) = std::clamp(z(i, j), mid - 0.5 * q, mid + 0.5 * q);
                }
            return block_dct_inverse(z);
        }
    }
    throw std::logic_error("prox_data: unreachable");
}

}  // namespace genreg
