#include "genreg/energy.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "genreg/parallel.hpp"

namespace genreg {

namespace {

constexpr double kFeasibilityTol = 1e-8;
constexpr double kInf = std::numeric_limits<double>::infinity();

int latent_count(const SizePlan& plan, int l) { return plan.latent[l][0] * plan.latent[l][1]; }

// Coupling residuals mu^{l-1}_n - upconv(mu^l_n) for l >= 1; resid[l][n]
// lives on the layer l-1 latent grid.  resid[0] stays empty.
std::vector<std::vector<Grid>> coupling_residuals(const LatentStack& mu, const KernelSet& theta,
                                                  const SizePlan& plan) {
    std::vector<std::vector<Grid>> resid(plan.layers);
    std::vector<std::pair<int, int>> jobs;
    for (int l = 1; l < plan.layers; ++l) {
        resid[l].resize(mu.layers[l].size());
        for (int n = 0; n < static_cast<int>(mu.layers[l].size()); ++n) jobs.emplace_back(l, n);
    }
    parallel_for(static_cast<int>(jobs.size()), [&](int k) {
        const auto [l, n] = jobs[k];
        resid[l][n] = sub(mu.layers[l - 1][n],
                          strided_upconvolve(mu.layers[l][n], theta.layers[l][n], plan.stride[l],
                                             plan.interp[l][0], plan.interp[l][1]));
    });
    return resid;
}

}  // namespace

double tv_smoothed(const Grid& u, double epsilon) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("tv_smoothed: epsilon must be positive");
    const GradientField f = discrete_gradient(u);
    double acc = 0.0;
    for (std::size_t k = 0; k < f.d1.size(); ++k)
        acc += std::sqrt(f.d1[k] * f.d1[k] + f.d2[k] * f.d2[k] + epsilon);
    return acc / static_cast<double>(u.size());
}

Grid tv_smoothed_gradient(const Grid& u, double epsilon) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("tv_smoothed_gradient: epsilon must be positive");
    GradientField f = discrete_gradient(u);
    for (std::size_t k = 0; k < f.d1.size(); ++k) {
        const double inv = 1.0 / std::sqrt(f.d1[k] * f.d1[k] + f.d2[k] * f.d2[k] + epsilon);
        f.d1[k] *= inv;
        f.d2[k] *= inv;
    }
    return scaled(gradient_adjoint(f), 1.0 / static_cast<double>(u.size()));
}

double coupling_value(const LatentStack& mu, const KernelSet& theta, const SizePlan& plan,
                      double gamma) {
    const auto resid = coupling_residuals(mu, theta, plan);
    double acc = 0.0;
    for (int l = 1; l < plan.layers; ++l)
        for (const Grid& r : resid[l]) acc += 0.5 * raw_sq_norm(r) / latent_count(plan, l - 1);
    return gamma * acc;
}

double smooth_fidelity(const Grid& u, const ProblemSpec& prob, double lambda) {
    if (prob.variant != Variant::denoise && prob.variant != Variant::deconv) return 0.0;
    const Grid r = sub(apply_forward(u, prob), prob.observed);
    return 0.5 * lambda * raw_sq_norm(r) / static_cast<double>(r.size());
}

Grid smooth_fidelity_gradient(const Grid& u, const ProblemSpec& prob, double lambda) {
    if (prob.variant != Variant::denoise && prob.variant != Variant::deconv)
        return Grid(u.height(), u.width());
    Grid r = sub(apply_forward(u, prob), prob.observed);
    return scaled(apply_adjoint(r, prob), lambda / static_cast<double>(r.size()));
}

double smooth_value(const Grid& u, const LatentStack& mu, const KernelSet& theta,
                    const ProblemSpec& prob, const ModelConfig& config, const SizePlan& plan) {
    const Grid v = synthesize(mu, theta, plan);
    return smooth_fidelity(u, prob, config.lambda) +
           tv_balance(config.nu) * tv_smoothed(sub(u, v), config.tv_epsilon) +
           coupling_value(mu, theta, plan, config.gamma);
}

Grid grad_smooth_image(const Grid& u, const LatentStack& mu, const KernelSet& theta,
                       const ProblemSpec& prob, const ModelConfig& config, const SizePlan& plan) {
    const Grid v = synthesize(mu, theta, plan);
    Grid g = smooth_fidelity_gradient(u, prob, config.lambda);
    accumulate(g, tv_smoothed_gradient(sub(u, v), config.tv_epsilon), tv_balance(config.nu));
    return g;
}

LatentStack grad_smooth_latents(const Grid& u, const LatentStack& mu, const KernelSet& theta,
                                [[maybe_unused]] const ProblemSpec& prob,
                                const ModelConfig& config, const SizePlan& plan) {
    const Grid v = synthesize(mu, theta, plan);
    const Grid tvfield = tv_smoothed_gradient(sub(u, v), config.tv_epsilon);
    const auto resid = coupling_residuals(mu, theta, plan);
    const double tvb = tv_balance(config.nu);
    const double gamma = config.gamma;

    LatentStack g;
    g.layers.resize(plan.layers);
    std::vector<std::pair<int, int>> jobs;
    for (int l = 0; l < plan.layers; ++l) {
        g.layers[l].resize(mu.layers[l].size());
        for (int n = 0; n < static_cast<int>(mu.layers[l].size()); ++n) jobs.emplace_back(l, n);
    }
    parallel_for(static_cast<int>(jobs.size()), [&](int k) {
        const auto [l, n] = jobs[k];
        Grid acc(plan.latent[l][0], plan.latent[l][1]);
        if (l == 0) {
            // d/dmu of tvb * TV(u - synth): pull the TV field back through
            // the synthesis upconvolution
            accumulate(acc,
                       upconv_adjoint_latent(tvfield, theta.layers[0][n], plan.stride[0],
                                             plan.latent[0][0], plan.latent[0][1], plan.interp[0][0],
                                             plan.interp[0][1]),
                       -tvb);
        } else {
            // mu^l inside the layer-l coupling term
            accumulate(acc,
                       upconv_adjoint_latent(resid[l][n], theta.layers[l][n], plan.stride[l],
                                             plan.latent[l][0], plan.latent[l][1], plan.interp[l][0],
                                             plan.interp[l][1]),
                       -gamma / latent_count(plan, l - 1));
        }
        if (l + 1 < plan.layers && n < static_cast<int>(resid[l + 1].size()))
            // mu^l as the target of the layer-(l+1) coupling term
            accumulate(acc, resid[l + 1][n], gamma / latent_count(plan, l));
        g.layers[l][n] = std::move(acc);
    });
    return g;
}

KernelSet grad_smooth_kernels(const Grid& u, const LatentStack& mu, const KernelSet& theta,
                              [[maybe_unused]] const ProblemSpec& prob,
                              const ModelConfig& config, const SizePlan& plan) {
    const Grid v = synthesize(mu, theta, plan);
    const Grid tvfield = tv_smoothed_gradient(sub(u, v), config.tv_epsilon);
    const auto resid = coupling_residuals(mu, theta, plan);
    const double tvb = tv_balance(config.nu);
    const int r = plan.kernel;

    KernelSet g;
    g.layers.resize(plan.layers);
    std::vector<std::pair<int, int>> jobs;
    for (int l = 0; l < plan.layers; ++l) {
        g.layers[l].resize(theta.layers[l].size());
        for (int n = 0; n < static_cast<int>(theta.layers[l].size()); ++n) jobs.emplace_back(l, n);
    }
    parallel_for(static_cast<int>(jobs.size()), [&](int k) {
        const auto [l, n] = jobs[k];
        if (l == 0) {
            g.layers[0][n] = scaled(upconv_adjoint_kernel(tvfield, mu.layers[0][n], plan.stride[0],
                                                          r, r, plan.interp[0][0], plan.interp[0][1]),
                                    -tvb);
        } else {
            g.layers[l][n] =
                scaled(upconv_adjoint_kernel(resid[l][n], mu.layers[l][n], plan.stride[l], r, r,
                                             plan.interp[l][0], plan.interp[l][1]),
                       -config.gamma / latent_count(plan, l - 1));
        }
    });
    return g;
}

double constraint_violation(const Grid& u, const ProblemSpec& prob) {
    switch (prob.variant) {
        case Variant::denoise:
        case Variant::deconv: return 0.0;
        case Variant::inpaint: {
            double worst = 0.0;
            for (int i = 0; i < u.height(); ++i)
                for (int j = 0; j < u.width(); ++j)
                    if (prob.mask(i, j) != 0.0)
                        worst = std::max(worst, std::fabs(u(i, j) - prob.observed(i, j)));
            return worst;
        }
        case Variant::superres: {
            const Grid d = sub(block_average(u, prob.factor), prob.observed);
            double worst = 0.0;
            for (double x : d.samples()) worst = std::max(worst, std::fabs(x));
            return worst;
        }
        case Variant::jpeg: {
            const Grid z = block_dct(u);
            double worst = 0.0;
            for (int i = 0; i < z.height(); ++i)
                for (int j = 0; j < z.width(); ++j) {
                    const double q = prob.spectrum.step(i, j);
                    const double mid = q * prob.spectrum.index(i, j);
                    const double lo = mid - 0.5 * q, hi = mid + 0.5 * q;
                    worst = std::max({worst, lo - z(i, j), z(i, j) - hi});
                }
            return worst;
        }
    }
    return 0.0;
}

double kernel_violation(const KernelSet& theta) {
    double worst = 0.0;
    for (std::size_t l = 0; l < theta.layers.size(); ++l)
        for (const Grid& k : theta.layers[l]) {
            worst = std::max(worst, raw_sq_norm(k) - 1.0);
            if (l == 0) {
                double s = 0.0;
                for (double x : k.samples()) s += x;
                worst = std::max(worst, std::fabs(s));
            }
        }
    return std::max(worst, 0.0);
}

EnergyParts objective_parts(const Grid& u, const LatentStack& mu, const KernelSet& theta,
                            const ProblemSpec& prob, const ModelConfig& config,
                            const SizePlan& plan) {
    EnergyParts parts;
    parts.fidelity = smooth_fidelity(u, prob, config.lambda);
    if (constraint_violation(u, prob) > kFeasibilityTol) parts.fidelity = kInf;
    parts.tv = tv_balance(config.nu) *
               tv_smoothed(sub(u, synthesize(mu, theta, plan)), config.tv_epsilon);
    const double spb = sparsity_balance(config.nu);
    for (const auto& layer : mu.layers)
        for (const Grid& m : layer) parts.sparsity += spb * normalized_norm(m, 1.0);
    if (kernel_violation(theta) > kFeasibilityTol) parts.sparsity = kInf;
    parts.coupling = coupling_value(mu, theta, plan, config.gamma);
    return parts;
}

double objective_value(const Grid& u, const LatentStack& mu, const KernelSet& theta,
                       const ProblemSpec& prob, const ModelConfig& config, const SizePlan& plan) {
    return objective_parts(u, mu, theta, prob, config, plan).total();
}

}  // namespace genreg
