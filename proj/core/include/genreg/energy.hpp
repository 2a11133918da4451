#pragma once

#include "genreg/convnet.hpp"
#include "genreg/forward.hpp"
#include "genreg/grid.hpp"
#include "genreg/model_config.hpp"

namespace genreg {

// The three optimization blocks.
enum class Block { image, latents, kernels };

// Objective components, each already multiplied by its weight.
struct EnergyParts {
    double fidelity = 0.0;  // lambda * data term; infinite when the hard data constraint is violated
    double tv = 0.0;        // tv_balance(nu) * smoothed TV of u - synthesis
    double sparsity = 0.0;  // sparsity_balance(nu) * normalized l1; infinite on infeasible kernels
    double coupling = 0.0;  // gamma * inter-layer coupling
    double total() const { return fidelity + tv + sparsity + coupling; }
};

// Entry-normalized smoothed total variation:
// (1/(h*w)) * sum sqrt(d1^2 + d2^2 + epsilon).
double tv_smoothed(const Grid& u, double epsilon);

// Gradient of tv_smoothed; exact adjoint chain of the discrete gradient.
Grid tv_smoothed_gradient(const Grid& u, double epsilon);

// gamma * sum over layers l >= 1 and channels of
// 0.5 * normalized_norm(mu^{l-1} - upconv(mu^l), 2)^2.
double coupling_value(const LatentStack& mu, const KernelSet& theta, const SizePlan& plan,
                      double gamma);

// Smooth data term: for denoise/deconv lambda * 0.5 * normalized_norm(Au - y, 2)^2,
// zero for the hard-constraint variants.
double smooth_fidelity(const Grid& u, const ProblemSpec& prob, double lambda);
Grid smooth_fidelity_gradient(const Grid& u, const ProblemSpec& prob, double lambda);

// H, the smooth coupling of all three blocks: smooth fidelity + weighted
// smoothed TV of (u - synthesis) + coupling.
double smooth_value(const Grid& u, const LatentStack& mu, const KernelSet& theta,
                    const ProblemSpec& prob, const ModelConfig& config, const SizePlan& plan);

Grid grad_smooth_image(const Grid& u, const LatentStack& mu, const KernelSet& theta,
                       const ProblemSpec& prob, const ModelConfig& config, const SizePlan& plan);
LatentStack grad_smooth_latents(const Grid& u, const LatentStack& mu, const KernelSet& theta,
                                const ProblemSpec& prob, const ModelConfig& config,
                                const SizePlan& plan);
KernelSet grad_smooth_kernels(const Grid& u, const LatentStack& mu, const KernelSet& theta,
                              const ProblemSpec& prob, const ModelConfig& config,
                              const SizePlan& plan);

// Full objective including the nonsmooth terms.  Hard data constraints and
// the kernel feasible set contribute +infinity when violated beyond a small
// numerical tolerance (1e-8).
double objective_value(const Grid& u, const LatentStack& mu, const KernelSet& theta,
                       const ProblemSpec& prob, const ModelConfig& config, const SizePlan& plan);
EnergyParts objective_parts(const Grid& u, const LatentStack& mu, const KernelSet& theta,
                            const ProblemSpec& prob, const ModelConfig& config,
                            const SizePlan& plan);

// Largest violation of the variant's hard data constraint at u; zero for the
// smooth variants.
double constraint_violation(const Grid& u, const ProblemSpec& prob);

// Largest violation of the kernel feasible set (ball excess and, for the
// synthesis layer, mean offset).
double kernel_violation(const KernelSet& theta);

}  // namespace genreg
