#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "genreg/energy.hpp"
#include "genreg/prox.hpp"

namespace genreg {

// Numerical breakdown (backtracking exhausted, non-finite objective).
struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Inertial proximal alternating linearized minimization parameters.  Blocks
// are ordered image, latents, kernels.
struct AlgoParams {
    double epsilon = 0.03;  // safety margin in the step rule, > 0
    std::array<double, 3> alpha{0.7, 0.7, 0.7};  // extrapolation for the prox point
    std::array<double, 3> beta{0.7, 0.7, 0.7};   // extrapolation for the gradient point
    int iterations = 8000;                       // full-depth sweeps
    int warmup_iterations = 200;                 // sweeps per intermediate depth stage
    std::array<double, 3> initial_lipschitz{1.0, 1.0, 1.0};
    double backtrack_growth = 2.0;
    int max_backtracks = 60;
    bool shrink_lipschitz = true;  // halve the carried estimate before each backtrack
    bool deconv_adjoint_init = false;  // start deconvolution from A^T y instead of y

    void validate() const {
        auto fail = [](const char* what) { throw std::invalid_argument(std::string("AlgoParams: ") + what); };
        if (!(epsilon > 0.0)) fail("epsilon must be positive");
        for (double a : alpha)
            if (!(a >= 0.0 && a < 1.0 - epsilon)) fail("alpha must lie in [0, 1 - epsilon)");
        for (double b : beta)
            if (!(b >= 0.0 && b <= 1.0)) fail("beta must lie in [0, 1]");
        if (iterations < 0) fail("iterations must be >= 0");
        if (warmup_iterations < 0) fail("warmup_iterations must be >= 0");
        for (double l : initial_lipschitz)
            if (!(l > 0.0)) fail("initial_lipschitz must be positive");
        if (!(backtrack_growth > 1.0)) fail("backtrack_growth must exceed 1");
        if (max_backtracks < 1) fail("max_backtracks must be >= 1");
    }
};

// One objective evaluation per sweep; stage is the network depth active when
// the row was recorded.
struct TraceRow {
    int iter = 0;
    int stage = 0;
    double objective = 0.0;
    double fidelity = 0.0;
    double tv = 0.0;
    double sparsity = 0.0;
    double coupling = 0.0;
};

// Full solver state; snapshots are plain values, so copying one hands an
// observer an immutable view.
struct SolverState {
    ModelConfig config;        // full-depth target
    ModelConfig stage_config;  // truncated to the active depth
    SizePlan plan;             // plan for stage_config
    Grid u, u_prev;
    LatentStack mu, mu_prev;
    KernelSet theta, theta_prev;
    std::array<double, 3> lipschitz{1.0, 1.0, 1.0};
    int iteration = 0;  // global sweep counter, warmups included
    int stage = 1;      // active depth
    std::vector<TraceRow> trace;
};

struct SolveResult {
    Grid u;
    LatentStack mu;
    KernelSet theta;
    std::vector<TraceRow> trace;
};

// Called after each block update; receives the state by reference for the
// duration of the call.
using Observer = std::function<void(const SolverState&, Block)>;

// x + weight * (x - x_prev)
template <typename V>
V extrapolate(const V& x, const V& x_prev, double weight) {
    return lincomb(1.0 + weight, x, -weight, x_prev);
}

// Step weight for one block: delta = (alpha + 2*beta) / (2*(1 - epsilon - alpha)) * lips
// and tau = ((1 + epsilon)*delta + (1 + beta)*lips) / (2 - alpha).  Requires
// alpha < 1 - epsilon.
double step_size(double alpha, double beta, double epsilon, double lips);

template <typename V>
struct BacktrackResult {
    V next;
    double lipschitz = 0.0;
    double tau = 0.0;
    int growth_steps = 0;
};

// One inertial prox-gradient block update with backtracking.  Starting from
// lips_start, the local constant grows by `growth` until the candidate
// x+ = prox(y - grad(z)/tau, tau) satisfies, in raw norms,
//   descent:   H(x+) <= H(x) + <x+ - x, grad(x)> + lips/2 * ||x+ - x||^2
//   lipschitz: ||grad(z) - grad(x)|| <= lips * ||z - x||
// (each with a 1e-12 relative slack for round-off).  Throws SolverError when
// max_steps growth steps cannot satisfy both.
template <typename V, typename HFn, typename GradFn, typename ProxFn>
BacktrackResult<V> backtrack_block(const V& x, const V& x_prev, double alpha, double beta,
                                   double epsilon, double lips_start, double growth, int max_steps,
                                   const HFn& H, const GradFn& grad, const ProxFn& prox) {
    const V y = extrapolate(x, x_prev, alpha);
    const V z = extrapolate(x, x_prev, beta);
    const V gz = grad(z);
    const double z_dist_sq = raw_sq_norm(sub(z, x));
    const bool fresh = z_dist_sq == 0.0;
    const V gx = fresh ? gz : grad(x);
    const double h_x = H(x);
    const double lip_lhs = fresh ? 0.0 : std::sqrt(raw_sq_norm(sub(gz, gx)));
    const double lip_rhs = std::sqrt(z_dist_sq);

    double lips = lips_start;
    for (int k = 0; k < max_steps; ++k, lips *= growth) {
        if (lip_lhs > lips * lip_rhs + 1e-12 * (1.0 + lip_lhs)) continue;
        const double tau = step_size(alpha, beta, epsilon, lips);
        V cand = prox(lincomb(1.0, y, -1.0 / tau, gz), tau);
        const V d = sub(cand, x);
        const double d_sq = raw_sq_norm(d);
        const double bound = h_x + dot(d, gx) + 0.5 * lips * d_sq + 1e-12 * (1.0 + std::fabs(h_x));
        if (H(cand) <= bound)
            return {std::move(cand), lips, tau, k};
    }
    throw SolverError("backtracking exhausted its growth budget; objective surface looks degenerate");
}

// Warm start for the image block per variant: the data itself (denoise,
// deconv), known pixels plus their mean (inpaint), block replication
// (superres) or the dequantized spectrum (jpeg).
Grid initial_image(const ProblemSpec& prob, const AlgoParams& algo);

// Progressive-depth initialization: starts at depth 1 (random feasible
// kernels, zero latents, variant warm start for u) and, for each depth below
// the target, runs `warmup_iterations` sweeps and then raises the depth by
// lifting the deepest latent through the new layer's adjoint and re-chaining
// the shallower latents so every coupling residual starts at zero.  Returns
// the state ready for full-depth sweeps; trace rows carry their stage.
SolverState progressive_init(const ProblemSpec& prob, const ModelConfig& config,
                             const AlgoParams& algo, std::uint64_t seed,
                             const Observer& observer = {});

// progressive_init followed by the budgeted full-depth sweeps.  Fully
// deterministic for a fixed seed.  A zero iteration budget returns the
// initialized state untouched.
SolveResult solve(const ProblemSpec& prob, const ModelConfig& config, const AlgoParams& algo,
                  std::uint64_t seed, const Observer& observer = {});

}  // namespace genreg
