#include "genreg/ipalm.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace genreg {

namespace {

constexpr double kLipschitzFloor = 1e-12;

double start_lipschitz(double carried, const AlgoParams& algo) {
    return algo.shrink_lipschitz ? std::max(carried / 2.0, kLipschitzFloor) : carried;
}

bool hard_constrained(Variant v) {
    return v == Variant::inpaint || v == Variant::superres || v == Variant::jpeg;
}

// One full sweep over the three blocks at the state's active depth, followed
// by a trace row.
void sweep(SolverState& st, const ProblemSpec& prob, const AlgoParams& algo,
           const Observer& observer) {
    const ModelConfig& cfg = st.stage_config;
    const SizePlan& plan = st.plan;
    const double tvb = tv_balance(cfg.nu);
    const double spb = sparsity_balance(cfg.nu);

    // image block: synthesis and coupling are constants here
    {
        const Grid v = synthesize(st.mu, st.theta, plan);
        const double coupling = coupling_value(st.mu, st.theta, plan, cfg.gamma);
        auto h = [&](const Grid& x) {
            return smooth_fidelity(x, prob, cfg.lambda) +
                   tvb * tv_smoothed(sub(x, v), cfg.tv_epsilon) + coupling;
        };
        auto grad = [&](const Grid& x) {
            Grid g = smooth_fidelity_gradient(x, prob, cfg.lambda);
            accumulate(g, tv_smoothed_gradient(sub(x, v), cfg.tv_epsilon), tvb);
            return g;
        };
        auto prox = [&](const Grid& w, double) {
            return hard_constrained(prob.variant) ? prox_data(w, prob) : w;
        };
        auto res = backtrack_block(st.u, st.u_prev, algo.alpha[0], algo.beta[0], algo.epsilon,
                                   start_lipschitz(st.lipschitz[0], algo), algo.backtrack_growth,
                                   algo.max_backtracks, h, grad, prox);
        st.u_prev = std::exchange(st.u, std::move(res.next));
        st.lipschitz[0] = res.lipschitz;
        if (observer) observer(st, Block::image);
    }

    // latent block
    {
        const double fid = smooth_fidelity(st.u, prob, cfg.lambda);
        auto h = [&](const LatentStack& m) {
            return fid + tvb * tv_smoothed(sub(st.u, synthesize(m, st.theta, plan)), cfg.tv_epsilon) +
                   coupling_value(m, st.theta, plan, cfg.gamma);
        };
        auto grad = [&](const LatentStack& m) {
            return grad_smooth_latents(st.u, m, st.theta, prob, cfg, plan);
        };
        auto prox = [&](const LatentStack& w, double tau) {
            return prox_sparsity(w, ProxContext{tau, spb});
        };
        auto res = backtrack_block(st.mu, st.mu_prev, algo.alpha[1], algo.beta[1], algo.epsilon,
                                   start_lipschitz(st.lipschitz[1], algo), algo.backtrack_growth,
                                   algo.max_backtracks, h, grad, prox);
        st.mu_prev = std::exchange(st.mu, std::move(res.next));
        st.lipschitz[1] = res.lipschitz;
        if (observer) observer(st, Block::latents);
    }

    // kernel block
    {
        const double fid = smooth_fidelity(st.u, prob, cfg.lambda);
        auto h = [&](const KernelSet& t) {
            return fid + tvb * tv_smoothed(sub(st.u, synthesize(st.mu, t, plan)), cfg.tv_epsilon) +
                   coupling_value(st.mu, t, plan, cfg.gamma);
        };
        auto grad = [&](const KernelSet& t) {
            return grad_smooth_kernels(st.u, st.mu, t, prob, cfg, plan);
        };
        auto prox = [&](const KernelSet& w, double) { return project_kernels(w); };
        auto res = backtrack_block(st.theta, st.theta_prev, algo.alpha[2], algo.beta[2],
                                   algo.epsilon, start_lipschitz(st.lipschitz[2], algo),
                                   algo.backtrack_growth, algo.max_backtracks, h, grad, prox);
        st.theta_prev = std::exchange(st.theta, std::move(res.next));
        st.lipschitz[2] = res.lipschitz;
        if (observer) observer(st, Block::kernels);
    }

    const EnergyParts parts = objective_parts(st.u, st.mu, st.theta, prob, cfg, plan);
    if (!std::isfinite(parts.total()))
        throw SolverError("objective became non-finite at iteration " + std::to_string(st.iteration));
    st.trace.push_back({st.iteration, st.stage, parts.total(), parts.fidelity, parts.tv,
                        parts.sparsity, parts.coupling});
    ++st.iteration;
}

// Raises the active depth by one: inherit kernels, draw the new layer from
// the stream, lift the deepest latent through the new adjoint and re-chain
// the latents below it so the coupling starts at zero.
void raise_depth(SolverState& st, const ProblemSpec& prob, Rng& rng) {
    const int depth = st.stage + 1;
    const ModelConfig next_cfg = st.config.truncated(depth);
    const SizePlan next_plan = derive_size_plan(prob.image_h(), prob.image_w(), next_cfg);
    const int r = next_cfg.kernel_size;
    const int top = depth - 1;

    KernelSet theta = st.theta;
    theta.layers.emplace_back();
    for (int n = 0; n < next_cfg.channels[top]; ++n) {
        Grid k(r, r);
        for (double& x : k.samples()) x = rng.uniform(-1.0 / r, 1.0 / r);
        theta.layers.back().push_back(std::move(k));
    }
    theta = project_kernels(theta);

    LatentStack mu = zero_latents(next_plan, next_cfg.channels);
    for (int n = 0; n < next_cfg.channels[top]; ++n)
        mu.layers[top][n] = upconv_adjoint_latent(
            st.mu.layers[top - 1][n], theta.layers[top][n], next_plan.stride[top],
            next_plan.latent[top][0], next_plan.latent[top][1], next_plan.interp[top][0],
            next_plan.interp[top][1]);
    for (int l = top - 1; l >= 0; --l)
        for (int n = 0; n < next_cfg.channels[l]; ++n)
            if (n < next_cfg.channels[l + 1])
                mu.layers[l][n] = strided_upconvolve(mu.layers[l + 1][n], theta.layers[l + 1][n],
                                                     next_plan.stride[l + 1],
                                                     next_plan.interp[l + 1][0],
                                                     next_plan.interp[l + 1][1]);

    st.stage = depth;
    st.stage_config = next_cfg;
    st.plan = next_plan;
    st.mu_prev = mu;
    st.mu = std::move(mu);
    st.theta_prev = theta;
    st.theta = std::move(theta);
    st.u_prev = st.u;  // restart extrapolation memory at the new depth
}

}  // namespace

double step_size(double alpha, double beta, double epsilon, double lips) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("step_size: epsilon must be positive");
    if (!(alpha >= 0.0 && alpha < 1.0 - epsilon))
        throw std::invalid_argument("step_size: requires 0 <= alpha < 1 - epsilon");
    if (!(beta >= 0.0)) throw std::invalid_argument("step_size: beta must be >= 0");
    if (!(lips > 0.0)) throw std::invalid_argument("step_size: lipschitz estimate must be positive");
    const double delta = (alpha + 2.0 * beta) / (2.0 * (1.0 - epsilon - alpha)) * lips;
    return ((1.0 + epsilon) * delta + (1.0 + beta) * lips) / (2.0 - alpha);
}

Grid initial_image(const ProblemSpec& prob, const AlgoParams& algo) {
    switch (prob.variant) {
        case Variant::denoise: return prob.observed;
        case Variant::inpaint: {
            double sum = 0.0;
            long known = 0;
            for (int i = 0; i < prob.observed.height(); ++i)
                for (int j = 0; j < prob.observed.width(); ++j)
                    if (prob.mask(i, j) != 0.0) {
                        sum += prob.observed(i, j);
                        ++known;
                    }
            const double fill = known > 0 ? sum / known : 0.5;
            Grid u = prob.observed;
            for (int i = 0; i < u.height(); ++i)
                for (int j = 0; j < u.width(); ++j)
                    if (prob.mask(i, j) == 0.0) u(i, j) = fill;
            return u;
        }
        case Variant::deconv:
            return algo.deconv_adjoint_init ? blur_adjoint(prob.observed, prob.blur_kernel)
                                            : prob.observed;
        case Variant::superres: return block_replicate(prob.observed, prob.factor);
        case Variant::jpeg: return block_dct_inverse(prob.observed);
    }
    throw std::logic_error("initial_image: unreachable");
}

SolverState progressive_init(const ProblemSpec& prob, const ModelConfig& config,
                             const AlgoParams& algo, std::uint64_t seed, const Observer& observer) {
    prob.validate();
    config.validate();
    algo.validate();
    Rng rng(seed);

    SolverState st;
    st.config = config;
    st.stage = 1;
    st.stage_config = config.truncated(1);
    st.plan = derive_size_plan(prob.image_h(), prob.image_w(), st.stage_config);
    st.u = initial_image(prob, algo);
    if (!st.u.all_finite()) throw SolverError("initial image is not finite");
    st.u_prev = st.u;
    st.theta = project_kernels(random_kernels(st.stage_config, rng));
    st.theta_prev = st.theta;
    st.mu = zero_latents(st.plan, st.stage_config.channels);
    st.mu_prev = st.mu;
    st.lipschitz = algo.initial_lipschitz;

    for (int depth = 1; depth < config.layers; ++depth) {
        for (int it = 0; it < algo.warmup_iterations; ++it) sweep(st, prob, algo, observer);
        raise_depth(st, prob, rng);
    }
    return st;
}

SolveResult solve(const ProblemSpec& prob, const ModelConfig& config, const AlgoParams& algo,
                  std::uint64_t seed, const Observer& observer) {
    SolverState st = progressive_init(prob, config, algo, seed, observer);
    for (int it = 0; it < algo.iterations; ++it) sweep(st, prob, algo, observer);
    return {std::move(st.u), std::move(st.mu), std::move(st.theta), std::move(st.trace)};
}

}  // namespace genreg
