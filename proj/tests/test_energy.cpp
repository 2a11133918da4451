#include <doctest.h>

#include <cmath>
#include <limits>

#include "genreg/energy.hpp"
#include "genreg/prox.hpp"
#include "oracles.hpp"

using namespace genreg;

namespace {

ModelConfig tiny_config(int layers = 2, int channels = 2, int kernel = 3) {
    ModelConfig cfg;
    cfg.layers = layers;
    cfg.channels.assign(layers, channels);
    cfg.kernel_size = kernel;
    cfg.strides.assign(layers, 2);
    cfg.strides[0] = 1;
    cfg.gamma = 5.0;
    cfg.nu = 0.8;
    cfg.lambda = 3.0;
    cfg.tv_epsilon = 0.05;
    return cfg;
}

struct Instance {
    ModelConfig cfg;
    SizePlan plan;
    Grid u;
    LatentStack mu;
    KernelSet theta;
};

Instance random_instance(const ModelConfig& cfg, int h, int w, Rng& rng) {
    Instance inst;
    inst.cfg = cfg;
    inst.plan = derive_size_plan(h, w, cfg);
    inst.u = oracle::random_grid(h, w, rng);
    inst.mu = zero_latents(inst.plan, cfg.channels);
    for (auto& layer : inst.mu.layers)
        for (Grid& m : layer) m = oracle::random_grid(m.height(), m.width(), rng, -0.5, 0.5);
    inst.theta.layers.resize(cfg.layers);
    for (int l = 0; l < cfg.layers; ++l)
        for (int n = 0; n < cfg.channels[l]; ++n)
            inst.theta.layers[l].push_back(
                oracle::random_grid(cfg.kernel_size, cfg.kernel_size, rng, -0.3, 0.3));
    return inst;
}

// norm-wise relative disagreement between a gradient stack and its finite
// difference counterpart
template <typename Stack, typename F>
double stack_fd_error(const Stack& grad, Stack state, const F& f, double h) {
    double err_sq = 0.0, ref_sq = 0.0;
    for (std::size_t l = 0; l < state.layers.size(); ++l)
        for (std::size_t n = 0; n < state.layers[l].size(); ++n) {
            Grid& g = state.layers[l][n];
            for (int k = 0; k < g.size(); ++k) {
                const double saved = g.samples()[k];
                g.samples()[k] = saved + h;
                const double fp = f(state);
                g.samples()[k] = saved - h;
                const double fm = f(state);
                g.samples()[k] = saved;
                const double fd = (fp - fm) / (2.0 * h);
                const double d = fd - grad.layers[l][n].samples()[k];
                err_sq += d * d;
                ref_sq += fd * fd;
            }
        }
    return std::sqrt(err_sq) / std::max(1.0, std::sqrt(ref_sq));
}

}  // namespace

TEST_SUITE("energy") {

TEST_CASE("tv_smoothed closed forms") {
    // constant image: every pixel contributes sqrt(epsilon)
    CHECK(tv_smoothed(Grid::constant(5, 7, 3.25), 0.05) ==
          doctest::Approx(std::sqrt(0.05)).epsilon(1e-14));
    CHECK(tv_smoothed(Grid(4, 4), 1.0) == doctest::Approx(1.0).epsilon(1e-14));
    // 1x2 image (0,1): pixels contribute sqrt(1 + eps) and sqrt(eps)
    const double want = (std::sqrt(1.05) + std::sqrt(0.05)) / 2.0;
    CHECK(want == doctest::Approx(0.6241509371729694).epsilon(1e-15));
    CHECK(tv_smoothed(Grid(1, 2, {0.0, 1.0}), 0.05) == doctest::Approx(want).epsilon(1e-14));
    CHECK_THROWS_AS(tv_smoothed(Grid(2, 2), 0.0), std::invalid_argument);
}

TEST_CASE("tv_smoothed lower bound and translation invariance") {
    Rng rng(101);
    for (int trial = 0; trial < 20; ++trial) {
        const Grid u = oracle::random_grid(6, 6, rng);
        const double tv = tv_smoothed(u, 0.05);
        CHECK(tv >= std::sqrt(0.05) - 1e-15);
        CHECK(tv_smoothed(lincomb(1.0, u, 0.0, u), 0.05) == tv);  // self-consistency
        Grid shifted = u;
        for (double& x : shifted.samples()) x += 17.5;
        CHECK(tv_smoothed(shifted, 0.05) == doctest::Approx(tv).epsilon(1e-12));
    }
    // equality only for constants: a non-constant grid sits strictly above
    CHECK(tv_smoothed(Grid(1, 2, {0.0, 1e-3}), 0.05) > std::sqrt(0.05));
}

TEST_CASE("tv_smoothed_gradient matches finite differences") {
    Rng rng(103);
    const Grid u = oracle::random_grid(8, 8, rng);
    const Grid g = tv_smoothed_gradient(u, 0.05);
    const Grid fd = oracle::fd_gradient([](const Grid& x) { return tv_smoothed(x, 0.05); }, u, 1e-6);
    double err_sq = 0, ref_sq = 0;
    for (int k = 0; k < u.size(); ++k) {
        const double d = g.samples()[k] - fd.samples()[k];
        err_sq += d * d;
        ref_sq += fd.samples()[k] * fd.samples()[k];
    }
    CHECK(std::sqrt(err_sq / ref_sq) <= 1e-6);

    const Grid flat_grad = tv_smoothed_gradient(Grid::constant(5, 5, 1.0), 0.05);
    for (double x : flat_grad.samples()) CHECK(x == 0.0);
}

TEST_CASE("coupling_value closed forms") {
    Rng rng(107);
    ModelConfig cfg = tiny_config(2, 1, 3);
    const SizePlan plan = derive_size_plan(8, 8, cfg);

    SUBCASE("chained latents couple to zero") {
        LatentStack mu = zero_latents(plan, cfg.channels);
        KernelSet theta;
        theta.layers.resize(2);
        theta.layers[0].push_back(oracle::random_grid(3, 3, rng));
        theta.layers[1].push_back(oracle::random_grid(3, 3, rng));
        mu.layers[1][0] = oracle::random_grid(plan.latent[1][0], plan.latent[1][1], rng);
        mu.layers[0][0] = strided_upconvolve(mu.layers[1][0], theta.layers[1][0], plan.stride[1],
                                             plan.interp[1][0], plan.interp[1][1]);
        CHECK(coupling_value(mu, theta, plan, cfg.gamma) == 0.0);
    }
    SUBCASE("single layer has no coupling") {
        ModelConfig c1 = tiny_config(1, 2, 3);
        const SizePlan p1 = derive_size_plan(8, 8, c1);
        LatentStack mu = zero_latents(p1, c1.channels);
        for (Grid& m : mu.layers[0]) m = oracle::random_grid(m.height(), m.width(), rng);
        KernelSet theta;
        theta.layers.push_back({oracle::random_grid(3, 3, rng), oracle::random_grid(3, 3, rng)});
        CHECK(coupling_value(mu, theta, p1, c1.gamma) == 0.0);
    }
    SUBCASE("zero kernels leave the shallow latent as the residual") {
        LatentStack mu = zero_latents(plan, cfg.channels);
        mu.layers[0][0] = oracle::random_grid(plan.latent[0][0], plan.latent[0][1], rng);
        mu.layers[1][0] = oracle::random_grid(plan.latent[1][0], plan.latent[1][1], rng);
        KernelSet theta;
        theta.layers.resize(2);
        theta.layers[0].push_back(Grid(3, 3));
        theta.layers[1].push_back(Grid(3, 3));
        const double n2 = normalized_norm(mu.layers[0][0], 2.0);
        CHECK(coupling_value(mu, theta, plan, cfg.gamma) ==
              doctest::Approx(cfg.gamma * 0.5 * n2 * n2).epsilon(1e-13));
    }
}

TEST_CASE("smooth_value composes fidelity, tv and coupling") {
    Rng rng(109);
    ModelConfig cfg = tiny_config();
    const int h = 10, w = 10;

    SUBCASE("denoising at u = y with zero network") {
        ProblemSpec prob;
        prob.variant = Variant::denoise;
        prob.observed = oracle::random_grid(h, w, rng, 0.0, 1.0);
        const SizePlan plan = derive_size_plan(h, w, cfg);
        const LatentStack mu = zero_latents(plan, cfg.channels);
        KernelSet theta;
        theta.layers.resize(cfg.layers);
        for (int l = 0; l < cfg.layers; ++l)
            for (int n = 0; n < cfg.channels[l]; ++n) theta.layers[l].emplace_back(3, 3);
        const double got = smooth_value(prob.observed, mu, theta, prob, cfg, plan);
        const double want = tv_balance(cfg.nu) * tv_smoothed(prob.observed, cfg.tv_epsilon);
        CHECK(got == doctest::Approx(want).epsilon(1e-13));
    }
    SUBCASE("hard-constraint variants contribute no smooth fidelity") {
        ProblemSpec prob;
        prob.variant = Variant::inpaint;
        prob.observed = oracle::random_grid(h, w, rng, 0.0, 1.0);
        prob.mask = Grid::constant(h, w, 1.0);
        const Grid u = Grid::constant(h, w, 0.25);
        CHECK(smooth_fidelity(u, prob, 100.0) == 0.0);
        const SizePlan plan = derive_size_plan(h, w, cfg);
        const Instance inst = random_instance(cfg, h, w, rng);
        const double got = smooth_value(u, inst.mu, inst.theta, prob, cfg, plan);
        const double want =
            tv_balance(cfg.nu) *
                tv_smoothed(sub(u, synthesize(inst.mu, inst.theta, plan)), cfg.tv_epsilon) +
            coupling_value(inst.mu, inst.theta, plan, cfg.gamma);
        CHECK(got == doctest::Approx(want).epsilon(1e-13));
    }
}

TEST_CASE("smooth fidelity and gradient match the normalized quadratic") {
    Rng rng(113);
    ProblemSpec prob;
    prob.variant = Variant::denoise;
    prob.observed = oracle::random_grid(6, 6, rng, 0.0, 1.0);
    const Grid u = oracle::random_grid(6, 6, rng, 0.0, 1.0);
    const double lambda = 7.5;
    const Grid r = sub(u, prob.observed);
    const double n2 = normalized_norm(r, 2.0);
    CHECK(smooth_fidelity(u, prob, lambda) ==
          doctest::Approx(0.5 * lambda * n2 * n2).epsilon(1e-13));
    const Grid fd = oracle::fd_gradient(
        [&](const Grid& x) { return smooth_fidelity(x, prob, lambda); }, u, 1e-6);
    const Grid g = smooth_fidelity_gradient(u, prob, lambda);
    for (int k = 0; k < u.size(); ++k)
        CHECK(g.samples()[k] == doctest::Approx(fd.samples()[k]).epsilon(1e-6));
}

TEST_CASE("block gradients match finite differences across variants") {
    Rng rng(127);
    const ModelConfig cfg = tiny_config();

    auto check_variant = [&](const ProblemSpec& prob) {
        const int h = prob.image_h(), w = prob.image_w();
        Instance inst = random_instance(cfg, h, w, rng);
        const SizePlan plan = inst.plan;

        // image block
        {
            const Grid g = grad_smooth_image(inst.u, inst.mu, inst.theta, prob, cfg, plan);
            const Grid fd = oracle::fd_gradient(
                [&](const Grid& x) { return smooth_value(x, inst.mu, inst.theta, prob, cfg, plan); },
                inst.u, 1e-6);
            double err_sq = 0, ref_sq = 0;
            for (int k = 0; k < g.size(); ++k) {
                const double d = g.samples()[k] - fd.samples()[k];
                err_sq += d * d;
                ref_sq += fd.samples()[k] * fd.samples()[k];
            }
            CHECK(std::sqrt(err_sq) / std::max(1.0, std::sqrt(ref_sq)) <= 1e-4);
        }
        // latent block
        {
            const LatentStack g = grad_smooth_latents(inst.u, inst.mu, inst.theta, prob, cfg, plan);
            const double err = stack_fd_error(
                g, inst.mu,
                [&](const LatentStack& m) {
                    return smooth_value(inst.u, m, inst.theta, prob, cfg, plan);
                },
                1e-6);
            CHECK(err <= 1e-4);
        }
        // kernel block
        {
            const KernelSet g = grad_smooth_kernels(inst.u, inst.mu, inst.theta, prob, cfg, plan);
            const double err = stack_fd_error(
                g, inst.theta,
                [&](const KernelSet& t) {
                    return smooth_value(inst.u, inst.mu, t, prob, cfg, plan);
                },
                1e-6);
            CHECK(err <= 1e-4);
        }
    };

    SUBCASE("denoise") {
        ProblemSpec prob;
        prob.variant = Variant::denoise;
        prob.observed = oracle::random_grid(8, 8, rng, 0.0, 1.0);
        check_variant(prob);
    }
    SUBCASE("deconv") {
        CorruptionRecipe recipe = default_recipe(Variant::deconv);
        recipe.blur_half_width = 2;
        check_variant(simulate_corruption(oracle::random_grid(8, 8, rng, 0.0, 1.0), recipe, 7));
    }
    SUBCASE("inpaint") {
        check_variant(
            simulate_corruption(oracle::random_grid(8, 8, rng, 0.0, 1.0), default_recipe(Variant::inpaint), 7));
    }
    SUBCASE("superres") {
        CorruptionRecipe recipe = default_recipe(Variant::superres);
        recipe.factor = 2;
        check_variant(simulate_corruption(oracle::random_grid(8, 8, rng, 0.0, 1.0), recipe, 7));
    }
    SUBCASE("jpeg") {
        check_variant(
            simulate_corruption(oracle::random_grid(8, 8, rng, 0.0, 1.0), default_recipe(Variant::jpeg), 7));
    }
}

TEST_CASE("coupling gradient at the deepest latent is the pulled-back residual") {
    Rng rng(131);
    ModelConfig cfg = tiny_config(2, 1, 3);
    cfg.nu = 0.5;  // tv balance 1
    ProblemSpec prob;
    prob.variant = Variant::denoise;
    prob.observed = Grid(8, 8);
    Instance inst = random_instance(cfg, 8, 8, rng);
    const SizePlan& plan = inst.plan;
    const LatentStack g = grad_smooth_latents(inst.u, inst.mu, inst.theta, prob, cfg, plan);
    const Grid resid = sub(inst.mu.layers[0][0],
                           strided_upconvolve(inst.mu.layers[1][0], inst.theta.layers[1][0],
                                              plan.stride[1], plan.interp[1][0], plan.interp[1][1]));
    const Grid want = scaled(
        upconv_adjoint_latent(resid, inst.theta.layers[1][0], plan.stride[1], plan.latent[1][0],
                              plan.latent[1][1], plan.interp[1][0], plan.interp[1][1]),
        -cfg.gamma / (plan.latent[0][0] * plan.latent[0][1]));
    for (int k = 0; k < want.size(); ++k)
        CHECK(g.layers[1][0].samples()[k] == doctest::Approx(want.samples()[k]).epsilon(1e-12));
}

TEST_CASE("objective turns infeasible states infinite") {
    Rng rng(137);
    ModelConfig cfg = tiny_config();
    ProblemSpec prob;
    prob.variant = Variant::inpaint;
    prob.observed = oracle::random_grid(8, 8, rng, 0.0, 1.0);
    prob.mask = Grid::constant(8, 8, 1.0);
    Instance inst = random_instance(cfg, 8, 8, rng);
    inst.theta = project_kernels(inst.theta);

    // feasible image, feasible kernels: finite
    EnergyParts parts = objective_parts(prob.observed, inst.mu, inst.theta, prob, cfg, inst.plan);
    CHECK(std::isfinite(parts.total()));

    // image violating the mask constraint
    Grid bad = prob.observed;
    bad(3, 3) += 0.5;
    parts = objective_parts(bad, inst.mu, inst.theta, prob, cfg, inst.plan);
    CHECK(parts.fidelity == std::numeric_limits<double>::infinity());

    // kernel outside the ball
    KernelSet fat = inst.theta;
    fat.layers[1][0] = Grid::constant(3, 3, 1.0);
    parts = objective_parts(prob.observed, inst.mu, fat, prob, cfg, inst.plan);
    CHECK(parts.sparsity == std::numeric_limits<double>::infinity());

    // layer-0 kernel with nonzero mean
    KernelSet off = inst.theta;
    off.layers[0][0] = Grid::constant(3, 3, 0.1);
    parts = objective_parts(prob.observed, inst.mu, off, prob, cfg, inst.plan);
    CHECK(parts.sparsity == std::numeric_limits<double>::infinity());
}

TEST_CASE("objective parts sum to smooth value plus weighted l1 when feasible") {
    Rng rng(139);
    ModelConfig cfg = tiny_config();
    ProblemSpec prob;
    prob.variant = Variant::denoise;
    prob.observed = oracle::random_grid(8, 8, rng, 0.0, 1.0);
    Instance inst = random_instance(cfg, 8, 8, rng);
    inst.theta = project_kernels(inst.theta);
    double l1 = 0.0;
    for (const auto& layer : inst.mu.layers)
        for (const Grid& m : layer) l1 += sparsity_balance(cfg.nu) * normalized_norm(m, 1.0);
    const double total = objective_value(inst.u, inst.mu, inst.theta, prob, cfg, inst.plan);
    const double want = smooth_value(inst.u, inst.mu, inst.theta, prob, cfg, inst.plan) + l1;
    CHECK(total == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("violation measures") {
    Rng rng(149);
    SUBCASE("kernel violations report ball excess and mean offset") {
        KernelSet theta;
        theta.layers.resize(2);
        theta.layers[0].push_back(Grid(2, 2, {0.5, -0.5, 0.25, -0.25}));  // zero mean, inside ball
        theta.layers[1].push_back(Grid(2, 2, {1.0, 1.0, 0.0, 0.0}));      // raw square sum 2
        CHECK(kernel_violation(theta) == doctest::Approx(1.0).epsilon(1e-13));
        theta.layers[1][0] = Grid(2, 2, {0.1, 0.1, 0.1, 0.1});
        theta.layers[0][0] = Grid(2, 2, {0.3, 0.1, 0.0, 0.0});  // mean offset 0.4
        CHECK(kernel_violation(theta) == doctest::Approx(0.4).epsilon(1e-13));
    }
    SUBCASE("constraint violation per variant") {
        ProblemSpec prob;
        prob.variant = Variant::superres;
        prob.factor = 2;
        prob.observed = Grid(2, 2, {1.0, 2.0, 3.0, 4.0});
        const Grid u = block_replicate(prob.observed, 2);
        CHECK(constraint_violation(u, prob) == 0.0);
        Grid bad = u;
        bad(0, 0) += 0.4;  // block mean moves by 0.1
        CHECK(constraint_violation(bad, prob) == doctest::Approx(0.1).epsilon(1e-12));
    }
}

}  // TEST_SUITE
