#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "genreg/forward.hpp"
#include "genreg/image_io.hpp"
#include "oracles.hpp"

using namespace genreg;

namespace {

ProblemSpec make_problem(Variant v, Rng& rng, int h = 16, int w = 16) {
    const Grid truth = oracle::random_grid(h, w, rng, 0.0, 1.0);
    CorruptionRecipe recipe = default_recipe(v);
    if (v == Variant::superres) recipe.factor = 4;
    return simulate_corruption(truth, recipe, 77);
}

std::filesystem::path temp_file(const char* name) {
    return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_SUITE("forward") {

TEST_CASE("forward/adjoint identity holds for every variant") {
    Rng rng(301);
    for (Variant v : {Variant::denoise, Variant::inpaint, Variant::deconv, Variant::superres,
                      Variant::jpeg}) {
        const ProblemSpec prob = make_problem(v, rng);
        const auto out_probe = apply_forward(Grid(16, 16), prob);
        for (int trial = 0; trial < 20; ++trial) {
            const double err = oracle::adjoint_identity_error(
                [&](const Grid& x) { return apply_forward(x, prob); },
                [&](const Grid& y) { return apply_adjoint(y, prob); }, 16, 16,
                out_probe.height(), out_probe.width(), rng);
            CHECK(err <= 1e-12);
        }
    }
}

TEST_CASE("blur matches the zero-padded convolution definition") {
    Rng rng(307);
    const Grid kernel = gaussian_blur_kernel(2, 1.0);
    REQUIRE(kernel.height() == 5);
    double total = 0.0;
    for (double x : kernel.samples()) {
        CHECK(x > 0.0);
        total += x;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-14));

    const Grid u = oracle::random_grid(7, 9, rng);
    const Grid got = blur(u, kernel);
    const int s = 2;
    for (int i = 0; i < u.height(); ++i)
        for (int j = 0; j < u.width(); ++j) {
            double acc = 0.0;
            for (int a = -s; a <= s; ++a)
                for (int b = -s; b <= s; ++b) {
                    const int p = i - a, q = j - b;
                    if (p < 0 || p >= u.height() || q < 0 || q >= u.width()) continue;
                    acc += kernel(s + a, s + b) * u(p, q);
                }
            CHECK(got(i, j) == doctest::Approx(acc).epsilon(1e-13));
        }

    SUBCASE("delta kernel is the identity") {
        Grid delta(3, 3);
        delta(1, 1) = 1.0;
        const Grid same = blur(u, delta);
        for (int k = 0; k < u.size(); ++k)
            CHECK(same.samples()[k] == doctest::Approx(u.samples()[k]).epsilon(1e-15));
    }
    SUBCASE("adjoint identity against blur_adjoint") {
        for (int trial = 0; trial < 20; ++trial) {
            const double err = oracle::adjoint_identity_error(
                [&](const Grid& x) { return blur(x, kernel); },
                [&](const Grid& y) { return blur_adjoint(y, kernel); }, 7, 9, 7, 9, rng);
            CHECK(err <= 1e-12);
        }
    }
}

TEST_CASE("block average and replicate") {
    const Grid u(2, 4, {1.0, 3.0, 5.0, 7.0, 2.0, 4.0, 6.0, 8.0});
    const Grid down = block_average(u, 2);
    REQUIRE(down.height() == 1);
    REQUIRE(down.width() == 2);
    CHECK(down(0, 0) == doctest::Approx(2.5));
    CHECK(down(0, 1) == doctest::Approx(6.5));

    const Grid up = block_replicate(down, 2);
    REQUIRE(up.same_shape(u));
    CHECK(up(0, 0) == doctest::Approx(2.5));
    CHECK(up(1, 3) == doctest::Approx(6.5));

    CHECK_THROWS_AS(block_average(Grid(3, 3), 2), std::invalid_argument);
}

TEST_CASE("block DCT is orthonormal with DC response 8 on all-ones") {
    Rng rng(311);
    const Grid ones = Grid::constant(8, 8, 1.0);
    const Grid z = block_dct(ones);
    CHECK(z(0, 0) == doctest::Approx(8.0).epsilon(1e-13));
    for (int k = 1; k < 64; ++k) CHECK(std::fabs(z.samples()[k]) <= 1e-13);

    SUBCASE("inverse undoes the transform and preserves energy") {
        const Grid u = oracle::random_grid(16, 24, rng);
        const Grid c = block_dct(u);
        CHECK(raw_sq_norm(c) == doctest::Approx(raw_sq_norm(u)).epsilon(1e-12));
        const Grid back = block_dct_inverse(c);
        for (int k = 0; k < u.size(); ++k)
            CHECK(back.samples()[k] == doctest::Approx(u.samples()[k]).epsilon(1e-12));
    }
    SUBCASE("transform rejects dimensions that are not multiples of 8") {
        CHECK_THROWS_AS(block_dct(Grid(9, 8)), std::invalid_argument);
        CHECK_THROWS_AS(block_dct_inverse(Grid(8, 12)), std::invalid_argument);
    }
}

TEST_CASE("luminance quantization table scaling") {
    // quality 50 keeps the base table; entry (0,0) of the base table is 16
    const auto q50 = luminance_quant_table(50);
    CHECK(q50[0] == doctest::Approx(16.0 / 255.0).epsilon(1e-14));
    // quality 10: scale 5000/10 = 500, entry0 = (16*500 + 50)/100 = 80
    const auto q10 = luminance_quant_table(10);
    CHECK(q10[0] == doctest::Approx(80.0 / 255.0).epsilon(1e-14));
    // quality 100: scale 0, every entry clamps to 1
    const auto q100 = luminance_quant_table(100);
    for (double x : q100) CHECK(x == doctest::Approx(1.0 / 255.0).epsilon(1e-14));
    // higher quality never coarsens any step
    const auto q75 = luminance_quant_table(75);
    for (int k = 0; k < 64; ++k) CHECK(q75[k] <= q50[k] + 1e-15);
    CHECK_THROWS_AS(luminance_quant_table(0), std::invalid_argument);
    CHECK_THROWS_AS(luminance_quant_table(101), std::invalid_argument);
}

TEST_CASE("quantize_spectrum rounds half away from zero") {
    // planted coefficients pass through a DCT roundtrip before rounding, so
    // probe both sides of each tie with a margin far above the roundtrip noise
    std::array<double, 64> table;
    table.fill(1.0);
    Grid coeffs(8, 8);
    coeffs(0, 0) = 2.5 + 1e-6;   // just above the tie -> 3
    coeffs(0, 1) = -2.5 - 1e-6;  // away from zero -> -3
    coeffs(0, 2) = 2.5 - 1e-6;   // just below the tie -> 2
    coeffs(0, 3) = -0.5 - 1e-6;  // -> -1
    coeffs(0, 4) = -0.5 + 1e-6;  // -> 0
    const Grid u = block_dct_inverse(coeffs);
    const QuantizedSpectrum spec = quantize_spectrum(u, table);
    CHECK(spec.index(0, 0) == 3);
    CHECK(spec.index(0, 1) == -3);
    CHECK(spec.index(0, 2) == 2);
    CHECK(spec.index(0, 3) == -1);
    CHECK(spec.index(0, 4) == 0);
    CHECK(spec.index(4, 4) == 0);

    SUBCASE("dequantized returns interval midpoints") {
        const Grid mid = spec.dequantized();
        CHECK(mid(0, 0) == doctest::Approx(3.0));
        CHECK(mid(0, 1) == doctest::Approx(-3.0));
    }
    SUBCASE("quantization error stays within half a step per coefficient") {
        Rng rng(313);
        const Grid img = oracle::random_grid(16, 16, rng, 0.0, 1.0);
        const auto fine = luminance_quant_table(90);
        const QuantizedSpectrum s = quantize_spectrum(img, fine);
        const Grid z = block_dct(img);
        for (int i = 0; i < 16; ++i)
            for (int j = 0; j < 16; ++j)
                CHECK(std::fabs(z(i, j) - s.step(i, j) * s.index(i, j)) <=
                      0.5 * s.step(i, j) + 1e-12);
    }
}

TEST_CASE("spectrum sidecar roundtrip") {
    Rng rng(317);
    const Grid img = oracle::random_grid(16, 8, rng, 0.0, 1.0);
    const QuantizedSpectrum spec = quantize_spectrum(img, luminance_quant_table(35));

    for (bool binary : {false, true}) {
        CAPTURE(binary);
        const auto path = temp_file(binary ? "genreg_spec_test.qsb" : "genreg_spec_test.qst");
        save_spectrum(spec, path, binary);
        const QuantizedSpectrum back = load_spectrum(path);
        CHECK(back.height == spec.height);
        CHECK(back.width == spec.width);
        for (int k = 0; k < 64; ++k)
            CHECK(back.table[k] == doctest::Approx(spec.table[k]).epsilon(1e-15));
        REQUIRE(back.indices.size() == spec.indices.size());
        for (std::size_t k = 0; k < spec.indices.size(); ++k)
            CHECK(back.indices[k] == spec.indices[k]);
        std::filesystem::remove(path);
    }

    SUBCASE("truncated file raises an i/o error") {
        const auto path = temp_file("genreg_spec_trunc.qst");
        std::FILE* f = std::fopen(path.string().c_str(), "wb");
        REQUIRE(f != nullptr);
        std::fputs("QSPEC text\n8 8\n", f);
        std::fclose(f);
        CHECK_THROWS_AS(load_spectrum(path), IoError);
        std::filesystem::remove(path);
    }
}

TEST_CASE("simulate_corruption is a pure function of seed") {
    Rng rng(331);
    const Grid truth = oracle::random_grid(24, 24, rng, 0.0, 1.0);
    for (Variant v : {Variant::denoise, Variant::inpaint, Variant::deconv, Variant::superres,
                      Variant::jpeg}) {
        const ProblemSpec a = simulate_corruption(truth, default_recipe(v), 9);
        const ProblemSpec b = simulate_corruption(truth, default_recipe(v), 9);
        REQUIRE(a.observed.same_shape(b.observed));
        for (int k = 0; k < a.observed.size(); ++k)
            CHECK(a.observed.samples()[k] == b.observed.samples()[k]);
        const ProblemSpec c = simulate_corruption(truth, default_recipe(v), 10);
        if (v != Variant::superres && v != Variant::jpeg) {
            double max_diff = 0.0;
            for (int k = 0; k < a.observed.size(); ++k)
                max_diff = std::max(max_diff,
                                    std::fabs(a.observed.samples()[k] - c.observed.samples()[k]));
            CHECK(max_diff > 0.0);  // different seed, different degradation
        }
    }
}

TEST_CASE("inpaint mask density tracks the keep fraction") {
    Rng rng(337);
    const Grid truth = oracle::random_grid(100, 100, rng, 0.0, 1.0);
    CorruptionRecipe recipe = default_recipe(Variant::inpaint);
    recipe.keep_fraction = 0.3;
    const ProblemSpec prob = simulate_corruption(truth, recipe, 4);
    int kept = 0;
    for (double m : prob.mask.samples()) {
        CHECK((m == 0.0 || m == 1.0));
        kept += m != 0.0;
    }
    // binomial(10000, 0.3): five sigmas is about 230
    CHECK(kept > 3000 - 250);
    CHECK(kept < 3000 + 250);
    for (int i = 0; i < 100; ++i)
        for (int j = 0; j < 100; ++j)
            CHECK(prob.observed(i, j) == (prob.mask(i, j) != 0.0 ? truth(i, j) : 0.0));
}

TEST_CASE("zero noise reproduces the clean measurement") {
    Rng rng(347);
    const Grid truth = oracle::random_grid(12, 12, rng, 0.0, 1.0);
    CorruptionRecipe recipe = default_recipe(Variant::denoise);
    recipe.noise_std = 0.0;
    const ProblemSpec prob = simulate_corruption(truth, recipe, 1);
    for (int k = 0; k < truth.size(); ++k)
        CHECK(prob.observed.samples()[k] == truth.samples()[k]);

    CorruptionRecipe dr = default_recipe(Variant::deconv);
    dr.noise_std = 0.0;
    dr.blur_half_width = 2;
    const ProblemSpec dp = simulate_corruption(truth, dr, 1);
    const Grid want = blur(truth, dp.blur_kernel);
    for (int k = 0; k < want.size(); ++k)
        CHECK(dp.observed.samples()[k] == doctest::Approx(want.samples()[k]).epsilon(1e-15));
}

TEST_CASE("psnr closed forms") {
    const Grid ref = Grid::constant(4, 4, 0.25);
    Grid off = ref;
    for (double& x : off.samples()) x += 0.1;
    CHECK(psnr(off, ref, 1.0) == doctest::Approx(20.0).epsilon(1e-12));
    CHECK(std::isinf(psnr(ref, ref, 1.0)));
    // doubling the peak adds 20*log10(2) dB
    CHECK(psnr(off, ref, 2.0) == doctest::Approx(20.0 + 20.0 * std::log10(2.0)).epsilon(1e-12));
}

TEST_CASE("ssim is 1 on identical images and below 1 under distortion") {
    Rng rng(349);
    const Grid u = oracle::random_grid(16, 16, rng, 0.0, 1.0);
    CHECK(ssim(u, u, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
    Grid noisy = u;
    Rng noise(350);
    for (double& x : noisy.samples()) x += 0.2 * noise.next_gaussian();
    const double s = ssim(noisy, u, 1.0);
    CHECK(s < 1.0);
    CHECK(s > -1.0);
    CHECK_THROWS_AS(ssim(Grid(4, 4), Grid(4, 4), 1.0), std::invalid_argument);
}

}  // TEST_SUITE
