#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "genreg/grid.hpp"
#include "genreg/rng.hpp"

namespace genreg {

// The five supported measurement models.
enum class Variant { denoise, inpaint, deconv, superres, jpeg };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

// Quantized block-DCT observation: a shared 8x8 step table plus one integer
// bin index per coefficient.  Indices are stored in image layout: entry
// (i, j) belongs to coefficient (i mod 8, j mod 8) of its 8x8 block.  The
// admissible coefficient interval for index k with step q is
// [q*(k - 1/2), q*(k + 1/2)].
struct QuantizedSpectrum {
    int height = 0, width = 0;
    std::array<double, 64> table{};  // row-major 8x8, all entries > 0
    std::vector<std::int32_t> indices;

    bool empty() const { return indices.empty(); }
    double step(int i, int j) const { return table[(i % 8) * 8 + (j % 8)]; }
    std::int32_t index(int i, int j) const {
        return indices[static_cast<std::size_t>(i) * width + j];
    }
    // q*k, the interval midpoint, as an image-layout grid of coefficients
    Grid dequantized() const;
};

// One concrete inverse problem: the measurement model plus its observed data
// and operator payload.
struct ProblemSpec {
    Variant variant = Variant::denoise;
    Grid observed;       // data grid; for jpeg the dequantized coefficients
    Grid mask;           // inpaint: 0/1 grid, image-sized
    Grid blur_kernel;    // deconv: odd square kernel, entries sum to 1
    int factor = 1;      // superres: block edge s, divides both image dims
    QuantizedSpectrum spectrum;  // jpeg

    // image dimensions the unknowns live on
    int image_h() const;
    int image_w() const;

    void validate() const;  // throws std::invalid_argument naming the defect
};

// How simulate_corruption degrades a ground-truth image.
struct CorruptionRecipe {
    Variant variant = Variant::denoise;
    double keep_fraction = 0.3;   // inpaint: iid keep probability per pixel
    double noise_std = 0.1;       // additive Gaussian, relative to clean-data range
    int blur_half_width = 4;      // deconv: kernel size (2s+1)^2
    double blur_std = 0.25;       // Gaussian blur std
    bool blur_std_relative = true;  // true: std = blur_std * half_width pixels
    int factor = 4;               // superres block edge
    int jpeg_quality = 50;        // standard luminance table scaling, 1..100
};

CorruptionRecipe default_recipe(Variant v);

// A(u): identity / mask product / zero-padded blur / block average /
// orthonormal 8x8 block DCT depending on the variant.
Grid apply_forward(const Grid& u, const ProblemSpec& prob);

// Exact adjoint of apply_forward under unnormalized inner products.
Grid apply_adjoint(const Grid& d, const ProblemSpec& prob);

// Degrades a ground-truth image into a ProblemSpec with deterministic,
// seed-reproducible randomness (mask pattern, noise draws).
ProblemSpec simulate_corruption(const Grid& truth, const CorruptionRecipe& recipe,
                                std::uint64_t seed);

// Peak signal-to-noise ratio in dB; +infinity for identical inputs.
double psnr(const Grid& u, const Grid& ref, double peak);

// Mean SSIM over all fully-interior 8x8 windows with Gaussian weights
// (sigma 1.5); stabilizers (0.01*peak)^2 and (0.03*peak)^2.
double ssim(const Grid& u, const Grid& ref, double peak = 1.0);

// --- building blocks reused across modules ------------------------------

// normalized Gaussian taps on {-s..s}^2
Grid gaussian_blur_kernel(int half_width, double std_dev);

Grid blur(const Grid& u, const Grid& kernel);          // zero-padded
Grid blur_adjoint(const Grid& d, const Grid& kernel);  // zero-padded correlation

Grid block_average(const Grid& u, int factor);
Grid block_replicate(const Grid& y, int factor);  // adjoint scaled by factor^2

Grid block_dct(const Grid& u);          // orthonormal per 8x8 block
Grid block_dct_inverse(const Grid& z);  // transpose == inverse

// JPEG-style quality scaling of the standard luminance table, divided by 255
// so steps match images with unit range.
std::array<double, 64> luminance_quant_table(int quality);

// Quantizes the block DCT of an image against a table; index rounding is
// half-away-from-zero.
QuantizedSpectrum quantize_spectrum(const Grid& u, const std::array<double, 64>& table);

// Sidecar serialization: a short text header (mode line, dims, 64 table
// entries) followed by the indices as decimal text or little-endian int32.
void save_spectrum(const QuantizedSpectrum& spec, const std::filesystem::path& path, bool binary);
QuantizedSpectrum load_spectrum(const std::filesystem::path& path);

}  // namespace genreg
