#include "genreg/forward.hpp"

#include "genreg/image_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace genreg {

namespace {

// orthonormal 8x8 DCT-II matrix
const std::array<double, 64>& dct_matrix() {
    static const std::array<double, 64> c = [] {
        std::array<double, 64> m{};
        for (int k = 0; k < 8; ++k) {
            const double a = k == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
            for (int n = 0; n < 8; ++n)
                m[k * 8 + n] = a * std::cos(std::numbers::pi * (2 * n + 1) * k / 16.0);
        }
        return m;
    }();
    return c;
}

void check_multiple_of_8(const Grid& g, const char* who) {
    if (g.height() % 8 != 0 || g.width() % 8 != 0)
        throw std::invalid_argument(std::string(who) + ": dimensions must be multiples of 8");
}

// Z = C * B * C^T (forward) or C^T * B * C (inverse) on one 8x8 block.
void dct_block(const Grid& in, Grid& out, int bi, int bj, bool inverse) {
    const auto& c = dct_matrix();
    double tmp[64];
    // tmp = M * B where M = C (forward) or C^T (inverse)
    for (int k = 0; k < 8; ++k)
        for (int n = 0; n < 8; ++n) {
            double acc = 0.0;
            for (int t = 0; t < 8; ++t) {
                const double m = inverse ? c[t * 8 + k] : c[k * 8 + t];
                acc += m * in(bi + t, bj + n);
            }
            tmp[k * 8 + n] = acc;
        }
    // out = tmp * M^T
    for (int k = 0; k < 8; ++k)
        for (int n = 0; n < 8; ++n) {
            double acc = 0.0;
            for (int t = 0; t < 8; ++t) {
                const double m = inverse ? c[t * 8 + n] : c[n * 8 + t];
                acc += tmp[k * 8 + t] * m;
            }
            out(bi + k, bj + n) = acc;
        }
}

Grid dct_all_blocks(const Grid& u, bool inverse) {
    Grid z(u.height(), u.width());
    for (int bi = 0; bi < u.height(); bi += 8)
        for (int bj = 0; bj < u.width(); bj += 8) dct_block(u, z, bi, bj, inverse);
    return z;
}

double grid_range(const Grid& g) {
    double lo = g.samples()[0], hi = lo;
    for (double x : g.samples()) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    return hi - lo;
}

}  // namespace

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::denoise: return "denoise";
        case Variant::inpaint: return "inpaint";
        case Variant::deconv: return "deconv";
        case Variant::superres: return "superres";
        case Variant::jpeg: return "jpeg";
    }
    return "?";
}

Variant variant_from_name(const std::string& name) {
    for (Variant v : {Variant::denoise, Variant::inpaint, Variant::deconv, Variant::superres,
                      Variant::jpeg})
        if (variant_name(v) == name) return v;
    throw std::invalid_argument("unknown variant '" + name + "'");
}

Grid QuantizedSpectrum::dequantized() const {
    Grid z(height, width);
    for (int i = 0; i < height; ++i)
        for (int j = 0; j < width; ++j) z(i, j) = step(i, j) * index(i, j);
    return z;
}

int ProblemSpec::image_h() const {
    return variant == Variant::superres ? observed.height() * factor : observed.height();
}

int ProblemSpec::image_w() const {
    return variant == Variant::superres ? observed.width() * factor : observed.width();
}

void ProblemSpec::validate() const {
    if (observed.empty()) throw std::invalid_argument("ProblemSpec: observed data missing");
    if (!observed.all_finite()) throw std::invalid_argument("ProblemSpec: observed data not finite");
    switch (variant) {
        case Variant::denoise:
            break;
        case Variant::inpaint: {
            if (!mask.same_shape(observed))
                throw std::invalid_argument("ProblemSpec: mask shape must match observed data");
            for (double m : mask.samples())
                if (m != 0.0 && m != 1.0)
                    throw std::invalid_argument("ProblemSpec: mask entries must be 0 or 1");
            break;
        }
        case Variant::deconv: {
            if (blur_kernel.empty() || blur_kernel.height() != blur_kernel.width() ||
                blur_kernel.height() % 2 == 0)
                throw std::invalid_argument("ProblemSpec: blur kernel must be odd and square");
            double s = 0.0;
            for (double x : blur_kernel.samples()) s += x;
            if (std::fabs(s - 1.0) > 1e-8)
                throw std::invalid_argument("ProblemSpec: blur kernel must sum to 1");
            break;
        }
        case Variant::superres: {
            if (factor < 1) throw std::invalid_argument("ProblemSpec: factor must be >= 1");
            break;
        }
        case Variant::jpeg: {
            if (spectrum.empty() || spectrum.height != observed.height() ||
                spectrum.width != observed.width())
                throw std::invalid_argument("ProblemSpec: spectrum missing or shape mismatch");
            if (spectrum.height % 8 != 0 || spectrum.width % 8 != 0)
                throw std::invalid_argument("ProblemSpec: spectrum dims must be multiples of 8");
            for (double q : spectrum.table)
                if (!(q > 0.0)) throw std::invalid_argument("ProblemSpec: table steps must be > 0");
            break;
        }
    }
}

CorruptionRecipe default_recipe(Variant v) {
    CorruptionRecipe r;
    r.variant = v;
    if (v == Variant::deconv) r.noise_std = 0.025;
    if (v != Variant::denoise && v != Variant::deconv) r.noise_std = 0.0;
    return r;
}

Grid apply_forward(const Grid& u, const ProblemSpec& prob) {
    switch (prob.variant) {
        case Variant::denoise: return u;
        case Variant::inpaint: {
            Grid out(u.height(), u.width());
            auto us = u.samples();
            auto ms = prob.mask.samples();
            auto os = out.samples();
            for (int k = 0; k < u.size(); ++k) os[k] = ms[k] * us[k];
            return out;
        }
        case Variant::deconv: return blur(u, prob.blur_kernel);
        case Variant::superres: return block_average(u, prob.factor);
        case Variant::jpeg: return block_dct(u);
    }
    throw std::logic_error("apply_forward: unreachable");
}

Grid apply_adjoint(const Grid& d, const ProblemSpec& prob) {
    switch (prob.variant) {
        case Variant::denoise: return d;
        case Variant::inpaint: {
            ProblemSpec p = prob;  // mask product is self-adjoint
            return apply_forward(d, p);
        }
        case Variant::deconv: return blur_adjoint(d, prob.blur_kernel);
        case Variant::superres:
            return scaled(block_replicate(d, prob.factor),
                          1.0 / (static_cast<double>(prob.factor) * prob.factor));
        case Variant::jpeg: return block_dct_inverse(d);
    }
    throw std::logic_error("apply_adjoint: unreachable");
}

ProblemSpec simulate_corruption(const Grid& truth, const CorruptionRecipe& recipe,
                                std::uint64_t seed) {
    if (truth.empty()) throw std::invalid_argument("simulate_corruption: empty truth");
    Rng rng(seed);
    ProblemSpec prob;
    prob.variant = recipe.variant;
    switch (recipe.variant) {
        case Variant::denoise: {
            const double sigma = recipe.noise_std * grid_range(truth);
            Grid y = truth;
            for (double& x : y.samples()) x += sigma * rng.next_gaussian();
            prob.observed = std::move(y);
            break;
        }
        case Variant::inpaint: {
            if (!(recipe.keep_fraction > 0.0 && recipe.keep_fraction <= 1.0))
                throw std::invalid_argument("simulate_corruption: keep_fraction outside (0,1]");
            Grid mask(truth.height(), truth.width());
            for (double& m : mask.samples()) m = rng.next_double() < recipe.keep_fraction ? 1.0 : 0.0;
            prob.mask = std::move(mask);
            prob.observed = Grid(truth.height(), truth.width());
            auto ts = truth.samples();
            auto ms = prob.mask.samples();
            auto ys = prob.observed.samples();
            for (int k = 0; k < truth.size(); ++k) ys[k] = ms[k] * ts[k];
            break;
        }
        case Variant::deconv: {
            const int s = recipe.blur_half_width;
            const double sd = recipe.blur_std_relative ? recipe.blur_std * s : recipe.blur_std;
            prob.blur_kernel = gaussian_blur_kernel(s, sd);
            Grid y = blur(truth, prob.blur_kernel);
            const double sigma = recipe.noise_std * grid_range(y);
            for (double& x : y.samples()) x += sigma * rng.next_gaussian();
            prob.observed = std::move(y);
            break;
        }
        case Variant::superres: {
            if (truth.height() % recipe.factor != 0 || truth.width() % recipe.factor != 0)
                throw std::invalid_argument("simulate_corruption: factor must divide image dims");
            prob.factor = recipe.factor;
            prob.observed = block_average(truth, recipe.factor);
            break;
        }
        case Variant::jpeg: {
            check_multiple_of_8(truth, "simulate_corruption");
            prob.spectrum = quantize_spectrum(truth, luminance_quant_table(recipe.jpeg_quality));
            prob.observed = prob.spectrum.dequantized();
            break;
        }
    }
    prob.validate();
    return prob;
}

double psnr(const Grid& u, const Grid& ref, double peak) {
    if (!u.same_shape(ref)) throw std::invalid_argument("psnr: shape mismatch");
    if (!(peak > 0.0)) throw std::invalid_argument("psnr: peak must be positive");
    double mse = 0.0;
    auto us = u.samples(), rs = ref.samples();
    for (int k = 0; k < u.size(); ++k) {
        const double d = us[k] - rs[k];
        mse += d * d;
    }
    mse /= u.size();
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const Grid& u, const Grid& ref, double peak) {
    if (!u.same_shape(ref)) throw std::invalid_argument("ssim: shape mismatch");
    constexpr int W = 8;
    if (u.height() < W || u.width() < W)
        throw std::invalid_argument("ssim: image smaller than the 8x8 window");
    static const std::array<double, W * W> weights = [] {
        std::array<double, W * W> g{};
        const double s2 = 2.0 * 1.5 * 1.5;
        double sum = 0.0;
        for (int i = 0; i < W; ++i)
            for (int j = 0; j < W; ++j) {
                const double di = i - (W - 1) / 2.0, dj = j - (W - 1) / 2.0;
                g[i * W + j] = std::exp(-(di * di + dj * dj) / s2);
                sum += g[i * W + j];
            }
        for (double& x : g) x /= sum;
        return g;
    }();
    const double c1 = (0.01 * peak) * (0.01 * peak);
    const double c2 = (0.03 * peak) * (0.03 * peak);
    double acc = 0.0;
    long count = 0;
    for (int i0 = 0; i0 + W <= u.height(); ++i0)
        for (int j0 = 0; j0 + W <= u.width(); ++j0) {
            double mx = 0, my = 0;
            for (int i = 0; i < W; ++i)
                for (int j = 0; j < W; ++j) {
                    const double wgt = weights[i * W + j];
                    mx += wgt * u(i0 + i, j0 + j);
                    my += wgt * ref(i0 + i, j0 + j);
                }
            double vx = 0, vy = 0, cov = 0;
            for (int i = 0; i < W; ++i)
                for (int j = 0; j < W; ++j) {
                    const double wgt = weights[i * W + j];
                    const double dx = u(i0 + i, j0 + j) - mx;
                    const double dy = ref(i0 + i, j0 + j) - my;
                    vx += wgt * dx * dx;
                    vy += wgt * dy * dy;
                    cov += wgt * dx * dy;
                }
            acc += ((2 * mx * my + c1) * (2 * cov + c2)) /
                   ((mx * mx + my * my + c1) * (vx + vy + c2));
            ++count;
        }
    return acc / count;
}

Grid gaussian_blur_kernel(int half_width, double std_dev) {
    if (half_width < 0) throw std::invalid_argument("gaussian_blur_kernel: negative half width");
    if (!(std_dev > 0.0)) throw std::invalid_argument("gaussian_blur_kernel: std must be positive");
    const int n = 2 * half_width + 1;
    Grid k(n, n);
    double sum = 0.0;
    for (int i = -half_width; i <= half_width; ++i)
        for (int j = -half_width; j <= half_width; ++j) {
            const double v = std::exp(-(i * i + j * j) / (2.0 * std_dev * std_dev));
            k(i + half_width, j + half_width) = v;
            sum += v;
        }
    for (double& x : k.samples()) x /= sum;
    return k;
}

Grid blur(const Grid& u, const Grid& kernel) {
    const int s = kernel.height() / 2;
    Grid out(u.height(), u.width());
    // out(i,j) = sum_{a,b in [-s,s]} k(s+a, s+b) * u(i-a, j-b), zero outside
    for (int i = 0; i < u.height(); ++i)
        for (int j = 0; j < u.width(); ++j) {
            double acc = 0.0;
            const int a0 = std::max(-s, i - (u.height() - 1)), a1 = std::min(s, i);
            const int b0 = std::max(-s, j - (u.width() - 1)), b1 = std::min(s, j);
            for (int a = a0; a <= a1; ++a) {
                const double* kr = kernel.row(s + a);
                const double* ur = u.row(i - a);
                for (int b = b0; b <= b1; ++b) acc += kr[s + b] * ur[j - b];
            }
            out(i, j) = acc;
        }
    return out;
}

Grid blur_adjoint(const Grid& d, const Grid& kernel) {
    const int s = kernel.height() / 2;
    Grid out(d.height(), d.width());
    // out(p,q) = sum_{a,b} k(s+a, s+b) * d(p+a, q+b), zero outside
    for (int p = 0; p < d.height(); ++p)
        for (int q = 0; q < d.width(); ++q) {
            double acc = 0.0;
            const int a0 = std::max(-s, -p), a1 = std::min(s, d.height() - 1 - p);
            const int b0 = std::max(-s, -q), b1 = std::min(s, d.width() - 1 - q);
            for (int a = a0; a <= a1; ++a) {
                const double* kr = kernel.row(s + a);
                const double* dr = d.row(p + a);
                for (int b = b0; b <= b1; ++b) acc += kr[s + b] * dr[q + b];
            }
            out(p, q) = acc;
        }
    return out;
}

Grid block_average(const Grid& u, int factor) {
    if (factor < 1 || u.height() % factor != 0 || u.width() % factor != 0)
        throw std::invalid_argument("block_average: factor must divide both dimensions");
    Grid y(u.height() / factor, u.width() / factor);
    const double inv = 1.0 / (static_cast<double>(factor) * factor);
    for (int bi = 0; bi < y.height(); ++bi)
        for (int bj = 0; bj < y.width(); ++bj) {
            double acc = 0.0;
            for (int i = 0; i < factor; ++i) {
                const double* r = u.row(bi * factor + i) + bj * factor;
                for (int j = 0; j < factor; ++j) acc += r[j];
            }
            y(bi, bj) = acc * inv;
        }
    return y;
}

Grid block_replicate(const Grid& y, int factor) {
    Grid u(y.height() * factor, y.width() * factor);
    for (int i = 0; i < u.height(); ++i) {
        const double* src = y.row(i / factor);
        double* dst = u.row(i);
        for (int j = 0; j < u.width(); ++j) dst[j] = src[j / factor];
    }
    return u;
}

Grid block_dct(const Grid& u) {
    check_multiple_of_8(u, "block_dct");
    return dct_all_blocks(u, false);
}

Grid block_dct_inverse(const Grid& z) {
    check_multiple_of_8(z, "block_dct_inverse");
    return dct_all_blocks(z, true);
}

std::array<double, 64> luminance_quant_table(int quality) {
    if (quality < 1 || quality > 100)
        throw std::invalid_argument("luminance_quant_table: quality outside [1,100]");
    // standard luminance base table
    static constexpr int base[64] = {
        16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
        14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
        18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
        49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};
    const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
    std::array<double, 64> t{};
    for (int k = 0; k < 64; ++k) {
        int v = (base[k] * scale + 50) / 100;
        v = std::clamp(v, 1, 255);
        t[k] = v / 255.0;  // images carry unit range
    }
    return t;
}

QuantizedSpectrum quantize_spectrum(const Grid& u, const std::array<double, 64>& table) {
    check_multiple_of_8(u, "quantize_spectrum");
    const Grid z = block_dct(u);
    QuantizedSpectrum spec;
    spec.height = u.height();
    spec.width = u.width();
    spec.table = table;
    spec.indices.resize(static_cast<std::size_t>(u.height()) * u.width());
    for (int i = 0; i < u.height(); ++i)
        for (int j = 0; j < u.width(); ++j)
            // llround rounds halves away from zero
            spec.indices[static_cast<std::size_t>(i) * u.width() + j] =
                static_cast<std::int32_t>(std::llround(z(i, j) / spec.step(i, j)));
    return spec;
}

void save_spectrum(const QuantizedSpectrum& spec, const std::filesystem::path& path, bool binary) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("save_spectrum: cannot open " + path.string());
    out << "QSPEC " << (binary ? "binary" : "text") << "\n";
    out << spec.height << " " << spec.width << "\n";
    out.precision(17);
    for (int k = 0; k < 64; ++k) out << spec.table[k] << (k == 63 ? '\n' : ' ');
    if (binary) {
        static_assert(std::endian::native == std::endian::little,
                      "binary spectrum siding assumes a little-endian host");
        out.write(reinterpret_cast<const char*>(spec.indices.data()),
                  static_cast<std::streamsize>(spec.indices.size() * sizeof(std::int32_t)));
    } else {
        for (std::size_t k = 0; k < spec.indices.size(); ++k)
            out << spec.indices[k] << ((k + 1) % static_cast<std::size_t>(spec.width) == 0 ? '\n' : ' ');
    }
    if (!out) throw IoError("save_spectrum: write failed for " + path.string());
}

QuantizedSpectrum load_spectrum(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("load_spectrum: cannot open " + path.string());
    std::string magic, mode;
    in >> magic >> mode;
    if (magic != "QSPEC" || (mode != "text" && mode != "binary"))
        throw IoError("load_spectrum: not a QSPEC file: " + path.string());
    QuantizedSpectrum spec;
    in >> spec.height >> spec.width;
    if (!in || spec.height <= 0 || spec.width <= 0 || spec.height % 8 || spec.width % 8)
        throw IoError("load_spectrum: bad dimensions in " + path.string());
    for (double& q : spec.table) in >> q;
    if (!in) throw IoError("load_spectrum: truncated table in " + path.string());
    const std::size_t count = static_cast<std::size_t>(spec.height) * spec.width;
    spec.indices.resize(count);
    if (mode == "binary") {
        in.ignore(1);  // newline ending the header
        in.read(reinterpret_cast<char*>(spec.indices.data()),
                static_cast<std::streamsize>(count * sizeof(std::int32_t)));
        if (static_cast<std::size_t>(in.gcount()) != count * sizeof(std::int32_t))
            throw IoError("load_spectrum: truncated payload in " + path.string());
    } else {
        for (auto& k : spec.indices) in >> k;
        if (!in) throw IoError("load_spectrum: truncated payload in " + path.string());
    }
    return spec;
}

}  // namespace genreg
