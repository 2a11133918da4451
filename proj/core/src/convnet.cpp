#include "genreg/convnet.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "genreg/parallel.hpp"

namespace genreg {

namespace {

int ceil_div(int a, int b) { return (a + b - 1) / b; }

void check_interp_target(int m, int stride, int target, const char* axis) {
    if (target < stride * (m - 1) + 1 || target > stride * m)
        throw std::invalid_argument(std::string("zero_interpolate: target ") + axis +
                                    " outside [s*(M-1)+1, s*M]");
}

}  // namespace

SizePlan derive_size_plan(int image_h, int image_w, const ModelConfig& config) {
    if (image_h < 1 || image_w < 1)
        throw std::invalid_argument("derive_size_plan: image dimensions must be positive");
    config.validate();
    const int r = config.kernel_size;
    if (image_h < r || image_w < r)
        throw std::invalid_argument("derive_size_plan: image smaller than the kernel");
    SizePlan plan;
    plan.image_h = image_h;
    plan.image_w = image_w;
    plan.kernel = r;
    plan.layers = config.layers;
    plan.stride = config.strides;
    plan.latent.resize(config.layers);
    plan.interp.resize(config.layers);
    int prev_h = image_h, prev_w = image_w;
    for (int l = 0; l < config.layers; ++l) {
        const int s = config.strides[l];
        const int ih = prev_h + r - 1;
        const int iw = prev_w + r - 1;
        const int mh = l == 0 ? ih : ceil_div(ih, s);  // layer 0 has stride 1
        const int mw = l == 0 ? iw : ceil_div(iw, s);
        if (mh < r || mw < r)
            throw std::invalid_argument("derive_size_plan: latent at layer " + std::to_string(l + 1) +
                                        " smaller than the kernel");
        plan.interp[l] = {ih, iw};
        plan.latent[l] = {mh, mw};
        prev_h = mh;
        prev_w = mw;
    }
    return plan;
}

LatentStack zero_latents(const SizePlan& plan, const std::vector<int>& channels) {
    LatentStack mu;
    mu.layers.resize(plan.layers);
    for (int l = 0; l < plan.layers; ++l)
        mu.layers[l].assign(channels[l], Grid(plan.latent[l][0], plan.latent[l][1]));
    return mu;
}

KernelSet random_kernels(const ModelConfig& config, Rng& rng) {
    const int r = config.kernel_size;
    const double lim = 1.0 / r;
    KernelSet theta;
    theta.layers.resize(config.layers);
    for (int l = 0; l < config.layers; ++l) {
        theta.layers[l].reserve(config.channels[l]);
        for (int n = 0; n < config.channels[l]; ++n) {
            Grid k(r, r);
            for (double& x : k.samples()) x = rng.uniform(-lim, lim);
            theta.layers[l].push_back(std::move(k));
        }
    }
    return theta;
}

Grid zero_interpolate(const Grid& mu, int stride, int target_h, int target_w) {
    if (stride < 1) throw std::invalid_argument("zero_interpolate: stride must be >= 1");
    check_interp_target(mu.height(), stride, target_h, "height");
    check_interp_target(mu.width(), stride, target_w, "width");
    Grid out(target_h, target_w);
    for (int i = 0; i < mu.height(); ++i) {
        const double* src = mu.row(i);
        double* dst = out.row(i * stride);
        for (int j = 0; j < mu.width(); ++j) dst[j * stride] = src[j];
    }
    return out;
}

Grid valid_convolve(const Grid& in, const Grid& kernel) {
    const int kh = kernel.height(), kw = kernel.width();
    const int oh = in.height() - kh + 1, ow = in.width() - kw + 1;
    if (oh < 1 || ow < 1) throw std::invalid_argument("valid_convolve: kernel larger than input");
    Grid out(oh, ow);
    for (int n = 0; n < oh; ++n) {
        double* dst = out.row(n);
        for (int i = 0; i < kh; ++i) {
            const double* src = in.row(n + kh - 1 - i);
            const double* ker = kernel.row(i);
            for (int j = 0; j < kw; ++j) {
                const double kv = ker[j];
                if (kv == 0.0) continue;
                const double* s = src + (kw - 1 - j);
                for (int m = 0; m < ow; ++m) dst[m] += kv * s[m];
            }
        }
    }
    return out;
}

Grid strided_upconvolve(const Grid& mu, const Grid& kernel, int stride, int target_h,
                        int target_w) {
    return valid_convolve(zero_interpolate(mu, stride, target_h, target_w), kernel);
}

Grid upconv_adjoint_latent(const Grid& resid, const Grid& kernel, int stride, int latent_h,
                           int latent_w, int target_h, int target_w) {
    check_interp_target(latent_h, stride, target_h, "height");
    check_interp_target(latent_w, stride, target_w, "width");
    const int kh = kernel.height(), kw = kernel.width();
    const int oh = target_h - kh + 1, ow = target_w - kw + 1;
    if (resid.height() != oh || resid.width() != ow)
        throw std::invalid_argument("upconv_adjoint_latent: residual shape mismatch");
    // Full correlation of the residual with the kernel, sampled on the
    // interpolation lattice: g(k,l) = sum_{i,j} ker(i,j) * resid(s*k-(kh-1)+i, s*l-(kw-1)+j).
    Grid g(latent_h, latent_w);
    for (int k = 0; k < latent_h; ++k)
        for (int l = 0; l < latent_w; ++l) {
            const int p = k * stride - (kh - 1);
            const int q = l * stride - (kw - 1);
            double acc = 0.0;
            const int i0 = p < 0 ? -p : 0;
            const int i1 = std::min(kh, oh - p);
            const int j0 = q < 0 ? -q : 0;
            const int j1 = std::min(kw, ow - q);
            for (int i = i0; i < i1; ++i) {
                const double* ker = kernel.row(i);
                const double* rr = resid.row(p + i);
                for (int j = j0; j < j1; ++j) acc += ker[j] * rr[q + j];
            }
            g(k, l) = acc;
        }
    return g;
}

Grid upconv_adjoint_kernel(const Grid& resid, const Grid& mu, int stride, int kernel_h,
                           int kernel_w, int target_h, int target_w) {
    const Grid interp = zero_interpolate(mu, stride, target_h, target_w);
    const int oh = target_h - kernel_h + 1, ow = target_w - kernel_w + 1;
    if (resid.height() != oh || resid.width() != ow)
        throw std::invalid_argument("upconv_adjoint_kernel: residual shape mismatch");
    // G(i,j) = sum_{n,m} interp(n+kh-1-i, m+kw-1-j) * resid(n,m)
    Grid g(kernel_h, kernel_w);
    for (int i = 0; i < kernel_h; ++i)
        for (int j = 0; j < kernel_w; ++j) {
            double acc = 0.0;
            for (int n = 0; n < oh; ++n) {
                const double* src = interp.row(n + kernel_h - 1 - i) + (kernel_w - 1 - j);
                const double* rr = resid.row(n);
                for (int m = 0; m < ow; ++m) acc += src[m] * rr[m];
            }
            g(i, j) = acc;
        }
    return g;
}

Grid synthesize(const LatentStack& mu, const KernelSet& theta, const SizePlan& plan) {
    const int channels = static_cast<int>(mu.layers[0].size());
    std::vector<Grid> parts(channels);
    parallel_for(channels, [&](int n) {
        parts[n] = strided_upconvolve(mu.layers[0][n], theta.layers[0][n], plan.stride[0],
                                      plan.interp[0][0], plan.interp[0][1]);
    });
    Grid v(plan.image_h, plan.image_w);
    for (int n = 0; n < channels; ++n) accumulate(v, parts[n]);
    return v;
}

Grid sample_delta(const KernelSet& theta, const SizePlan& plan, int layer, int channel, int row,
                  int col) {
    if (layer < 0 || layer >= plan.layers) throw std::invalid_argument("sample_delta: bad layer");
    if (channel < 0 || channel >= static_cast<int>(theta.layers[layer].size()))
        throw std::invalid_argument("sample_delta: bad channel");
    const auto [mh, mw] = plan.latent[layer];
    if (row < 0 || row >= mh || col < 0 || col >= mw)
        throw std::invalid_argument("sample_delta: position outside the latent grid");
    Grid cur(mh, mw);
    cur(row, col) = 1.0;
    for (int l = layer; l >= 1; --l)
        cur = strided_upconvolve(cur, theta.layers[l][channel], plan.stride[l], plan.interp[l][0],
                                 plan.interp[l][1]);
    return strided_upconvolve(cur, theta.layers[0][channel], plan.stride[0], plan.interp[0][0],
                              plan.interp[0][1]);
}

}  // namespace genreg
