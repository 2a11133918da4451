#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace genreg {

// Rectangular grid of double samples in row-major order.  The shared value
// type for images, latent channels and filter kernels.  Operations hand back
// fresh grids; nothing mutates a caller's grid in place.
class Grid {
public:
    Grid() = default;

    // zero-initialized height x width grid
    Grid(int height, int width);

    Grid(int height, int width, std::vector<double> samples);

    static Grid constant(int height, int width, double value);

    int height() const { return h_; }
    int width() const { return w_; }
    int size() const { return h_ * w_; }
    bool empty() const { return v_.empty(); }
    bool same_shape(const Grid& o) const { return h_ == o.h_ && w_ == o.w_; }

    double operator()(int i, int j) const {
        assert(i >= 0 && i < h_ && j >= 0 && j < w_);
        return v_[static_cast<std::size_t>(i) * w_ + j];
    }
    double& operator()(int i, int j) {
        assert(i >= 0 && i < h_ && j >= 0 && j < w_);
        return v_[static_cast<std::size_t>(i) * w_ + j];
    }

    const double* row(int i) const { return v_.data() + static_cast<std::size_t>(i) * w_; }
    double* row(int i) { return v_.data() + static_cast<std::size_t>(i) * w_; }

    std::span<const double> samples() const { return v_; }
    std::span<double> samples() { return v_; }

    bool all_finite() const;

private:
    int h_ = 0, w_ = 0;
    std::vector<double> v_;
};

// Forward-difference gradient of a grid: d1 differences down rows, d2 across
// columns, both zero on the trailing row/column respectively.
struct GradientField {
    int height = 0, width = 0;
    std::vector<double> d1, d2;  // row-major, same layout as Grid

    double d1_at(int i, int j) const { return d1[static_cast<std::size_t>(i) * width + j]; }
    double d2_at(int i, int j) const { return d2[static_cast<std::size_t>(i) * width + j]; }
};

// ((1/(h*w)) * sum |g|^p)^(1/p); requires p >= 1 and a non-empty grid.
// All model energy terms measure grids with this entry-count-normalized norm.
double normalized_norm(const Grid& g, double p);

// Plain sum of squares, no normalization.  Step-size control, descent checks
// and prox quadratics use this raw inner-product norm.
double raw_sq_norm(const Grid& g);

GradientField discrete_gradient(const Grid& u);

// Exact adjoint of discrete_gradient under the unnormalized inner product:
// <discrete_gradient(u), f> == <u, gradient_adjoint(f)> for every u, f.
Grid gradient_adjoint(const GradientField& f);

// --- small arithmetic helpers shared by the solver ---------------------

// a*x + b*y, shapes must match
Grid lincomb(double a, const Grid& x, double b, const Grid& y);
Grid sub(const Grid& x, const Grid& y);
Grid scaled(const Grid& x, double a);
double dot(const Grid& x, const Grid& y);
void accumulate(Grid& x, const Grid& y, double a = 1.0);  // x += a*y (internal use)

}  // namespace genreg
