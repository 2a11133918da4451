#include "genreg/grid.hpp"

#include <cmath>
#include <stdexcept>

namespace genreg {

namespace {

std::size_t checked_count(int h, int w) {
    if (h <= 0 || w <= 0) throw std::invalid_argument("Grid: dimensions must be positive");
    return static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
}

}  // namespace

Grid::Grid(int height, int width) : h_(height), w_(width), v_(checked_count(height, width), 0.0) {}

Grid::Grid(int height, int width, std::vector<double> samples)
    : h_(height), w_(width), v_(std::move(samples)) {
    if (v_.size() != checked_count(height, width))
        throw std::invalid_argument("Grid: sample count does not match dimensions");
}

Grid Grid::constant(int height, int width, double value) {
    Grid g(height, width);
    for (double& x : g.v_) x = value;
    return g;
}

bool Grid::all_finite() const {
    for (double x : v_)
        if (!std::isfinite(x)) return false;
    return true;
}

double normalized_norm(const Grid& g, double p) {
    if (g.empty()) throw std::invalid_argument("normalized_norm: empty grid");
    if (p < 1.0) throw std::invalid_argument("normalized_norm: requires p >= 1");
    double acc = 0.0;
    if (p == 1.0) {
        for (double x : g.samples()) acc += std::fabs(x);
    } else if (p == 2.0) {
        for (double x : g.samples()) acc += x * x;
    } else {
        for (double x : g.samples()) acc += std::pow(std::fabs(x), p);
    }
    acc /= static_cast<double>(g.size());
    return p == 1.0 ? acc : (p == 2.0 ? std::sqrt(acc) : std::pow(acc, 1.0 / p));
}

double raw_sq_norm(const Grid& g) {
    double acc = 0.0;
    for (double x : g.samples()) acc += x * x;
    return acc;
}

GradientField discrete_gradient(const Grid& u) {
    const int h = u.height(), w = u.width();
    GradientField f;
    f.height = h;
    f.width = w;
    f.d1.assign(static_cast<std::size_t>(h) * w, 0.0);
    f.d2.assign(static_cast<std::size_t>(h) * w, 0.0);
    for (int i = 0; i < h; ++i) {
        const double* r = u.row(i);
        const double* rn = i + 1 < h ? u.row(i + 1) : nullptr;
        double* t1 = f.d1.data() + static_cast<std::size_t>(i) * w;
        double* t2 = f.d2.data() + static_cast<std::size_t>(i) * w;
        for (int j = 0; j < w; ++j) {
            if (rn) t1[j] = rn[j] - r[j];
            if (j + 1 < w) t2[j] = r[j + 1] - r[j];
        }
    }
    return f;
}

Grid gradient_adjoint(const GradientField& f) {
    const int h = f.height, w = f.width;
    if (h <= 0 || w <= 0 || f.d1.size() != static_cast<std::size_t>(h) * w ||
        f.d2.size() != static_cast<std::size_t>(h) * w)
        throw std::invalid_argument("gradient_adjoint: malformed field");
    Grid g(h, w);
    // Negative divergence: entries of f on the trailing row (d1) / column
    // (d2) are never read, mirroring the zeros the forward map writes there.
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) {
            double acc = 0.0;
            if (i > 0) acc += f.d1_at(i - 1, j);
            if (i + 1 < h) acc -= f.d1_at(i, j);
            if (j > 0) acc += f.d2_at(i, j - 1);
            if (j + 1 < w) acc -= f.d2_at(i, j);
            g(i, j) = acc;
        }
    return g;
}

Grid lincomb(double a, const Grid& x, double b, const Grid& y) {
    if (!x.same_shape(y)) throw std::invalid_argument("lincomb: shape mismatch");
    Grid out(x.height(), x.width());
    auto xs = x.samples(), ys = y.samples();
    auto os = out.samples();
    for (int k = 0; k < x.size(); ++k) os[k] = a * xs[k] + b * ys[k];
    return out;
}

Grid sub(const Grid& x, const Grid& y) { return lincomb(1.0, x, -1.0, y); }

Grid scaled(const Grid& x, double a) {
    Grid out(x.height(), x.width());
    auto xs = x.samples();
    auto os = out.samples();
    for (int k = 0; k < x.size(); ++k) os[k] = a * xs[k];
    return out;
}

double dot(const Grid& x, const Grid& y) {
    if (!x.same_shape(y)) throw std::invalid_argument("dot: shape mismatch");
    double acc = 0.0;
    auto xs = x.samples(), ys = y.samples();
    for (int k = 0; k < x.size(); ++k) acc += xs[k] * ys[k];
    return acc;
}

void accumulate(Grid& x, const Grid& y, double a) {
    if (!x.same_shape(y)) throw std::invalid_argument("accumulate: shape mismatch");
    auto xs = x.samples();
    auto ys = y.samples();
    for (int k = 0; k < x.size(); ++k) xs[k] += a * ys[k];
}

}  // namespace genreg
