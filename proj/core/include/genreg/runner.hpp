#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "genreg/ipalm.hpp"
#include "genreg/runconfig.hpp"

namespace genreg {

// Affine display rescale of a signed grid onto [0,1]; lo/hi report the
// original range (lo == hi collapses to mid-gray).
struct Rescaled {
    Grid image;
    double lo = 0.0, hi = 0.0;
};
Rescaled affine_rescale(const Grid& g);

// Tiles same-shaped grids horizontally with a one-pixel separator.
Grid montage_row(const std::vector<Grid>& tiles, double separator_value = 0.5);

// Learned kernel bank with enough structure metadata to rebuild the size
// plan; a text sidecar so runs can be resampled later.
void save_kernel_bank(const KernelSet& theta, const ModelConfig& config, int image_h, int image_w,
                      const std::filesystem::path& path);
struct KernelBank {
    KernelSet theta;
    ModelConfig config;
    int image_h = 0, image_w = 0;
};
KernelBank load_kernel_bank(const std::filesystem::path& path);

// Blur kernel sidecar (deconvolution): size line plus row-major taps.
void save_blur_kernel(const Grid& kernel, const std::filesystem::path& path);
Grid load_blur_kernel(const std::filesystem::path& path);

// Fixed-format objective trace; byte-identical for identical run inputs.
void write_trace_csv(const std::vector<TraceRow>& trace, const std::filesystem::path& path);

// Executes one CLI command end to end: builds the problem, runs the solver
// (or the simulator / the delta sampler) and emits every artifact under the
// configured output location.  Throws ConfigError / IoError / SolverError.
void run_application(const RunConfig& cfg);

}  // namespace genreg
