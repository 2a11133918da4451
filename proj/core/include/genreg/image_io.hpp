#pragma once

#include <filesystem>
#include <stdexcept>

#include "genreg/grid.hpp"

namespace genreg {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Reads an 8- or 16-bit grayscale PNG or PGM (binary P5 or ASCII P2) into
// [0,1] by dividing by the format maximum.  Color or palette inputs are
// rejected with an IoError naming the file.
Grid load_image(const std::filesystem::path& path);

// Clamps to [0,1], quantizes to the requested depth (8 or 16 bits) by
// rounding, and writes PNG or binary PGM depending on the file extension.
void save_image(const Grid& image, const std::filesystem::path& path, int bit_depth = 8);

}  // namespace genreg
