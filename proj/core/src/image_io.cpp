#include "genreg/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <vector>

namespace genreg {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

Grid load_png(const std::filesystem::path& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw IoError("cannot open " + path.string());

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("libpng allocation failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("libpng allocation failed");
    }
    std::vector<std::vector<png_byte>> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("failed to decode PNG " + path.string());
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    const png_byte color = png_get_color_type(png, info);
    png_byte depth = png_get_bit_depth(png, info);
    if (color != PNG_COLOR_TYPE_GRAY) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError(path.string() + ": only grayscale PNG is supported");
    }
    if (depth < 8) {
        png_set_expand_gray_1_2_4_to_8(png);
        depth = 8;
    }
    if (depth == 16) png_set_swap(png);  // stream is big-endian
    png_read_update_info(png, info);

    const int h = static_cast<int>(png_get_image_height(png, info));
    const int w = static_cast<int>(png_get_image_width(png, info));
    rows.assign(h, std::vector<png_byte>(png_get_rowbytes(png, info)));
    std::vector<png_bytep> row_ptrs(h);
    for (int i = 0; i < h; ++i) row_ptrs[i] = rows[i].data();
    png_read_image(png, row_ptrs.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    Grid g(h, w);
    const double scale = depth == 16 ? 65535.0 : 255.0;
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) {
            if (depth == 16) {
                std::uint16_t v;
                std::memcpy(&v, rows[i].data() + 2 * j, 2);
                g(i, j) = v / scale;
            } else {
                g(i, j) = rows[i][j] / scale;
            }
        }
    return g;
}

void save_png(const Grid& image, const std::filesystem::path& path, int bit_depth) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw IoError("cannot open " + path.string() + " for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("libpng allocation failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("libpng allocation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("failed to encode PNG " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, image.width(), image.height(), bit_depth, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    if (bit_depth == 16) png_set_swap(png);

    const double maxv = bit_depth == 16 ? 65535.0 : 255.0;
    std::vector<png_byte> row(static_cast<std::size_t>(image.width()) * (bit_depth / 8));
    for (int i = 0; i < image.height(); ++i) {
        for (int j = 0; j < image.width(); ++j) {
            const double clamped = std::clamp(image(i, j), 0.0, 1.0);
            const auto q = static_cast<std::uint16_t>(std::lround(clamped * maxv));
            if (bit_depth == 16)
                std::memcpy(row.data() + 2 * j, &q, 2);
            else
                row[j] = static_cast<png_byte>(q);
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

int next_pnm_token(std::istream& in) {
    // skips whitespace and '#' comments, returns a nonnegative int
    for (;;) {
        int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            break;
        }
    }
    int v = -1;
    in >> v;
    return v;
}

Grid load_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    char p = 0, kind = 0;
    in.get(p);
    in.get(kind);
    if (p != 'P' || (kind != '2' && kind != '5'))
        throw IoError(path.string() + ": only P2/P5 PGM is supported");
    const int w = next_pnm_token(in);
    const int h = next_pnm_token(in);
    const int maxv = next_pnm_token(in);
    if (w <= 0 || h <= 0 || (maxv != 255 && maxv != 65535))
        throw IoError(path.string() + ": PGM maxval must be 255 or 65535");
    Grid g(h, w);
    if (kind == '2') {
        for (auto& x : g.samples()) {
            const int v = next_pnm_token(in);
            if (v < 0 || v > maxv) throw IoError(path.string() + ": truncated or out-of-range PGM");
            x = static_cast<double>(v) / maxv;
        }
    } else {
        in.get();  // single whitespace after header
        const int bytes = maxv == 255 ? 1 : 2;
        std::vector<unsigned char> buf(static_cast<std::size_t>(w) * h * bytes);
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        if (static_cast<std::size_t>(in.gcount()) != buf.size())
            throw IoError(path.string() + ": truncated PGM payload");
        auto s = g.samples();
        for (int k = 0; k < g.size(); ++k)
            s[k] = bytes == 1 ? buf[k] / 255.0
                              : ((buf[2 * k] << 8) | buf[2 * k + 1]) / 65535.0;  // big-endian
    }
    return g;
}

void save_pgm(const Grid& image, const std::filesystem::path& path, int bit_depth) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    const int maxv = bit_depth == 16 ? 65535 : 255;
    out << "P5\n" << image.width() << " " << image.height() << "\n" << maxv << "\n";
    for (int i = 0; i < image.height(); ++i)
        for (int j = 0; j < image.width(); ++j) {
            const double clamped = std::clamp(image(i, j), 0.0, 1.0);
            const long q = std::lround(clamped * maxv);
            if (bit_depth == 16) {
                out.put(static_cast<char>((q >> 8) & 0xff));
                out.put(static_cast<char>(q & 0xff));
            } else {
                out.put(static_cast<char>(q));
            }
        }
    if (!out) throw IoError("write failed for " + path.string());
}

bool has_extension(const std::filesystem::path& path, const char* ext) {
    std::string e = path.extension().string();
    std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
    return e == ext;
}

}  // namespace

Grid load_image(const std::filesystem::path& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw IoError("cannot open " + path.string());
    char magic[2] = {0, 0};
    probe.read(magic, 2);
    probe.close();
    if (magic[0] == 'P' && (magic[1] == '2' || magic[1] == '5')) return load_pgm(path);
    if (magic[0] == '\x89' && magic[1] == 'P') return load_png(path);
    throw IoError(path.string() + ": unsupported image format (grayscale PNG or PGM expected)");
}

void save_image(const Grid& image, const std::filesystem::path& path, int bit_depth) {
    if (image.empty()) throw IoError("save_image: empty image");
    if (bit_depth != 8 && bit_depth != 16) throw IoError("save_image: bit depth must be 8 or 16");
    if (has_extension(path, ".pgm"))
        save_pgm(image, path, bit_depth);
    else
        save_png(image, path, bit_depth);
}

}  // namespace genreg
