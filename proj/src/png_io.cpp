#include <png.h>

#include <cstdio>
#include <memory>
#include <vector>

#include "fignet/common.hpp"
#include "fignet/render.hpp"

namespace fignet {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

void write_png(const std::string& path, const ImageU8& img) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw LoadError("cannot open for writing: " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw LoadError("libpng init failed for: " + path);
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw LoadError("png write failed: " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height),
                 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(static_cast<std::size_t>(img.height));
    for (int y = 0; y < img.height; ++y)
        rows[static_cast<std::size_t>(y)] = const_cast<png_bytep>(img.px(y, 0));
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

ImageU8 read_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw LoadError("cannot open: " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw LoadError("libpng init failed for: " + path);
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw LoadError("png read failed: " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    // normalize anything we might meet to 8-bit RGB
    png_set_strip_16(png);
    png_set_palette_to_rgb(png);
    png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY ||
        png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png);
    png_read_update_info(png, info);

    ImageU8 img(static_cast<int>(png_get_image_height(png, info)),
                static_cast<int>(png_get_image_width(png, info)));
    if (png_get_rowbytes(png, info) != static_cast<std::size_t>(img.width) * 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw LoadError("unexpected png row size: " + path);
    }
    std::vector<png_bytep> rows(static_cast<std::size_t>(img.height));
    for (int y = 0; y < img.height; ++y) rows[static_cast<std::size_t>(y)] = img.px(y, 0);
    png_read_image(png, rows.data());
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

}  // namespace fignet
