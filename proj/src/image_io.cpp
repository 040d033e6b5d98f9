#include "phop/image_io.hpp"

#include <fcntl.h>
#include <png.h>
#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <cstring>

#include "phop/errors.hpp"

namespace phop {

namespace {

struct FileCloser {
  std::FILE* f = nullptr;
  ~FileCloser() {
    if (f) std::fclose(f);
  }
};

}  // namespace

ImageTensor read_png_gray(const std::filesystem::path& path) {
  FileCloser file{std::fopen(path.c_str(), "rb")};
  if (!file.f)
    throw IoError("cannot open image '" + path.string() + "': " +
                  std::strerror(errno));

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng initialization failed");
  }

  std::vector<std::uint8_t> pixels;
  std::vector<png_bytep> rows;
  png_uint_32 width = 0, height = 0;
  int channels = 0;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("cannot decode image '" + path.string() + "'");
  }

  png_init_io(png, file.f);
  png_read_info(png, info);
  width = png_get_image_width(png, info);
  height = png_get_image_height(png, info);

  // Normalize every input to 8-bit gray or RGB without alpha.
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  if (png_get_color_type(png, info) == PNG_COLOR_TYPE_PALETTE)
    png_set_palette_to_rgb(png);
  if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY &&
      png_get_bit_depth(png, info) < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  png_read_update_info(png, info);

  channels = png_get_channels(png, info);
  if (channels != 1 && channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("unsupported channel layout in '" + path.string() + "'");
  }

  pixels.resize(std::size_t(width) * height * channels);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y)
    rows[y] = pixels.data() + std::size_t(y) * width * channels;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  ImageTensor out(height, width, 1);
  if (channels == 1) {
    for (std::size_t i = 0; i < out.data.size(); ++i)
      out.data[i] = pixels[i] / 255.0;
  } else {
    for (std::size_t i = 0; i < out.data.size(); ++i) {
      const std::uint8_t* px = &pixels[i * 3];
      out.data[i] = (0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2]) / 255.0;
    }
  }
  return out;
}

void write_png_gray(const std::filesystem::path& path, std::size_t height,
                    std::size_t width, const std::uint8_t* data) {
  const int fd = ::open(path.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0)
    throw IoError("cannot create '" + path.string() + "': " +
                  std::strerror(errno));
  FileCloser file{::fdopen(fd, "wb")};
  if (!file.f) {
    ::close(fd);
    throw IoError("cannot open '" + path.string() + "' for writing");
  }

  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("cannot encode '" + path.string() + "'");
  }

  png_init_io(png, file.f);
  png_set_IHDR(png, info, png_uint_32(width), png_uint_32(height), 8,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::size_t y = 0; y < height; ++y)
    png_write_row(png, const_cast<png_bytep>(data + y * width));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

ImageTensor resize_bilinear(const ImageTensor& image, std::size_t out_h,
                            std::size_t out_w) {
  if (image.height == 0 || image.width == 0 || out_h == 0 || out_w == 0)
    throw DimensionError("resize_bilinear: empty image or target");
  if (out_h == image.height && out_w == image.width) return image;

  ImageTensor out(out_h, out_w, image.channels);
  const double sy = double(image.height) / double(out_h);
  const double sx = double(image.width) / double(out_w);
  for (std::size_t r = 0; r < out_h; ++r) {
    const double fy = double(r) * sy;
    std::size_t y0 = std::size_t(fy);
    if (y0 >= image.height - 1) y0 = image.height - 1;
    const std::size_t y1 = std::min(y0 + 1, image.height - 1);
    const double wy = fy - double(y0);
    for (std::size_t c = 0; c < out_w; ++c) {
      const double fx = double(c) * sx;
      std::size_t x0 = std::size_t(fx);
      if (x0 >= image.width - 1) x0 = image.width - 1;
      const std::size_t x1 = std::min(x0 + 1, image.width - 1);
      const double wx = fx - double(x0);
      for (std::size_t ch = 0; ch < image.channels; ++ch) {
        const double top = (1.0 - wx) * image.at(y0, x0, ch) +
                           wx * image.at(y0, x1, ch);
        const double bot = (1.0 - wx) * image.at(y1, x0, ch) +
                           wx * image.at(y1, x1, ch);
        out.at(r, c, ch) = (1.0 - wy) * top + wy * bot;
      }
    }
  }
  return out;
}

}  // namespace phop
