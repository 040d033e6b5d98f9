#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "phop/types.hpp"

namespace phop {

/// Decode a PNG to a grayscale tensor in [0,1]. Color inputs are reduced
/// with the usual luma weights (0.299, 0.587, 0.114); alpha is ignored.
ImageTensor read_png_gray(const std::filesystem::path& path);

/// Write 8-bit grayscale PNG. Refuses to overwrite: the file is created
/// exclusively.
void write_png_gray(const std::filesystem::path& path, std::size_t height,
                    std::size_t width, const std::uint8_t* pixels);

/// Bilinear resample. Source coordinates are dst * (in/out), anchored at the
/// top-left corner, so integer scale factors preserve grid samples.
ImageTensor resize_bilinear(const ImageTensor& image, std::size_t out_h,
                            std::size_t out_w);

}  // namespace phop
