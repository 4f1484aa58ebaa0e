#pragma once

#include <string>

#include "sempaste/types.hpp"

namespace sempaste {

// Decodes PNG, JPEG or binary PPM/PGM, detected by magic bytes. Grayscale
// and palette files are expanded to RGB; alpha is dropped.
Image read_image(const std::string& path);

// Single-channel read used for class-indexed label images: palette PNGs
// yield the palette index, grayscale files the sample value. RGB inputs are
// accepted only when all channels agree.
PlaneU8 read_plane(const std::string& path);

// Lossless output. write_mask_png stores a {0,1} mask as 1-bit grayscale.
void write_png(const std::string& path, const Image& image);
void write_gray_png(const std::string& path, const PlaneU8& plane);
void write_mask_png(const std::string& path, const Mask& mask);

void write_ppm(const std::string& path, const Image& image);

}  // namespace sempaste
