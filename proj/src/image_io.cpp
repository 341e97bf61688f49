/* Copyright 2026 The PARSE Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "parse/image_io.hpp"

#include <png.h>

#include <cstring>

#include "parse/error.hpp"

namespace parse {

void write_png(const std::string& path, const RgbImage& image) {
  if (image.width <= 0 || image.height <= 0 ||
      image.pixels.size() != std::size_t(image.width) * image.height * 3)
    throw InvalidArgument("write_png: inconsistent image buffer");
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = png_uint_32(image.width);
  png.height = png_uint_32(image.height);
  png.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&png, path.c_str(), 0, image.pixels.data(), 0, nullptr)) {
    const std::string msg = png.message;
    png_image_free(&png);
    throw IoError("cannot write PNG: " + msg, path);
  }
}

RgbImage read_png(const std::string& path) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str()))
    throw IoError(std::string("cannot open PNG: ") + png.message, path);
  png.format = PNG_FORMAT_RGB;
  RgbImage out(int(png.width), int(png.height));
  if (!png_image_finish_read(&png, nullptr, out.pixels.data(), 0, nullptr)) {
    const std::string msg = png.message;
    png_image_free(&png);
    throw IoError("cannot decode PNG: " + msg, path);
  }
  return out;
}

template <typename Real>
void to_planar(const RgbImage& image, std::span<Real> out) {
  const std::size_t plane = std::size_t(image.width) * image.height;
  if (out.size() != plane * 3) throw InvalidArgument("to_planar: output size mismatch");
  for (std::size_t i = 0; i < plane; ++i)
    for (int c = 0; c < 3; ++c) out[c * plane + i] = Real(image.pixels[i * 3 + c]) / Real(255);
}

template <typename Real>
std::vector<Real> to_planar(const RgbImage& image) {
  std::vector<Real> out(std::size_t(image.width) * image.height * 3);
  to_planar<Real>(image, std::span<Real>(out));
  return out;
}

template void to_planar<float>(const RgbImage&, std::span<float>);
template void to_planar<double>(const RgbImage&, std::span<double>);
template std::vector<float> to_planar<float>(const RgbImage&);
template std::vector<double> to_planar<double>(const RgbImage&);

}  // namespace parse
