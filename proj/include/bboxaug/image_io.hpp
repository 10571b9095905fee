// Copyright 2026 The bboxaug Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// PNG / JPEG decode and encode. Decoded images are always 8-bit RGB: alpha
// is dropped and grayscale is replicated into all three channels.

#ifndef BBOXAUG_IMAGE_IO_HPP_
#define BBOXAUG_IMAGE_IO_HPP_

#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>
#include <vector>

#include <jpeglib.h>
#include <png.h>

#include "bboxaug/raster.hpp"

namespace bboxaug {

class ImageIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline ImageBuffer decode_png(const std::vector<std::uint8_t>& bytes) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw ImageIoError(std::string("png decode: ") + image.message);
  }
  image.format = PNG_FORMAT_RGBA;
  std::vector<std::uint8_t> rgba(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, rgba.data(), 0, nullptr)) {
    png_image_free(&image);
    throw ImageIoError(std::string("png decode: ") + image.message);
  }
  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(image.width) * image.height * 3);
  for (std::size_t i = 0, j = 0; i < rgba.size(); i += 4, j += 3) {
    rgb[j] = rgba[i];
    rgb[j + 1] = rgba[i + 1];
    rgb[j + 2] = rgba[i + 2];
  }
  return ImageBuffer(static_cast<int>(image.width), static_cast<int>(image.height), std::move(rgb));
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

inline void jpeg_error_exit(j_common_ptr info) {
  auto* err = reinterpret_cast<JpegErrorManager*>(info->err);
  (*info->err->format_message)(info, err->message);
  std::longjmp(err->jump, 1);
}

// No C++ objects with destructors may live between setjmp and a longjmp.
inline bool decode_jpeg_raw(const std::vector<std::uint8_t>& bytes, std::vector<std::uint8_t>& rgb,
                            int& width, int& height, std::string& error) {
  jpeg_decompress_struct info{};
  JpegErrorManager err{};
  info.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&info);
    error = err.message;
    return false;
  }
  jpeg_create_decompress(&info);
  jpeg_mem_src(&info, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&info, TRUE);
  info.out_color_space = JCS_RGB;
  jpeg_start_decompress(&info);
  width = static_cast<int>(info.output_width);
  height = static_cast<int>(info.output_height);
  rgb.resize(static_cast<std::size_t>(width) * height * 3);
  while (info.output_scanline < info.output_height) {
    JSAMPROW row = &rgb[static_cast<std::size_t>(info.output_scanline) * width * 3];
    jpeg_read_scanlines(&info, &row, 1);
  }
  jpeg_finish_decompress(&info);
  jpeg_destroy_decompress(&info);
  return true;
}

inline bool encode_jpeg_raw(const ImageBuffer& img, int quality, unsigned char*& out,
                            unsigned long& size, std::string& error) {
  jpeg_compress_struct info{};
  JpegErrorManager err{};
  info.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  if (setjmp(err.jump)) {
    jpeg_destroy_compress(&info);
    error = err.message;
    return false;
  }
  jpeg_create_compress(&info);
  jpeg_mem_dest(&info, &out, &size);
  info.image_width = static_cast<JDIMENSION>(img.width());
  info.image_height = static_cast<JDIMENSION>(img.height());
  info.input_components = 3;
  info.in_color_space = JCS_RGB;
  jpeg_set_defaults(&info);
  jpeg_set_quality(&info, quality, TRUE);
  jpeg_start_compress(&info, TRUE);
  const auto bytes = img.bytes();
  while (info.next_scanline < info.image_height) {
    auto* row = const_cast<JSAMPLE*>(&bytes[static_cast<std::size_t>(info.next_scanline) * img.width() * 3]);
    jpeg_write_scanlines(&info, &row, 1);
  }
  jpeg_finish_compress(&info);
  jpeg_destroy_compress(&info);
  return true;
}

}  // namespace detail

/// Decodes PNG or JPEG, chosen by signature.
inline ImageBuffer decode_image(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0) return detail::decode_png(bytes);
  if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF) {
    std::vector<std::uint8_t> rgb;
    int w = 0;
    int h = 0;
    std::string error;
    if (!detail::decode_jpeg_raw(bytes, rgb, w, h, error)) throw ImageIoError("jpeg decode: " + error);
    return ImageBuffer(w, h, std::move(rgb));
  }
  throw ImageIoError("unrecognized image format (expected PNG or JPEG)");
}

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageIoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ImageIoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ImageIoError("write failed for " + path.string());
}

inline ImageBuffer load_image(const std::filesystem::path& path) {
  try {
    return decode_image(read_file(path));
  } catch (const ImageIoError& e) {
    throw ImageIoError(path.string() + ": " + e.what());
  }
}

inline std::vector<std::uint8_t> encode_png(const ImageBuffer& img) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  const auto bytes = img.bytes();
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, bytes.data(), 0, nullptr)) {
    throw ImageIoError(std::string("png encode: ") + image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, bytes.data(), 0, nullptr)) {
    throw ImageIoError(std::string("png encode: ") + image.message);
  }
  out.resize(size);
  return out;
}

inline std::vector<std::uint8_t> encode_jpeg(const ImageBuffer& img, int quality = 95) {
  unsigned char* buf = nullptr;
  unsigned long size = 0;
  std::string error;
  const bool ok = detail::encode_jpeg_raw(img, quality, buf, size, error);
  std::vector<std::uint8_t> out;
  if (ok) out.assign(buf, buf + size);
  std::free(buf);
  if (!ok) throw ImageIoError("jpeg encode: " + error);
  return out;
}

inline void save_png(const std::filesystem::path& path, const ImageBuffer& img) {
  write_file(path, encode_png(img));
}

}  // namespace bboxaug

#endif  // BBOXAUG_IMAGE_IO_HPP_
