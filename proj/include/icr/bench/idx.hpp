#pragma once

// IDX image files (the MNIST container) and plain-text PGM output.
//
// IDX3 layout, all integers big-endian:
//   u32 magic = 0x00000803 | u32 count | u32 rows | u32 cols | count*rows*cols u8 pixels

#include "icr/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

namespace icr::bench {

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr Index kImageSide = 28;

struct ImageSet {
  /// 28x28, values in [0,1]
  std::vector<Matrix> images;
  std::string source;

  std::size_t count() const { return images.size(); }
};

namespace detail {

inline std::uint32_t read_be32(const unsigned char* b) {
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | std::uint32_t{b[3]};
}

}  // namespace detail

/// Parses an in-memory IDX3 buffer.
inline ImageSet parse_idx_images(const std::vector<unsigned char>& bytes, std::string source = {}) {
  if (bytes.size() < 4) throw Error(ErrorCode::TruncatedFile, "IDX header needs 4 bytes, got " + std::to_string(bytes.size()));
  const std::uint32_t magic = detail::read_be32(bytes.data());
  if (magic != kIdxImageMagic) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%08x", magic);
    throw Error(ErrorCode::BadMagic, std::string("expected 0x00000803, found ") + buf);
  }
  if (bytes.size() < 16) throw Error(ErrorCode::TruncatedFile, "IDX3 header needs 16 bytes");
  const std::uint32_t count = detail::read_be32(bytes.data() + 4);
  const std::uint32_t rows = detail::read_be32(bytes.data() + 8);
  const std::uint32_t cols = detail::read_be32(bytes.data() + 12);
  if (rows != kImageSide || cols != kImageSide)
    throw Error(ErrorCode::DimMismatch,
                "expected 28x28 images, header says " + std::to_string(rows) + "x" + std::to_string(cols));

  const std::uint64_t need = 16 + std::uint64_t{count} * rows * cols;
  if (bytes.size() < need)
    throw Error(ErrorCode::TruncatedFile,
                "payload declares " + std::to_string(need) + " bytes, file has " + std::to_string(bytes.size()));

  ImageSet set;
  set.source = std::move(source);
  set.images.reserve(count);
  const unsigned char* px = bytes.data() + 16;
  for (std::uint32_t k = 0; k < count; ++k) {
    Matrix img(kImageSide, kImageSide);
    for (Index r = 0; r < kImageSide; ++r)
      for (Index c = 0; c < kImageSide; ++c) img(r, c) = static_cast<double>(*px++) / 255.0;
    set.images.push_back(std::move(img));
  }
  return set;
}

inline ImageSet load_idx_images(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_idx_images(bytes, path);
}

/// Row-major flattening, matching the IDX pixel order.
inline Vector vectorize(const Matrix& img) {
  Vector v(img.size());
  for (Index r = 0; r < img.rows(); ++r)
    for (Index c = 0; c < img.cols(); ++c) v[r * img.cols() + c] = img(r, c);
  return v;
}

inline Matrix unvectorize(const Vector& v, Index rows, Index cols) {
  require(v.size() == rows * cols, ErrorCode::InvalidDims, "vector length does not match image size");
  Matrix img(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) img(r, c) = v[r * cols + c];
  return img;
}

/// Plain (P2) graymap with maxval 255. Values are clipped to [0,1] first.
inline void write_pgm(const Matrix& img, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << "P2\n" << img.cols() << ' ' << img.rows() << "\n255\n";
  for (Index r = 0; r < img.rows(); ++r) {
    for (Index c = 0; c < img.cols(); ++c) {
      const double v = std::clamp(img(r, c), 0.0, 1.0);
      out << (c ? " " : "") << static_cast<int>(std::lround(v * 255.0));
    }
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

}  // namespace icr::bench
