#ifndef PANICLE_IO_HPP
#define PANICLE_IO_HPP

#include <string>

#include "panicle/types.hpp"

namespace panicle {

enum class PlyFormat { Ascii, BinaryLittleEndian };

// PLY with x,y,z properties (optional nx,ny,nz / red,green,blue). Malformed
// input raises DataError carrying the byte offset of the failure.
PointCloud readPly(const std::string& path);
void writePly(const PointCloud& cloud, const std::string& path,
              PlyFormat format = PlyFormat::BinaryLittleEndian);

// 8-bit rasters. PNG (gray, RGB, RGBA) and PGM (P2/P5). Format chosen by
// file extension on write.
ImageBuffer readImage(const std::string& path);
void writeImage(const ImageBuffer& image, const std::string& path);

// Masks are 8-bit grayscale rasters; value >= 128 means foreground.
BinaryMask readMask(const std::string& path);
void writeMask(const BinaryMask& mask, const std::string& path);

// Scalar grid: JSON header {dims, origin, spacing, data|values}; the "data"
// sidecar is a raw little-endian float32 array, index (ix*ny + iy)*nz + iz.
DensityGrid readGrid(const std::string& json_path);
void writeGrid(const DensityGrid& grid, const std::string& json_path);

}  // namespace panicle

#endif
