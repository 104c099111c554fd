#include "rotvote/flow_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace rotvote {

namespace {

static_assert(std::endian::native == std::endian::little, "flow files are little-endian");

template <typename T>
bool read_pod(std::istream& in, T& value) {
  return static_cast<bool>(in.read(reinterpret_cast<char*>(&value), sizeof(T)));
}

}  // namespace

FlowRaster read_flow(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4)) throw FlowFileError(FlowFileError::Kind::truncated, "flow file: missing header");
  if (std::memcmp(magic, kFlowMagic, 4) != 0) {
    throw FlowFileError(FlowFileError::Kind::bad_magic, "flow file: bad magic tag");
  }
  std::int32_t width = 0;
  std::int32_t height = 0;
  if (!read_pod(in, width) || !read_pod(in, height)) {
    throw FlowFileError(FlowFileError::Kind::truncated, "flow file: truncated header");
  }
  if (width < 1 || height < 1 || width > kMaxFlowDimension || height > kMaxFlowDimension) {
    throw FlowFileError(FlowFileError::Kind::bad_dimensions,
                        "flow file: unsupported dimensions " + std::to_string(width) + "x" +
                            std::to_string(height));
  }
  FlowRaster raster(width, height);
  const auto bytes = static_cast<std::streamsize>(raster.data.size() * sizeof(float));
  in.read(reinterpret_cast<char*>(raster.data.data()), bytes);
  if (in.gcount() != bytes) {
    throw FlowFileError(FlowFileError::Kind::truncated,
                        "flow file: payload truncated (" + std::to_string(in.gcount()) + " of " +
                            std::to_string(bytes) + " bytes)");
  }
  return raster;
}

FlowRaster read_flow(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FlowFileError(FlowFileError::Kind::open_failed, "cannot open flow file " + path.string());
  try {
    return read_flow(in);
  } catch (const FlowFileError& e) {
    throw FlowFileError(e.kind(), path.string() + ": " + e.what());
  }
}

void write_flow(std::ostream& out, const FlowRaster& raster) {
  if (raster.width < 1 || raster.height < 1 ||
      raster.data.size() != static_cast<std::size_t>(raster.width) * raster.height * 2) {
    throw FlowFileError(FlowFileError::Kind::bad_dimensions, "flow raster has inconsistent dimensions");
  }
  const std::int32_t w = raster.width;
  const std::int32_t h = raster.height;
  out.write(kFlowMagic, 4);
  out.write(reinterpret_cast<const char*>(&w), sizeof w);
  out.write(reinterpret_cast<const char*>(&h), sizeof h);
  out.write(reinterpret_cast<const char*>(raster.data.data()),
            static_cast<std::streamsize>(raster.data.size() * sizeof(float)));
  if (!out) throw FlowFileError(FlowFileError::Kind::write_failed, "failed writing flow data");
}

void write_flow(const std::filesystem::path& path, const FlowRaster& raster) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FlowFileError(FlowFileError::Kind::write_failed, "cannot create flow file " + path.string());
  write_flow(out, raster);
}

}  // namespace rotvote
