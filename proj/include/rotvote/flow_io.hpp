#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "rotvote/errors.hpp"
#include "rotvote/flow_field.hpp"

namespace rotvote {

/// Two-band float flow raster file: 4-byte magic "PIEH" (float 202021.25),
/// int32 width, int32 height, then width*height little-endian float32
/// (u, v) pairs in row-major order.
inline constexpr char kFlowMagic[4] = {'P', 'I', 'E', 'H'};
inline constexpr int kMaxFlowDimension = 1 << 15;

class FlowFileError : public DataError {
 public:
  enum class Kind { open_failed, bad_magic, bad_dimensions, truncated, write_failed };

  FlowFileError(Kind kind, const std::string& what) : DataError(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

FlowRaster read_flow(std::istream& in);
FlowRaster read_flow(const std::filesystem::path& path);

void write_flow(std::ostream& out, const FlowRaster& raster);
void write_flow(const std::filesystem::path& path, const FlowRaster& raster);

}  // namespace rotvote
