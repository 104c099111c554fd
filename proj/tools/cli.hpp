#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "rotvote/geometry.hpp"

namespace rotvote::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;  ///< bad flags, config values or intrinsics
inline constexpr int kExitData = 3;    ///< missing or malformed input data

/// Runs one command line (argv[0] is the program name). Diagnostics go to
/// `err`, short progress lines to `out`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Same, with the arguments after the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// A sequence directory: *.flo files (frame order = name order), camera.ini
/// and, for evaluation, ground_truth.csv.
struct SequenceDir {
  std::string name;
  std::filesystem::path dir;
  std::vector<std::filesystem::path> flows;
  CameraIntrinsics camera;
};

/// Reads camera.ini from `dir`, or from its parent when `dir` has none.
SequenceDir scan_sequence(const std::filesystem::path& dir);

/// `root` itself when it holds flow files, else every subdirectory that
/// does, in name order.
std::vector<SequenceDir> scan_dataset(const std::filesystem::path& root);

}  // namespace rotvote::cli
