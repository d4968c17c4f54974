#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "mgcn/types.hpp"

namespace mgcn {

// Named parameter snapshot. JSON on disk: name → {shape: [rows, cols],
// values: row-major array}, doubles encoded shortest-roundtrip so save/load
// is bit-exact and repeated saves are byte-identical.
using Checkpoint = std::map<std::string, Mat>;

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mgcn
