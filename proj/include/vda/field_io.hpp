#pragma once

#include <filesystem>

#include "vda/field.hpp"

namespace vda {

/// VDAF v1: "VDAF", u32 version, u32 nx, ny, nz, u64 T, then T*n binary64
/// values (x fastest, steps consecutive), all little-endian. Step labels are
/// not stored; a loaded series is labelled 0..T-1.
void save_series(const FieldSeries& series, const std::filesystem::path& path);
FieldSeries load_series(const std::filesystem::path& path);

}  // namespace vda
