#ifndef PMRT_CHECKPOINT_HPP
#define PMRT_CHECKPOINT_HPP

#include <cstdint>
#include <map>
#include <string>

#include "pmrt/tensor.hpp"

namespace pmrt {

// Flat container serialized as one versioned binary file. Doubles are
// written raw, so save/load round-trips are bitwise exact on one platform.
// Keys are dotted names assigned by the writer (parameters, optimizer
// moments, RNG states, config echo, counters).
struct Archive {
  std::map<std::string, Tensor> tensors;
  std::map<std::string, std::string> strings;
  std::map<std::string, int64_t> ints;
};

inline constexpr uint32_t kArchiveVersion = 1;

// Throws IoError on filesystem failures.
void save_archive(const std::string& path, const Archive& archive);

// Throws IoError, CorruptCheckpoint (bad magic, truncation, malformed
// records) or VersionMismatch (format tag from a different build line).
Archive load_archive(const std::string& path);

}  // namespace pmrt

#endif  // PMRT_CHECKPOINT_HPP
