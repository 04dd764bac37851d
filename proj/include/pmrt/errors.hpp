#ifndef PMRT_ERRORS_HPP
#define PMRT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace pmrt {

// Base type for all library errors. Subtypes exist so callers can
// distinguish recoverable conditions (e.g. a multi-actor file that the
// preprocessor should count and skip) from genuine failures.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MalformedFile : Error { using Error::Error; };
struct MultiActorFile : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };
struct LabelOutOfRange : Error { using Error::Error; };
struct NoValidPairs : Error { using Error::Error; };
struct DataExhausted : Error { using Error::Error; };
struct InvalidConfig : Error { using Error::Error; };
struct MissingTerm : Error { using Error::Error; };
struct MissingChainLength : Error { using Error::Error; };
struct CorruptCheckpoint : Error { using Error::Error; };
struct VersionMismatch : Error { using Error::Error; };
struct Divergence : Error { using Error::Error; };
struct InsufficientData : Error { using Error::Error; };
struct ManifestMismatch : Error { using Error::Error; };
struct LabelMismatch : Error { using Error::Error; };
struct EmptyDummyPool : Error { using Error::Error; };
struct IndexOutOfRange : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

}  // namespace pmrt

#endif  // PMRT_ERRORS_HPP
