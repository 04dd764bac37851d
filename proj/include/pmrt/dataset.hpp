#ifndef PMRT_DATASET_HPP
#define PMRT_DATASET_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pmrt/sequence.hpp"
#include "pmrt/topology.hpp"

namespace pmrt {

// Trims to the first target_t frames, or repeats the final frame until the
// sequence reaches target_t. source_frame_count is preserved. Idempotent.
SkeletonSequence normalize_length(const SkeletonSequence& seq, int target_t);

struct DenoiseConfig {
  // A joint that moves more than this between consecutive frames is an
  // outlier; isolated outliers and non-finite samples are repaired by linear
  // interpolation from the nearest clean frames.
  double jump_threshold_m = 0.5;
  // Reject the file outright when more than this fraction of frames carry at
  // least one bad joint; repair cannot be trusted past that point.
  double max_bad_frame_fraction = 0.2;
};

// Returns the repaired sequence, or nullopt when the file is irreparable.
std::optional<SkeletonSequence> denoise(const SkeletonSequence& seq,
                                        const DenoiseConfig& cfg = {});

enum class Split { train, eval };

// Camera 1 is held out for evaluation; cameras 2 and 3 train.
Split split_for_camera(int camera_id);

struct CorpusEntry {
  std::string path;
  int actor_id = 0;
  int action_id = 0;
  int camera_id = 0;
  Split split = Split::train;
};

struct CorpusIndex {
  std::vector<CorpusEntry> entries;

  std::vector<int> actor_ids() const;   // sorted, unique, both splits
  std::vector<int> action_ids() const;
  size_t count(Split split) const;

  // Enforces the camera/split rule on every entry.
  void validate() const;
};

// Tab-separated manifest: path, actor, action, camera, split per line.
void save_manifest(const CorpusIndex& index, const std::string& path);
CorpusIndex load_manifest(const std::string& path);

// Loads every entry of the given split, checks the J×T shape against the
// topology and expected length, and root-centers each sequence (frame-1 root
// at the origin) so recordings share a common frame.
std::vector<SkeletonSequence> load_split(const CorpusIndex& index, Split split,
                                         const SkeletonTopology& topology,
                                         int expected_t);

// All 2x2 grids in the pool: two actors {p < q} by two actions {a < b},
// all four recorded under one camera. Roles are canonical (s_ap holds the
// smaller action and actor); consumers wanting the mirrored roles swap
// explicitly. Order is a deterministic shuffle of the canonical enumeration.
struct PairedQuadruple {
  SkeletonSequence s_ap;  // action a, actor p
  SkeletonSequence s_bp;  // action b, actor p
  SkeletonSequence s_aq;  // action a, actor q
  SkeletonSequence s_bq;  // action b, actor q
};

// Throws LabelMismatch if the 2x2 grid or shared-camera invariant is broken.
void validate_quadruple(const PairedQuadruple& quad);

// Enumerates every quadruple formable from the pool (Cartesian product over
// repeated recordings of the same cell) and shuffles with rng_seed.
// Throws NoValidPairs when the pool admits none.
std::vector<PairedQuadruple> build_pairs(
    const std::vector<SkeletonSequence>& pool, uint64_t rng_seed);

}  // namespace pmrt

#endif  // PMRT_DATASET_HPP
