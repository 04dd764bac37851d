#ifndef PMRT_ANONYMIZER_HPP
#define PMRT_ANONYMIZER_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "pmrt/dataset.hpp"
#include "pmrt/network.hpp"
#include "pmrt/sequence.hpp"

namespace pmrt {

// Outputs carry this in place of the identity being protected; the true
// actor survives only in the audit manifest, where evaluation needs it.
constexpr int kAnonymizedActorId = 0;

// How the dummy skeleton is chosen for each input. The candidate pool is
// passed alongside so the policy itself stays a plain value.
struct DummyPolicy {
  enum class Mode { constant, random };

  Mode mode = Mode::constant;
  // Stem of the constant dummy (e.g. S001C001P004R001A002). Empty selects
  // the lexicographically first stem in the pool.
  std::string constant_ref;
  // Stream for random mode; the draw depends only on this and the input's
  // stem, so re-runs and out-of-order runs agree.
  uint64_t rng_seed = 0;
};

// Resolves the dummy for one input. Constant mode ignores the input.
// Throws EmptyDummyPool, or InvalidConfig when constant_ref names no pool
// entry.
const SkeletonSequence& select_dummy(
    const std::vector<SkeletonSequence>& dummy_pool, const DummyPolicy& policy,
    const SkeletonSequence& input);

struct AnonymizedSequence {
  SkeletonSequence seq;     // input's action and camera, actor withheld
  std::string source_name;  // input stem
  std::string dummy_name;   // which dummy the decoder saw, for audit
  int true_actor_id = 0;    // protected identity, manifest-only
};

// Decodes the input's motion embedding against the dummy's privacy
// embedding. The output keeps the input's action label and timing; its
// actor field is the anonymized marker.
AnonymizedSequence anonymize(const PmrModel& model,
                             const SkeletonSequence& input,
                             const DummyPolicy& policy,
                             const std::vector<SkeletonSequence>& dummy_pool);

struct AnonymizeRecord {
  std::string source_path;
  std::string output_path;
  std::string dummy;
  int true_actor_id = 0;
  int action_id = 0;
  int camera_id = 0;
};

// Tab-separated, one record per line: source, output, dummy stem, true
// actor, action, camera.
void save_anonymize_manifest(const std::vector<AnonymizeRecord>& records,
                             const std::string& path);
std::vector<AnonymizeRecord> load_anonymize_manifest(const std::string& path);

// Anonymizes every eval-split entry of the index, writing NTU-layout files
// under out_dir (original stems kept so outputs stay loadable) plus the
// audit manifest out_dir/anonymize_manifest.tsv. The returned index points
// at the outputs and keeps the protected actor ids so attack evaluation can
// align labels.
CorpusIndex anonymize_corpus(const PmrModel& model, const CorpusIndex& index,
                             const DummyPolicy& policy,
                             const std::vector<SkeletonSequence>& dummy_pool,
                             const SkeletonTopology& topology,
                             const std::string& out_dir);

}  // namespace pmrt

#endif  // PMRT_ANONYMIZER_HPP
