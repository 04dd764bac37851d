#ifndef PMRT_SEQUENCE_HPP
#define PMRT_SEQUENCE_HPP

#include <string>

#include "pmrt/tensor.hpp"

namespace pmrt {

// One recorded (or generated) skeleton clip. joints is J×T×3 in metres in
// the sensor frame. Labels are 1-based per the corpus convention; camera 1
// is reserved for evaluation.
struct SkeletonSequence {
  Tensor joints;  // (J, T, 3)
  int actor_id = 0;
  int action_id = 0;
  int camera_id = 0;
  int setup_id = 0;
  int replication_id = 0;
  int source_frame_count = 0;

  int joint_count() const { return joints.empty() ? 0 : static_cast<int>(joints.dim(0)); }
  int frame_count() const { return joints.empty() ? 0 : static_cast<int>(joints.dim(1)); }

  double& at(int j, int t, int c) { return joints.at(j, t, c); }
  double at(int j, int t, int c) const { return joints.at(j, t, c); }

  // Canonical corpus stem, e.g. S001C002P003R001A010.
  std::string name() const;
};

// Classifier heads index classes from zero; corpus labels are 1-based.
inline int label_index(int id) { return id - 1; }

// Translates all joints so the root joint of the first frame sits at the
// origin. Cross-reconstruction targets compare sequences from different
// recordings, which requires this common frame.
SkeletonSequence root_center(const SkeletonSequence& seq, int root_joint);

// Network input layout: the time axis becomes the channel axis and the
// joint/coordinate axes become the spatial plane, i.e. (T, J, 3).
Tensor to_net_input(const SkeletonSequence& seq);

// Inverse of to_net_input; metadata is left unset.
SkeletonSequence from_net_output(const Tensor& net, int joint_count);

}  // namespace pmrt

#endif  // PMRT_SEQUENCE_HPP
