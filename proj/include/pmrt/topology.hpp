#ifndef PMRT_TOPOLOGY_HPP
#define PMRT_TOPOLOGY_HPP

#include <array>
#include <vector>

namespace pmrt {

// Skeleton tree over J joints. The root is its own parent; every other joint
// points at its parent. end_effectors lists the extremity joints used by the
// end-effector loss, and chain_length[e] is the summed bone length from the
// root to end effector e in a canonical rest pose (used as a normalizer, so
// it only has to be a fixed positive constant per chain).
struct SkeletonTopology {
  std::vector<int> parent;
  std::vector<int> end_effectors;
  std::vector<double> chain_length;  // aligned with end_effectors

  int joint_count() const { return static_cast<int>(parent.size()); }
  int root() const;

  // Joints on the path from joint j up to (and including) the root.
  std::vector<int> chain_to_root(int j) const;

  // Throws InvalidConfig if the parent array is not a rooted tree, an end
  // effector index is out of range, or chain_length disagrees in size.
  void validate() const;
};

// The 25-joint Kinect v2 skeleton used by the NTU recordings, with chain
// lengths derived from the canonical rest pose in kinect25_rest_offsets().
const SkeletonTopology& kinect25_topology();

// Rest-pose offset of each joint from its parent (root entry is its world
// position), metres, laid out [J][3].
const std::vector<std::array<double, 3>>& kinect25_rest_offsets();

}  // namespace pmrt

#endif  // PMRT_TOPOLOGY_HPP
