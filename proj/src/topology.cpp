#include "pmrt/topology.hpp"

#include <algorithm>
#include <cmath>

#include "pmrt/errors.hpp"

namespace pmrt {

int SkeletonTopology::root() const {
  for (int j = 0; j < joint_count(); ++j)
    if (parent[j] == j) return j;
  throw InvalidConfig("topology has no root joint");
}

std::vector<int> SkeletonTopology::chain_to_root(int j) const {
  if (j < 0 || j >= joint_count())
    throw IndexOutOfRange("chain_to_root: joint " + std::to_string(j));
  std::vector<int> chain;
  int cur = j;
  while (true) {
    chain.push_back(cur);
    if (static_cast<int>(chain.size()) > joint_count())
      throw InvalidConfig("topology contains a parent cycle");
    if (parent[cur] == cur) break;
    cur = parent[cur];
  }
  return chain;
}

void SkeletonTopology::validate() const {
  int j_count = joint_count();
  if (j_count == 0) throw InvalidConfig("topology is empty");
  int roots = 0;
  for (int j = 0; j < j_count; ++j) {
    if (parent[j] < 0 || parent[j] >= j_count)
      throw InvalidConfig("parent index out of range at joint " +
                          std::to_string(j));
    if (parent[j] == j) ++roots;
  }
  if (roots != 1)
    throw InvalidConfig("topology must have exactly one root, found " +
                        std::to_string(roots));
  for (int j = 0; j < j_count; ++j) chain_to_root(j);  // throws on cycles
  if (chain_length.size() != end_effectors.size())
    throw InvalidConfig("chain_length size does not match end_effectors");
  for (size_t i = 0; i < end_effectors.size(); ++i) {
    int e = end_effectors[i];
    if (e < 0 || e >= j_count)
      throw InvalidConfig("end effector index out of range: " +
                          std::to_string(e));
    if (!(chain_length[i] > 0.0))
      throw InvalidConfig("chain length must be positive for end effector " +
                          std::to_string(e));
  }
}

const std::vector<std::array<double, 3>>& kinect25_rest_offsets() {
  // Rest pose of an averaged adult figure standing upright, y up, facing +z.
  // Root (joint 0, spine base) carries its world position; every other entry
  // is the offset from the parent joint.
  static const std::vector<std::array<double, 3>> offsets = {
      {0.000, 0.000, 0.000},    // 0  spine base (root)
      {0.000, 0.250, 0.000},    // 1  spine mid          <- 0
      {0.000, 0.095, 0.000},    // 2  neck               <- 20
      {0.000, 0.120, 0.000},    // 3  head               <- 2
      {-0.180, 0.035, 0.000},   // 4  left shoulder      <- 20
      {-0.030, -0.270, 0.000},  // 5  left elbow         <- 4
      {-0.020, -0.250, 0.000},  // 6  left wrist         <- 5
      {-0.010, -0.075, 0.000},  // 7  left hand          <- 6
      {0.180, 0.035, 0.000},    // 8  right shoulder     <- 20
      {0.030, -0.270, 0.000},   // 9  right elbow        <- 8
      {0.020, -0.250, 0.000},   // 10 right wrist        <- 9
      {0.010, -0.075, 0.000},   // 11 right hand         <- 10
      {-0.090, -0.060, 0.000},  // 12 left hip           <- 0
      {-0.010, -0.390, 0.000},  // 13 left knee          <- 12
      {0.000, -0.370, 0.000},   // 14 left ankle         <- 13
      {0.000, -0.050, 0.120},   // 15 left foot          <- 14
      {0.090, -0.060, 0.000},   // 16 right hip          <- 0
      {0.010, -0.390, 0.000},   // 17 right knee         <- 16
      {0.000, -0.370, 0.000},   // 18 right ankle        <- 17
      {0.000, -0.050, 0.120},   // 19 right foot         <- 18
      {0.000, 0.235, 0.000},    // 20 spine shoulder     <- 1
      {-0.020, -0.060, 0.000},  // 21 left hand tip      <- 7
      {-0.035, -0.030, 0.000},  // 22 left thumb         <- 7
      {0.020, -0.060, 0.000},   // 23 right hand tip     <- 11
      {0.035, -0.030, 0.000},   // 24 right thumb        <- 11
  };
  return offsets;
}

const SkeletonTopology& kinect25_topology() {
  static const SkeletonTopology topo = [] {
    SkeletonTopology t;
    t.parent = {0,  0,  20, 2,  20, 4,  5,  6,  20, 8,  9,  10, 0,
                12, 13, 14, 0,  16, 17, 18, 1,  7,  7,  11, 11};
    // Head, hand tips, feet: the extremity of each limb chain. Hand tips
    // rather than hands keep every end effector a leaf of the tree.
    t.end_effectors = {3, 21, 23, 15, 19};
    const auto& offs = kinect25_rest_offsets();
    for (int e : t.end_effectors) {
      double len = 0.0;
      int cur = e;
      while (t.parent[cur] != cur) {
        const auto& o = offs[cur];
        len += std::sqrt(o[0] * o[0] + o[1] * o[1] + o[2] * o[2]);
        cur = t.parent[cur];
      }
      t.chain_length.push_back(len);
    }
    t.validate();
    return t;
  }();
  return topo;
}

}  // namespace pmrt
