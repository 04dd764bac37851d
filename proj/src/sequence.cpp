#include "pmrt/sequence.hpp"

#include <cstdio>

#include "pmrt/errors.hpp"

namespace pmrt {

std::string SkeletonSequence::name() const {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "S%03dC%03dP%03dR%03dA%03d", setup_id,
                camera_id, actor_id, replication_id, action_id);
  return buf;
}

SkeletonSequence root_center(const SkeletonSequence& seq, int root_joint) {
  int j_count = seq.joint_count();
  int t_count = seq.frame_count();
  if (root_joint < 0 || root_joint >= j_count)
    throw IndexOutOfRange("root_center: joint " + std::to_string(root_joint));
  SkeletonSequence out = seq;
  double origin[3] = {seq.at(root_joint, 0, 0), seq.at(root_joint, 0, 1),
                      seq.at(root_joint, 0, 2)};
  for (int j = 0; j < j_count; ++j)
    for (int t = 0; t < t_count; ++t)
      for (int c = 0; c < 3; ++c) out.at(j, t, c) -= origin[c];
  return out;
}

Tensor to_net_input(const SkeletonSequence& seq) {
  int j_count = seq.joint_count();
  int t_count = seq.frame_count();
  Tensor net({static_cast<size_t>(t_count), static_cast<size_t>(j_count), 3});
  for (int t = 0; t < t_count; ++t)
    for (int j = 0; j < j_count; ++j)
      for (int c = 0; c < 3; ++c) net.at(t, j, c) = seq.at(j, t, c);
  return net;
}

SkeletonSequence from_net_output(const Tensor& net, int joint_count) {
  if (net.ndim() != 3 || net.dim(1) != static_cast<size_t>(joint_count) ||
      net.dim(2) != 3)
    throw ShapeMismatch("from_net_output: got " + net.shape_str());
  int t_count = static_cast<int>(net.dim(0));
  SkeletonSequence seq;
  seq.joints = Tensor({static_cast<size_t>(joint_count),
                       static_cast<size_t>(t_count), 3});
  for (int t = 0; t < t_count; ++t)
    for (int j = 0; j < joint_count; ++j)
      for (int c = 0; c < 3; ++c) seq.at(j, t, c) = net.at(t, j, c);
  seq.source_frame_count = t_count;
  return seq;
}

}  // namespace pmrt
