#include "pmrt/synthetic.hpp"

#include <array>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <vector>

#include "pmrt/errors.hpp"
#include "pmrt/ntu_io.hpp"
#include "pmrt/rng.hpp"

namespace pmrt {

namespace {

using Mat3 = std::array<std::array<double, 3>, 3>;
using Vec3 = std::array<double, 3>;

Mat3 identity3() {
  return {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
}

Mat3 axis_rotation(int axis, double angle) {
  double c = std::cos(angle), s = std::sin(angle);
  switch (axis) {
    case 0:
      return {{{1, 0, 0}, {0, c, -s}, {0, s, c}}};
    case 1:
      return {{{c, 0, s}, {0, 1, 0}, {-s, 0, c}}};
    default:
      return {{{c, -s, 0}, {s, c, 0}, {0, 0, 1}}};
  }
}

Mat3 matmul(const Mat3& a, const Mat3& b) {
  Mat3 r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double v = 0.0;
      for (int k = 0; k < 3; ++k) v += a[i][k] * b[k][j];
      r[i][j] = v;
    }
  return r;
}

Vec3 rotate(const Mat3& m, const Vec3& v) {
  Vec3 r{};
  for (int i = 0; i < 3; ++i)
    r[i] = m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2];
  return r;
}

// One sinusoidal rotation driving a joint: angle(t) = amp * sin(2π f t/T + φ).
struct Drive {
  int joint;
  int axis;  // 0=x, 1=y, 2=z
  double amp;
  double freq;
  double phase;
};

// Distinct parametric trajectories; each drives a different joint set so
// actions stay separable regardless of per-actor style perturbations.
std::vector<Drive> action_drives(int action_id, double* root_bob) {
  constexpr double kPi = std::numbers::pi;
  *root_bob = 0.0;
  int base = (action_id - 1) % 6 + 1;
  // Repeats beyond the sixth action reuse a trajectory at a faster tempo.
  double tempo = 1.0 + 0.3 * ((action_id - 1) / 6);
  std::vector<Drive> d;
  switch (base) {
    case 1:  // right-arm raise
      d = {{8, 2, -1.10, 1.00, 0.0}, {9, 2, -0.45, 1.00, 0.4}};
      break;
    case 2:  // left-arm wave
      d = {{4, 2, 1.00, 0.50, 0.0}, {5, 0, 0.85, 3.00, 0.0}};
      break;
    case 3:  // squat
      d = {{12, 0, -0.90, 1.00, 0.0},
           {16, 0, -0.90, 1.00, 0.0},
           {13, 0, 1.15, 1.00, 0.0},
           {17, 0, 1.15, 1.00, 0.0}};
      *root_bob = 0.22;
      break;
    case 4:  // walk-in-place
      d = {{12, 0, 0.50, 2.00, 0.0},  {16, 0, 0.50, 2.00, kPi},
           {13, 0, 0.65, 2.00, 1.2},  {17, 0, 0.65, 2.00, 1.2 + kPi},
           {4, 0, 0.30, 2.00, kPi},   {8, 0, 0.30, 2.00, 0.0}};
      break;
    case 5:  // both-arms reach
      d = {{4, 0, -1.25, 0.75, 0.0},
           {8, 0, -1.25, 0.75, 0.0},
           {5, 0, -0.40, 0.75, 0.3},
           {9, 0, -0.40, 0.75, 0.3}};
      break;
    default:  // head nod with torso lean
      d = {{2, 0, 0.55, 2.50, 0.0}, {1, 0, 0.28, 0.75, 0.0}};
      break;
  }
  for (auto& drive : d) drive.freq *= tempo;
  return d;
}

struct ActorStyle {
  double bone_scale;
  double amplitude;
  double phase;
  double freq_factor;
};

ActorStyle actor_style(int actor_id) {
  int k = actor_id - 1;
  ActorStyle s;
  s.bone_scale = 0.82 + 0.11 * k;
  s.amplitude = 0.75 + 0.18 * k;
  s.phase = 0.9 * k;
  // Golden-ratio spacing keeps the factors spread out for any actor count.
  double frac = std::fmod(0.618033988749895 * actor_id, 1.0);
  s.freq_factor = 0.94 + 0.12 * frac;
  return s;
}

}  // namespace

SkeletonSequence synth_sequence(int actor_id, int action_id, int camera_id,
                                uint64_t seed,
                                const SkeletonTopology& topology) {
  constexpr double kPi = std::numbers::pi;
  if (actor_id < 1 || action_id < 1 || camera_id < 1 || camera_id > 3)
    throw InvalidConfig("synth_sequence: labels out of range");

  const auto& offsets = kinect25_rest_offsets();
  int j_count = topology.joint_count();
  ActorStyle style = actor_style(actor_id);
  double root_bob = 0.0;
  std::vector<Drive> drives = action_drives(action_id, &root_bob);

  std::vector<std::vector<int>> children(j_count);
  int root = topology.root();
  for (int j = 0; j < j_count; ++j)
    if (j != root) children[topology.parent[j]].push_back(j);

  int t_native = 75 + 10 * (((actor_id + action_id) % 3) - 1);
  double camera_yaw = camera_id == 1 ? 0.0 : (camera_id == 2 ? -0.21 : 0.21);
  Mat3 cam_rot = axis_rotation(1, camera_yaw);
  Rng noise(mix_seed(seed, static_cast<uint64_t>(actor_id),
                     static_cast<uint64_t>(action_id),
                     static_cast<uint64_t>(camera_id)));

  SkeletonSequence seq;
  seq.actor_id = actor_id;
  seq.action_id = action_id;
  seq.camera_id = camera_id;
  seq.setup_id = 1;
  seq.replication_id = 1;
  seq.source_frame_count = t_native;
  seq.joints = Tensor({static_cast<size_t>(j_count),
                       static_cast<size_t>(t_native), 3});

  std::vector<Mat3> world_rot(j_count);
  std::vector<Vec3> world_pos(j_count);
  for (int t = 0; t < t_native; ++t) {
    double u = static_cast<double>(t) / 75.0;  // clip-normalized time

    std::vector<Mat3> local(j_count, identity3());
    for (const auto& d : drives) {
      double angle = d.amp * style.amplitude *
                     std::sin(2.0 * kPi * d.freq * style.freq_factor * u +
                              d.phase + style.phase);
      local[d.joint] = matmul(local[d.joint], axis_rotation(d.axis, angle));
    }

    double bob = root_bob * style.amplitude * 0.5 *
                 (1.0 - std::cos(2.0 * kPi * style.freq_factor * u));
    world_rot[root] = local[root];
    world_pos[root] = {0.0, 0.9 * style.bone_scale - bob, 0.0};

    // Parents precede children on the traversal stack.
    std::vector<int> stack = {root};
    while (!stack.empty()) {
      int j = stack.back();
      stack.pop_back();
      if (j != root) {
        int par = topology.parent[j];
        Vec3 off = {offsets[j][0] * style.bone_scale,
                    offsets[j][1] * style.bone_scale,
                    offsets[j][2] * style.bone_scale};
        Vec3 rotated = rotate(world_rot[par], off);
        world_pos[j] = {world_pos[par][0] + rotated[0],
                        world_pos[par][1] + rotated[1],
                        world_pos[par][2] + rotated[2]};
        world_rot[j] = matmul(world_rot[par], local[j]);
      }
      for (int c : children[j]) stack.push_back(c);
    }

    for (int j = 0; j < j_count; ++j) {
      Vec3 cam = rotate(cam_rot, world_pos[j]);
      seq.at(j, t, 0) = cam[0] + noise.normal(0.0, 0.0025);
      seq.at(j, t, 1) = cam[1] + noise.normal(0.0, 0.0025);
      seq.at(j, t, 2) = cam[2] + 2.8 + noise.normal(0.0, 0.0025);
    }
  }
  return seq;
}

CorpusIndex generate_synthetic(const std::string& out_dir, int actors,
                               int actions, int cameras, uint64_t seed,
                               const SkeletonTopology& topology) {
  if (actors < 2 || actions < 2)
    throw InvalidConfig("synthetic corpus needs >= 2 actors and >= 2 actions");
  if (cameras < 1 || cameras > 3)
    throw InvalidConfig("cameras must be in [1, 3]");
  std::filesystem::create_directories(out_dir);
  CorpusIndex index;
  for (int p = 1; p <= actors; ++p)
    for (int a = 1; a <= actions; ++a)
      for (int c = 1; c <= cameras; ++c) {
        SkeletonSequence seq = synth_sequence(p, a, c, seed, topology);
        std::string path = out_dir + "/" + seq.name() + ".skeleton";
        write_ntu_file(path, seq);
        index.entries.push_back(
            {path, p, a, c, split_for_camera(c)});
      }
  index.validate();
  return index;
}

}  // namespace pmrt
