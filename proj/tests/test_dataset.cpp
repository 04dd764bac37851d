#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "pmrt/dataset.hpp"
#include "pmrt/errors.hpp"
#include "pmrt/ntu_io.hpp"
#include "pmrt/rng.hpp"
#include "pmrt/sequence.hpp"
#include "pmrt/synthetic.hpp"
#include "pmrt/topology.hpp"

using namespace pmrt;

namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("pmrt_dataset_test_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

// Minimal 3-joint chain topology for handwritten files and oracles.
SkeletonTopology chain3() {
  SkeletonTopology topo;
  topo.parent = {0, 0, 1};
  topo.end_effectors = {2};
  topo.chain_length = {1.0};
  return topo;
}

SkeletonSequence make_seq(int joints, int frames, double base = 0.0) {
  SkeletonSequence s;
  s.joints = Tensor({size_t(joints), size_t(frames), 3});
  for (int j = 0; j < joints; ++j)
    for (int t = 0; t < frames; ++t)
      for (int c = 0; c < 3; ++c)
        s.at(j, t, c) = base + j * 100.0 + t * 1.0 + c * 0.01;
  s.actor_id = 1;
  s.action_id = 1;
  s.camera_id = 2;
  s.setup_id = 1;
  s.replication_id = 1;
  s.source_frame_count = frames;
  return s;
}

// Writes a syntactically minimal NTU-layout file with the given per-frame
// body counts.
void write_raw(const std::string& path, int joints,
               const std::vector<int>& body_counts) {
  std::ofstream out(path);
  out << body_counts.size() << "\n";
  for (size_t f = 0; f < body_counts.size(); ++f) {
    out << body_counts[f] << "\n";
    for (int b = 0; b < body_counts[f]; ++b) {
      out << "0 0 0 0 0 0 0 0 0 0\n";
      out << joints << "\n";
      for (int j = 0; j < joints; ++j) {
        out << (j + 1.0) << " " << (f + 1.0) << " 0";
        for (int k = 0; k < 9; ++k) out << " 0";
        out << "\n";
      }
    }
  }
}

}  // namespace

TEST_CASE("corpus stem parsing") {
  NtuName n = parse_ntu_name("S001C002P003R001A010");
  CHECK(n.setup_id == 1);
  CHECK(n.camera_id == 2);
  CHECK(n.actor_id == 3);
  CHECK(n.replication_id == 1);
  CHECK(n.action_id == 10);

  NtuName big = parse_ntu_name("S017C003P040R002A060");
  CHECK(big.setup_id == 17);
  CHECK(big.actor_id == 40);
  CHECK(big.action_id == 60);

  CHECK_THROWS_AS(parse_ntu_name("S001C002P003R001A10"), MalformedFile);
  CHECK_THROWS_AS(parse_ntu_name("X001C002P003R001A010"), MalformedFile);
  CHECK_THROWS_AS(parse_ntu_name("S001C002P0x3R001A010"), MalformedFile);
  CHECK_THROWS_AS(parse_ntu_name(""), MalformedFile);
  CHECK_THROWS_AS(parse_ntu_name("S001C002P003R001A010X"), MalformedFile);
}

TEST_CASE("sequence stem formatting round-trips") {
  SkeletonSequence s = make_seq(3, 2);
  s.setup_id = 1;
  s.camera_id = 2;
  s.actor_id = 3;
  s.replication_id = 1;
  s.action_id = 10;
  CHECK(s.name() == "S001C002P003R001A010");
  NtuName n = parse_ntu_name(s.name());
  CHECK(n.actor_id == 3);
  CHECK(n.action_id == 10);
}

TEST_CASE("ntu file parse: layout, labels, and frame-major order") {
  TempDir dir;
  SkeletonTopology topo = chain3();
  std::string path = dir.file("S001C002P003R001A010.skeleton");
  write_raw(path, 3, {1, 1});

  SkeletonSequence seq = parse_ntu_file(path, topo);
  CHECK(seq.joint_count() == 3);
  CHECK(seq.frame_count() == 2);
  CHECK(seq.source_frame_count == 2);
  CHECK(seq.actor_id == 3);
  CHECK(seq.action_id == 10);
  CHECK(seq.camera_id == 2);
  // write_raw puts x = joint index + 1, y = frame index + 1.
  CHECK(seq.at(0, 0, 0) == 1.0);
  CHECK(seq.at(2, 0, 0) == 3.0);
  CHECK(seq.at(1, 1, 1) == 2.0);
}

TEST_CASE("ntu file parse failure modes") {
  TempDir dir;
  SkeletonTopology topo = chain3();

  std::string multi = dir.file("S001C002P003R001A011.skeleton");
  write_raw(multi, 3, {1, 2});
  CHECK_THROWS_AS(parse_ntu_file(multi, topo), MultiActorFile);

  std::string empty = dir.file("S001C002P003R001A012.skeleton");
  { std::ofstream out(empty); out << "0\n"; }
  CHECK_THROWS_AS(parse_ntu_file(empty, topo), MalformedFile);

  std::string wrong_joints = dir.file("S001C002P003R001A013.skeleton");
  write_raw(wrong_joints, 4, {1});
  CHECK_THROWS_AS(parse_ntu_file(wrong_joints, topo), MalformedFile);

  std::string truncated = dir.file("S001C002P003R001A014.skeleton");
  {
    std::ofstream out(truncated);
    out << "1\n1\n0 0 0 0 0 0 0 0 0 0\n3\n1 2 3\n";
  }
  CHECK_THROWS_AS(parse_ntu_file(truncated, topo), MalformedFile);

  std::string bad_name = dir.file("banana.skeleton");
  write_raw(bad_name, 3, {1});
  CHECK_THROWS_AS(parse_ntu_file(bad_name, topo), MalformedFile);

  CHECK_THROWS_AS(parse_ntu_file(dir.file("S009C001P001R001A001.skeleton"), topo),
                  IoError);
}

TEST_CASE("ntu round-trip is bitwise lossless") {
  TempDir dir;
  SkeletonTopology topo = chain3();
  SkeletonSequence seq = make_seq(3, 4);
  // Awkward doubles: negatives, tiny magnitudes, repeating fractions.
  seq.at(0, 0, 0) = -0.1234567890123456789;
  seq.at(1, 2, 1) = 1.0 / 3.0;
  seq.at(2, 3, 2) = 7.25e-11;
  seq.at(0, 1, 0) = -2.0000000000000004;
  seq.setup_id = 1; seq.camera_id = 2; seq.actor_id = 3;
  seq.replication_id = 1; seq.action_id = 10;

  std::string path = dir.file("S001C002P003R001A010.skeleton");
  write_ntu_file(path, seq);
  SkeletonSequence back = parse_ntu_file(path, topo);
  REQUIRE(back.joints.same_shape(seq.joints));
  CHECK(back.joints.max_abs_diff(seq.joints) == 0.0);

  // Second serialization of the parsed copy is byte-identical.
  std::string path2 = dir.file("S001C002P003R001A010_copy.skeleton");
  write_ntu_file(path2, back);
  std::ifstream f1(path), f2(path2);
  std::string s1((std::istreambuf_iterator<char>(f1)),
                 std::istreambuf_iterator<char>());
  std::string s2((std::istreambuf_iterator<char>(f2)),
                 std::istreambuf_iterator<char>());
  CHECK(s1 == s2);
}

TEST_CASE("length normalization trims and repeats the final frame") {
  SkeletonSequence hundred = make_seq(2, 100);
  SkeletonSequence cut = normalize_length(hundred, 75);
  CHECK(cut.frame_count() == 75);
  CHECK(cut.source_frame_count == 100);
  for (int t = 0; t < 75; ++t) CHECK(cut.at(1, t, 0) == hundred.at(1, t, 0));

  SkeletonSequence fifty = make_seq(2, 50);
  SkeletonSequence padded = normalize_length(fifty, 75);
  CHECK(padded.frame_count() == 75);
  CHECK(padded.source_frame_count == 50);
  for (int t = 0; t < 50; ++t) CHECK(padded.at(0, t, 1) == fifty.at(0, t, 1));
  for (int t = 50; t < 75; ++t) {
    for (int c = 0; c < 3; ++c) CHECK(padded.at(1, t, c) == fifty.at(1, 49, c));
  }

  SkeletonSequence exact = make_seq(2, 75);
  SkeletonSequence same = normalize_length(exact, 75);
  CHECK(same.joints.max_abs_diff(exact.joints) == 0.0);

  // Idempotence in both directions.
  SkeletonSequence twice = normalize_length(cut, 75);
  CHECK(twice.joints.max_abs_diff(cut.joints) == 0.0);
  SkeletonSequence twice_pad = normalize_length(padded, 75);
  CHECK(twice_pad.joints.max_abs_diff(padded.joints) == 0.0);

  CHECK_THROWS_AS(normalize_length(make_seq(2, 3), 0), InvalidConfig);
}

TEST_CASE("denoise leaves clean sequences untouched") {
  SkeletonSequence s = make_seq(3, 10, 5.0);
  // make_seq moves 1.0 per frame, above the 0.5 m default threshold; slow it.
  for (int j = 0; j < 3; ++j)
    for (int t = 0; t < 10; ++t)
      for (int c = 0; c < 3; ++c) s.at(j, t, c) = j + 0.01 * t + 0.001 * c;
  auto out = denoise(s);
  REQUIRE(out.has_value());
  CHECK(out->joints.max_abs_diff(s.joints) == 0.0);
}

TEST_CASE("denoise interpolates an isolated NaN linearly") {
  SkeletonSequence s = make_seq(1, 3);
  for (int t = 0; t < 3; ++t)
    for (int c = 0; c < 3; ++c) s.at(0, t, c) = 0.1 * t + c;
  s.at(0, 1, 0) = std::numeric_limits<double>::quiet_NaN();
  s.at(0, 1, 1) = std::numeric_limits<double>::quiet_NaN();
  s.at(0, 1, 2) = std::numeric_limits<double>::quiet_NaN();

  // One bad frame of three exceeds the default 20% budget; the toy needs a
  // permissive config so the repair path itself is what is under test.
  DenoiseConfig lax;
  lax.max_bad_frame_fraction = 0.5;
  auto out = denoise(s, lax);
  REQUIRE(out.has_value());
  // Hand oracle: midpoint of frames 0 and 2.
  CHECK(out->at(0, 1, 0) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(out->at(0, 1, 1) == doctest::Approx(1.1).epsilon(1e-12));
  CHECK(out->at(0, 1, 2) == doctest::Approx(2.1).epsilon(1e-12));
  CHECK(out->at(0, 0, 0) == s.at(0, 0, 0));
  CHECK(out->at(0, 2, 0) == s.at(0, 2, 0));
}

TEST_CASE("denoise repairs boundary gaps by extension") {
  SkeletonSequence s = make_seq(1, 4);
  for (int t = 0; t < 4; ++t)
    for (int c = 0; c < 3; ++c) s.at(0, t, c) = 0.05 * t;
  s.at(0, 0, 1) = std::numeric_limits<double>::infinity();
  s.at(0, 3, 2) = std::numeric_limits<double>::quiet_NaN();
  DenoiseConfig lax;
  lax.max_bad_frame_fraction = 0.6;
  auto out = denoise(s, lax);
  REQUIRE(out.has_value());
  CHECK(out->at(0, 0, 1) == doctest::Approx(0.05).epsilon(1e-12));  // next clean
  CHECK(out->at(0, 3, 2) == doctest::Approx(0.10).epsilon(1e-12));  // prev clean
}

TEST_CASE("denoise repairs an isolated positional spike") {
  SkeletonSequence s = make_seq(1, 5);
  for (int t = 0; t < 5; ++t)
    for (int c = 0; c < 3; ++c) s.at(0, t, c) = 0.02 * t;
  // One frame teleports 10 m away and returns.
  s.at(0, 2, 0) = 10.0;
  auto out = denoise(s);
  REQUIRE(out.has_value());
  CHECK(out->at(0, 2, 0) == doctest::Approx(0.04).epsilon(1e-9));
  CHECK(out->at(0, 2, 1) == doctest::Approx(0.04).epsilon(1e-9));

  // A genuine fast-but-sustained move (no recovery) is not a spike.
  SkeletonSequence fast = make_seq(1, 5);
  for (int t = 0; t < 5; ++t)
    for (int c = 0; c < 3; ++c) fast.at(0, t, c) = t >= 2 ? 10.0 : 0.0;
  auto kept = denoise(fast);
  REQUIRE(kept.has_value());
  CHECK(kept->at(0, 2, 0) == 10.0);
}

TEST_CASE("denoise rejects when too many frames are corrupt") {
  SkeletonSequence s = make_seq(2, 10);
  for (int j = 0; j < 2; ++j)
    for (int t = 0; t < 10; ++t)
      for (int c = 0; c < 3; ++c) s.at(j, t, c) = 0.01 * t;
  // 3 of 10 frames bad (30% > 20% default limit).
  for (int t : {2, 5, 8}) s.at(0, t, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(denoise(s).has_value());

  // Exactly 2 of 10 (20%, not above the limit) is repaired.
  SkeletonSequence ok = make_seq(2, 10);
  for (int j = 0; j < 2; ++j)
    for (int t = 0; t < 10; ++t)
      for (int c = 0; c < 3; ++c) ok.at(j, t, c) = 0.01 * t;
  for (int t : {2, 5}) ok.at(0, t, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK(denoise(ok).has_value());

  // A joint that is never observed cannot be repaired.
  SkeletonSequence never = make_seq(1, 3);
  DenoiseConfig lax;
  lax.max_bad_frame_fraction = 1.1;
  for (int t = 0; t < 3; ++t)
    never.at(0, t, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(denoise(never, lax).has_value());
}

TEST_CASE("camera split rule") {
  CHECK(split_for_camera(1) == Split::eval);
  CHECK(split_for_camera(2) == Split::train);
  CHECK(split_for_camera(3) == Split::train);
}

TEST_CASE("corpus index bookkeeping and manifest round-trip") {
  TempDir dir;
  CorpusIndex index;
  index.entries.push_back({"a.skeleton", 3, 10, 2, Split::train});
  index.entries.push_back({"b.skeleton", 1, 4, 1, Split::eval});
  index.entries.push_back({"c.skeleton", 3, 4, 3, Split::train});
  index.validate();

  CHECK(index.actor_ids() == std::vector<int>{1, 3});
  CHECK(index.action_ids() == std::vector<int>{4, 10});
  CHECK(index.count(Split::train) == 2);
  CHECK(index.count(Split::eval) == 1);

  std::string path = dir.file("manifest.tsv");
  save_manifest(index, path);
  CorpusIndex back = load_manifest(path);
  REQUIRE(back.entries.size() == 3);
  for (size_t i = 0; i < 3; ++i) {
    CHECK(back.entries[i].path == index.entries[i].path);
    CHECK(back.entries[i].actor_id == index.entries[i].actor_id);
    CHECK(back.entries[i].action_id == index.entries[i].action_id);
    CHECK(back.entries[i].camera_id == index.entries[i].camera_id);
    CHECK(back.entries[i].split == index.entries[i].split);
  }

  CorpusIndex bad = index;
  bad.entries[0].split = Split::eval;  // camera 2 must be train
  CHECK_THROWS_AS(bad.validate(), InvalidConfig);

  std::string garbled = dir.file("garbled.tsv");
  { std::ofstream out(garbled); out << "p\t1\t1\t2\tneither\n"; }
  CHECK_THROWS_AS(load_manifest(garbled), ManifestMismatch);
  CHECK_THROWS_AS(load_manifest(dir.file("missing.tsv")), IoError);
}

TEST_CASE("load_split root-centers and enforces the frame contract") {
  TempDir dir;
  SkeletonTopology topo = chain3();

  SkeletonSequence seq = make_seq(3, 5);
  seq.setup_id = 1; seq.camera_id = 2; seq.actor_id = 3;
  seq.replication_id = 1; seq.action_id = 10;
  std::string path = dir.file("S001C002P003R001A010.skeleton");
  write_ntu_file(path, seq);

  CorpusIndex index;
  index.entries.push_back({path, 3, 10, 2, Split::train});

  auto seqs = load_split(index, Split::train, topo, 5);
  REQUIRE(seqs.size() == 1);
  // Frame-1 root exactly at the origin; all joints shifted by the same offset.
  for (int c = 0; c < 3; ++c) CHECK(seqs[0].at(0, 0, c) == 0.0);
  CHECK(seqs[0].at(2, 3, 1) ==
        doctest::Approx(seq.at(2, 3, 1) - seq.at(0, 0, 1)).epsilon(1e-15));

  CHECK(load_split(index, Split::eval, topo, 5).empty());
  CHECK_THROWS_AS(load_split(index, Split::train, topo, 6), ShapeMismatch);

  CorpusIndex lying;
  lying.entries.push_back({path, 4, 10, 2, Split::train});
  CHECK_THROWS_AS(load_split(lying, Split::train, topo, 5), ManifestMismatch);
}

TEST_CASE("quadruple validation catches broken grids") {
  SkeletonSequence ap = make_seq(2, 3); ap.actor_id = 1; ap.action_id = 1;
  SkeletonSequence bp = ap; bp.action_id = 2;
  SkeletonSequence aq = ap; aq.actor_id = 2;
  SkeletonSequence bq = ap; bq.actor_id = 2; bq.action_id = 2;
  CHECK_NOTHROW(validate_quadruple({ap, bp, aq, bq}));

  PairedQuadruple cam_mix{ap, bp, aq, bq};
  cam_mix.s_bq.camera_id = 3;
  CHECK_THROWS_AS(validate_quadruple(cam_mix), LabelMismatch);

  PairedQuadruple same_actor{ap, bp, ap, bp};
  CHECK_THROWS_AS(validate_quadruple(same_actor), LabelMismatch);

  PairedQuadruple not_grid{ap, bp, aq, bq};
  not_grid.s_bq.action_id = 3;
  CHECK_THROWS_AS(validate_quadruple(not_grid), LabelMismatch);
}

TEST_CASE("build_pairs enumerates exactly the 2x2 grids") {
  auto cell = [](int actor, int action, int camera) {
    SkeletonSequence s = make_seq(2, 3);
    s.actor_id = actor;
    s.action_id = action;
    s.camera_id = camera;
    return s;
  };

  // Minimal grid: one quadruple, canonical roles.
  std::vector<SkeletonSequence> minimal = {cell(1, 1, 2), cell(1, 2, 2),
                                           cell(2, 1, 2), cell(2, 2, 2)};
  auto quads = build_pairs(minimal, 0);
  REQUIRE(quads.size() == 1);
  CHECK(quads[0].s_ap.actor_id == 1);
  CHECK(quads[0].s_ap.action_id == 1);
  CHECK(quads[0].s_bq.actor_id == 2);
  CHECK(quads[0].s_bq.action_id == 2);

  // One actor only: no grid.
  std::vector<SkeletonSequence> lone = {cell(1, 1, 2), cell(1, 2, 2)};
  CHECK_THROWS_AS(build_pairs(lone, 0), NoValidPairs);

  // 3 actors x 3 actions on one camera: C(3,2)^2 = 9 canonical quadruples.
  std::vector<SkeletonSequence> grid9;
  for (int p = 1; p <= 3; ++p)
    for (int a = 1; a <= 3; ++a) grid9.push_back(cell(p, a, 2));
  CHECK(build_pairs(grid9, 0).size() == 9);

  // Repeated recordings of one cell multiply combinatorially: the four
  // (actor-pair, action-pair) grids that use cell (1,1) each gain a variant.
  grid9.push_back(cell(1, 1, 2));
  CHECK(build_pairs(grid9, 0).size() == 13);
  // Brute-force recount: for each (p<q, a<b), product of cell multiplicities.
  {
    std::map<std::pair<int, int>, int> mult;
    for (const auto& s : grid9) ++mult[{s.actor_id, s.action_id}];
    size_t expect = 0;
    for (int p = 1; p <= 3; ++p)
      for (int q = p + 1; q <= 3; ++q)
        for (int a = 1; a <= 3; ++a)
          for (int b = a + 1; b <= 3; ++b)
            expect += size_t(mult[{p, a}] * mult[{p, b}] * mult[{q, a}] *
                             mult[{q, b}]);
    CHECK(build_pairs(grid9, 0).size() == expect);
  }

  // Cameras never mix: same grid split over two cameras yields per-camera
  // quadruples only.
  std::vector<SkeletonSequence> two_cams = {cell(1, 1, 2), cell(1, 2, 2),
                                            cell(2, 1, 3), cell(2, 2, 3)};
  CHECK_THROWS_AS(build_pairs(two_cams, 0), NoValidPairs);

  // Deterministic order per seed, permuted across seeds.
  auto q0 = build_pairs(grid9, 7);
  auto q1 = build_pairs(grid9, 7);
  REQUIRE(q0.size() == q1.size());
  for (size_t i = 0; i < q0.size(); ++i) {
    CHECK(q0[i].s_ap.name() == q1[i].s_ap.name());
    CHECK(q0[i].s_bq.name() == q1[i].s_bq.name());
  }
  auto q2 = build_pairs(grid9, 8);
  bool any_diff = false;
  for (size_t i = 0; i < q0.size(); ++i)
    any_diff = any_diff || q0[i].s_ap.actor_id != q2[i].s_ap.actor_id ||
               q0[i].s_ap.action_id != q2[i].s_ap.action_id ||
               q0[i].s_bq.actor_id != q2[i].s_bq.actor_id;
  CHECK(any_diff);
}

TEST_CASE("build_pairs output satisfies all invariants on a synthetic pool") {
  const SkeletonTopology& topo = kinect25_topology();
  std::vector<SkeletonSequence> pool;
  for (int p = 1; p <= 3; ++p)
    for (int a = 1; a <= 3; ++a)
      for (int cam = 2; cam <= 3; ++cam)
        pool.push_back(synth_sequence(p, a, cam, 99, topo));
  auto quads = build_pairs(pool, 42);
  CHECK(quads.size() == 2 * 9);
  for (const auto& q : quads) {
    CHECK_NOTHROW(validate_quadruple(q));
    CHECK(q.s_ap.actor_id < q.s_aq.actor_id);
    CHECK(q.s_ap.action_id < q.s_bp.action_id);
  }
}

TEST_CASE("net input layout transposes joints and time") {
  SkeletonSequence s = make_seq(3, 4);
  Tensor net = to_net_input(s);
  REQUIRE(net.shape() == std::vector<size_t>{4, 3, 3});
  for (int j = 0; j < 3; ++j)
    for (int t = 0; t < 4; ++t)
      for (int c = 0; c < 3; ++c) CHECK(net.at(t, j, c) == s.at(j, t, c));
  SkeletonSequence back = from_net_output(net, 3);
  CHECK(back.joints.max_abs_diff(s.joints) == 0.0);
}

TEST_CASE("kinect topology is a rooted 25-joint tree") {
  const SkeletonTopology& topo = kinect25_topology();
  CHECK(topo.joint_count() == 25);
  CHECK_NOTHROW(topo.validate());
  CHECK(topo.parent[size_t(topo.root())] == topo.root());
  CHECK(topo.end_effectors.size() == 5);
  for (double h : topo.chain_length) CHECK(h > 0.0);
  // End effectors are leaves: nothing points at them.
  for (int e : topo.end_effectors) {
    for (int j = 0; j < topo.joint_count(); ++j) {
      if (j == e) continue;
      CHECK(topo.parent[size_t(j)] != e);
    }
  }
  CHECK(kinect25_rest_offsets().size() == 25);
}

TEST_CASE("synthetic corpus is deterministic and label-faithful") {
  const SkeletonTopology& topo = kinect25_topology();
  SkeletonSequence a = synth_sequence(2, 3, 1, 5, topo);
  SkeletonSequence b = synth_sequence(2, 3, 1, 5, topo);
  CHECK(a.joints.max_abs_diff(b.joints) == 0.0);
  CHECK(a.actor_id == 2);
  CHECK(a.action_id == 3);
  CHECK(a.camera_id == 1);
  CHECK(a.joints.all_finite());
  CHECK(a.joint_count() == 25);

  SkeletonSequence c = synth_sequence(2, 3, 1, 6, topo);
  CHECK(a.joints.max_abs_diff(c.joints) > 0.0);

  // Native lengths cycle so trim and pad are both exercised.
  std::set<int> lengths;
  for (int p = 1; p <= 4; ++p)
    for (int act = 1; act <= 6; ++act)
      lengths.insert(synth_sequence(p, act, 1, 5, topo).frame_count());
  CHECK(lengths == std::set<int>{65, 75, 85});
}

TEST_CASE("synthetic grid writes a loadable corpus") {
  TempDir dir;
  const SkeletonTopology& topo = kinect25_topology();
  CorpusIndex index =
      generate_synthetic(dir.file("raw"), 4, 6, 3, 5, topo);
  CHECK(index.entries.size() == 72);
  CHECK_NOTHROW(index.validate());
  CHECK(index.count(Split::eval) == 24);
  CHECK(index.count(Split::train) == 48);
  CHECK(index.actor_ids() == std::vector<int>{1, 2, 3, 4});
  CHECK(index.action_ids() == std::vector<int>{1, 2, 3, 4, 5, 6});

  // Every file parses cleanly with the labels the index claims.
  for (const auto& e : index.entries) {
    SkeletonSequence s = parse_ntu_file(e.path, topo);
    CHECK(s.actor_id == e.actor_id);
    CHECK(s.action_id == e.action_id);
    CHECK(s.camera_id == e.camera_id);
  }

  // Same seed: bit-identical files.
  CorpusIndex again =
      generate_synthetic(dir.file("raw2"), 4, 6, 3, 5, topo);
  for (size_t i = 0; i < index.entries.size(); ++i) {
    std::ifstream f1(index.entries[i].path), f2(again.entries[i].path);
    std::string s1((std::istreambuf_iterator<char>(f1)),
                   std::istreambuf_iterator<char>());
    std::string s2((std::istreambuf_iterator<char>(f2)),
                   std::istreambuf_iterator<char>());
    CHECK(s1 == s2);
    CHECK(!s1.empty());
  }
}

TEST_CASE("synthetic actors are separable by mean bone lengths") {
  const SkeletonTopology& topo = kinect25_topology();
  const int actors = 4, actions = 6;

  auto mean_bone = [&](const SkeletonSequence& s) {
    double total = 0.0;
    int bones = 0;
    for (int j = 0; j < topo.joint_count(); ++j) {
      int par = topo.parent[size_t(j)];
      if (par == j) continue;
      double acc = 0.0;
      for (int t = 0; t < s.frame_count(); ++t) {
        double d2 = 0.0;
        for (int c = 0; c < 3; ++c) {
          double d = s.at(j, t, c) - s.at(par, t, c);
          d2 += d * d;
        }
        acc += std::sqrt(d2);
      }
      total += acc / s.frame_count();
      ++bones;
    }
    return total / bones;
  };

  // Centroid per actor from camera-2 clips; classify camera-3 clips.
  std::vector<double> centroid(size_t(actors), 0.0);
  for (int p = 1; p <= actors; ++p) {
    for (int a = 1; a <= actions; ++a)
      centroid[size_t(p - 1)] += mean_bone(synth_sequence(p, a, 2, 5, topo));
    centroid[size_t(p - 1)] /= actions;
  }
  // Profiles are at least 5% apart pairwise.
  for (int p = 0; p < actors; ++p)
    for (int q = p + 1; q < actors; ++q)
      CHECK(std::abs(centroid[size_t(p)] - centroid[size_t(q)]) /
                std::min(centroid[size_t(p)], centroid[size_t(q)]) >
            0.05);

  int correct = 0, total = 0;
  for (int p = 1; p <= actors; ++p)
    for (int a = 1; a <= actions; ++a) {
      double m = mean_bone(synth_sequence(p, a, 3, 5, topo));
      int best = 0;
      for (int k = 1; k < actors; ++k)
        if (std::abs(m - centroid[size_t(k)]) <
            std::abs(m - centroid[size_t(best)]))
          best = k;
      correct += (best == p - 1);
      ++total;
    }
  CHECK(correct == total);  // nearest-centroid accuracy 1.0
}

TEST_CASE("label_index maps one-based ids onto classifier classes") {
  CHECK(label_index(1) == 0);
  CHECK(label_index(40) == 39);
}
