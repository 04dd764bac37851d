#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "pmrt/anonymizer.hpp"
#include "pmrt/dataset.hpp"
#include "pmrt/errors.hpp"
#include "pmrt/network.hpp"
#include "pmrt/ntu_io.hpp"
#include "pmrt/rng.hpp"
#include "pmrt/topology.hpp"

using namespace pmrt;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("pmrt_anon_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
  static int counter() {
    static int n = 0;
    return n++;
  }
};

NetworkConfig tiny_config() {
  NetworkConfig cfg;
  cfg.joints = 5;
  cfg.frames = 8;
  cfg.embedding_channels = 6;
  cfg.embedding_length = 4;
  cfg.encoder_channels = {8, 4, 6};
  cfg.decoder_channels = {12, 8, 8};
  cfg.classifier_channels = {6, 5, 4};
  cfg.classifier_dense = {4, 6};
  cfg.qc_channels = {8, 4, 4, 4, 4};
  cfg.qc_dense = {8, 4, 1};
  cfg.y_action = 3;
  cfg.y_actor = 2;
  cfg.validate();
  return cfg;
}

SkeletonTopology chain5() {
  SkeletonTopology topo;
  topo.parent = {0, 0, 1, 2, 3};
  topo.end_effectors = {4};
  topo.chain_length = {1.2};
  topo.validate();
  return topo;
}

SkeletonSequence make_seq(int actor, int action, int camera) {
  SkeletonSequence s;
  s.actor_id = actor;
  s.action_id = action;
  s.camera_id = camera;
  s.setup_id = 1;
  s.replication_id = 1;
  s.joints = Tensor({5, 8, 3});
  Rng rng(mix_seed(77, uint64_t(actor * 100 + action * 10 + camera)));
  for (size_t i = 0; i < s.joints.size(); ++i)
    s.joints[i] = 0.5 * rng.normal();
  return s;
}

PmrModel make_model() {
  PmrModel model(tiny_config());
  model.init_parameters(5);
  return model;
}

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

// 2 actors x 2 actions on cameras 1 (eval) and 2 (train), written as corpus
// files with their index.
CorpusIndex write_corpus(const TempDir& dir) {
  CorpusIndex index;
  for (int camera : {1, 2})
    for (int actor : {1, 2})
      for (int action : {1, 2}) {
        SkeletonSequence s = make_seq(actor, action, camera);
        std::string path = dir.file(s.name() + ".skeleton");
        write_ntu_file(path, s);
        index.entries.push_back(
            {path, actor, action, camera, split_for_camera(camera)});
      }
  index.validate();
  return index;
}

}  // namespace

TEST_CASE("constant dummy selection") {
  std::vector<SkeletonSequence> pool = {make_seq(2, 2, 1), make_seq(1, 2, 1),
                                        make_seq(2, 1, 1)};
  DummyPolicy policy;
  policy.mode = DummyPolicy::Mode::constant;

  // Empty ref resolves to the lexicographically first stem.
  const SkeletonSequence& first = select_dummy(pool, policy, pool[0]);
  CHECK(first.name() == "S001C001P001R001A002");

  policy.constant_ref = "S001C001P002R001A001";
  const SkeletonSequence& named = select_dummy(pool, policy, pool[0]);
  CHECK(named.actor_id == 2);
  CHECK(named.action_id == 1);

  policy.constant_ref = "S001C001P009R001A001";
  CHECK_THROWS_AS(select_dummy(pool, policy, pool[0]), InvalidConfig);

  std::vector<SkeletonSequence> empty;
  policy.constant_ref = "";
  CHECK_THROWS_AS(select_dummy(empty, policy, pool[0]), EmptyDummyPool);
}

TEST_CASE("random dummy selection depends only on seed and input stem") {
  std::vector<SkeletonSequence> pool;
  for (int actor = 1; actor <= 2; ++actor)
    for (int action = 1; action <= 2; ++action)
      pool.push_back(make_seq(actor, action, 1));

  DummyPolicy policy;
  policy.mode = DummyPolicy::Mode::random;
  policy.rng_seed = 9;

  std::vector<SkeletonSequence> inputs;
  for (int action = 1; action <= 2; ++action)
    for (int actor = 1; actor <= 2; ++actor)
      for (int camera : {1, 2, 3})
        inputs.push_back(make_seq(actor, action, camera));

  std::vector<std::string> forward, reverse;
  for (const auto& in : inputs)
    forward.push_back(select_dummy(pool, policy, in).name());
  for (auto it = inputs.rbegin(); it != inputs.rend(); ++it)
    reverse.push_back(select_dummy(pool, policy, *it).name());
  std::reverse(reverse.begin(), reverse.end());
  CHECK(forward == reverse);

  // The draw actually varies across inputs and across seeds.
  std::set<std::string> distinct(forward.begin(), forward.end());
  CHECK(distinct.size() > 1);
  DummyPolicy other = policy;
  other.rng_seed = 10;
  std::vector<std::string> reseeded;
  for (const auto& in : inputs)
    reseeded.push_back(select_dummy(pool, other, in).name());
  CHECK(forward != reseeded);
}

TEST_CASE("anonymize swaps in the dummy privacy embedding") {
  PmrModel model = make_model();
  SkeletonSequence input = make_seq(1, 2, 1);
  SkeletonSequence dummy = make_seq(2, 1, 1);
  std::vector<SkeletonSequence> pool = {dummy};
  DummyPolicy policy;  // constant, empty ref: the only pool entry

  AnonymizedSequence anon = anonymize(model, input, policy, pool);

  SkeletonSequence manual = model.decode_sequence(
      model.encode(input).motion, model.encode(dummy).privacy);
  CHECK(anon.seq.joints.max_abs_diff(manual.joints) == 0.0);

  CHECK(anon.seq.actor_id == kAnonymizedActorId);
  CHECK(anon.seq.action_id == input.action_id);
  CHECK(anon.seq.camera_id == input.camera_id);
  CHECK(anon.seq.setup_id == input.setup_id);
  CHECK(anon.seq.replication_id == input.replication_id);
  CHECK(anon.seq.source_frame_count == anon.seq.frame_count());
  CHECK(anon.source_name == input.name());
  CHECK(anon.dummy_name == dummy.name());
  CHECK(anon.true_actor_id == input.actor_id);

  CHECK_THROWS_AS(anonymize(model, input, policy, {}), EmptyDummyPool);
}

TEST_CASE("anonymizing onto oneself is plain reconstruction") {
  PmrModel model = make_model();
  SkeletonSequence input = make_seq(2, 1, 1);
  std::vector<SkeletonSequence> pool = {input};
  DummyPolicy policy;

  AnonymizedSequence anon = anonymize(model, input, policy, pool);
  EmbeddingPair emb = model.encode(input);
  SkeletonSequence rec = model.decode_sequence(emb.motion, emb.privacy);
  CHECK(anon.seq.joints.max_abs_diff(rec.joints) == 0.0);
}

TEST_CASE("constant policy gives every input the same privacy source") {
  PmrModel model = make_model();
  std::vector<SkeletonSequence> pool = {make_seq(2, 1, 1), make_seq(1, 1, 1)};
  DummyPolicy policy;

  SkeletonSequence in_a = make_seq(1, 2, 2);
  SkeletonSequence in_b = make_seq(2, 2, 3);
  AnonymizedSequence a = anonymize(model, in_a, policy, pool);
  AnonymizedSequence b = anonymize(model, in_b, policy, pool);
  CHECK(a.dummy_name == b.dummy_name);
  // Motion content still distinguishes the outputs.
  CHECK(a.seq.joints.max_abs_diff(b.seq.joints) > 0.0);
}

TEST_CASE("manifest round-trip") {
  TempDir dir;
  std::vector<AnonymizeRecord> records = {
      {"in/a.skeleton", "out/a.skeleton", "S001C001P002R001A001", 1, 2, 1},
      {"in/b.skeleton", "out/b.skeleton", "S001C001P002R001A001", 2, 1, 1}};
  save_anonymize_manifest(records, dir.file("manifest.tsv"));
  auto loaded = load_anonymize_manifest(dir.file("manifest.tsv"));
  REQUIRE(loaded.size() == 2);
  for (size_t i = 0; i < 2; ++i) {
    CHECK(loaded[i].source_path == records[i].source_path);
    CHECK(loaded[i].output_path == records[i].output_path);
    CHECK(loaded[i].dummy == records[i].dummy);
    CHECK(loaded[i].true_actor_id == records[i].true_actor_id);
    CHECK(loaded[i].action_id == records[i].action_id);
    CHECK(loaded[i].camera_id == records[i].camera_id);
  }

  {
    std::ofstream bad(dir.file("bad.tsv"));
    bad << "only\ttwo\n";
  }
  CHECK_THROWS_AS(load_anonymize_manifest(dir.file("bad.tsv")),
                  ManifestMismatch);
  CHECK_THROWS_AS(load_anonymize_manifest(dir.file("missing.tsv")), IoError);
}

TEST_CASE("corpus anonymization covers the eval split exactly") {
  TempDir dir;
  CorpusIndex index = write_corpus(dir);
  PmrModel model = make_model();
  std::vector<SkeletonSequence> pool =
      load_split(index, Split::eval, chain5(), 8);
  DummyPolicy policy;  // constant, lexicographically first eval stem

  std::string out_dir = dir.file("anon");
  CorpusIndex out = anonymize_corpus(model, index, policy, pool, chain5(),
                                     out_dir);

  REQUIRE(out.entries.size() == index.count(Split::eval));
  for (const auto& e : out.entries) {
    CHECK(e.split == Split::eval);
    CHECK(std::filesystem::exists(e.path));
  }
  // Outputs keep their original stems, so the standard loader accepts them
  // and the index labels still agree with the filenames.
  std::vector<SkeletonSequence> reloaded =
      load_split(out, Split::eval, chain5(), 8);
  CHECK(reloaded.size() == out.entries.size());

  auto records = load_anonymize_manifest(
      (std::filesystem::path(out_dir) / "anonymize_manifest.tsv").string());
  REQUIRE(records.size() == out.entries.size());
  std::set<std::string> dummies;
  size_t pos = 0;
  for (const auto& e : index.entries) {
    if (e.split != Split::eval) continue;
    CHECK(records[pos].source_path == e.path);
    CHECK(records[pos].true_actor_id == e.actor_id);
    CHECK(records[pos].action_id == e.action_id);
    CHECK(records[pos].camera_id == e.camera_id);
    dummies.insert(records[pos].dummy);
    ++pos;
  }
  CHECK(dummies.size() == 1);  // constant policy: one privacy source

  // A second run is bit-identical, file by file.
  std::string out_dir2 = dir.file("anon2");
  CorpusIndex out2 = anonymize_corpus(model, index, policy, pool, chain5(),
                                      out_dir2);
  REQUIRE(out2.entries.size() == out.entries.size());
  for (size_t i = 0; i < out.entries.size(); ++i)
    CHECK(read_bytes(out.entries[i].path) == read_bytes(out2.entries[i].path));
}

TEST_CASE("random-policy corpus is reproducible from the seed") {
  TempDir dir;
  CorpusIndex index = write_corpus(dir);
  PmrModel model = make_model();
  std::vector<SkeletonSequence> pool =
      load_split(index, Split::eval, chain5(), 8);
  DummyPolicy policy;
  policy.mode = DummyPolicy::Mode::random;
  policy.rng_seed = 4;

  anonymize_corpus(model, index, policy, pool, chain5(), dir.file("r1"));
  anonymize_corpus(model, index, policy, pool, chain5(), dir.file("r2"));
  auto r1 = load_anonymize_manifest(dir.file("r1/anonymize_manifest.tsv"));
  auto r2 = load_anonymize_manifest(dir.file("r2/anonymize_manifest.tsv"));
  REQUIRE(r1.size() == r2.size());
  for (size_t i = 0; i < r1.size(); ++i) CHECK(r1[i].dummy == r2[i].dummy);
}
