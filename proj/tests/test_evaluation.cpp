#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pmrt/checkpoint.hpp"
#include "pmrt/config.hpp"
#include "pmrt/errors.hpp"
#include "pmrt/evaluation.hpp"
#include "pmrt/ntu_io.hpp"
#include "pmrt/rng.hpp"

using namespace pmrt;
using nlohmann::json;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("pmrt_eval_test_" + std::to_string(::getpid()) + "_" +
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

SkeletonTopology chain5() {
  SkeletonTopology topo;
  topo.parent = {0, 0, 1, 2, 3};
  topo.end_effectors = {4};
  topo.chain_length = {1.2};
  topo.validate();
  return topo;
}

// Actor identity is a constant level on the x axis, action on the y axis,
// so each classifier has a clean linear cue on its own coordinate.
SkeletonSequence level_seq(int actor, int action, int camera, uint64_t salt) {
  SkeletonSequence s;
  s.actor_id = actor;
  s.action_id = action;
  s.camera_id = camera;
  s.setup_id = 1;
  s.replication_id = 1;
  s.joints = Tensor({5, 8, 3});
  Rng rng(mix_seed(salt, uint64_t(actor * 1000 + action * 100 + camera)));
  for (size_t j = 0; j < 5; ++j)
    for (size_t t = 0; t < 8; ++t) {
      s.joints.at(j, t, 0) = 1.5 * (actor - 1) + 0.1 * rng.normal();
      s.joints.at(j, t, 1) = 1.5 * (action - 1) + 0.1 * rng.normal();
      s.joints.at(j, t, 2) = 0.1 * rng.normal();
    }
  return s;
}

void zero_params(AttackModel& model) {
  for (Param* p : model.params())
    for (size_t i = 0; i < p->value.size(); ++i) p->value[i] = 0.0;
}

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

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

}  // namespace

TEST_CASE("attack rank bookkeeping under uniform scores") {
  // All-zero parameters give uniform probabilities; the documented
  // tie-break (toward the smaller class index) makes every rank exactly
  // the label index + 1, pinning the rank and top-k arithmetic.
  AttackModel model(5, 8, 4, LabelKind::actor);
  zero_params(model);

  std::vector<SkeletonSequence> corpus;
  for (int actor : {1, 2, 3, 4, 1, 2})
    corpus.push_back(level_seq(actor, 1, 1, 3));

  AttackResult res = attack(model, corpus);
  CHECK(res.k == 2);  // four classes: top-k falls back to ceil(4/2)
  CHECK(res.count == 6);
  REQUIRE(res.ranks.size() == 6);
  for (size_t i = 0; i < corpus.size(); ++i) {
    CHECK(res.ranks[i] == corpus[i].actor_id);
    CHECK(res.names[i] == corpus[i].name());
  }
  CHECK(res.top1 == doctest::Approx(2.0 / 6.0));
  CHECK(res.topk == doctest::Approx(4.0 / 6.0));
  CHECK(res.top1 <= res.topk);
  CHECK(res.per_class_top1.at(1) == 1.0);
  CHECK(res.per_class_top1.at(2) == 0.0);
  CHECK(res.per_class_top1.at(3) == 0.0);
  CHECK(res.per_class_top1.at(4) == 0.0);

  std::vector<SkeletonSequence> outside = {level_seq(5, 1, 1, 3)};
  CHECK_THROWS_AS(attack(model, outside), LabelMismatch);

  SkeletonSequence wrong = level_seq(1, 1, 1, 3);
  wrong.joints = Tensor({5, 6, 3});
  CHECK_THROWS_AS(model.scores(wrong), ShapeMismatch);
}

TEST_CASE("classifier training separates level-coded labels") {
  std::vector<SkeletonSequence> train, heldout;
  for (int actor : {1, 2})
    for (int action : {1, 2})
      for (int rep = 0; rep < 4; ++rep)
        train.push_back(level_seq(actor, action, 2, 100 + rep));
  for (int actor : {1, 2})
    for (int action : {1, 2})
      heldout.push_back(level_seq(actor, action, 1, 500));

  AttackTrainConfig cfg;
  cfg.epochs = 60;
  cfg.batch_size = 4;

  AttackModel reid = train_attacker(train, cfg);
  CHECK(reid.kind() == LabelKind::actor);
  CHECK(reid.classes() == 2);
  AttackResult res = attack(reid, heldout);
  CHECK(res.k == 1);  // two classes
  CHECK(res.top1 >= 0.9);

  AttackModel act = train_classifier(train, LabelKind::action, cfg);
  CHECK(act.kind() == LabelKind::action);
  AttackResult ares = attack(act, heldout);
  CHECK(ares.top1 >= 0.9);

  // Fewer than two distinct labels cannot train.
  std::vector<SkeletonSequence> mono;
  for (int rep = 0; rep < 3; ++rep) mono.push_back(level_seq(1, 1, 2, rep));
  CHECK_THROWS_AS(train_attacker(mono, cfg), InsufficientData);
  CHECK_THROWS_AS(train_classifier({}, LabelKind::action, cfg),
                  InsufficientData);
}

TEST_CASE("attacker save and load round-trip") {
  TempDir dir;
  std::vector<SkeletonSequence> train;
  for (int actor : {1, 2})
    for (int rep = 0; rep < 3; ++rep)
      train.push_back(level_seq(actor, 1, 2, rep));
  AttackTrainConfig cfg;
  cfg.epochs = 5;
  AttackModel model = train_attacker(train, cfg);

  save_attacker(model, dir.file("attacker.ckpt"));
  AttackModel loaded = load_attacker(dir.file("attacker.ckpt"));
  CHECK(loaded.kind() == model.kind());
  CHECK(loaded.classes() == model.classes());
  CHECK(loaded.joints() == model.joints());
  CHECK(loaded.frames() == model.frames());
  for (int actor : {1, 2}) {
    SkeletonSequence probe = level_seq(actor, 2, 1, 42);
    std::vector<double> a = model.scores(probe);
    std::vector<double> b = loaded.scores(probe);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
  }

  {
    std::ofstream out(dir.file("garbage.ckpt"), std::ios::binary);
    out << "noise";
  }
  CHECK_THROWS_AS(load_attacker(dir.file("garbage.ckpt")), CorruptCheckpoint);

  Archive foreign;
  foreign.strings["kind"] = "trainer";
  save_archive(dir.file("foreign.ckpt"), foreign);
  CHECK_THROWS_AS(load_attacker(dir.file("foreign.ckpt")), CorruptCheckpoint);
}

TEST_CASE("utility report follows the retarget convention") {
  TempDir dir;
  SkeletonTopology topo = chain5();

  // 2 actors x 2 actions on cameras 1 and 2.
  CorpusIndex index;
  std::map<std::string, SkeletonSequence> by_name;
  for (int camera : {1, 2})
    for (int actor : {1, 2})
      for (int action : {1, 2}) {
        SkeletonSequence s = level_seq(actor, action, camera, 9);
        std::string path = dir.file(s.name() + ".skeleton");
        write_ntu_file(path, s);
        index.entries.push_back(
            {path, actor, action, camera, split_for_camera(camera)});
        by_name[s.name()] = s;
      }
  index.validate();

  std::filesystem::create_directories(dir.file("anon"));
  std::vector<AnonymizeRecord> manifest;

  // Output 1 equals the real recording of the dummy actor performing the
  // input's action in the input's view: retarget error is exactly zero.
  SkeletonSequence in1 = by_name.at("S001C001P001R001A001");
  SkeletonSequence target = by_name.at("S001C001P002R001A001");
  SkeletonSequence out1 = target;
  out1.actor_id = in1.actor_id;  // stems keep the source identity
  out1.action_id = in1.action_id;
  std::string out1_path = dir.file("anon/" + in1.name() + ".skeleton");
  write_ntu_file(out1_path, out1);
  manifest.push_back({dir.file(in1.name() + ".skeleton"), out1_path,
                      "S001C002P002R001A001", 1, 1, 1});

  // Output 2 shifts one non-root joint; its dummy actor has no recording in
  // the corpus, so the retarget column falls back to the original.
  SkeletonSequence in2 = by_name.at("S001C001P001R001A002");
  SkeletonSequence out2 = in2;
  for (size_t t = 0; t < 8; ++t) out2.joints.at(4, t, 0) += 0.3;
  std::string out2_path = dir.file("anon/" + in2.name() + ".skeleton");
  write_ntu_file(out2_path, out2);
  manifest.push_back({dir.file(in2.name() + ".skeleton"), out2_path,
                      "S001C002P003R001A002", 1, 2, 1});

  UtilityReport rep = utility_mse(index, manifest, topo, 8);
  CHECK(rep.count == 2);
  CHECK(rep.retarget_covered == 1);
  REQUIRE(rep.per_retarget.size() == 2);
  CHECK(rep.per_retarget[0] == 0.0);
  // One joint of five moved by 0.3 on one of three axes over every frame.
  double expected = (8 * 0.3 * 0.3) / (5.0 * 8.0 * 3.0);
  CHECK(rep.per_original[1] == doctest::Approx(expected).epsilon(1e-9));
  CHECK(rep.per_retarget[1] == rep.per_original[1]);
  CHECK(rep.mse_retarget ==
        doctest::Approx((rep.per_retarget[0] + rep.per_retarget[1]) / 2.0));
  CHECK(rep.mse_vs_original ==
        doctest::Approx((rep.per_original[0] + rep.per_original[1]) / 2.0));
  CHECK(rep.per_original[0] > 0.0);  // retargeted output is not the input

  // A uniform translation of a whole output is removed by root centering.
  SkeletonSequence out3 = in2;
  for (size_t i = 0; i < out3.joints.size(); ++i) out3.joints[i] += 2.0;
  std::string out3_path = dir.file("anon2/" + in2.name() + ".skeleton");
  std::filesystem::create_directories(dir.file("anon2"));
  write_ntu_file(out3_path, out3);
  std::vector<AnonymizeRecord> shifted = {
      {dir.file(in2.name() + ".skeleton"), out3_path,
       "S001C002P003R001A002", 1, 2, 1}};
  UtilityReport rep3 = utility_mse(index, shifted, topo, 8);
  CHECK(rep3.per_original[0] == doctest::Approx(0.0).epsilon(1e-18));

  std::vector<AnonymizeRecord> bad = manifest;
  bad[0].source_path = dir.file("nowhere.skeleton");
  CHECK_THROWS_AS(utility_mse(index, bad, topo, 8), ManifestMismatch);

  SkeletonSequence shorter = in2;
  shorter.joints = Tensor({5, 5, 3});
  std::string short_path = dir.file("anon3/" + in2.name() + ".skeleton");
  std::filesystem::create_directories(dir.file("anon3"));
  write_ntu_file(short_path, shorter);
  std::vector<AnonymizeRecord> trunc = {
      {dir.file(in2.name() + ".skeleton"), short_path,
       "S001C002P003R001A002", 1, 2, 1}};
  CHECK_THROWS_AS(utility_mse(index, trunc, topo, 8), ShapeMismatch);
}

TEST_CASE("mean sequence mse") {
  std::vector<SkeletonSequence> a, b;
  for (int i = 0; i < 3; ++i) {
    a.push_back(level_seq(1, 1, 1, i));
    b.push_back(a.back());
  }
  CHECK(mean_sequence_mse(a, b) == 0.0);

  for (auto& s : b)
    for (size_t i = 0; i < s.joints.size(); ++i) s.joints[i] += 1.0;
  CHECK(mean_sequence_mse(a, b) == doctest::Approx(1.0).epsilon(1e-12));

  b.pop_back();
  CHECK_THROWS_AS(mean_sequence_mse(a, b), ManifestMismatch);
  CHECK(mean_sequence_mse({}, {}) == 0.0);
}

TEST_CASE("silhouette score matches the hand-computed value") {
  std::vector<std::vector<double>> points = {
      {0.0, 0.0}, {0.0, 1.0}, {10.0, 0.0}, {10.0, 1.0}};
  std::vector<int> labels = {0, 0, 1, 1};
  // Every point: a = 1, b = (10 + sqrt(101)) / 2, s = 1 - a/b.
  double b = (10.0 + std::sqrt(101.0)) / 2.0;
  double expected = 1.0 - 1.0 / b;
  CHECK(silhouette_score(points, labels) ==
        doctest::Approx(expected).epsilon(1e-12));

  // Singleton clusters contribute zero width.
  std::vector<std::vector<double>> three = {{0.0}, {4.0}, {6.0}};
  std::vector<int> lone = {0, 1, 1};
  // Point 0 is a singleton: s = 0. Point 1: a = 2, b = 4, s = 0.5.
  // Point 2: a = 2, b = 6, s = 2/3.
  double mean = (0.0 + 0.5 + 2.0 / 3.0) / 3.0;
  CHECK(silhouette_score(three, lone) ==
        doctest::Approx(mean).epsilon(1e-12));

  // Tighter grouping scores strictly higher than a shuffled grouping.
  std::vector<int> shuffled = {0, 1, 0, 1};
  CHECK(silhouette_score(points, labels) >
        silhouette_score(points, shuffled));

  CHECK_THROWS_AS(silhouette_score(points, {0, 0, 0, 0}), InsufficientData);
  CHECK_THROWS_AS(silhouette_score(points, {0, 1}), InvalidConfig);
}

TEST_CASE("spearman rank correlation with ties") {
  CHECK(spearman_rho({1, 2, 3, 4}, {1, 2, 3, 4}) == doctest::Approx(1.0));
  CHECK(spearman_rho({1, 2, 3, 4}, {4, 3, 2, 1}) == doctest::Approx(-1.0));
  CHECK(spearman_rho({1, 2, 3, 4}, {2, 1, 4, 3}) == doctest::Approx(0.6));
  // Tied inputs take average ranks: x ranks {1.5, 1.5, 3}, y {1, 2, 3}.
  CHECK(spearman_rho({1, 1, 2}, {1, 2, 3}) ==
        doctest::Approx(1.5 / std::sqrt(3.0)).epsilon(1e-12));
  // Monotone but nonlinear is still a perfect rank correlation.
  CHECK(spearman_rho({1, 2, 3, 4}, {1, 10, 100, 1000}) ==
        doctest::Approx(1.0));
  CHECK_THROWS_AS(spearman_rho({1, 2}, {1}), InvalidConfig);
  CHECK_THROWS_AS(spearman_rho({1}, {1}), InvalidConfig);
}

TEST_CASE("embedding export writes one full-precision row per sequence") {
  TempDir dir;
  PmrModel model(tiny_config());
  model.init_parameters(5);
  std::vector<SkeletonSequence> corpus = {level_seq(1, 1, 1, 1),
                                          level_seq(2, 2, 1, 1),
                                          level_seq(1, 3, 1, 1)};
  export_embeddings(model, corpus, dir.file("emb.txt"));

  std::ifstream in(dir.file("emb.txt"));
  REQUIRE(in.good());
  std::string line;
  size_t rows = 0;
  const size_t emb_len = 6 * 4;  // channels x length
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::vector<double> values;
    double v;
    while (ls >> v) values.push_back(v);
    REQUIRE(values.size() == 2 * emb_len + 2);
    const SkeletonSequence& seq = corpus[rows];
    EmbeddingPair emb = model.encode(seq);
    std::vector<double> motion = flatten_embedding(emb.motion);
    std::vector<double> privacy = flatten_embedding(emb.privacy);
    REQUIRE(motion.size() == emb_len);
    for (size_t i = 0; i < emb_len; ++i) {
      CHECK(values[i] == motion[i]);  // full precision round-trips bitwise
      CHECK(values[emb_len + i] == privacy[i]);
    }
    CHECK(values[2 * emb_len] == double(seq.action_id));
    CHECK(values[2 * emb_len + 1] == double(seq.actor_id));
    ++rows;
  }
  CHECK(rows == corpus.size());
}

TEST_CASE("frame rendering is deterministic and bounds-checked") {
  TempDir dir;
  SkeletonSequence seq = level_seq(1, 1, 1, 8);
  std::vector<std::string> first =
      render_frames(seq, {0, 3, 7}, chain5(), dir.file("r1"));
  REQUIRE(first.size() == 3);
  for (const auto& p : first) {
    std::string bytes = read_bytes(p);
    REQUIRE(bytes.size() > 8);
    CHECK(bytes.compare(0, 4, "\x89PNG") == 0);
  }
  std::vector<std::string> second =
      render_frames(seq, {0, 3, 7}, chain5(), dir.file("r2"));
  REQUIRE(second.size() == 3);
  for (size_t i = 0; i < 3; ++i)
    CHECK(read_bytes(first[i]) == read_bytes(second[i]));

  CHECK_THROWS_AS(render_frames(seq, {8}, chain5(), dir.file("r3")),
                  IndexOutOfRange);
  CHECK_THROWS_AS(render_frames(seq, {-1}, chain5(), dir.file("r4")),
                  IndexOutOfRange);
}

TEST_CASE("eval report validation and serialization") {
  EvalReport rep;
  rep.utility_mse = 0.02;
  rep.utility_mse_vs_original = 0.04;
  rep.reid_top1 = 0.25;
  rep.reid_topk = 0.5;
  rep.reid_k = 2;
  rep.action_top1 = 0.9;
  rep.attacker_top1_on_originals = 0.95;
  rep.attacker_topk_on_originals = 1.0;
  rep.reid_top1_per_actor = {{1, 0.5}, {2, 0.0}};
  rep.action_top1_per_action = {{1, 1.0}, {2, 0.8}};
  rep.sequences.push_back({"S001C001P001R001A001", 0.01, 0.03, 3, 1});
  CHECK_NOTHROW(rep.validate());

  TempDir dir;
  save_eval_report(rep, dir.file("report.json"));
  json j = json::parse(read_bytes(dir.file("report.json")));
  CHECK(j.at("utility_mse") == 0.02);
  CHECK(j.at("reid_top1") == 0.25);
  CHECK(j.at("reid_k") == 2);
  CHECK(j.at("reid_top1_per_actor").at("1") == 0.5);
  CHECK(j.at("action_top1_per_action").at("2") == 0.8);
  REQUIRE(j.at("sequences").size() == 1);
  CHECK(j.at("sequences")[0].at("name") == "S001C001P001R001A001");
  CHECK(j.at("sequences")[0].at("reid_rank") == 3);

  EvalReport bad = rep;
  bad.reid_top1 = 1.2;
  CHECK_THROWS_AS(bad.validate(), InvalidConfig);
  bad = rep;
  bad.reid_top1 = 0.8;  // exceeds top-k
  CHECK_THROWS_AS(bad.validate(), InvalidConfig);
  bad = rep;
  bad.action_top1 = -0.1;
  CHECK_THROWS_AS(bad.validate(), InvalidConfig);
}

TEST_CASE("sweep csv layout") {
  TempDir dir;
  std::vector<SweepPoint> rows = {{0.0, "constant", 0.125, 0.75, 1.0, 2},
                                  {10.0, "random", 0.5, 0.25, 0.5, 2}};
  save_sweep_csv(rows, dir.file("sweep.csv"));
  std::ifstream in(dir.file("sweep.csv"));
  std::string header, r1, r2;
  REQUIRE(std::getline(in, header));
  REQUIRE(std::getline(in, r1));
  REQUIRE(std::getline(in, r2));
  CHECK(header == "alpha_emb,policy,utility_mse,reid_top1,reid_topk,k");
  CHECK(r1 == "0,constant,0.125,0.75,1,2");
  CHECK(r2 == "10,random,0.5,0.25,0.5,2");
}

TEST_CASE("run config round-trips through its canonical text") {
  RunConfig cfg;
  set_config_key(cfg, "corpus.synthetic", "true");
  set_config_key(cfg, "corpus.synth_actors", "4");
  set_config_key(cfg, "plan", "desk");
  set_config_key(cfg, "train.learning_rate", "0.0003");
  set_config_key(cfg, "train.batch_size", "8");
  set_config_key(cfg, "train.quadruples_per_epoch", "16");
  set_config_key(cfg, "train.seed", "9");
  set_config_key(cfg, "weights.alpha_emb", "1.5");
  set_config_key(cfg, "policy.mode", "random");
  set_config_key(cfg, "policy.seed", "13");
  set_config_key(cfg, "attack.epochs", "25");
  set_config_key(cfg, "net.y_action", "6");
  set_config_key(cfg, "net.y_actor", "4");
  cfg.validate();

  std::string text = resolved_config_text(cfg);
  TempDir dir;
  {
    std::ofstream out(dir.file("cfg.txt"));
    out << text;
  }
  RunConfig back = load_run_config(dir.file("cfg.txt"));
  CHECK(resolved_config_text(back) == text);
  CHECK(back.synthetic == true);
  CHECK(back.train.learning_rate == 0.0003);
  CHECK(back.train.quadruples_per_epoch == 16);
  CHECK(back.train.weights.alpha_emb == 1.5);
  CHECK(back.policy_mode == "random");
  CHECK(back.attack.epochs == 25);
  CHECK(back.net.y_action == 6);
  CHECK(back.plan == "desk");

  CHECK_THROWS_AS(set_config_key(cfg, "no.such.key", "1"), InvalidConfig);
  CHECK_THROWS_AS(set_config_key(cfg, "train.batch_size", "a lot"),
                  InvalidConfig);

  // Comments and blank lines are tolerated; junk lines are not.
  RunConfig parsed = parse_run_config_text("# comment\n\nplan=desk\n");
  CHECK(parsed.plan == "desk");
  CHECK_THROWS_AS(parse_run_config_text("plan desk\n"), InvalidConfig);
}
