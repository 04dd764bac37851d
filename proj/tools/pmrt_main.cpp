#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pmrt/anonymizer.hpp"
#include "pmrt/config.hpp"
#include "pmrt/dataset.hpp"
#include "pmrt/errors.hpp"
#include "pmrt/evaluation.hpp"
#include "pmrt/network.hpp"
#include "pmrt/ntu_io.hpp"
#include "pmrt/rng.hpp"
#include "pmrt/synthetic.hpp"
#include "pmrt/topology.hpp"
#include "pmrt/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitMissingInput = 2;
constexpr int kExitDivergence = 3;

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string item;
  while (std::getline(is, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<double> split_csv_doubles(const std::string& s) {
  std::vector<double> out;
  for (const auto& item : split_csv(s)) out.push_back(std::stod(item));
  return out;
}

// Label widths come from the corpus unless the config pins them.
void resolve_label_widths(pmrt::NetworkConfig& net,
                          const pmrt::CorpusIndex& index) {
  if (net.y_action == 0) {
    auto ids = index.action_ids();
    net.y_action = ids.empty() ? 0 : ids.back();
  }
  if (net.y_actor == 0) {
    auto ids = index.actor_ids();
    net.y_actor = ids.empty() ? 0 : ids.back();
  }
}

pmrt::CorpusIndex load_corpus_manifest(const std::string& path) {
  if (!fs::exists(path))
    throw pmrt::IoError("manifest not found: " + path);
  return pmrt::load_manifest(path);
}

struct PreprocessSummary {
  int kept = 0;
  int multi_actor = 0;
  int malformed = 0;
  int noisy = 0;
};

int cmd_preprocess(pmrt::RunConfig cfg, const std::string& out_dir) {
  const pmrt::SkeletonTopology& topology = pmrt::kinect25_topology();
  fs::create_directories(out_dir);

  std::vector<std::string> sources;
  if (cfg.synthetic) {
    pmrt::CorpusIndex raw = pmrt::generate_synthetic(
        out_dir + "/raw_synth", cfg.synth_actors, cfg.synth_actions,
        cfg.synth_cameras, cfg.synth_seed, topology);
    for (const auto& e : raw.entries) sources.push_back(e.path);
  } else {
    if (cfg.raw_dir.empty() || !fs::is_directory(cfg.raw_dir)) {
      std::cerr << "preprocess: unreadable corpus directory: " << cfg.raw_dir
                << "\n";
      return kExitMissingInput;
    }
    for (const auto& entry : fs::directory_iterator(cfg.raw_dir))
      if (entry.path().extension() == ".skeleton")
        sources.push_back(entry.path().string());
    std::sort(sources.begin(), sources.end());
  }
  if (sources.empty()) {
    std::cerr << "preprocess: no input files\n";
    return kExitMissingInput;
  }

  fs::create_directories(out_dir + "/processed");
  PreprocessSummary summary;
  pmrt::CorpusIndex index;
  for (const auto& path : sources) {
    pmrt::SkeletonSequence seq;
    try {
      seq = pmrt::parse_ntu_file(path, topology);
    } catch (const pmrt::MultiActorFile&) {
      ++summary.multi_actor;
      continue;
    } catch (const pmrt::MalformedFile&) {
      ++summary.malformed;
      continue;
    }
    auto repaired = pmrt::denoise(seq);
    if (!repaired) {
      ++summary.noisy;
      continue;
    }
    pmrt::SkeletonSequence fixed =
        pmrt::normalize_length(*repaired, cfg.net.frames);
    std::string out_path = out_dir + "/processed/" + fixed.name() + ".skeleton";
    pmrt::write_ntu_file(out_path, fixed);
    pmrt::CorpusEntry e;
    e.path = out_path;
    e.actor_id = fixed.actor_id;
    e.action_id = fixed.action_id;
    e.camera_id = fixed.camera_id;
    e.split = pmrt::split_for_camera(fixed.camera_id);
    index.entries.push_back(e);
    ++summary.kept;
  }
  index.validate();
  std::string manifest_path = out_dir + "/manifest.tsv";
  pmrt::save_manifest(index, manifest_path);
  pmrt::write_resolved_config(cfg, out_dir);

  json j;
  j["kept"] = summary.kept;
  j["dropped_multi_actor"] = summary.multi_actor;
  j["dropped_malformed"] = summary.malformed;
  j["dropped_noisy"] = summary.noisy;
  j["manifest"] = manifest_path;
  std::ofstream js(out_dir + "/preprocess_summary.json");
  js << j.dump(2) << '\n';

  std::cout << "kept " << summary.kept << ", multi-actor dropped "
            << summary.multi_actor << ", malformed dropped "
            << summary.malformed << ", noisy dropped " << summary.noisy
            << "\nmanifest: " << manifest_path << "\n";
  return 0;
}

int cmd_train(pmrt::RunConfig cfg, const std::string& out_dir,
              const std::string& stages_arg, bool resume,
              const std::string& checkpoint_arg) {
  const pmrt::SkeletonTopology& topology = pmrt::kinect25_topology();
  pmrt::CorpusIndex index = load_corpus_manifest(cfg.manifest);
  resolve_label_widths(cfg.net, index);
  cfg.validate();

  fs::create_directories(out_dir);
  pmrt::TrainConfig tc = cfg.train;
  tc.log_path = out_dir + "/train_log.jsonl";
  tc.checkpoint_dir = out_dir + "/checkpoints";
  fs::create_directories(tc.checkpoint_dir);
  pmrt::write_resolved_config(cfg, out_dir);

  pmrt::Trainer trainer(cfg.net, tc);
  std::string resume_path = checkpoint_arg.empty()
                                ? tc.checkpoint_dir + "/latest.ckpt"
                                : checkpoint_arg;
  if (resume) {
    if (!fs::exists(resume_path)) {
      std::cerr << "train: checkpoint not found: " << resume_path << "\n";
      return kExitMissingInput;
    }
    trainer.restore_checkpoint(resume_path);
  } else {
    trainer.init();
  }
  trainer.set_data(
      pmrt::load_split(index, pmrt::Split::train, topology, cfg.net.frames),
      pmrt::load_split(index, pmrt::Split::eval, topology, cfg.net.frames),
      topology);

  try {
    trainer.run(split_csv(stages_arg));
  } catch (const pmrt::Divergence& e) {
    std::cerr << "train: diverged: " << e.what()
              << "\nlast checkpoint: " << tc.checkpoint_dir + "/latest.ckpt"
              << "\n";
    return kExitDivergence;
  }
  std::cout << "training complete, checkpoints under " << tc.checkpoint_dir
            << "\n";
  return 0;
}

pmrt::PmrModel restore_model(const pmrt::RunConfig& cfg,
                             const std::string& checkpoint,
                             const pmrt::CorpusIndex& index) {
  pmrt::NetworkConfig net = cfg.net;
  resolve_label_widths(net, index);
  pmrt::TrainConfig tc = cfg.train;
  tc.log_path.clear();
  tc.checkpoint_dir.clear();
  pmrt::Trainer trainer(net, tc);
  trainer.restore_checkpoint(checkpoint);
  return std::move(trainer.model());
}

pmrt::DummyPolicy policy_from_config(const pmrt::RunConfig& cfg) {
  pmrt::DummyPolicy policy;
  policy.mode = cfg.policy_mode == "random" ? pmrt::DummyPolicy::Mode::random
                                            : pmrt::DummyPolicy::Mode::constant;
  policy.constant_ref = cfg.policy_constant_ref;
  policy.rng_seed = cfg.policy_seed;
  return policy;
}

// Constant dummies come from the held-out split, random draws from the
// training actors; policy.pool overrides either.
pmrt::Split dummy_pool_split(const pmrt::RunConfig& cfg) {
  if (cfg.policy_pool == "train") return pmrt::Split::train;
  if (cfg.policy_pool == "eval") return pmrt::Split::eval;
  return cfg.policy_mode == "random" ? pmrt::Split::train : pmrt::Split::eval;
}

int cmd_anonymize(pmrt::RunConfig cfg, const std::string& out_dir,
                  const std::string& checkpoint) {
  if (!fs::exists(checkpoint)) {
    std::cerr << "anonymize: checkpoint not found: " << checkpoint << "\n";
    return kExitMissingInput;
  }
  const pmrt::SkeletonTopology& topology = pmrt::kinect25_topology();
  pmrt::CorpusIndex index = load_corpus_manifest(cfg.manifest);
  cfg.validate();
  pmrt::PmrModel model = restore_model(cfg, checkpoint, index);

  std::vector<pmrt::SkeletonSequence> pool = pmrt::load_split(
      index, dummy_pool_split(cfg), topology, cfg.net.frames);
  pmrt::CorpusIndex anon_index =
      pmrt::anonymize_corpus(model, index, policy_from_config(cfg), pool,
                             topology, out_dir);
  pmrt::save_manifest(anon_index, out_dir + "/corpus_manifest.tsv");
  pmrt::write_resolved_config(cfg, out_dir);
  std::cout << "manifest: " << out_dir + "/anonymize_manifest.tsv" << "\n";
  return 0;
}

int cmd_evaluate(pmrt::RunConfig cfg, const std::string& out_dir,
                 const std::string& anon_dir, const std::string& checkpoint,
                 const std::string& sweep_arg, const std::string& render_stem,
                 int render_frames_n, bool chance_self_test) {
  const pmrt::SkeletonTopology& topology = pmrt::kinect25_topology();
  pmrt::CorpusIndex originals = load_corpus_manifest(cfg.manifest);
  cfg.validate();
  fs::create_directories(out_dir);
  pmrt::write_resolved_config(cfg, out_dir);

  std::vector<pmrt::SkeletonSequence> train_pool = pmrt::load_split(
      originals, pmrt::Split::train, topology, cfg.net.frames);
  std::vector<pmrt::SkeletonSequence> eval_pool = pmrt::load_split(
      originals, pmrt::Split::eval, topology, cfg.net.frames);

  pmrt::AttackModel attacker = pmrt::train_attacker(train_pool, cfg.attack);
  pmrt::save_attacker(attacker, out_dir + "/attacker.ckpt");
  pmrt::AttackResult baseline = pmrt::attack(attacker, eval_pool);
  std::cout << "attacker on originals: top1 " << baseline.top1 << ", top"
            << baseline.k << " " << baseline.topk << "\n";

  if (chance_self_test) {
    std::vector<pmrt::SkeletonSequence> shuffled = eval_pool;
    std::vector<int> labels;
    for (const auto& s : shuffled) labels.push_back(s.actor_id);
    pmrt::Rng rng(pmrt::mix_seed(cfg.attack.seed, 0x73687566));
    rng.shuffle(labels);
    for (size_t i = 0; i < shuffled.size(); ++i)
      shuffled[i].actor_id = labels[i];
    pmrt::AttackResult chance = pmrt::attack(attacker, shuffled);
    std::cout << "attacker on shuffled labels: top1 " << chance.top1
              << " (chance 1/" << attacker.classes() << " = "
              << 1.0 / attacker.classes() << ")\n";
  }

  if (!anon_dir.empty()) {
    std::string audit_path = anon_dir + "/anonymize_manifest.tsv";
    std::string corpus_path = anon_dir + "/corpus_manifest.tsv";
    if (!fs::exists(audit_path) || !fs::exists(corpus_path))
      throw pmrt::IoError("anonymized corpus manifests not found under " +
                          anon_dir);
    std::vector<pmrt::AnonymizeRecord> audit =
        pmrt::load_anonymize_manifest(audit_path);
    pmrt::CorpusIndex anon_index = pmrt::load_manifest(corpus_path);
    std::vector<pmrt::SkeletonSequence> anon_seqs = pmrt::load_split(
        anon_index, pmrt::Split::eval, topology, cfg.net.frames);

    pmrt::AttackResult reid = pmrt::attack(attacker, anon_seqs);
    pmrt::AttackModel action_probe =
        pmrt::train_classifier(train_pool, pmrt::LabelKind::action, cfg.attack);
    pmrt::AttackResult action = pmrt::attack(action_probe, anon_seqs);
    pmrt::UtilityReport util =
        pmrt::utility_mse(originals, audit, topology, cfg.net.frames);

    pmrt::EvalReport report;
    report.utility_mse = util.mse_retarget;
    report.utility_mse_vs_original = util.mse_vs_original;
    report.reid_top1 = reid.top1;
    report.reid_topk = reid.topk;
    report.reid_k = reid.k;
    report.action_top1 = action.top1;
    report.attacker_top1_on_originals = baseline.top1;
    report.attacker_topk_on_originals = baseline.topk;
    report.reid_top1_per_actor = reid.per_class_top1;
    report.action_top1_per_action = action.per_class_top1;
    for (size_t i = 0; i < anon_seqs.size(); ++i) {
      pmrt::EvalReport::PerSequence ps;
      ps.name = reid.names[i];
      ps.mse_retarget = util.per_retarget[i];
      ps.mse_original = util.per_original[i];
      ps.reid_rank = reid.ranks[i];
      ps.action_rank = action.ranks[i];
      report.sequences.push_back(ps);
    }
    pmrt::save_eval_report(report, out_dir + "/eval_report.json");
    std::cout << "utility mse " << report.utility_mse << ", re-id top1 "
              << report.reid_top1 << ", action top1 " << report.action_top1
              << "\nreport: " << out_dir + "/eval_report.json" << "\n";

    if (!render_stem.empty()) {
      auto row = std::find_if(audit.begin(), audit.end(),
                              [&](const pmrt::AnonymizeRecord& r) {
                                return fs::path(r.source_path).stem() ==
                                       render_stem;
                              });
      if (row == audit.end())
        throw pmrt::ManifestMismatch("no anonymized output for " +
                                     render_stem);
      pmrt::SkeletonSequence original = pmrt::root_center(
          pmrt::parse_ntu_file(row->source_path, topology), topology.root());
      pmrt::SkeletonSequence anonymized = pmrt::root_center(
          pmrt::parse_ntu_file(row->output_path, topology), topology.root());
      std::vector<int> frames;
      int n = std::max(1, render_frames_n);
      for (int i = 0; i < n; ++i)
        frames.push_back(n == 1 ? 0
                                : i * (original.frame_count() - 1) / (n - 1));
      pmrt::render_frames(original, frames, topology,
                          out_dir + "/frames/original");
      pmrt::render_frames(anonymized, frames, topology,
                          out_dir + "/frames/anonymized");
      std::cout << "frames under " << out_dir + "/frames" << "\n";
    }
  }

  if (!checkpoint.empty()) {
    if (!fs::exists(checkpoint)) {
      std::cerr << "evaluate: checkpoint not found: " << checkpoint << "\n";
      return kExitMissingInput;
    }
    pmrt::PmrModel model = restore_model(cfg, checkpoint, originals);
    pmrt::export_embeddings(model, eval_pool, out_dir + "/embeddings.txt");
    std::cout << "embeddings: " << out_dir + "/embeddings.txt" << "\n";
  }

  if (!sweep_arg.empty()) {
    pmrt::SweepConfig sc;
    sc.net = cfg.net;
    resolve_label_widths(sc.net, originals);
    sc.train = cfg.train;
    sc.corpus = originals;
    sc.topology = topology;
    sc.out_dir = out_dir + "/sweep";
    sc.dummy_seed = cfg.policy_seed;
    sc.constant_ref = cfg.policy_constant_ref;
    sc.attack = cfg.attack;
    std::vector<pmrt::SweepPoint> rows =
        pmrt::tradeoff_sweep(split_csv_doubles(sweep_arg), sc);
    pmrt::save_sweep_csv(rows, out_dir + "/sweep.csv");
    std::cout << "sweep: " << out_dir + "/sweep.csv" << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Privacy-preserving skeleton motion retargeting pipeline"};
  app.require_subcommand(1);

  std::string config_path, out_arg, stages_arg, checkpoint_arg, anon_dir;
  std::string sweep_arg, render_stem, raw_dir, manifest_arg, policy_arg;
  std::string dummy_arg;
  bool synthetic = false, resume = false, chance_self_test = false;
  int render_frames_n = 4;
  uint64_t seed_arg = 0;
  bool seed_set = false, policy_seed_set = false;
  uint64_t policy_seed_arg = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key=value configuration file");
    sub->add_option("--out", out_arg, "output directory");
  };

  CLI::App* pre = app.add_subcommand(
      "preprocess", "Filter, denoise, and length-normalize a corpus");
  add_common(pre);
  pre->add_option("--raw", raw_dir, "directory of .skeleton files");
  pre->add_flag("--synthetic", synthetic,
                "generate the synthetic corpus instead of reading --raw");

  CLI::App* train = app.add_subcommand("train", "Run the training stages");
  add_common(train);
  train->add_option("--manifest", manifest_arg, "corpus manifest");
  train->add_option("--stages", stages_arg,
                    "comma-separated stage names to run; others skip");
  train->add_flag("--resume", resume, "continue from the latest checkpoint");
  train->add_option("--checkpoint", checkpoint_arg,
                    "checkpoint path for --resume");
  train->add_option("--seed", seed_arg, "training seed")
      ->trigger_on_parse()
      ->each([&](const std::string&) { seed_set = true; });

  CLI::App* anon = app.add_subcommand(
      "anonymize", "Retarget every evaluation sequence onto a dummy");
  add_common(anon);
  anon->add_option("--manifest", manifest_arg, "corpus manifest");
  anon->add_option("--checkpoint", checkpoint_arg, "trained model checkpoint");
  anon->add_option("--policy", policy_arg, "constant or random");
  anon->add_option("--dummy", dummy_arg, "constant dummy stem");
  anon->add_option("--seed", policy_seed_arg, "random-policy seed")
      ->trigger_on_parse()
      ->each([&](const std::string&) { policy_seed_set = true; });

  CLI::App* eval = app.add_subcommand(
      "evaluate", "Utility, re-identification, sweep, and figures");
  add_common(eval);
  eval->add_option("--manifest", manifest_arg, "original corpus manifest");
  eval->add_option("--anonymized", anon_dir, "anonymized corpus directory");
  eval->add_option("--checkpoint", checkpoint_arg,
                   "model checkpoint for embedding export");
  eval->add_option("--sweep", sweep_arg, "comma-separated alpha_emb grid");
  eval->add_option("--render", render_stem, "sequence stem to render");
  eval->add_option("--frames", render_frames_n, "frames per rendered strip");
  eval->add_flag("--chance-self-test", chance_self_test,
                 "attack shuffled labels and print the chance baseline");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    pmrt::RunConfig cfg;
    if (!config_path.empty()) cfg = pmrt::load_run_config(config_path);
    pmrt::apply_env_overrides(cfg);
    if (!raw_dir.empty()) cfg.raw_dir = raw_dir;
    if (synthetic) cfg.synthetic = true;
    if (!manifest_arg.empty()) cfg.manifest = manifest_arg;
    if (cfg.manifest.empty()) cfg.manifest = cfg.out_root + "/corpus/manifest.tsv";
    if (seed_set) cfg.train.seed = seed_arg;
    if (!policy_arg.empty()) cfg.policy_mode = policy_arg;
    if (!dummy_arg.empty()) cfg.policy_constant_ref = dummy_arg;
    if (policy_seed_set) cfg.policy_seed = policy_seed_arg;

    if (pre->parsed()) {
      std::string out = out_arg.empty() ? cfg.out_root + "/corpus" : out_arg;
      return cmd_preprocess(cfg, out);
    }
    if (train->parsed()) {
      std::string out = out_arg.empty() ? cfg.out_root + "/train" : out_arg;
      return cmd_train(cfg, out, stages_arg, resume, checkpoint_arg);
    }
    if (anon->parsed()) {
      std::string out =
          out_arg.empty() ? cfg.out_root + "/anonymized" : out_arg;
      std::string ckpt = checkpoint_arg.empty()
                             ? cfg.out_root + "/train/checkpoints/latest.ckpt"
                             : checkpoint_arg;
      return cmd_anonymize(cfg, out, ckpt);
    }
    std::string out = out_arg.empty() ? cfg.out_root + "/eval" : out_arg;
    return cmd_evaluate(cfg, out, anon_dir, checkpoint_arg, sweep_arg,
                        render_stem, render_frames_n, chance_self_test);
  } catch (const pmrt::Divergence& e) {
    std::cerr << "diverged: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const pmrt::InvalidConfig& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const pmrt::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitMissingInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitMissingInput;
  }
}
