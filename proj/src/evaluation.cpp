#include "pmrt/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "pmrt/checkpoint.hpp"
#include "pmrt/errors.hpp"
#include "pmrt/losses.hpp"
#include "pmrt/ntu_io.hpp"
#include "pmrt/optim.hpp"
#include "pmrt/rng.hpp"

namespace pmrt {

namespace {

using nlohmann::json;

int label_of(const SkeletonSequence& seq, LabelKind kind) {
  return kind == LabelKind::actor ? seq.actor_id : seq.action_id;
}

int topk_for(int classes) { return classes >= 5 ? 5 : (classes + 1) / 2; }

std::string alpha_dir_name(double alpha) {
  std::ostringstream os;
  os << "alpha_" << alpha;
  std::string s = os.str();
  for (char& c : s)
    if (c == '.') c = 'p';
  return s;
}

}  // namespace

struct AttackModel::Ctx {
  Conv1d::Ctx c1, c2;
  LeakyReLU::Ctx a1, a2, a3;
  MaxPool1d::Ctx p1, p2;
  GlobalAvgPool1d::Ctx gap;
  Dense::Ctx d1, d2;
  Softmax::Ctx sm;
};

AttackModel::AttackModel(int joints, int frames, int classes, LabelKind kind)
    : joints_(joints),
      frames_(frames),
      classes_(classes),
      kind_(kind),
      conv1_("attacker.conv1", joints * 3, 64, 3, PadMode::reflect),
      conv2_("attacker.conv2", 64, 64, 3, PadMode::reflect),
      act_(0.2),
      dense1_("attacker.dense1", 64, 64),
      dense2_("attacker.dense2", 64, classes) {
  if (classes < 2) throw InsufficientData("classifier needs >= 2 classes");
}

std::vector<Param*> AttackModel::params() {
  return {&conv1_.weight, &conv1_.bias, &conv2_.weight, &conv2_.bias,
          &dense1_.weight, &dense1_.bias, &dense2_.weight, &dense2_.bias};
}

Tensor AttackModel::batch_input(
    const std::vector<const SkeletonSequence*>& batch) const {
  Tensor x({batch.size(), static_cast<size_t>(joints_) * 3,
            static_cast<size_t>(frames_)});
  for (size_t i = 0; i < batch.size(); ++i) {
    const SkeletonSequence& s = *batch[i];
    if (s.joint_count() != joints_ || s.frame_count() != frames_)
      throw ShapeMismatch("classifier input " + s.name() + ": got " +
                          std::to_string(s.joint_count()) + "x" +
                          std::to_string(s.frame_count()) + ", want " +
                          std::to_string(joints_) + "x" +
                          std::to_string(frames_));
    for (int j = 0; j < joints_; ++j)
      for (int t = 0; t < frames_; ++t)
        for (int c = 0; c < 3; ++c)
          x.at(i, static_cast<size_t>(j) * 3 + c, t) = s.at(j, t, c);
  }
  return x;
}

Tensor AttackModel::forward(const Tensor& x, Ctx* ctx) const {
  Tensor h = conv1_.forward(x, &ctx->c1);
  h = act_.forward(h, &ctx->a1);
  h = MaxPool1d::forward(h, &ctx->p1);
  h = conv2_.forward(h, &ctx->c2);
  h = act_.forward(h, &ctx->a2);
  h = MaxPool1d::forward(h, &ctx->p2);
  h = GlobalAvgPool1d::forward(h, &ctx->gap);
  h = dense1_.forward(h, &ctx->d1);
  h = act_.forward(h, &ctx->a3);
  h = dense2_.forward(h, &ctx->d2);
  return Softmax::forward(h, &ctx->sm);
}

void AttackModel::backward(const Tensor& dprobs, const Ctx& ctx) {
  Tensor d = Softmax::backward(dprobs, ctx.sm);
  d = dense2_.backward(d, ctx.d2, true);
  d = act_.backward(d, ctx.a3);
  d = dense1_.backward(d, ctx.d1, true);
  d = GlobalAvgPool1d::backward(d, ctx.gap);
  d = MaxPool1d::backward(d, ctx.p2);
  d = act_.backward(d, ctx.a2);
  d = conv2_.backward(d, ctx.c2, true);
  d = MaxPool1d::backward(d, ctx.p1);
  d = act_.backward(d, ctx.a1);
  conv1_.backward(d, ctx.c1, true);
}

void AttackModel::fit(const std::vector<const SkeletonSequence*>& corpus,
                      const AttackTrainConfig& cfg) {
  if (corpus.empty()) throw InsufficientData("empty training corpus");
  Rng init_rng(mix_seed(cfg.seed, 0x696e6974));
  conv1_.init(init_rng);
  conv2_.init(init_rng);
  dense1_.init(init_rng);
  dense2_.init(init_rng);
  Adam opt(params(), cfg.learning_rate);

  const size_t bs = static_cast<size_t>(cfg.batch_size);
  std::vector<size_t> order(corpus.size());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), size_t{0});
    Rng rng(mix_seed(cfg.seed, 0x65706f6368, static_cast<uint64_t>(epoch)));
    rng.shuffle(order);
    for (size_t lo = 0; lo < order.size(); lo += bs) {
      size_t hi = std::min(order.size(), lo + bs);
      std::vector<const SkeletonSequence*> batch;
      for (size_t i = lo; i < hi; ++i) batch.push_back(corpus[order[i]]);
      Tensor x = batch_input(batch);
      Ctx ctx;
      Tensor probs = forward(x, &ctx);
      Tensor dprobs(probs.shape());
      double inv = 1.0 / static_cast<double>(batch.size());
      for (size_t i = 0; i < batch.size(); ++i) {
        int label = label_index(label_of(*batch[i], kind_));
        if (label < 0 || label >= classes_)
          throw LabelMismatch("label " +
                              std::to_string(label_of(*batch[i], kind_)) +
                              " outside " + std::to_string(classes_) +
                              " classes");
        std::vector<double> row(static_cast<size_t>(classes_));
        for (int c = 0; c < classes_; ++c) row[c] = probs.at(i, c);
        std::vector<double> g;
        cross_entropy(row, label, &g);
        for (int c = 0; c < classes_; ++c) dprobs.at(i, c) += inv * g[c];
      }
      backward(dprobs, ctx);
      opt.step();
    }
  }
}

std::vector<double> AttackModel::scores(const SkeletonSequence& seq) const {
  Tensor x = batch_input({&seq});
  Ctx ctx;
  Tensor probs = forward(x, &ctx);
  std::vector<double> out(static_cast<size_t>(classes_));
  for (int c = 0; c < classes_; ++c) out[c] = probs.at(0, c);
  return out;
}

AttackModel train_classifier(const std::vector<SkeletonSequence>& corpus,
                             LabelKind kind, const AttackTrainConfig& cfg) {
  std::set<int> labels;
  int max_label = 0;
  for (const auto& s : corpus) {
    labels.insert(label_of(s, kind));
    max_label = std::max(max_label, label_of(s, kind));
  }
  if (labels.size() < 2)
    throw InsufficientData(
        "classifier training needs >= 2 distinct labels, got " +
        std::to_string(labels.size()));
  if (corpus.empty() || corpus.front().joint_count() == 0)
    throw InsufficientData("empty training corpus");
  AttackModel model(corpus.front().joint_count(),
                    corpus.front().frame_count(), max_label, kind);
  std::vector<const SkeletonSequence*> ptrs;
  ptrs.reserve(corpus.size());
  for (const auto& s : corpus) ptrs.push_back(&s);
  model.fit(ptrs, cfg);
  return model;
}

AttackModel train_attacker(const std::vector<SkeletonSequence>& corpus,
                           const AttackTrainConfig& cfg) {
  return train_classifier(corpus, LabelKind::actor, cfg);
}

void save_attacker(AttackModel& model, const std::string& path) {
  Archive a;
  a.strings["kind"] = "attacker";
  a.strings["label_kind"] =
      model.kind() == LabelKind::actor ? "actor" : "action";
  a.ints["joints"] = model.joints();
  a.ints["frames"] = model.frames();
  a.ints["classes"] = model.classes();
  for (Param* p : model.params()) a.tensors.insert({"param." + p->name, p->value});
  std::filesystem::path parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  save_archive(path, a);
}

AttackModel load_attacker(const std::string& path) {
  Archive a = load_archive(path);
  auto kind_it = a.strings.find("kind");
  if (kind_it == a.strings.end() || kind_it->second != "attacker")
    throw CorruptCheckpoint(path + " does not hold an attacker");
  LabelKind kind = a.strings.at("label_kind") == "actor" ? LabelKind::actor
                                                         : LabelKind::action;
  AttackModel model(static_cast<int>(a.ints.at("joints")),
                    static_cast<int>(a.ints.at("frames")),
                    static_cast<int>(a.ints.at("classes")), kind);
  for (Param* p : model.params()) {
    auto it = a.tensors.find("param." + p->name);
    if (it == a.tensors.end())
      throw CorruptCheckpoint("missing record: param." + p->name);
    if (!it->second.same_shape(p->value))
      throw CorruptCheckpoint("shape mismatch restoring " + p->name);
    p->value = it->second;
  }
  return model;
}

AttackResult attack(const AttackModel& model,
                    const std::vector<SkeletonSequence>& corpus) {
  AttackResult res;
  res.k = topk_for(model.classes());
  std::map<int, std::pair<int, int>> per_class;  // label -> (hits, total)
  for (const auto& seq : corpus) {
    int label = label_of(seq, model.kind());
    int idx = label_index(label);
    if (idx < 0 || idx >= model.classes())
      throw LabelMismatch(seq.name() + ": label " + std::to_string(label) +
                          " outside " + std::to_string(model.classes()) +
                          " classes");
    std::vector<double> s = model.scores(seq);
    int rank = 1;
    for (int c = 0; c < model.classes(); ++c) {
      if (c == idx) continue;
      if (s[c] > s[idx] || (s[c] == s[idx] && c < idx)) ++rank;
    }
    res.names.push_back(seq.name());
    res.ranks.push_back(rank);
    res.top1 += rank == 1;
    res.topk += rank <= res.k;
    auto& pc = per_class[label];
    pc.first += rank == 1;
    pc.second += 1;
  }
  res.count = corpus.size();
  if (res.count > 0) {
    res.top1 /= static_cast<double>(res.count);
    res.topk /= static_cast<double>(res.count);
  }
  for (const auto& [label, hits] : per_class)
    res.per_class_top1[label] =
        static_cast<double>(hits.first) / static_cast<double>(hits.second);
  return res;
}

double mean_sequence_mse(const std::vector<SkeletonSequence>& a,
                         const std::vector<SkeletonSequence>& b) {
  if (a.size() != b.size())
    throw ManifestMismatch("corpora differ in size: " +
                           std::to_string(a.size()) + " vs " +
                           std::to_string(b.size()));
  if (a.empty()) return 0.0;
  double sum = 0.0;
  for (size_t i = 0; i < a.size(); ++i)
    sum += reconstruction_loss(a[i].joints, b[i].joints);
  return sum / static_cast<double>(a.size());
}

UtilityReport utility_mse(const CorpusIndex& originals,
                          const std::vector<AnonymizeRecord>& manifest,
                          const SkeletonTopology& topology, int frames) {
  std::map<std::string, const CorpusEntry*> by_path;
  std::map<std::tuple<int, int, int>, std::string> by_cell;
  for (const auto& e : originals.entries) {
    by_path[e.path] = &e;
    by_cell.emplace(std::make_tuple(e.actor_id, e.action_id, e.camera_id),
                    e.path);
  }

  auto load = [&](const std::string& path) {
    SkeletonSequence seq = parse_ntu_file(path, topology);
    if (seq.frame_count() != frames)
      throw ShapeMismatch(path + ": expected " + std::to_string(frames) +
                          " frames, got " +
                          std::to_string(seq.frame_count()));
    return root_center(seq, topology.root());
  };

  UtilityReport rep;
  double sum_r = 0.0, sum_o = 0.0;
  for (const auto& r : manifest) {
    if (!by_path.count(r.source_path))
      throw ManifestMismatch("manifest source " + r.source_path +
                             " is not in the original corpus");
    SkeletonSequence anon = load(r.output_path);
    SkeletonSequence original = load(r.source_path);
    double mse_o = reconstruction_loss(original.joints, anon.joints);

    int dummy_actor = parse_ntu_name(r.dummy).actor_id;
    auto cell =
        by_cell.find(std::make_tuple(dummy_actor, r.action_id, r.camera_id));
    double mse_r;
    if (cell != by_cell.end()) {
      SkeletonSequence target = load(cell->second);
      mse_r = reconstruction_loss(target.joints, anon.joints);
      ++rep.retarget_covered;
    } else {
      mse_r = mse_o;
    }
    rep.names.push_back(std::filesystem::path(r.output_path).stem().string());
    rep.per_retarget.push_back(mse_r);
    rep.per_original.push_back(mse_o);
    sum_r += mse_r;
    sum_o += mse_o;
  }
  rep.count = manifest.size();
  if (rep.count > 0) {
    rep.mse_retarget = sum_r / static_cast<double>(rep.count);
    rep.mse_vs_original = sum_o / static_cast<double>(rep.count);
  }
  return rep;
}

void EvalReport::validate() const {
  auto fraction = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!fraction(reid_top1) || !fraction(reid_topk) || !fraction(action_top1) ||
      !fraction(attacker_top1_on_originals) ||
      !fraction(attacker_topk_on_originals))
    throw InvalidConfig("evaluation fractions must lie in [0, 1]");
  if (reid_top1 > reid_topk + 1e-12)
    throw InvalidConfig("top-1 accuracy cannot exceed top-k");
  if (attacker_top1_on_originals > attacker_topk_on_originals + 1e-12)
    throw InvalidConfig("top-1 accuracy cannot exceed top-k");
}

void save_eval_report(const EvalReport& report, const std::string& path) {
  report.validate();
  json j;
  j["utility_mse"] = report.utility_mse;
  j["utility_mse_vs_original"] = report.utility_mse_vs_original;
  j["reid_top1"] = report.reid_top1;
  j["reid_topk"] = report.reid_topk;
  j["reid_k"] = report.reid_k;
  j["action_top1"] = report.action_top1;
  j["attacker_top1_on_originals"] = report.attacker_top1_on_originals;
  j["attacker_topk_on_originals"] = report.attacker_topk_on_originals;
  json per_actor = json::object();
  for (const auto& [label, v] : report.reid_top1_per_actor)
    per_actor[std::to_string(label)] = v;
  j["reid_top1_per_actor"] = per_actor;
  json per_action = json::object();
  for (const auto& [label, v] : report.action_top1_per_action)
    per_action[std::to_string(label)] = v;
  j["action_top1_per_action"] = per_action;
  json seqs = json::array();
  for (const auto& s : report.sequences) {
    json e;
    e["name"] = s.name;
    e["mse_retarget"] = s.mse_retarget;
    e["mse_original"] = s.mse_original;
    e["reid_rank"] = s.reid_rank;
    e["action_rank"] = s.action_rank;
    seqs.push_back(e);
  }
  j["sequences"] = seqs;

  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("short write to " + path);
}

double silhouette_score(const std::vector<std::vector<double>>& points,
                        const std::vector<int>& labels) {
  const size_t n = points.size();
  if (labels.size() != n)
    throw InvalidConfig("silhouette: points and labels differ in length");
  std::set<int> distinct(labels.begin(), labels.end());
  if (n < 2 || distinct.size() < 2)
    throw InsufficientData("silhouette needs >= 2 points in >= 2 clusters");

  auto dist = [&](size_t i, size_t j) {
    double s = 0.0;
    for (size_t d = 0; d < points[i].size(); ++d) {
      double diff = points[i][d] - points[j][d];
      s += diff * diff;
    }
    return std::sqrt(s);
  };

  std::map<int, size_t> cluster_size;
  for (int l : labels) ++cluster_size[l];

  double total = 0.0;
  for (size_t i = 0; i < n; ++i) {
    if (cluster_size[labels[i]] == 1) continue;  // singleton scores zero
    std::map<int, double> sums;
    for (size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      sums[labels[j]] += dist(i, j);
    }
    double a =
        sums[labels[i]] / static_cast<double>(cluster_size[labels[i]] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (const auto& [l, s] : sums) {
      if (l == labels[i]) continue;
      b = std::min(b, s / static_cast<double>(cluster_size[l]));
    }
    double m = std::max(a, b);
    if (m > 0.0) total += (b - a) / m;
  }
  return total / static_cast<double>(n);
}

std::vector<double> flatten_embedding(const Tensor& emb) {
  return std::vector<double>(emb.data(), emb.data() + emb.size());
}

void export_embeddings(const PmrModel& model,
                       const std::vector<SkeletonSequence>& corpus,
                       const std::string& out_path) {
  std::ofstream out(out_path);
  if (!out) throw IoError("cannot write " + out_path);
  out.precision(17);
  for (const auto& seq : corpus) {
    EmbeddingPair emb = model.encode(seq);
    for (size_t i = 0; i < emb.motion.size(); ++i)
      out << emb.motion.data()[i] << ' ';
    for (size_t i = 0; i < emb.privacy.size(); ++i)
      out << emb.privacy.data()[i] << ' ';
    out << seq.action_id << ' ' << seq.actor_id << '\n';
  }
  if (!out) throw IoError("short write to " + out_path);
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
  const size_t n = v.size();
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), size_t{0});
  std::sort(idx.begin(), idx.end(),
            [&](size_t a, size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
    double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (size_t k = i; k <= j; ++k) ranks[idx[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman_rho(const std::vector<double>& x,
                    const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw InvalidConfig("rank correlation needs two equal-length series");
  std::vector<double> rx = average_ranks(x), ry = average_ranks(y);
  double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / rx.size();
  double my = std::accumulate(ry.begin(), ry.end(), 0.0) / ry.size();
  double num = 0.0, vx = 0.0, vy = 0.0;
  for (size_t i = 0; i < rx.size(); ++i) {
    num += (rx[i] - mx) * (ry[i] - my);
    vx += (rx[i] - mx) * (rx[i] - mx);
    vy += (ry[i] - my) * (ry[i] - my);
  }
  if (vx == 0.0 || vy == 0.0) return 0.0;
  return num / std::sqrt(vx * vy);
}

std::vector<SweepPoint> tradeoff_sweep(const std::vector<double>& alpha_values,
                                       const SweepConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  std::vector<SkeletonSequence> train_pool =
      load_split(cfg.corpus, Split::train, cfg.topology, cfg.net.frames);
  std::vector<SkeletonSequence> eval_pool =
      load_split(cfg.corpus, Split::eval, cfg.topology, cfg.net.frames);

  AttackModel attacker = train_attacker(train_pool, cfg.attack);

  std::vector<SweepPoint> rows;
  for (double alpha : alpha_values) {
    std::string dir = (std::filesystem::path(cfg.out_dir) /
                       alpha_dir_name(alpha))
                          .string();
    std::filesystem::create_directories(dir);
    TrainConfig tc = cfg.train;
    tc.weights.alpha_emb = alpha;
    tc.log_path = dir + "/train_log.jsonl";
    tc.checkpoint_dir = dir + "/checkpoints";
    Trainer trainer(cfg.net, tc);
    trainer.init();
    trainer.set_data(train_pool, eval_pool, cfg.topology);
    trainer.run();

    for (const char* policy_name : {"constant", "random"}) {
      DummyPolicy policy;
      const std::vector<SkeletonSequence>* pool;
      if (std::string(policy_name) == "constant") {
        policy.mode = DummyPolicy::Mode::constant;
        policy.constant_ref = cfg.constant_ref;
        pool = &eval_pool;
      } else {
        policy.mode = DummyPolicy::Mode::random;
        policy.rng_seed = cfg.dummy_seed;
        pool = &train_pool;
      }
      std::string anon_dir = dir + "/anon_" + policy_name;
      CorpusIndex anon_index = anonymize_corpus(
          trainer.model(), cfg.corpus, policy, *pool, cfg.topology, anon_dir);
      std::vector<AnonymizeRecord> manifest =
          load_anonymize_manifest(anon_dir + "/anonymize_manifest.tsv");
      std::vector<SkeletonSequence> anon_seqs =
          load_split(anon_index, Split::eval, cfg.topology, cfg.net.frames);
      AttackResult res = attack(attacker, anon_seqs);
      UtilityReport util =
          utility_mse(cfg.corpus, manifest, cfg.topology, cfg.net.frames);
      SweepPoint p;
      p.alpha_emb = alpha;
      p.policy = policy_name;
      p.utility_mse = util.mse_retarget;
      p.reid_top1 = res.top1;
      p.reid_topk = res.topk;
      p.k = res.k;
      rows.push_back(p);
    }
  }
  return rows;
}

void save_sweep_csv(const std::vector<SweepPoint>& rows,
                    const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out.precision(17);
  out << "alpha_emb,policy,utility_mse,reid_top1,reid_topk,k\n";
  for (const auto& r : rows)
    out << r.alpha_emb << ',' << r.policy << ',' << r.utility_mse << ','
        << r.reid_top1 << ',' << r.reid_topk << ',' << r.k << '\n';
  if (!out) throw IoError("short write to " + path);
}

}  // namespace pmrt
