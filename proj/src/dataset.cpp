#include "pmrt/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "pmrt/errors.hpp"
#include "pmrt/ntu_io.hpp"
#include "pmrt/rng.hpp"

namespace pmrt {

SkeletonSequence normalize_length(const SkeletonSequence& seq, int target_t) {
  int t_src = seq.frame_count();
  if (t_src < 1 || target_t < 1)
    throw InvalidConfig("normalize_length needs at least one frame");
  if (t_src == target_t) return seq;
  int j_count = seq.joint_count();
  SkeletonSequence out = seq;
  out.joints = Tensor({static_cast<size_t>(j_count),
                       static_cast<size_t>(target_t), 3});
  for (int j = 0; j < j_count; ++j)
    for (int t = 0; t < target_t; ++t) {
      int src = std::min(t, t_src - 1);  // past the end: repeat final frame
      for (int c = 0; c < 3; ++c) out.at(j, t, c) = seq.at(j, src, c);
    }
  return out;
}

namespace {

double joint_dist(const SkeletonSequence& s, int j, int t0, int t1) {
  double d2 = 0.0;
  for (int c = 0; c < 3; ++c) {
    double d = s.at(j, t1, c) - s.at(j, t0, c);
    d2 += d * d;
  }
  return std::sqrt(d2);
}

bool joint_finite(const SkeletonSequence& s, int j, int t) {
  for (int c = 0; c < 3; ++c)
    if (!std::isfinite(s.at(j, t, c))) return false;
  return true;
}

}  // namespace

std::optional<SkeletonSequence> denoise(const SkeletonSequence& seq,
                                        const DenoiseConfig& cfg) {
  int j_count = seq.joint_count();
  int t_count = seq.frame_count();
  if (t_count < 1) return std::nullopt;

  // bad[j][t]: sample cannot be trusted.
  std::vector<std::vector<char>> bad(j_count,
                                     std::vector<char>(t_count, 0));
  for (int j = 0; j < j_count; ++j)
    for (int t = 0; t < t_count; ++t)
      if (!joint_finite(seq, j, t)) bad[j][t] = 1;

  // Isolated spikes: a clean sample that jumps off the previous clean sample
  // and (when a next frame exists) off which the next sample recovers.
  for (int j = 0; j < j_count; ++j)
    for (int t = 1; t < t_count; ++t) {
      if (bad[j][t] || bad[j][t - 1]) continue;
      if (joint_dist(seq, j, t - 1, t) <= cfg.jump_threshold_m) continue;
      bool recovers = true;
      if (t + 1 < t_count)
        recovers = !bad[j][t + 1] &&
                   joint_dist(seq, j, t - 1, t + 1) <= cfg.jump_threshold_m;
      if (recovers) bad[j][t] = 1;
    }

  int bad_frames = 0;
  for (int t = 0; t < t_count; ++t)
    for (int j = 0; j < j_count; ++j)
      if (bad[j][t]) {
        ++bad_frames;
        break;
      }
  if (bad_frames > cfg.max_bad_frame_fraction * t_count) return std::nullopt;

  SkeletonSequence out = seq;
  for (int j = 0; j < j_count; ++j) {
    for (int t = 0; t < t_count; ++t) {
      if (!bad[j][t]) continue;
      int prev = t - 1;
      while (prev >= 0 && bad[j][prev]) --prev;
      int next = t + 1;
      while (next < t_count && bad[j][next]) ++next;
      if (prev < 0 && next >= t_count) return std::nullopt;  // joint never seen
      for (int c = 0; c < 3; ++c) {
        if (prev < 0) {
          out.at(j, t, c) = seq.at(j, next, c);
        } else if (next >= t_count) {
          out.at(j, t, c) = seq.at(j, prev, c);
        } else {
          double w = static_cast<double>(t - prev) / (next - prev);
          out.at(j, t, c) =
              (1.0 - w) * seq.at(j, prev, c) + w * seq.at(j, next, c);
        }
      }
    }
  }
  return out;
}

Split split_for_camera(int camera_id) {
  return camera_id == 1 ? Split::eval : Split::train;
}

std::vector<int> CorpusIndex::actor_ids() const {
  std::set<int> ids;
  for (const auto& e : entries) ids.insert(e.actor_id);
  return {ids.begin(), ids.end()};
}

std::vector<int> CorpusIndex::action_ids() const {
  std::set<int> ids;
  for (const auto& e : entries) ids.insert(e.action_id);
  return {ids.begin(), ids.end()};
}

size_t CorpusIndex::count(Split split) const {
  size_t n = 0;
  for (const auto& e : entries)
    if (e.split == split) ++n;
  return n;
}

void CorpusIndex::validate() const {
  for (const auto& e : entries) {
    if (e.split != split_for_camera(e.camera_id))
      throw InvalidConfig("entry " + e.path +
                          ": split does not match camera " +
                          std::to_string(e.camera_id));
    if (e.actor_id < 1 || e.action_id < 1)
      throw InvalidConfig("entry " + e.path + ": labels must be positive");
  }
}

void save_manifest(const CorpusIndex& index, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  for (const auto& e : index.entries)
    out << e.path << '\t' << e.actor_id << '\t' << e.action_id << '\t'
        << e.camera_id << '\t' << (e.split == Split::eval ? "eval" : "train")
        << '\n';
  if (!out) throw IoError("short write to " + path);
}

CorpusIndex load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  CorpusIndex index;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    CorpusEntry e;
    std::string split_word;
    if (!std::getline(ls, e.path, '\t'))
      throw ManifestMismatch(path + ":" + std::to_string(line_no));
    if (!(ls >> e.actor_id >> e.action_id >> e.camera_id >> split_word))
      throw ManifestMismatch(path + ":" + std::to_string(line_no));
    if (split_word == "train")
      e.split = Split::train;
    else if (split_word == "eval")
      e.split = Split::eval;
    else
      throw ManifestMismatch(path + ":" + std::to_string(line_no) +
                             ": bad split '" + split_word + "'");
    index.entries.push_back(std::move(e));
  }
  index.validate();
  return index;
}

std::vector<SkeletonSequence> load_split(const CorpusIndex& index, Split split,
                                         const SkeletonTopology& topology,
                                         int expected_t) {
  std::vector<SkeletonSequence> seqs;
  for (const auto& e : index.entries) {
    if (e.split != split) continue;
    SkeletonSequence seq = parse_ntu_file(e.path, topology);
    if (seq.frame_count() != expected_t)
      throw ShapeMismatch(e.path + ": expected " +
                          std::to_string(expected_t) + " frames, got " +
                          std::to_string(seq.frame_count()));
    if (seq.actor_id != e.actor_id || seq.action_id != e.action_id ||
        seq.camera_id != e.camera_id)
      throw ManifestMismatch(e.path + ": filename labels disagree with manifest");
    if (!seq.joints.all_finite())
      throw MalformedFile(e.path + ": non-finite coordinates");
    seqs.push_back(root_center(seq, topology.root()));
  }
  return seqs;
}

void validate_quadruple(const PairedQuadruple& quad) {
  const SkeletonSequence* all[4] = {&quad.s_ap, &quad.s_bp, &quad.s_aq,
                                    &quad.s_bq};
  int cam = quad.s_ap.camera_id;
  for (const auto* s : all)
    if (s->camera_id != cam)
      throw LabelMismatch("quadruple spans cameras");
  int a = quad.s_ap.action_id, b = quad.s_bp.action_id;
  int p = quad.s_ap.actor_id, q = quad.s_aq.actor_id;
  if (a == b || p == q)
    throw LabelMismatch("quadruple needs two actors and two actions");
  if (quad.s_bp.actor_id != p || quad.s_aq.action_id != a ||
      quad.s_bq.action_id != b || quad.s_bq.actor_id != q)
    throw LabelMismatch("quadruple is not a full 2x2 grid");
}

std::vector<PairedQuadruple> build_pairs(
    const std::vector<SkeletonSequence>& pool, uint64_t rng_seed) {
  // camera -> (actor, action) -> recordings.
  std::map<int, std::map<std::pair<int, int>, std::vector<const SkeletonSequence*>>>
      cells;
  for (const auto& s : pool)
    cells[s.camera_id][{s.actor_id, s.action_id}].push_back(&s);

  std::vector<PairedQuadruple> quads;
  for (const auto& [cam, grid] : cells) {
    std::set<int> actor_set, action_set;
    for (const auto& [key, _] : grid) {
      actor_set.insert(key.first);
      action_set.insert(key.second);
    }
    std::vector<int> actors(actor_set.begin(), actor_set.end());
    std::vector<int> actions(action_set.begin(), action_set.end());
    for (size_t pi = 0; pi < actors.size(); ++pi)
      for (size_t qi = pi + 1; qi < actors.size(); ++qi)
        for (size_t ai = 0; ai < actions.size(); ++ai)
          for (size_t bi = ai + 1; bi < actions.size(); ++bi) {
            int p = actors[pi], q = actors[qi];
            int a = actions[ai], b = actions[bi];
            auto ap = grid.find({p, a});
            auto bp = grid.find({p, b});
            auto aq = grid.find({q, a});
            auto bq = grid.find({q, b});
            if (ap == grid.end() || bp == grid.end() || aq == grid.end() ||
                bq == grid.end())
              continue;
            for (const auto* s_ap : ap->second)
              for (const auto* s_bp : bp->second)
                for (const auto* s_aq : aq->second)
                  for (const auto* s_bq : bq->second) {
                    PairedQuadruple quad{*s_ap, *s_bp, *s_aq, *s_bq};
                    validate_quadruple(quad);
                    quads.push_back(std::move(quad));
                  }
          }
  }
  if (quads.empty()) throw NoValidPairs("corpus admits no 2x2 action/actor grid");
  Rng rng(mix_seed(rng_seed, 0x70616972));  // stream tag: pair building
  rng.shuffle(quads);
  return quads;
}

}  // namespace pmrt
