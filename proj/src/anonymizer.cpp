#include "pmrt/anonymizer.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "pmrt/errors.hpp"
#include "pmrt/ntu_io.hpp"
#include "pmrt/rng.hpp"

namespace pmrt {

namespace {

uint64_t fnv1a(const std::string& s) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

size_t constant_index(const std::vector<SkeletonSequence>& pool,
                      const std::string& ref) {
  if (ref.empty()) {
    size_t best = 0;
    for (size_t i = 1; i < pool.size(); ++i)
      if (pool[i].name() < pool[best].name()) best = i;
    return best;
  }
  for (size_t i = 0; i < pool.size(); ++i)
    if (pool[i].name() == ref) return i;
  throw InvalidConfig("constant dummy " + ref + " is not in the dummy pool");
}

}  // namespace

const SkeletonSequence& select_dummy(
    const std::vector<SkeletonSequence>& dummy_pool, const DummyPolicy& policy,
    const SkeletonSequence& input) {
  if (dummy_pool.empty())
    throw EmptyDummyPool("no candidate dummy sequences");
  if (policy.mode == DummyPolicy::Mode::constant)
    return dummy_pool[constant_index(dummy_pool, policy.constant_ref)];
  Rng rng(mix_seed(policy.rng_seed, fnv1a(input.name())));
  size_t idx = static_cast<size_t>(
      rng.uniform_int(0, static_cast<int64_t>(dummy_pool.size()) - 1));
  return dummy_pool[idx];
}

AnonymizedSequence anonymize(const PmrModel& model,
                             const SkeletonSequence& input,
                             const DummyPolicy& policy,
                             const std::vector<SkeletonSequence>& dummy_pool) {
  const SkeletonSequence& dummy = select_dummy(dummy_pool, policy, input);
  EmbeddingPair in_emb = model.encode(input);
  EmbeddingPair dm_emb = model.encode(dummy);

  AnonymizedSequence out;
  out.seq = model.decode_sequence(in_emb.motion, dm_emb.privacy);
  out.seq.action_id = input.action_id;
  out.seq.actor_id = kAnonymizedActorId;
  out.seq.camera_id = input.camera_id;
  out.seq.setup_id = input.setup_id;
  out.seq.replication_id = input.replication_id;
  out.seq.source_frame_count = out.seq.frame_count();
  out.source_name = input.name();
  out.dummy_name = dummy.name();
  out.true_actor_id = input.actor_id;
  return out;
}

void save_anonymize_manifest(const std::vector<AnonymizeRecord>& records,
                             const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  for (const auto& r : records)
    out << r.source_path << '\t' << r.output_path << '\t' << r.dummy << '\t'
        << r.true_actor_id << '\t' << r.action_id << '\t' << r.camera_id
        << '\n';
  if (!out) throw IoError("short write to " + path);
}

std::vector<AnonymizeRecord> load_anonymize_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<AnonymizeRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    AnonymizeRecord r;
    if (!std::getline(ls, r.source_path, '\t') ||
        !std::getline(ls, r.output_path, '\t') ||
        !std::getline(ls, r.dummy, '\t') ||
        !(ls >> r.true_actor_id >> r.action_id >> r.camera_id))
      throw ManifestMismatch(path + ":" + std::to_string(line_no));
    records.push_back(std::move(r));
  }
  return records;
}

CorpusIndex anonymize_corpus(const PmrModel& model, const CorpusIndex& index,
                             const DummyPolicy& policy,
                             const std::vector<SkeletonSequence>& dummy_pool,
                             const SkeletonTopology& topology,
                             const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::vector<SkeletonSequence> inputs =
      load_split(index, Split::eval, topology, model.config.frames);

  std::vector<AnonymizeRecord> records;
  CorpusIndex out_index;
  size_t input_pos = 0;
  for (const auto& e : index.entries) {
    if (e.split != Split::eval) continue;
    const SkeletonSequence& input = inputs[input_pos++];
    AnonymizedSequence anon = anonymize(model, input, policy, dummy_pool);

    std::string out_path =
        (std::filesystem::path(out_dir) / (anon.source_name + ".skeleton"))
            .string();
    // The stem keeps the original labels: evaluation re-loads the outputs
    // through the standard parser and the attack labels each one with the
    // identity it is meant to protect.
    SkeletonSequence to_write = anon.seq;
    to_write.actor_id = anon.true_actor_id;
    write_ntu_file(out_path, to_write);

    AnonymizeRecord r;
    r.source_path = e.path;
    r.output_path = out_path;
    r.dummy = anon.dummy_name;
    r.true_actor_id = anon.true_actor_id;
    r.action_id = anon.seq.action_id;
    r.camera_id = anon.seq.camera_id;
    records.push_back(r);

    CorpusEntry oe = e;
    oe.path = out_path;
    out_index.entries.push_back(oe);
  }
  save_anonymize_manifest(
      records,
      (std::filesystem::path(out_dir) / "anonymize_manifest.tsv").string());
  return out_index;
}

}  // namespace pmrt
