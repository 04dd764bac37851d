#include "pmrt/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pmrt/errors.hpp"

namespace pmrt {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

int parse_int(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    int v = std::stoi(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw InvalidConfig(key + ": not an integer: " + value);
  }
}

uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    uint64_t v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw InvalidConfig(key + ": not an unsigned integer: " + value);
  }
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw InvalidConfig(key + ": not a number: " + value);
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw InvalidConfig(key + ": not a boolean: " + value);
}

std::vector<int> parse_int_list(const std::string& key,
                                const std::string& value) {
  std::vector<int> out;
  std::istringstream is(value);
  std::string item;
  while (std::getline(is, item, ',')) out.push_back(parse_int(key, trim(item)));
  return out;
}

}  // namespace

void set_config_key(RunConfig& cfg, const std::string& key,
                    const std::string& value) {
  if (key == "corpus.raw_dir") cfg.raw_dir = value;
  else if (key == "corpus.manifest") cfg.manifest = value;
  else if (key == "corpus.synthetic") cfg.synthetic = parse_bool(key, value);
  else if (key == "corpus.synth_actors") cfg.synth_actors = parse_int(key, value);
  else if (key == "corpus.synth_actions") cfg.synth_actions = parse_int(key, value);
  else if (key == "corpus.synth_cameras") cfg.synth_cameras = parse_int(key, value);
  else if (key == "corpus.synth_seed") cfg.synth_seed = parse_u64(key, value);
  else if (key == "out_root") cfg.out_root = value;
  else if (key == "net.embedding_channels") cfg.net.embedding_channels = parse_int(key, value);
  else if (key == "net.embedding_length") cfg.net.embedding_length = parse_int(key, value);
  else if (key == "net.joints") cfg.net.joints = parse_int(key, value);
  else if (key == "net.frames") cfg.net.frames = parse_int(key, value);
  else if (key == "net.y_action") cfg.net.y_action = parse_int(key, value);
  else if (key == "net.y_actor") cfg.net.y_actor = parse_int(key, value);
  else if (key == "net.leaky_slope") cfg.net.leaky_slope = parse_double(key, value);
  else if (key == "weights.alpha_rec") cfg.train.weights.alpha_rec = parse_double(key, value);
  else if (key == "weights.alpha_cross") cfg.train.weights.alpha_cross = parse_double(key, value);
  else if (key == "weights.alpha_ee") cfg.train.weights.alpha_ee = parse_double(key, value);
  else if (key == "weights.alpha_trip") cfg.train.weights.alpha_trip = parse_double(key, value);
  else if (key == "weights.alpha_smooth") cfg.train.weights.alpha_smooth = parse_double(key, value);
  else if (key == "weights.alpha_latent") cfg.train.weights.alpha_latent = parse_double(key, value);
  else if (key == "weights.alpha_emb") cfg.train.weights.alpha_emb = parse_double(key, value);
  else if (key == "weights.gamma") cfg.train.weights.gamma = parse_double(key, value);
  else if (key == "plan") {
    // Selects the stage table; a later train.epochs line rescales it, so
    // plan must come first in a config file.
    if (value == "full") cfg.train.plan = StagePlan::full();
    else if (value == "desk") cfg.train.plan = StagePlan::desk();
    else throw InvalidConfig("plan: unknown plan: " + value);
    cfg.plan = value;
  } else if (key == "train.epochs") {
    std::vector<int> epochs = parse_int_list(key, value);
    if (epochs.size() != cfg.train.plan.stages.size())
      throw InvalidConfig("train.epochs: expected " +
                          std::to_string(cfg.train.plan.stages.size()) +
                          " entries, got " + std::to_string(epochs.size()));
    for (size_t i = 0; i < epochs.size(); ++i)
      cfg.train.plan.stages[i].epochs = epochs[i];
  }
  else if (key == "train.batch_size") cfg.train.batch_size = parse_int(key, value);
  else if (key == "train.learning_rate") cfg.train.learning_rate = parse_double(key, value);
  else if (key == "train.seed") cfg.train.seed = parse_u64(key, value);
  else if (key == "train.quadruples_per_epoch") cfg.train.quadruples_per_epoch = parse_int(key, value);
  else if (key == "train.eval_probe") cfg.train.eval_probe = parse_int(key, value);
  else if (key == "train.eval_quads") cfg.train.eval_quads = parse_int(key, value);
  else if (key == "policy.mode") cfg.policy_mode = value;
  else if (key == "policy.constant_ref") cfg.policy_constant_ref = value;
  else if (key == "policy.seed") cfg.policy_seed = parse_u64(key, value);
  else if (key == "policy.pool") cfg.policy_pool = value;
  else if (key == "attack.epochs") cfg.attack.epochs = parse_int(key, value);
  else if (key == "attack.batch_size") cfg.attack.batch_size = parse_int(key, value);
  else if (key == "attack.learning_rate") cfg.attack.learning_rate = parse_double(key, value);
  else if (key == "attack.seed") cfg.attack.seed = parse_u64(key, value);
  else throw InvalidConfig("unknown configuration key: " + key);
}

RunConfig parse_run_config_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw InvalidConfig("line " + std::to_string(line_no) +
                          ": expected key=value, got: " + t);
    set_config_key(cfg, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config_text(buf.str());
}

void RunConfig::validate() const {
  net.validate();
  train.validate();
  if (plan != "full" && plan != "desk")
    throw InvalidConfig("plan must be full or desk");
  if (policy_mode != "constant" && policy_mode != "random")
    throw InvalidConfig("policy.mode must be constant or random");
  if (!policy_pool.empty() && policy_pool != "train" && policy_pool != "eval")
    throw InvalidConfig("policy.pool must be train or eval");
  if (attack.epochs < 1 || attack.batch_size < 1 ||
      attack.learning_rate <= 0.0)
    throw InvalidConfig("attack training needs positive epochs, batch, rate");
  if (synthetic && (synth_actors < 2 || synth_actions < 2 || synth_cameras < 1))
    throw InvalidConfig("synthetic corpus needs >= 2 actors and actions");
}

std::string resolved_config_text(const RunConfig& cfg) {
  std::ostringstream os;
  os.precision(17);
  os << "corpus.raw_dir=" << cfg.raw_dir << '\n'
     << "corpus.manifest=" << cfg.manifest << '\n'
     << "corpus.synthetic=" << (cfg.synthetic ? "true" : "false") << '\n'
     << "corpus.synth_actors=" << cfg.synth_actors << '\n'
     << "corpus.synth_actions=" << cfg.synth_actions << '\n'
     << "corpus.synth_cameras=" << cfg.synth_cameras << '\n'
     << "corpus.synth_seed=" << cfg.synth_seed << '\n'
     << "out_root=" << cfg.out_root << '\n'
     << "net.embedding_channels=" << cfg.net.embedding_channels << '\n'
     << "net.embedding_length=" << cfg.net.embedding_length << '\n'
     << "net.joints=" << cfg.net.joints << '\n'
     << "net.frames=" << cfg.net.frames << '\n'
     << "net.y_action=" << cfg.net.y_action << '\n'
     << "net.y_actor=" << cfg.net.y_actor << '\n'
     << "net.leaky_slope=" << cfg.net.leaky_slope << '\n'
     << "weights.alpha_rec=" << cfg.train.weights.alpha_rec << '\n'
     << "weights.alpha_cross=" << cfg.train.weights.alpha_cross << '\n'
     << "weights.alpha_ee=" << cfg.train.weights.alpha_ee << '\n'
     << "weights.alpha_trip=" << cfg.train.weights.alpha_trip << '\n'
     << "weights.alpha_smooth=" << cfg.train.weights.alpha_smooth << '\n'
     << "weights.alpha_latent=" << cfg.train.weights.alpha_latent << '\n'
     << "weights.alpha_emb=" << cfg.train.weights.alpha_emb << '\n'
     << "weights.gamma=" << cfg.train.weights.gamma << '\n'
     << "plan=" << cfg.plan << '\n'
     << "train.epochs=";
  for (size_t i = 0; i < cfg.train.plan.stages.size(); ++i)
    os << (i ? "," : "") << cfg.train.plan.stages[i].epochs;
  os << '\n'
     << "train.batch_size=" << cfg.train.batch_size << '\n'
     << "train.learning_rate=" << cfg.train.learning_rate << '\n'
     << "train.seed=" << cfg.train.seed << '\n'
     << "train.quadruples_per_epoch=" << cfg.train.quadruples_per_epoch << '\n'
     << "train.eval_probe=" << cfg.train.eval_probe << '\n'
     << "train.eval_quads=" << cfg.train.eval_quads << '\n'
     << "policy.mode=" << cfg.policy_mode << '\n'
     << "policy.constant_ref=" << cfg.policy_constant_ref << '\n'
     << "policy.seed=" << cfg.policy_seed << '\n'
     << "policy.pool=" << cfg.policy_pool << '\n'
     << "attack.epochs=" << cfg.attack.epochs << '\n'
     << "attack.batch_size=" << cfg.attack.batch_size << '\n'
     << "attack.learning_rate=" << cfg.attack.learning_rate << '\n'
     << "attack.seed=" << cfg.attack.seed << '\n';
  return os.str();
}

void write_resolved_config(const RunConfig& cfg, const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::string path =
      (std::filesystem::path(dir) / "resolved_config.txt").string();
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << resolved_config_text(cfg);
  if (!out) throw IoError("short write to " + path);
}

void apply_env_overrides(RunConfig& cfg) {
  if (const char* root = std::getenv("PMRT_OUT_ROOT")) cfg.out_root = root;
}

}  // namespace pmrt
