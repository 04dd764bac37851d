#include "pmrt/ntu_io.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

#include "pmrt/errors.hpp"

namespace pmrt {

namespace {

int parse_field(const std::string& stem, size_t pos, char tag) {
  if (stem.size() < pos + 4 || stem[pos] != tag)
    throw MalformedFile("bad name field '" + std::string(1, tag) + "' in " +
                        stem);
  int value = 0;
  for (size_t i = pos + 1; i < pos + 4; ++i) {
    if (!std::isdigit(static_cast<unsigned char>(stem[i])))
      throw MalformedFile("bad name field '" + std::string(1, tag) + "' in " +
                          stem);
    value = value * 10 + (stem[i] - '0');
  }
  return value;
}

}  // namespace

NtuName parse_ntu_name(const std::string& stem) {
  if (stem.size() != 20)
    throw MalformedFile("name must be 20 chars (SxxxCxxxPxxxRxxxAxxx): " +
                        stem);
  NtuName n;
  n.setup_id = parse_field(stem, 0, 'S');
  n.camera_id = parse_field(stem, 4, 'C');
  n.actor_id = parse_field(stem, 8, 'P');
  n.replication_id = parse_field(stem, 12, 'R');
  n.action_id = parse_field(stem, 16, 'A');
  return n;
}

namespace {

std::string file_stem(const std::string& path) {
  size_t slash = path.find_last_of("/\\");
  std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
  size_t dot = base.find('.');
  return dot == std::string::npos ? base : base.substr(0, dot);
}

long read_count(std::istream& in, const char* what) {
  long v;
  if (!(in >> v)) throw MalformedFile(std::string("missing ") + what);
  return v;
}

}  // namespace

SkeletonSequence parse_ntu_file(const std::string& path,
                                const SkeletonTopology& topology) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  NtuName name = parse_ntu_name(file_stem(path));

  long frame_count = read_count(in, "frame count");
  if (frame_count <= 0) throw MalformedFile(path + ": no frames");
  int j_count = topology.joint_count();

  std::vector<double> coords;
  coords.reserve(static_cast<size_t>(frame_count) * j_count * 3);
  for (long f = 0; f < frame_count; ++f) {
    long body_count = read_count(in, "body count");
    if (body_count != 1)
      throw MultiActorFile(path + ": frame " + std::to_string(f) + " has " +
                           std::to_string(body_count) + " bodies");
    in.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
    std::string body_meta;
    if (!std::getline(in, body_meta))
      throw MalformedFile(path + ": missing body metadata line");
    long joint_count = read_count(in, "joint count");
    if (joint_count != j_count)
      throw MalformedFile(path + ": expected " + std::to_string(j_count) +
                          " joints, got " + std::to_string(joint_count));
    for (long j = 0; j < joint_count; ++j) {
      double vals[12];
      for (double& v : vals)
        if (!(in >> v))
          throw MalformedFile(path + ": truncated joint record at frame " +
                              std::to_string(f));
      coords.push_back(vals[0]);
      coords.push_back(vals[1]);
      coords.push_back(vals[2]);
    }
  }

  SkeletonSequence seq;
  seq.setup_id = name.setup_id;
  seq.camera_id = name.camera_id;
  seq.actor_id = name.actor_id;
  seq.replication_id = name.replication_id;
  seq.action_id = name.action_id;
  seq.source_frame_count = static_cast<int>(frame_count);
  seq.joints = Tensor({static_cast<size_t>(j_count),
                       static_cast<size_t>(frame_count), 3});
  // File order is frame-major; storage is joint-major.
  size_t k = 0;
  for (long t = 0; t < frame_count; ++t)
    for (int j = 0; j < j_count; ++j)
      for (int c = 0; c < 3; ++c)
        seq.at(j, static_cast<int>(t), c) = coords[k++];
  return seq;
}

void write_ntu_file(const std::string& path, const SkeletonSequence& seq) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  int j_count = seq.joint_count();
  int t_count = seq.frame_count();
  out << t_count << "\n";
  char buf[32];
  for (int t = 0; t < t_count; ++t) {
    out << 1 << "\n";
    // Body metadata: tracking id plus the standard flag fields, unused here.
    out << "0 0 0 0 0 0 0 0 0 0\n";
    out << j_count << "\n";
    for (int j = 0; j < j_count; ++j) {
      for (int c = 0; c < 3; ++c) {
        std::snprintf(buf, sizeof(buf), "%.17g", seq.at(j, t, c));
        out << (c ? " " : "") << buf;
      }
      out << " 0 0 0 0 0 0 0 0 0\n";
    }
  }
  if (!out) throw IoError("short write to " + path);
}

}  // namespace pmrt
