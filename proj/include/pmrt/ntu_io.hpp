#ifndef PMRT_NTU_IO_HPP
#define PMRT_NTU_IO_HPP

#include <string>

#include "pmrt/sequence.hpp"
#include "pmrt/topology.hpp"

namespace pmrt {

// Parses metadata out of a corpus stem of the form SxxxCxxxPxxxRxxxAxxx
// (zero-padded 3-digit fields). Any trailing extension must already be
// stripped. Throws MalformedFile on any deviation.
struct NtuName {
  int setup_id = 0;
  int camera_id = 0;
  int actor_id = 0;
  int replication_id = 0;
  int action_id = 0;
};
NtuName parse_ntu_name(const std::string& stem);

// Reads a text skeleton file in the NTU layout:
//   frame_count
//   per frame: body_count; per body: one metadata line, joint_count,
//   then joint_count lines of 12 floats (x y z come first).
// Only x,y,z are retained. Metadata comes from the filename. Frames are not
// length-normalized here.
// Throws MalformedFile (unparsable layout, zero frames, wrong joint count)
// and MultiActorFile (any frame with body count != 1).
SkeletonSequence parse_ntu_file(const std::string& path,
                                const SkeletonTopology& topology);

// Writes seq back out in the same layout, one body per frame. XYZ values are
// printed with enough digits that parse(serialize(x)) == x bitwise; the nine
// non-XYZ per-joint fields are written as zeros.
void write_ntu_file(const std::string& path, const SkeletonSequence& seq);

}  // namespace pmrt

#endif  // PMRT_NTU_IO_HPP
