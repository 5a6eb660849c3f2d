#include "intertraj/trajectory/trajectory.hpp"

#include "intertraj/core/binary_io.hpp"
#include "intertraj/core/error.hpp"

namespace intertraj {

namespace {
constexpr std::uint32_t kTrajVersion = 1;
}

void InteractionTrajectory::validate() const {
  if (poses.rows() < 1) throw InvalidArgument("trajectory " + id + ": horizon must be at least 1");
  if (contacts.rows() != poses.rows()) throw InvalidArgument("trajectory " + id + ": contact/pose length mismatch");
  if (!poses.allFinite() || !shape.beta.allFinite()) throw InvalidArgument("trajectory " + id + ": non-finite values");
  if ((contacts.array() > 1).any()) throw InvalidArgument("trajectory " + id + ": contacts must be 0/1");
  if (action_label.empty() || object_label.empty() || scene_label.empty())
    throw InvalidArgument("trajectory " + id + ": empty label");
}

InteractionTrajectory InteractionTrajectory::with_horizon(int T) {
  require(T >= 1, "trajectory horizon must be at least 1");
  InteractionTrajectory tr;
  tr.poses.resize(T, kPoseDims);
  const auto id = HandPoseParams::identity().flat().transpose();
  for (int t = 0; t < T; ++t) tr.poses.row(t) = id;
  tr.contacts = ContactSequence::Zero(T, kNumVertices);
  return tr;
}

std::optional<Vec3> contact_centroid(const HandMesh& mesh, const ContactMap& contact) {
  require(mesh.vertices.rows() == kNumVertices, "contact_centroid: mesh must have 778 vertices");
  Vec3 acc = Vec3::Zero();
  int n = 0;
  for (int v = 0; v < kNumVertices; ++v)
    if (contact.mask(v)) {
      acc += mesh.vertices.row(v).transpose();
      ++n;
    }
  if (n == 0) return std::nullopt;
  return acc / n;
}

void save_trajectories(const std::string& path, const TrajectorySet& set) {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(set.size()));
  for (const auto& tr : set) {
    tr.validate();
    w.str(tr.id);
    w.str(tr.action_label);
    w.str(tr.object_label);
    w.str(tr.scene_label);
    w.u32(static_cast<std::uint32_t>(tr.horizon()));
    w.f64s({tr.shape.beta.data(), kNumShapeParams});
    w.f64s({tr.poses.data(), static_cast<std::size_t>(tr.poses.size())});
    w.bytes({tr.contacts.data(), static_cast<std::size_t>(tr.contacts.size())});
  }
  write_container(path, "TRAJ", kTrajVersion, w.buffer());
}

TrajectorySet load_trajectories(const std::string& path) {
  const std::string payload = read_container(path, "TRAJ", kTrajVersion);
  ByteReader r(payload);
  const auto count = r.u32();
  TrajectorySet set;
  set.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    InteractionTrajectory tr;
    tr.id = r.str();
    tr.action_label = r.str();
    tr.object_label = r.str();
    tr.scene_label = r.str();
    const auto T = r.u32();
    if (T == 0 || T > 100000) throw FormatError(path + ": implausible horizon");
    r.f64s({tr.shape.beta.data(), kNumShapeParams});
    tr.poses.resize(T, kPoseDims);
    tr.contacts.resize(T, kNumVertices);
    r.f64s({tr.poses.data(), static_cast<std::size_t>(tr.poses.size())});
    r.bytes({tr.contacts.data(), static_cast<std::size_t>(tr.contacts.size())});
    try {
      tr.validate();
    } catch (const InvalidArgument& e) {
      throw FormatError(path + ": " + e.what());
    }
    set.push_back(std::move(tr));
  }
  if (!r.done()) throw FormatError(path + ": trailing bytes in trajectory payload");
  return set;
}

}  // namespace intertraj
