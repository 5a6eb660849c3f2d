#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "intertraj/hand/types.hpp"

namespace intertraj {

using ContactMask = Eigen::Matrix<std::uint8_t, 1, kNumVertices>;

struct ContactMap {
  ContactMask mask = ContactMask::Zero();

  int count() const { return static_cast<int>((mask.array() != 0).count()); }
  bool any() const { return count() > 0; }
};

using PoseSequence = Eigen::Matrix<double, Eigen::Dynamic, kPoseDims, Eigen::RowMajor>;
using ContactSequence = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, kNumVertices, Eigen::RowMajor>;

// One hand interaction over T steps. Global transforms are expressed in the
// reference frame (camera frame of step 0).
struct InteractionTrajectory {
  std::string id;
  std::string action_label;
  std::string object_label;
  std::string scene_label;
  HandShapeParams shape;
  PoseSequence poses;        // T x 99
  ContactSequence contacts;  // T x 778, values 0/1

  int horizon() const { return static_cast<int>(poses.rows()); }

  HandPoseParams pose(int t) const { return HandPoseParams::from_flat(poses.row(t).transpose()); }
  void set_pose(int t, const HandPoseParams& p) { poses.row(t) = p.flat().transpose(); }
  ContactMap contact(int t) const { return ContactMap{contacts.row(t)}; }
  void set_contact(int t, const ContactMap& c) { contacts.row(t) = c.mask; }

  // Throws InvalidArgument when the invariants (T >= 1, matching lengths,
  // binary contacts, finite pose, non-empty labels) do not hold.
  void validate() const;

  static InteractionTrajectory with_horizon(int T);
};

using TrajectorySet = std::vector<InteractionTrajectory>;

// Mean position of the contacted vertices; empty when the mask is all zero.
std::optional<Vec3> contact_centroid(const HandMesh& mesh, const ContactMap& contact);

// Trajectory container, kind "TRAJ", version 1:
//   u32 count
//   per record: str id, action, object, scene; u32 T; f64 beta[10];
//               f64 poses[T*99]; u8 contacts[T*778]
void save_trajectories(const std::string& path, const TrajectorySet& set);
TrajectorySet load_trajectories(const std::string& path);

}  // namespace intertraj
