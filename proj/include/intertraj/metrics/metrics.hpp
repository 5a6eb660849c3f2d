#pragma once

// Trajectory metrics. Joint arrays are N x 63 rows of 21 xyz joints in meters;
// errors are reported in centimeters.

#include <Eigen/Dense>

#include "intertraj/hand/types.hpp"

namespace intertraj {

using JointRows = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

double mpjpe(const JointRows& pred, const JointRows& gt);

struct Similarity {
  double scale = 1.0;
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Points3 apply(const Points3& p) const;
};

// Least-squares similarity mapping src onto dst (Umeyama). Throws when either
// point set is degenerate (all points coincident).
Similarity fit_similarity(const Points3& src, const Points3& dst);

// One similarity transform aligns the whole predicted trajectory to GT.
double mpjpe_pa(const JointRows& pred, const JointRows& gt);

Points3 joint_points(const JointRows& rows);

enum class F1Average { Micro, Macro };

struct ContactCounts {
  long tp = 0, fp = 0, fn = 0;
  double precision() const { return tp + fp > 0 ? double(tp) / double(tp + fp) : 0.0; }
  double recall() const { return tp + fn > 0 ? double(tp) / double(tp + fn) : 0.0; }
  double f1() const {
    const double p = precision(), r = recall();
    return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
  }
  ContactCounts& operator+=(const ContactCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
};

ContactCounts contact_counts(const Eigen::Ref<const Eigen::MatrixXd>& probs,
                             const Eigen::Ref<const Eigen::MatrixXd>& gt, double threshold = 0.5);

// Micro averages over every (t, vertex) pair; macro averages per-step F1.
double contact_f1(const Eigen::Ref<const Eigen::MatrixXd>& probs, const Eigen::Ref<const Eigen::MatrixXd>& gt,
                  double threshold = 0.5, F1Average avg = F1Average::Micro);

}  // namespace intertraj
