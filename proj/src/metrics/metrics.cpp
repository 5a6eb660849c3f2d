#include "intertraj/metrics/metrics.hpp"

#include <cmath>

#include "intertraj/core/error.hpp"

namespace intertraj {

namespace {

void check_joint_rows(const JointRows& pred, const JointRows& gt) {
  if (pred.rows() != gt.rows() || pred.cols() != gt.cols() || pred.cols() % 3 != 0 || pred.rows() == 0)
    throw InvalidArgument("metrics: prediction and ground-truth joint arrays differ in shape");
}

}  // namespace

Points3 joint_points(const JointRows& rows) {
  Points3 p(rows.size() / 3, 3);
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(p.data(), p.rows(), 3) =
      Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(rows.data(),
                                                                                             rows.size() / 3, 3);
  return p;
}

double mpjpe(const JointRows& pred, const JointRows& gt) {
  check_joint_rows(pred, gt);
  const Points3 a = joint_points(pred), b = joint_points(gt);
  return 100.0 * (a - b).rowwise().norm().mean();
}

Points3 Similarity::apply(const Points3& p) const {
  return ((scale * p * rotation.transpose()).rowwise() + translation.transpose());
}

Similarity fit_similarity(const Points3& src, const Points3& dst) {
  require(src.rows() == dst.rows() && src.rows() > 0, "fit_similarity: point counts differ");
  const Eigen::RowVector3d mu_s = src.colwise().mean(), mu_d = dst.colwise().mean();
  const Points3 xs = src.rowwise() - mu_s, xd = dst.rowwise() - mu_d;
  const double var_s = xs.squaredNorm() / double(src.rows());
  const double var_d = xd.squaredNorm() / double(dst.rows());
  if (var_s < 1e-20 || var_d < 1e-20) throw InvalidArgument("fit_similarity: degenerate point set");
  const Mat3 cov = xd.transpose() * xs / double(src.rows());
  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) d(2, 2) = -1.0;
  Similarity s;
  s.rotation = svd.matrixU() * d * svd.matrixV().transpose();
  s.scale = (svd.singularValues().asDiagonal() * d).trace() / var_s;
  s.translation = mu_d.transpose() - s.scale * s.rotation * mu_s.transpose();
  return s;
}

double mpjpe_pa(const JointRows& pred, const JointRows& gt) {
  check_joint_rows(pred, gt);
  const Points3 a = joint_points(pred), b = joint_points(gt);
  const Points3 aligned = fit_similarity(a, b).apply(a);
  return 100.0 * (aligned - b).rowwise().norm().mean();
}

ContactCounts contact_counts(const Eigen::Ref<const Eigen::MatrixXd>& probs,
                             const Eigen::Ref<const Eigen::MatrixXd>& gt, double threshold) {
  require(probs.rows() == gt.rows() && probs.cols() == gt.cols(), "contact_f1: shape mismatch");
  require(threshold > 0.0 && threshold < 1.0, "contact_f1: threshold must lie in (0, 1)");
  ContactCounts c;
  for (Eigen::Index j = 0; j < probs.cols(); ++j)
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
      const bool p = probs(i, j) >= threshold, t = gt(i, j) > 0.5;
      c.tp += p && t;
      c.fp += p && !t;
      c.fn += !p && t;
    }
  return c;
}

double contact_f1(const Eigen::Ref<const Eigen::MatrixXd>& probs, const Eigen::Ref<const Eigen::MatrixXd>& gt,
                  double threshold, F1Average avg) {
  if (avg == F1Average::Micro) return contact_counts(probs, gt, threshold).f1();
  require(probs.rows() > 0, "contact_f1: empty input");
  double total = 0.0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i)
    total += contact_counts(probs.middleRows(i, 1), gt.middleRows(i, 1), threshold).f1();
  return total / double(probs.rows());
}

}  // namespace intertraj
