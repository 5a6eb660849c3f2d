#pragma once

// Per-sequence predictions and the metric table computed from them.

#include <string>
#include <vector>

#include "intertraj/metrics/metrics.hpp"
#include "intertraj/model/batch.hpp"

namespace intertraj {

struct SequencePrediction {
  std::string id;
  Eigen::MatrixXd pose;          // T x 99, meters
  Eigen::MatrixXd contact_prob;  // T x 778
};

struct MetricsSummary {
  int sequences = 0;
  double mpjpe = 0.0;         // cm, mean over sequences
  double median_mpjpe = 0.0;  // cm
  double mpjpe_pa = 0.0;      // cm
  double f1 = 0.0;            // micro over every (sequence, step, vertex), or mean of per-step F1 for macro
};

// Joints of predicted poses via the hand layer with the GT shape.
JointRows predicted_joints(const Eigen::MatrixXd& pose, const SequenceSample& gt);

MetricsSummary summarize(const std::vector<SequencePrediction>& preds, const std::vector<SequenceSample>& gt,
                         double threshold = 0.5, F1Average avg = F1Average::Micro);

// Per-sequence MPJPE values, in prediction order.
std::vector<double> per_sequence_mpjpe(const std::vector<SequencePrediction>& preds,
                                       const std::vector<SequenceSample>& gt);

// Table with the M-PE / M-PA / F1 columns.
std::string format_metrics_table(const std::vector<std::pair<std::string, MetricsSummary>>& rows);

// Baseline predicting the per-step mean pose and contact rate of a training set.
std::vector<SequencePrediction> constant_mean_predictions(const std::vector<SequenceSample>& train,
                                                          const std::vector<SequenceSample>& eval);

}  // namespace intertraj
