#include "intertraj/model/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <unordered_map>

#include "intertraj/hand/hand_model.hpp"

namespace intertraj {

JointRows predicted_joints(const Eigen::MatrixXd& pose, const SequenceSample& gt) {
  require(pose.rows() == gt.horizon && pose.cols() == kPoseDims, "prediction " + gt.id + ": pose shape");
  static const HandLayer<double> hand;
  ad::Graph<double> g(false, 0, false);
  ad::Tensor<double> shape = gt.shape.cast<double>().replicate(gt.horizon, 1);
  ad::Tensor<double> p = pose;
  return hand(g, g.constant(shape), g.constant(p)).joints.value();
}

namespace {

struct Aligned {
  const SequencePrediction* pred;
  const SequenceSample* gt;
};

std::vector<Aligned> align(const std::vector<SequencePrediction>& preds, const std::vector<SequenceSample>& gt) {
  std::unordered_map<std::string, const SequenceSample*> by_id;
  for (const auto& s : gt) by_id[s.id] = &s;
  std::vector<Aligned> out;
  for (const auto& p : preds) {
    auto it = by_id.find(p.id);
    if (it == by_id.end()) throw InvalidArgument("prediction for unknown sequence " + p.id);
    out.push_back({&p, it->second});
  }
  return out;
}

}  // namespace

std::vector<double> per_sequence_mpjpe(const std::vector<SequencePrediction>& preds,
                                       const std::vector<SequenceSample>& gt) {
  std::vector<double> out;
  for (const auto& a : align(preds, gt)) out.push_back(mpjpe(predicted_joints(a.pred->pose, *a.gt), a.gt->joints));
  return out;
}

MetricsSummary summarize(const std::vector<SequencePrediction>& preds, const std::vector<SequenceSample>& gt,
                         double threshold, F1Average avg) {
  MetricsSummary m;
  const auto pairs = align(preds, gt);
  require(!pairs.empty(), "summarize: no predictions");
  std::vector<double> errs;
  ContactCounts counts;
  double macro = 0.0;
  long steps = 0;
  for (const auto& a : pairs) {
    const JointRows pj = predicted_joints(a.pred->pose, *a.gt);
    errs.push_back(mpjpe(pj, a.gt->joints));
    m.mpjpe_pa += mpjpe_pa(pj, a.gt->joints);
    const Eigen::MatrixXd gtc = a.gt->contacts.cast<double>();
    counts += contact_counts(a.pred->contact_prob, gtc, threshold);
    if (avg == F1Average::Macro) {
      macro += contact_f1(a.pred->contact_prob, gtc, threshold, F1Average::Macro) * gtc.rows();
      steps += gtc.rows();
    }
  }
  m.sequences = static_cast<int>(pairs.size());
  for (double e : errs) m.mpjpe += e;
  m.mpjpe /= m.sequences;
  m.mpjpe_pa /= m.sequences;
  std::vector<double> sorted = errs;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t h = sorted.size() / 2;
  m.median_mpjpe = sorted.size() % 2 ? sorted[h] : 0.5 * (sorted[h - 1] + sorted[h]);
  m.f1 = avg == F1Average::Micro ? counts.f1() : macro / static_cast<double>(steps);
  return m;
}

std::string format_metrics_table(const std::vector<std::pair<std::string, MetricsSummary>>& rows) {
  std::string out = "| setting | sequences | M-PE (cm) | M-PA (cm) | F1 |\n|---|---:|---:|---:|---:|\n";
  char buf[256];
  for (const auto& [name, m] : rows) {
    std::snprintf(buf, sizeof buf, "| %s | %d | %.3f | %.3f | %.4f |\n", name.c_str(), m.sequences, m.mpjpe,
                  m.mpjpe_pa, m.f1);
    out += buf;
  }
  return out;
}

std::vector<SequencePrediction> constant_mean_predictions(const std::vector<SequenceSample>& train,
                                                          const std::vector<SequenceSample>& eval) {
  require(!train.empty(), "constant-mean baseline needs training sequences");
  const int T = train.front().horizon;
  Eigen::MatrixXd pose = Eigen::MatrixXd::Zero(T, kPoseDims), contact = Eigen::MatrixXd::Zero(T, kNumVertices);
  for (const auto& s : train) {
    pose += s.pose.cast<double>();
    contact += s.contacts.cast<double>();
  }
  pose /= double(train.size());
  contact /= double(train.size());
  std::vector<SequencePrediction> out;
  for (const auto& s : eval) out.push_back({s.id, pose, contact});
  return out;
}

}  // namespace intertraj
