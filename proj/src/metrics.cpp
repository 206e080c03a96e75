#include "mmfusion/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mmfusion/errors.hpp"

namespace mmf {

namespace {
void check_pair(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || a.size() != b.size())
    throw Error("config", "metrics: prediction/label size mismatch (" +
                              std::to_string(a.size()) + " vs " +
                              std::to_string(b.size()) + ")");
}
}  // namespace

int clamp_round(double v, int limit) {
  double c = std::clamp(v, -static_cast<double>(limit),
                        static_cast<double>(limit));
  return static_cast<int>(std::round(c));  // std::round: half away from zero
}

double mae(const std::vector<double>& pred, const std::vector<double>& label) {
  check_pair(pred, label);
  double acc = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) acc += std::fabs(pred[i] - label[i]);
  return acc / pred.size();
}

double pearson(const std::vector<double>& x, const std::vector<double>& y,
               bool* defined) {
  check_pair(x, y);
  size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) {
    if (defined) *defined = false;
    return 0.0;
  }
  if (defined) *defined = true;
  return sxy / std::sqrt(sxx * syy);
}

double grid_accuracy(const std::vector<double>& pred,
                     const std::vector<double>& label, int limit) {
  check_pair(pred, label);
  int hits = 0;
  for (size_t i = 0; i < pred.size(); ++i)
    if (clamp_round(pred[i], limit) == clamp_round(label[i], limit)) ++hits;
  return static_cast<double>(hits) / pred.size();
}

void binary_metrics(const std::vector<double>& pred,
                    const std::vector<double>& label, double* acc,
                    double* f1) {
  check_pair(pred, label);
  int tp = 0, fp = 0, fn = 0, tn = 0;
  for (size_t i = 0; i < pred.size(); ++i) {
    if (label[i] == 0.0) continue;  // neutral excluded from the binary task
    bool pos_label = label[i] > 0.0;
    bool pos_pred = pred[i] > 0.0;
    if (pos_pred && pos_label) ++tp;
    else if (pos_pred && !pos_label) ++fp;
    else if (!pos_pred && pos_label) ++fn;
    else ++tn;
  }
  int total = tp + fp + fn + tn;
  *acc = total > 0 ? static_cast<double>(tp + tn) / total : 0.0;
  double denom = 2.0 * tp + fp + fn;
  *f1 = denom > 0.0 ? 2.0 * tp / denom : 0.0;
}

MetricsReport compute_metrics(const std::vector<double>& pred,
                              const std::vector<double>& label) {
  MetricsReport m;
  m.mae = mae(pred, label);
  m.corr = pearson(pred, label, &m.corr_defined);
  m.acc7 = grid_accuracy(pred, label, 3);
  m.acc5 = grid_accuracy(pred, label, 2);
  binary_metrics(pred, label, &m.acc2, &m.f1_2);
  return m;
}

std::string metrics_to_text(const MetricsReport& m) {
  std::ostringstream os;
  os << "acc7 " << m.acc7 << "\n"
     << "acc5 " << m.acc5 << "\n"
     << "acc2 " << m.acc2 << "\n"
     << "f1_2 " << m.f1_2 << "\n"
     << "mae " << m.mae << "\n"
     << "corr " << (m.corr_defined ? std::to_string(m.corr) : "undefined")
     << "\n";
  return os.str();
}

std::string metrics_to_json(const MetricsReport& m) {
  std::ostringstream os;
  os << "{\"acc7\":" << m.acc7 << ",\"acc5\":" << m.acc5
     << ",\"acc2\":" << m.acc2 << ",\"f1_2\":" << m.f1_2
     << ",\"mae\":" << m.mae << ",\"corr\":";
  if (m.corr_defined)
    os << m.corr;
  else
    os << "null";
  os << "}";
  return os.str();
}

}  // namespace mmf
