#ifndef MMFUSION_METRICS_HPP_
#define MMFUSION_METRICS_HPP_

#include <string>
#include <vector>

namespace mmf {

// CMU-MOSEI style regression metric suite. acc2/f1_2 exclude exact-zero
// labels; corr_defined is false when either side has zero variance.
struct MetricsReport {
  double acc7 = 0.0;
  double acc5 = 0.0;
  double acc2 = 0.0;
  double f1_2 = 0.0;
  double mae = 0.0;
  double corr = 0.0;
  bool corr_defined = true;
};

// Clamp to [-limit,limit], then round half away from zero onto the integer
// grid.
int clamp_round(double v, int limit);

double mae(const std::vector<double>& pred, const std::vector<double>& label);
double pearson(const std::vector<double>& x, const std::vector<double>& y,
               bool* defined);
double grid_accuracy(const std::vector<double>& pred,
                     const std::vector<double>& label, int limit);
// Binary accuracy / positive-class F1 on sign, zero labels excluded.
void binary_metrics(const std::vector<double>& pred,
                    const std::vector<double>& label, double* acc, double* f1);

MetricsReport compute_metrics(const std::vector<double>& pred,
                              const std::vector<double>& label);

std::string metrics_to_text(const MetricsReport& m);
std::string metrics_to_json(const MetricsReport& m);

}  // namespace mmf

#endif  // MMFUSION_METRICS_HPP_
