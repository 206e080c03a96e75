#ifndef MMFUSION_TRAIN_HPP_
#define MMFUSION_TRAIN_HPP_

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "mmfusion/data.hpp"
#include "mmfusion/metrics.hpp"
#include "mmfusion/model.hpp"
#include "mmfusion/tensor.hpp"

namespace mmf {

Tensor mae_loss(const Tensor& pred, const Tensor& target);

class AdamOptimizer {
 public:
  AdamOptimizer(ParamList* params, double lr, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8);
  // Applies one bias-corrected update from the accumulated gradients, then
  // zeroes them. Non-finite gradients abort naming the parameter.
  void step();
  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }
  long step_count() const { return t_; }

 private:
  ParamList* params_;
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

// Halves the learning rate once `patience` consecutive epochs pass without
// the watched value improving by more than `tol`.
class PlateauScheduler {
 public:
  PlateauScheduler(int patience, double tol = 1e-6)
      : patience_(patience), tol_(tol) {}
  // Returns true when this observation triggers a halving.
  bool observe(double val);
  double best() const { return best_; }

 private:
  int patience_;
  double tol_;
  double best_ = 1e300;
  int since_ = 0;
};

class EarlyStopper {
 public:
  EarlyStopper(int patience, double tol = 1e-6)
      : patience_(patience), tol_(tol) {}
  // Returns true once `patience` consecutive non-improving epochs are seen.
  bool observe(double val);

 private:
  int patience_;
  double tol_;
  double best_ = 1e300;
  int since_ = 0;
};

struct TrainConfig {
  double lr = 5e-4;
  int lr_halve_patience = 2;
  int early_stop_patience = 10;
  int max_epochs = 100;
  int batch_size = 32;
  std::uint64_t seed = 0;

  bool operator==(const TrainConfig&) const = default;
};

struct EpochStats {
  int epoch;
  double train_mae;
  double val_mae;
  double lr;
};

struct History {
  std::vector<EpochStats> epochs;
  int best_epoch = -1;
  double best_val_mae = 0.0;
  std::string to_csv() const;  // header: epoch,train_mae,val_mae,lr
};

// Epoch loop with seeded shuffling, plateau LR halving, early stopping and
// best-checkpoint restore. A non-finite loss aborts with Error("divergence");
// `history` keeps everything up to the abort.
void train(Model& model, const DatasetSplits& data, const TrainConfig& cfg,
           History& history);

double validation_mae(Model& model, const std::vector<MultimodalSample>& split,
                      const DatasetDims& dims, int batch_size);

std::vector<double> predict_all(Model& model,
                                const std::vector<MultimodalSample>& split,
                                const DatasetDims& dims, int batch_size);

MetricsReport evaluate(Model& model,
                       const std::vector<MultimodalSample>& split,
                       const DatasetDims& dims, int batch_size = 32);

struct ExperimentResult {
  std::vector<MetricsReport> per_seed;
  std::vector<int> failed_seeds;  // seeds whose training aborted
  MetricsReport mean, stddev;
  int best_index = -1;  // lowest test MAE among completed seeds
};

// Trains `n_seeds` models with seeds 0..n-1 (model init, dropout and
// shuffling all keyed on the seed) and reports per-metric mean and sample
// standard deviation plus the best run by MAE. Seeds run on worker threads.
// When `out_dir` is non-empty, per-seed history/metrics files are written
// under <out_dir>/seed<i>/.
ExperimentResult run_experiment(const ModelConfig& model_cfg,
                                const TrainConfig& train_cfg,
                                const DatasetSplits& data, int n_seeds,
                                const std::string& out_dir = "",
                                std::vector<std::unique_ptr<Model>>* models_out =
                                    nullptr);

}  // namespace mmf

#endif  // MMFUSION_TRAIN_HPP_
