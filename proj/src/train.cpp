#include "mmfusion/train.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "mmfusion/checkpoint.hpp"
#include "mmfusion/errors.hpp"

namespace mmf {

Tensor mae_loss(const Tensor& pred, const Tensor& target) {
  if (pred.shape() != target.shape())
    throw std::invalid_argument("mae_loss: shape mismatch " +
                                shape_str(pred.shape()) + " vs " +
                                shape_str(target.shape()));
  if (pred.size() == 0) throw Error("config", "mae_loss: empty batch");
  return mean_all(abs_op(sub(pred, target)));
}

AdamOptimizer::AdamOptimizer(ParamList* params, double lr, double beta1,
                             double beta2, double eps)
    : params_(params), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  m_.resize(params->size());
  v_.resize(params->size());
  for (size_t i = 0; i < params->size(); ++i) {
    m_[i].assign((*params)[i].second.size(), 0.0);
    v_[i].assign((*params)[i].second.size(), 0.0);
  }
}

void AdamOptimizer::step() {
  ++t_;
  double bc1 = 1.0 - std::pow(beta1_, t_);
  double bc2 = 1.0 - std::pow(beta2_, t_);
  for (size_t i = 0; i < params_->size(); ++i) {
    auto& [name, p] = (*params_)[i];
    auto& value = p.data();
    auto& grad = p.grad();
    for (size_t j = 0; j < value.size(); ++j) {
      double g = grad[j];
      if (!std::isfinite(g))
        throw Error("divergence",
                    "adam: non-finite gradient in parameter '" + name + "'");
      m_[i][j] = beta1_ * m_[i][j] + (1.0 - beta1_) * g;
      v_[i][j] = beta2_ * v_[i][j] + (1.0 - beta2_) * g * g;
      double mhat = m_[i][j] / bc1;
      double vhat = v_[i][j] / bc2;
      value[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
    std::fill(grad.begin(), grad.end(), 0.0);
  }
}

bool PlateauScheduler::observe(double val) {
  if (val < best_ - tol_) {
    best_ = val;
    since_ = 0;
    return false;
  }
  if (++since_ >= patience_) {
    since_ = 0;
    return true;
  }
  return false;
}

bool EarlyStopper::observe(double val) {
  if (val < best_ - tol_) {
    best_ = val;
    since_ = 0;
    return false;
  }
  return ++since_ >= patience_;
}

std::string History::to_csv() const {
  std::ostringstream os;
  os << "epoch,train_mae,val_mae,lr\n";
  for (const auto& e : epochs)
    os << e.epoch << "," << e.train_mae << "," << e.val_mae << "," << e.lr
       << "\n";
  return os.str();
}

std::vector<double> predict_all(Model& model,
                                const std::vector<MultimodalSample>& split,
                                const DatasetDims& dims, int batch_size) {
  std::vector<double> preds;
  preds.reserve(split.size());
  for (const auto& batch :
       batch_indices(static_cast<int>(split.size()), batch_size, false, 0)) {
    BatchTensors bt = make_batch(split, batch, dims);
    Tensor out = model.predict(bt, false);
    preds.insert(preds.end(), out.data().begin(), out.data().end());
  }
  return preds;
}

double validation_mae(Model& model, const std::vector<MultimodalSample>& split,
                      const DatasetDims& dims, int batch_size) {
  std::vector<double> preds = predict_all(model, split, dims, batch_size);
  std::vector<double> labels;
  for (const auto& s : split) labels.push_back(s.label);
  return mae(preds, labels);
}

MetricsReport evaluate(Model& model,
                       const std::vector<MultimodalSample>& split,
                       const DatasetDims& dims, int batch_size) {
  if (split.empty()) throw Error("config", "evaluate: empty split");
  std::vector<double> preds = predict_all(model, split, dims, batch_size);
  std::vector<double> labels;
  for (const auto& s : split) labels.push_back(s.label);
  return compute_metrics(preds, labels);
}

namespace {

std::vector<std::vector<double>> snapshot_params(const ParamList& ps) {
  std::vector<std::vector<double>> out;
  out.reserve(ps.size());
  for (const auto& [name, p] : ps) out.push_back(p.data());
  return out;
}

void restore_params(ParamList& ps,
                    const std::vector<std::vector<double>>& snap) {
  for (size_t i = 0; i < ps.size(); ++i) ps[i].second.data() = snap[i];
}

}  // namespace

void train(Model& model, const DatasetSplits& data, const TrainConfig& cfg,
           History& history) {
  if (data.train.empty() || data.val.empty())
    throw Error("config", "train: train and val splits must be non-empty");
  AdamOptimizer opt(&model.parameters(), cfg.lr);
  PlateauScheduler scheduler(cfg.lr_halve_patience);
  EarlyStopper stopper(cfg.early_stop_patience);
  auto best_snapshot = snapshot_params(model.parameters());
  history.best_epoch = -1;
  int n_train = static_cast<int>(data.train.size());

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    double train_loss_sum = 0.0;
    int train_count = 0;
    for (const auto& batch : batch_indices(n_train, cfg.batch_size, true,
                                           cfg.seed + epoch)) {
      BatchTensors bt = make_batch(data.train, batch, data.dims);
      Tensor pred = model.predict(bt, true);
      Tensor loss = mae_loss(pred, bt.target);
      double loss_val = loss.item();
      if (!std::isfinite(loss_val))
        throw Error("divergence", "train: non-finite loss at epoch " +
                                      std::to_string(epoch));
      backward(loss);
      opt.step();
      train_loss_sum += loss_val * static_cast<double>(batch.size());
      train_count += static_cast<int>(batch.size());
    }
    double train_mae = train_loss_sum / train_count;
    double val_mae = validation_mae(model, data.val, data.dims, cfg.batch_size);
    history.epochs.push_back({epoch, train_mae, val_mae, opt.lr()});
    if (history.best_epoch < 0 || val_mae < history.best_val_mae - 1e-6) {
      history.best_epoch = epoch;
      history.best_val_mae = val_mae;
      best_snapshot = snapshot_params(model.parameters());
    }
    bool stop = stopper.observe(val_mae);
    if (scheduler.observe(val_mae)) opt.set_lr(opt.lr() * 0.5);
    if (stop) break;
  }
  restore_params(model.parameters(), best_snapshot);
}

namespace {

MetricsReport metrics_mean(const std::vector<MetricsReport>& rs) {
  MetricsReport m;
  for (const auto& r : rs) {
    m.acc7 += r.acc7;
    m.acc5 += r.acc5;
    m.acc2 += r.acc2;
    m.f1_2 += r.f1_2;
    m.mae += r.mae;
    m.corr += r.corr;
    m.corr_defined = m.corr_defined && r.corr_defined;
  }
  double n = static_cast<double>(rs.size());
  m.acc7 /= n;
  m.acc5 /= n;
  m.acc2 /= n;
  m.f1_2 /= n;
  m.mae /= n;
  m.corr /= n;
  return m;
}

double sample_std(const std::vector<double>& xs, double mean) {
  if (xs.size() < 2) return 0.0;
  double acc = 0.0;
  for (double x : xs) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / (xs.size() - 1));
}

MetricsReport metrics_std(const std::vector<MetricsReport>& rs,
                          const MetricsReport& mean) {
  MetricsReport s;
  auto col = [&](double MetricsReport::*field) {
    std::vector<double> xs;
    for (const auto& r : rs) xs.push_back(r.*field);
    return sample_std(xs, mean.*field);
  };
  s.acc7 = col(&MetricsReport::acc7);
  s.acc5 = col(&MetricsReport::acc5);
  s.acc2 = col(&MetricsReport::acc2);
  s.f1_2 = col(&MetricsReport::f1_2);
  s.mae = col(&MetricsReport::mae);
  s.corr = col(&MetricsReport::corr);
  return s;
}

}  // namespace

ExperimentResult run_experiment(const ModelConfig& model_cfg,
                                const TrainConfig& train_cfg,
                                const DatasetSplits& data, int n_seeds,
                                const std::string& out_dir,
                                std::vector<std::unique_ptr<Model>>* models_out) {
  if (n_seeds < 1) throw Error("config", "run_experiment: n_seeds must be >= 1");
  std::vector<std::unique_ptr<Model>> models(n_seeds);
  std::vector<History> histories(n_seeds);
  std::vector<MetricsReport> reports(n_seeds);
  std::vector<int> status(n_seeds, 0);  // 0 ok, 1 failed

  auto run_one = [&](int i) {
    ModelConfig mc = model_cfg;
    mc.seed = model_cfg.seed + static_cast<std::uint64_t>(i);
    TrainConfig tc = train_cfg;
    tc.seed = train_cfg.seed + static_cast<std::uint64_t>(i);
    models[i] = std::make_unique<Model>(mc);
    try {
      train(*models[i], data, tc, histories[i]);
      reports[i] = evaluate(*models[i], data.test, data.dims, tc.batch_size);
    } catch (const Error&) {
      status[i] = 1;
    }
  };

  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  for (int start = 0; start < n_seeds; start += static_cast<int>(hw)) {
    std::vector<std::thread> workers;
    for (int i = start; i < std::min(n_seeds, start + static_cast<int>(hw));
         ++i)
      workers.emplace_back(run_one, i);
    for (auto& w : workers) w.join();
  }

  ExperimentResult res;
  std::vector<MetricsReport> ok;
  for (int i = 0; i < n_seeds; ++i) {
    if (status[i]) {
      res.failed_seeds.push_back(i);
      continue;
    }
    ok.push_back(reports[i]);
    if (res.best_index < 0 || reports[i].mae < reports[res.best_index].mae)
      res.best_index = i;
  }
  res.per_seed = reports;
  if (!ok.empty()) {
    res.mean = metrics_mean(ok);
    res.stddev = metrics_std(ok, res.mean);
  }

  if (!out_dir.empty()) {
    for (int i = 0; i < n_seeds; ++i) {
      auto dir = std::filesystem::path(out_dir) / ("seed" + std::to_string(i));
      std::error_code ec;
      std::filesystem::create_directories(dir, ec);
      if (ec) throw Error("io", "run_experiment: cannot create " + dir.string());
      std::ofstream hist(dir / "history.csv");
      hist << histories[i].to_csv();
      if (!status[i]) {
        save_checkpoint(*models[i], (dir / "checkpoint.txt").string());
        std::ofstream txt(dir / "metrics.txt");
        txt << metrics_to_text(reports[i]);
        std::ofstream js(dir / "metrics.json");
        js << metrics_to_json(reports[i]) << "\n";
      }
    }
  }
  if (models_out) *models_out = std::move(models);
  return res;
}

}  // namespace mmf
