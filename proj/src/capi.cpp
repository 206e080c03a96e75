#include "mmfusion.h"

#include <cstring>
#include <fstream>
#include <memory>
#include <string>

#include "mmfusion/checkpoint.hpp"
#include "mmfusion/data.hpp"
#include "mmfusion/errors.hpp"
#include "mmfusion/heatmap.hpp"
#include "mmfusion/model.hpp"
#include "mmfusion/train.hpp"

struct mmf_dataset_s {
  mmf::DatasetSplits splits;
};

struct mmf_model_s {
  std::unique_ptr<mmf::Model> model;
};

namespace {

thread_local std::string g_last_error;

mmf_status status_from_class(const std::string& cls) {
  if (cls == "config") return MMF_ERR_CONFIG;
  if (cls == "io") return MMF_ERR_IO;
  if (cls == "format") return MMF_ERR_FORMAT;
  if (cls == "alignment") return MMF_ERR_ALIGNMENT;
  if (cls == "range") return MMF_ERR_RANGE;
  if (cls == "divergence") return MMF_ERR_DIVERGENCE;
  if (cls == "state") return MMF_ERR_STATE;
  return MMF_ERR_INTERNAL;
}

template <typename Fn>
mmf_status guarded(Fn&& fn) {
  try {
    fn();
    return MMF_OK;
  } catch (const mmf::Error& e) {
    g_last_error = e.what();
    return status_from_class(e.error_class());
  } catch (const std::invalid_argument& e) {
    g_last_error = e.what();
    return MMF_ERR_SHAPE;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MMF_ERR_INTERNAL;
  }
}

mmf_status set_error(mmf_status st, const std::string& msg) {
  g_last_error = msg;
  return st;
}

const std::vector<mmf::MultimodalSample>* pick_split(
    const mmf::DatasetSplits& s, const char* name) {
  std::string n = name ? name : "";
  if (n == "train") return &s.train;
  if (n == "val") return &s.val;
  if (n == "test") return &s.test;
  return nullptr;
}

mmf::ModelConfig to_core(const mmf_model_config& c) {
  mmf::ModelConfig mc;
  mc.dims = {c.dim_audio, c.dim_text, c.dim_visual};
  mc.hidden = c.hidden;
  mc.dropout = c.dropout;
  if (c.feedback < 0 || c.feedback > 2)
    throw mmf::Error("config", "feedback must be 0 (none), 1 (feedforward) "
                               "or 2 (lstm)");
  mc.feedback = static_cast<mmf::FeedbackType>(c.feedback);
  mc.seed = c.seed;
  return mc;
}

mmf::TrainConfig to_core(const mmf_train_config& c) {
  mmf::TrainConfig tc;
  tc.lr = c.lr;
  tc.lr_halve_patience = c.lr_halve_patience;
  tc.early_stop_patience = c.early_stop_patience;
  tc.max_epochs = c.max_epochs;
  tc.batch_size = c.batch_size;
  tc.seed = c.seed;
  if (tc.lr_halve_patience < 1 || tc.early_stop_patience < 1)
    throw mmf::Error("config", "patience values must be >= 1");
  if (tc.max_epochs < 0) throw mmf::Error("config", "max_epochs must be >= 0");
  return tc;
}

mmf_metrics to_c(const mmf::MetricsReport& m) {
  return {m.acc7, m.acc5, m.acc2, m.f1_2, m.mae, m.corr,
          m.corr_defined ? 1 : 0};
}

}  // namespace

extern "C" {

const char* mmf_last_error(void) { return g_last_error.c_str(); }

const char* mmf_status_name(mmf_status status) {
  switch (status) {
    case MMF_OK: return "ok";
    case MMF_ERR_CONFIG: return "config";
    case MMF_ERR_SHAPE: return "shape";
    case MMF_ERR_IO: return "io";
    case MMF_ERR_FORMAT: return "format";
    case MMF_ERR_ALIGNMENT: return "alignment";
    case MMF_ERR_RANGE: return "range";
    case MMF_ERR_DIVERGENCE: return "divergence";
    case MMF_ERR_STATE: return "state";
    default: return "internal";
  }
}

void mmf_default_model_config(mmf_model_config* cfg) {
  *cfg = {8, 12, 6, 100, 0.2, 2, 0};
}

void mmf_default_train_config(mmf_train_config* cfg) {
  *cfg = {5e-4, 2, 10, 100, 32, 0};
}

mmf_status mmf_dataset_generate(int n, int seq_len, int d_audio, int d_text,
                                int d_visual, uint64_t seed,
                                mmf_dataset* out) {
  if (!out) return set_error(MMF_ERR_CONFIG, "null output handle");
  return guarded([&] {
    auto ds = std::make_unique<mmf_dataset_s>();
    ds->splits = mmf::generate_gated_dataset(
        n, seq_len, {d_audio, d_text, d_visual}, seed);
    *out = ds.release();
  });
}

mmf_status mmf_dataset_load(const char* dir, mmf_dataset* out) {
  if (!dir || !out) return set_error(MMF_ERR_CONFIG, "null argument");
  return guarded([&] {
    auto ds = std::make_unique<mmf_dataset_s>();
    ds->splits = mmf::load_dataset(dir);
    *out = ds.release();
  });
}

mmf_status mmf_dataset_save(mmf_dataset ds, const char* dir) {
  if (!ds || !dir) return set_error(MMF_ERR_CONFIG, "null argument");
  return guarded([&] { mmf::save_dataset(ds->splits, dir); });
}

int mmf_dataset_split_size(mmf_dataset ds, const char* split) {
  if (!ds) return -1;
  const auto* s = pick_split(ds->splits, split);
  return s ? static_cast<int>(s->size()) : -1;
}

mmf_status mmf_dataset_dims(mmf_dataset ds, int* d_audio, int* d_text,
                            int* d_visual) {
  if (!ds) return set_error(MMF_ERR_CONFIG, "null dataset handle");
  if (d_audio) *d_audio = ds->splits.dims.audio;
  if (d_text) *d_text = ds->splits.dims.text;
  if (d_visual) *d_visual = ds->splits.dims.visual;
  return MMF_OK;
}

void mmf_dataset_free(mmf_dataset ds) { delete ds; }

mmf_status mmf_model_create(const mmf_model_config* cfg, mmf_model* out) {
  if (!cfg || !out) return set_error(MMF_ERR_CONFIG, "null argument");
  return guarded([&] {
    auto m = std::make_unique<mmf_model_s>();
    m->model = std::make_unique<mmf::Model>(to_core(*cfg));
    *out = m.release();
  });
}

mmf_status mmf_model_save(mmf_model m, const char* path) {
  if (!m || !path) return set_error(MMF_ERR_CONFIG, "null argument");
  return guarded([&] { mmf::save_checkpoint(*m->model, path); });
}

mmf_status mmf_model_load(const char* path, mmf_model* out) {
  if (!path || !out) return set_error(MMF_ERR_CONFIG, "null argument");
  return guarded([&] {
    auto m = std::make_unique<mmf_model_s>();
    m->model = mmf::load_checkpoint(path);
    *out = m.release();
  });
}

mmf_status mmf_model_get_config(mmf_model m, mmf_model_config* out) {
  if (!m || !out) return set_error(MMF_ERR_CONFIG, "null argument");
  const mmf::ModelConfig& c = m->model->config();
  *out = {c.dims.audio,  c.dims.text,
          c.dims.visual, c.hidden,
          c.dropout,     static_cast<int>(c.feedback),
          c.seed};
  return MMF_OK;
}

void mmf_model_free(mmf_model m) { delete m; }

mmf_status mmf_train(mmf_model m, mmf_dataset ds, const mmf_train_config* cfg,
                     const char* history_csv_path) {
  if (!m || !ds || !cfg) return set_error(MMF_ERR_CONFIG, "null argument");
  mmf::History history;
  mmf_status st = guarded(
      [&] { mmf::train(*m->model, ds->splits, to_core(*cfg), history); });
  if (history_csv_path) {
    std::ofstream os(history_csv_path);
    os << history.to_csv();
  }
  return st;
}

mmf_status mmf_evaluate(mmf_model m, mmf_dataset ds, const char* split,
                        mmf_metrics* out) {
  if (!m || !ds || !out) return set_error(MMF_ERR_CONFIG, "null argument");
  const auto* s = pick_split(ds->splits, split);
  if (!s)
    return set_error(MMF_ERR_CONFIG, "unknown split '" +
                                         std::string(split ? split : "") +
                                         "' (expected train|val|test)");
  return guarded([&] {
    *out = to_c(mmf::evaluate(*m->model, *s, ds->splits.dims));
  });
}

mmf_status mmf_export_mask_csv(mmf_model m, mmf_dataset ds, const char* split,
                               int target_modality, const char* csv_path) {
  if (!m || !ds || !csv_path) return set_error(MMF_ERR_CONFIG, "null argument");
  const auto* s = pick_split(ds->splits, split);
  if (!s)
    return set_error(MMF_ERR_CONFIG, "unknown split '" +
                                         std::string(split ? split : "") +
                                         "' (expected train|val|test)");
  return guarded([&] {
    mmf::MaskHeatmap h = mmf::export_mask_heatmap(*m->model, *s,
                                                  ds->splits.dims,
                                                  target_modality);
    std::ofstream os(csv_path);
    if (!os) throw mmf::Error("io", std::string("cannot open ") + csv_path);
    os << mmf::heatmap_to_csv(h);
  });
}

mmf_status mmf_run_experiment(const mmf_model_config* model_cfg,
                              const mmf_train_config* train_cfg,
                              mmf_dataset ds, int n_seeds, const char* out_dir,
                              mmf_metrics* mean, mmf_metrics* stddev,
                              mmf_metrics* best, int* best_seed) {
  if (!model_cfg || !train_cfg || !ds)
    return set_error(MMF_ERR_CONFIG, "null argument");
  return guarded([&] {
    mmf::ExperimentResult res = mmf::run_experiment(
        to_core(*model_cfg), to_core(*train_cfg), ds->splits, n_seeds,
        out_dir ? out_dir : "");
    if (res.best_index < 0)
      throw mmf::Error("divergence", "every seed aborted during training");
    if (mean) *mean = to_c(res.mean);
    if (stddev) *stddev = to_c(res.stddev);
    if (best) *best = to_c(res.per_seed[res.best_index]);
    if (best_seed) *best_seed = res.best_index;
  });
}

}  // extern "C"
