/* C interface to the mmfusion library: opaque handles, integer status
 * codes, thread-local error messages. All functions returning mmf_status
 * leave outputs untouched on failure; call mmf_last_error() for details. */
#ifndef MMFUSION_H_
#define MMFUSION_H_

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct mmf_dataset_s* mmf_dataset;
typedef struct mmf_model_s* mmf_model;

typedef enum {
  MMF_OK = 0,
  MMF_ERR_CONFIG = 1,
  MMF_ERR_SHAPE = 2,
  MMF_ERR_IO = 3,
  MMF_ERR_FORMAT = 4,
  MMF_ERR_ALIGNMENT = 5,
  MMF_ERR_RANGE = 6,
  MMF_ERR_DIVERGENCE = 7,
  MMF_ERR_STATE = 8,
  MMF_ERR_INTERNAL = 9
} mmf_status;

/* Message for the most recent failure on this thread. */
const char* mmf_last_error(void);
/* Short machine-parsable class name for a status code. */
const char* mmf_status_name(mmf_status status);

/* feedback: 0 = none (baseline), 1 = feedforward, 2 = lstm. */
typedef struct {
  int dim_audio, dim_text, dim_visual;
  int hidden;
  double dropout;
  int feedback;
  uint64_t seed;
} mmf_model_config;

typedef struct {
  double lr;
  int lr_halve_patience;
  int early_stop_patience;
  int max_epochs;
  int batch_size;
  uint64_t seed;
} mmf_train_config;

typedef struct {
  double acc7, acc5, acc2, f1_2, mae, corr;
  int corr_defined;
} mmf_metrics;

void mmf_default_model_config(mmf_model_config* cfg);
void mmf_default_train_config(mmf_train_config* cfg);

/* Datasets. `split` is "train", "val" or "test". */
mmf_status mmf_dataset_generate(int n, int seq_len, int d_audio, int d_text,
                                int d_visual, uint64_t seed, mmf_dataset* out);
mmf_status mmf_dataset_load(const char* dir, mmf_dataset* out);
mmf_status mmf_dataset_save(mmf_dataset ds, const char* dir);
int mmf_dataset_split_size(mmf_dataset ds, const char* split);
mmf_status mmf_dataset_dims(mmf_dataset ds, int* d_audio, int* d_text,
                            int* d_visual);
void mmf_dataset_free(mmf_dataset ds);

/* Models and checkpoints. */
mmf_status mmf_model_create(const mmf_model_config* cfg, mmf_model* out);
mmf_status mmf_model_save(mmf_model m, const char* path);
mmf_status mmf_model_load(const char* path, mmf_model* out);
mmf_status mmf_model_get_config(mmf_model m, mmf_model_config* out);
void mmf_model_free(mmf_model m);

/* Training and evaluation. history_csv_path may be NULL. */
mmf_status mmf_train(mmf_model m, mmf_dataset ds, const mmf_train_config* cfg,
                     const char* history_csv_path);
mmf_status mmf_evaluate(mmf_model m, mmf_dataset ds, const char* split,
                        mmf_metrics* out);

/* Averaged top-down mask heatmap for one target modality (0 audio, 1 text,
 * 2 visual), written as CSV. Fails with MMF_ERR_STATE for feedback=none
 * models. */
mmf_status mmf_export_mask_csv(mmf_model m, mmf_dataset ds, const char* split,
                               int target_modality, const char* csv_path);

/* Trains n_seeds models with seeds base_seed..base_seed+n-1 and reports
 * per-metric mean / sample standard deviation plus the best run by MAE.
 * When out_dir is non-NULL, per-seed checkpoint/history/metrics files are
 * written under <out_dir>/seed<i>/. Any output pointer may be NULL. */
mmf_status mmf_run_experiment(const mmf_model_config* model_cfg,
                              const mmf_train_config* train_cfg,
                              mmf_dataset ds, int n_seeds, const char* out_dir,
                              mmf_metrics* mean, mmf_metrics* stddev,
                              mmf_metrics* best, int* best_seed);

#ifdef __cplusplus
}
#endif

#endif /* MMFUSION_H_ */
