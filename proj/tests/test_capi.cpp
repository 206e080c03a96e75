#include <cstring>
#include <filesystem>
#include <string>

#include "doctest.h"
#include "mmfusion.h"

namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* name) {
  fs::path p = fs::temp_directory_path() / "mmfusion_capi" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

mmf_model_config small_model_config(int feedback) {
  mmf_model_config cfg;
  mmf_default_model_config(&cfg);
  cfg.dim_audio = 4;
  cfg.dim_text = 6;
  cfg.dim_visual = 5;
  cfg.hidden = 6;
  cfg.dropout = 0.0;
  cfg.feedback = feedback;
  cfg.seed = 1;
  return cfg;
}

}  // namespace

TEST_CASE("status names cover the enum") {
  CHECK(std::string(mmf_status_name(MMF_OK)) == "ok");
  CHECK(std::string(mmf_status_name(MMF_ERR_IO)) == "io");
  CHECK(std::string(mmf_status_name(MMF_ERR_STATE)) == "state");
  CHECK(std::string(mmf_status_name(MMF_ERR_DIVERGENCE)) == "divergence");
}

TEST_CASE("default configs are populated") {
  mmf_model_config mc;
  mmf_default_model_config(&mc);
  CHECK(mc.hidden == 100);
  CHECK(mc.dropout == 0.2);
  CHECK(mc.feedback == 2);
  mmf_train_config tc;
  mmf_default_train_config(&tc);
  CHECK(tc.lr == 5e-4);
  CHECK(tc.lr_halve_patience == 2);
  CHECK(tc.early_stop_patience == 10);
}

TEST_CASE("dataset generate save load through the c api") {
  mmf_dataset ds = nullptr;
  REQUIRE(mmf_dataset_generate(30, 3, 4, 6, 5, 7, &ds) == MMF_OK);
  CHECK(mmf_dataset_split_size(ds, "train") == 21);
  CHECK(mmf_dataset_split_size(ds, "val") == 4);
  CHECK(mmf_dataset_split_size(ds, "test") == 5);
  CHECK(mmf_dataset_split_size(ds, "bogus") == -1);
  int da = 0, dt = 0, dv = 0;
  REQUIRE(mmf_dataset_dims(ds, &da, &dt, &dv) == MMF_OK);
  CHECK(da == 4);
  CHECK(dt == 6);
  CHECK(dv == 5);

  auto dir = temp_dir("ds");
  REQUIRE(mmf_dataset_save(ds, dir.string().c_str()) == MMF_OK);
  mmf_dataset back = nullptr;
  REQUIRE(mmf_dataset_load(dir.string().c_str(), &back) == MMF_OK);
  CHECK(mmf_dataset_split_size(back, "train") == 21);
  mmf_dataset_free(back);
  mmf_dataset_free(ds);
}

TEST_CASE("generate rejects degenerate parameters with a message") {
  mmf_dataset ds = nullptr;
  CHECK(mmf_dataset_generate(5, 3, 4, 6, 5, 7, &ds) == MMF_ERR_CONFIG);
  CHECK(ds == nullptr);
  CHECK(std::strlen(mmf_last_error()) > 0);
}

TEST_CASE("load from a missing directory reports io") {
  mmf_dataset ds = nullptr;
  CHECK(mmf_dataset_load("/nonexistent/mmf-data", &ds) == MMF_ERR_IO);
  CHECK(ds == nullptr);
}

TEST_CASE("model lifecycle and checkpoint through the c api") {
  mmf_model_config cfg = small_model_config(2);
  mmf_model m = nullptr;
  REQUIRE(mmf_model_create(&cfg, &m) == MMF_OK);
  mmf_model_config got;
  REQUIRE(mmf_model_get_config(m, &got) == MMF_OK);
  CHECK(got.hidden == 6);
  CHECK(got.feedback == 2);

  auto dir = temp_dir("model");
  auto path = (dir / "ckpt.txt").string();
  REQUIRE(mmf_model_save(m, path.c_str()) == MMF_OK);
  mmf_model back = nullptr;
  REQUIRE(mmf_model_load(path.c_str(), &back) == MMF_OK);
  REQUIRE(mmf_model_get_config(back, &got) == MMF_OK);
  CHECK(got.dim_text == 6);
  mmf_model_free(back);
  mmf_model_free(m);

  CHECK(mmf_model_load("/nonexistent/ckpt.txt", &back) == MMF_ERR_IO);
}

TEST_CASE("train evaluate and mask export through the c api") {
  mmf_dataset ds = nullptr;
  REQUIRE(mmf_dataset_generate(30, 3, 4, 6, 5, 3, &ds) == MMF_OK);
  mmf_model_config cfg = small_model_config(2);
  mmf_model m = nullptr;
  REQUIRE(mmf_model_create(&cfg, &m) == MMF_OK);

  mmf_train_config tc;
  mmf_default_train_config(&tc);
  tc.max_epochs = 2;
  tc.batch_size = 8;
  auto dir = temp_dir("train");
  auto hist = (dir / "history.csv").string();
  REQUIRE(mmf_train(m, ds, &tc, hist.c_str()) == MMF_OK);
  CHECK(fs::exists(hist));

  mmf_metrics metrics;
  REQUIRE(mmf_evaluate(m, ds, "test", &metrics) == MMF_OK);
  CHECK(metrics.mae >= 0.0);
  CHECK(mmf_evaluate(m, ds, "bogus", &metrics) == MMF_ERR_CONFIG);

  auto csv = (dir / "masks.csv").string();
  REQUIRE(mmf_export_mask_csv(m, ds, "test", 0, csv.c_str()) == MMF_OK);
  CHECK(fs::exists(csv));
  CHECK(mmf_export_mask_csv(m, ds, "test", 5, csv.c_str()) == MMF_ERR_CONFIG);

  mmf_model_free(m);
  mmf_dataset_free(ds);
}

TEST_CASE("mask export refuses a baseline model with state") {
  mmf_dataset ds = nullptr;
  REQUIRE(mmf_dataset_generate(20, 3, 4, 6, 5, 3, &ds) == MMF_OK);
  mmf_model_config cfg = small_model_config(0);
  mmf_model m = nullptr;
  REQUIRE(mmf_model_create(&cfg, &m) == MMF_OK);
  auto csv = (temp_dir("nofb") / "masks.csv").string();
  CHECK(mmf_export_mask_csv(m, ds, "test", 0, csv.c_str()) == MMF_ERR_STATE);
  CHECK(std::strlen(mmf_last_error()) > 0);
  mmf_model_free(m);
  mmf_dataset_free(ds);
}

TEST_CASE("run_experiment through the c api") {
  mmf_dataset ds = nullptr;
  REQUIRE(mmf_dataset_generate(30, 3, 4, 6, 5, 11, &ds) == MMF_OK);
  mmf_model_config cfg = small_model_config(0);
  mmf_train_config tc;
  mmf_default_train_config(&tc);
  tc.max_epochs = 2;
  tc.batch_size = 8;
  auto dir = temp_dir("exp");
  mmf_metrics mean, stddev, best;
  int best_seed = -1;
  REQUIRE(mmf_run_experiment(&cfg, &tc, ds, 2, dir.string().c_str(), &mean,
                             &stddev, &best, &best_seed) == MMF_OK);
  CHECK(best_seed >= 0);
  CHECK(best_seed < 2);
  CHECK(best.mae <= mean.mae + 1e-12);
  CHECK(fs::exists(dir / "seed0" / "metrics.json"));
  CHECK(fs::exists(dir / "seed1" / "history.csv"));
  mmf_dataset_free(ds);
}
