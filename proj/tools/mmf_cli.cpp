// Command-line front end for the mmfusion shared library. Subcommands:
//   generate  synth dataset -> train.txt/val.txt/test.txt
//   train     train one or more seeds, write checkpoints/history/metrics
//   eval      evaluate a checkpoint on a split
//   masks     export averaged top-down mask heatmaps as CSV
// Exits 0 on success; on failure prints one line
//   mmf-error <class>: <message>
// to stderr and exits 1.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mmfusion.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliError {
  std::string error_class;
  std::string message;
};

void check(mmf_status st) {
  if (st != MMF_OK) throw CliError{mmf_status_name(st), mmf_last_error()};
}

int feedback_code(const std::string& s) {
  if (s == "none") return 0;
  if (s == "feedforward") return 1;
  if (s == "lstm") return 2;
  throw CliError{"config", "unknown feedback type '" + s + "'"};
}

const char* feedback_name(int code) {
  return code == 0 ? "none" : (code == 1 ? "feedforward" : "lstm");
}

struct TrainOptions {
  std::string data_dir, out_dir, config_path;
  std::string feedback = "lstm";
  int hidden = 100;
  double dropout = 0.2;
  double lr = 5e-4;
  int batch_size = 32;
  int max_epochs = 100;
  int lr_halve_patience = 2;
  int early_stop_patience = 10;
  std::uint64_t seed = 0;
  int seeds = 1;
};

// Config-file values become defaults; explicit flags override them.
void apply_config_file(TrainOptions& o) {
  if (o.config_path.empty()) return;
  std::ifstream is(o.config_path);
  if (!is) throw CliError{"io", "cannot open config file " + o.config_path};
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw CliError{"format", "config file " + o.config_path + ": " + e.what()};
  }
  if (j.contains("feedback")) o.feedback = j["feedback"].get<std::string>();
  if (j.contains("hidden")) o.hidden = j["hidden"].get<int>();
  if (j.contains("dropout")) o.dropout = j["dropout"].get<double>();
  if (j.contains("lr")) o.lr = j["lr"].get<double>();
  if (j.contains("batch_size")) o.batch_size = j["batch_size"].get<int>();
  if (j.contains("max_epochs")) o.max_epochs = j["max_epochs"].get<int>();
  if (j.contains("lr_halve_patience"))
    o.lr_halve_patience = j["lr_halve_patience"].get<int>();
  if (j.contains("early_stop_patience"))
    o.early_stop_patience = j["early_stop_patience"].get<int>();
  if (j.contains("seed")) o.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("seeds")) o.seeds = j["seeds"].get<int>();
}

json effective_config(const TrainOptions& o, const mmf_model_config& mc) {
  json j;
  j["data"] = o.data_dir;
  j["out"] = o.out_dir;
  j["feedback"] = o.feedback;
  j["hidden"] = o.hidden;
  j["dropout"] = o.dropout;
  j["lr"] = o.lr;
  j["batch_size"] = o.batch_size;
  j["max_epochs"] = o.max_epochs;
  j["lr_halve_patience"] = o.lr_halve_patience;
  j["early_stop_patience"] = o.early_stop_patience;
  j["seed"] = o.seed;
  j["seeds"] = o.seeds;
  j["dims"] = {mc.dim_audio, mc.dim_text, mc.dim_visual};
  return j;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream os(path);
  if (!os) throw CliError{"io", "cannot open " + path.string()};
  os << content;
}

std::string metrics_line(const char* name, const mmf_metrics& m) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "%-10s acc7=%.4f acc5=%.4f acc2=%.4f f1_2=%.4f mae=%.4f "
                "corr=%s",
                name, m.acc7, m.acc5, m.acc2, m.f1_2, m.mae,
                m.corr_defined ? std::to_string(m.corr).c_str() : "undefined");
  return buf;
}

std::string metrics_text(const mmf_metrics& m) {
  std::string out;
  char buf[64];
  auto kv = [&](const char* k, double v) {
    std::snprintf(buf, sizeof(buf), "%s %.17g\n", k, v);
    out += buf;
  };
  kv("acc7", m.acc7);
  kv("acc5", m.acc5);
  kv("acc2", m.acc2);
  kv("f1_2", m.f1_2);
  kv("mae", m.mae);
  if (m.corr_defined)
    kv("corr", m.corr);
  else
    out += "corr undefined\n";
  return out;
}

int cmd_generate(int n, int seq_len, std::vector<int> dims, std::uint64_t seed,
                 const std::string& out_dir) {
  mmf_dataset ds = nullptr;
  check(mmf_dataset_generate(n, seq_len, dims[0], dims[1], dims[2], seed, &ds));
  mmf_status st = mmf_dataset_save(ds, out_dir.c_str());
  mmf_dataset_free(ds);
  check(st);
  std::cout << "wrote train.txt, val.txt, test.txt under " << out_dir << "\n";
  return 0;
}

int cmd_train(TrainOptions& o) {
  mmf_dataset ds = nullptr;
  check(mmf_dataset_load(o.data_dir.c_str(), &ds));

  mmf_model_config mc;
  mmf_default_model_config(&mc);
  check(mmf_dataset_dims(ds, &mc.dim_audio, &mc.dim_text, &mc.dim_visual));
  mc.hidden = o.hidden;
  mc.dropout = o.dropout;
  mc.feedback = feedback_code(o.feedback);
  mc.seed = o.seed;

  mmf_train_config tc = {o.lr, o.lr_halve_patience, o.early_stop_patience,
                         o.max_epochs, o.batch_size, o.seed};

  fs::create_directories(o.out_dir);
  write_file(fs::path(o.out_dir) / "config.json",
             effective_config(o, mc).dump(2) + "\n");

  mmf_metrics mean{}, stddev{}, best{};
  int best_seed = -1;
  mmf_status st = mmf_run_experiment(&mc, &tc, ds, o.seeds, o.out_dir.c_str(),
                                     &mean, &stddev, &best, &best_seed);
  mmf_dataset_free(ds);
  check(st);

  std::string summary = metrics_line("mean", mean) + "\n";
  if (o.seeds > 1) {
    summary += metrics_line("std", stddev) + "\n";
    summary += metrics_line("best", best) + "\n";
    summary += "best_seed " + std::to_string(best_seed) + "\n";
  } else {
    summary += "note: single run, std is 0 by convention\n";
  }
  std::cout << summary;
  write_file(fs::path(o.out_dir) / "summary.txt", summary);
  return 0;
}

int cmd_eval(const std::string& ckpt, const std::string& data_dir,
             const std::string& split, const std::string& out_dir) {
  mmf_model model = nullptr;
  check(mmf_model_load(ckpt.c_str(), &model));
  mmf_dataset ds = nullptr;
  mmf_status st = mmf_dataset_load(data_dir.c_str(), &ds);
  if (st != MMF_OK) {
    mmf_model_free(model);
    check(st);
  }
  mmf_metrics m{};
  st = mmf_evaluate(model, ds, split.c_str(), &m);
  mmf_dataset_free(ds);
  mmf_model_free(model);
  check(st);
  std::cout << metrics_text(m);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / "metrics.txt", metrics_text(m));
  }
  return 0;
}

int cmd_masks(const std::string& ckpt, const std::string& data_dir,
              const std::string& split, const std::string& out_dir) {
  mmf_model model = nullptr;
  check(mmf_model_load(ckpt.c_str(), &model));
  mmf_dataset ds = nullptr;
  mmf_status st = mmf_dataset_load(data_dir.c_str(), &ds);
  if (st != MMF_OK) {
    mmf_model_free(model);
    check(st);
  }
  fs::create_directories(out_dir);
  const char* names[3] = {"masks_audio.csv", "masks_text.csv",
                          "masks_visual.csv"};
  for (int k = 0; k < 3 && st == MMF_OK; ++k) {
    fs::path p = fs::path(out_dir) / names[k];
    st = mmf_export_mask_csv(model, ds, split.c_str(), k, p.string().c_str());
  }
  mmf_dataset_free(ds);
  mmf_model_free(model);
  check(st);
  std::cout << "wrote mask heatmaps under " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multimodal fusion with top-down feedback masking"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Generate a synthetic dataset");
  int g_n = 1000, g_seq = 8;
  std::vector<int> g_dims = {8, 12, 6};
  std::uint64_t g_seed = 0;
  std::string g_out;
  gen->add_option("--n", g_n, "number of samples (>= 10)");
  gen->add_option("--seq-len", g_seq, "timesteps per sample");
  gen->add_option("--dims", g_dims, "feature dims: audio text visual")
      ->expected(3);
  gen->add_option("--seed", g_seed, "generator seed");
  gen->add_option("--out", g_out, "output directory")->required();

  // train
  auto* tr = app.add_subcommand("train", "Train and evaluate");
  TrainOptions to;
  tr->add_option("--data", to.data_dir, "dataset directory")->required();
  tr->add_option("--out", to.out_dir, "output directory")->required();
  tr->add_option("--config", to.config_path, "JSON config file (flags win)");
  tr->add_option("--feedback", to.feedback, "none|feedforward|lstm");
  tr->add_option("--hidden", to.hidden, "hidden size d");
  tr->add_option("--dropout", to.dropout, "dropout rate");
  tr->add_option("--lr", to.lr, "initial learning rate");
  tr->add_option("--batch-size", to.batch_size, "minibatch size");
  tr->add_option("--max-epochs", to.max_epochs, "maximum epochs");
  tr->add_option("--halve-patience", to.lr_halve_patience,
                 "epochs without val improvement before halving the lr");
  tr->add_option("--stop-patience", to.early_stop_patience,
                 "epochs without val improvement before stopping");
  tr->add_option("--seed", to.seed, "base seed");
  tr->add_option("--seeds", to.seeds, "number of seeded runs");

  // eval
  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint");
  std::string e_ckpt, e_data, e_split = "test", e_out;
  ev->add_option("--checkpoint", e_ckpt, "checkpoint file")->required();
  ev->add_option("--data", e_data, "dataset directory")->required();
  ev->add_option("--split", e_split, "train|val|test");
  ev->add_option("--out", e_out, "optional output directory");

  // masks
  auto* mk = app.add_subcommand("masks", "Export mask heatmap CSVs");
  std::string m_ckpt, m_data, m_split = "test", m_out;
  mk->add_option("--checkpoint", m_ckpt, "checkpoint file")->required();
  mk->add_option("--data", m_data, "dataset directory")->required();
  mk->add_option("--split", m_split, "train|val|test");
  mk->add_option("--out", m_out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_generate(g_n, g_seq, g_dims, g_seed, g_out);
    if (tr->parsed()) {
      // Re-apply: file values only where the user did not pass a flag.
      TrainOptions flags = to;
      apply_config_file(to);
      if (!tr->get_option("--feedback")->empty()) to.feedback = flags.feedback;
      if (!tr->get_option("--hidden")->empty()) to.hidden = flags.hidden;
      if (!tr->get_option("--dropout")->empty()) to.dropout = flags.dropout;
      if (!tr->get_option("--lr")->empty()) to.lr = flags.lr;
      if (!tr->get_option("--batch-size")->empty())
        to.batch_size = flags.batch_size;
      if (!tr->get_option("--max-epochs")->empty())
        to.max_epochs = flags.max_epochs;
      if (!tr->get_option("--halve-patience")->empty())
        to.lr_halve_patience = flags.lr_halve_patience;
      if (!tr->get_option("--stop-patience")->empty())
        to.early_stop_patience = flags.early_stop_patience;
      if (!tr->get_option("--seed")->empty()) to.seed = flags.seed;
      if (!tr->get_option("--seeds")->empty()) to.seeds = flags.seeds;
      return cmd_train(to);
    }
    if (ev->parsed()) return cmd_eval(e_ckpt, e_data, e_split, e_out);
    if (mk->parsed()) return cmd_masks(m_ckpt, m_data, m_split, m_out);
  } catch (const CliError& e) {
    std::cerr << "mmf-error " << e.error_class << ": " << e.message << "\n";
    return 1;
  }
  return 0;
}
