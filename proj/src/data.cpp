#include "mmfusion/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mmfusion/errors.hpp"

namespace mmf {

namespace {

constexpr double kLabelNoiseSigma = 0.05;
constexpr double kDeadChannelSigma = 1.5;

// Maps the summed per-modality signal means into a label spread over
// [-3,3]; the sum of three N(0,1/N) means has std sqrt(3/N).
double label_scale(int seq_len) { return 1.5 * std::sqrt(seq_len / 3.0); }

double clamp3(double v) { return std::clamp(v, -3.0, 3.0); }

int selector_of(const MultimodalSample& s, int modality, const DatasetDims& dims) {
  // Modality k's selector is cued in channel 2 of the previous modality.
  int prev = (modality + 2) % 3;
  const std::vector<double>& feats =
      prev == 0 ? s.audio : (prev == 1 ? s.text : s.visual);
  return feats[2] > 0 ? 1 : 0;
  (void)dims;
}

double candidate_mean(const MultimodalSample& s, int modality, int channel,
                      const DatasetDims& dims) {
  const std::vector<double>& feats =
      modality == 0 ? s.audio : (modality == 1 ? s.text : s.visual);
  int d = dims.of(modality);
  double acc = 0.0;
  for (int t = 0; t < s.seq_len; ++t) acc += feats[t * d + channel];
  return acc / s.seq_len;
}

void format_sample(std::ostream& os, const MultimodalSample& s,
                   const DatasetDims& dims) {
  char buf[40];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << buf;
  };
  num(s.label);
  os << "," << s.seq_len << "," << dims.audio << "," << s.seq_len << ","
     << dims.text << "," << s.seq_len << "," << dims.visual;
  for (const auto* vec : {&s.audio, &s.text, &s.visual})
    for (double v : *vec) {
      os << ",";
      num(v);
    }
  os << "\n";
}

}  // namespace

int DatasetDims::of(int modality) const {
  switch (modality) {
    case 0: return audio;
    case 1: return text;
    default: return visual;
  }
}

DatasetSplits generate_gated_dataset(int n, int seq_len, DatasetDims dims,
                                     std::uint64_t seed) {
  if (n < 10)
    throw Error("config", "generate: need at least 10 samples, got " +
                              std::to_string(n));
  if (seq_len < 2)
    throw Error("config", "generate: need sequence length >= 2, got " +
                              std::to_string(seq_len));
  for (int k = 0; k < 3; ++k)
    if (dims.of(k) < 4)
      throw Error("config",
                  "generate: every modality needs >= 4 feature channels, got " +
                      std::to_string(dims.of(k)));

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  double c = label_scale(seq_len);

  std::vector<MultimodalSample> samples;
  samples.reserve(n);
  for (int i = 0; i < n; ++i) {
    MultimodalSample s;
    s.seq_len = seq_len;
    int sel[3];
    for (int k = 0; k < 3; ++k) sel[k] = coin(rng) ? 1 : 0;
    double signal_sum = 0.0;
    for (int k = 0; k < 3; ++k) {
      int d = dims.of(k);
      std::vector<double> feats(static_cast<size_t>(seq_len) * d);
      int next = (k + 1) % 3, prev = (k + 2) % 3;
      double mean_live = 0.0;
      for (int t = 0; t < seq_len; ++t) {
        double live = gauss(rng);
        double dead = kDeadChannelSigma * gauss(rng);
        feats[t * d + sel[k]] = live;
        feats[t * d + (1 - sel[k])] = dead;
        feats[t * d + 2] = 2.0 * sel[next] - 1.0;
        feats[t * d + 3] = 2.0 * sel[prev] - 1.0;
        for (int j = 4; j < d; ++j) feats[t * d + j] = gauss(rng);
        mean_live += live;
      }
      signal_sum += mean_live / seq_len;
      if (k == 0)
        s.audio = std::move(feats);
      else if (k == 1)
        s.text = std::move(feats);
      else
        s.visual = std::move(feats);
    }
    s.label = clamp3(3.0 * std::tanh(c * signal_sum) +
                     kLabelNoiseSigma * gauss(rng));
    samples.push_back(std::move(s));
  }

  DatasetSplits splits;
  splits.dims = dims;
  splits.seed = seed;
  int n_train = (n * 70) / 100;
  int n_val = (n * 15) / 100;
  splits.train.assign(samples.begin(), samples.begin() + n_train);
  splits.val.assign(samples.begin() + n_train,
                    samples.begin() + n_train + n_val);
  splits.test.assign(samples.begin() + n_train + n_val, samples.end());
  return splits;
}

double gated_oracle_mae(const std::vector<MultimodalSample>& samples,
                        const DatasetDims& dims) {
  double acc = 0.0;
  for (const auto& s : samples) {
    double sum = 0.0;
    for (int k = 0; k < 3; ++k)
      sum += candidate_mean(s, k, selector_of(s, k, dims), dims);
    double pred = 3.0 * std::tanh(label_scale(s.seq_len) * sum);
    acc += std::fabs(pred - s.label);
  }
  return acc / samples.size();
}

double ungated_oracle_mae(const std::vector<MultimodalSample>& samples,
                          const DatasetDims& dims) {
  double acc = 0.0;
  for (const auto& s : samples) {
    double sum = 0.0;
    for (int k = 0; k < 3; ++k)
      sum += 0.5 * (candidate_mean(s, k, 0, dims) +
                    candidate_mean(s, k, 1, dims));
    double pred = 3.0 * std::tanh(label_scale(s.seq_len) * sum);
    acc += std::fabs(pred - s.label);
  }
  return acc / samples.size();
}

void save_dataset(const DatasetSplits& splits, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("io", "save: cannot create directory " + dir);
  const std::pair<const char*, const std::vector<MultimodalSample>*> parts[] = {
      {"train.txt", &splits.train},
      {"val.txt", &splits.val},
      {"test.txt", &splits.test}};
  for (const auto& [name, part] : parts) {
    std::string path = (std::filesystem::path(dir) / name).string();
    std::ofstream os(path);
    if (!os) throw Error("io", "save: cannot open " + path);
    for (const auto& s : *part) format_sample(os, s, splits.dims);
    if (!os) throw Error("io", "save: write failure on " + path);
  }
}

std::vector<MultimodalSample> parse_split_file(const std::string& path,
                                               DatasetDims* dims_in_out) {
  std::ifstream is(path);
  if (!is) throw Error("io", "load: cannot open " + path);
  std::vector<MultimodalSample> out;
  std::string line;
  int idx = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> fields;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        fields.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw Error("format", "load: sample " + std::to_string(idx) + " in " +
                                  path + ": bad numeral '" + tok + "'");
      }
    }
    if (fields.size() < 7)
      throw Error("format", "load: sample " + std::to_string(idx) + " in " +
                                path + ": truncated record");
    double label = fields[0];
    int na = static_cast<int>(fields[1]), da = static_cast<int>(fields[2]);
    int nt = static_cast<int>(fields[3]), dt = static_cast<int>(fields[4]);
    int nv = static_cast<int>(fields[5]), dv = static_cast<int>(fields[6]);
    if (na != nt || na != nv)
      throw Error("alignment",
                  "load: sample " + std::to_string(idx) + " in " + path +
                      ": modality lengths differ (A=" + std::to_string(na) +
                      ", T=" + std::to_string(nt) +
                      ", V=" + std::to_string(nv) + ")");
    if (label < -3.0 || label > 3.0)
      throw Error("range", "load: sample " + std::to_string(idx) + " in " +
                               path + ": label " + std::to_string(label) +
                               " outside [-3,3]");
    DatasetDims dims{da, dt, dv};
    if (dims_in_out->audio == 0)
      *dims_in_out = dims;
    else if (!(dims == *dims_in_out))
      throw Error("format", "load: sample " + std::to_string(idx) + " in " +
                                path + ": feature dims differ from preceding "
                                "samples");
    size_t expected = 7 + static_cast<size_t>(na) * (da + dt + dv);
    if (fields.size() != expected)
      throw Error("format", "load: sample " + std::to_string(idx) + " in " +
                                path + ": expected " +
                                std::to_string(expected) + " fields, got " +
                                std::to_string(fields.size()));
    MultimodalSample s;
    s.seq_len = na;
    s.label = label;
    auto it = fields.begin() + 7;
    s.audio.assign(it, it + static_cast<size_t>(na) * da);
    it += static_cast<size_t>(na) * da;
    s.text.assign(it, it + static_cast<size_t>(na) * dt);
    it += static_cast<size_t>(na) * dt;
    s.visual.assign(it, it + static_cast<size_t>(na) * dv);
    out.push_back(std::move(s));
    ++idx;
  }
  return out;
}

DatasetSplits load_dataset(const std::string& dir) {
  DatasetSplits splits;
  splits.dims = DatasetDims{};
  auto p = std::filesystem::path(dir);
  splits.train = parse_split_file((p / "train.txt").string(), &splits.dims);
  splits.val = parse_split_file((p / "val.txt").string(), &splits.dims);
  splits.test = parse_split_file((p / "test.txt").string(), &splits.dims);
  return splits;
}

std::vector<std::vector<int>> batch_indices(int n, int batch_size,
                                            bool shuffle, std::uint64_t seed) {
  if (batch_size < 1)
    throw Error("config", "batch_indices: batch size must be >= 1");
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  if (shuffle) {
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
  }
  std::vector<std::vector<int>> batches;
  for (int start = 0; start < n; start += batch_size) {
    int end = std::min(n, start + batch_size);
    batches.emplace_back(order.begin() + start, order.begin() + end);
  }
  return batches;
}

BatchTensors make_batch(const std::vector<MultimodalSample>& samples,
                        const std::vector<int>& indices,
                        const DatasetDims& dims) {
  if (indices.empty()) throw Error("config", "make_batch: empty batch");
  int B = static_cast<int>(indices.size());
  int N = samples[indices[0]].seq_len;
  std::vector<double> a, t, v, y;
  a.reserve(static_cast<size_t>(B) * N * dims.audio);
  t.reserve(static_cast<size_t>(B) * N * dims.text);
  v.reserve(static_cast<size_t>(B) * N * dims.visual);
  for (int i : indices) {
    const auto& s = samples[i];
    if (s.seq_len != N)
      throw Error("alignment",
                  "make_batch: sample " + std::to_string(i) +
                      " has sequence length " + std::to_string(s.seq_len) +
                      ", batch expects " + std::to_string(N));
    a.insert(a.end(), s.audio.begin(), s.audio.end());
    t.insert(t.end(), s.text.begin(), s.text.end());
    v.insert(v.end(), s.visual.begin(), s.visual.end());
    y.push_back(s.label);
  }
  BatchTensors b;
  b.audio = Tensor::leaf({B, N, dims.audio}, std::move(a));
  b.text = Tensor::leaf({B, N, dims.text}, std::move(t));
  b.visual = Tensor::leaf({B, N, dims.visual}, std::move(v));
  b.target = Tensor::leaf({B, 1}, std::move(y));
  return b;
}

}  // namespace mmf
