#ifndef MMFUSION_DATA_HPP_
#define MMFUSION_DATA_HPP_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mmfusion/tensor.hpp"

namespace mmf {

// One aligned tri-modal sequence with a scalar sentiment label in [-3,3].
// Feature matrices are row-major N×d.
struct MultimodalSample {
  int seq_len = 0;
  std::vector<double> audio;   // N×d_A
  std::vector<double> text;    // N×d_T
  std::vector<double> visual;  // N×d_V
  double label = 0.0;

  bool operator==(const MultimodalSample&) const = default;
};

struct DatasetDims {
  int audio = 0, text = 0, visual = 0;
  bool operator==(const DatasetDims&) const = default;
  int of(int modality) const;  // 0=A, 1=T, 2=V
};

struct DatasetSplits {
  std::vector<MultimodalSample> train, val, test;
  DatasetDims dims;
  std::uint64_t seed = 0;

  bool operator==(const DatasetSplits&) const = default;
};

// Synthetic task where cross-modally indicated feature gating is provably
// informative. Each modality carries two signal-candidate channels (0,1);
// which one is live for this sample is chosen by a per-sample selector bit
// encoded as a constant ±1 cue in the other two modalities (channels 2,3).
// The label is a bounded function of the live channels' means plus small
// observation noise, so a predictor that gates on the cues beats any fixed
// per-channel weighting. Split 70/15/15.
DatasetSplits generate_gated_dataset(int n, int seq_len, DatasetDims dims,
                                     std::uint64_t seed);

// Closed-form predictors over the generator's structure, used to verify the
// oracle gap: gated uses only the live channels, ungated averages both
// candidates. Return MAE against the sample labels.
double gated_oracle_mae(const std::vector<MultimodalSample>& samples,
                        const DatasetDims& dims);
double ungated_oracle_mae(const std::vector<MultimodalSample>& samples,
                          const DatasetDims& dims);

// On-disk format: train.txt/val.txt/test.txt under a directory, one sample
// per line:
//   label,N_A,d_A,N_T,d_T,N_V,d_V,<audio flat>,<text flat>,<visual flat>
void save_dataset(const DatasetSplits& splits, const std::string& dir);
DatasetSplits load_dataset(const std::string& dir);

std::vector<MultimodalSample> parse_split_file(const std::string& path,
                                               DatasetDims* dims_in_out);

// Contiguous index batches after an optional seeded shuffle; the final
// short batch is included.
std::vector<std::vector<int>> batch_indices(int n, int batch_size,
                                            bool shuffle, std::uint64_t seed);

// Assembles (B,N,d_k) input leaves and a (B,1) target from a batch.
struct BatchTensors {
  Tensor audio, text, visual, target;
};
BatchTensors make_batch(const std::vector<MultimodalSample>& samples,
                        const std::vector<int>& indices,
                        const DatasetDims& dims);

}  // namespace mmf

#endif  // MMFUSION_DATA_HPP_
