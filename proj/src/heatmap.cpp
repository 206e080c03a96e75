#include "mmfusion/heatmap.hpp"

#include <sstream>

#include "mmfusion/errors.hpp"
#include "mmfusion/metrics.hpp"

namespace mmf {

const std::array<const char*, 7> kSentimentBinNames = {
    "neg++", "neg+", "neg", "neu", "pos", "pos+", "pos++"};

MaskHeatmap export_mask_heatmap(Model& model,
                                const std::vector<MultimodalSample>& samples,
                                const DatasetDims& dims, int target_modality,
                                int batch_size) {
  if (model.config().feedback == FeedbackType::kNone)
    throw Error("state",
                "mask heatmap requires a model trained with feedback enabled");
  if (target_modality < 0 || target_modality > 2)
    throw Error("config", "mask heatmap: target modality must be 0, 1 or 2");
  if (samples.empty()) throw Error("config", "mask heatmap: empty dataset");

  int d = dims.of(target_modality);
  MaskHeatmap h;
  h.feature_dim = d;
  h.mean.assign(static_cast<size_t>(d) * 7, 0.0);
  h.bin_present.fill(false);
  std::vector<double> counts(7, 0.0);  // timestep counts per bin

  for (const auto& batch : batch_indices(static_cast<int>(samples.size()),
                                         batch_size, false, 0)) {
    BatchTensors bt = make_batch(samples, batch, dims);
    FeedbackMasks masks = model.compute_masks(bt);
    Tensor avg = model.averaged_masks(masks)[target_modality];  // (B,N,d)
    int N = avg.shape()[1];
    for (size_t b = 0; b < batch.size(); ++b) {
      int bin = clamp_round(samples[batch[b]].label, 3) + 3;
      counts[bin] += N;
      for (int t = 0; t < N; ++t)
        for (int j = 0; j < d; ++j)
          h.mean[static_cast<size_t>(j) * 7 + bin] +=
              avg.data()[(b * N + t) * d + j];
    }
  }
  for (int bin = 0; bin < 7; ++bin) {
    if (counts[bin] == 0.0) continue;
    h.bin_present[bin] = true;
    for (int j = 0; j < d; ++j)
      h.mean[static_cast<size_t>(j) * 7 + bin] /= counts[bin];
  }
  return h;
}

std::string heatmap_to_csv(const MaskHeatmap& h) {
  std::ostringstream os;
  for (int bin = 0; bin < 7; ++bin)
    os << (bin ? "," : "") << kSentimentBinNames[bin];
  os << "\n";
  for (int j = 0; j < h.feature_dim; ++j) {
    for (int bin = 0; bin < 7; ++bin) {
      if (bin) os << ",";
      if (h.bin_present[bin])
        os << h.mean[static_cast<size_t>(j) * 7 + bin];
      else
        os << "NA";
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace mmf
