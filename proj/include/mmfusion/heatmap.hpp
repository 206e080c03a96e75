#ifndef MMFUSION_HEATMAP_HPP_
#define MMFUSION_HEATMAP_HPP_

#include <array>
#include <string>
#include <vector>

#include "mmfusion/model.hpp"

namespace mmf {

// Averaged top-down mask values per feature channel, grouped into the seven
// sentiment bins (-3..+3, columns ordered neg++ .. pos++). A bin with no
// samples is flagged absent rather than reported as zero.
struct MaskHeatmap {
  int feature_dim = 0;
  std::vector<double> mean;         // feature_dim × 7, row-major
  std::array<bool, 7> bin_present;  // false where the class bin was empty
};

extern const std::array<const char*, 7> kSentimentBinNames;

// Averages ½(f_j + f_l) for the target modality over every timestep of every
// sample, bucketed by the sample's rounded label.
MaskHeatmap export_mask_heatmap(Model& model,
                                const std::vector<MultimodalSample>& samples,
                                const DatasetDims& dims, int target_modality,
                                int batch_size = 32);

// One row per feature index, 7 comma-separated columns, header row with the
// bin names; empty bins render as NA.
std::string heatmap_to_csv(const MaskHeatmap& h);

}  // namespace mmf

#endif  // MMFUSION_HEATMAP_HPP_
