#ifndef MMFUSION_CHECKPOINT_HPP_
#define MMFUSION_CHECKPOINT_HPP_

#include <memory>
#include <string>

#include "mmfusion/model.hpp"

namespace mmf {

// Versioned flat named-parameter table, plain text. Values are printed with
// 17 significant digits so a save/load round trip is exact in double
// precision.
void save_checkpoint(Model& model, const std::string& path);
std::unique_ptr<Model> load_checkpoint(const std::string& path);

}  // namespace mmf

#endif  // MMFUSION_CHECKPOINT_HPP_
