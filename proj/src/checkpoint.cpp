#include "mmfusion/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "mmfusion/errors.hpp"

namespace mmf {

namespace {
constexpr const char* kMagic = "mmfusion-checkpoint";
constexpr int kVersion = 1;
}  // namespace

void save_checkpoint(Model& model, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("io", "checkpoint: cannot open " + path);
  const ModelConfig& c = model.config();
  os << kMagic << " v" << kVersion << "\n";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", c.dropout);
  os << "config dims " << c.dims.audio << " " << c.dims.text << " "
     << c.dims.visual << " hidden " << c.hidden << " dropout " << buf
     << " feedback " << to_string(c.feedback) << " seed " << c.seed << "\n";
  os << "params " << model.parameters().size() << "\n";
  for (auto& [name, p] : model.parameters()) {
    os << "param " << name << " " << p.dims();
    for (int d : p.shape()) os << " " << d;
    os << "\n";
    for (int i = 0; i < p.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", p.data()[i]);
      os << (i ? " " : "") << buf;
    }
    os << "\n";
  }
  if (!os) throw Error("io", "checkpoint: write failure on " + path);
}

std::unique_ptr<Model> load_checkpoint(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("io", "checkpoint: cannot open " + path);
  std::string magic, version;
  is >> magic >> version;
  if (magic != kMagic || version != "v1")
    throw Error("format", "checkpoint: unrecognized header in " + path);

  std::string tok;
  ModelConfig cfg;
  std::string feedback;
  is >> tok;  // "config"
  is >> tok >> cfg.dims.audio >> cfg.dims.text >> cfg.dims.visual;
  is >> tok >> cfg.hidden;
  is >> tok >> cfg.dropout;
  is >> tok >> feedback;
  is >> tok >> cfg.seed;
  if (!is) throw Error("format", "checkpoint: malformed config line in " + path);
  cfg.feedback = feedback_type_from_string(feedback);

  auto model = std::make_unique<Model>(cfg);
  size_t n_params = 0;
  is >> tok >> n_params;
  if (tok != "params" || n_params != model->parameters().size())
    throw Error("format",
                "checkpoint: parameter count mismatch (file has " +
                    std::to_string(n_params) + ", model expects " +
                    std::to_string(model->parameters().size()) + ")");
  for (auto& [name, p] : model->parameters()) {
    std::string kw, fname;
    int ndims = 0;
    is >> kw >> fname >> ndims;
    if (kw != "param" || fname != name)
      throw Error("format", "checkpoint: expected parameter '" + name +
                                "', found '" + fname + "'");
    Shape shape(ndims);
    for (int& d : shape) is >> d;
    if (shape != p.shape())
      throw Error("format", "checkpoint: shape mismatch for '" + name +
                                "': file " + shape_str(shape) + ", model " +
                                shape_str(p.shape()));
    for (int i = 0; i < p.size(); ++i) is >> p.data()[i];
    if (!is)
      throw Error("format", "checkpoint: truncated values for '" + name + "'");
  }
  return model;
}

}  // namespace mmf
