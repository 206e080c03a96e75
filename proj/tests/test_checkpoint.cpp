#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "mmfusion/checkpoint.hpp"
#include "mmfusion/data.hpp"
#include "mmfusion/errors.hpp"
#include "mmfusion/train.hpp"

using namespace mmf;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const char* name) {
  fs::path dir = fs::temp_directory_path() / "mmfusion_tests";
  fs::create_directories(dir);
  return dir / name;
}

ModelConfig small_cfg() {
  ModelConfig cfg;
  cfg.dims = {4, 6, 5};
  cfg.hidden = 6;
  cfg.dropout = 0.1;
  cfg.feedback = FeedbackType::kLstm;
  cfg.seed = 42;
  return cfg;
}

}  // namespace

TEST_CASE("checkpoint round trip preserves config params and predictions") {
  auto path = temp_file("roundtrip.txt");
  Model model(small_cfg());
  save_checkpoint(model, path.string());
  auto back = load_checkpoint(path.string());
  CHECK(back->config() == model.config());

  auto& a = model.parameters();
  auto& b = back->parameters();
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].first == b[i].first);
    CHECK(a[i].second.shape() == b[i].second.shape());
    CHECK(a[i].second.data() == b[i].second.data());
  }

  auto data = generate_gated_dataset(20, 3, {4, 6, 5}, 0);
  CHECK(predict_all(model, data.test, data.dims, 8) ==
        predict_all(*back, data.test, data.dims, 8));
}

TEST_CASE("round trip across all feedback variants") {
  for (auto fb : {FeedbackType::kNone, FeedbackType::kFeedforward,
                  FeedbackType::kLstm}) {
    ModelConfig cfg = small_cfg();
    cfg.feedback = fb;
    Model model(cfg);
    auto path = temp_file("variant.txt");
    save_checkpoint(model, path.string());
    auto back = load_checkpoint(path.string());
    CHECK(back->config().feedback == fb);
    CHECK(back->parameters().size() == model.parameters().size());
  }
}

TEST_CASE("missing file raises io") {
  try {
    load_checkpoint("/nonexistent/dir/ckpt.txt");
    FAIL("expected io error");
  } catch (const Error& e) {
    CHECK(e.error_class() == "io");
  }
}

TEST_CASE("wrong header raises format") {
  auto path = temp_file("badheader.txt");
  std::ofstream(path) << "something-else v9\n";
  try {
    load_checkpoint(path.string());
    FAIL("expected format error");
  } catch (const Error& e) {
    CHECK(e.error_class() == "format");
  }
}

TEST_CASE("tampered shape raises format and names the parameter") {
  auto path = temp_file("badshape.txt");
  Model model(small_cfg());
  save_checkpoint(model, path.string());

  std::ifstream is(path);
  std::string text((std::istreambuf_iterator<char>(is)), {});
  is.close();
  // Corrupt the first parameter's declared shape.
  auto pos = text.find("param ");
  REQUIRE(pos != std::string::npos);
  auto eol = text.find('\n', pos);
  std::string line = text.substr(pos, eol - pos);
  auto last_space = line.rfind(' ');
  line = line.substr(0, last_space + 1) + "999";
  text = text.substr(0, pos) + line + text.substr(eol);
  std::ofstream(path) << text;

  try {
    load_checkpoint(path.string());
    FAIL("expected format error");
  } catch (const Error& e) {
    CHECK(e.error_class() == "format");
  }
}

TEST_CASE("truncated parameter table raises format") {
  auto path = temp_file("truncated.txt");
  Model model(small_cfg());
  save_checkpoint(model, path.string());

  std::ifstream is(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(is, line)) lines.push_back(line);
  is.close();
  lines.resize(lines.size() / 2);
  std::ofstream os(path);
  for (const auto& l : lines) os << l << "\n";
  os.close();

  try {
    load_checkpoint(path.string());
    FAIL("expected format error");
  } catch (const Error& e) {
    CHECK(e.error_class() == "format");
  }
}
