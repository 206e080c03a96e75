#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "mmfusion/data.hpp"
#include "mmfusion/errors.hpp"

using namespace mmf;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* name) {
  fs::path p = fs::temp_directory_path() / "mmfusion_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  return std::string(std::istreambuf_iterator<char>(is), {});
}

}  // namespace

TEST_CASE("generator refuses degenerate parameters") {
  CHECK_THROWS_AS(generate_gated_dataset(5, 8, {8, 12, 6}, 0), Error);
  CHECK_THROWS_AS(generate_gated_dataset(100, 1, {8, 12, 6}, 0), Error);
  CHECK_THROWS_AS(generate_gated_dataset(100, 8, {3, 12, 6}, 0), Error);
}

TEST_CASE("generator is deterministic and labels stay in range") {
  auto a = generate_gated_dataset(60, 6, {8, 12, 6}, 7);
  auto b = generate_gated_dataset(60, 6, {8, 12, 6}, 7);
  CHECK(a == b);
  auto c = generate_gated_dataset(60, 6, {8, 12, 6}, 8);
  CHECK_FALSE(a == c);
  CHECK(a.train.size() == 42);
  CHECK(a.val.size() == 9);
  CHECK(a.test.size() == 9);
  for (const auto* split : {&a.train, &a.val, &a.test})
    for (const auto& s : *split) {
      CHECK(s.label >= -3.0);
      CHECK(s.label <= 3.0);
      CHECK(s.audio.size() == 6u * 8u);
      CHECK(s.text.size() == 6u * 12u);
      CHECK(s.visual.size() == 6u * 6u);
    }
}

TEST_CASE("true gates beat fixed all-ones gates") {
  auto ds = generate_gated_dataset(1000, 6, {8, 12, 6}, 3);
  std::vector<MultimodalSample> all = ds.train;
  all.insert(all.end(), ds.val.begin(), ds.val.end());
  all.insert(all.end(), ds.test.begin(), ds.test.end());
  double gated = gated_oracle_mae(all, ds.dims);
  double ungated = ungated_oracle_mae(all, ds.dims);
  CHECK(gated < ungated);
  CHECK(gated < 0.1);       // gated predictor only misses the label noise
  CHECK(ungated > 2 * gated);
}

TEST_CASE("save and load round trip") {
  auto dir = temp_dir("roundtrip");
  auto ds = generate_gated_dataset(40, 5, {4, 6, 5}, 11);
  save_dataset(ds, dir.string());
  auto back = load_dataset(dir.string());
  CHECK(back.dims == ds.dims);
  CHECK(back.train == ds.train);
  CHECK(back.val == ds.val);
  CHECK(back.test == ds.test);

  // Byte-identical re-serialization.
  auto dir2 = temp_dir("roundtrip2");
  save_dataset(back, dir2.string());
  CHECK(slurp(dir / "train.txt") == slurp(dir2 / "train.txt"));
}

TEST_CASE("empty split serializes and reloads as empty") {
  auto dir = temp_dir("empty");
  auto ds = generate_gated_dataset(40, 5, {4, 6, 5}, 1);
  ds.val.clear();
  save_dataset(ds, dir.string());
  auto back = load_dataset(dir.string());
  CHECK(back.val.empty());
  CHECK(back.train == ds.train);
}

TEST_CASE("loader diagnostics carry the sample index") {
  auto dir = temp_dir("diag");
  auto ds = generate_gated_dataset(20, 3, {4, 4, 4}, 2);
  save_dataset(ds, dir.string());

  SUBCASE("misaligned modality lengths") {
    std::ofstream os(dir / "val.txt");
    os << "0.5,3,4,2,4,3,4";  // N_T != N_A
    for (int i = 0; i < 3 * 4 + 2 * 4 + 3 * 4; ++i) os << ",0";
    os << "\n";
    os.close();
    CHECK_THROWS_WITH_AS(load_dataset(dir.string()),
                         doctest::Contains("sample 0"), Error);
    try {
      load_dataset(dir.string());
    } catch (const Error& e) {
      CHECK(e.error_class() == "alignment");
    }
  }

  SUBCASE("label out of range") {
    std::ofstream os(dir / "val.txt");
    os << "3.5,3,4,3,4,3,4";
    for (int i = 0; i < 3 * 12; ++i) os << ",0";
    os << "\n";
    os.close();
    try {
      load_dataset(dir.string());
      FAIL("expected range error");
    } catch (const Error& e) {
      CHECK(e.error_class() == "range");
    }
  }

  SUBCASE("truncated record") {
    std::ofstream os(dir / "val.txt");
    os << "0.5,3,4,3,4,3,4,1,2,3\n";
    os.close();
    try {
      load_dataset(dir.string());
      FAIL("expected format error");
    } catch (const Error& e) {
      CHECK(e.error_class() == "format");
    }
  }
}

TEST_CASE("batch iterator covers everything with a short tail") {
  auto batches = batch_indices(10, 4, false, 0);
  REQUIRE(batches.size() == 3);
  CHECK(batches[0].size() == 4);
  CHECK(batches[1].size() == 4);
  CHECK(batches[2].size() == 2);
  // Unshuffled keeps the original order.
  CHECK(batches[0] == std::vector<int>{0, 1, 2, 3});

  auto s1 = batch_indices(10, 4, true, 5);
  auto s2 = batch_indices(10, 4, true, 5);
  CHECK(s1 == s2);
  auto s3 = batch_indices(10, 4, true, 6);
  CHECK_FALSE(s1 == s3);
}

TEST_CASE("make_batch shapes and alignment checks") {
  auto ds = generate_gated_dataset(20, 3, {4, 6, 5}, 2);
  BatchTensors b = make_batch(ds.train, {0, 1, 2}, ds.dims);
  CHECK(b.audio.shape() == Shape{3, 3, 4});
  CHECK(b.text.shape() == Shape{3, 3, 6});
  CHECK(b.visual.shape() == Shape{3, 3, 5});
  CHECK(b.target.shape() == Shape{3, 1});
  CHECK(b.target.data()[1] == ds.train[1].label);

  auto bad = ds.train;
  bad[1].seq_len = 4;
  bad[1].audio.resize(4 * 4);
  bad[1].text.resize(4 * 6);
  bad[1].visual.resize(4 * 5);
  CHECK_THROWS_AS(make_batch(bad, {0, 1}, ds.dims), Error);
}
