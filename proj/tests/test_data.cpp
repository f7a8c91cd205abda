#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "pepkit/data.hpp"
#include "testutil.hpp"

using namespace pepkit;

namespace {

void write_bytes(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

// 2 images of 2x2 pixels + 2 labels, by hand.
std::vector<unsigned char> tiny_images() {
  return {0, 0, 0x08, 3,  0, 0, 0, 2,  0, 0, 0, 2,  0, 0, 0, 2,
          0, 51, 102, 255,  10, 20, 30, 40};
}

std::vector<unsigned char> tiny_labels() { return {0, 0, 0x08, 1, 0, 0, 0, 2, 1, 0}; }

}  // namespace

TEST_CASE("load_idx parses a hand-encoded 2-image pair exactly") {
  const auto dir = testutil::tmp_dir("idx");
  write_bytes(dir / "img", tiny_images());
  write_bytes(dir / "lab", tiny_labels());
  const Dataset ds = load_idx(dir / "img", dir / "lab");
  CHECK(ds.n() == 2);
  CHECK(ds.dim() == 4);
  CHECK(ds.class_count == 2);
  CHECK(ds.features(0, 0) == 0.0);
  CHECK(ds.features(0, 1) == doctest::Approx(51.0 / 255.0).epsilon(1e-15));
  CHECK(ds.features(0, 2) == doctest::Approx(102.0 / 255.0).epsilon(1e-15));
  CHECK(ds.features(0, 3) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(ds.features(1, 3) == doctest::Approx(40.0 / 255.0).epsilon(1e-15));
  CHECK(ds.labels[0] == 1);
  CHECK(ds.labels[1] == 0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("load_idx rejects swapped magics and truncation") {
  const auto dir = testutil::tmp_dir("idxbad");
  write_bytes(dir / "img", tiny_images());
  write_bytes(dir / "lab", tiny_labels());

  // labels file (0x00000801) passed as images
  CHECK_THROWS_AS(load_idx(dir / "lab", dir / "lab"), data_error);
  // images file passed as labels
  CHECK_THROWS_AS(load_idx(dir / "img", dir / "img"), data_error);

  auto truncated = tiny_images();
  truncated.pop_back();
  write_bytes(dir / "trunc", truncated);
  CHECK_THROWS_AS(load_idx(dir / "trunc", dir / "lab"), data_error);

  auto miscount = tiny_labels();
  miscount[7] = 3;  // declares 3 labels, carries 2
  write_bytes(dir / "badlab", miscount);
  CHECK_THROWS_AS(load_idx(dir / "img", dir / "badlab"), data_error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("load_idx rejects a zero-image file distinctly") {
  const auto dir = testutil::tmp_dir("idxzero");
  write_bytes(dir / "img", {0, 0, 0x08, 3, 0, 0, 0, 0, 0, 0, 0, 2, 0, 0, 0, 2});
  write_bytes(dir / "lab", {0, 0, 0x08, 1, 0, 0, 0, 0});
  CHECK_THROWS_AS(load_idx(dir / "img", dir / "lab"), data_error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("idx round trip preserves quantized features and labels") {
  Dataset ds = synth_blobs(3, 20, 5, 1.0, 7);
  // squash into [0,1] so quantization is the only loss
  ds.features = (ds.features.array() - ds.features.minCoeff()) /
                (ds.features.maxCoeff() - ds.features.minCoeff());
  const auto dir = testutil::tmp_dir("roundtrip");
  save_idx(ds, dir / "img", dir / "lab");
  const Dataset back = load_idx(dir / "img", dir / "lab");
  REQUIRE(back.n() == ds.n());
  REQUIRE(back.dim() == ds.dim());
  CHECK(back.labels == ds.labels);
  for (Index i = 0; i < ds.n(); ++i) {
    for (Index j = 0; j < ds.dim(); ++j) {
      const double quantized = std::round(ds.features(i, j) * 255.0) / 255.0;
      CHECK(back.features(i, j) == doctest::Approx(quantized).epsilon(1e-15));
    }
  }
  // second save/load is lossless: quantization is idempotent
  save_idx(back, dir / "img2", dir / "lab2");
  const Dataset again = load_idx(dir / "img2", dir / "lab2");
  CHECK((again.features - back.features).cwiseAbs().maxCoeff() == 0.0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("synth_blobs: determinism, balance, label layout") {
  const Dataset a = synth_blobs(3, 100, 6, 1.0, 42);
  const Dataset b = synth_blobs(3, 100, 6, 1.0, 42);
  const Dataset c = synth_blobs(3, 100, 6, 1.0, 43);
  CHECK(a.n() == 300);
  CHECK((a.features - b.features).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.labels == b.labels);
  CHECK((a.features - c.features).cwiseAbs().maxCoeff() > 0.0);
  std::vector<int> counts(3, 0);
  for (int y : a.labels) ++counts[static_cast<std::size_t>(y)];
  for (int count : counts) CHECK(count == 100);
}

TEST_CASE("synth_blobs small spread is nearest-centroid separable") {
  // noise std = spread^2 shrinks faster than the radius-3*spread sphere,
  // so tight spreads give a perfect nearest-centroid classifier.
  const Dataset ds = synth_blobs(4, 50, 8, 0.05, 11);
  Eigen::MatrixXd centroids = Eigen::MatrixXd::Zero(4, ds.dim());
  std::vector<int> counts(4, 0);
  for (Index i = 0; i < ds.n(); ++i) {
    centroids.row(ds.labels[static_cast<std::size_t>(i)]) += ds.features.row(i);
    ++counts[static_cast<std::size_t>(ds.labels[static_cast<std::size_t>(i)])];
  }
  for (Index c = 0; c < 4; ++c) centroids.row(c) /= double(counts[static_cast<std::size_t>(c)]);
  Index correct = 0;
  for (Index i = 0; i < ds.n(); ++i) {
    Index best = 0;
    double best_d = (ds.features.row(i) - centroids.row(0)).squaredNorm();
    for (Index c = 1; c < 4; ++c) {
      const double d = (ds.features.row(i) - centroids.row(c)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    if (best == ds.labels[static_cast<std::size_t>(i)]) ++correct;
  }
  CHECK(correct == ds.n());
}

TEST_CASE("assign_splits: exact sizes, partition, determinism") {
  Dataset ds = synth_blobs(2, 50, 3, 1.0, 5);
  SplitSpec spec{0.8, 0.1, 0.1, 99};
  assign_splits(ds, spec);
  CHECK(ds.rows_in(Split::train).size() == 80);
  CHECK(ds.rows_in(Split::validation).size() == 10);
  CHECK(ds.rows_in(Split::test).size() == 10);
  CHECK(ds.rows_in(Split::none).empty());

  Dataset ds2 = synth_blobs(2, 50, 3, 1.0, 5);
  assign_splits(ds2, spec);
  CHECK(ds.splits == ds2.splits);

  Dataset ds3 = synth_blobs(2, 50, 3, 1.0, 5);
  assign_splits(ds3, SplitSpec{0.8, 0.1, 0.1, 100});
  CHECK(ds.splits != ds3.splits);
}

TEST_CASE("assign_splits sends the floor remainder to train") {
  Dataset ds = synth_blobs(2, 51, 3, 1.0, 5);  // N = 102
  assign_splits(ds, SplitSpec{0.34, 0.33, 0.33, 1});
  // floor(102*0.33) = 33 for validation and test; train takes the rest
  CHECK(ds.rows_in(Split::validation).size() == 33);
  CHECK(ds.rows_in(Split::test).size() == 33);
  CHECK(ds.rows_in(Split::train).size() == 36);
}

TEST_CASE("split fraction validation") {
  Dataset ds = synth_blobs(2, 10, 3, 1.0, 5);
  CHECK_THROWS_AS(assign_splits(ds, SplitSpec{0.5, 0.5, 0.5, 0}), config_error);
  CHECK_THROWS_AS(assign_splits(ds, SplitSpec{1.0, -0.5, 0.5, 0}), config_error);
  Dataset tiny = synth_blobs(2, 1, 3, 1.0, 5);  // N=2 cannot hold 3 parts
  CHECK_THROWS_AS(assign_splits(tiny, SplitSpec{0.34, 0.33, 0.33, 0}), config_error);
}

TEST_CASE("subset and filter_classes") {
  Dataset ds = synth_blobs(4, 25, 3, 1.0, 9);
  assign_splits(ds, SplitSpec{0.6, 0.2, 0.2, 3});
  const Dataset val = ds.subset(Split::validation);
  CHECK(val.n() == 20);
  for (auto tag : val.splits) CHECK(tag == Split::validation);

  const Dataset lower = ds.filter_classes({0, 1});
  CHECK(lower.class_count == 2);
  CHECK(lower.n() == 50);
  for (int y : lower.labels) CHECK(y < 2);

  const Dataset upper = ds.filter_classes({2, 3});
  CHECK(upper.class_count == 2);
  CHECK(upper.n() == 50);
  for (int y : upper.labels) CHECK(y < 2);  // relabeled to 0,1

  CHECK_THROWS_AS(ds.filter_classes({1, 0}), config_error);
  CHECK_THROWS_AS(ds.filter_classes({0, 9}), config_error);
  CHECK_THROWS_AS(ds.filter_classes({2}), config_error);
}

TEST_CASE("blobs precondition checks") {
  CHECK_THROWS_AS(synth_blobs(1, 10, 3, 1.0, 0), config_error);
  CHECK_THROWS_AS(synth_blobs(2, 0, 3, 1.0, 0), config_error);
  CHECK_THROWS_AS(synth_blobs(2, 10, 0, 1.0, 0), config_error);
  CHECK_THROWS_AS(synth_blobs(2, 10, 3, 0.0, 0), config_error);
}
