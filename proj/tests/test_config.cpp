#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <functional>
#include <string>

#include "pepkit/config.hpp"
#include "testutil.hpp"

using namespace pepkit;

namespace {

bool throws_mentioning(const std::function<void()>& fn, const std::string& needle) {
  try {
    fn();
  } catch (const config_error& e) {
    return std::string(e.what()).find(needle) != std::string::npos;
  }
  return false;
}

}  // namespace

TEST_CASE("parses flat keys, sections, comments, and blank lines") {
  const auto cfg = ConfigMap::parse_text(
      "seed = 42\n"
      "\n"
      "# full-line comment\n"
      "[train]\n"
      "learning_rate = 0.001   ; trailing comment\n"
      "epochs=15\n"
      "[pep]\n"
      "sigma_low = 5e-5\n",
      "inline");
  CHECK(cfg.get_u64("seed", 0) == 42);
  CHECK(cfg.get_double("train.learning_rate", 0) == doctest::Approx(0.001));
  CHECK(cfg.get_long("train.epochs", 0) == 15);
  CHECK(cfg.get_double("pep.sigma_low", 0) == doctest::Approx(5e-5));
  CHECK(cfg.entries().size() == 4);
}

TEST_CASE("fallbacks apply only when the key is absent") {
  const auto cfg = ConfigMap::parse_text("a = 7\n", "inline");
  CHECK(cfg.get_long("a", 99) == 7);
  CHECK(cfg.get_long("b", 99) == 99);
  CHECK(cfg.get_string("name", "default") == "default");
  CHECK(cfg.has("a"));
  CHECK_FALSE(cfg.has("b"));
}

TEST_CASE("booleans accept the usual spellings") {
  const auto cfg = ConfigMap::parse_text(
      "a = true\nb = FALSE\nc = yes\nd = 0\ne = on\nf = off\n", "inline");
  CHECK(cfg.get_bool("a", false));
  CHECK_FALSE(cfg.get_bool("b", true));
  CHECK(cfg.get_bool("c", false));
  CHECK_FALSE(cfg.get_bool("d", true));
  CHECK(cfg.get_bool("e", false));
  CHECK_FALSE(cfg.get_bool("f", true));
  CHECK(cfg.get_bool("missing", true));
}

TEST_CASE("duplicate key errors carry file and line") {
  CHECK(throws_mentioning(
      [] { ConfigMap::parse_text("x = 1\nx = 2\n", "conf.ini"); }, "conf.ini:2"));
  CHECK(throws_mentioning(
      [] { ConfigMap::parse_text("x = 1\nx = 2\n", "conf.ini"); }, "duplicate key 'x'"));
  // same key name in different sections is fine
  const auto cfg = ConfigMap::parse_text("[a]\nk = 1\n[b]\nk = 2\n", "inline");
  CHECK(cfg.get_long("a.k", 0) == 1);
  CHECK(cfg.get_long("b.k", 0) == 2);
}

TEST_CASE("malformed lines are rejected with location") {
  CHECK(throws_mentioning([] { ConfigMap::parse_text("just words\n", "f"); }, "f:1"));
  CHECK(throws_mentioning([] { ConfigMap::parse_text("= 3\n", "f"); }, "empty key"));
  CHECK(throws_mentioning([] { ConfigMap::parse_text("[unclosed\n", "f"); }, "section"));
  CHECK(throws_mentioning([] { ConfigMap::parse_text("[]\n", "f"); }, "f:1"));
}

TEST_CASE("typed getters reject malformed values naming the key") {
  const auto cfg = ConfigMap::parse_text("x = 12abc\ny = maybe\nz = -3\n", "inline");
  CHECK(throws_mentioning([&] { cfg.get_double("x", 0); }, "'x'"));
  CHECK(throws_mentioning([&] { cfg.get_long("x", 0); }, "'x'"));
  CHECK(throws_mentioning([&] { cfg.get_bool("y", false); }, "'y'"));
  CHECK(throws_mentioning([&] { cfg.get_u64("z", 0); }, "'z'"));
  CHECK(cfg.get_long("z", 0) == -3);
}

TEST_CASE("expect_keys names the first unknown key") {
  const auto cfg = ConfigMap::parse_text("[train]\nepochs = 3\ntypo_key = 1\n", "inline");
  CHECK_NOTHROW(ConfigMap::parse_text("a = 1\n", "x").expect_keys({"a"}));
  CHECK(throws_mentioning([&] { cfg.expect_keys({"train.epochs"}); }, "train.typo_key"));
}

TEST_CASE("parse_file reads from disk and reports missing files") {
  const auto dir = testutil::tmp_dir("config");
  const auto path = dir / "run.ini";
  {
    std::ofstream out(path);
    out << "[data]\nsource = blobs:3,100,5,0.8,11\n";
  }
  const auto cfg = ConfigMap::parse_file(path);
  CHECK(cfg.get_string("data.source", "") == "blobs:3,100,5,0.8,11");
  CHECK_THROWS_AS(ConfigMap::parse_file(dir / "absent.ini"), config_error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("values keep interior spaces but lose surrounding whitespace") {
  const auto cfg = ConfigMap::parse_text("path =   /tmp/some dir/file.bin  \n", "inline");
  CHECK(cfg.get_string("path", "") == "/tmp/some dir/file.bin");
}
