#include <catch2/catch_amalgamated.hpp>

#include "servokit/config.hpp"
#include "servokit/csvio.hpp"
#include "servokit/rng.hpp"

using namespace servokit;

TEST_CASE("rng emits the documented xorshift64* stream") {
  // Vectors frozen from an independent implementation of the documented
  // algorithm, so any other language can reproduce the stream.
  SplitRng rng(42);
  CHECK(rng.next() == 0x31b0ece7c4f697a2ULL);
  CHECK(rng.next() == 0x9008a3b1cb686f03ULL);
  CHECK(rng.next() == 0x7c7173abd97be16fULL);

  SplitRng zero(0);
  CHECK(zero.next() == 0x7bbcb40d550682d0ULL);

  SplitRng child = SplitRng(42).split(3);
  CHECK(child.next() == 0xdeec8360c192c398ULL);
}

TEST_CASE("rng uniform matches the bit-level definition") {
  SplitRng rng(42);
  CHECK(rng.uniform() == 0.1941059175341826);
  CHECK(rng.uniform() == 0.5626318272656207);
  SplitRng other(123);
  for (int i = 0; i < 1000; ++i) {
    const double x = other.uniform();
    REQUIRE(x >= 0.0);
    REQUIRE(x < 1.0);
  }
}

TEST_CASE("rng shuffle is the frozen Fisher-Yates permutation") {
  std::vector<std::string> items;
  for (char c = 'a'; c <= 'j'; ++c) items.push_back(std::string(1, c));
  SplitRng rng(42);
  rng.shuffle(items);
  CHECK(items == std::vector<std::string>{"a", "b", "g", "i", "d", "j", "f",
                                          "h", "e", "c"});
}

TEST_CASE("rng normal has sane moments") {
  SplitRng rng(5);
  double sum = 0.0, sq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sq += x * x;
  }
  CHECK(std::abs(sum / n) < 0.03);
  CHECK(std::abs(sq / n - 1.0) < 0.05);
}

TEST_CASE("config parses key = value lines with comments") {
  const auto cfg = KeyValueConfig::from_string(
      "# camera block\n"
      "cam.u0 = 617.930\n"
      "\n"
      "cam.width = 1280   # trailing comment\n"
      "servo.depth_mode = constant\n"
      "flag = true\n"
      "scene.center = 0.342, 0.0, -0.05\n");
  CHECK(cfg.get_double("cam.u0", 0.0) == 617.930);
  CHECK(cfg.get_int("cam.width", 0) == 1280);
  CHECK(cfg.get_string("servo.depth_mode", "") == "constant");
  CHECK(cfg.get_bool("flag", false));
  const auto center = cfg.get_vector<3>({0, 0, 0}, "scene.center");
  CHECK(center[0] == 0.342);
  CHECK(center[2] == -0.05);
  CHECK(cfg.get_double("absent", 7.5) == 7.5);
}

TEST_CASE("config rejects malformed input") {
  CHECK_THROWS_AS(KeyValueConfig::from_string("novalue\n"), ConfigError);
  CHECK_THROWS_AS(KeyValueConfig::from_string("= 3\n"), ConfigError);
  CHECK_THROWS_AS(KeyValueConfig::from_file("/nonexistent/path.cfg"), IoError);
  const auto cfg = KeyValueConfig::from_string("cam.u0 = notanumber\n");
  CHECK_THROWS_AS(cfg.get_double("cam.u0", 0.0), ConfigError);
}

TEST_CASE("config rejects unknown keys against a registry") {
  const auto cfg = KeyValueConfig::from_string("cam.u0 = 1\nmystery = 2\n");
  CHECK_THROWS_AS(cfg.reject_unknown_keys({"cam.u0"}), ConfigError);
  CHECK_NOTHROW(cfg.reject_unknown_keys({"cam.u0", "mystery"}));
}

TEST_CASE("format_double is shortest round-trip") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(-0.5) == "-0.5");
  CHECK(format_double(617.93) == "617.93");
  SplitRng rng(9);
  for (int i = 0; i < 500; ++i) {
    const double x = rng.uniform(-1e6, 1e6);
    const std::string s = format_double(x);
    CHECK(csv_double(s, "test") == x);
  }
}

TEST_CASE("split_csv_line trims fields") {
  const auto fields = split_csv_line("a, b ,c,, d");
  REQUIRE(fields.size() == 5);
  CHECK(fields[0] == "a");
  CHECK(fields[1] == "b");
  CHECK(fields[2] == "c");
  CHECK(fields[3] == "");
  CHECK(fields[4] == "d");
}
