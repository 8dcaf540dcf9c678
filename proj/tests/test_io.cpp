#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include "mixkrr/error.hpp"
#include "mixkrr/io.hpp"

using namespace mixkrr;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("mixkrr_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Dataset sample(std::size_t n, std::uint64_t seed) {
  const auto model = SpectralModel::brownian(200);
  const auto target = synthesize_target(model, 1.0, CoefficientRule::inverse(), 200);
  return generate(ProcessSpec::make(GaussCopulaAR1{0.7}, 0.3), target, model, n, seed);
}

}  // namespace

TEST_CASE("doubles round trip through text") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::uint64_t> bits;
  int checked = 0;
  while (checked < 20000) {
    const auto b = bits(rng);
    double v;
    std::memcpy(&v, &b, sizeof v);
    if (!std::isfinite(v)) continue;
    const auto back = parse_double(format_double(v));
    REQUIRE(back.has_value());
    CHECK(std::memcmp(&*back, &v, sizeof v) == 0);
    ++checked;
  }
  for (double v : {0.0, -0.0, 1e-320, std::numeric_limits<double>::max(), 0.1})
    CHECK(*parse_double(format_double(v)) == v);
}

TEST_CASE("parse_double is strict") {
  CHECK(parse_double("1.5") == 1.5);
  CHECK(parse_double("-2e-3") == -2e-3);
  CHECK_FALSE(parse_double("").has_value());
  CHECK_FALSE(parse_double("1.5x").has_value());
  CHECK_FALSE(parse_double("abc").has_value());
  CHECK_FALSE(parse_double("1.5 ").has_value());
}

TEST_CASE("dataset round trip with sidecar") {
  const auto dir = temp_dir("roundtrip");
  const auto d = sample(500, 42);
  const nlohmann::json model = {{"note", "opaque"}};
  save_dataset(d, dir / "d.csv", model);
  CHECK(fs::exists(dir / "d.json"));
  DatasetMeta meta;
  const auto back = load_dataset(dir / "d.csv", &meta);
  CHECK(back.x == d.x);
  CHECK(back.y == d.y);
  CHECK(back.seed == 42);
  CHECK(back.clip == d.clip);
  CHECK(meta.n == 500);
  CHECK(meta.spec.name() == "ar1");
  REQUIRE(meta.model.has_value());
  CHECK(*meta.model == model);

  // Saving the loaded copy reproduces the files byte for byte.
  save_dataset(back, dir / "e.csv", meta.model);
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p);
    return std::string((std::istreambuf_iterator<char>(in)), {});
  };
  CHECK(slurp(dir / "d.csv") == slurp(dir / "e.csv"));
  CHECK(slurp(dir / "d.json") == slurp(dir / "e.json"));
}

TEST_CASE("dataset without sidecar") {
  const auto dir = temp_dir("bare");
  std::ofstream(dir / "bare.csv") << "index,x,y\n0,0.25,1\n1,0.5,2\n";
  DatasetMeta meta;
  const auto d = load_dataset(dir / "bare.csv", &meta);
  CHECK(d.x == std::vector<double>{0.25, 0.5});
  CHECK(d.y == std::vector<double>{1.0, 2.0});
  CHECK(meta.n == 2);
  CHECK_FALSE(meta.model.has_value());
}

TEST_CASE("dataset parse errors carry line numbers") {
  const auto dir = temp_dir("errors");
  auto expect_line = [&](const std::string& text, std::size_t line) {
    std::ofstream(dir / "t.csv") << text;
    try {
      load_dataset(dir / "t.csv");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == line);
    }
  };
  expect_line("", 1);
  expect_line("i,x,y\n", 1);
  expect_line("index,x,y\n0,0.1,0.2\n1,0.1\n", 3);
  expect_line("index,x,y\n0,0.1,0.2\n1,0.3,nan?\n", 3);
  expect_line("index,x,y\n0,0.1,0.2\n2,0.3,0.4\n", 3);
  CHECK_THROWS_AS(load_dataset(dir / "nope.csv"), InputError);
}

TEST_CASE("sidecar row count must match") {
  const auto dir = temp_dir("mismatch");
  save_dataset(sample(10, 1), dir / "d.csv");
  std::ofstream(dir / "d.csv") << "index,x,y\n0,0.1,0.2\n";
  CHECK_THROWS_AS(load_dataset(dir / "d.csv"), ParseError);
}

TEST_CASE("json file helpers") {
  const auto dir = temp_dir("json");
  write_text_file(dir / "a.json", R"({"k": [1, 2]})");
  CHECK(read_json_file(dir / "a.json").at("k").size() == 2);
  write_text_file(dir / "b.json", "{not json");
  CHECK_THROWS_AS(read_json_file(dir / "b.json"), ParseError);
  CHECK_THROWS_AS(read_json_file(dir / "c.json"), InputError);
}
