#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "gnsp/errors.hpp"
#include "gnsp/io.hpp"
#include "gnsp/rng.hpp"

using namespace gnsp;

TEST_CASE("format_double round-trips") {
  for (double x : {0.0, -0.0, 1.0, 0.1, 1.0 / 3.0, 1e-300, 6.02e23, -2.5, 0.05}) {
    const auto s = io::format_double(x);
    REQUIRE(io::parse_double(s).has_value());
    CHECK(*io::parse_double(s) == x);
  }
  CHECK(io::format_double(0.5) == "0.5");
  CHECK(io::format_double(std::numeric_limits<double>::infinity()) == "inf");
}

TEST_CASE("strict numeric parsing") {
  CHECK(io::parse_double(" 2.5 ") == 2.5);
  CHECK_FALSE(io::parse_double("2.5x").has_value());
  CHECK_FALSE(io::parse_double("").has_value());
  CHECK(io::parse_int("-7") == -7);
  CHECK_FALSE(io::parse_int("7.0").has_value());
  CHECK(io::parse_uint("18446744073709551615") == std::numeric_limits<std::uint64_t>::max());
  CHECK_FALSE(io::parse_uint("-1").has_value());
}

TEST_CASE("csv and line splitting") {
  const auto f = io::split_csv("a, b ,,c");
  REQUIRE(f.size() == 4);
  CHECK(f[1] == "b");
  CHECK(f[2] == "");
  const auto lines = io::split_lines("x\r\ny\n\nz");
  REQUIRE(lines.size() == 4);
  CHECK(lines[0] == "x");
  CHECK(lines[2] == "");
  CHECK(lines[3] == "z");
}

TEST_CASE("file io") {
  const auto dir = std::filesystem::temp_directory_path() / "gnsp_io_test";
  std::filesystem::remove_all(dir);
  io::write_file(dir / "a" / "b.txt", "hello\n");
  CHECK(io::read_file(dir / "a" / "b.txt") == "hello\n");
  try {
    io::read_file(dir / "missing.txt");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.kind() == ParseErrorKind::kIo);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("rng streams are deterministic and distinct") {
  Rng a(42, 1), b(42, 1), c(42, 2);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    CHECK(x != c.next_u64());
  }
  CHECK(derive_seed(1, 2) != derive_seed(2, 1));
}

TEST_CASE("rng distributions") {
  Rng r(7);
  const int n = 200000;
  double sum_u = 0.0, sum_e = 0.0;
  std::vector<int> counts(5, 0);
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum_u += u;
    sum_e += r.exponential(2.0);
    ++counts[r.below(5)];
  }
  // 5 sigma bounds
  CHECK(std::abs(sum_u / n - 0.5) < 5 * std::sqrt(1.0 / 12 / n));
  CHECK(std::abs(sum_e / n - 0.5) < 5 * 0.5 / std::sqrt(n));
  for (int c : counts) CHECK(std::abs(c - n / 5.0) < 5 * std::sqrt(n * 0.2 * 0.8));
}
