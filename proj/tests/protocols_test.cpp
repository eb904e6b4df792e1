#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "gnsp/errors.hpp"
#include "gnsp/io.hpp"
#include "gnsp/protocols.hpp"

using namespace gnsp;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "gnsp_protocols_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

ParseErrorKind load_error(const std::string& responses, const std::string& block_map, std::size_t* row = nullptr) {
  io::write_file(scratch("r.csv"), responses);
  io::write_file(scratch("b.csv"), block_map);
  try {
    load_experimental_responses(scratch("r.csv"), scratch("b.csv"));
  } catch (const ParseError& e) {
    if (row) *row = e.row();
    return e.kind();
  }
  FAIL("expected a ParseError");
  return ParseErrorKind::kIo;
}

const std::string kBlocks = "roi_index,block\n0,1\n1,2\n";

}  // namespace

TEST_CASE("two-cluster protocol") {
  const auto p = two_cluster_protocol(3);
  REQUIRE(p.stimuli.size() == 2);
  CHECK(p.stimuli[0].targets == std::vector<std::uint32_t>{0, 1, 2});
  CHECK(p.stimuli[1].targets == std::vector<std::uint32_t>{3, 4, 5});
  const auto big = two_cluster_protocol(100);
  const auto map = sbm_block_map(100);
  CHECK(big.stimuli[0].targets.size() == 100);
  for (auto t : big.stimuli[0].targets) CHECK(map[t] == 1);
  for (auto t : big.stimuli[1].targets) CHECK(map[t] == 2);
}

TEST_CASE("mixed-cluster protocol") {
  const auto p = mixed_cluster_protocol(3);
  REQUIRE(p.stimuli.size() == 3);
  CHECK(p.stimuli[0].targets == std::vector<std::uint32_t>{0, 1});
  CHECK(p.stimuli[1].targets == std::vector<std::uint32_t>{2, 3});
  CHECK(p.stimuli[2].targets == std::vector<std::uint32_t>{4, 5});
  const auto q = mixed_cluster_protocol(99);
  const auto map = sbm_block_map(99);
  for (const auto& s : q.stimuli) CHECK(s.targets.size() == 66);
  int in_block1 = 0;
  for (auto t : q.stimuli[1].targets) in_block1 += map[t] == 1;
  CHECK(in_block1 == 33);
  for (int n : {4, 5, 10, 100}) CHECK_NOTHROW(mixed_cluster_protocol(n).validate(4 * static_cast<std::size_t>(n)));
  CHECK_THROWS_AS(mixed_cluster_protocol(2), ParameterError);
  CHECK(protocol_kind_from_string("mixed_cluster") == ProtocolKind::kMixedCluster);
  CHECK_THROWS_AS(protocol_kind_from_string("triangle"), ParameterError);
}

TEST_CASE("custom protocol file") {
  io::write_file(scratch("p.csv"), "label,node\na,0\na,1\nb,5\n");
  const auto p = load_custom_protocol(scratch("p.csv"), 8);
  REQUIRE(p.stimuli.size() == 2);
  CHECK(p.stimuli[1].label == "b");
  CHECK(p.stimuli[1].targets == std::vector<std::uint32_t>{5});
  io::write_file(scratch("p.csv"), "label,node\na,9\n");
  CHECK_THROWS_AS(load_custom_protocol(scratch("p.csv"), 8), ParseError);
}

TEST_CASE("normalization") {
  std::vector<double> v{3, 4};
  normalize_l2(v);
  CHECK(v[0] == doctest::Approx(0.6));
  CHECK(v[1] == doctest::Approx(0.8));
  std::vector<double> z{0, 0};
  CHECK_THROWS_AS(normalize_l2(z), ZeroResponseError);
}

TEST_CASE("response extraction window") {
  SpikeRaster r;
  r.duration = 200.0;
  r.spikes = {{}, {60.0, 70.0, 80.0}, {10.0}, {150.0}};
  const auto resp = extract_response(r, 50.0, 100.0);
  CHECK(resp.values == std::vector<double>{0.0, 1.0, 0.0, 0.0});  // 150 is excluded
  r.spikes = {{50.0, 51.0, 52.0}, {60.0, 61.0, 62.0, 63.0}};
  const auto v = extract_response(r, 50.0);
  CHECK(v.values[0] == doctest::Approx(0.6));
  CHECK(v.values[1] == doctest::Approx(0.8));
  r.spikes = {{10.0}, {160.0}};
  CHECK_THROWS_AS(extract_response(r, 50.0), ZeroResponseError);
}

TEST_CASE("experimental loader happy path") {
  const auto ds = [&] {
    io::write_file(scratch("r.csv"), "trial_id,label,roi_0,roi_1\n0,s1,0.6,0.8\n1,s2,2,0\n");
    io::write_file(scratch("b.csv"), kBlocks);
    return load_experimental_responses(scratch("r.csv"), scratch("b.csv"));
  }();
  REQUIRE(ds.responses.size() == 2);
  CHECK(ds.responses[0].values[1] == doctest::Approx(0.8));
  CHECK(ds.responses[1].values[0] == doctest::Approx(1.0));  // renormalized
  CHECK(ds.block_map == std::vector<int>{1, 2});
  CHECK(ds.source == DataSource::kExperimental);

  // round trip through the writer
  io::write_file(scratch("r2.csv"), format_responses_csv(ds));
  const auto again = load_experimental_responses(scratch("r2.csv"), scratch("b.csv"));
  CHECK(again.responses[0].values == ds.responses[0].values);
}

TEST_CASE("experimental loader errors carry kind and row") {
  std::size_t row = 0;
  CHECK(load_error("trial_id,label,roi_0,roi_1\n0,s4,1,1\n", kBlocks, &row) == ParseErrorKind::kUnknownLabel);
  CHECK(row == 2);
  CHECK(load_error("trial_id,label,roi_0,roi_1\n0,s1,1,x\n", kBlocks) == ParseErrorKind::kNonNumeric);
  CHECK(load_error("trial,label,roi_0,roi_1\n", kBlocks) == ParseErrorKind::kMissingColumn);
  CHECK(load_error("trial_id,label,roi_0,roi_1\n0,s1,1\n", kBlocks) == ParseErrorKind::kMissingColumn);
  CHECK(load_error("trial_id,label,roi_0\n0,s1,1\n", kBlocks) == ParseErrorKind::kLengthMismatch);
  CHECK(load_error("trial_id,label,roi_0,roi_1\n0,s1,1,1\n", "roi_index,block\n0,1\n1,7\n") ==
        ParseErrorKind::kBadBlock);
  CHECK(load_error("trial_id,label,roi_0,roi_1\n0,s1,-1,1\n", kBlocks, &row) == ParseErrorKind::kMalformed);
  CHECK(row == 2);
  CHECK(load_error("trial_id,label,roi_0,roi_1\n0,s1,1,1\n1,s1,0,0\n", kBlocks, &row) == ParseErrorKind::kMalformed);
  CHECK(row == 3);
  std::filesystem::remove(scratch("missing.csv"));
  io::write_file(scratch("b.csv"), kBlocks);
  try {
    load_experimental_responses(scratch("missing.csv"), scratch("b.csv"));
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.kind() == ParseErrorKind::kIo);
  }
}

TEST_CASE("block map round trip") {
  const auto map = sbm_block_map(2);
  CHECK(map == std::vector<int>{1, 1, 2, 2, 3, 3, 4, 4});
  io::write_file(scratch("bm.csv"), format_block_map_csv(map));
  CHECK(load_block_map(scratch("bm.csv")) == map);
}
