#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "hfce/matrix_io.hpp"

using namespace hfce;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "hfce_test_matrix_io";
  fs::create_directories(dir);
  return dir / name;
}

std::vector<unsigned char> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::uint64_t le64(const std::vector<unsigned char>& b, std::size_t off) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[off + i]) << (8 * i);
  return v;
}

}  // namespace

TEST_CASE("matrix file round trip and layout") {
  CMat m(2, 3);
  m << cplx(1, -2), cplx(0.5, 0), cplx(-3, 1e-300), cplx(4, 4), cplx(0, -0.25), cplx(7.125, 1);
  const fs::path p = scratch("m.bin");
  write_matrix(p.string(), m);
  CHECK(read_matrix(p.string()) == m);

  const auto bytes = slurp(p);
  REQUIRE(bytes.size() == 8 * 8 + 2 * 3 * 16);
  CHECK(std::memcmp(bytes.data(), "HFCEPLT", 8) == 0);
  CHECK(le64(bytes, 0) == kMatrixMagic);
  CHECK(le64(bytes, 8) == kMatrixVersion);
  CHECK(le64(bytes, 16) == 2);
  CHECK(le64(bytes, 24) == 3);
  for (int i = 4; i < 8; ++i) CHECK(le64(bytes, 8 * i) == 0);
  // row-major, re then im
  double v;
  std::memcpy(&v, bytes.data() + 64 + 16, 8);
  CHECK(v == 0.5);
  std::memcpy(&v, bytes.data() + 64 + 3 * 16 + 8, 8);
  CHECK(v == 4.0);
}

TEST_CASE("matrix file errors") {
  const fs::path p = scratch("bad.bin");
  {
    std::ofstream out(p, std::ios::binary);
    out << "not a matrix file at all, definitely not";
  }
  CHECK_THROWS(read_matrix(p.string()));

  CMat m = CMat::Ones(3, 3);
  write_matrix(p.string(), m);
  fs::resize_file(p, fs::file_size(p) - 5);
  CHECK_THROWS(read_matrix(p.string()));
  CHECK_THROWS(read_matrix(scratch("missing.bin").string()));
}

TEST_CASE("pilot sidecar carries the coherence history") {
  AdmmResult r;
  r.pilot = CMat::Identity(2, 4);
  r.best_coherence = 0.5;
  r.best_iteration = 2;
  for (int i = 1; i <= 3; ++i) {
    AdmmIterate it;
    it.iteration = i;
    it.coherence = 0.7 - 0.1 * i;
    it.best_coherence = it.coherence;
    it.residual = 1.0 / i;
    r.history.push_back(it);
  }
  const fs::path p = scratch("pilot.bin");
  save_pilot(p.string(), r, {{"seed", 7}});
  CHECK(read_matrix(p.string()) == r.pilot);
  std::ifstream in(sidecar_path(p.string()));
  const auto j = nlohmann::json::parse(in);
  CHECK(j["seed"] == 7);
  CHECK(j["rows"] == 2);
  CHECK(j["history"].size() == 3);
  CHECK(j["history"][2]["coherence"].get<double>() == doctest::Approx(0.4));
  CHECK(j["final_residual"].get<double>() == doctest::Approx(1.0 / 3));
}
