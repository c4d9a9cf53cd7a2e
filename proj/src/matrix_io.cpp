#include "hfce/matrix_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace hfce {

namespace {

void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<unsigned char, 8> b{};
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b.data()), 8);
}

std::uint64_t get_u64(std::istream& in, const std::string& path) {
  std::array<unsigned char, 8> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 8)) throw std::runtime_error("truncated matrix file '" + path + "'");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

void put_f64(std::ostream& out, double x) { put_u64(out, std::bit_cast<std::uint64_t>(x)); }

double get_f64(std::istream& in, const std::string& path) { return std::bit_cast<double>(get_u64(in, path)); }

}  // namespace

void write_matrix(const std::string& path, const CMat& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write matrix file '" + path + "'");
  put_u64(out, kMatrixMagic);
  put_u64(out, kMatrixVersion);
  put_u64(out, static_cast<std::uint64_t>(m.rows()));
  put_u64(out, static_cast<std::uint64_t>(m.cols()));
  for (int i = 0; i < 4; ++i) put_u64(out, 0);
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      put_f64(out, m(r, c).real());
      put_f64(out, m(r, c).imag());
    }
  if (!out) throw std::runtime_error("write failed for matrix file '" + path + "'");
}

CMat read_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open matrix file '" + path + "'");
  if (get_u64(in, path) != kMatrixMagic) throw std::runtime_error("bad magic in matrix file '" + path + "'");
  const std::uint64_t version = get_u64(in, path);
  if (version != kMatrixVersion)
    throw std::runtime_error("unsupported matrix file version " + std::to_string(version) + " in '" + path + "'");
  const std::uint64_t rows = get_u64(in, path);
  const std::uint64_t cols = get_u64(in, path);
  for (int i = 0; i < 4; ++i) get_u64(in, path);
  if (rows > (1u << 20) || cols > (1u << 20)) throw std::runtime_error("implausible matrix size in '" + path + "'");
  CMat m(rows, cols);
  for (std::uint64_t r = 0; r < rows; ++r)
    for (std::uint64_t c = 0; c < cols; ++c) {
      const double re = get_f64(in, path);
      const double im = get_f64(in, path);
      m(r, c) = {re, im};
    }
  if (in.peek() != std::char_traits<char>::eof()) throw std::runtime_error("trailing bytes in matrix file '" + path + "'");
  return m;
}

std::string sidecar_path(const std::string& matrix_path) { return matrix_path + ".json"; }

nlohmann::json admm_history_json(const AdmmResult& result) {
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& it : result.history)
    hist.push_back({{"iteration", it.iteration},
                    {"rho", it.rho},
                    {"xi_max", it.xi_max},
                    {"residual", it.residual},
                    {"coherence", it.coherence},
                    {"best_coherence", it.best_coherence},
                    {"max_row_power_error", it.max_row_power_error}});
  return hist;
}

void save_pilot(const std::string& path, const AdmmResult& result, const nlohmann::json& extra) {
  write_matrix(path, result.pilot);
  nlohmann::json j = extra;
  j["rows"] = result.pilot.rows();
  j["cols"] = result.pilot.cols();
  j["best_coherence"] = result.best_coherence;
  j["best_iteration"] = result.best_iteration;
  j["final_residual"] = result.history.empty() ? 0.0 : result.history.back().residual;
  j["history"] = admm_history_json(result);
  const std::string side = sidecar_path(path);
  std::ofstream out(side, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write sidecar '" + side + "'");
  out << j.dump(2) << '\n';
}

}  // namespace hfce
