#include "hfce/rng.hpp"

#include <cmath>

namespace hfce {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
  return splitmix(splitmix(splitmix(master) ^ a) ^ (b * 0xd6e8feb86659fd93ULL));
}

double Rng::uniform(double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  return dist(engine_);
}

double Rng::normal() { return normal_(engine_); }

cplx Rng::complex_normal(double var) {
  const double s = std::sqrt(var / 2.0);
  const double re = normal_(engine_);
  const double im = normal_(engine_);
  return {s * re, s * im};
}

std::size_t Rng::index(std::size_t n) {
  std::uniform_int_distribution<std::size_t> dist(0, n - 1);
  return dist(engine_);
}

bool Rng::coin() { return (engine_() >> 63) != 0; }

}  // namespace hfce
