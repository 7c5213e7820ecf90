#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "rsf/survival.hpp"

namespace testing {

inline std::vector<rsf::Observation> obs(const std::vector<double>& times, const std::vector<int>& status) {
  std::vector<rsf::Observation> out;
  for (std::size_t i = 0; i < times.size(); ++i) out.push_back({times[i], static_cast<std::uint8_t>(status[i])});
  return out;
}

inline std::vector<std::uint8_t> labels(const std::vector<int>& g) { return {g.begin(), g.end()}; }

/// Dataset with exponential times whose rate grows with x1, plus noise columns.
inline rsf::SurvivalDataset synthetic(std::size_t n, std::size_t p, std::uint64_t seed, double censor_rate = 0.4) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  std::exponential_distribution<double> e(1.0);
  std::vector<std::vector<double>> cols(p, std::vector<double>(n));
  std::vector<rsf::Observation> o(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) cols[j][i] = std::round(z(rng) * 10.0) / 10.0;
    const double t = e(rng) / std::exp(cols[0][i]);
    const double c = e(rng) / censor_rate;
    o[i] = {std::min(t, c), static_cast<std::uint8_t>(t <= c)};
  }
  return {std::move(o), std::move(cols)};
}

/// Fresh scratch directory under the system temp path.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("rsf_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
