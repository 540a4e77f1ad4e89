#pragma once

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <string>

#include "safari/error.hpp"
#include "safari/linalg.hpp"

namespace testing {

inline safari::Matrix rows(std::initializer_list<std::initializer_list<double>> values) {
  const auto r = static_cast<Eigen::Index>(values.size());
  const auto c = static_cast<Eigen::Index>(values.begin()->size());
  safari::Matrix m(r, c);
  Eigen::Index i = 0;
  for (const auto& row : values) {
    Eigen::Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

inline safari::Vector vec(std::initializer_list<double> values) {
  safari::Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

template <typename F>
safari::ErrorKind error_kind(F&& f) {
  try {
    f();
  } catch (const safari::Error& e) {
    return e.kind();
  }
  FAIL("expected a safari::Error");
  return safari::ErrorKind::usage;
}

template <typename F>
std::string error_message(F&& f) {
  try {
    f();
  } catch (const safari::Error& e) {
    return e.what();
  }
  FAIL("expected a safari::Error");
  return {};
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("safari_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline bool rel_close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

}  // namespace testing
