#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "linreplay/error.hpp"
#include "linreplay/linalg.hpp"
#include "linreplay/rng.hpp"

#define EXPECT_THROW_CODE(stmt, expected_code)                                   \
  do {                                                                           \
    try {                                                                        \
      stmt;                                                                      \
      ADD_FAILURE() << "expected " << ::linreplay::to_string(expected_code);     \
    } catch (const ::linreplay::Error& e) {                                      \
      EXPECT_EQ(e.code(), expected_code) << e.what();                            \
    }                                                                            \
  } while (0)

namespace testutil {

inline const nlohmann::json& reference_constants() {
  static const nlohmann::json j = [] {
    std::ifstream in(std::string(LINREPLAY_FIXTURE_DIR) + "/reference_constants.json");
    std::stringstream ss;
    ss << in.rdbuf();
    return nlohmann::json::parse(ss.str());
  }();
  return j;
}

inline double ref(const std::string& key) { return reference_constants().at(key).get<double>(); }

// Dense null-space projector via a full-pivot LU kernel, independent of the
// SVD path used by the library.
inline linreplay::Matrix dense_null_projector(const linreplay::Matrix& rows) {
  const linreplay::Index d = rows.cols();
  if (rows.rows() == 0) return linreplay::Matrix::Identity(d, d);
  Eigen::FullPivLU<linreplay::Matrix> lu(rows);
  lu.setThreshold(1e-10);
  const linreplay::Matrix k = lu.kernel();
  if (lu.rank() == d) return linreplay::Matrix::Zero(d, d);
  Eigen::HouseholderQR<linreplay::Matrix> qr(k);
  const linreplay::Matrix q = qr.householderQ() * linreplay::Matrix::Identity(d, k.cols());
  return q * q.transpose();
}

}  // namespace testutil
