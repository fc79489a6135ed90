#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "prognos/errors.hpp"
#include "prognos/matrix.hpp"

namespace prognos::detail {

using Json = nlohmann::ordered_json;

// Row-major {"rows", "cols", "data"}. nlohmann prints the shortest decimal
// that round-trips, so values survive a write/read cycle bit-for-bit.
inline Json matrix_to_json(const Matrix& m) {
  Json node;
  node["rows"] = m.rows();
  node["cols"] = m.cols();
  node["data"] = m.data();
  return node;
}

inline Matrix matrix_from_json(const Json& node, const std::string& what) {
  try {
    const auto rows = node.at("rows").get<std::size_t>();
    const auto cols = node.at("cols").get<std::size_t>();
    auto data = node.at("data").get<std::vector<double>>();
    if (data.size() != rows * cols) {
      throw DataError(what + ": data length does not match rows*cols");
    }
    Matrix m(rows, cols);
    m.data() = std::move(data);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(what + ": " + e.what());
  }
}

inline Json parse_json(std::string_view text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(what + " is not valid JSON: " + e.what());
  }
}

}  // namespace prognos::detail
