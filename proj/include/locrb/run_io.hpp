#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace locrb {

inline constexpr const char* kToolVersion = "0.1.0";

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
/// FNV-1a 64 of the compact canonical JSON text (object keys sorted).
std::uint64_t fingerprint(const nlohmann::json& config);
std::string hex64(std::uint64_t v);
std::uint64_t parse_hex64(const std::string& s);

/// nx × ny integer grid: header of column indices, then row iy = 0..ny-1 with entries T = ix + nx·iy.
std::string csv_grid(const std::vector<int>& values, int nx, int ny);
/// Real-valued table with a header of column indices.
std::string csv_table(const std::vector<std::vector<double>>& rows);

void write_text(const std::string& path, const std::string& content);
std::string utc_timestamp();

struct RunManifest {
  std::string command;
  std::uint64_t fingerprint = 0;
  std::uint64_t seed = 0;
  std::string started;
  std::string finished;
  std::vector<std::string> files;
  nlohmann::json config;
  nlohmann::json extra = nlohmann::json::object();

  nlohmann::json to_json() const;
};

}  // namespace locrb
