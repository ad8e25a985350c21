#include "locrb/run_io.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <stdexcept>

namespace locrb {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::uint64_t fingerprint(const nlohmann::json& config) {
  // nlohmann::json keeps object keys sorted, so dump() is canonical.
  const std::string text = config.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t parse_hex64(const std::string& s) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v, 16);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw std::invalid_argument("bad hex value " + s);
  return v;
}

std::string csv_grid(const std::vector<int>& values, int nx, int ny) {
  if (static_cast<int>(values.size()) != nx * ny) throw std::invalid_argument("grid values do not match nx*ny");
  std::string out;
  for (int ix = 0; ix < nx; ++ix) out += (ix ? "," : "") + std::to_string(ix);
  out += '\n';
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) out += (ix ? "," : "") + std::to_string(values[ix + nx * iy]);
    out += '\n';
  }
  return out;
}

std::string csv_table(const std::vector<std::vector<double>>& rows) {
  std::string out;
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  for (std::size_t j = 0; j < cols; ++j) out += (j ? "," : "") + std::to_string(j);
  out += '\n';
  for (const auto& row : rows) {
    for (std::size_t j = 0; j < row.size(); ++j) out += (j ? "," : "") + format_double(row[j]);
    out += '\n';
  }
  return out;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed for " + path);
}

std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::json RunManifest::to_json() const {
  return {{"command", command},     {"fingerprint", hex64(fingerprint)}, {"seed", seed},
          {"version", kToolVersion}, {"started", started},              {"finished", finished},
          {"files", files},          {"config", config},                {"extra", extra}};
}

}  // namespace locrb
