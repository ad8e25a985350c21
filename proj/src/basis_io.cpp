#include "locrb/basis_io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

namespace locrb {

namespace {

constexpr char kMagic[8] = {'L', 'O', 'C', 'R', 'B', 'B', 'A', 'S'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <class T>
  T get() {
    if (pos_ + sizeof(T) > bytes_.size()) throw ConfigError("basis container is truncated");
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }
  bool at_end() const { return pos_ == bytes_.size(); }

private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_basis(const ReducedBasis& rb, const GridHierarchy& grid, std::uint64_t fingerprint) {
  std::string out(kMagic, sizeof kMagic);
  put(out, kVersion);
  put(out, fingerprint);
  put(out, rb.seed());
  put(out, static_cast<std::int32_t>(grid.nx()));
  put(out, static_cast<std::int32_t>(grid.ny()));
  put(out, static_cast<std::int32_t>(grid.m()));
  for (int T = 0; T < rb.num_subdomains(); ++T) {
    put(out, static_cast<std::int32_t>(rb.size(T)));
    for (BasisTag tag : rb.tags(T)) put(out, static_cast<std::uint8_t>(tag));
    const Matrix& B = rb.vectors(T);
    out.append(reinterpret_cast<const char*>(B.data()), sizeof(double) * static_cast<std::size_t>(B.size()));
  }
  return out;
}

BasisFile deserialize_basis(const std::string& bytes, const Discretization& disc) {
  if (bytes.size() < sizeof kMagic || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
    throw ConfigError("not a basis container (bad magic header)");
  Reader in(bytes);
  for (std::size_t i = 0; i < sizeof kMagic; ++i) in.get<char>();
  const auto version = in.get<std::uint32_t>();
  if (version != kVersion) throw ConfigError("unsupported basis container version " + std::to_string(version));
  BasisFile file;
  file.fingerprint = in.get<std::uint64_t>();
  const auto seed = in.get<std::uint64_t>();
  const int nx = in.get<std::int32_t>(), ny = in.get<std::int32_t>(), m = in.get<std::int32_t>();
  const auto& g = disc.grid();
  if (nx != g.nx() || ny != g.ny() || m != g.m())
    throw ConfigError("basis grid " + std::to_string(nx) + "x" + std::to_string(ny) + " (m=" + std::to_string(m) +
                      ") does not match the problem grid");
  file.basis = ReducedBasis(disc, seed);
  const int n = g.dofs_per_subdomain();
  for (int T = 0; T < g.num_subdomains(); ++T) {
    const int k = in.get<std::int32_t>();
    if (k < 0 || k > n) throw ConfigError("corrupt basis container (vector count)");
    std::vector<BasisTag> tags;
    for (int j = 0; j < k; ++j) {
      const auto t = in.get<std::uint8_t>();
      if (t > 2) throw ConfigError("corrupt basis container (tag)");
      tags.push_back(static_cast<BasisTag>(t));
    }
    for (int j = 0; j < k; ++j) {
      Vector v(n);
      for (int i = 0; i < n; ++i) v[i] = in.get<double>();
      file.basis.append_raw(T, v, tags[j]);
    }
  }
  if (!in.at_end()) throw ConfigError("corrupt basis container (trailing bytes)");
  return file;
}

void save_basis(const std::string& path, const ReducedBasis& rb, const GridHierarchy& grid, std::uint64_t fingerprint) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  const std::string bytes = serialize_basis(rb, grid, fingerprint);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path);
}

BasisFile load_basis(const std::string& path, const Discretization& disc) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open basis file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_basis(ss.str(), disc);
}

}  // namespace locrb
