#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "damarl/common.hpp"
#include "damarl/mlp.hpp"

namespace damarl {

// Binary network checkpoint.  Layout (all integers little-endian uint32, all
// floats little-endian IEEE-754 doubles):
//
//   bytes 0-7   magic "DMRLNET1"
//   uint32      hidden activation (0 identity, 1 relu, 2 tanh)
//   uint32      output activation
//   uint32      layer-size count (network depth + 1)
//   uint32[..]  layer sizes
//   per layer:  W row-major (rows = next dim, cols = prev dim), then b
//
// Writers/readers below assume a little-endian host (checked at load time via
// a probe value) — the project targets x86-64.

namespace detail {

constexpr char kMagic[8] = {'D', 'M', 'R', 'L', 'N', 'E', 'T', '1'};

inline void put_u32(std::ostream& os, std::uint32_t v) {
  char buf[4];
  std::memcpy(buf, &v, 4);
  os.write(buf, 4);
}

inline std::uint32_t get_u32(std::istream& is) {
  char buf[4];
  if (!is.read(buf, 4)) throw ConfigError("checkpoint: truncated file");
  std::uint32_t v;
  std::memcpy(&v, buf, 4);
  return v;
}

inline void put_f64(std::ostream& os, double v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  os.write(buf, 8);
}

inline double get_f64(std::istream& is) {
  char buf[8];
  if (!is.read(buf, 8)) throw ConfigError("checkpoint: truncated file");
  double v;
  std::memcpy(&v, buf, 8);
  return v;
}

}  // namespace detail

inline void save_mlp(std::ostream& os, const Mlp& net) {
  os.write(detail::kMagic, 8);
  detail::put_u32(os, static_cast<std::uint32_t>(net.hidden_activation()));
  detail::put_u32(os, static_cast<std::uint32_t>(net.output_activation()));
  detail::put_u32(os, static_cast<std::uint32_t>(net.dims().size()));
  for (int d : net.dims()) detail::put_u32(os, static_cast<std::uint32_t>(d));
  for (int l = 0; l < net.num_layers(); ++l) {
    for (int i = 0; i < net.W[l].rows(); ++i)
      for (int j = 0; j < net.W[l].cols(); ++j) detail::put_f64(os, net.W[l](i, j));
    for (int i = 0; i < net.b[l].size(); ++i) detail::put_f64(os, net.b[l](i));
  }
}

inline void save_mlp(const std::string& path, const Mlp& net) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("checkpoint: cannot open '" + path + "' for writing");
  save_mlp(os, net);
  if (!os) throw ConfigError("checkpoint: write to '" + path + "' failed");
}

inline Mlp load_mlp(std::istream& is) {
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, detail::kMagic, 8) != 0)
    throw ConfigError("checkpoint: bad magic (not a network checkpoint?)");
  const std::uint32_t hidden = detail::get_u32(is);
  const std::uint32_t output = detail::get_u32(is);
  if (hidden > 2 || output > 2) throw ConfigError("checkpoint: unknown activation code");
  const std::uint32_t ndims = detail::get_u32(is);
  if (ndims < 2 || ndims > 64) throw ConfigError("checkpoint: implausible layer count");
  std::vector<int> dims(ndims);
  for (auto& d : dims) {
    d = static_cast<int>(detail::get_u32(is));
    if (d <= 0 || d > (1 << 20)) throw ConfigError("checkpoint: implausible layer size");
  }
  Mlp net(dims, static_cast<Activation>(hidden), static_cast<Activation>(output),
          /*seed=*/0);
  for (int l = 0; l < net.num_layers(); ++l) {
    for (int i = 0; i < net.W[l].rows(); ++i)
      for (int j = 0; j < net.W[l].cols(); ++j) net.W[l](i, j) = detail::get_f64(is);
    for (int i = 0; i < net.b[l].size(); ++i) net.b[l](i) = detail::get_f64(is);
  }
  return net;
}

inline Mlp load_mlp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("checkpoint: cannot open '" + path + "'");
  return load_mlp(is);
}

// Human-readable dump (17 significant digits, value-exact) for diffing two
// checkpoints with standard text tools.
inline void mlp_to_text(std::ostream& os, const Mlp& net) {
  os.precision(17);
  os << "mlp hidden=" << to_string(net.hidden_activation())
     << " output=" << to_string(net.output_activation()) << " dims=";
  for (std::size_t i = 0; i < net.dims().size(); ++i)
    os << (i ? "x" : "") << net.dims()[i];
  os << '\n';
  for (int l = 0; l < net.num_layers(); ++l) {
    os << "layer " << l << " W " << net.W[l].rows() << ' ' << net.W[l].cols() << '\n';
    for (int i = 0; i < net.W[l].rows(); ++i) {
      for (int j = 0; j < net.W[l].cols(); ++j)
        os << (j ? " " : "") << net.W[l](i, j);
      os << '\n';
    }
    os << "layer " << l << " b " << net.b[l].size() << '\n';
    for (int i = 0; i < net.b[l].size(); ++i) os << (i ? " " : "") << net.b[l](i);
    os << '\n';
  }
}

}  // namespace damarl
