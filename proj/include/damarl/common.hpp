#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace damarl {

// Invalid user-supplied configuration (bad dimensions, out-of-range values).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A tensor/buffer argument does not match the expected shape.
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An enumeration or allocation would exceed a stated size cap.
struct SizeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An operation was invoked before its preconditions were met (e.g. sampling
// from a replay buffer that has not reached its warm-up fill level).
struct NotReadyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical failure at runtime (NaN/Inf gradients, degenerate kernels).
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derives an independent child seed from a master seed.  Every consumer of
// randomness in a run (environment, per-agent parameter init, exploration
// noise, replay sampling, ...) gets its own stream id, so adding a consumer
// never perturbs the draws seen by existing ones.
inline std::uint64_t sub_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(master ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
}

// Named streams used throughout the trainer.  Fixed numbering is part of the
// reproducibility contract: a (seed, stream) pair always denotes the same
// sequence.
enum class Stream : std::uint64_t {
  Env = 0,
  ParamInit = 1,   // + agent index
  Noise = 100,     // + agent index
  Gumbel = 200,    // + agent index
  Replay = 300,
  Eval = 400,
  Instance = 500,  // random problem instances for self-checks
};

inline std::uint64_t sub_seed(std::uint64_t master, Stream s, std::uint64_t offset = 0) {
  return sub_seed(master, static_cast<std::uint64_t>(s) + offset);
}

// mt19937_64 engine with hand-rolled variate transforms.  The standard
// distribution objects are implementation-defined, so using them would make
// byte-identical replay across standard libraries impossible.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).  Modulo bias is below 2^-50 for the small n
  // used here (action counts, buffer slots).
  int uniform_int(int n) {
    return static_cast<int>(eng_() % static_cast<std::uint64_t>(n));
  }

  std::size_t uniform_index(std::size_t n) {
    return static_cast<std::size_t>(eng_() % static_cast<std::uint64_t>(n));
  }

  // Standard normal via Box-Muller; the second variate of each pair is
  // cached so draws come in a fixed deterministic order.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform();  // (0, 1]; keeps log() finite
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Standard Gumbel(0,1) variate: -log(-log(U)).
  double gumbel() {
    double u = uniform();
    if (u < 1e-300) u = 1e-300;  // guard the double log
    return -std::log(-std::log(u));
  }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2& operator+=(const Vec2& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double squared_norm() const { return x * x + y * y; }
  double norm() const { return std::sqrt(squared_norm()); }
};

inline std::string format_size(std::uint64_t n) { return std::to_string(n); }

}  // namespace damarl
