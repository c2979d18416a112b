#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace greet {

// Dense matrices are row-major throughout: rows are nodes, columns features.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Bad or inconsistent input data (malformed files, shape mismatches, invalid ids).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// A computation produced NaN/Inf or otherwise left the numeric domain.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// ---------------------------------------------------------------------------
// Seeding and counter-based random streams.
//
// Training derives every random draw from (run seed, purpose tag, step
// indices), so any step can be recomputed in isolation and a resumed run
// replays the exact same stream.

std::uint64_t splitmix64(std::uint64_t x);

// Combines a seed with tag/indices into a fresh 64-bit stream key.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag,
                          std::uint64_t a = 0, std::uint64_t b = 0,
                          std::uint64_t c = 0);

// Maps a 64-bit word to the open interval (0,1).
double to_open01(std::uint64_t x);

// i-th variate of the counter-based uniform(0,1) stream with the given key.
inline double counter_uniform(std::uint64_t key, std::uint64_t i) {
  return to_open01(splitmix64(key ^ (i * 0x9e3779b97f4a7c15ull)));
}

// Stream tags (arbitrary distinct constants).
namespace rng_tag {
inline constexpr std::uint64_t init = 1;
inline constexpr std::uint64_t gumbel = 2;
inline constexpr std::uint64_t augment = 3;
inline constexpr std::uint64_t pivots = 4;
inline constexpr std::uint64_t batch = 5;
inline constexpr std::uint64_t knn = 6;
inline constexpr std::uint64_t synth = 7;
inline constexpr std::uint64_t attack = 8;
inline constexpr std::uint64_t simhist = 9;
inline constexpr std::uint64_t eval = 10;
}  // namespace rng_tag

// ---------------------------------------------------------------------------
// Threading. A global cap (default: hardware concurrency) bounds the worker
// count; parallel_for partitions [0,count) statically so results never depend
// on the number of threads.

void set_max_threads(int n);
int max_threads();
void parallel_for(std::int64_t count, const std::function<void(std::int64_t, std::int64_t)>& body);

// ---------------------------------------------------------------------------
// Logging, controlled by the GREET_LOG environment variable (error|info|debug).

enum class LogLevel { error = 0, info = 1, debug = 2 };
LogLevel log_level();
void log_msg(LogLevel level, const std::string& msg);

// ---------------------------------------------------------------------------
// File helpers. Writers go through a temp file and rename so an interrupted
// run never leaves a partial artifact behind.

void atomic_write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);
bool file_exists(const std::string& path);

// Shortest decimal form that round-trips a double exactly.
std::string format_double(double v);

// FNV-1a over a byte stream; used for cache keys and config hashes.
class Fnv1a {
 public:
  void update(const void* data, std::size_t n);
  void update(const std::string& s) { update(s.data(), s.size()); }
  template <typename T>
  void update_pod(const T& v) {
    update(&v, sizeof(T));
  }
  std::uint64_t digest() const { return state_; }
  std::string hex_digest() const;

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ull;
};

}  // namespace greet
