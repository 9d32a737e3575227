#include "sqz/rng.hpp"

#include <cmath>
#include <numbers>
#include <thread>
#include <vector>

namespace sqz::rng {

double NormalSource::next() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  const double u1 = rng_.uniform01();
  const double u2 = rng_.uniform01();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_ = radius * std::sin(angle);
  has_cached_ = true;
  return radius * std::cos(angle);
}

namespace {

void fill_chunk_range(std::uint64_t master_seed, std::uint64_t stream_id,
                      std::span<double> out, std::size_t chunk_begin,
                      std::size_t chunk_end) {
  for (std::size_t chunk = chunk_begin; chunk < chunk_end; ++chunk) {
    NormalSource source(chunk_seed(master_seed, stream_id, chunk));
    const std::size_t lo = chunk * kChunkSize;
    const std::size_t hi = std::min(lo + kChunkSize, out.size());
    for (std::size_t i = lo; i < hi; ++i) out[i] = source.next();
  }
}

}  // namespace

void fill_standard_normals(std::uint64_t master_seed, std::uint64_t stream_id,
                           std::span<double> out, int n_threads) {
  if (out.empty()) return;
  const std::size_t n_chunks = (out.size() + kChunkSize - 1) / kChunkSize;
  if (n_threads <= 1 || n_chunks == 1) {
    fill_chunk_range(master_seed, stream_id, out, 0, n_chunks);
    return;
  }
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(n_threads), n_chunks);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t per_worker = (n_chunks + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * per_worker;
    const std::size_t end = std::min(begin + per_worker, n_chunks);
    if (begin >= end) break;
    pool.emplace_back(fill_chunk_range, master_seed, stream_id, out, begin, end);
  }
  for (auto& t : pool) t.join();
}

}  // namespace sqz::rng
