#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

namespace seqcore {

// Worker count used by the evaluators. Defaults to $SEQCORE_THREADS, else 1.
unsigned thread_count();
void set_thread_count(unsigned threads);

// Fixed chunk size; reductions combine chunk partials in chunk order so the
// result never depends on the worker count.
inline constexpr std::size_t kChunkSize = 4096;

inline std::size_t chunk_count(std::size_t count) { return (count + kChunkSize - 1) / kChunkSize; }

// Calls fn(chunk, begin, end) for every chunk of [0, count), possibly concurrently.
void for_each_chunk(std::size_t count, const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

// Derives an independent 64-bit stream seed (splitmix64 finalizer over seed ^ salt).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt);

}  // namespace seqcore
