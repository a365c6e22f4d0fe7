#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "vrs/vec3.hpp"

namespace vrs {

// Runs body(i) for i in [0, n). Each index is independent, so results never
// depend on the thread count.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) body(static_cast<std::size_t>(i));
#else
    for (std::size_t i = 0; i < n; ++i) body(i);
#endif
}

inline constexpr std::size_t kReductionChunk = 1024;

// Fixed-order chunked sum: chunk partials are combined left to right.
template <class T>
T deterministic_sum(std::span<const T> values) {
    const std::size_t n_chunks = (values.size() + kReductionChunk - 1) / kReductionChunk;
    std::vector<T> partial(n_chunks, T{});
    parallel_for(n_chunks, [&](std::size_t c) {
        const std::size_t lo = c * kReductionChunk;
        const std::size_t hi = std::min(values.size(), lo + kReductionChunk);
        T acc{};
        for (std::size_t i = lo; i < hi; ++i) acc += values[i];
        partial[c] = acc;
    });
    T total{};
    for (const auto& p : partial) total += p;
    return total;
}

template <class T>
T deterministic_sum(const std::vector<T>& values) {
    return deterministic_sum(std::span<const T>(values));
}

}  // namespace vrs
