#pragma once

#include <cstddef>
#include <vector>

namespace spider {

/// Deterministic chunked reduction: per-index terms are accumulated into
/// fixed-size chunk partials, and the partials are summed in chunk order.
/// The result is bit-identical whether the chunks run on one thread or
/// many, so the parallel kernels and their serial reference produce the
/// same value.
template <class T, class PerIndex>
T chunked_accumulate(std::size_t n, PerIndex&& term, bool parallel,
                     std::size_t chunk_size = 4096)
{
    if (n == 0) return T{};
    if (chunk_size == 0) chunk_size = 1;
    const std::size_t chunks = (n + chunk_size - 1) / chunk_size;
    std::vector<T> partials(chunks, T{});

#if defined(_OPENMP)
#pragma omp parallel for schedule(static) if (parallel)
#endif
    for (long long c = 0; c < static_cast<long long>(chunks); ++c) {
        const std::size_t begin = static_cast<std::size_t>(c) * chunk_size;
        const std::size_t end = begin + chunk_size < n ? begin + chunk_size : n;
        T acc{};
        for (std::size_t i = begin; i < end; ++i) acc += term(i);
        partials[static_cast<std::size_t>(c)] = acc;
    }

    T total{};
    for (const T& part : partials) total += part;
    return total;
}

}  // namespace spider
