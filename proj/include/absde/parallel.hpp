#pragma once

#include <cstddef>
#include <type_traits>
#include <vector>

namespace absde {

/// Fixed chunk length for path-parallel loops. Reductions combine per-chunk
/// partials in chunk order, so results never depend on the worker count.
inline constexpr std::size_t kChunk = 4096;

/// Worker count: hardware concurrency capped by ABSDE_LAB_THREADS when set.
std::size_t worker_count();

/// Override for the worker cap (0 restores the environment default).
void set_worker_cap(std::size_t cap);

/// Runs body(chunk_index, begin, end) over [0, n) split into kChunk pieces.
template <class Body>
void parallel_chunks(std::size_t n, Body&& body);

std::size_t chunk_count(std::size_t n);

namespace detail {
void run_chunks(std::size_t n, void (*fn)(void*, std::size_t, std::size_t, std::size_t), void* ctx);
}

template <class Body>
void parallel_chunks(std::size_t n, Body&& body) {
    auto thunk = [](void* ctx, std::size_t c, std::size_t b, std::size_t e) {
        (*static_cast<std::remove_reference_t<Body>*>(ctx))(c, b, e);
    };
    detail::run_chunks(n, thunk, static_cast<void*>(&body));
}

}  // namespace absde
