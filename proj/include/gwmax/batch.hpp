#pragma once

#include <cstdint>
#include <exception>
#include <vector>

#include "gwmax/rng.hpp"

namespace gwmax {

/// Draws per random stream. A batch of `count` draws is cut into fixed-size
/// chunks; chunk c always uses Rng::for_stream(seed, stream, c), so results
/// do not depend on the number of threads or on scheduling.
inline constexpr std::size_t batch_chunk = 256;

/// Reference implementation: chunks in order on the calling thread.
template <class T, class Draw>
std::vector<T> run_batch_serial(std::size_t count, std::uint64_t seed, std::uint64_t stream, Draw&& draw)
{
    std::vector<T> out;
    out.reserve(count);
    const std::size_t chunks = (count + batch_chunk - 1) / batch_chunk;
    for (std::size_t c = 0; c < chunks; ++c) {
        Rng rng = Rng::for_stream(seed, stream, c);
        const std::size_t end = std::min(count, (c + 1) * batch_chunk);
        for (std::size_t i = c * batch_chunk; i < end; ++i) out.push_back(draw(rng));
    }
    return out;
}

/// OpenMP version of run_batch_serial; bit-identical output. If draws
/// throw, the exception of the lowest-numbered failing chunk is rethrown.
template <class T, class Draw>
std::vector<T> run_batch(std::size_t count, std::uint64_t seed, std::uint64_t stream, Draw&& draw)
{
    const std::size_t chunks = (count + batch_chunk - 1) / batch_chunk;
    std::vector<std::vector<T>> parts(chunks);
    std::vector<std::exception_ptr> errors(chunks);
    const auto n_chunks = static_cast<std::int64_t>(chunks);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t ci = 0; ci < n_chunks; ++ci) {
        const auto c = static_cast<std::size_t>(ci);
        try {
            Rng rng = Rng::for_stream(seed, stream, c);
            const std::size_t end = std::min(count, (c + 1) * batch_chunk);
            parts[c].reserve(end - c * batch_chunk);
            for (std::size_t i = c * batch_chunk; i < end; ++i) parts[c].push_back(draw(rng));
        } catch (...) {
            errors[c] = std::current_exception();
        }
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    std::vector<T> out;
    out.reserve(count);
    for (auto& part : parts) {
        for (auto& x : part) out.push_back(std::move(x));
    }
    return out;
}

}  // namespace gwmax
