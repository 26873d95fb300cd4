#include "absde/paths.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <boost/math/special_functions/erf.hpp>

#include "absde/errors.hpp"
#include "absde/parallel.hpp"

namespace absde {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
constexpr char kMagic[8] = {'A', 'B', 'S', 'D', 'E', 'P', 'E', '1'};

// splitmix64 finalizer
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

template <class T>
T to_le(T v) {
    if constexpr (std::endian::native == std::endian::little) {
        return v;
    } else {
        unsigned char b[sizeof(T)];
        std::memcpy(b, &v, sizeof(T));
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
        std::memcpy(&v, b, sizeof(T));
        return v;
    }
}

template <class T>
void put(std::ofstream& os, T v) {
    v = to_le(v);
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw InvalidArgument("truncated ensemble file");
    return to_le(v);
}

void fill_states(PathEnsemble& e) {
    const std::size_t row = e.n_paths * e.d;
    e.states.assign((static_cast<std::size_t>(e.n_steps) + 1) * row, 0.0);
    for (int i = 0; i < e.n_steps; ++i) {
        const double* w = e.states.data() + i * row;
        const double* dw = e.increments.data() + i * row;
        double* next = e.states.data() + (i + 1) * row;
        for (std::size_t q = 0; q < row; ++q) next[q] = w[q] + dw[q];
    }
}

}  // namespace

std::uint64_t stream_key(std::uint64_t seed, std::uint64_t stream) {
    return mix64(seed ^ mix64(stream + kGolden));
}

double counter_uniform(std::uint64_t key, std::uint64_t counter) {
    std::uint64_t bits = mix64(key ^ mix64(counter * kGolden + 0x632BE59BD9B4E019ULL));
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

double normal_quantile(double u) { return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * u); }

PathEnsemble simulate_brownian(const TimeGrid& grid, int d, std::size_t n_paths, std::uint64_t seed, bool antithetic) {
    if (n_paths < 2) throw InvalidArgument("n_paths must be at least 2");
    if (d < 1) throw InvalidArgument("d must be positive");
    if (antithetic && n_paths % 2 != 0) throw OddAntitheticCount("antithetic sampling needs an even path count");
    PathEnsemble e;
    e.h = grid.h;
    e.n_steps = grid.n_total;
    e.d = d;
    e.n_paths = n_paths;
    e.seed = seed;
    e.antithetic = antithetic;
    e.increments.resize(static_cast<std::size_t>(e.n_steps) * n_paths * d);
    const double sq = std::sqrt(grid.h);
    const std::size_t n_steps = static_cast<std::size_t>(e.n_steps);
    parallel_chunks(n_paths, [&](std::size_t, std::size_t b, std::size_t end) {
        for (std::size_t p = b; p < end; ++p) {
            const bool mirror = antithetic && (p % 2 == 1);
            const std::uint64_t key = stream_key(seed, antithetic ? p / 2 : p);
            for (std::size_t i = 0; i < n_steps; ++i) {
                for (int k = 0; k < d; ++k) {
                    double g = sq * normal_quantile(counter_uniform(key, i * d + k));
                    e.increments[(i * n_paths + p) * d + k] = mirror ? -g : g;
                }
            }
        }
    });
    fill_states(e);
    return e;
}

PathEnsemble PathEnsemble::coarsen(int factor) const {
    if (factor < 1 || n_steps % factor != 0) throw InvalidArgument("coarsening factor must divide the step count");
    if (factor == 1) return *this;
    PathEnsemble c;
    c.h = h * factor;
    c.n_steps = n_steps / factor;
    c.d = d;
    c.n_paths = n_paths;
    c.seed = seed;
    c.antithetic = antithetic;
    const std::size_t row = n_paths * d;
    c.increments.assign(static_cast<std::size_t>(c.n_steps) * row, 0.0);
    for (int i = 0; i < c.n_steps; ++i) {
        double* out = c.increments.data() + i * row;
        for (int f = 0; f < factor; ++f) {
            const double* in = increments.data() + (static_cast<std::size_t>(i) * factor + f) * row;
            for (std::size_t q = 0; q < row; ++q) out[q] += in[q];
        }
    }
    // Take states from the fine grid so coarse and fine paths coincide at shared times.
    c.states.resize((static_cast<std::size_t>(c.n_steps) + 1) * row);
    for (int i = 0; i <= c.n_steps; ++i)
        std::memcpy(c.states.data() + i * row, states.data() + static_cast<std::size_t>(i) * factor * row,
                    row * sizeof(double));
    return c;
}

PathEnsemble PathEnsemble::prefix(std::size_t n) const {
    if (n > n_paths || n < 2) throw InvalidArgument("prefix size out of range");
    if (antithetic && n % 2 != 0) throw OddAntitheticCount("antithetic prefix must be even");
    if (n == n_paths) return *this;
    PathEnsemble c;
    c.h = h;
    c.n_steps = n_steps;
    c.d = d;
    c.n_paths = n;
    c.seed = seed;
    c.antithetic = antithetic;
    const std::size_t row = n_paths * d, nrow = n * d;
    c.increments.resize(static_cast<std::size_t>(n_steps) * nrow);
    c.states.resize((static_cast<std::size_t>(n_steps) + 1) * nrow);
    for (int i = 0; i < n_steps; ++i)
        std::memcpy(c.increments.data() + i * nrow, increments.data() + i * row, nrow * sizeof(double));
    for (int i = 0; i <= n_steps; ++i)
        std::memcpy(c.states.data() + i * nrow, states.data() + i * row, nrow * sizeof(double));
    return c;
}

void save_ensemble(const PathEnsemble& e, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InvalidArgument("cannot open " + path + " for writing");
    os.write(kMagic, sizeof kMagic);
    put<std::uint64_t>(os, e.seed);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(e.d));
    put<std::uint32_t>(os, e.antithetic ? 1u : 0u);
    put<std::uint64_t>(os, e.n_paths);
    put<std::uint64_t>(os, static_cast<std::uint64_t>(e.n_steps));
    put<double>(os, e.h);
    for (double v : e.increments) put<double>(os, v);
    if (!os) throw InvalidArgument("failed writing " + path);
}

PathEnsemble load_ensemble(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InvalidArgument("cannot open " + path);
    char magic[8];
    is.read(magic, sizeof magic);
    if (!is || std::memcmp(magic, kMagic, sizeof magic) != 0) throw InvalidArgument(path + " is not an ensemble file");
    PathEnsemble e;
    e.seed = get<std::uint64_t>(is);
    e.d = static_cast<int>(get<std::uint32_t>(is));
    e.antithetic = get<std::uint32_t>(is) != 0;
    e.n_paths = get<std::uint64_t>(is);
    e.n_steps = static_cast<int>(get<std::uint64_t>(is));
    e.h = get<double>(is);
    e.increments.resize(static_cast<std::size_t>(e.n_steps) * e.n_paths * e.d);
    for (double& v : e.increments) v = get<double>(is);
    fill_states(e);
    return e;
}

}  // namespace absde
