#ifndef SIDESTEP_RNG_HPP
#define SIDESTEP_RNG_HPP

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace sidestep {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Counter-based random stream. A stream is identified by a key built from
/// (seed, indices...); the i-th draw is a pure function of (key, i), so any
/// sample can be regenerated independently of the order in which samples
/// are produced or the number of threads producing them.
class random_stream {
public:
    using result_type = std::uint64_t;

    explicit random_stream(std::uint64_t key) noexcept : key_(key) {}

    random_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept
        : key_(mix64(seed + 0x9e3779b97f4a7c15ULL))
    {
        for (auto p : path)
            key_ = mix64(key_ ^ mix64(p + 0x632be59bd9b4e019ULL));
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept
    {
        ++counter_;
        return mix64(key_ + counter_ * 0x9e3779b97f4a7c15ULL);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, bound) by rejection; bound must be positive.
    std::uint64_t below(std::uint64_t bound) noexcept
    {
        const std::uint64_t limit = max() - max() % bound;
        std::uint64_t x;
        do {
            x = (*this)();
        } while (x >= limit);
        return x % bound;
    }

    bool bernoulli(double p) noexcept { return uniform() < p; }

    std::uint64_t key() const noexcept { return key_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace sidestep

#endif // SIDESTEP_RNG_HPP
