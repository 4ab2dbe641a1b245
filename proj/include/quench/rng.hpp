#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace quench {

/// Philox4x32-10 block function (Salmon et al., Random123). Pure: the same
/// (counter, key) always maps to the same output block.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Identifies one random stream: a master seed, a purpose/command domain and
/// an index (usually the replicate number).
struct StreamKey {
    std::uint64_t seed = 0;
    std::uint32_t domain = 0;
    std::uint64_t index = 0;

    friend bool operator==(const StreamKey&, const StreamKey&) = default;
};

/// Counter-based random stream. Satisfies UniformRandomBitGenerator, so it can
/// also drive <random> distributions, although the toolkit uses the member
/// samplers below to stay independent of the standard library's algorithms.
class Stream {
public:
    using result_type = std::uint64_t;

    explicit Stream(StreamKey key);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()();

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    /// Uniform on (0, 1]; safe as a log argument.
    double uniform_pos();
    double normal();
    double rademacher();

    const StreamKey& key() const noexcept { return key_; }

private:
    void refill();

    StreamKey key_;
    std::array<std::uint32_t, 2> philox_key_{};
    std::uint32_t block_ = 0;
    std::array<std::uint32_t, 4> buffer_{};
    int used_ = 4;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

/// A family of streams sharing seed and domain. `at(i)` is the i-th member;
/// `sub(tag)` derives an independent family for a nested purpose.
class StreamFamily {
public:
    constexpr StreamFamily() = default;
    constexpr StreamFamily(std::uint64_t seed, std::uint32_t domain) : seed_(seed), domain_(domain) {}

    Stream at(std::uint64_t index) const { return Stream(StreamKey{seed_, domain_, index}); }
    StreamFamily sub(std::uint32_t tag) const;

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint32_t domain() const noexcept { return domain_; }

private:
    std::uint64_t seed_ = 0;
    std::uint32_t domain_ = 0;
};

}  // namespace quench
