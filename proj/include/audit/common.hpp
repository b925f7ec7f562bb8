#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace audit {

/// 32-byte hash output used for block hashes, MHT nodes, and file ids.
using Digest = std::array<std::uint8_t, 32>;

Digest sha256(std::span<const std::uint8_t> data);
Digest sha256(std::string_view data);

std::string to_hex(std::span<const std::uint8_t> bytes);
std::string to_hex(const Digest& d);
std::vector<std::uint8_t> from_hex(std::string_view hex);
Digest digest_from_hex(std::string_view hex);

/// Incremental byte buffer for building hash inputs.
class ByteBuffer {
public:
    void push(std::uint8_t b) { data_.push_back(b); }
    void append(std::span<const std::uint8_t> bytes) {
        data_.insert(data_.end(), bytes.begin(), bytes.end());
    }
    void append(std::string_view s) {
        data_.insert(data_.end(), s.begin(), s.end());
    }
    void append_u64_be(std::uint64_t v) {
        for (int i = 7; i >= 0; --i) data_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    std::span<const std::uint8_t> bytes() const { return data_; }
    Digest digest() const { return sha256(bytes()); }

private:
    std::vector<std::uint8_t> data_;
};

/// Deterministic RNG. Bounded draws use rejection sampling so the
/// output stream depends only on the seed, not on the platform's
/// distribution implementation.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // uniform in [0, bound)
    std::uint64_t below(std::uint64_t bound) {
        if (bound == 0) throw std::invalid_argument("Rng::below: zero bound");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t v;
        do {
            v = eng_();
        } while (v >= limit);
        return v % bound;
    }

    std::vector<std::uint8_t> bytes(std::size_t n) {
        std::vector<std::uint8_t> out(n);
        for (auto& b : out) b = static_cast<std::uint8_t>(eng_() & 0xff);
        return out;
    }

private:
    std::mt19937_64 eng_;
};

}  // namespace audit
