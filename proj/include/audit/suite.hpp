#pragma once

// Cyclic group with pairing, hashing into groups/scalars, and a keyed PRF.
//
// The transparent suite represents a group element by its discrete log
// modulo q = 2^61 - 1: multiplication is exponent addition and the
// pairing is exponent multiplication into an equally transparent target
// group. Every protocol equation is therefore checkable by plain integer
// arithmetic. Functionally faithful to a pairing group, cryptographically
// a toy — do not deploy it outside tests and simulation.

#include <cstdint>
#include <string>
#include <string_view>

#include "audit/common.hpp"

namespace audit {

enum class SuiteId : std::uint8_t { transparent_mersenne61 = 0 };

std::string_view suite_name(SuiteId id);
SuiteId suite_from_name(std::string_view name);

/// Integer modulo the group order q = 2^61 - 1 (prime).
class Scalar {
public:
    static constexpr std::uint64_t kOrder = (std::uint64_t{1} << 61) - 1;

    constexpr Scalar() = default;
    constexpr explicit Scalar(std::uint64_t v) : v_(v % kOrder) {}

    constexpr std::uint64_t value() const { return v_; }
    constexpr bool is_zero() const { return v_ == 0; }

    friend constexpr Scalar operator+(Scalar a, Scalar b) {
        std::uint64_t s = a.v_ + b.v_;
        if (s >= kOrder) s -= kOrder;
        return Scalar::raw(s);
    }
    friend constexpr Scalar operator-(Scalar a, Scalar b) {
        return Scalar::raw(a.v_ >= b.v_ ? a.v_ - b.v_ : a.v_ + kOrder - b.v_);
    }
    friend constexpr Scalar operator*(Scalar a, Scalar b) {
        unsigned __int128 p = static_cast<unsigned __int128>(a.v_) * b.v_;
        return Scalar::raw(static_cast<std::uint64_t>(p % kOrder));
    }
    friend constexpr bool operator==(Scalar a, Scalar b) { return a.v_ == b.v_; }

    Scalar pow(std::uint64_t e) const;
    Scalar inverse() const;  // throws on zero

    std::string str() const { return std::to_string(v_); }
    static Scalar parse(std::string_view s);

private:
    static constexpr Scalar raw(std::uint64_t v) {
        Scalar s;
        s.v_ = v;
        return s;
    }
    std::uint64_t v_ = 0;
};

/// Element of the source group G. In the transparent suite the stored
/// representation is the discrete log to base g.
class GroupElement {
public:
    constexpr GroupElement() = default;

    SuiteId suite() const { return suite_; }
    Scalar dlog() const { return log_; }  // transparent suite only
    bool is_identity() const { return log_.is_zero(); }

    friend GroupElement operator*(const GroupElement& a, const GroupElement& b);
    friend bool operator==(const GroupElement& a, const GroupElement& b) = default;

    std::string encode() const;
    static GroupElement decode(std::string_view s);

private:
    friend struct SuiteParams;
    friend GroupElement exp(const GroupElement&, Scalar);
    friend GroupElement hash_to_group(std::span<const std::uint8_t>);
    GroupElement(SuiteId id, Scalar log) : suite_(id), log_(log) {}

    SuiteId suite_ = SuiteId::transparent_mersenne61;
    Scalar log_;
};

/// Element of the pairing codomain G_T; discrete log to base pair(g, g).
class TargetElement {
public:
    constexpr TargetElement() = default;

    SuiteId suite() const { return suite_; }
    Scalar dlog() const { return log_; }
    bool is_identity() const { return log_.is_zero(); }

    friend TargetElement operator*(const TargetElement& a, const TargetElement& b);
    friend bool operator==(const TargetElement& a, const TargetElement& b) = default;

    std::string encode() const;
    static TargetElement decode(std::string_view s);

private:
    friend struct SuiteParams;
    friend TargetElement pair(const GroupElement&, const GroupElement&);
    friend TargetElement target_exp(const TargetElement&, Scalar);
    TargetElement(SuiteId id, Scalar log) : suite_(id), log_(log) {}

    SuiteId suite_ = SuiteId::transparent_mersenne61;
    Scalar log_;
};

struct SuiteParams {
    SuiteId id = SuiteId::transparent_mersenne61;
    std::uint64_t order = Scalar::kOrder;
    std::string description = "transparent Mersenne-61 discrete-log suite (test instantiation)";

    GroupElement generator() const { return GroupElement(id, Scalar(1)); }
    GroupElement identity() const { return GroupElement(id, Scalar(0)); }
    TargetElement target_identity() const { return TargetElement(id, Scalar(0)); }
    /// Transparent-suite constructor from a known discrete log (tests, decode).
    GroupElement from_dlog(Scalar log) const { return GroupElement(id, log); }
    TargetElement target_from_dlog(Scalar log) const { return TargetElement(id, log); }
};

GroupElement exp(const GroupElement& base, Scalar e);
TargetElement target_exp(const TargetElement& base, Scalar e);
TargetElement pair(const GroupElement& a, const GroupElement& b);

/// Thread-local tally of pair() evaluations, used to evidence the batch
/// auditing cost reduction.
std::uint64_t pairing_count();
void reset_pairing_count();

GroupElement hash_to_group(std::span<const std::uint8_t> data);
GroupElement hash_to_group(std::string_view data);
Scalar hash_to_scalar(std::span<const std::uint8_t> data);
Scalar hash_to_scalar(std::string_view data);

/// Keyed PRF into the scalar field. Key must be at least 16 bytes.
Scalar prf(std::span<const std::uint8_t> key, std::span<const std::uint8_t> nonce,
           std::uint64_t index);

/// Uniform scalar draws via the deterministic Rng.
Scalar random_scalar(Rng& rng);
Scalar random_nonzero_scalar(Rng& rng);

}  // namespace audit
