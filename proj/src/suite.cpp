#include "audit/suite.hpp"

#include <charconv>

namespace audit {

namespace {

constexpr std::string_view kTransparentName = "transparent-mersenne61";

// Domain-separation prefixes for the three hash uses.
constexpr std::uint8_t kDsGroup = 0x01;
constexpr std::uint8_t kDsScalar = 0x02;
constexpr std::uint8_t kDsPrf = 0x03;

Scalar reduce_digest(const Digest& d) {
    // big-endian base-256 reduction mod q
    std::uint64_t acc = 0;
    for (auto b : d) {
        unsigned __int128 t = (static_cast<unsigned __int128>(acc) << 8) + b;
        acc = static_cast<std::uint64_t>(t % Scalar::kOrder);
    }
    return Scalar(acc);
}

Scalar hash_with_prefix(std::uint8_t prefix, std::span<const std::uint8_t> data) {
    ByteBuffer buf;
    buf.push(prefix);
    buf.append(data);
    return reduce_digest(buf.digest());
}

void require_same_suite(SuiteId a, SuiteId b) {
    if (a != b) throw std::invalid_argument("suite mismatch");
}

}  // namespace

std::string_view suite_name(SuiteId id) {
    switch (id) {
        case SuiteId::transparent_mersenne61:
            return kTransparentName;
    }
    throw std::invalid_argument("unknown suite id");
}

SuiteId suite_from_name(std::string_view name) {
    if (name == kTransparentName) return SuiteId::transparent_mersenne61;
    throw std::invalid_argument("unknown suite: " + std::string(name));
}

Scalar Scalar::pow(std::uint64_t e) const {
    Scalar result(1);
    Scalar base = *this;
    while (e > 0) {
        if (e & 1) result = result * base;
        base = base * base;
        e >>= 1;
    }
    return result;
}

Scalar Scalar::inverse() const {
    if (is_zero()) throw std::invalid_argument("Scalar::inverse: zero");
    return pow(kOrder - 2);
}

Scalar Scalar::parse(std::string_view s) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || v >= kOrder) {
        throw std::invalid_argument("Scalar::parse: bad value '" + std::string(s) + "'");
    }
    return Scalar(v);
}

GroupElement operator*(const GroupElement& a, const GroupElement& b) {
    require_same_suite(a.suite_, b.suite_);
    return GroupElement(a.suite_, a.log_ + b.log_);
}

TargetElement operator*(const TargetElement& a, const TargetElement& b) {
    require_same_suite(a.suite_, b.suite_);
    return TargetElement(a.suite_, a.log_ + b.log_);
}

GroupElement exp(const GroupElement& base, Scalar e) {
    return GroupElement(base.suite_, base.log_ * e);
}

TargetElement target_exp(const TargetElement& base, Scalar e) {
    return TargetElement(base.suite_, base.log_ * e);
}

namespace {
thread_local std::uint64_t g_pairing_count = 0;
}

std::uint64_t pairing_count() { return g_pairing_count; }
void reset_pairing_count() { g_pairing_count = 0; }

TargetElement pair(const GroupElement& a, const GroupElement& b) {
    require_same_suite(a.suite(), b.suite());
    ++g_pairing_count;
    return TargetElement(a.suite(), a.dlog() * b.dlog());
}

std::string GroupElement::encode() const {
    return std::string(suite_name(suite_)) + ":" + log_.str();
}

std::string TargetElement::encode() const {
    return std::string(suite_name(suite_)) + ":" + log_.str();
}

namespace {

std::pair<SuiteId, Scalar> decode_parts(std::string_view s) {
    auto colon = s.rfind(':');
    if (colon == std::string_view::npos) throw std::invalid_argument("element decode: missing ':'");
    SuiteId id = suite_from_name(s.substr(0, colon));
    Scalar log = Scalar::parse(s.substr(colon + 1));
    return {id, log};
}

}  // namespace

GroupElement GroupElement::decode(std::string_view s) {
    auto [id, log] = decode_parts(s);
    return SuiteParams{id}.from_dlog(log);
}

TargetElement TargetElement::decode(std::string_view s) {
    auto [id, log] = decode_parts(s);
    return SuiteParams{id}.target_from_dlog(log);
}

GroupElement hash_to_group(std::span<const std::uint8_t> data) {
    return GroupElement(SuiteId::transparent_mersenne61, hash_with_prefix(kDsGroup, data));
}

GroupElement hash_to_group(std::string_view data) {
    return hash_to_group(std::span<const std::uint8_t>(
        reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
}

Scalar hash_to_scalar(std::span<const std::uint8_t> data) {
    return hash_with_prefix(kDsScalar, data);
}

Scalar hash_to_scalar(std::string_view data) {
    return hash_to_scalar(std::span<const std::uint8_t>(
        reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
}

Scalar prf(std::span<const std::uint8_t> key, std::span<const std::uint8_t> nonce,
           std::uint64_t index) {
    if (key.size() < 16) throw std::invalid_argument("prf: key shorter than 16 bytes");
    ByteBuffer buf;
    buf.push(kDsPrf);
    buf.append_u64_be(key.size());
    buf.append(key);
    buf.append_u64_be(nonce.size());
    buf.append(nonce);
    buf.append_u64_be(index);
    return reduce_digest(buf.digest());
}

Scalar random_scalar(Rng& rng) { return Scalar(rng.below(Scalar::kOrder)); }

Scalar random_nonzero_scalar(Rng& rng) { return Scalar(1 + rng.below(Scalar::kOrder - 1)); }

}  // namespace audit
