#include "audit/protocol.hpp"

#include <algorithm>

namespace audit {

namespace {
constexpr std::uint8_t kDsBlockContent = 0x10;
constexpr std::uint8_t kDsUid = 0x11;
}  // namespace

std::string PublicKey::fingerprint() const {
    ByteBuffer buf;
    buf.append(v.encode());
    for (const auto& uj : u) {
        buf.push(0x1f);
        buf.append(uj.encode());
    }
    return to_hex(buf.digest());
}

Digest block_content_hash(const Block& b) {
    ByteBuffer buf;
    buf.push(kDsBlockContent);
    buf.append_u64_be(b.raw_len);
    for (const auto& m : b.sectors) buf.append_u64_be(m.value());
    return buf.digest();
}

GroupElement block_group_hash(const Block& b) {
    Digest h = block_content_hash(b);
    return hash_to_group(std::span<const std::uint8_t>(h));
}

Digest block_leaf_digest(const Block& b) {
    return sha256(block_group_hash(b).encode());
}

std::string_view reject_reason_name(RejectReason r) {
    switch (r) {
        case RejectReason::malformed: return "malformed";
        case RejectReason::root_signature: return "root_signature";
        case RejectReason::path: return "path";
        case RejectReason::equation: return "equation";
    }
    return "unknown";
}

const Block& StoredFile::block_at(std::size_t i) const {
    if (i >= manifest.size()) throw std::out_of_range("StoredFile::block_at");
    return blocks.at(manifest[i]);
}

const BlockTag& StoredFile::tag_at(std::size_t i) const {
    if (i >= manifest.size()) throw std::out_of_range("StoredFile::tag_at");
    return tags.at(manifest[i]);
}

GroupElement StoredFile::h_at(std::size_t i) const {
    if (i >= manifest.size()) throw std::out_of_range("StoredFile::h_at");
    auto it = block_h.find(manifest[i]);
    if (it != block_h.end()) return it->second;
    return block_group_hash(blocks.at(manifest[i]));
}

std::pair<Keypair, PublicKey> keygen(Rng& rng, std::size_t s, const SuiteParams& suite) {
    if (s < 1) throw std::invalid_argument("keygen: sector count must be >= 1");
    Keypair kp;
    kp.x = random_nonzero_scalar(rng);
    kp.ssk_seed = rng.bytes(32);

    PublicKey pk;
    pk.suite = suite;
    pk.v = exp(suite.generator(), kp.x);
    pk.u.reserve(s);
    std::vector<std::uint64_t> seen;
    while (pk.u.size() < s) {
        Scalar e = random_nonzero_scalar(rng);
        if (std::find(seen.begin(), seen.end(), e.value()) != seen.end()) continue;
        seen.push_back(e.value());
        pk.u.push_back(exp(suite.generator(), e));
    }
    return {kp, pk};
}

namespace {

Scalar sector_from_bytes(std::span<const std::uint8_t> bytes) {
    std::uint64_t v = 0;
    for (auto b : bytes) v = (v << 8) | b;
    return Scalar(v);
}

void sector_to_bytes(Scalar m, std::size_t sector_bytes, std::vector<std::uint8_t>& out) {
    std::uint64_t v = m.value();
    for (std::size_t i = 0; i < sector_bytes; ++i) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * (sector_bytes - 1 - i))));
    }
}

std::string make_uid(std::span<const std::uint8_t> salt, std::uint64_t seq,
                     std::span<const Scalar> sectors) {
    ByteBuffer buf;
    buf.push(kDsUid);
    buf.append_u64_be(salt.size());
    buf.append(salt);
    buf.append_u64_be(seq);
    for (const auto& m : sectors) buf.append_u64_be(m.value());
    return to_hex(buf.digest());
}

}  // namespace

std::vector<Block> encode_file(std::span<const std::uint8_t> data, const EncodingParams& params,
                               std::span<const std::uint8_t> uid_salt) {
    if (params.s < 1 || params.sector_bytes < 1 || params.sector_bytes > 7) {
        throw std::invalid_argument("encode_file: bad encoding params");
    }
    std::vector<std::uint8_t> content;
    content.reserve(8 + data.size());
    for (int i = 7; i >= 0; --i) {
        content.push_back(static_cast<std::uint8_t>(data.size() >> (8 * i)));
    }
    content.insert(content.end(), data.begin(), data.end());

    const std::size_t block_bytes = params.block_bytes();
    const std::size_t n = (content.size() + block_bytes - 1) / block_bytes;
    const std::size_t unpadded = content.size();
    content.resize(n * block_bytes, 0);

    std::vector<Block> blocks;
    blocks.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Block b;
        b.sectors.reserve(params.s);
        for (std::size_t j = 0; j < params.s; ++j) {
            auto off = i * block_bytes + j * params.sector_bytes;
            b.sectors.push_back(sector_from_bytes(
                std::span<const std::uint8_t>(content).subspan(off, params.sector_bytes)));
        }
        b.raw_len = std::min(block_bytes, unpadded - std::min(unpadded, i * block_bytes));
        b.uid = make_uid(uid_salt, i, b.sectors);
        blocks.push_back(std::move(b));
    }
    return blocks;
}

std::vector<std::uint8_t> decode_file(std::span<const Block> blocks) {
    if (blocks.empty()) throw std::invalid_argument("decode_file: no blocks");
    // sector width is fixed per deployment; infer the canonical 7-byte
    // sectors used by the transparent suite
    const std::size_t sector_bytes = 7;
    std::vector<std::uint8_t> content;
    for (const auto& b : blocks) {
        for (const auto& m : b.sectors) sector_to_bytes(m, sector_bytes, content);
    }
    if (content.size() < 8) throw std::invalid_argument("decode_file: corrupt length prefix");
    std::uint64_t len = 0;
    for (int i = 0; i < 8; ++i) len = (len << 8) | content[i];
    if (len > content.size() - 8) throw std::invalid_argument("decode_file: corrupt length prefix");
    return {content.begin() + 8, content.begin() + 8 + static_cast<std::ptrdiff_t>(len)};
}

Block encode_block(std::span<const std::uint8_t> data, const EncodingParams& params,
                   std::span<const std::uint8_t> uid_salt) {
    if (data.size() > params.block_bytes()) {
        throw std::invalid_argument("encode_block: data exceeds one block");
    }
    std::vector<std::uint8_t> content(data.begin(), data.end());
    content.resize(params.block_bytes(), 0);
    Block b;
    b.raw_len = data.size();
    for (std::size_t j = 0; j < params.s; ++j) {
        b.sectors.push_back(sector_from_bytes(
            std::span<const std::uint8_t>(content).subspan(j * params.sector_bytes,
                                                           params.sector_bytes)));
    }
    b.uid = make_uid(uid_salt, 0, b.sectors);
    return b;
}

BlockTag tag_block(const Keypair& kp, const PublicKey& pk, const Block& b) {
    if (b.sectors.size() != pk.sectors()) throw std::invalid_argument("tag_block: sector count");
    GroupElement base = block_group_hash(b);
    for (std::size_t j = 0; j < b.sectors.size(); ++j) {
        base = base * exp(pk.u[j], b.sectors[j]);
    }
    return BlockTag{exp(base, kp.x)};
}

bool verify_block_tag(const PublicKey& pk, const Block& b, const BlockTag& tag) {
    if (b.sectors.size() != pk.sectors()) return false;
    GroupElement base = block_group_hash(b);
    for (std::size_t j = 0; j < b.sectors.size(); ++j) {
        base = base * exp(pk.u[j], b.sectors[j]);
    }
    return pair(tag.sigma, pk.suite.generator()) == pair(base, pk.v);
}

GroupElement sign_root(const Keypair& kp, const Digest& root) {
    return exp(hash_to_group(std::span<const std::uint8_t>(root)), kp.x);
}

bool verify_root_sig(const PublicKey& pk, const Digest& root, const GroupElement& sig) {
    return pair(sig, pk.suite.generator()) ==
           pair(hash_to_group(std::span<const std::uint8_t>(root)), pk.v);
}

SignedFile sig_gen(const Keypair& kp, const PublicKey& pk, const std::string& file_id,
                   std::span<const Block> blocks) {
    if (blocks.empty()) throw std::invalid_argument("sig_gen: no blocks");
    SignedFile out;
    out.tags.reserve(blocks.size());
    std::vector<Digest> leaves;
    leaves.reserve(blocks.size());
    for (const auto& b : blocks) {
        out.tags.push_back(tag_block(kp, pk, b));
        leaves.push_back(block_leaf_digest(b));
    }
    out.tree = MhtTree::build(leaves);
    out.meta.file_id = file_id;
    out.meta.n = blocks.size();
    out.meta.s = pk.sectors();
    out.meta.root = out.tree.root();
    out.meta.root_sig = sign_root(kp, out.meta.root);
    for (const auto& b : blocks) out.meta.manifest.push_back(b.uid);
    return out;
}

Challenge gen_challenge(Rng& rng, const std::string& file_id, std::size_t n, std::size_t c) {
    if (c < 1 || c > n) throw std::invalid_argument("gen_challenge: c out of range");
    // partial Fisher-Yates for c distinct indices
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = 0; i < c; ++i) {
        std::size_t j = i + rng.below(n - i);
        std::swap(idx[i], idx[j]);
    }
    idx.resize(c);
    std::sort(idx.begin(), idx.end());

    Challenge ch;
    ch.file_id = file_id;
    ch.pairs.reserve(c);
    for (auto i : idx) ch.pairs.emplace_back(i, random_nonzero_scalar(rng));
    ch.nonce = rng.bytes(16);
    return ch;
}

AuditProof gen_proof(const StoredFile& store, const Challenge& ch,
                     std::span<const std::uint8_t> mask_key) {
    const std::size_t s = store.s;
    const auto& pk = store.owner_pk;
    for (const auto& [i, nu] : ch.pairs) {
        if (i >= store.block_count()) throw std::out_of_range("gen_proof: challenged index");
        (void)nu;
    }

    AuditProof pf;
    // mask terms r_j and their target-group commitment R_m
    std::vector<Scalar> r(s);
    TargetElement r_mask = pk.suite.target_identity();
    for (std::size_t j = 0; j < s; ++j) {
        r[j] = prf(mask_key, ch.nonce, j);
        r_mask = r_mask * target_exp(pair(pk.u[j], pk.v), r[j]);
    }
    pf.r_mask = r_mask;
    const Scalar gamma = hash_to_scalar(r_mask.encode());

    GroupElement sigma = pk.suite.identity();
    std::vector<Scalar> combined(s);  // unmasked linear combinations, never serialized
    for (const auto& [i, nu] : ch.pairs) {
        const Block& b = store.block_at(i);
        for (std::size_t j = 0; j < s; ++j) combined[j] = combined[j] + nu * b.sectors[j];
        sigma = sigma * exp(store.tag_at(i).sigma, nu);
        pf.leaf_evidence.push_back({i, store.h_at(i), store.tree.path(i)});
    }
    pf.sigma = sigma;
    pf.mu.reserve(s);
    for (std::size_t j = 0; j < s; ++j) pf.mu.push_back(r[j] + gamma * combined[j]);
    pf.root = store.tree.root();
    pf.root_sig = store.root_sig;
    return pf;
}

std::optional<RejectReason> verify_proof_prechecks(const PublicKey& pk, const Challenge& ch,
                                                   const AuditProof& pf) {
    if (pf.mu.size() != pk.sectors() || pf.leaf_evidence.size() != ch.pairs.size()) {
        return RejectReason::malformed;
    }
    for (std::size_t k = 0; k < ch.pairs.size(); ++k) {
        if (pf.leaf_evidence[k].index != ch.pairs[k].first) {
            return RejectReason::malformed;
        }
    }

    if (!verify_root_sig(pk, pf.root, pf.root_sig)) {
        return RejectReason::root_signature;
    }

    for (const auto& ev : pf.leaf_evidence) {
        if (!verify_path(pf.root, sha256(ev.h.encode()), ev.path)) {
            return RejectReason::path;
        }
    }
    return std::nullopt;
}

AuditResult verify_proof(const PublicKey& pk, const Challenge& ch, const AuditProof& pf) {
    const std::size_t s = pk.sectors();
    if (auto reason = verify_proof_prechecks(pk, ch, pf)) {
        return AuditResult::reject(*reason);
    }

    const Scalar gamma = hash_to_scalar(pf.r_mask.encode());
    const GroupElement g = pk.suite.generator();
    TargetElement lhs = pair(exp(pf.sigma, gamma), g) * pf.r_mask;

    GroupElement agg = pk.suite.identity();
    for (std::size_t k = 0; k < ch.pairs.size(); ++k) {
        agg = agg * exp(pf.leaf_evidence[k].h, ch.pairs[k].second);
    }
    TargetElement rhs = pair(exp(agg, gamma), pk.v);
    for (std::size_t j = 0; j < s; ++j) {
        rhs = rhs * target_exp(pair(pk.u[j], pk.v), pf.mu[j]);
    }
    if (!(lhs == rhs)) return AuditResult::reject(RejectReason::equation);
    return AuditResult::accept();
}

}  // namespace audit
