#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "audit/codec.hpp"
#include "audit/protocol.hpp"

using namespace audit;

namespace {

const SuiteParams kSuite;

// q = 2^61 - 1 arithmetic done from scratch, so protocol algebra is
// checked against plain integers instead of the Scalar class itself
constexpr std::uint64_t kQ = (std::uint64_t{1} << 61) - 1;
std::uint64_t addq(std::uint64_t a, std::uint64_t b) { return (a + b) % kQ; }
std::uint64_t mulq(std::uint64_t a, std::uint64_t b) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(a) * b) % kQ);
}

std::vector<std::uint8_t> random_bytes(Rng& rng, std::size_t n) { return rng.bytes(n); }

StoredFile make_stored(const Keypair& kp, const PublicKey& pk, const std::string& file_id,
                       const std::vector<Block>& blocks) {
    SignedFile sf = sig_gen(kp, pk, file_id, blocks);
    StoredFile stored;
    stored.s = pk.sectors();
    stored.owner_pk = pk;
    stored.manifest = sf.meta.manifest;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        stored.blocks[blocks[i].uid] = blocks[i];
        stored.tags[blocks[i].uid] = sf.tags[i];
        stored.block_h[blocks[i].uid] = block_group_hash(blocks[i]);
    }
    stored.tree = sf.tree;
    stored.root_sig = sf.meta.root_sig;
    return stored;
}

}  // namespace

TEST_CASE("keygen is seed-deterministic and well-formed") {
    Rng a(77), b(77), c(78);
    auto [kp1, pk1] = keygen(a, 3);
    auto [kp2, pk2] = keygen(b, 3);
    auto [kp3, pk3] = keygen(c, 3);
    CHECK(kp1.x == kp2.x);
    CHECK(pk1.v == pk2.v);
    CHECK(pk1.u == pk2.u);
    CHECK_FALSE(kp1.x == kp3.x);

    CHECK(pk1.sectors() == 3);
    CHECK_FALSE(kp1.x.is_zero());
    // v = g^x, checked on the transparent representation
    CHECK(pk1.v.dlog() == kp1.x);
    std::set<std::uint64_t> distinct;
    for (const auto& u : pk1.u) {
        CHECK_FALSE(u.is_identity());
        distinct.insert(u.dlog().value());
    }
    CHECK(distinct.size() == 3);
    CHECK_FALSE(pk1.fingerprint() == pk3.fingerprint());
    CHECK_THROWS_AS(keygen(a, 0), std::invalid_argument);
}

TEST_CASE("file encoding round-trips and block counts follow the formula") {
    Rng rng(0xdec0de);
    for (int trial = 0; trial < 500; ++trial) {
        EncodingParams params;
        params.s = 1 + rng.below(4);
        std::size_t len = rng.below(65537);  // up to 64 KiB inclusive
        auto data = random_bytes(rng, len);
        auto salt = random_bytes(rng, 8);

        auto blocks = encode_file(data, params, salt);
        std::size_t expected_n = (8 + len + params.block_bytes() - 1) / params.block_bytes();
        CHECK(blocks.size() == expected_n);
        CHECK(decode_file(blocks) == data);

        std::set<std::string> uids;
        for (const auto& b : blocks) {
            CHECK(b.sectors.size() == params.s);
            uids.insert(b.uid);
        }
        CHECK(uids.size() == blocks.size());  // uids are distinct within a file
    }
}

TEST_CASE("encoding edge cases") {
    EncodingParams one{1, 7};
    // 8-byte length prefix + 1 data byte = 9 bytes -> two 7-byte blocks
    std::vector<std::uint8_t> byte{0x42};
    CHECK(encode_file(byte, one).size() == 2);
    CHECK(decode_file(encode_file(byte, one)) == byte);

    // empty file still carries its length prefix
    std::vector<std::uint8_t> empty;
    auto blocks = encode_file(empty, one);
    CHECK(blocks.size() == 2);
    CHECK(decode_file(blocks).empty());

    EncodingParams wide{2, 7};
    CHECK(encode_file(empty, wide).size() == 1);

    CHECK_THROWS_AS(decode_file(std::span<const Block>{}), std::invalid_argument);
    EncodingParams bad{0, 7};
    CHECK_THROWS_AS(encode_file(byte, bad), std::invalid_argument);
}

TEST_CASE("single-block encoding for updates") {
    EncodingParams params{2, 7};
    Rng rng(9);
    auto data = random_bytes(rng, 11);
    auto salt = random_bytes(rng, 8);
    Block b = encode_block(data, params, salt);
    CHECK(b.sectors.size() == 2);
    CHECK(b.raw_len == 11);
    auto too_big = random_bytes(rng, params.block_bytes() + 1);
    CHECK_THROWS_AS(encode_block(too_big, params, salt), std::invalid_argument);

    // same bytes, same salt -> same uid; different salt -> different uid
    CHECK(encode_block(data, params, salt).uid == b.uid);
    auto salt2 = random_bytes(rng, 8);
    CHECK_FALSE(encode_block(data, params, salt2).uid == b.uid);
}

TEST_CASE("tags satisfy the pairing relation and the integer oracle") {
    Rng rng(0xbead);
    auto [kp, pk] = keygen(rng, 3);
    EncodingParams params{3, 7};
    for (int trial = 0; trial < 200; ++trial) {
        Block b = encode_block(random_bytes(rng, rng.below(params.block_bytes() + 1)), params,
                               random_bytes(rng, 8));
        BlockTag tag = tag_block(kp, pk, b);
        CHECK(verify_block_tag(pk, b, tag));

        // independent check: sigma's exponent must equal
        // x * (dlog H(m) + sum_j dlog(u_j) * m_j) over plain integers
        std::uint64_t inner = block_group_hash(b).dlog().value();
        for (std::size_t j = 0; j < 3; ++j) {
            inner = addq(inner, mulq(pk.u[j].dlog().value(), b.sectors[j].value()));
        }
        CHECK(tag.sigma.dlog().value() == mulq(kp.x.value(), inner));

        // a perturbed sector must break verification
        Block bad = b;
        bad.sectors[rng.below(3)] = bad.sectors[rng.below(3)] + Scalar(1);
        CHECK_FALSE(verify_block_tag(pk, bad, tag));
    }
}

TEST_CASE("sig_gen produces consistent metadata and a checkable root signature") {
    Rng rng(0x51e);
    auto [kp, pk] = keygen(rng, 2);
    EncodingParams params{2, 7};
    auto blocks = encode_file(random_bytes(rng, 300), params, random_bytes(rng, 8));
    SignedFile sf = sig_gen(kp, pk, "fid-1", blocks);

    CHECK(sf.meta.file_id == "fid-1");
    CHECK(sf.meta.n == blocks.size());
    CHECK(sf.meta.s == 2);
    CHECK(sf.tags.size() == blocks.size());
    CHECK(sf.meta.manifest.size() == blocks.size());
    CHECK(sf.tree.leaf_count() == blocks.size());
    CHECK(sf.meta.root == sf.tree.root());
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        CHECK(sf.meta.manifest[i] == blocks[i].uid);
        CHECK(sf.tree.leaf(i) == block_leaf_digest(blocks[i]));
    }

    CHECK(verify_root_sig(pk, sf.meta.root, sf.meta.root_sig));
    Digest other = sha256("something else");
    CHECK_FALSE(verify_root_sig(pk, other, sf.meta.root_sig));
    Rng rng2(0x51f);
    auto [kp2, pk2] = keygen(rng2, 2);
    CHECK_FALSE(verify_root_sig(pk2, sf.meta.root, sf.meta.root_sig));
    CHECK_THROWS_AS(sig_gen(kp, pk, "x", std::span<const Block>{}), std::invalid_argument);
}

TEST_CASE("challenges are well-formed, reproducible, and roughly uniform") {
    Rng a(1234), b(1234);
    Challenge c1 = gen_challenge(a, "f", 50, 10);
    Challenge c2 = gen_challenge(b, "f", 50, 10);
    CHECK(c1.pairs == c2.pairs);
    CHECK(c1.nonce == c2.nonce);
    CHECK(c1.nonce.size() == 16);
    CHECK(c1.pairs.size() == 10);
    for (std::size_t k = 0; k + 1 < c1.pairs.size(); ++k) {
        CHECK(c1.pairs[k].first < c1.pairs[k + 1].first);  // sorted, distinct
    }
    for (const auto& [i, nu] : c1.pairs) {
        CHECK(i < 50);
        CHECK_FALSE(nu.is_zero());
    }

    Challenge full = gen_challenge(a, "f", 7, 7);
    CHECK(full.pairs.size() == 7);
    CHECK_THROWS_AS(gen_challenge(a, "f", 5, 0), std::invalid_argument);
    CHECK_THROWS_AS(gen_challenge(a, "f", 5, 6), std::invalid_argument);

    // frequency check: each of n=20 indices should be hit ~ c/n of the time
    Rng rng(0xfeed);
    const int draws = 4000;
    std::vector<int> hits(20, 0);
    for (int t = 0; t < draws; ++t) {
        for (const auto& [i, nu] : gen_challenge(rng, "f", 20, 5).pairs) hits[i]++;
    }
    const double expect = draws * 5.0 / 20.0;
    const double sigma3 = 3.0 * std::sqrt(draws * 0.25 * 0.75);
    for (int h : hits) {
        CHECK(std::abs(h - expect) < sigma3);
    }
}

TEST_CASE("honest proofs verify and match the integer transcript oracle") {
    Rng rng(0xa0d17);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t s = 1 + rng.below(3);
        auto [kp, pk] = keygen(rng, s);
        EncodingParams params{s, 7};
        auto blocks = encode_file(random_bytes(rng, 40 + rng.below(400)), params,
                                  random_bytes(rng, 8));
        StoredFile stored = make_stored(kp, pk, "fid", blocks);

        const std::size_t n = blocks.size();
        Challenge ch = gen_challenge(rng, "fid", n, 1 + rng.below(n));
        auto mask_key = random_bytes(rng, 32);
        AuditProof pf = gen_proof(stored, ch, mask_key);

        AuditResult res = verify_proof(pk, ch, pf);
        CHECK(res.accepted);

        // replay the whole transcript over plain integers mod q
        std::vector<std::uint64_t> r(s);
        std::uint64_t rm = 0;
        for (std::size_t j = 0; j < s; ++j) {
            r[j] = prf(mask_key, ch.nonce, j).value();
            rm = addq(rm, mulq(r[j], mulq(pk.u[j].dlog().value(), kp.x.value())));
        }
        CHECK(pf.r_mask.dlog().value() == rm);
        const std::uint64_t gamma = hash_to_scalar(pf.r_mask.encode()).value();

        std::uint64_t sigma = 0;
        std::vector<std::uint64_t> combined(s, 0);
        for (const auto& [i, nu] : ch.pairs) {
            const Block& blk = blocks[i];
            std::uint64_t inner = block_group_hash(blk).dlog().value();
            for (std::size_t j = 0; j < s; ++j) {
                inner = addq(inner, mulq(pk.u[j].dlog().value(), blk.sectors[j].value()));
                combined[j] = addq(combined[j], mulq(nu.value(), blk.sectors[j].value()));
            }
            sigma = addq(sigma, mulq(nu.value(), mulq(kp.x.value(), inner)));
        }
        CHECK(pf.sigma.dlog().value() == sigma);
        for (std::size_t j = 0; j < s; ++j) {
            CHECK(pf.mu[j].value() == addq(r[j], mulq(gamma, combined[j])));
        }
    }
}

TEST_CASE("aggregated tag is the product of challenged tags") {
    Rng rng(0x5133);
    auto [kp, pk] = keygen(rng, 2);
    EncodingParams params{2, 7};
    auto blocks = encode_file(random_bytes(rng, 200), params, random_bytes(rng, 8));
    StoredFile stored = make_stored(kp, pk, "fid", blocks);
    Challenge ch = gen_challenge(rng, "fid", blocks.size(), blocks.size());
    AuditProof pf = gen_proof(stored, ch, random_bytes(rng, 32));

    std::uint64_t agg = 0;
    for (const auto& [i, nu] : ch.pairs) {
        agg = addq(agg, mulq(nu.value(), stored.tag_at(i).sigma.dlog().value()));
    }
    CHECK(pf.sigma.dlog().value() == agg);
}

TEST_CASE("masking randomizes the response but never the verdict") {
    Rng rng(0x3a5c);
    auto [kp, pk] = keygen(rng, 2);
    EncodingParams params{2, 7};
    auto blocks = encode_file(random_bytes(rng, 100), params, random_bytes(rng, 8));
    StoredFile stored = make_stored(kp, pk, "fid", blocks);
    Challenge ch = gen_challenge(rng, "fid", blocks.size(), 3);

    auto key1 = random_bytes(rng, 32);
    auto key2 = random_bytes(rng, 32);
    AuditProof p1 = gen_proof(stored, ch, key1);
    AuditProof p2 = gen_proof(stored, ch, key2);
    CHECK(verify_proof(pk, ch, p1).accepted);
    CHECK(verify_proof(pk, ch, p2).accepted);
    CHECK_FALSE(p1.r_mask == p2.r_mask);
    CHECK_FALSE(p1.mu == p2.mu);
    // deterministic given the mask key
    AuditProof p1again = gen_proof(stored, ch, key1);
    CHECK(p1again.mu == p1.mu);
    CHECK(p1again.r_mask == p1.r_mask);
}

TEST_CASE("zero-content block exposes only the mask term") {
    Rng rng(0x00b1);
    auto [kp, pk] = keygen(rng, 2);
    EncodingParams params{2, 7};
    // encode_block of no bytes gives all-zero sectors
    Block zero = encode_block({}, params, random_bytes(rng, 8));
    for (const auto& m : zero.sectors) CHECK(m.is_zero());
    StoredFile stored = make_stored(kp, pk, "fid", {zero});

    Challenge ch = gen_challenge(rng, "fid", 1, 1);
    auto key = random_bytes(rng, 32);
    AuditProof pf = gen_proof(stored, ch, key);
    CHECK(verify_proof(pk, ch, pf).accepted);
    // combined sector sums are zero, so mu_j collapses to the PRF mask
    for (std::size_t j = 0; j < 2; ++j) {
        CHECK(pf.mu[j] == prf(key, ch.nonce, j));
    }
}

TEST_CASE("fault injection maps to the expected rejection reasons") {
    Rng rng(0xfa17);
    auto [kp, pk] = keygen(rng, 2);
    EncodingParams params{2, 7};
    auto blocks = encode_file(random_bytes(rng, 250), params, random_bytes(rng, 8));
    StoredFile pristine = make_stored(kp, pk, "fid", blocks);
    Challenge ch = gen_challenge(rng, "fid", blocks.size(), blocks.size());
    auto key = random_bytes(rng, 32);

    SUBCASE("corrupted block sector -> equation") {
        StoredFile st = pristine;
        Block& b = st.blocks[st.manifest[1]];
        b.sectors[0] = b.sectors[0] + Scalar(1);
        AuditProof pf = gen_proof(st, ch, key);
        AuditResult res = verify_proof(pk, ch, pf);
        CHECK_FALSE(res.accepted);
        CHECK(res.reason == RejectReason::equation);
    }
    SUBCASE("corrupted tag -> equation") {
        StoredFile st = pristine;
        BlockTag& t = st.tags[st.manifest[2]];
        t.sigma = t.sigma * pk.suite.generator();
        AuditProof pf = gen_proof(st, ch, key);
        AuditResult res = verify_proof(pk, ch, pf);
        CHECK_FALSE(res.accepted);
        CHECK(res.reason == RejectReason::equation);
    }
    SUBCASE("tampered leaf evidence -> path") {
        AuditProof pf = gen_proof(pristine, ch, key);
        pf.leaf_evidence[0].h = pf.leaf_evidence[0].h * pk.suite.generator();
        AuditResult res = verify_proof(pk, ch, pf);
        CHECK_FALSE(res.accepted);
        CHECK(res.reason == RejectReason::path);
    }
    SUBCASE("tampered sibling digest -> path") {
        AuditProof pf = gen_proof(pristine, ch, key);
        pf.leaf_evidence[0].path.siblings[0].sibling[0] ^= 0x01;
        AuditResult res = verify_proof(pk, ch, pf);
        CHECK_FALSE(res.accepted);
        CHECK(res.reason == RejectReason::path);
    }
    SUBCASE("forged root signature -> root_signature") {
        AuditProof pf = gen_proof(pristine, ch, key);
        pf.root_sig = pf.root_sig * pk.suite.generator();
        AuditResult res = verify_proof(pk, ch, pf);
        CHECK_FALSE(res.accepted);
        CHECK(res.reason == RejectReason::root_signature);
    }
    SUBCASE("wrong mu arity -> malformed") {
        AuditProof pf = gen_proof(pristine, ch, key);
        pf.mu.pop_back();
        AuditResult res = verify_proof(pk, ch, pf);
        CHECK_FALSE(res.accepted);
        CHECK(res.reason == RejectReason::malformed);
    }
    SUBCASE("evidence index mismatch -> malformed") {
        AuditProof pf = gen_proof(pristine, ch, key);
        pf.leaf_evidence[0].index += 1;
        pf.leaf_evidence[1].index -= 1;
        AuditResult res = verify_proof(pk, ch, pf);
        CHECK_FALSE(res.accepted);
        CHECK(res.reason == RejectReason::malformed);
    }
    SUBCASE("swapped mu components -> equation") {
        AuditProof pf = gen_proof(pristine, ch, key);
        std::swap(pf.mu[0], pf.mu[1]);
        AuditResult res = verify_proof(pk, ch, pf);
        CHECK_FALSE(res.accepted);
        CHECK(res.reason == RejectReason::equation);
    }
}

TEST_CASE("every single-bit block corruption of a small file is caught") {
    Rng rng(0xb17);
    auto [kp, pk] = keygen(rng, 1);
    EncodingParams params{1, 7};
    auto blocks = encode_file(random_bytes(rng, 20), params, random_bytes(rng, 8));
    REQUIRE(blocks.size() == 4);
    Challenge ch = gen_challenge(rng, "fid", 4, 4);  // challenge everything
    auto key = random_bytes(rng, 32);

    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t bit = 0; bit < 56; ++bit) {
            StoredFile st = make_stored(kp, pk, "fid", blocks);
            Block& b = st.blocks[st.manifest[i]];
            b.sectors[0] = Scalar(b.sectors[0].value() ^ (std::uint64_t{1} << bit));
            AuditProof pf = gen_proof(st, ch, key);
            CHECK_FALSE(verify_proof(pk, ch, pf).accepted);
        }
    }
}

TEST_CASE("serialized audit messages carry only the masked fields") {
    Rng rng(0x9e1a);
    auto [kp, pk] = keygen(rng, 2);
    EncodingParams params{2, 7};
    auto blocks = encode_file(random_bytes(rng, 120), params, random_bytes(rng, 8));
    StoredFile stored = make_stored(kp, pk, "fid", blocks);
    Challenge ch = gen_challenge(rng, "fid", blocks.size(), 3);
    AuditProof pf = gen_proof(stored, ch, random_bytes(rng, 32));

    auto jc = codec::challenge_to_json(ch);
    std::set<std::string> ch_keys;
    for (auto it = jc.begin(); it != jc.end(); ++it) ch_keys.insert(it.key());
    CHECK(ch_keys == std::set<std::string>{"file_id", "pairs", "nonce"});

    auto jp = codec::proof_to_json(pf);
    std::set<std::string> pf_keys;
    for (auto it = jp.begin(); it != jp.end(); ++it) pf_keys.insert(it.key());
    CHECK(pf_keys ==
          std::set<std::string>{"mu", "sigma", "r_mask", "leaf_evidence", "root", "root_sig"});

    // raw sector values must not leak into the serialized proof
    const std::string wire = codec::canonical_dump(jp);
    for (const auto& [i, nu] : ch.pairs) {
        for (const auto& m : stored.block_at(i).sectors) {
            if (m.value() < 1000) continue;  // short decimals collide by chance
            CHECK(wire.find("\"" + m.str() + "\"") == std::string::npos);
        }
    }
    // round trips preserve the transcript bit for bit
    Challenge ch2 = codec::challenge_from_json(codec::challenge_to_json(ch));
    AuditProof pf2 = codec::proof_from_json(codec::proof_to_json(pf));
    CHECK(codec::canonical_dump(codec::challenge_to_json(ch2)) == codec::canonical_dump(jc));
    CHECK(codec::canonical_dump(codec::proof_to_json(pf2)) == codec::canonical_dump(jp));
    CHECK(verify_proof(pk, ch2, pf2).accepted);
}
