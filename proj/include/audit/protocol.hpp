#pragma once

// Four-procedure auditing protocol: key generation, tag generation over
// sector-encoded blocks, masked proof generation on the server, and the
// pairing verification run by the auditor. Tags bind the hash of the
// block content (not its index), so they survive insert/delete without
// re-tagging untouched blocks.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "audit/common.hpp"
#include "audit/mht.hpp"
#include "audit/suite.hpp"

namespace audit {

struct Keypair {
    Scalar x;                            // audit secret
    std::vector<std::uint8_t> ssk_seed;  // reserved root-signing material, currently unused
};

struct PublicKey {
    GroupElement v;               // g^x
    std::vector<GroupElement> u;  // sector generators u_1..u_s
    SuiteParams suite;

    std::size_t sectors() const { return u.size(); }
    /// Stable identifier used as the pairing-cache key.
    std::string fingerprint() const;
};

struct Block {
    std::string uid;             // stable opaque identifier
    std::vector<Scalar> sectors; // m_{i1}..m_{is}
    std::uint64_t raw_len = 0;   // byte count before padding
};

/// Hash of the block's canonical sector encoding.
Digest block_content_hash(const Block& b);
/// H(m_i): the group-mapped block hash the authenticator binds.
GroupElement block_group_hash(const Block& b);
/// MHT leaf digest: hash of the canonical encoding of H(m_i).
Digest block_leaf_digest(const Block& b);

struct BlockTag {
    GroupElement sigma;
};

struct FileMetadata {
    std::string file_id;
    std::size_t n = 0;  // block count
    std::size_t s = 1;  // sectors per block
    Digest root{};
    GroupElement root_sig;  // H(root)^x
    std::vector<std::string> manifest;  // ordered block uids
};

struct Challenge {
    std::string file_id;
    std::vector<std::pair<std::size_t, Scalar>> pairs;  // (index, nu_i)
    std::vector<std::uint8_t> nonce;
};

struct LeafEvidence {
    std::size_t index = 0;
    GroupElement h;  // H(m_i)
    AuthPath path;
};

struct AuditProof {
    std::vector<Scalar> mu;    // masked sector combinations
    GroupElement sigma;        // aggregated tag
    TargetElement r_mask;      // R_m
    std::vector<LeafEvidence> leaf_evidence;
    Digest root{};
    GroupElement root_sig;
};

enum class RejectReason { malformed, root_signature, path, equation };
std::string_view reject_reason_name(RejectReason r);

struct AuditResult {
    bool accepted = false;
    std::optional<RejectReason> reason;

    static AuditResult accept() { return {true, std::nullopt}; }
    static AuditResult reject(RejectReason r) { return {false, r}; }
};

/// Server-side state for one stored file.
struct StoredFile {
    std::size_t s = 1;
    PublicKey owner_pk;
    std::vector<std::string> manifest;
    std::map<std::string, Block> blocks;    // by uid
    std::map<std::string, BlockTag> tags;   // by uid
    // H(m_i) computed at ingest; kept so proofs reflect the metadata the
    // server admitted, not whatever the blocks have decayed into
    std::map<std::string, GroupElement> block_h;
    MhtTree tree;
    GroupElement root_sig;

    std::size_t block_count() const { return manifest.size(); }
    const Block& block_at(std::size_t i) const;
    const BlockTag& tag_at(std::size_t i) const;
    GroupElement h_at(std::size_t i) const;  // cached, else recomputed from the block
};

struct EncodingParams {
    std::size_t s = 1;
    std::size_t sector_bytes = 7;  // keeps sector values below the Mersenne-61 order

    std::size_t block_bytes() const { return s * sector_bytes; }
};

std::pair<Keypair, PublicKey> keygen(Rng& rng, std::size_t s,
                                     const SuiteParams& suite = SuiteParams{});

/// Splits data into blocks of s sectors with an 8-byte length prefix and
/// zero padding. uid_salt disambiguates uids across files.
std::vector<Block> encode_file(std::span<const std::uint8_t> data, const EncodingParams& params,
                               std::span<const std::uint8_t> uid_salt = {});
std::vector<std::uint8_t> decode_file(std::span<const Block> blocks);

/// Encodes bytes that must fit a single block (dynamic updates).
Block encode_block(std::span<const std::uint8_t> data, const EncodingParams& params,
                   std::span<const std::uint8_t> uid_salt);

BlockTag tag_block(const Keypair& kp, const PublicKey& pk, const Block& b);
bool verify_block_tag(const PublicKey& pk, const Block& b, const BlockTag& tag);

struct SignedFile {
    std::vector<BlockTag> tags;
    MhtTree tree;
    FileMetadata meta;
};

SignedFile sig_gen(const Keypair& kp, const PublicKey& pk, const std::string& file_id,
                   std::span<const Block> blocks);

GroupElement sign_root(const Keypair& kp, const Digest& root);
bool verify_root_sig(const PublicKey& pk, const Digest& root, const GroupElement& sig);

Challenge gen_challenge(Rng& rng, const std::string& file_id, std::size_t n, std::size_t c);

AuditProof gen_proof(const StoredFile& store, const Challenge& ch,
                     std::span<const std::uint8_t> mask_key);

AuditResult verify_proof(const PublicKey& pk, const Challenge& ch, const AuditProof& pf);

/// Structural, root-signature, and path checks only (no pairing
/// equation). Batch verification runs these per entry before combining
/// the equations.
std::optional<RejectReason> verify_proof_prechecks(const PublicKey& pk, const Challenge& ch,
                                                   const AuditProof& pf);

}  // namespace audit
