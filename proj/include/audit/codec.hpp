#pragma once

// Canonical JSON serialization for every message and persisted record.
// Field sets are fixed, keys serialize sorted, scalars travel as decimal
// strings and digests as lowercase hex, so serialized bytes are stable
// and digests over messages are reproducible.

#include "audit/batch.hpp"
#include "audit/dynamics.hpp"
#include "audit/protocol.hpp"

#include <json.hpp>

namespace audit::codec {

using json = nlohmann::json;

/// Byte-stable serialization (sorted keys, no whitespace).
std::string canonical_dump(const json& j);

json challenge_to_json(const Challenge& ch);
Challenge challenge_from_json(const json& j);

json proof_to_json(const AuditProof& pf);
AuditProof proof_from_json(const json& j);

json block_to_json(const Block& b);
Block block_from_json(const json& j);

json public_key_to_json(const PublicKey& pk);
PublicKey public_key_from_json(const json& j);

json keypair_to_json(const Keypair& kp);
Keypair keypair_from_json(const json& j);

json metadata_to_json(const FileMetadata& meta);
FileMetadata metadata_from_json(const json& j);

json update_request_to_json(const UpdateRequest& req);
UpdateRequest update_request_from_json(const json& j);

json update_proof_to_json(const UpdateProof& proof);
UpdateProof update_proof_from_json(const json& j);

json auth_path_to_json(const AuthPath& p);
AuthPath auth_path_from_json(const json& j);

json batch_report_to_json(const BatchResult& r, std::size_t k);

}  // namespace audit::codec
