#pragma once

// Block-level dynamics: modification, insertion, deletion, and
// single-block verification. The server executes updates and hands back
// pre-update evidence; the client replays the structural change locally
// from that evidence before signing the new root.

#include <optional>
#include <string>

#include "audit/protocol.hpp"

namespace audit {

enum class UpdateOp { modify, insert_after, erase };
std::string_view update_op_name(UpdateOp op);  // "modify" | "insert_after" | "delete"
UpdateOp update_op_from_name(std::string_view name);

struct UpdateRequest {
    std::string file_id;
    UpdateOp op = UpdateOp::modify;
    std::ptrdiff_t index = 0;  // -1 means prepend for insert_after
    std::optional<Block> new_block;
    std::optional<BlockTag> new_tag;
};

struct UpdateProof {
    Digest old_leaf{};
    AuthPath old_path;
    Digest old_root{};
    GroupElement old_root_sig;
    Digest new_root{};
};

enum class UpdateRejectReason { stale_root, bad_path, root_mismatch };
std::string_view update_reject_name(UpdateRejectReason r);

struct UpdateVerdict {
    std::optional<GroupElement> new_root_sig;  // present iff accepted
    std::optional<UpdateRejectReason> reason;

    bool accepted() const { return new_root_sig.has_value(); }
};

/// Client-tracked signed root for one file.
struct TrackedRoot {
    Digest root{};
    GroupElement root_sig;
    std::size_t n = 0;
};

struct BlockAck {
    std::string file_id;
    std::size_t index = 0;
    bool modified = false;
    std::string audited_at;  // "YYYY-MM-DD HH:MM:SS"
};

UpdateRequest prepare_update(const Keypair& kp, const PublicKey& pk, const std::string& file_id,
                             UpdateOp op, std::ptrdiff_t index,
                             std::optional<std::span<const std::uint8_t>> new_bytes,
                             const EncodingParams& params,
                             std::span<const std::uint8_t> uid_salt);

/// Applies the update to the stored file in place and returns the
/// pre-update evidence. The caller keeps a snapshot if it wants the
/// two-phase rollback. The stored root signature is left untouched; the
/// client's fresh signature arrives via commit_root_sig.
UpdateProof exec_update(StoredFile& file, const UpdateRequest& req);

void commit_root_sig(StoredFile& file, const GroupElement& new_root_sig);

UpdateVerdict verify_update(const Keypair& kp, const PublicKey& pk, const TrackedRoot& tracked,
                            const UpdateRequest& req, const UpdateProof& proof);

/// Degenerate c = 1 masked audit over a single block; detects both
/// content drift and tag corruption.
BlockAck verify_block(const StoredFile& file, const std::string& file_id, std::size_t index,
                      std::span<const std::uint8_t> mask_key, Rng& rng,
                      const std::string& audited_at);

}  // namespace audit
