#include "audit/dynamics.hpp"

namespace audit {

std::string_view update_op_name(UpdateOp op) {
    switch (op) {
        case UpdateOp::modify: return "modify";
        case UpdateOp::insert_after: return "insert_after";
        case UpdateOp::erase: return "delete";
    }
    return "unknown";
}

UpdateOp update_op_from_name(std::string_view name) {
    if (name == "modify") return UpdateOp::modify;
    if (name == "insert_after") return UpdateOp::insert_after;
    if (name == "delete") return UpdateOp::erase;
    throw std::invalid_argument("unknown update op: " + std::string(name));
}

std::string_view update_reject_name(UpdateRejectReason r) {
    switch (r) {
        case UpdateRejectReason::stale_root: return "stale_root";
        case UpdateRejectReason::bad_path: return "bad_path";
        case UpdateRejectReason::root_mismatch: return "root_mismatch";
    }
    return "unknown";
}

UpdateRequest prepare_update(const Keypair& kp, const PublicKey& pk, const std::string& file_id,
                             UpdateOp op, std::ptrdiff_t index,
                             std::optional<std::span<const std::uint8_t>> new_bytes,
                             const EncodingParams& params,
                             std::span<const std::uint8_t> uid_salt) {
    const bool wants_payload = op != UpdateOp::erase;
    if (wants_payload != new_bytes.has_value()) {
        throw std::invalid_argument("prepare_update: payload presence does not match op");
    }
    UpdateRequest req;
    req.file_id = file_id;
    req.op = op;
    req.index = index;
    if (wants_payload) {
        req.new_block = encode_block(*new_bytes, params, uid_salt);
        req.new_tag = tag_block(kp, pk, *req.new_block);
    }
    return req;
}

UpdateProof exec_update(StoredFile& file, const UpdateRequest& req) {
    const auto n = static_cast<std::ptrdiff_t>(file.block_count());
    UpdateProof proof;
    proof.old_root = file.tree.root();
    proof.old_root_sig = file.root_sig;

    switch (req.op) {
        case UpdateOp::modify: {
            if (req.index < 0 || req.index >= n) throw std::out_of_range("exec_update: modify index");
            if (!req.new_block || !req.new_tag) {
                throw std::invalid_argument("exec_update: modify needs block and tag");
            }
            auto i = static_cast<std::size_t>(req.index);
            proof.old_leaf = file.tree.leaf(i);
            auto [tree, old_path] = file.tree.modify(i, block_leaf_digest(*req.new_block));
            proof.old_path = old_path;
            const std::string old_uid = file.manifest[i];
            file.blocks.erase(old_uid);
            file.tags.erase(old_uid);
            file.block_h.erase(old_uid);
            file.manifest[i] = req.new_block->uid;
            file.blocks[req.new_block->uid] = *req.new_block;
            file.tags[req.new_block->uid] = *req.new_tag;
            file.block_h[req.new_block->uid] = block_group_hash(*req.new_block);
            file.tree = tree;
            break;
        }
        case UpdateOp::insert_after: {
            if (req.index < -1 || req.index >= n) {
                throw std::out_of_range("exec_update: insert index");
            }
            if (!req.new_block || !req.new_tag) {
                throw std::invalid_argument("exec_update: insert needs block and tag");
            }
            if (n > 0) {
                auto pos = static_cast<std::size_t>(req.index < 0 ? 0 : req.index);
                proof.old_leaf = file.tree.leaf(pos);
            }
            auto [tree, old_path] = file.tree.insert_after(req.index, block_leaf_digest(*req.new_block));
            proof.old_path = old_path;
            file.manifest.insert(file.manifest.begin() + (req.index + 1), req.new_block->uid);
            file.blocks[req.new_block->uid] = *req.new_block;
            file.tags[req.new_block->uid] = *req.new_tag;
            file.block_h[req.new_block->uid] = block_group_hash(*req.new_block);
            file.tree = tree;
            break;
        }
        case UpdateOp::erase: {
            if (req.index < 0 || req.index >= n) throw std::out_of_range("exec_update: delete index");
            if (req.new_block || req.new_tag) {
                throw std::invalid_argument("exec_update: delete carries no payload");
            }
            auto i = static_cast<std::size_t>(req.index);
            proof.old_leaf = file.tree.leaf(i);
            auto [tree, old_path] = file.tree.erase(i);
            proof.old_path = old_path;
            const std::string old_uid = file.manifest[i];
            file.blocks.erase(old_uid);
            file.tags.erase(old_uid);
            file.block_h.erase(old_uid);
            file.manifest.erase(file.manifest.begin() + static_cast<std::ptrdiff_t>(i));
            file.tree = tree;
            break;
        }
    }
    proof.new_root = file.tree.root();
    return proof;
}

void commit_root_sig(StoredFile& file, const GroupElement& new_root_sig) {
    file.root_sig = new_root_sig;
}

UpdateVerdict verify_update(const Keypair& kp, const PublicKey& pk, const TrackedRoot& tracked,
                            const UpdateRequest& req, const UpdateProof& proof) {
    if ((req.op != UpdateOp::erase) != req.new_block.has_value()) {
        throw std::invalid_argument("verify_update: payload presence does not match op");
    }
    UpdateVerdict verdict;

    if (!(proof.old_root == tracked.root) ||
        !verify_root_sig(pk, proof.old_root, proof.old_root_sig)) {
        verdict.reason = UpdateRejectReason::stale_root;
        return verdict;
    }

    const bool empty_insert =
        req.op == UpdateOp::insert_after && tracked.root == mht_empty_root();
    const std::size_t pos = req.index < 0 ? 0 : static_cast<std::size_t>(req.index);
    if (!empty_insert) {
        if (proof.old_path.leaf_index != pos ||
            !verify_path(proof.old_root, proof.old_leaf, proof.old_path)) {
            verdict.reason = UpdateRejectReason::bad_path;
            return verdict;
        }
    }

    // replay the structural change from the old path
    Digest recomputed{};
    switch (req.op) {
        case UpdateOp::modify:
            recomputed = fold_path(mht_leaf_hash(block_leaf_digest(*req.new_block)),
                                   proof.old_path.siblings);
            break;
        case UpdateOp::insert_after: {
            const Digest fresh = mht_leaf_hash(block_leaf_digest(*req.new_block));
            if (empty_insert) {
                recomputed = fresh;
            } else {
                const Digest kept = mht_leaf_hash(proof.old_leaf);
                const Digest split = req.index < 0 ? mht_internal_hash(fresh, kept)
                                                   : mht_internal_hash(kept, fresh);
                recomputed = fold_path(split, proof.old_path.siblings);
            }
            break;
        }
        case UpdateOp::erase:
            if (proof.old_path.siblings.empty()) {
                recomputed = mht_empty_root();
            } else {
                recomputed = fold_path(
                    proof.old_path.siblings.front().sibling,
                    std::span<const PathStep>(proof.old_path.siblings).subspan(1));
            }
            break;
    }
    if (!(recomputed == proof.new_root)) {
        verdict.reason = UpdateRejectReason::root_mismatch;
        return verdict;
    }

    verdict.new_root_sig = sign_root(kp, proof.new_root);
    return verdict;
}

BlockAck verify_block(const StoredFile& file, const std::string& file_id, std::size_t index,
                      std::span<const std::uint8_t> mask_key, Rng& rng,
                      const std::string& audited_at) {
    if (index >= file.block_count()) throw std::out_of_range("verify_block: index");
    Challenge ch;
    ch.file_id = file_id;
    ch.pairs.emplace_back(index, random_nonzero_scalar(rng));
    ch.nonce = rng.bytes(16);
    AuditProof pf = gen_proof(file, ch, mask_key);
    AuditResult res = verify_proof(file.owner_pk, ch, pf);
    return BlockAck{file_id, index, !res.accepted, audited_at};
}

}  // namespace audit
