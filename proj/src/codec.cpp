#include "audit/codec.hpp"

namespace audit::codec {

namespace {

json digest_json(const Digest& d) { return to_hex(d); }
Digest digest_from(const json& j) { return digest_from_hex(j.get<std::string>()); }

json bytes_json(std::span<const std::uint8_t> b) { return to_hex(b); }
std::vector<std::uint8_t> bytes_from(const json& j) { return from_hex(j.get<std::string>()); }

void require_fields(const json& j, std::initializer_list<const char*> fields) {
    if (!j.is_object()) throw std::invalid_argument("codec: expected object");
    if (j.size() != fields.size()) throw std::invalid_argument("codec: unexpected field set");
    for (const char* f : fields) {
        if (!j.contains(f)) throw std::invalid_argument(std::string("codec: missing field ") + f);
    }
}

}  // namespace

std::string canonical_dump(const json& j) { return j.dump(); }

json challenge_to_json(const Challenge& ch) {
    json pairs = json::array();
    for (const auto& [i, nu] : ch.pairs) pairs.push_back(json::array({i, nu.str()}));
    return json{{"file_id", ch.file_id}, {"pairs", pairs}, {"nonce", bytes_json(ch.nonce)}};
}

Challenge challenge_from_json(const json& j) {
    require_fields(j, {"file_id", "pairs", "nonce"});
    Challenge ch;
    ch.file_id = j.at("file_id").get<std::string>();
    for (const auto& p : j.at("pairs")) {
        ch.pairs.emplace_back(p.at(0).get<std::size_t>(),
                              Scalar::parse(p.at(1).get<std::string>()));
    }
    ch.nonce = bytes_from(j.at("nonce"));
    return ch;
}

json auth_path_to_json(const AuthPath& p) {
    json sibs = json::array();
    for (const auto& s : p.siblings) {
        sibs.push_back(json{{"sibling", digest_json(s.sibling)},
                            {"side", s.side == Side::left ? "left" : "right"}});
    }
    return json{{"leaf_index", p.leaf_index}, {"siblings", sibs}};
}

AuthPath auth_path_from_json(const json& j) {
    require_fields(j, {"leaf_index", "siblings"});
    AuthPath p;
    p.leaf_index = j.at("leaf_index").get<std::size_t>();
    for (const auto& s : j.at("siblings")) {
        const auto side = s.at("side").get<std::string>();
        if (side != "left" && side != "right") throw std::invalid_argument("codec: bad side");
        p.siblings.push_back({digest_from(s.at("sibling")),
                              side == "left" ? Side::left : Side::right});
    }
    return p;
}

json proof_to_json(const AuditProof& pf) {
    json mu = json::array();
    for (const auto& m : pf.mu) mu.push_back(m.str());
    json evidence = json::array();
    for (const auto& ev : pf.leaf_evidence) {
        evidence.push_back(json{{"index", ev.index},
                                {"h", ev.h.encode()},
                                {"path", auth_path_to_json(ev.path)}});
    }
    return json{{"mu", mu},
                {"sigma", pf.sigma.encode()},
                {"r_mask", pf.r_mask.encode()},
                {"leaf_evidence", evidence},
                {"root", digest_json(pf.root)},
                {"root_sig", pf.root_sig.encode()}};
}

AuditProof proof_from_json(const json& j) {
    require_fields(j, {"mu", "sigma", "r_mask", "leaf_evidence", "root", "root_sig"});
    AuditProof pf;
    for (const auto& m : j.at("mu")) pf.mu.push_back(Scalar::parse(m.get<std::string>()));
    pf.sigma = GroupElement::decode(j.at("sigma").get<std::string>());
    pf.r_mask = TargetElement::decode(j.at("r_mask").get<std::string>());
    for (const auto& ev : j.at("leaf_evidence")) {
        require_fields(ev, {"index", "h", "path"});
        pf.leaf_evidence.push_back({ev.at("index").get<std::size_t>(),
                                    GroupElement::decode(ev.at("h").get<std::string>()),
                                    auth_path_from_json(ev.at("path"))});
    }
    pf.root = digest_from(j.at("root"));
    pf.root_sig = GroupElement::decode(j.at("root_sig").get<std::string>());
    return pf;
}

json block_to_json(const Block& b) {
    json sectors = json::array();
    for (const auto& m : b.sectors) sectors.push_back(m.str());
    return json{{"uid", b.uid}, {"sectors", sectors}, {"raw_len", b.raw_len}};
}

Block block_from_json(const json& j) {
    require_fields(j, {"uid", "sectors", "raw_len"});
    Block b;
    b.uid = j.at("uid").get<std::string>();
    for (const auto& m : j.at("sectors")) b.sectors.push_back(Scalar::parse(m.get<std::string>()));
    b.raw_len = j.at("raw_len").get<std::uint64_t>();
    return b;
}

json public_key_to_json(const PublicKey& pk) {
    json u = json::array();
    for (const auto& uj : pk.u) u.push_back(uj.encode());
    return json{{"v", pk.v.encode()}, {"u", u}, {"suite", std::string(suite_name(pk.suite.id))}};
}

PublicKey public_key_from_json(const json& j) {
    require_fields(j, {"v", "u", "suite"});
    PublicKey pk;
    pk.suite.id = suite_from_name(j.at("suite").get<std::string>());
    pk.v = GroupElement::decode(j.at("v").get<std::string>());
    for (const auto& u : j.at("u")) pk.u.push_back(GroupElement::decode(u.get<std::string>()));
    return pk;
}

json keypair_to_json(const Keypair& kp) {
    return json{{"x", kp.x.str()}, {"ssk_seed", bytes_json(kp.ssk_seed)}};
}

Keypair keypair_from_json(const json& j) {
    require_fields(j, {"x", "ssk_seed"});
    return Keypair{Scalar::parse(j.at("x").get<std::string>()), bytes_from(j.at("ssk_seed"))};
}

json metadata_to_json(const FileMetadata& meta) {
    return json{{"file_id", meta.file_id}, {"n", meta.n},       {"s", meta.s},
                {"root", digest_json(meta.root)},
                {"root_sig", meta.root_sig.encode()},
                {"manifest", meta.manifest}};
}

FileMetadata metadata_from_json(const json& j) {
    require_fields(j, {"file_id", "n", "s", "root", "root_sig", "manifest"});
    FileMetadata meta;
    meta.file_id = j.at("file_id").get<std::string>();
    meta.n = j.at("n").get<std::size_t>();
    meta.s = j.at("s").get<std::size_t>();
    meta.root = digest_from(j.at("root"));
    meta.root_sig = GroupElement::decode(j.at("root_sig").get<std::string>());
    meta.manifest = j.at("manifest").get<std::vector<std::string>>();
    return meta;
}

json update_request_to_json(const UpdateRequest& req) {
    json j{{"file_id", req.file_id},
           {"op", std::string(update_op_name(req.op))},
           {"index", req.index}};
    if (req.new_block) j["new_block"] = block_to_json(*req.new_block);
    if (req.new_tag) j["new_tag"] = req.new_tag->sigma.encode();
    return j;
}

UpdateRequest update_request_from_json(const json& j) {
    UpdateRequest req;
    req.file_id = j.at("file_id").get<std::string>();
    req.op = update_op_from_name(j.at("op").get<std::string>());
    req.index = j.at("index").get<std::ptrdiff_t>();
    if (j.contains("new_block")) req.new_block = block_from_json(j.at("new_block"));
    if (j.contains("new_tag")) {
        req.new_tag = BlockTag{GroupElement::decode(j.at("new_tag").get<std::string>())};
    }
    const bool wants_payload = req.op != UpdateOp::erase;
    if (wants_payload != (req.new_block.has_value() && req.new_tag.has_value())) {
        throw std::invalid_argument("codec: update request payload does not match op");
    }
    return req;
}

json update_proof_to_json(const UpdateProof& proof) {
    return json{{"old_leaf", digest_json(proof.old_leaf)},
                {"old_path", auth_path_to_json(proof.old_path)},
                {"old_root", digest_json(proof.old_root)},
                {"old_root_sig", proof.old_root_sig.encode()},
                {"new_root", digest_json(proof.new_root)}};
}

UpdateProof update_proof_from_json(const json& j) {
    require_fields(j, {"old_leaf", "old_path", "old_root", "old_root_sig", "new_root"});
    UpdateProof proof;
    proof.old_leaf = digest_from(j.at("old_leaf"));
    proof.old_path = auth_path_from_json(j.at("old_path"));
    proof.old_root = digest_from(j.at("old_root"));
    proof.old_root_sig = GroupElement::decode(j.at("old_root_sig").get<std::string>());
    proof.new_root = digest_from(j.at("new_root"));
    return proof;
}

json batch_report_to_json(const BatchResult& r, std::size_t k) {
    return json{{"verdict", r.all_accept ? "all_accept" : "some_reject"},
                {"culprits", r.culprits},
                {"pairing_count", r.pairings},
                {"k", k}};
}

}  // namespace audit::codec
