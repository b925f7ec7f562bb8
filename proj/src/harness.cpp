#include "audit/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <ctime>
#include <istream>
#include <ostream>
#include <sstream>

#include "audit/codec.hpp"

namespace audit {

std::string_view log_action_name(LogAction a) {
    switch (a) {
        case LogAction::upload: return "upload";
        case LogAction::download: return "download";
        case LogAction::block_insert: return "block_insert";
        case LogAction::block_delete: return "block_delete";
        case LogAction::block_modify: return "block_modify";
        case LogAction::block_verify: return "block_verify";
    }
    return "unknown";
}

std::string_view log_action_display(LogAction a) {
    switch (a) {
        case LogAction::upload: return "upload";
        case LogAction::download: return "Download";
        case LogAction::block_insert: return "Block insertion";
        case LogAction::block_delete: return "Delete Block";
        case LogAction::block_modify: return "Block modification";
        case LogAction::block_verify: return "Block verification";
    }
    return "unknown";
}

LogAction log_action_from_name(std::string_view name) {
    for (LogAction a : {LogAction::upload, LogAction::download, LogAction::block_insert,
                        LogAction::block_delete, LogAction::block_modify, LogAction::block_verify}) {
        if (log_action_name(a) == name) return a;
    }
    throw std::invalid_argument("unknown log action: " + std::string(name));
}

void Clock::set(const std::string& date, const std::string& time) {
    std::tm tm{};
    if (std::sscanf(date.c_str(), "%d-%d-%d", &tm.tm_year, &tm.tm_mon, &tm.tm_mday) != 3) {
        throw std::invalid_argument("Clock::set: bad date " + date);
    }
    int h = 0, m = 0, s = 0;
    if (std::sscanf(time.c_str(), "%d:%d:%d", &h, &m, &s) != 3) {
        throw std::invalid_argument("Clock::set: bad time " + time);
    }
    tm.tm_year -= 1900;
    tm.tm_mon -= 1;
    tm.tm_hour = h;
    tm.tm_min = m;
    tm.tm_sec = s;
    set(timegm(&tm));
}

std::pair<std::string, std::string> Clock::now() const {
    std::time_t t = wall_ ? std::time(nullptr) : static_cast<std::time_t>(epoch_);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char date[32], time[32];
    std::snprintf(date, sizeof date, "%04d-%02d-%02d", tm.tm_year + 1900, tm.tm_mon + 1,
                  tm.tm_mday);
    std::snprintf(time, sizeof time, "%02d:%02d:%02d", tm.tm_hour, tm.tm_min, tm.tm_sec);
    return {date, time};
}

Harness::Harness(std::uint64_t seed, EncodingParams params)
    : rng_(seed), params_(params), clock_(0) {}

ClientState& Harness::client(const std::string& user) {
    auto it = clients_.find(user);
    if (it != clients_.end()) return it->second;
    ClientState c;
    c.user = user;
    std::tie(c.kp, c.pk) = keygen(rng_, params_.s);
    return clients_.emplace(user, std::move(c)).first->second;
}

void Harness::append_log(const std::string& user, LogAction action, const std::string& file) {
    auto [date, time] = clock_.now();
    server_.log.push_back({user, action, file, date, time});
}

FileMetadata Harness::client_upload(const std::string& user, const std::string& file_name,
                                    std::span<const std::uint8_t> data) {
    ClientState& c = client(user);
    if (c.files.count(file_name)) {
        throw std::invalid_argument("upload: duplicate file name " + file_name);
    }

    ByteBuffer idbuf;
    idbuf.push(0x20);
    idbuf.append(user);
    idbuf.push(0x1f);
    idbuf.append(file_name);
    idbuf.push(0x1f);
    auto nonce = rng_.bytes(16);
    idbuf.append(nonce);
    const std::string file_id = to_hex(idbuf.digest());
    const auto salt = from_hex(file_id);

    auto blocks = encode_file(data, params_, salt);
    SignedFile signed_file = sig_gen(c.kp, c.pk, file_id, blocks);

    // server-side admission: every tag and the root signature must check
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (!verify_block_tag(c.pk, blocks[i], signed_file.tags[i])) {
            throw std::runtime_error("upload: server rejected tag for block " + std::to_string(i));
        }
    }
    if (!verify_root_sig(c.pk, signed_file.meta.root, signed_file.meta.root_sig)) {
        throw std::runtime_error("upload: server rejected root signature");
    }

    ServerFile sf;
    sf.owner = user;
    sf.file_name = file_name;
    sf.stored.s = params_.s;
    sf.stored.owner_pk = c.pk;
    sf.stored.manifest = signed_file.meta.manifest;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        sf.stored.blocks[blocks[i].uid] = blocks[i];
        sf.stored.tags[blocks[i].uid] = signed_file.tags[i];
        sf.stored.block_h[blocks[i].uid] = block_group_hash(blocks[i]);
    }
    sf.stored.tree = signed_file.tree;
    sf.stored.root_sig = signed_file.meta.root_sig;
    server_.files[file_id] = std::move(sf);
    append_log(user, LogAction::upload, file_name);

    // client drops the data, keeping only tracked metadata
    c.files[file_name] =
        ClientFile{file_id, TrackedRoot{signed_file.meta.root, signed_file.meta.root_sig,
                                        blocks.size()}};
    tpa_.registry[{user, file_id}] = TpaRegistration{c.pk, blocks.size()};
    return signed_file.meta;
}

const ServerFile& Harness::server_file(const std::string& user,
                                       const std::string& file_name) const {
    for (const auto& [id, sf] : server_.files) {
        if (sf.owner == user && sf.file_name == file_name) return sf;
    }
    throw std::invalid_argument("unknown file " + file_name + " for user " + user);
}

ServerFile& Harness::server_file_mut(const std::string& user, const std::string& file_name) {
    return const_cast<ServerFile&>(server_file(user, file_name));
}

StoredFile& Harness::stored_file_mut(const std::string& user, const std::string& file_name) {
    return server_file_mut(user, file_name).stored;
}

std::vector<std::uint8_t> Harness::client_download(const std::string& user,
                                                   const std::string& file_name) {
    ClientState& c = client(user);
    auto it = c.files.find(file_name);
    if (it == c.files.end()) throw std::invalid_argument("download: unknown file " + file_name);
    const ClientFile& cf = it->second;
    const ServerFile& sf = server_file(user, file_name);
    const StoredFile& stored = sf.stored;

    if (!verify_root_sig(c.pk, cf.tracked.root, cf.tracked.root_sig)) {
        throw IntegrityError(0, "download: tracked root signature invalid");
    }

    std::vector<Block> blocks;
    blocks.reserve(stored.block_count());
    for (std::size_t i = 0; i < stored.block_count(); ++i) {
        const Block& b = stored.block_at(i);
        AuthPath path = stored.tree.path(i);
        Digest leaf = block_leaf_digest(b);
        if (!verify_path(cf.tracked.root, leaf, path)) {
            throw IntegrityError(i, "download: block " + std::to_string(i) +
                                        " fails authentication against tracked root");
        }
        blocks.push_back(b);
    }
    auto data = decode_file(blocks);
    append_log(user, LogAction::download, file_name);
    return data;
}

Digest Harness::client_update(const std::string& user, const std::string& file_name, UpdateOp op,
                              std::ptrdiff_t index,
                              std::optional<std::span<const std::uint8_t>> new_bytes) {
    ClientState& c = client(user);
    auto it = c.files.find(file_name);
    if (it == c.files.end()) throw std::invalid_argument("update: unknown file " + file_name);
    ClientFile& cf = it->second;
    ServerFile& sf = server_file_mut(user, file_name);

    auto salt = rng_.bytes(16);
    UpdateRequest req = prepare_update(c.kp, c.pk, cf.file_id, op, index, new_bytes, params_, salt);

    // two-phase apply: provisional execution with rollback on rejection
    StoredFile backup = sf.stored;
    UpdateProof proof = exec_update(sf.stored, req);
    UpdateVerdict verdict = verify_update(c.kp, c.pk, cf.tracked, req, proof);
    if (!verdict.accepted()) {
        sf.stored = std::move(backup);
        throw UpdateRejected(*verdict.reason);
    }
    commit_root_sig(sf.stored, *verdict.new_root_sig);

    cf.tracked.root = proof.new_root;
    cf.tracked.root_sig = *verdict.new_root_sig;
    cf.tracked.n = sf.stored.block_count();
    tpa_.registry[{user, cf.file_id}].n = cf.tracked.n;

    LogAction action = op == UpdateOp::modify     ? LogAction::block_modify
                       : op == UpdateOp::insert_after ? LogAction::block_insert
                                                      : LogAction::block_delete;
    append_log(user, action, file_name);
    return proof.new_root;
}

AuditResult Harness::tpa_audit(const std::string& user, const std::string& file_name,
                               std::size_t c, std::optional<std::uint64_t> seed) {
    ClientState& owner = client(user);
    auto it = owner.files.find(file_name);
    if (it == owner.files.end()) throw std::invalid_argument("audit: unknown file " + file_name);
    const std::string& file_id = it->second.file_id;
    auto reg_it = tpa_.registry.find({user, file_id});
    if (reg_it == tpa_.registry.end()) {
        throw std::invalid_argument("audit: file not registered with TPA");
    }
    const TpaRegistration& reg = reg_it->second;

    Rng challenge_rng(seed ? *seed : rng_.next_u64());
    Challenge ch = gen_challenge(challenge_rng, file_id, reg.n, c);

    ServerFile& sf = server_file_mut(user, file_name);
    auto mask_key = rng_.bytes(32);  // server-side masking secret, fresh per proof
    AuditProof pf = gen_proof(sf.stored, ch, mask_key);

    AuditResult res = verify_proof(reg.pk, ch, pf);
    auto [date, time] = clock_.now();
    std::string reason = res.accepted ? "" : std::string(reject_reason_name(*res.reason));
    tpa_.records.push_back({user, file_id, res.accepted, reason, date, time});
    owner.acks.push_back({file_name, res.accepted, reason, date, time});
    return res;
}

BlockAck Harness::tpa_verify_block(const std::string& user, const std::string& file_name,
                                   std::size_t index) {
    ClientState& owner = client(user);
    auto it = owner.files.find(file_name);
    if (it == owner.files.end()) {
        throw std::invalid_argument("verify_block: unknown file " + file_name);
    }
    ServerFile& sf = server_file_mut(user, file_name);
    auto mask_key = rng_.bytes(32);
    auto [date, time] = clock_.now();
    BlockAck ack = verify_block(sf.stored, it->second.file_id, index, mask_key, rng_,
                                date + " " + time);
    append_log(user, LogAction::block_verify, file_name);
    owner.acks.push_back({file_name, !ack.modified,
                          ack.modified ? "block_modified" : "", date, time});
    return ack;
}

void Harness::corrupt_block(const std::string& user, const std::string& file_name,
                            std::size_t block_index, std::size_t bit) {
    StoredFile& stored = stored_file_mut(user, file_name);
    if (block_index >= stored.block_count()) throw std::out_of_range("corrupt_block: index");
    const std::size_t sector_bytes = params_.sector_bytes;
    if (bit >= stored.s * sector_bytes * 8) throw std::out_of_range("corrupt_block: bit");
    Block& b = stored.blocks[stored.manifest[block_index]];
    const std::size_t byte = bit / 8;
    const std::size_t j = byte / sector_bytes;
    const std::size_t k = byte % sector_bytes;
    const std::size_t shift = 8 * (sector_bytes - 1 - k) + bit % 8;
    b.sectors[j] = Scalar(b.sectors[j].value() ^ (std::uint64_t{1} << shift));
}

void Harness::corrupt_tag(const std::string& user, const std::string& file_name,
                          std::size_t index) {
    StoredFile& stored = server_file_mut(user, file_name).stored;
    if (index >= stored.block_count()) throw std::out_of_range("corrupt_tag: index");
    const std::string& uid = stored.manifest[index];
    BlockTag& tag = stored.tags[uid];
    tag.sigma = tag.sigma * stored.owner_pk.suite.generator();
}

double detection_probability(std::size_t n, std::size_t x, std::size_t c) {
    if (x > n || c < 1 || c > n) throw std::invalid_argument("detection_probability: domain");
    if (x == 0) return 0.0;
    if (c > n - x) return 1.0;  // more draws than intact blocks
    double miss = 1.0;
    for (std::size_t k = 0; k < c; ++k) {
        miss *= static_cast<double>(n - x - k) / static_cast<double>(n - k);
    }
    return 1.0 - miss;
}

std::string serialize_tpa_state(const TpaState& tpa) {
    codec::json regs = codec::json::array();
    for (const auto& [key, reg] : tpa.registry) {
        regs.push_back({{"user", key.first},
                        {"file_id", key.second},
                        {"pk", codec::public_key_to_json(reg.pk)},
                        {"n", reg.n}});
    }
    codec::json recs = codec::json::array();
    for (const auto& r : tpa.records) {
        recs.push_back({{"user", r.user},
                        {"file_id", r.file_id},
                        {"accepted", r.accepted},
                        {"reason", r.reason},
                        {"date", r.date},
                        {"time", r.time}});
    }
    return codec::canonical_dump({{"registry", regs}, {"records", recs}});
}

std::string serialize_client_state(const ClientState& client) {
    codec::json files = codec::json::object();
    for (const auto& [name, cf] : client.files) {
        files[name] = {{"file_id", cf.file_id},
                       {"root", to_hex(cf.tracked.root)},
                       {"root_sig", cf.tracked.root_sig.encode()},
                       {"n", cf.tracked.n}};
    }
    codec::json acks = codec::json::array();
    for (const auto& a : client.acks) {
        acks.push_back({{"file_name", a.file_name},
                        {"accepted", a.accepted},
                        {"reason", a.reason},
                        {"date", a.date},
                        {"time", a.time}});
    }
    return codec::canonical_dump({{"user", client.user},
                                  {"keypair", codec::keypair_to_json(client.kp)},
                                  {"public_key", codec::public_key_to_json(client.pk)},
                                  {"files", files},
                                  {"acks", acks}});
}

std::string render_log_csv(const std::vector<LogEntry>& log) {
    std::string out = "UserName,Action,File Name,Date,Time\n";
    for (const auto& e : log) {
        out += e.user;
        out += ',';
        out += log_action_name(e.action);
        out += ',';
        out += e.file;
        out += ',';
        out += e.date;
        out += ',';
        out += e.time;
        out += '\n';
    }
    return out;
}

std::string render_log_table(const std::vector<LogEntry>& log) {
    const std::array<std::string, 5> header = {"UserName", "Action", "File Name", "Date", "Time"};
    std::array<std::size_t, 5> width{};
    for (std::size_t i = 0; i < 5; ++i) width[i] = header[i].size();
    std::vector<std::array<std::string, 5>> rows;
    for (const auto& e : log) {
        rows.push_back({e.user, std::string(log_action_display(e.action)), e.file, e.date, e.time});
        for (std::size_t i = 0; i < 5; ++i) width[i] = std::max(width[i], rows.back()[i].size());
    }
    std::ostringstream os;
    auto emit = [&](const std::array<std::string, 5>& row) {
        for (std::size_t i = 0; i < 5; ++i) {
            os << row[i] << std::string(width[i] - row[i].size(), ' ')
               << (i + 1 < 5 ? "  " : "");
        }
        os << '\n';
    };
    emit(header);
    for (const auto& r : rows) emit(r);
    return os.str();
}

namespace {

std::vector<std::uint8_t> script_bytes(const std::string& user, const std::string& file,
                                       std::size_t nbytes, std::uint64_t seed) {
    ByteBuffer buf;
    buf.append(user);
    buf.push(0x1f);
    buf.append(file);
    buf.append_u64_be(nbytes);
    buf.append_u64_be(seed);
    Digest d = buf.digest();
    std::uint64_t s = 0;
    for (int i = 0; i < 8; ++i) s = (s << 8) | d[i];
    return Rng(s).bytes(nbytes);
}

}  // namespace

void run_script(Harness& h, std::istream& in, std::ostream& out) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string cmd;
        if (!(ls >> cmd) || cmd[0] == '#') continue;
        try {
            if (cmd == "clock") {
                std::string date, time;
                ls >> date >> time;
                h.clock().set(date, time);
            } else if (cmd == "upload") {
                std::string user, file;
                std::size_t nbytes;
                std::uint64_t seed = 0;
                ls >> user >> file >> nbytes;
                ls >> seed;
                auto data = script_bytes(user, file, nbytes, seed);
                auto meta = h.client_upload(user, file, data);
                out << "upload " << file << " ok n=" << meta.n << '\n';
            } else if (cmd == "download") {
                std::string user, file;
                ls >> user >> file;
                auto data = h.client_download(user, file);
                out << "download " << file << " ok bytes=" << data.size() << '\n';
            } else if (cmd == "insert" || cmd == "modify") {
                std::string user, file;
                std::ptrdiff_t index;
                std::size_t nbytes;
                std::uint64_t seed = 0;
                ls >> user >> file >> index >> nbytes;
                ls >> seed;
                auto data = script_bytes(user, file, nbytes, seed + 0x9000 + lineno);
                UpdateOp op = cmd == "insert" ? UpdateOp::insert_after : UpdateOp::modify;
                h.client_update(user, file, op, index, std::span<const std::uint8_t>(data));
                out << cmd << " " << file << " " << index << " ok\n";
            } else if (cmd == "delete") {
                std::string user, file;
                std::ptrdiff_t index;
                ls >> user >> file >> index;
                h.client_update(user, file, UpdateOp::erase, index, std::nullopt);
                out << "delete " << file << " " << index << " ok\n";
            } else if (cmd == "verify") {
                std::string user, file;
                std::size_t index;
                ls >> user >> file >> index;
                BlockAck ack = h.tpa_verify_block(user, file, index);
                out << (ack.modified ? "data modified" : "data not modified") << '\n';
            } else if (cmd == "audit") {
                std::string user, file;
                std::size_t c;
                ls >> user >> file >> c;
                std::uint64_t seed;
                std::optional<std::uint64_t> seed_opt;
                if (ls >> seed) seed_opt = seed;
                AuditResult res = h.tpa_audit(user, file, c, seed_opt);
                out << (res.accepted ? "data not modified" : "data modified") << '\n';
            } else if (cmd == "corrupt") {
                std::string user, file;
                std::size_t byte_index, bit;
                ls >> user >> file >> byte_index >> bit;
                h.corrupt_block(user, file, byte_index, bit);
                out << "corrupt " << file << " ok\n";
            } else if (cmd == "log") {
                std::string fmt;
                ls >> fmt;
                out << (fmt == "csv" ? render_log_csv(h.log()) : render_log_table(h.log()));
            } else {
                throw std::invalid_argument("unknown script command: " + cmd);
            }
        } catch (const std::exception& e) {
            out << "error line " << lineno << ": " << e.what() << '\n';
            throw;
        }
    }
}

}  // namespace audit
