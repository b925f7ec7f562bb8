#include "audit/wire.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>

namespace audit {

std::string encode_frame(const WireMessage& msg) {
    codec::json j{{"version", msg.version}, {"kind", msg.kind}, {"body", msg.body}};
    std::string payload = codec::canonical_dump(j);
    if (payload.size() > kMaxFrameBytes) throw WireError("frame exceeds 16 MiB");
    std::string out;
    out.reserve(4 + payload.size());
    const auto len = static_cast<std::uint32_t>(payload.size());
    for (int i = 3; i >= 0; --i) out.push_back(static_cast<char>((len >> (8 * i)) & 0xff));
    out += payload;
    return out;
}

WireMessage decode_frame(std::string_view frame_payload) {
    codec::json j;
    try {
        j = codec::json::parse(frame_payload);
    } catch (const std::exception&) {
        throw WireError("malformed frame: not valid JSON");
    }
    if (!j.is_object() || !j.contains("version") || !j.contains("kind") || !j.contains("body")) {
        throw WireError("malformed frame: missing fields");
    }
    WireMessage msg;
    msg.version = j.at("version").get<int>();
    msg.kind = j.at("kind").get<std::string>();
    msg.body = j.at("body");
    return msg;
}

namespace {

bool read_exact(int fd, void* buf, std::size_t len) {
    auto* p = static_cast<char*>(buf);
    while (len > 0) {
        ssize_t r = ::read(fd, p, len);
        if (r <= 0) return false;
        p += r;
        len -= static_cast<std::size_t>(r);
    }
    return true;
}

bool write_all(int fd, std::string_view data) {
    const char* p = data.data();
    std::size_t len = data.size();
    while (len > 0) {
        ssize_t w = ::write(fd, p, len);
        if (w <= 0) return false;
        p += w;
        len -= static_cast<std::size_t>(w);
    }
    return true;
}

/// Reads one frame; empty optional on clean close or protocol error.
std::optional<std::string> read_frame_payload(int fd) {
    std::uint8_t hdr[4];
    if (!read_exact(fd, hdr, 4)) return std::nullopt;
    std::uint32_t len = (std::uint32_t(hdr[0]) << 24) | (std::uint32_t(hdr[1]) << 16) |
                        (std::uint32_t(hdr[2]) << 8) | std::uint32_t(hdr[3]);
    if (len > kMaxFrameBytes) throw WireError("oversize frame");
    std::string payload(len, '\0');
    if (!read_exact(fd, payload.data(), len)) return std::nullopt;
    return payload;
}

WireMessage error_message(const std::string& what) {
    return WireMessage{kWireVersion, "error", codec::json{{"message", what}}};
}

}  // namespace

WireServer::WireServer(Harness& harness, std::uint16_t port) : harness_(harness) {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw WireError("socket() failed");
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(port);
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
        ::close(listen_fd_);
        throw WireError("bind() failed");
    }
    socklen_t alen = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &alen);
    port_ = ntohs(addr.sin_port);
    if (::listen(listen_fd_, 16) != 0) {
        ::close(listen_fd_);
        throw WireError("listen() failed");
    }
    accept_thread_ = std::thread([this] { accept_loop(); });
}

WireServer::~WireServer() { stop(); }

void WireServer::stop() {
    bool expected = false;
    if (!stopping_.compare_exchange_strong(expected, true)) return;
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    if (accept_thread_.joinable()) accept_thread_.join();
    for (auto& w : workers_) {
        if (w.joinable()) w.join();
    }
}

void WireServer::accept_loop() {
    while (!stopping_) {
        int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) break;
        workers_.emplace_back([this, fd] { serve_connection(fd); });
    }
}

void WireServer::serve_connection(int fd) {
    try {
        while (true) {
            auto payload = read_frame_payload(fd);
            if (!payload) break;
            WireMessage response;
            try {
                response = handle(decode_frame(*payload));
            } catch (const WireError& e) {
                write_all(fd, encode_frame(error_message(e.what())));
                break;  // malformed frame closes the connection
            } catch (const std::exception& e) {
                response = error_message(e.what());
            }
            if (!write_all(fd, encode_frame(response))) break;
        }
    } catch (const WireError& e) {
        write_all(fd, encode_frame(error_message(e.what())));
    }
    ::close(fd);
}

WireMessage WireServer::handle(const WireMessage& request) {
    if (request.version != kWireVersion) {
        return error_message("unsupported version " + std::to_string(request.version) +
                             "; supported version is " + std::to_string(kWireVersion));
    }
    std::lock_guard lock(mutex_);

    if (request.kind == "challenge") {
        Challenge ch = codec::challenge_from_json(request.body);
        auto it = harness_.server().files.find(ch.file_id);
        if (it == harness_.server().files.end()) {
            return error_message("unknown file_id " + ch.file_id);
        }
        auto mask_key = harness_.rng().bytes(32);
        AuditProof pf = gen_proof(it->second.stored, ch, mask_key);
        return WireMessage{kWireVersion, "proof", codec::proof_to_json(pf)};
    }

    if (request.kind == "update_request") {
        UpdateRequest req = codec::update_request_from_json(request.body);
        auto it = harness_.server().files.find(req.file_id);
        if (it == harness_.server().files.end()) {
            return error_message("unknown file_id " + req.file_id);
        }
        if (pending_.count(req.file_id)) {
            // previous update never committed; roll it back first
            it->second.stored = std::move(pending_.at(req.file_id));
            pending_.erase(req.file_id);
        }
        StoredFile backup = it->second.stored;
        UpdateProof proof = exec_update(it->second.stored, req);
        pending_.emplace(req.file_id, std::move(backup));
        return WireMessage{kWireVersion, "update_proof", codec::update_proof_to_json(proof)};
    }

    if (request.kind == "root_sig") {
        const std::string file_id = request.body.at("file_id").get<std::string>();
        auto it = harness_.server().files.find(file_id);
        if (it == harness_.server().files.end()) {
            return error_message("unknown file_id " + file_id);
        }
        commit_root_sig(it->second.stored,
                        GroupElement::decode(request.body.at("root_sig").get<std::string>()));
        pending_.erase(file_id);
        return WireMessage{kWireVersion, "ack", codec::json{{"file_id", file_id}}};
    }

    return error_message("unknown kind " + request.kind);
}

WireMessage wire_request(const std::string& host, std::uint16_t port, const WireMessage& msg) {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw WireError("socket() failed");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host == "localhost" ? "127.0.0.1" : host.c_str(), &addr.sin_addr) !=
        1) {
        ::close(fd);
        throw WireError("bad host " + host);
    }
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
        ::close(fd);
        throw WireError("connect() failed");
    }
    std::string frame = encode_frame(msg);
    if (!write_all(fd, frame)) {
        ::close(fd);
        throw WireError("send failed");
    }
    auto payload = read_frame_payload(fd);
    ::close(fd);
    if (!payload) throw WireError("connection closed before response");
    return decode_frame(*payload);
}

}  // namespace audit
