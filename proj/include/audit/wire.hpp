#pragma once

// Length-prefixed framed wire protocol so the three parties can run as
// separate processes: 4-byte big-endian length + UTF-8 canonical JSON
// message. One request, one response; malformed frames get an error
// frame and the connection closes.

#include <atomic>
#include <mutex>
#include <thread>

#include "audit/codec.hpp"
#include "audit/harness.hpp"

namespace audit {

inline constexpr int kWireVersion = 1;
inline constexpr std::size_t kMaxFrameBytes = 16 * 1024 * 1024;

struct WireMessage {
    int version = kWireVersion;
    std::string kind;  // challenge | proof | update_request | update_proof | root_sig | ack | error
    codec::json body;
};

std::string encode_frame(const WireMessage& msg);
/// Parses one frame from a byte buffer holding at least one whole frame.
WireMessage decode_frame(std::string_view frame_payload);

class WireError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Serves a harness's server-side state over TCP. Connections are
/// handled concurrently; per-file mutations are funnelled through one
/// lock.
class WireServer {
public:
    /// port 0 picks an ephemeral port; port() reports the actual one.
    WireServer(Harness& harness, std::uint16_t port);
    ~WireServer();

    std::uint16_t port() const { return port_; }
    void stop();

    /// Builds the response for one request; exposed for loopback tests.
    WireMessage handle(const WireMessage& request);

private:
    void accept_loop();
    void serve_connection(int fd);

    Harness& harness_;
    std::map<std::string, StoredFile> pending_;  // pre-update backups awaiting commit
    std::mutex mutex_;
    int listen_fd_ = -1;
    std::uint16_t port_ = 0;
    std::atomic<bool> stopping_{false};
    std::thread accept_thread_;
    std::vector<std::thread> workers_;
};

/// One-shot client: sends a request frame and waits for the response.
WireMessage wire_request(const std::string& host, std::uint16_t port, const WireMessage& msg);

}  // namespace audit
