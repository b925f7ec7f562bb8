#pragma once

// Deterministic three-party simulation: client (data owner), cloud
// server, and third-party auditor, wired together in process with an
// injectable logical clock, fault injection, and the client operation
// log. With a fixed seed and fixed clock two runs of the same script
// produce byte-identical logs and transcripts.

#include <iosfwd>
#include <map>
#include <vector>

#include "audit/batch.hpp"
#include "audit/dynamics.hpp"
#include "audit/protocol.hpp"

namespace audit {

enum class LogAction { upload, download, block_insert, block_delete, block_modify, block_verify };

std::string_view log_action_name(LogAction a);     // snake_case, persisted form
std::string_view log_action_display(LogAction a);  // table rendering
LogAction log_action_from_name(std::string_view name);

struct LogEntry {
    std::string user;
    LogAction action = LogAction::upload;
    std::string file;
    std::string date;  // YYYY-MM-DD
    std::string time;  // HH:MM:SS
};

/// Injectable clock. Simulation scripts pin it; the CLI runs it off wall
/// time.
class Clock {
public:
    Clock() : wall_(true) {}
    explicit Clock(std::int64_t epoch_seconds) : wall_(false), epoch_(epoch_seconds) {}

    void set(std::int64_t epoch_seconds) {
        wall_ = false;
        epoch_ = epoch_seconds;
    }
    void set(const std::string& date, const std::string& time);  // "YYYY-MM-DD", "HH:MM:SS"
    void use_wall() { wall_ = true; }

    std::pair<std::string, std::string> now() const;  // (date, time)

private:
    bool wall_;
    std::int64_t epoch_ = 0;
};

struct AuditAck {
    std::string file_name;
    bool accepted = false;
    std::string reason;  // empty on accept
    std::string date;
    std::string time;
};

struct ClientFile {
    std::string file_id;
    TrackedRoot tracked;
};

struct ClientState {
    std::string user;
    Keypair kp;
    PublicKey pk;
    std::map<std::string, ClientFile> files;  // by display name
    std::vector<AuditAck> acks;
};

struct ServerFile {
    std::string owner;
    std::string file_name;
    StoredFile stored;
};

struct ServerState {
    std::map<std::string, ServerFile> files;  // by file_id
    std::vector<LogEntry> log;
};

struct TpaRegistration {
    PublicKey pk;
    std::size_t n = 0;
};

struct AuditRecord {
    std::string user;
    std::string file_id;
    bool accepted = false;
    std::string reason;
    std::string date;
    std::string time;
};

struct TpaState {
    std::map<std::pair<std::string, std::string>, TpaRegistration> registry;  // (user, file_id)
    std::vector<AuditRecord> records;
};

/// Download failed an integrity check; index names the offending block.
class IntegrityError : public std::runtime_error {
public:
    IntegrityError(std::size_t index, const std::string& what)
        : std::runtime_error(what), index_(index) {}
    std::size_t index() const { return index_; }

private:
    std::size_t index_;
};

class UpdateRejected : public std::runtime_error {
public:
    explicit UpdateRejected(UpdateRejectReason reason)
        : std::runtime_error("update rejected: " + std::string(update_reject_name(reason))),
          reason_(reason) {}
    UpdateRejectReason reason() const { return reason_; }

private:
    UpdateRejectReason reason_;
};

class Harness {
public:
    explicit Harness(std::uint64_t seed, EncodingParams params = {});

    Clock& clock() { return clock_; }
    EncodingParams params() const { return params_; }

    /// Creates the client (with fresh keys) on first use.
    ClientState& client(const std::string& user);
    ServerState& server() { return server_; }
    TpaState& tpa() { return tpa_; }
    std::map<std::string, ClientState>& clients() { return clients_; }
    const std::map<std::string, ClientState>& clients() const { return clients_; }
    bool has_client(const std::string& user) const { return clients_.count(user) != 0; }

    FileMetadata client_upload(const std::string& user, const std::string& file_name,
                               std::span<const std::uint8_t> data);
    std::vector<std::uint8_t> client_download(const std::string& user,
                                              const std::string& file_name);
    /// Returns the accepted new root.
    Digest client_update(const std::string& user, const std::string& file_name, UpdateOp op,
                         std::ptrdiff_t index,
                         std::optional<std::span<const std::uint8_t>> new_bytes);

    AuditResult tpa_audit(const std::string& user, const std::string& file_name, std::size_t c,
                          std::optional<std::uint64_t> seed = std::nullopt);
    BlockAck tpa_verify_block(const std::string& user, const std::string& file_name,
                              std::size_t index);

    /// Test-only adversary: flips one bit of the stored block's bytes,
    /// leaving tag and tree untouched. bit indexes into the block's
    /// s * sector_bytes byte representation, LSB first within each byte.
    void corrupt_block(const std::string& user, const std::string& file_name,
                       std::size_t block_index, std::size_t bit);
    void corrupt_tag(const std::string& user, const std::string& file_name, std::size_t index);

    const std::vector<LogEntry>& log() const { return server_.log; }

    const ServerFile& server_file(const std::string& user, const std::string& file_name) const;
    StoredFile& stored_file_mut(const std::string& user, const std::string& file_name);

    Rng& rng() { return rng_; }

private:
    ServerFile& server_file_mut(const std::string& user, const std::string& file_name);
    void append_log(const std::string& user, LogAction action, const std::string& file);

    Rng rng_;
    EncodingParams params_;
    Clock clock_;
    std::map<std::string, ClientState> clients_;
    ServerState server_;
    TpaState tpa_;
};

/// Closed-form hypergeometric detection probability: chance a uniform
/// c-subset of n blocks hits at least one of x corrupted ones.
double detection_probability(std::size_t n, std::size_t x, std::size_t c);

/// Structural privacy scans used by tests and acceptance: serialized TPA
/// and client states must carry no block sector values.
std::string serialize_tpa_state(const TpaState& tpa);
std::string serialize_client_state(const ClientState& client);

/// Line-oriented deterministic session scripts (replay subcommand).
/// Commands: clock, upload, download, insert, modify, delete, verify,
/// audit, corrupt, log.
void run_script(Harness& h, std::istream& in, std::ostream& out);

std::string render_log_table(const std::vector<LogEntry>& log);
std::string render_log_csv(const std::vector<LogEntry>& log);

}  // namespace audit
