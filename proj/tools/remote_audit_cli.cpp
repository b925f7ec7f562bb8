// remote-audit: command-line front end for the three-party storage
// auditing simulator. State for client, server, and TPA lives in a store
// directory (--store or REMOTE_AUDIT_STORE).
//
// Exit codes: 0 success/accept, 1 reject or integrity failure, 2 usage
// error, 3 I/O or store corruption.

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>

#include "audit/store.hpp"
#include "audit/wire.hpp"

using namespace audit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitReject = 1;
constexpr int kExitUsage = 2;
constexpr int kExitStore = 3;

std::vector<std::uint8_t> read_binary(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw StoreError("cannot read " + path);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

volatile std::sig_atomic_t g_stop = 0;
void on_signal(int) { g_stop = 1; }

struct World {
    Store store;
    StoreConfig cfg;
    Harness harness;

    explicit World(const std::string& root)
        : store(root), cfg(store.config()), harness(store.load()) {
        harness.clock().use_wall();
    }
    void save() { store.save(harness); }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"remote-audit: public auditing with data dynamics, three-party simulator"};
    app.require_subcommand(1);

    std::string store_root;
    app.add_option("--store", store_root, "store directory")
        ->envname("REMOTE_AUDIT_STORE");

    std::string user, name, data_path, out_path, op_name = "modify", format = "table", script_path;
    std::ptrdiff_t index = 0;
    std::size_t challenge_c = 0, bit = 0;
    std::uint64_t seed = 0;
    bool have_seed = false;
    std::uint16_t port = 9151;

    auto* keygen_cmd = app.add_subcommand("keygen", "create a client keypair");
    keygen_cmd->add_option("--user", user)->required();

    auto* upload_cmd = app.add_subcommand("upload", "encode, tag, and store a file");
    upload_cmd->add_option("path", data_path)->required();
    upload_cmd->add_option("--user", user)->required();
    upload_cmd->add_option("--name", name, "display name (defaults to basename)");

    auto* download_cmd = app.add_subcommand("download", "fetch and verify a file");
    download_cmd->add_option("name", name)->required();
    download_cmd->add_option("--user", user)->required();
    download_cmd->add_option("-o,--out", out_path, "output path (default: stdout)");

    auto* audit_cmd = app.add_subcommand("audit", "spot-check a file via the TPA");
    audit_cmd->add_option("name", name)->required();
    audit_cmd->add_option("--user", user)->required();
    audit_cmd->add_option("-c", challenge_c, "challenged block count (default from config)");
    audit_cmd->add_option("--seed", seed)->each([&](const std::string&) { have_seed = true; });

    auto* batch_cmd = app.add_subcommand("batch-audit", "audit every registered file in one batch");

    auto* update_cmd = app.add_subcommand("update", "block-level modify/insert_after/delete");
    update_cmd->add_option("name", name)->required();
    update_cmd->add_option("--user", user)->required();
    update_cmd->add_option("--op", op_name)->check(CLI::IsMember({"modify", "insert_after", "delete"}));
    update_cmd->add_option("--index", index)->required();
    update_cmd->add_option("--data", data_path, "file holding the new block bytes");

    auto* verify_cmd = app.add_subcommand("verify-block", "single-block audit");
    verify_cmd->add_option("name", name)->required();
    verify_cmd->add_option("--user", user)->required();
    verify_cmd->add_option("--index", index)->required();

    auto* log_cmd = app.add_subcommand("log", "render the client operation log");
    log_cmd->add_option("--user", user, "filter by user");
    log_cmd->add_option("--format", format)->check(CLI::IsMember({"table", "csv"}));

    auto* corrupt_cmd = app.add_subcommand("corrupt", "flip one stored bit (fault injection)");
    corrupt_cmd->add_option("name", name)->required();
    corrupt_cmd->add_option("--user", user)->required();
    corrupt_cmd->add_option("--index", index)->required();
    corrupt_cmd->add_option("--bit", bit)->required();

    auto* replay_cmd = app.add_subcommand("replay", "run a deterministic session script");
    replay_cmd->add_option("script", script_path)->required();
    replay_cmd->add_option("--seed", seed);

    auto* serve_cmd = app.add_subcommand("serve", "serve the store over the framed wire protocol");
    serve_cmd->add_option("--port", port);

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(replay_cmd)) {
            // replay runs a self-contained deterministic world
            Harness h(seed ? seed : 42);
            std::ifstream script(script_path);
            if (!script) throw StoreError("cannot read script " + script_path);
            run_script(h, script, std::cout);
            if (!store_root.empty()) Store(store_root).save(h);
            return kExitOk;
        }

        if (store_root.empty()) {
            std::cerr << "error: no store directory (--store or REMOTE_AUDIT_STORE)\n";
            return kExitUsage;
        }
        World world(store_root);
        Harness& h = world.harness;

        if (app.got_subcommand(keygen_cmd)) {
            h.client(user);
            world.save();
            std::cout << "keys ready for " << user << "\n";
            return kExitOk;
        }

        if (app.got_subcommand(upload_cmd)) {
            auto data = read_binary(data_path);
            if (name.empty()) name = std::filesystem::path(data_path).filename().string();
            FileMetadata meta = h.client_upload(user, name, data);
            world.save();
            std::cout << "uploaded " << name << " as " << meta.n << " blocks, file_id "
                      << meta.file_id << "\n";
            return kExitOk;
        }

        if (app.got_subcommand(download_cmd)) {
            try {
                auto data = h.client_download(user, name);
                world.save();
                if (out_path.empty()) {
                    std::cout.write(reinterpret_cast<const char*>(data.data()),
                                    static_cast<std::streamsize>(data.size()));
                } else {
                    std::ofstream os(out_path, std::ios::binary);
                    os.write(reinterpret_cast<const char*>(data.data()),
                             static_cast<std::streamsize>(data.size()));
                }
                return kExitOk;
            } catch (const IntegrityError& e) {
                std::cerr << "download rejected: " << e.what() << "\n";
                return kExitReject;
            }
        }

        if (app.got_subcommand(audit_cmd)) {
            std::size_t c = challenge_c ? challenge_c : world.cfg.challenge_size;
            c = std::min(c, h.client(user).files.at(name).tracked.n);
            AuditResult res = h.tpa_audit(user, name, c,
                                          have_seed ? std::optional(seed) : std::nullopt);
            world.save();
            std::cout << (res.accepted ? "data not modified" : "data modified") << "\n";
            return res.accepted ? kExitOk : kExitReject;
        }

        if (app.got_subcommand(batch_cmd)) {
            std::vector<BatchEntry> entries;
            for (const auto& [key, reg] : h.tpa().registry) {
                const auto& [owner, file_id] = key;
                Rng ch_rng(h.rng().next_u64());
                std::size_t c = std::min(world.cfg.challenge_size, reg.n);
                Challenge ch = gen_challenge(ch_rng, file_id, reg.n, c);
                auto mask_key = h.rng().bytes(32);
                AuditProof pf = gen_proof(h.server().files.at(file_id).stored, ch, mask_key);
                entries.push_back({reg.pk, ch, pf});
            }
            if (entries.empty()) {
                std::cerr << "no registered files to audit\n";
                return kExitUsage;
            }
            const std::size_t k = entries.size();
            BatchTask task = make_batch_task(h.rng(), std::move(entries), world.cfg.lambda_bits);
            BatchResult result = batch_verify(task);
            world.save();
            std::cout << codec::canonical_dump(codec::batch_report_to_json(result, k)) << "\n";
            return result.all_accept ? kExitOk : kExitReject;
        }

        if (app.got_subcommand(update_cmd)) {
            std::optional<std::vector<std::uint8_t>> bytes;
            UpdateOp op = update_op_from_name(op_name);
            if (op != UpdateOp::erase) {
                if (data_path.empty()) {
                    std::cerr << "error: --data required for " << op_name << "\n";
                    return kExitUsage;
                }
                bytes = read_binary(data_path);
            }
            try {
                std::optional<std::span<const std::uint8_t>> view;
                if (bytes) view = std::span<const std::uint8_t>(*bytes);
                Digest new_root = h.client_update(user, name, op, index, view);
                world.save();
                std::cout << "update accepted, new root " << to_hex(new_root) << "\n";
                return kExitOk;
            } catch (const UpdateRejected& e) {
                std::cerr << e.what() << "\n";
                return kExitReject;
            }
        }

        if (app.got_subcommand(verify_cmd)) {
            BlockAck ack = h.tpa_verify_block(user, name, static_cast<std::size_t>(index));
            world.save();
            std::cout << (ack.modified ? "data modified" : "data not modified") << "\n";
            return ack.modified ? kExitReject : kExitOk;
        }

        if (app.got_subcommand(log_cmd)) {
            std::vector<LogEntry> entries = h.log();
            if (!user.empty()) {
                std::erase_if(entries, [&](const LogEntry& e) { return e.user != user; });
            }
            std::cout << (format == "csv" ? render_log_csv(entries) : render_log_table(entries));
            return kExitOk;
        }

        if (app.got_subcommand(corrupt_cmd)) {
            h.corrupt_block(user, name, static_cast<std::size_t>(index), bit);
            world.save();
            std::cout << "flipped bit " << bit << " of block " << index << " in " << name << "\n";
            return kExitOk;
        }

        if (app.got_subcommand(serve_cmd)) {
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            WireServer server(h, port);
            std::cout << "serving on 127.0.0.1:" << server.port() << "\n";
            while (!g_stop) {
                struct timespec ts{0, 100'000'000};
                nanosleep(&ts, nullptr);
            }
            server.stop();
            world.save();
            return kExitOk;
        }
    } catch (const StoreError& e) {
        std::cerr << "store error: " << e.what() << "\n";
        return kExitStore;
    } catch (const WireError& e) {
        std::cerr << "wire error: " << e.what() << "\n";
        return kExitStore;
    } catch (const IntegrityError& e) {
        std::cerr << "integrity error: " << e.what() << "\n";
        return kExitReject;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::out_of_range& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitStore;
    }
    return kExitUsage;
}
