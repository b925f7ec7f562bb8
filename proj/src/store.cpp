#include "audit/store.hpp"

#include <fstream>
#include <sstream>

#include "audit/codec.hpp"

namespace fs = std::filesystem;

namespace audit {

void write_file_atomic(const fs::path& path, std::string_view content) {
    fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw StoreError("cannot open " + tmp.string() + " for writing");
        os.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!os) throw StoreError("short write to " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw StoreError("cannot read " + path.string());
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

StoreConfig parse_config(std::string_view text) {
    StoreConfig cfg;
    std::istringstream is{std::string(text)};
    std::string line;
    while (std::getline(is, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const char* ws = " \t\r";
            s.erase(0, s.find_first_not_of(ws));
            auto last = s.find_last_not_of(ws);
            s.erase(last == std::string::npos ? 0 : last + 1);
            return s;
        };
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key == "suite") {
            (void)suite_from_name(value);  // validates
            cfg.suite = value;
        } else if (key == "sectors") {
            cfg.sectors = std::stoul(value);
        } else if (key == "sector_bytes") {
            cfg.sector_bytes = std::stoul(value);
        } else if (key == "challenge_size") {
            cfg.challenge_size = std::stoul(value);
        } else if (key == "lambda_bits") {
            cfg.lambda_bits = static_cast<unsigned>(std::stoul(value));
        } else {
            throw StoreError("config: unknown key " + key);
        }
    }
    return cfg;
}

std::string config_text(const StoreConfig& cfg) {
    std::ostringstream os;
    os << "suite=" << cfg.suite << '\n'
       << "sectors=" << cfg.sectors << '\n'
       << "sector_bytes=" << cfg.sector_bytes << '\n'
       << "challenge_size=" << cfg.challenge_size << '\n'
       << "lambda_bits=" << cfg.lambda_bits << '\n';
    return os.str();
}

bool Store::initialized() const { return fs::exists(root_ / "config.toml"); }

StoreConfig Store::config() const {
    if (!initialized()) {
        StoreConfig cfg;
        save_config(cfg);
        return cfg;
    }
    return parse_config(read_file(root_ / "config.toml"));
}

void Store::save_config(const StoreConfig& cfg) const {
    write_file_atomic(root_ / "config.toml", config_text(cfg));
}

namespace {

std::string block_to_bin(const Block& b) {
    ByteBuffer buf;
    buf.append_u64_be(b.raw_len);
    for (const auto& m : b.sectors) buf.append_u64_be(m.value());
    auto bytes = buf.bytes();
    return std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

Block block_from_bin(const std::string& uid, const std::string& bin, std::size_t s) {
    if (bin.size() != 8 + 8 * s) {
        throw StoreError("block file for uid " + uid + " has wrong size");
    }
    auto u64_at = [&](std::size_t off) {
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < 8; ++i) {
            v = (v << 8) | static_cast<std::uint8_t>(bin[off + i]);
        }
        return v;
    };
    Block b;
    b.uid = uid;
    b.raw_len = u64_at(0);
    for (std::size_t j = 0; j < s; ++j) {
        std::uint64_t v = u64_at(8 + 8 * j);
        if (v >= Scalar::kOrder) throw StoreError("block uid " + uid + " has out-of-range sector");
        b.sectors.push_back(Scalar(v));
    }
    return b;
}

std::vector<LogEntry> parse_log_csv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    std::vector<LogEntry> out;
    bool first = true;
    while (std::getline(is, line)) {
        if (first) {
            if (line != "UserName,Action,File Name,Date,Time") {
                throw StoreError("log.csv: unexpected header");
            }
            first = false;
            continue;
        }
        if (line.empty()) continue;
        std::array<std::string, 5> cols;
        std::size_t start = 0;
        for (std::size_t c = 0; c < 5; ++c) {
            auto comma = c + 1 < 5 ? line.find(',', start) : line.size();
            if (comma == std::string::npos) throw StoreError("log.csv: malformed row");
            cols[c] = line.substr(start, comma - start);
            start = comma + 1;
        }
        out.push_back({cols[0], log_action_from_name(cols[1]), cols[2], cols[3], cols[4]});
    }
    return out;
}

}  // namespace

void Store::save(Harness& h) const {
    save_config(StoreConfig{std::string(suite_name(SuiteId::transparent_mersenne61)),
                            h.params().s, h.params().sector_bytes,
                            config().challenge_size, config().lambda_bits});

    for (const auto& [user, client] : h.clients()) {
        write_file_atomic(root_ / "client" / user / "state.json",
                          serialize_client_state(client));
    }

    for (const auto& [file_id, sf] : h.server().files) {
        const fs::path dir = root_ / "server" / "files" / file_id;
        FileMetadata meta;
        meta.file_id = file_id;
        meta.n = sf.stored.block_count();
        meta.s = sf.stored.s;
        meta.root = sf.stored.tree.root();
        meta.root_sig = sf.stored.root_sig;
        meta.manifest = sf.stored.manifest;
        codec::json j{{"meta", codec::metadata_to_json(meta)},
                      {"owner", sf.owner},
                      {"file_name", sf.file_name},
                      {"owner_pk", codec::public_key_to_json(sf.stored.owner_pk)},
                      {"shape", sf.stored.tree.shape()}};
        write_file_atomic(dir / "metadata.json", codec::canonical_dump(j));

        std::string manifest_txt;
        for (const auto& uid : sf.stored.manifest) manifest_txt += uid + "\n";
        write_file_atomic(dir / "manifest.txt", manifest_txt);

        std::string leaves_txt;
        for (const auto& leaf : sf.stored.tree.leaves()) leaves_txt += to_hex(leaf) + "\n";
        write_file_atomic(dir / "mht.leaves", leaves_txt);

        for (const auto& [uid, block] : sf.stored.blocks) {
            write_file_atomic(dir / "blocks" / (uid + ".bin"), block_to_bin(block));
        }
        for (const auto& [uid, tag] : sf.stored.tags) {
            write_file_atomic(dir / "tags" / (uid + ".tag"), tag.sigma.encode());
        }
        // drop files for blocks that no longer exist
        for (const char* sub : {"blocks", "tags"}) {
            if (!fs::exists(dir / sub)) continue;
            for (const auto& entry : fs::directory_iterator(dir / sub)) {
                std::string uid = entry.path().stem().string();
                if (!sf.stored.blocks.count(uid)) fs::remove(entry.path());
            }
        }
    }
    // drop directories for deleted files
    if (fs::exists(root_ / "server" / "files")) {
        for (const auto& entry : fs::directory_iterator(root_ / "server" / "files")) {
            if (!h.server().files.count(entry.path().filename().string())) {
                fs::remove_all(entry.path());
            }
        }
    }

    write_file_atomic(root_ / "server" / "log.csv", render_log_csv(h.server().log));

    codec::json tpa = codec::json::parse(serialize_tpa_state(h.tpa()));
    write_file_atomic(root_ / "tpa" / "state.json", codec::canonical_dump(tpa));

    write_file_atomic(root_ / "seed.txt", std::to_string(h.rng().next_u64()));
}

Harness Store::load() const {
    StoreConfig cfg = config();
    std::uint64_t seed = 0x5eedf00d;
    if (fs::exists(root_ / "seed.txt")) seed = std::stoull(read_file(root_ / "seed.txt"));
    Harness h(seed, cfg.encoding());

    const fs::path client_dir = root_ / "client";
    if (fs::exists(client_dir)) {
        for (const auto& entry : fs::directory_iterator(client_dir)) {
            auto j = codec::json::parse(read_file(entry.path() / "state.json"));
            ClientState c;
            c.user = j.at("user").get<std::string>();
            c.kp = codec::keypair_from_json(j.at("keypair"));
            c.pk = codec::public_key_from_json(j.at("public_key"));
            for (const auto& [name, f] : j.at("files").items()) {
                ClientFile cf;
                cf.file_id = f.at("file_id").get<std::string>();
                cf.tracked.root = digest_from_hex(f.at("root").get<std::string>());
                cf.tracked.root_sig = GroupElement::decode(f.at("root_sig").get<std::string>());
                cf.tracked.n = f.at("n").get<std::size_t>();
                c.files[name] = cf;
            }
            for (const auto& a : j.at("acks")) {
                c.acks.push_back({a.at("file_name").get<std::string>(),
                                  a.at("accepted").get<bool>(),
                                  a.at("reason").get<std::string>(),
                                  a.at("date").get<std::string>(),
                                  a.at("time").get<std::string>()});
            }
            h.clients()[c.user] = std::move(c);
        }
    }

    const fs::path files_dir = root_ / "server" / "files";
    if (fs::exists(files_dir)) {
        for (const auto& entry : fs::directory_iterator(files_dir)) {
            const fs::path dir = entry.path();
            const std::string file_id = dir.filename().string();
            auto j = codec::json::parse(read_file(dir / "metadata.json"));
            FileMetadata meta = codec::metadata_from_json(j.at("meta"));
            if (meta.file_id != file_id) {
                throw StoreError("file " + file_id + ": metadata file_id mismatch");
            }
            if (meta.n != meta.manifest.size()) {
                throw StoreError("file " + file_id + ": n does not match manifest length");
            }

            ServerFile sf;
            sf.owner = j.at("owner").get<std::string>();
            sf.file_name = j.at("file_name").get<std::string>();
            sf.stored.s = meta.s;
            sf.stored.owner_pk = codec::public_key_from_json(j.at("owner_pk"));
            sf.stored.manifest = meta.manifest;
            sf.stored.root_sig = meta.root_sig;

            // manifest.txt must agree with metadata
            std::vector<std::string> manifest_txt;
            {
                std::istringstream ms(read_file(dir / "manifest.txt"));
                std::string line;
                while (std::getline(ms, line)) {
                    if (!line.empty()) manifest_txt.push_back(line);
                }
            }
            if (manifest_txt != meta.manifest) {
                throw StoreError("file " + file_id + ": manifest.txt disagrees with metadata");
            }

            for (const auto& uid : meta.manifest) {
                const fs::path bpath = dir / "blocks" / (uid + ".bin");
                const fs::path tpath = dir / "tags" / (uid + ".tag");
                if (!fs::exists(bpath)) throw StoreError("missing block file for uid " + uid);
                if (!fs::exists(tpath)) throw StoreError("missing tag file for uid " + uid);
                sf.stored.blocks[uid] = block_from_bin(uid, read_file(bpath), meta.s);
                std::string tag_text = read_file(tpath);
                try {
                    sf.stored.tags[uid] = BlockTag{GroupElement::decode(tag_text)};
                } catch (const std::exception&) {
                    throw StoreError("corrupt tag file for uid " + uid);
                }
            }

            std::vector<Digest> leaves;
            {
                std::istringstream ls(read_file(dir / "mht.leaves"));
                std::string line;
                while (std::getline(ls, line)) {
                    if (!line.empty()) leaves.push_back(digest_from_hex(line));
                }
            }
            sf.stored.tree = MhtTree::from_shape(leaves, j.at("shape").get<std::string>());
            if (!(sf.stored.tree.root() == meta.root)) {
                throw StoreError("file " + file_id + ": rebuilt MHT root differs from metadata");
            }
            h.server().files[file_id] = std::move(sf);
        }
    }

    if (fs::exists(root_ / "server" / "log.csv")) {
        h.server().log = parse_log_csv(read_file(root_ / "server" / "log.csv"));
    }

    if (fs::exists(root_ / "tpa" / "state.json")) {
        auto j = codec::json::parse(read_file(root_ / "tpa" / "state.json"));
        for (const auto& r : j.at("registry")) {
            TpaRegistration reg;
            reg.pk = codec::public_key_from_json(r.at("pk"));
            reg.n = r.at("n").get<std::size_t>();
            h.tpa().registry[{r.at("user").get<std::string>(),
                              r.at("file_id").get<std::string>()}] = reg;
        }
        for (const auto& r : j.at("records")) {
            h.tpa().records.push_back({r.at("user").get<std::string>(),
                                       r.at("file_id").get<std::string>(),
                                       r.at("accepted").get<bool>(),
                                       r.at("reason").get<std::string>(),
                                       r.at("date").get<std::string>(),
                                       r.at("time").get<std::string>()});
        }
    }
    return h;
}

}  // namespace audit
