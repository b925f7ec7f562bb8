#pragma once

// On-disk persistence for all three parties. Writes go to a temp name
// then an atomic rename; load verifies the layout invariants and refuses
// a store that fails them, naming the first violation.

#include <filesystem>

#include "audit/harness.hpp"

namespace audit {

class StoreError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct StoreConfig {
    std::string suite = "transparent-mersenne61";
    std::size_t sectors = 1;
    std::size_t sector_bytes = 7;
    std::size_t challenge_size = 10;
    unsigned lambda_bits = 40;

    EncodingParams encoding() const { return EncodingParams{sectors, sector_bytes}; }
};

StoreConfig parse_config(std::string_view text);
std::string config_text(const StoreConfig& cfg);

class Store {
public:
    explicit Store(std::filesystem::path root) : root_(std::move(root)) {}

    const std::filesystem::path& root() const { return root_; }
    bool initialized() const;

    /// Reads config.toml, creating it with defaults on first use.
    StoreConfig config() const;
    void save_config(const StoreConfig& cfg) const;

    void save(Harness& h) const;
    /// Loads the full world; fresh (empty) stores initialize cleanly.
    Harness load() const;

private:
    std::filesystem::path root_;
};

void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

}  // namespace audit
