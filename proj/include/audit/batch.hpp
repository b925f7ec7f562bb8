#pragma once

// Multi-user batch auditing: one randomized combined pairing equation
// over K independent proofs, with bisection to isolate invalid entries.
// The random combiners delta_k stop complementary invalid proofs from
// cancelling in the product.

#include <map>
#include <shared_mutex>
#include <vector>

#include "audit/protocol.hpp"

namespace audit {

/// Memoizes pair(u_j, v) per public key. Shared-lock reads, exclusive
/// inserts.
class PairingCache {
public:
    TargetElement get(const PublicKey& pk, std::size_t j);

private:
    std::map<std::pair<std::string, std::size_t>, TargetElement> cache_;
    std::shared_mutex mutex_;
};

struct BatchEntry {
    PublicKey pk;
    Challenge ch;
    AuditProof pf;
};

struct BatchTask {
    std::vector<BatchEntry> entries;
    std::vector<Scalar> deltas;      // one nonzero combiner per entry
    unsigned lambda_bits = 40;
};

struct BatchResult {
    bool all_accept = false;
    std::vector<std::size_t> culprits;   // sorted entry indices
    std::uint64_t pairings = 0;          // pair() evaluations spent
};

std::vector<Scalar> draw_deltas(Rng& rng, std::size_t k, unsigned lambda_bits);

/// Builds a task with freshly drawn combiners.
BatchTask make_batch_task(Rng& rng, std::vector<BatchEntry> entries, unsigned lambda_bits = 40);

BatchResult batch_verify(const BatchTask& task, PairingCache* cache = nullptr);

}  // namespace audit
