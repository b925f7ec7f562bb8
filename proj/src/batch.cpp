#include "audit/batch.hpp"

#include <algorithm>
#include <mutex>

namespace audit {

TargetElement PairingCache::get(const PublicKey& pk, std::size_t j) {
    const auto key = std::make_pair(pk.fingerprint(), j);
    {
        std::shared_lock lock(mutex_);
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    }
    TargetElement value = pair(pk.u.at(j), pk.v);
    std::unique_lock lock(mutex_);
    return cache_.emplace(key, value).first->second;
}

std::vector<Scalar> draw_deltas(Rng& rng, std::size_t k, unsigned lambda_bits) {
    if (k < 1) throw std::invalid_argument("draw_deltas: k must be >= 1");
    if (lambda_bits < 1 || lambda_bits > 60) {
        throw std::invalid_argument("draw_deltas: lambda_bits out of range");
    }
    const std::uint64_t bound = std::uint64_t{1} << lambda_bits;  // draw in [1, 2^lambda)
    std::vector<Scalar> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) out.push_back(Scalar(1 + rng.below(bound - 1)));
    return out;
}

BatchTask make_batch_task(Rng& rng, std::vector<BatchEntry> entries, unsigned lambda_bits) {
    BatchTask task;
    task.deltas = draw_deltas(rng, entries.size(), lambda_bits);
    task.entries = std::move(entries);
    task.lambda_bits = lambda_bits;
    return task;
}

namespace {

/// Checks the combined pairing equation over a subset of entries:
///   pair(prod_k sigma_k^(gamma_k*delta_k), g) * prod_k R_mk^delta_k
///   == prod_k [ pair((prod_i H_ki^nu_ki)^(gamma_k*delta_k), v_k)
///               * prod_j pair(u_kj, v_k)^(mu_kj*delta_k) ]
bool combined_equation(const BatchTask& task, std::span<const std::size_t> subset,
                       PairingCache& cache) {
    const SuiteParams& suite = task.entries[subset.front()].pk.suite;
    const GroupElement g = suite.generator();

    GroupElement sigma_acc = suite.identity();
    TargetElement lhs_masks = suite.target_identity();
    TargetElement rhs = suite.target_identity();

    for (std::size_t k : subset) {
        const auto& e = task.entries[k];
        const Scalar delta = task.deltas[k];
        const Scalar gamma = hash_to_scalar(e.pf.r_mask.encode());
        const Scalar gd = gamma * delta;

        sigma_acc = sigma_acc * exp(e.pf.sigma, gd);
        lhs_masks = lhs_masks * target_exp(e.pf.r_mask, delta);

        GroupElement agg = suite.identity();
        for (std::size_t i = 0; i < e.ch.pairs.size(); ++i) {
            agg = agg * exp(e.pf.leaf_evidence[i].h, e.ch.pairs[i].second);
        }
        rhs = rhs * pair(exp(agg, gd), e.pk.v);
        for (std::size_t j = 0; j < e.pk.sectors(); ++j) {
            rhs = rhs * target_exp(cache.get(e.pk, j), e.pf.mu[j] * delta);
        }
    }
    TargetElement lhs = pair(sigma_acc, g) * lhs_masks;
    return lhs == rhs;
}

void bisect(const BatchTask& task, std::span<const std::size_t> subset, PairingCache& cache,
            std::vector<std::size_t>& culprits) {
    if (combined_equation(task, subset, cache)) return;
    if (subset.size() == 1) {
        culprits.push_back(subset.front());
        return;
    }
    const std::size_t half = subset.size() / 2;
    bisect(task, subset.subspan(0, half), cache, culprits);
    bisect(task, subset.subspan(half), cache, culprits);
}

}  // namespace

BatchResult batch_verify(const BatchTask& task, PairingCache* cache) {
    const std::size_t k = task.entries.size();
    if (k == 0) throw std::invalid_argument("batch_verify: empty task");
    if (task.deltas.size() != k) throw std::invalid_argument("batch_verify: delta count");
    for (const auto& d : task.deltas) {
        if (d.is_zero()) throw std::invalid_argument("batch_verify: zero combiner");
    }

    PairingCache local;
    PairingCache& pc = cache ? *cache : local;
    const std::uint64_t pairings_before = pairing_count();

    BatchResult result;
    std::vector<std::size_t> combinable;
    for (std::size_t i = 0; i < k; ++i) {
        const auto& e = task.entries[i];
        if (verify_proof_prechecks(e.pk, e.ch, e.pf)) {
            result.culprits.push_back(i);
        } else {
            combinable.push_back(i);
        }
    }

    if (!combinable.empty()) bisect(task, combinable, pc, result.culprits);

    std::sort(result.culprits.begin(), result.culprits.end());
    result.all_accept = result.culprits.empty();
    result.pairings = pairing_count() - pairings_before;
    return result;
}

}  // namespace audit
