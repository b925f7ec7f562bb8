#pragma once

// Authenticated dynamic Merkle hash tree over block-hash leaves.
//
// The tree is deliberately unbalanced under dynamics: insertion splits a
// leaf into an internal node over (old, new), deletion promotes the
// sibling into the deleted leaf's parent slot. Membership paths carry
// explicit side bits, so verification is depth-agnostic and stable under
// index shifts. Node hashing is domain separated (0x00 leaf, 0x01
// internal, 0x02 empty sentinel).

#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "audit/common.hpp"

namespace audit {

enum class Side : std::uint8_t { left = 0, right = 1 };

struct PathStep {
    Digest sibling;
    Side side;  // which side of the running hash the sibling sits on

    friend bool operator==(const PathStep&, const PathStep&) = default;
};

/// Sibling evidence for one leaf, ordered leaf-to-root.
struct AuthPath {
    std::size_t leaf_index = 0;
    std::vector<PathStep> siblings;

    friend bool operator==(const AuthPath&, const AuthPath&) = default;
};

Digest mht_leaf_hash(const Digest& leaf);
Digest mht_internal_hash(const Digest& left, const Digest& right);
Digest mht_empty_root();

/// Folds an already-hashed node digest through sibling steps.
Digest fold_path(Digest node_hash, std::span<const PathStep> steps);

bool verify_path(const Digest& root, const Digest& leaf, const AuthPath& p);

class MhtTree {
public:
    MhtTree() = default;  // empty tree

    static MhtTree build(std::span<const Digest> leaves);

    /// Rebuild a (possibly unbalanced) tree from its leaf list and a
    /// preorder shape string ('I' internal, 'L' leaf, "" empty).
    static MhtTree from_shape(std::span<const Digest> leaves, std::string_view shape);

    std::size_t leaf_count() const;
    Digest root() const;
    Digest leaf(std::size_t i) const;          // content digest, not the node hash
    std::vector<Digest> leaves() const;        // ordered content digests
    std::string shape() const;

    AuthPath path(std::size_t i) const;

    /// Each update returns the new tree plus the OLD leaf's path, valid
    /// against the pre-update root.
    std::pair<MhtTree, AuthPath> modify(std::size_t i, const Digest& new_leaf) const;
    std::pair<MhtTree, AuthPath> insert_after(std::ptrdiff_t i, const Digest& new_leaf) const;
    std::pair<MhtTree, AuthPath> erase(std::size_t i) const;

private:
    struct Node;
    using NodePtr = std::shared_ptr<const Node>;
    explicit MhtTree(NodePtr root) : root_(std::move(root)) {}

    NodePtr root_;
};

}  // namespace audit
