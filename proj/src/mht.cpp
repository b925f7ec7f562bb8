#include "audit/mht.hpp"

#include <algorithm>

namespace audit {

namespace {
constexpr std::uint8_t kDsLeaf = 0x00;
constexpr std::uint8_t kDsInternal = 0x01;
constexpr std::uint8_t kDsEmpty = 0x02;
}  // namespace

Digest mht_leaf_hash(const Digest& leaf) {
    ByteBuffer buf;
    buf.push(kDsLeaf);
    buf.append(std::span<const std::uint8_t>(leaf));
    return buf.digest();
}

Digest mht_internal_hash(const Digest& left, const Digest& right) {
    ByteBuffer buf;
    buf.push(kDsInternal);
    buf.append(std::span<const std::uint8_t>(left));
    buf.append(std::span<const std::uint8_t>(right));
    return buf.digest();
}

Digest mht_empty_root() {
    ByteBuffer buf;
    buf.push(kDsEmpty);
    return buf.digest();
}

Digest fold_path(Digest node_hash, std::span<const PathStep> steps) {
    for (const auto& step : steps) {
        node_hash = step.side == Side::right ? mht_internal_hash(node_hash, step.sibling)
                                             : mht_internal_hash(step.sibling, node_hash);
    }
    return node_hash;
}

bool verify_path(const Digest& root, const Digest& leaf, const AuthPath& p) {
    return fold_path(mht_leaf_hash(leaf), p.siblings) == root;
}

struct MhtTree::Node {
    Digest hash;
    Digest content;  // leaf nodes only: the pre-hash leaf digest
    NodePtr left;
    NodePtr right;
    std::size_t leaves = 1;

    bool is_leaf() const { return !left; }

    static NodePtr make_leaf(const Digest& content) {
        auto n = std::make_shared<Node>();
        n->hash = mht_leaf_hash(content);
        n->content = content;
        return n;
    }

    static NodePtr make_internal(NodePtr l, NodePtr r) {
        auto n = std::make_shared<Node>();
        n->hash = mht_internal_hash(l->hash, r->hash);
        n->leaves = l->leaves + r->leaves;
        n->left = std::move(l);
        n->right = std::move(r);
        return n;
    }
};

MhtTree MhtTree::build(std::span<const Digest> leaves) {
    if (leaves.empty()) return MhtTree();
    std::vector<NodePtr> level;
    level.reserve(leaves.size());
    for (const auto& l : leaves) level.push_back(Node::make_leaf(l));
    while (level.size() > 1) {
        std::vector<NodePtr> next;
        next.reserve((level.size() + 1) / 2);
        for (std::size_t i = 0; i + 1 < level.size(); i += 2) {
            next.push_back(Node::make_internal(level[i], level[i + 1]));
        }
        if (level.size() % 2 == 1) next.push_back(level.back());  // odd node carried up
        level = std::move(next);
    }
    return MhtTree(level.front());
}

MhtTree MhtTree::from_shape(std::span<const Digest> leaves, std::string_view shape) {
    if (shape.empty()) {
        if (!leaves.empty()) throw std::invalid_argument("mht shape: empty shape, nonempty leaves");
        return MhtTree();
    }
    auto parse = [&](auto&& self) -> NodePtr {
        if (shape.empty()) throw std::invalid_argument("mht shape: truncated");
        char c = shape.front();
        shape.remove_prefix(1);
        if (c == 'L') {
            if (leaves.empty()) throw std::invalid_argument("mht shape: too few leaves");
            auto n = Node::make_leaf(leaves.front());
            leaves = leaves.subspan(1);
            return n;
        }
        if (c != 'I') throw std::invalid_argument("mht shape: bad character");
        auto l = self(self);
        auto r = self(self);
        return Node::make_internal(std::move(l), std::move(r));
    };
    auto root = parse(parse);
    if (!leaves.empty() || !shape.empty()) {
        throw std::invalid_argument("mht shape: leaves/shape length mismatch");
    }
    return MhtTree(std::move(root));
}

std::size_t MhtTree::leaf_count() const { return root_ ? root_->leaves : 0; }

Digest MhtTree::root() const { return root_ ? root_->hash : mht_empty_root(); }

Digest MhtTree::leaf(std::size_t i) const {
    if (i >= leaf_count()) throw std::out_of_range("MhtTree::leaf: index out of range");
    const Node* n = root_.get();
    while (!n->is_leaf()) {
        if (i < n->left->leaves) {
            n = n->left.get();
        } else {
            i -= n->left->leaves;
            n = n->right.get();
        }
    }
    return n->content;
}

std::vector<Digest> MhtTree::leaves() const {
    std::vector<Digest> out;
    out.reserve(leaf_count());
    std::vector<const Node*> stack;
    if (root_) stack.push_back(root_.get());
    while (!stack.empty()) {
        const Node* n = stack.back();
        stack.pop_back();
        if (n->is_leaf()) {
            out.push_back(n->content);
        } else {
            stack.push_back(n->right.get());
            stack.push_back(n->left.get());
        }
    }
    return out;
}

std::string MhtTree::shape() const {
    std::string out;
    std::vector<const Node*> stack;
    if (root_) stack.push_back(root_.get());
    while (!stack.empty()) {
        const Node* n = stack.back();
        stack.pop_back();
        if (n->is_leaf()) {
            out.push_back('L');
        } else {
            out.push_back('I');
            stack.push_back(n->right.get());
            stack.push_back(n->left.get());
        }
    }
    return out;
}

AuthPath MhtTree::path(std::size_t i) const {
    if (i >= leaf_count()) throw std::out_of_range("MhtTree::path: index out of range");
    AuthPath p;
    p.leaf_index = i;
    const Node* n = root_.get();
    std::size_t rel = i;
    while (!n->is_leaf()) {
        if (rel < n->left->leaves) {
            p.siblings.push_back({n->right->hash, Side::right});
            n = n->left.get();
        } else {
            rel -= n->left->leaves;
            p.siblings.push_back({n->left->hash, Side::left});
            n = n->right.get();
        }
    }
    std::reverse(p.siblings.begin(), p.siblings.end());  // leaf-to-root order
    return p;
}

std::pair<MhtTree, AuthPath> MhtTree::modify(std::size_t i, const Digest& new_leaf) const {
    AuthPath old = path(i);  // range-checks i
    // path-copy down to leaf i
    auto rec = [&](auto&& self, const NodePtr& n, std::size_t rel) -> NodePtr {
        if (n->is_leaf()) return Node::make_leaf(new_leaf);
        if (rel < n->left->leaves) return Node::make_internal(self(self, n->left, rel), n->right);
        return Node::make_internal(n->left, self(self, n->right, rel - n->left->leaves));
    };
    return {MhtTree(rec(rec, root_, i)), old};
}

std::pair<MhtTree, AuthPath> MhtTree::insert_after(std::ptrdiff_t i, const Digest& new_leaf) const {
    const auto n = static_cast<std::ptrdiff_t>(leaf_count());
    if (i < -1 || i >= n) throw std::out_of_range("MhtTree::insert_after: index out of range");
    if (n == 0) {
        // only i == -1 reaches here; the old path is vacuous
        return {MhtTree(Node::make_leaf(new_leaf)), AuthPath{}};
    }
    const bool prepend = i < 0;
    const std::size_t pos = prepend ? 0 : static_cast<std::size_t>(i);
    AuthPath old = path(pos);
    auto rec = [&](auto&& self, const NodePtr& node, std::size_t rel) -> NodePtr {
        if (node->is_leaf()) {
            auto fresh = Node::make_leaf(new_leaf);
            auto kept = Node::make_leaf(node->content);
            // insertion order: new leaf lands at pos for prepend, pos+1 otherwise
            return prepend ? Node::make_internal(std::move(fresh), std::move(kept))
                           : Node::make_internal(std::move(kept), std::move(fresh));
        }
        if (rel < node->left->leaves) {
            return Node::make_internal(self(self, node->left, rel), node->right);
        }
        return Node::make_internal(node->left, self(self, node->right, rel - node->left->leaves));
    };
    return {MhtTree(rec(rec, root_, pos)), old};
}

std::pair<MhtTree, AuthPath> MhtTree::erase(std::size_t i) const {
    if (leaf_count() == 0) throw std::out_of_range("MhtTree::erase: empty tree");
    AuthPath old = path(i);
    auto rec = [&](auto&& self, const NodePtr& node, std::size_t rel) -> NodePtr {
        if (node->is_leaf()) return nullptr;
        if (rel < node->left->leaves) {
            auto nl = self(self, node->left, rel);
            return nl ? Node::make_internal(std::move(nl), node->right) : node->right;
        }
        auto nr = self(self, node->right, rel - node->left->leaves);
        return nr ? Node::make_internal(node->left, std::move(nr)) : node->left;
    };
    return {MhtTree(rec(rec, root_, i)), old};
}

}  // namespace audit
