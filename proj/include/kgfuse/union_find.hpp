#pragma once

#include <map>
#include <string>
#include <vector>

namespace kgfuse {

// Disjoint sets over string ids. The representative of every set is its
// lexicographically smallest member, so results never depend on union order.
class IdUnionFind {
public:
    void add(const std::string& id) { parent_.try_emplace(id, id); }

    const std::string& find(const std::string& id) {
        add(id);
        std::string root = id;
        while (parent_.at(root) != root) root = parent_.at(root);
        std::string cur = id;
        while (parent_.at(cur) != root) {
            std::string next = parent_.at(cur);
            parent_[cur] = root;
            cur = std::move(next);
        }
        return parent_.find(root)->first;
    }

    void unite(const std::string& a, const std::string& b) {
        std::string ra = find(a);
        std::string rb = find(b);
        if (ra == rb) return;
        if (rb < ra) std::swap(ra, rb);
        parent_[rb] = ra;
    }

    // representative -> members (sorted), singletons included.
    std::map<std::string, std::vector<std::string>> components() {
        std::map<std::string, std::vector<std::string>> out;
        std::vector<std::string> ids;
        ids.reserve(parent_.size());
        for (const auto& [id, p] : parent_) ids.push_back(id);
        for (const auto& id : ids) out[find(id)].push_back(id);
        return out;
    }

private:
    std::map<std::string, std::string> parent_;
};

}  // namespace kgfuse
