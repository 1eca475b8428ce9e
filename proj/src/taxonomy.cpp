#include "kgfuse/taxonomy.hpp"

#include <algorithm>
#include <cctype>

namespace kgfuse::taxonomy {
namespace {

std::string squash(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
    }
    return out;
}

template <std::size_t N>
std::optional<std::string> match(std::string_view label, const std::array<std::string_view, N>& names) {
    const std::string key = squash(label);
    for (auto name : names) {
        if (squash(name) == key) return std::string(name);
    }
    return std::nullopt;
}

}  // namespace

bool is_canonical(const NodeType& t) {
    return std::find(kNodeTypes.begin(), kNodeTypes.end(), t.str()) != kNodeTypes.end();
}

bool is_canonical(const RelationType& r) {
    return std::find(kRelations.begin(), kRelations.end(), r.str()) != kRelations.end();
}

std::optional<RelationType> canonical_relation(std::string_view label) {
    if (auto m = match(label, kRelations)) return RelationType{*m};
    return std::nullopt;
}

std::optional<NodeType> canonical_node_type(std::string_view label) {
    if (auto m = match(label, kNodeTypes)) return NodeType{*m};
    return std::nullopt;
}

std::string humanize(std::string_view camel) {
    std::string out;
    for (std::size_t i = 0; i < camel.size(); ++i) {
        const auto c = static_cast<unsigned char>(camel[i]);
        if (std::isupper(c) && i > 0) out.push_back(' ');
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

}  // namespace kgfuse::taxonomy
