#pragma once

#include <array>
#include <compare>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>

namespace kgfuse {

// String-backed label with a tag so node types and relation types do not mix.
template <typename Tag>
class Label {
public:
    Label() = default;
    explicit Label(std::string name) : name_(std::move(name)) {}

    const std::string& str() const noexcept { return name_; }
    bool empty() const noexcept { return name_.empty(); }

    friend auto operator<=>(const Label&, const Label&) = default;
    friend bool operator==(const Label&, const Label&) = default;
    friend std::ostream& operator<<(std::ostream& os, const Label& l) { return os << l.name_; }

private:
    std::string name_;
};

struct NodeTypeTag {};
struct RelationTypeTag {};
using NodeType = Label<NodeTypeTag>;
using RelationType = Label<RelationTypeTag>;

namespace taxonomy {

inline constexpr std::array<std::string_view, 5> kNodeTypes = {
    "Genes", "Diseases", "CognitiveProcesses", "BiologicalPathways", "TherapeuticTargets"};

inline constexpr std::array<std::string_view, 7> kRelations = {
    "Causes", "AssociatedWith", "Regulates", "InvolvedIn", "TreatedBy", "Influences", "LinkedTo"};

inline const RelationType kAssociatedWith{"AssociatedWith"};

bool is_canonical(const NodeType& t);
bool is_canonical(const RelationType& r);

// Loose match of a free-form label onto a canonical relation:
// "associated_with", "Associated with" and "AssociatedWith" all resolve.
std::optional<RelationType> canonical_relation(std::string_view label);
std::optional<NodeType> canonical_node_type(std::string_view label);

// "AssociatedWith" -> "associated with"; used as embedding text.
std::string humanize(std::string_view camel);

}  // namespace taxonomy
}  // namespace kgfuse

template <typename Tag>
struct std::hash<kgfuse::Label<Tag>> {
    std::size_t operator()(const kgfuse::Label<Tag>& l) const noexcept {
        return std::hash<std::string>{}(l.str());
    }
};
