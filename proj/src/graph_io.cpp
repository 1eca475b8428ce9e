#include "kgfuse/graph_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <vector>

#include "kgfuse/errors.hpp"

namespace kgfuse {

using nlohmann::json;

json node_to_json(const Node& n) {
    json j;
    j["kind"] = "node";
    j["id"] = n.id;
    j["label"] = n.label;
    j["node_type"] = n.type.str();
    j["aliases"] = n.aliases;
    j["description"] = n.description ? json(*n.description) : json(nullptr);
    j["sources"] = n.sources;
    return j;
}

json triple_to_json(const Triple& t) {
    json j;
    j["kind"] = "triple";
    j["head"] = t.head;
    j["relation"] = t.relation.str();
    j["tail"] = t.tail;
    j["provenance"] = t.provenance.to_string();
    j["confidence"] = t.confidence;
    return j;
}

json stats_to_json(const GraphStats& s) {
    return json{{"nodes", s.nodes},
                {"edges", s.edges},
                {"node_types", s.node_types},
                {"relation_types", s.relation_types}};
}

Node node_from_json(const json& j) {
    Node n;
    n.id = j.at("id").get<std::string>();
    n.label = j.value("label", std::string{});
    n.type = NodeType{j.at("node_type").get<std::string>()};
    if (j.contains("aliases")) n.aliases = j.at("aliases").get<std::set<std::string>>();
    if (j.contains("description") && !j.at("description").is_null()) {
        n.description = j.at("description").get<std::string>();
    }
    if (j.contains("sources")) n.sources = j.at("sources").get<std::set<std::string>>();
    return n;
}

Triple triple_from_json(const json& j) {
    Triple t;
    t.head = j.at("head").get<std::string>();
    t.relation = RelationType{j.at("relation").get<std::string>()};
    t.tail = j.at("tail").get<std::string>();
    t.provenance = Provenance::parse(j.value("provenance", std::string{"merged"}));
    t.confidence = j.value("confidence", 1.0);
    return t;
}

void write_graph_jsonl(const KnowledgeGraph& g, std::ostream& out, const std::optional<std::string>& config_hash) {
    if (config_hash) out << json{{"kind", "meta"}, {"config_hash", *config_hash}}.dump() << '\n';
    for (const auto& [id, n] : g.nodes()) out << node_to_json(n).dump() << '\n';
    for (const auto& [key, t] : g.triples()) out << triple_to_json(t).dump() << '\n';
}

KnowledgeGraph read_graph_jsonl(std::istream& in) {
    KnowledgeGraph g;
    std::vector<std::pair<std::size_t, Triple>> pending;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const json j = json::parse(line);
            const auto kind = j.at("kind").get<std::string>();
            if (kind == "node") {
                g.add_node(node_from_json(j));
            } else if (kind == "triple") {
                pending.emplace_back(lineno, triple_from_json(j));
            } else if (kind != "meta") {
                throw ParseError("unknown record kind '" + kind + "'", lineno);
            }
        } catch (const json::exception& e) {
            throw ParseError(std::string("malformed graph record: ") + e.what(), lineno);
        }
    }
    for (auto& [at, t] : pending) {
        try {
            g.add_triple(std::move(t));
        } catch (const IntegrityError& e) {
            throw IntegrityError(std::string(e.what()) + " (line " + std::to_string(at) + ")");
        }
    }
    return g;
}

KnowledgeGraph load_graph_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open graph file '" + path + "'");
    return read_graph_jsonl(in);
}

void save_graph_file(const KnowledgeGraph& g, const std::string& path, const std::optional<std::string>& config_hash) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write graph file '" + path + "'");
    write_graph_jsonl(g, out, config_hash);
}

void write_edge_tsv(const KnowledgeGraph& g, std::ostream& out, const std::optional<std::string>& config_hash) {
    if (config_hash) out << "# config_hash: " << *config_hash << '\n';
    out << "head_id\thead_label\thead_type\trelation\ttail_id\ttail_label\ttail_type\n";
    for (const auto& [key, t] : g.triples()) {
        const Node& h = g.node(key.head);
        const Node& tl = g.node(key.tail);
        out << h.id << '\t' << h.label << '\t' << h.type << '\t' << key.relation << '\t' << tl.id << '\t'
            << tl.label << '\t' << tl.type << '\n';
    }
}

}  // namespace kgfuse
