#include "kgfuse/align.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>
#include <tuple>

#include "kgfuse/errors.hpp"
#include "kgfuse/graph_io.hpp"
#include "kgfuse/node_text.hpp"
#include "kgfuse/tokenize.hpp"
#include "kgfuse/union_find.hpp"
#include "parallel.hpp"

namespace kgfuse::align {
namespace {

struct Prepared {
    const Node* node;
    std::vector<embed::EmbeddingVector> texts;
};

std::vector<const SourceGraph*> sorted_sources(std::span<const SourceGraph> graphs) {
    std::vector<const SourceGraph*> out;
    for (const auto& g : graphs) out.push_back(&g);
    std::sort(out.begin(), out.end(), [](auto* a, auto* b) { return a->name < b->name; });
    for (std::size_t i = 1; i < out.size(); ++i) {
        if (out[i]->name == out[i - 1]->name) throw ConfigError("duplicate source name '" + out[i]->name + "'");
    }
    return out;
}

}  // namespace

void TaxonomyMap::set(const std::string& source, const std::string& native, NodeType canonical) {
    if (!taxonomy::is_canonical(canonical)) {
        throw ConfigError("type mapping target '" + canonical.str() + "' is not a canonical node type");
    }
    tables_[source][native] = std::move(canonical);
}

NodeType TaxonomyMap::map(const std::string& source, const NodeType& native) const {
    if (taxonomy::is_canonical(native)) return native;
    for (const auto& key : {source, std::string("*")}) {
        if (auto t = tables_.find(key); t != tables_.end()) {
            if (auto it = t->second.find(native.str()); it != t->second.end()) return it->second;
        }
    }
    throw ConfigError("no type mapping for '" + native.str() + "' in source '" + source + "'");
}

TaxonomyMap TaxonomyMap::load_tsv(std::istream& in) {
    TaxonomyMap m;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        std::vector<std::string> cols;
        std::size_t start = 0;
        for (;;) {
            auto tab = line.find('\t', start);
            cols.push_back(line.substr(start, tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        if (cols.size() != 3) throw ParseError("type map rows need 3 columns", lineno);
        if (lineno == 1 && cols[0] == "source") continue;
        m.set(cols[0], cols[1], NodeType{cols[2]});
    }
    return m;
}

std::vector<AlignmentDecision> align_nodes(std::span<const SourceGraph> graphs,
                                           const embed::EmbeddingProvider& provider, double tau,
                                           const TaxonomyMap& taxonomy) {
    if (!(tau > 0.0)) throw ConfigError("alignment threshold must be positive");
    const auto sources = sorted_sources(graphs);

    // source index -> mapped type -> prepared nodes
    std::vector<std::map<NodeType, std::vector<Prepared>>> prepared(sources.size());
    for (std::size_t s = 0; s < sources.size(); ++s) {
        for (const auto& [id, n] : sources[s]->graph.nodes()) {
            prepared[s][taxonomy.map(sources[s]->name, n.type)].push_back({&n, embed_node_texts(n, provider)});
        }
    }

    std::vector<AlignmentDecision> decisions;
    if (tau <= 1.0) {
        for (std::size_t a = 0; a < sources.size(); ++a) {
            for (std::size_t b = a + 1; b < sources.size(); ++b) {
                for (const auto& [type, lefts] : prepared[a]) {
                    auto rit = prepared[b].find(type);
                    if (rit == prepared[b].end()) continue;
                    const auto& rights = rit->second;
                    auto found = detail::parallel_collect<AlignmentDecision>(
                        lefts.size(), [&](std::size_t i, std::vector<AlignmentDecision>& out) {
                            const Prepared& l = lefts[i];
                            for (const Prepared& r : rights) {
                                if (l.node->id == r.node->id) continue;
                                const double s = max_pair_similarity(l.texts, r.texts);
                                if (s >= tau) {
                                    out.push_back({{sources[a]->name, l.node->id}, {sources[b]->name, r.node->id}, s, {}});
                                }
                            }
                        });
                    std::move(found.begin(), found.end(), std::back_inserter(decisions));
                }
            }
        }
    }

    IdUnionFind uf;
    for (const auto& d : decisions) uf.unite(d.left.id, d.right.id);
    for (auto& d : decisions) d.merged_into = uf.find(d.left.id);
    std::sort(decisions.begin(), decisions.end(), [](const auto& x, const auto& y) {
        return std::tie(x.left, x.right) < std::tie(y.left, y.right);
    });
    return decisions;
}

std::vector<double> EmbeddingLabelScorer::score(std::string_view label, std::span<const RelationType> canonical) const {
    const auto v = provider_.embed(label);
    std::vector<double> out;
    out.reserve(canonical.size());
    for (const auto& c : canonical) out.push_back(embed::cosine_sim(v, provider_.embed(taxonomy::humanize(c.str()))));
    return out;
}

RelationTable load_relation_table(std::istream& in) {
    RelationTable table;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
            throw ParseError("relation table rows need 2 columns", lineno);
        }
        const auto src = line.substr(0, tab);
        const auto dst = line.substr(tab + 1);
        if (lineno == 1 && src == "source_label") continue;
        const RelationType target{dst};
        if (!taxonomy::is_canonical(target)) {
            throw ConfigError("relation table maps '" + src + "' to non-canonical '" + dst + "' (line " +
                              std::to_string(lineno) + ")");
        }
        table[ingest::normalize_text(src)] = target;
    }
    return table;
}

std::vector<RelationMapping> unify_relations(const std::set<std::string>& labels, const RelationLabelScorer& scorer,
                                             const RelationTable& static_table, double tau_rel) {
    std::vector<RelationType> canon;
    for (auto r : taxonomy::kRelations) canon.emplace_back(std::string(r));

    std::vector<RelationMapping> out;
    for (const auto& label : labels) {
        if (auto it = static_table.find(ingest::normalize_text(label)); it != static_table.end()) {
            out.push_back({label, it->second, 1.0, MappingOrigin::static_table});
            continue;
        }
        if (auto c = taxonomy::canonical_relation(label)) {
            out.push_back({label, *c, 1.0, MappingOrigin::static_table});
            continue;
        }
        const auto scores = scorer.score(label, canon);
        if (scores.size() != canon.size()) throw Error("relation scorer returned the wrong number of scores");
        const auto best = static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) - scores.begin());
        if (scores[best] >= tau_rel) {
            out.push_back({label, canon[best], scores[best], MappingOrigin::predictor});
        } else {
            out.push_back({label, taxonomy::kAssociatedWith, scores[best], MappingOrigin::predictor});
        }
    }
    return out;
}

MergeResult merge_graphs(std::span<const SourceGraph> graphs, const std::vector<AlignmentDecision>& decisions,
                         const std::vector<RelationMapping>& mappings, const TaxonomyMap& taxonomy, double tau) {
    const auto sources = sorted_sources(graphs);
    std::map<std::string, const KnowledgeGraph*> by_name;
    for (auto* s : sources) by_name[s->name] = &s->graph;

    IdUnionFind uf;
    for (auto* s : sources) {
        for (const auto& [id, n] : s->graph.nodes()) uf.add(id);
    }
    for (const auto& d : decisions) {
        for (const auto* ref : {&d.left, &d.right}) {
            auto g = by_name.find(ref->source);
            if (g == by_name.end() || !g->second->has_node(ref->id)) {
                throw IntegrityError("alignment decision references unknown node '" + ref->id + "' in source '" +
                                     ref->source + "'");
            }
        }
        uf.unite(d.left.id, d.right.id);
    }

    std::map<std::string, RelationType> relmap;
    for (const auto& m : mappings) relmap[m.source_label] = m.unified_label;
    auto map_relation = [&](const RelationType& r) {
        if (auto it = relmap.find(r.str()); it != relmap.end()) return it->second;
        if (taxonomy::is_canonical(r)) return r;
        throw ConfigError("relation '" + r.str() + "' has no unified mapping");
    };

    MergeResult result;
    MergeReport& report = result.report;
    report.decisions = decisions;
    report.mappings = mappings;
    report.tau = tau;

    // Survivors first so the canonical node's own label wins.
    for (int pass = 0; pass < 2; ++pass) {
        for (auto* s : sources) {
            for (const auto& [id, n] : s->graph.nodes()) {
                const std::string& c = uf.find(id);
                const bool survivor = c == id;
                if (survivor != (pass == 0)) continue;
                Node m{c, survivor ? n.label : std::string{}, taxonomy.map(s->name, n.type), n.aliases,
                       n.description, n.sources};
                if (!survivor && !n.label.empty()) m.aliases.insert(n.label);
                result.graph.add_node(std::move(m));
                report.lineage.nodes[c].push_back({s->name, id});
            }
        }
    }

    struct Acc {
        double confidence = 0.0;
        std::set<std::string> contributors;
        bool rewritten = false;
        Provenance first;
    };
    std::map<TripleKey, Acc> acc;
    std::vector<std::set<std::pair<std::string, std::string>>> source_adjacency(sources.size());
    for (std::size_t si = 0; si < sources.size(); ++si) {
        const auto* s = sources[si];
        for (const auto& [key, t] : s->graph.triples()) {
            TripleKey k{uf.find(t.head), map_relation(t.relation), uf.find(t.tail)};
            source_adjacency[si].emplace(k.head, k.tail);
            auto& a = acc[k];
            if (a.contributors.empty()) a.first = t.provenance;
            a.confidence = std::max(a.confidence, t.confidence);
            a.contributors.insert(s->name);
            a.rewritten = a.rewritten || k.head != t.head || k.tail != t.tail;
            report.lineage.triples[k].push_back({s->name, key});
        }
    }
    for (auto& [k, a] : acc) {
        const bool untouched = a.contributors.size() == 1 && !a.rewritten;
        Triple t{k.head, k.relation, k.tail, untouched ? a.first : Provenance::merged(), a.confidence};
        const bool seen = std::any_of(source_adjacency.begin(), source_adjacency.end(),
                                      [&](const auto& adj) { return adj.count({k.head, k.tail}) != 0; });
        if (!seen) report.delta_edges.push_back(t);
        result.graph.add_triple(std::move(t));
    }
    result.graph.check_integrity();
    return result;
}

void append_predicted_edges(MergeReport& report, const std::vector<Triple>& predicted) {
    for (const auto& t : predicted) {
        auto dup = std::find_if(report.delta_edges.begin(), report.delta_edges.end(),
                                [&](const Triple& d) { return d.key() == t.key(); });
        if (dup == report.delta_edges.end()) report.delta_edges.push_back(t);
    }
}

std::string to_string(MappingOrigin o) { return o == MappingOrigin::static_table ? "static_table" : "predictor"; }

nlohmann::json decision_to_json(const AlignmentDecision& d) {
    return {{"kind", "decision"},
            {"left", {{"source", d.left.source}, {"id", d.left.id}}},
            {"right", {{"source", d.right.source}, {"id", d.right.id}}},
            {"score", d.score},
            {"merged_into", d.merged_into}};
}

nlohmann::json mapping_to_json(const RelationMapping& m) {
    return {{"kind", "mapping"},
            {"source_label", m.source_label},
            {"unified_label", m.unified_label.str()},
            {"score", m.score},
            {"origin", to_string(m.origin)}};
}

void write_merge_report_jsonl(const MergeReport& report, std::ostream& out,
                              const std::optional<std::string>& config_hash) {
    nlohmann::json meta{{"kind", "meta"}, {"tau", report.tau}};
    if (config_hash) meta["config_hash"] = *config_hash;
    out << meta.dump() << '\n';
    for (const auto& d : report.decisions) out << decision_to_json(d).dump() << '\n';
    for (const auto& m : report.mappings) out << mapping_to_json(m).dump() << '\n';
    for (const auto& t : report.delta_edges) {
        auto j = triple_to_json(t);
        j["kind"] = "delta";
        out << j.dump() << '\n';
    }
    for (const auto& [id, refs] : report.lineage.nodes) {
        nlohmann::json from = nlohmann::json::array();
        for (const auto& r : refs) from.push_back({{"source", r.source}, {"id", r.id}});
        out << nlohmann::json{{"kind", "node_lineage"}, {"id", id}, {"from", from}}.dump() << '\n';
    }
    for (const auto& [key, refs] : report.lineage.triples) {
        nlohmann::json from = nlohmann::json::array();
        for (const auto& r : refs) {
            from.push_back({{"source", r.source}, {"head", r.key.head}, {"relation", r.key.relation.str()},
                            {"tail", r.key.tail}});
        }
        out << nlohmann::json{{"kind", "triple_lineage"},
                              {"head", key.head},
                              {"relation", key.relation.str()},
                              {"tail", key.tail},
                              {"from", from}}
                   .dump()
            << '\n';
    }
}

MergeReport read_merge_report_jsonl(std::istream& in) {
    MergeReport r;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            const auto kind = j.at("kind").get<std::string>();
            if (kind == "meta") {
                r.tau = j.value("tau", 0.0);
            } else if (kind == "decision") {
                r.decisions.push_back({{j["left"]["source"], j["left"]["id"]},
                                       {j["right"]["source"], j["right"]["id"]},
                                       j.at("score").get<double>(),
                                       j.at("merged_into").get<std::string>()});
            } else if (kind == "mapping") {
                r.mappings.push_back({j.at("source_label").get<std::string>(),
                                      RelationType{j.at("unified_label").get<std::string>()},
                                      j.at("score").get<double>(),
                                      j.at("origin") == "predictor" ? MappingOrigin::predictor
                                                                    : MappingOrigin::static_table});
            } else if (kind == "delta") {
                r.delta_edges.push_back(triple_from_json(j));
            } else if (kind == "node_lineage") {
                auto& refs = r.lineage.nodes[j.at("id").get<std::string>()];
                for (const auto& f : j.at("from")) refs.push_back({f.at("source"), f.at("id")});
            } else if (kind == "triple_lineage") {
                TripleKey k{j.at("head"), RelationType{j.at("relation").get<std::string>()}, j.at("tail")};
                auto& refs = r.lineage.triples[k];
                for (const auto& f : j.at("from")) {
                    refs.push_back({f.at("source"),
                                    {f.at("head"), RelationType{f.at("relation").get<std::string>()}, f.at("tail")}});
                }
            } else {
                throw ParseError("unknown merge report record '" + kind + "'", lineno);
            }
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("malformed merge report record: ") + e.what(), lineno);
        }
    }
    return r;
}

}  // namespace kgfuse::align
