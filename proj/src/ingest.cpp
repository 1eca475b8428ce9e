#include "kgfuse/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "kgfuse/errors.hpp"
#include "kgfuse/node_text.hpp"
#include "kgfuse/union_find.hpp"

namespace kgfuse::ingest {
namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// Cuts an unquoted, unescaped '!' comment.
std::string_view strip_comment(std::string_view v) {
    bool quoted = false;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] == '\\') {
            ++i;
        } else if (v[i] == '"') {
            quoted = !quoted;
        } else if (v[i] == '!' && !quoted) {
            return trim(v.substr(0, i));
        }
    }
    return trim(v);
}

// Drops a trailing {qualifier=...} block.
std::string_view strip_modifiers(std::string_view v) {
    if (!v.empty() && v.back() == '}') {
        if (auto open = v.rfind('{'); open != std::string_view::npos) return trim(v.substr(0, open));
    }
    return v;
}

// First double-quoted string with OBO escapes resolved.
std::optional<std::string> quoted(std::string_view v) {
    const auto open = v.find('"');
    if (open == std::string_view::npos) return std::nullopt;
    std::string out;
    for (std::size_t i = open + 1; i < v.size(); ++i) {
        if (v[i] == '\\' && i + 1 < v.size()) {
            const char n = v[++i];
            out.push_back(n == 'n' ? '\n' : n == 't' ? '\t' : n);
        } else if (v[i] == '"') {
            return out;
        } else {
            out.push_back(v[i]);
        }
    }
    return std::nullopt;
}

struct PendingEdge {
    std::string from;
    std::string relation;
    std::string to;
    std::size_t line;
};

struct Stanza {
    std::size_t line = 0;
    std::optional<std::string> id;
    std::string name;
    std::optional<std::string> ns;
    std::optional<std::string> def;
    std::set<std::string> synonyms;
    std::vector<PendingEdge> edges;
    bool obsolete = false;
};

}  // namespace

SourceFormat parse_source_format(std::string_view s) {
    if (s == "obo") return SourceFormat::obo;
    if (s == "edge_tsv" || s == "tsv") return SourceFormat::edge_tsv;
    throw ConfigError("unknown source format '" + std::string(s) + "' (expected obo or edge_tsv)");
}

std::string to_string(SourceFormat f) { return f == SourceFormat::obo ? "obo" : "edge_tsv"; }

KnowledgeGraph parse_obo(std::istream& in, const SourceSpec& spec, const OboOptions& opts) {
    KnowledgeGraph g;
    std::optional<std::string> default_ns;
    std::set<std::string> obsolete;
    std::vector<PendingEdge> edges;

    std::optional<Stanza> term;  // open [Term] stanza, if any
    bool in_header = true;

    auto node_type_for = [&](const Stanza& s) {
        if (s.ns) return NodeType{*s.ns};
        if (default_ns) return NodeType{*default_ns};
        if (spec.default_node_type) return *spec.default_node_type;
        return NodeType{spec.name};
    };

    auto close_term = [&] {
        if (!term) return;
        Stanza s = std::move(*term);
        term.reset();
        if (!s.id) throw ParseError("[Term] stanza without an id", s.line);
        if (s.obsolete) {
            obsolete.insert(*s.id);
            return;
        }
        Node n;
        n.id = *s.id;
        n.label = s.name;
        n.type = node_type_for(s);
        n.aliases = std::move(s.synonyms);
        n.description = std::move(s.def);
        n.sources = {spec.name};
        g.add_node(std::move(n));
        for (auto& e : s.edges) {
            e.from = *s.id;
            edges.push_back(std::move(e));
        }
    };

    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const auto line = trim(raw);
        if (line.empty() || line.front() == '!') continue;
        if (line.front() == '[') {
            close_term();
            in_header = false;
            if (line == "[Term]") {
                term.emplace();
                term->line = lineno;
            }
            continue;
        }
        const auto colon = line.find(':');
        if (colon == std::string_view::npos) continue;
        const auto tag = trim(line.substr(0, colon));
        const auto value = trim(line.substr(colon + 1));

        if (in_header) {
            if (tag == "default-namespace") default_ns = std::string(strip_comment(value));
            continue;
        }
        if (!term) continue;

        if (tag == "id") {
            const auto id = strip_comment(value);
            if (id.empty()) throw ParseError("empty id", lineno);
            term->id = std::string(id);
        } else if (tag == "name") {
            term->name = std::string(strip_comment(value));
        } else if (tag == "namespace") {
            term->ns = std::string(strip_comment(value));
        } else if (tag == "def") {
            if (auto q = quoted(value)) term->def = std::move(*q);
        } else if (tag == "synonym") {
            if (auto q = quoted(value); q && !q->empty()) term->synonyms.insert(std::move(*q));
        } else if (tag == "is_obsolete") {
            term->obsolete = strip_comment(value) == "true";
        } else if (tag == "is_a") {
            const auto target = strip_modifiers(strip_comment(value));
            if (target.empty()) throw ParseError("is_a without a target", lineno);
            term->edges.push_back({{}, "is_a", std::string(target), lineno});
        } else if (tag == "relationship") {
            const auto body = strip_modifiers(strip_comment(value));
            const auto sp = body.find_first_of(" \t");
            if (sp == std::string_view::npos) throw ParseError("relationship needs a type and a target", lineno);
            const auto rel = trim(body.substr(0, sp));
            const auto target = trim(body.substr(sp + 1));
            if (target.empty() || target.find_first_of(" \t") != std::string_view::npos) {
                throw ParseError("malformed relationship line", lineno);
            }
            term->edges.push_back({{}, std::string(rel), std::string(target), lineno});
        }
    }
    close_term();

    std::vector<std::string> unresolved;
    for (auto& e : edges) {
        if (obsolete.count(e.to)) continue;
        if (!g.has_node(e.to)) {
            if (!opts.drop_unresolved) unresolved.push_back(e.to + " (line " + std::to_string(e.line) + ")");
            continue;
        }
        g.add_triple({e.from, RelationType{e.relation}, e.to, Provenance::from_source(spec.name), 1.0});
    }
    if (!unresolved.empty()) {
        std::string msg = "OBO source '" + spec.name + "' references " + std::to_string(unresolved.size()) +
                          " unknown id(s): ";
        for (std::size_t i = 0; i < unresolved.size() && i < 20; ++i) msg += (i ? ", " : "") + unresolved[i];
        if (unresolved.size() > 20) msg += ", ...";
        throw IntegrityError(msg);
    }
    return g;
}

KnowledgeGraph parse_edge_tsv(std::istream& in, const SourceSpec& spec) {
    KnowledgeGraph g;
    std::string raw;
    std::size_t lineno = 0;
    bool header_seen = false;
    while (std::getline(in, raw)) {
        ++lineno;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        if (!raw.empty() && raw[0] == '#') continue;  // comments, e.g. the config hash line
        if (!header_seen) {
            header_seen = true;
            if (std::count(raw.begin(), raw.end(), '\t') != 6)
                throw ParseError("header must have 7 tab-separated columns", lineno);
            continue;
        }
        if (trim(raw).empty()) continue;

        std::vector<std::string> cols;
        std::size_t start = 0;
        for (;;) {
            const auto tab = raw.find('\t', start);
            cols.push_back(raw.substr(start, tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        if (cols.size() != 7) {
            throw ParseError("expected 7 tab-separated columns, found " + std::to_string(cols.size()), lineno);
        }
        auto type_of = [&](const std::string& col) {
            if (!col.empty()) return NodeType{col};
            if (spec.default_node_type) return *spec.default_node_type;
            throw ParseError("empty node type and no default", lineno);
        };
        if (cols[0].empty() || cols[4].empty() || cols[3].empty()) {
            throw ParseError("empty head id, relation or tail id", lineno);
        }
        try {
            g.add_node({cols[0], cols[1], type_of(cols[2]), {}, std::nullopt, {spec.name}});
            g.add_node({cols[4], cols[5], type_of(cols[6]), {}, std::nullopt, {spec.name}});
        } catch (const TypeConflictError& e) {
            throw TypeConflictError(std::string(e.what()) + " (line " + std::to_string(lineno) + ")");
        }
        g.add_triple({cols[0], RelationType{cols[3]}, cols[4], Provenance::from_source(spec.name), 1.0});
    }
    return g;
}

KnowledgeGraph load_source(const SourceSpec& spec, const OboOptions& opts) {
    std::ifstream in(spec.path, std::ios::binary);
    if (!in) throw ConfigError("cannot open source '" + spec.name + "' at '" + spec.path + "'");
    return spec.format == SourceFormat::obo ? parse_obo(in, spec, opts) : parse_edge_tsv(in, spec);
}

FilterResult noise_filter(const KnowledgeGraph& g, const embed::EmbeddingProvider& provider, double threshold) {
    if (!(threshold > 0.0)) throw ConfigError("noise filter threshold must be positive");

    std::map<NodeType, std::vector<const Node*>> by_type;
    for (const auto& [id, n] : g.nodes()) by_type[n.type].push_back(&n);

    IdUnionFind uf;
    std::map<std::string, double> best;  // node -> best linking similarity
    if (threshold <= 1.0) {
        for (const auto& [type, members] : by_type) {
            std::vector<std::vector<embed::EmbeddingVector>> vecs;
            vecs.reserve(members.size());
            for (const Node* n : members) vecs.push_back(embed_node_texts(*n, provider));
            for (std::size_t i = 0; i < members.size(); ++i) {
                for (std::size_t j = i + 1; j < members.size(); ++j) {
                    const double s = max_pair_similarity(vecs[i], vecs[j]);
                    if (s < threshold) continue;
                    uf.unite(members[i]->id, members[j]->id);
                    for (const auto* id : {&members[i]->id, &members[j]->id}) {
                        auto [it, fresh] = best.try_emplace(*id, s);
                        if (!fresh && s > it->second) it->second = s;
                    }
                }
            }
        }
    }

    FilterResult out;
    auto canonical = [&](const std::string& id) { return best.count(id) ? uf.find(id) : id; };
    // Ids ascend, so each group's survivor is inserted before its members.
    for (const auto& [id, n] : g.nodes()) {
        const std::string c = canonical(id);
        if (c == id) {
            out.graph.add_node(n);
            continue;
        }
        Node folded{c, {}, n.type, n.aliases, n.description, n.sources};
        if (!n.label.empty()) folded.aliases.insert(n.label);
        out.graph.add_node(std::move(folded));
        out.log.push_back({c, id, best.at(id)});
    }
    for (const auto& [key, t] : g.triples()) {
        Triple r = t;
        r.head = canonical(t.head);
        r.tail = canonical(t.tail);
        out.graph.add_triple(std::move(r));
    }
    return out;
}

void write_removal_log(const std::vector<RemovalEntry>& log, std::ostream& out) {
    out << "kept_id\tremoved_id\tscore\n";
    for (const auto& e : log) {
        std::ostringstream score;
        score.precision(17);
        score << e.score;
        out << e.kept_id << '\t' << e.removed_id << '\t' << score.str() << '\n';
    }
}

}  // namespace kgfuse::ingest
