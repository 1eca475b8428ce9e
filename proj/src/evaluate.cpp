#include "kgfuse/evaluate.hpp"

#include <sys/resource.h>

#include <algorithm>
#include <chrono>
#include <istream>
#include <ostream>
#include <sstream>

#include "kgfuse/errors.hpp"

namespace kgfuse::evaluate {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, '\t')) out.push_back(cell);
    if (!line.empty() && line.back() == '\t') out.emplace_back();
    for (auto& c : out) {
        while (!c.empty() && (c.back() == '\r' || c.back() == ' ')) c.pop_back();
        c.erase(0, c.find_first_not_of(' '));
    }
    return out;
}

bool skip_line(const std::string& line) {
    const auto p = line.find_first_not_of(" \t\r");
    return p == std::string::npos || line[p] == '#';
}

template <typename F>
void for_rows(std::istream& in, std::size_t columns, std::string_view header_first, F&& f) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (skip_line(line)) continue;
        auto cells = split_tabs(line);
        if (lineno == 1 && !cells.empty() && cells[0] == header_first) continue;
        if (cells.size() < columns)
            throw ParseError("expected " + std::to_string(columns) + " tab-separated columns", lineno);
        f(cells, lineno);
    }
}

double ratio(std::size_t num, std::size_t den, bool& zero) {
    if (den == 0) {
        zero = true;
        return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
}

std::size_t traced_elements(const KnowledgeGraph& merged, const align::Lineage& lineage) {
    std::size_t n = 0;
    for (const auto& [id, _] : merged.nodes()) {
        auto it = lineage.nodes.find(id);
        if (it != lineage.nodes.end() && !it->second.empty()) ++n;
    }
    for (const auto& [key, _] : merged.triples()) {
        auto it = lineage.triples.find(key);
        if (it != lineage.triples.end() && !it->second.empty()) ++n;
    }
    return n;
}

std::set<NodeType> parse_type_list(const std::string& cell, std::size_t lineno) {
    std::set<NodeType> out;
    if (cell == "*" || cell.empty()) return out;
    std::istringstream is(cell);
    std::string item;
    while (std::getline(is, item, ',')) {
        item.erase(0, item.find_first_not_of(' '));
        while (!item.empty() && item.back() == ' ') item.pop_back();
        if (item.empty()) continue;
        if (item == "*") return {};
        auto t = taxonomy::canonical_node_type(item);
        out.insert(t ? *t : NodeType{item});
        (void)lineno;
    }
    return out;
}

double pct(double x) { return x * 100.0; }

}  // namespace

PrecisionRecall precision_recall_f1(const ConfusionCounts& c) {
    PrecisionRecall r;
    r.counts = c;
    r.precision = ratio(c.tp, c.tp + c.fp, r.zero_denominator);
    r.recall = ratio(c.tp, c.tp + c.fn, r.zero_denominator);
    const double s = r.precision + r.recall;
    if (s == 0.0)
        r.zero_denominator = true;
    else
        r.f1 = 2.0 * r.precision * r.recall / s;
    return r;
}

AlignmentPair make_alignment_pair(align::NodeRef a, align::NodeRef b) {
    if (b < a) std::swap(a, b);
    return {std::move(a), std::move(b)};
}

std::set<AlignmentPair> predicted_alignments(const align::Lineage& lineage) {
    std::set<AlignmentPair> out;
    for (const auto& [_, refs] : lineage.nodes)
        for (std::size_t i = 0; i < refs.size(); ++i)
            for (std::size_t j = i + 1; j < refs.size(); ++j)
                if (refs[i].source != refs[j].source) out.insert(make_alignment_pair(refs[i], refs[j]));
    return out;
}

std::set<AlignmentPair> load_gold_alignments(std::istream& in) {
    std::set<AlignmentPair> out;
    for_rows(in, 4, "left_source", [&](const std::vector<std::string>& c, std::size_t) {
        out.insert(make_alignment_pair({c[0], c[1]}, {c[2], c[3]}));
    });
    return out;
}

std::set<TripleKey> load_gold_edges(std::istream& in) {
    std::set<TripleKey> out;
    for_rows(in, 3, "head", [&](const std::vector<std::string>& c, std::size_t) {
        auto r = taxonomy::canonical_relation(c[1]);
        out.insert({c[0], r ? *r : RelationType{c[1]}, c[2]});
    });
    return out;
}

std::set<TripleKey> triple_keys(const KnowledgeGraph& g) {
    std::set<TripleKey> out;
    for (const auto& [k, _] : g.triples()) out.insert(k);
    return out;
}

double coverage(const KnowledgeGraph& merged, std::span<const align::SourceGraph> sources,
                const align::Lineage& lineage) {
    std::size_t den = 0;
    for (const auto& s : sources) den += s.graph.node_count() + s.graph.edge_count();
    if (den == 0) return 0.0;
    return std::min(1.0, static_cast<double>(traced_elements(merged, lineage)) / static_cast<double>(den));
}

double coverage_union(const KnowledgeGraph& merged, std::span<const align::SourceGraph> sources,
                      const align::Lineage& lineage) {
    std::set<std::string> nodes;
    std::set<TripleKey> triples;
    for (const auto& s : sources) {
        for (const auto& [id, _] : s.graph.nodes()) nodes.insert(id);
        for (const auto& [k, _] : s.graph.triples()) triples.insert(k);
    }
    const std::size_t den = nodes.size() + triples.size();
    if (den == 0) return 0.0;
    return std::min(1.0, static_cast<double>(traced_elements(merged, lineage)) / static_cast<double>(den));
}

double novelty_score(const KnowledgeGraph& merged) {
    if (merged.edge_count() == 0) return 0.0;
    std::size_t predicted = 0;
    for (const auto& [_, t] : merged.triples())
        if (t.provenance.kind == Provenance::Kind::predicted) ++predicted;
    return static_cast<double>(predicted) / static_cast<double>(merged.edge_count());
}

ConstraintTable default_constraints() {
    auto types = [](std::initializer_list<const char*> names) {
        std::set<NodeType> s;
        for (const char* n : names) s.insert(NodeType{n});
        return s;
    };
    ConstraintTable t;
    t[RelationType{"Causes"}] = {types({"Genes", "BiologicalPathways", "Diseases"}),
                                 types({"Diseases", "CognitiveProcesses"})};
    t[RelationType{"AssociatedWith"}] = {};
    t[RelationType{"Regulates"}] = {types({"Genes", "TherapeuticTargets", "BiologicalPathways"}),
                                    types({"Genes", "BiologicalPathways", "CognitiveProcesses"})};
    t[RelationType{"InvolvedIn"}] = {types({"Genes", "BiologicalPathways"}),
                                     types({"BiologicalPathways", "CognitiveProcesses", "Diseases"})};
    t[RelationType{"TreatedBy"}] = {types({"TherapeuticTargets"}), {}};
    t[RelationType{"Influences"}] = {types({"Genes", "BiologicalPathways", "TherapeuticTargets"}), {}};
    t[RelationType{"LinkedTo"}] = {};
    return t;
}

ConstraintTable load_constraints_tsv(std::istream& in) {
    ConstraintTable t;
    for_rows(in, 3, "relation", [&](const std::vector<std::string>& c, std::size_t lineno) {
        auto r = taxonomy::canonical_relation(c[0]);
        t[r ? *r : RelationType{c[0]}] = {parse_type_list(c[1], lineno), parse_type_list(c[2], lineno)};
    });
    return t;
}

std::string to_string(Check c) {
    switch (c) {
        case Check::referential: return "referential";
        case Check::relation_taxonomy: return "relation_taxonomy";
        case Check::domain_range: return "domain_range";
    }
    return "referential";
}

ConsistencyReport consistency_check(const KnowledgeGraph& g, const ConstraintTable& constraints) {
    ConsistencyReport r;
    for (const auto& [_, t] : g.triples()) {
        r.checks += 3;
        const Node* h = g.find_node(t.head);
        const Node* tl = g.find_node(t.tail);
        if (!h || !tl)
            r.violations.push_back({t, Check::referential, !h ? "missing head " + t.head : "missing tail " + t.tail});
        if (!taxonomy::is_canonical(t.relation))
            r.violations.push_back({t, Check::relation_taxonomy, "non-canonical relation " + t.relation.str()});
        auto c = constraints.find(t.relation);
        if (c == constraints.end() || !h || !tl) continue;
        const bool head_ok = c->second.heads.empty() || c->second.heads.count(h->type);
        const bool tail_ok = c->second.tails.empty() || c->second.tails.count(tl->type);
        if (!head_ok || !tail_ok)
            r.violations.push_back({t, Check::domain_range,
                                    (!head_ok ? "head type " + h->type.str() : "tail type " + tl->type.str()) +
                                        " not allowed for " + t.relation.str()});
    }
    r.score = r.checks == 0 ? 1.0 : 1.0 - static_cast<double>(r.violations.size()) / static_cast<double>(r.checks);
    return r;
}

void write_violations_tsv(const ConsistencyReport& r, std::ostream& out) {
    out << "head\trelation\ttail\tcheck\tdetail\n";
    for (const auto& v : r.violations)
        out << v.triple.head << '\t' << v.triple.relation << '\t' << v.triple.tail << '\t' << to_string(v.check)
            << '\t' << v.detail << '\n';
}

namespace {
std::int64_t steady_ns() {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}
}  // namespace

StageTimer::StageTimer(RunManifest& m, std::string stage) : m_(m), stage_(std::move(stage)), start_ns_(steady_ns()) {}

StageTimer::~StageTimer() {
    if (!m_.instrumented) return;
    // Clock granularity can report zero for trivial stages.
    const double s = std::max(1e-9, static_cast<double>(steady_ns() - start_ns_) / 1e9);
    m_.stages.emplace_back(stage_, s);
    m_.peak_memory_bytes = peak_rss_bytes();
}

std::optional<std::uint64_t> peak_rss_bytes() {
    rusage u{};
    if (getrusage(RUSAGE_SELF, &u) != 0) return std::nullopt;
    return static_cast<std::uint64_t>(u.ru_maxrss) * 1024;  // Linux reports KiB
}

EfficiencyReport efficiency_report(const RunManifest& m) {
    EfficiencyReport r;
    if (!m.instrumented) return r;
    r.measured = true;
    r.timings = m.stages;
    r.peak_memory_bytes = m.peak_memory_bytes ? m.peak_memory_bytes : peak_rss_bytes();
    return r;
}

nlohmann::json metric_report_to_json(const MetricReport& r, const std::optional<std::string>& config_hash) {
    using nlohmann::json;
    json rows = json::object();
    auto prf = [](const PrecisionRecall& p) {
        return json{{"tp", p.counts.tp},
                    {"fp", p.counts.fp},
                    {"fn", p.counts.fn},
                    {"precision", p.precision},
                    {"recall", p.recall},
                    {"f1", p.f1},
                    {"zero_denominator", p.zero_denominator}};
    };
    // Primary P/R/F1 rows come from the alignment gold if given, else edges.
    const auto& primary = r.alignment ? r.alignment : r.edges;
    rows["Precision"] = primary ? json(pct(primary->precision)) : json(nullptr);
    rows["Recall"] = primary ? json(pct(primary->recall)) : json(nullptr);
    rows["F1-Score"] = primary ? json(pct(primary->f1)) : json(nullptr);
    rows["Coverage"] = pct(r.coverage);
    rows["Graph Consistency"] = pct(r.consistency);
    if (r.efficiency.measured) {
        json timings = json::object();
        for (const auto& [stage, s] : r.efficiency.timings) timings[stage] = s;
        rows["Computational Eff."] = {{"timings_seconds", timings},
                                      {"peak_memory_bytes", r.efficiency.peak_memory_bytes
                                                                ? json(*r.efficiency.peak_memory_bytes)
                                                                : json(nullptr)}};
    } else {
        rows["Computational Eff."] = "not measured";
    }
    rows["Novelty Detection"] = pct(r.novelty);
    rows["Expert Validation"] = r.expert_validation ? json(pct(*r.expert_validation)) : json(nullptr);

    json out{{"metrics", rows}, {"coverage_union_nonstandard", pct(r.coverage_union)}};
    if (r.alignment) out["alignment"] = prf(*r.alignment);
    if (r.edges) out["edges"] = prf(*r.edges);
    if (config_hash) out["config_hash"] = *config_hash;
    return out;
}

}  // namespace kgfuse::evaluate
