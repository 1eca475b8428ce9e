#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "kgfuse/embed.hpp"
#include "kgfuse/graph.hpp"
#include "kgfuse/tokenize.hpp"

namespace kgfuse::ingest {

enum class SourceFormat { obo, edge_tsv };

SourceFormat parse_source_format(std::string_view s);
std::string to_string(SourceFormat f);

struct SourceSpec {
    std::string name;
    SourceFormat format = SourceFormat::edge_tsv;
    std::string path;
    std::optional<NodeType> default_node_type;

    friend bool operator==(const SourceSpec&, const SourceSpec&) = default;
};

struct OboOptions {
    // Drop is_a / relationship lines whose target never appears instead of
    // failing. Off by default.
    bool drop_unresolved = false;
};

// OBO 1.2 subset: [Term] stanzas with id, name, namespace, def, synonym, is_a,
// relationship and is_obsolete. Other stanzas and tags are ignored.
//
// Node type is the stanza's namespace, else the header default-namespace,
// else spec.default_node_type, else the source name. Obsolete terms are
// skipped together with every edge touching them. Edge targets may be
// forward references; ids still unseen at end of file raise IntegrityError
// listing the offenders.
KnowledgeGraph parse_obo(std::istream& in, const SourceSpec& spec, const OboOptions& opts = {});

// Tab-separated: head_id, head_label, head_type, relation, tail_id,
// tail_label, tail_type. The first non-comment line is a header. Blank lines
// and lines starting with '#' are skipped.
KnowledgeGraph parse_edge_tsv(std::istream& in, const SourceSpec& spec);

// Opens spec.path and dispatches on spec.format. Throws ConfigError if the
// file cannot be opened.
KnowledgeGraph load_source(const SourceSpec& spec, const OboOptions& opts = {});

struct RemovalEntry {
    std::string kept_id;
    std::string removed_id;
    double score = 0.0;

    friend bool operator==(const RemovalEntry&, const RemovalEntry&) = default;
};

struct FilterResult {
    KnowledgeGraph graph;
    std::vector<RemovalEntry> log;
};

// Collapses same-type nodes whose label/alias similarity reaches
// `threshold`. Each connected group survives as its lexicographically
// smallest id; the others' labels become aliases and their edges are
// rewired. A log entry's score is the best similarity between the removed
// node and any other member of its group.
FilterResult noise_filter(const KnowledgeGraph& g, const embed::EmbeddingProvider& provider, double threshold);

// kept_id, removed_id, score (TSV with header).
void write_removal_log(const std::vector<RemovalEntry>& log, std::ostream& out);

}  // namespace kgfuse::ingest
