#include "kgfuse/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "kgfuse/errors.hpp"
#include "kgfuse/graph_io.hpp"

namespace kgfuse {

namespace {

// Same content as data/relation_table.tsv and data/type_mappings.tsv.
constexpr const char* kRelationTable = R"(source_label	unified_label
causes	Causes
induces	Causes
leads_to	Causes
results_in	Causes
associated_with	AssociatedWith
related_to	AssociatedWith
correlated_with	AssociatedWith
regulates	Regulates
positively_regulates	Regulates
negatively_regulates	Regulates
part_of	InvolvedIn
involved_in	InvolvedIn
participates_in	InvolvedIn
occurs_in	InvolvedIn
treats	TreatedBy
treated_by	TreatedBy
influences	Influences
affects	Influences
impairs	Influences
is_a	LinkedTo
linked_to	LinkedTo
has_part	LinkedTo
)";

constexpr const char* kTypeMappings = R"(source	native_type	canonical_type
*	biological_process	BiologicalPathways
*	molecular_function	Genes
*	cellular_component	Genes
*	gene	Genes
*	protein	Genes
*	disease_ontology	Diseases
*	disease	Diseases
*	symptom	Diseases
*	pathway	BiologicalPathways
*	cognitive_process	CognitiveProcesses
*	cognition	CognitiveProcesses
*	drug_target	TherapeuticTargets
*	receptor	TherapeuticTargets
)";

// Re-throws the active library error with the stage (and file) prefixed,
// keeping its type so exit codes stay meaningful.
template <typename F>
auto in_stage(const std::string& stage, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const ParseError& e) {
        throw ParseError(stage + ": " + e.what());
    } catch (const IntegrityError& e) {
        throw IntegrityError(stage + ": " + e.what());
    } catch (const TypeConflictError& e) {
        throw TypeConflictError(stage + ": " + e.what());
    } catch (const ConfigError& e) {
        throw ConfigError(stage + ": " + e.what());
    } catch (const MissingInputError& e) {
        throw MissingInputError(stage + ": " + e.what());
    } catch (const TrainingError& e) {
        throw TrainingError(stage + ": " + e.what());
    }
}

std::ifstream open_or(const std::string& path, bool missing_input) {
    std::ifstream in(path);
    if (!in) {
        if (missing_input) throw MissingInputError("cannot open " + path);
        throw ConfigError("cannot open " + path);
    }
    return in;
}

void write_file(const std::filesystem::path& p, const std::string& body) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + p.string());
    out << body;
    if (!out) throw ConfigError("write failed on " + p.string());
}

}  // namespace

align::TaxonomyMap default_type_mappings() {
    std::istringstream in(kTypeMappings);
    return align::TaxonomyMap::load_tsv(in);
}

align::RelationTable default_relation_table() {
    std::istringstream in(kRelationTable);
    return align::load_relation_table(in);
}

align::TaxonomyMap load_type_mappings(const PipelineConfig& c) {
    if (!c.type_mappings) return default_type_mappings();
    auto in = open_or(*c.type_mappings, false);
    return align::TaxonomyMap::load_tsv(in);
}

align::RelationTable load_relation_table(const PipelineConfig& c) {
    if (!c.relation_table) return default_relation_table();
    auto in = open_or(*c.relation_table, false);
    return align::load_relation_table(in);
}

evaluate::ConstraintTable load_constraints(const PipelineConfig& c) {
    if (!c.constraints) return evaluate::default_constraints();
    auto in = open_or(*c.constraints, false);
    return evaluate::load_constraints_tsv(in);
}

void check_inputs(const PipelineConfig& c) {
    c.validate();
    if (c.sources.empty()) throw ConfigError("no sources configured");
    for (const auto& s : c.sources) {
        std::ifstream in(s.path);
        if (!in) throw ConfigError("source '" + s.name + "': cannot read " + s.path);
    }
    for (const auto* p : {&c.type_mappings, &c.relation_table, &c.constraints, &c.provider.alias_file})
        if (*p) open_or(**p, false);
    for (const auto* p : {&c.gold_alignments, &c.gold_edges})
        if (*p) open_or(**p, true);
}

std::vector<IngestedSource> ingest_sources(const PipelineConfig& c, const embed::EmbeddingProvider& provider) {
    std::vector<IngestedSource> out;
    for (const auto& spec : c.sources) {
        out.push_back(in_stage("ingest " + spec.name + " (" + spec.path + ")", [&] {
            IngestedSource s;
            s.graph.name = spec.name;
            s.graph.graph = ingest::load_source(spec, {c.drop_unresolved});
            if (c.noise_threshold) {
                auto f = ingest::noise_filter(s.graph.graph, provider, *c.noise_threshold);
                s.graph.graph = std::move(f.graph);
                s.removals = std::move(f.log);
            }
            return s;
        }));
    }
    return out;
}

MergeOutput align_and_merge(const PipelineConfig& c, std::vector<align::SourceGraph> sources,
                            const embed::EmbeddingProvider& provider) {
    const auto taxonomy = in_stage("align", [&] { return load_type_mappings(c); });
    auto decisions = in_stage("align", [&] { return align::align_nodes(sources, provider, c.tau, taxonomy); });
    return in_stage("merge", [&] {
        std::set<std::string> labels;
        for (const auto& s : sources)
            for (const auto& r : s.graph.relation_taxonomy()) labels.insert(r.str());
        const align::EmbeddingLabelScorer scorer(provider);
        const auto mappings = align::unify_relations(labels, scorer, load_relation_table(c), c.tau_rel);
        MergeOutput m{align::merge_graphs(sources, decisions, mappings, taxonomy, c.tau), std::move(sources)};
        return m;
    });
}

expand::ExpansionState run_expand(const PipelineConfig& c, const KnowledgeGraph& merged,
                                  const embed::EmbeddingProvider& provider) {
    return in_stage("expand", [&] {
        expand::GaussianPredictorConfig gc;
        gc.sigma = c.sigma;
        gc.inverted = c.inverted_gaussian;
        const expand::GaussianPredictor predictor(provider, gc);
        const expand::TwoHopPairs pairs(c.pair_cap, c.seed);
        auto state = expand::ExpansionState::start(merged, expansion_config(c));
        if (merged.empty() || c.max_iterations == 0) return state;
        return expand::run_expansion(std::move(state), predictor, pairs);
    });
}

evaluate::MetricReport run_evaluate(const PipelineConfig& c, const KnowledgeGraph& graph,
                                    std::span<const align::SourceGraph> sources, const align::Lineage& lineage,
                                    const expand::ExpansionState* expansion, evaluate::ConsistencyReport* consistency,
                                    const evaluate::RunManifest& manifest) {
    return in_stage("evaluate", [&] {
        evaluate::MetricReport m;
        if (c.gold_alignments) {
            auto in = open_or(*c.gold_alignments, true);
            m.alignment =
                evaluate::precision_recall_f1(evaluate::predicted_alignments(lineage), evaluate::load_gold_alignments(in));
        }
        if (c.gold_edges) {
            auto in = open_or(*c.gold_edges, true);
            m.edges = evaluate::precision_recall_f1(evaluate::triple_keys(graph), evaluate::load_gold_edges(in));
        }
        m.coverage = evaluate::coverage(graph, sources, lineage);
        m.coverage_union = evaluate::coverage_union(graph, sources, lineage);
        m.novelty = evaluate::novelty_score(graph);
        auto cr = evaluate::consistency_check(graph, load_constraints(c));
        m.consistency = cr.score;
        if (consistency) *consistency = std::move(cr);
        if (expansion) {
            auto counts = expansion->status_counts();
            const auto reviewed = counts[expand::CandidateStatus::accepted] + counts[expand::CandidateStatus::removed];
            if (reviewed > 0)
                m.expert_validation = static_cast<double>(counts[expand::CandidateStatus::accepted]) /
                                      static_cast<double>(reviewed);
        }
        m.efficiency = evaluate::efficiency_report(manifest);
        return m;
    });
}

PipelineResult run_pipeline(const PipelineConfig& c) {
    in_stage("config", [&] { check_inputs(c); });
    PipelineResult r;
    r.config_hash = config_hash(c);
    r.manifest.instrumented = c.instrument;
    const auto provider = make_provider(c);
    {
        evaluate::StageTimer t(r.manifest, "ingest");
        r.sources = ingest_sources(c, *provider);
    }
    std::vector<align::SourceGraph> graphs;
    for (const auto& s : r.sources) graphs.push_back(s.graph);
    MergeOutput m;
    {
        evaluate::StageTimer t(r.manifest, "align");
        m = align_and_merge(c, std::move(graphs), *provider);
    }
    r.merged = std::move(m.merged);
    {
        evaluate::StageTimer t(r.manifest, "expand");
        r.expansion = run_expand(c, r.merged.graph, *provider);
    }
    r.final_graph = *r.expansion.graph;
    align::append_predicted_edges(r.merged.report, expand::integrated_triples(r.expansion));
    {
        evaluate::StageTimer t(r.manifest, "evaluate");
        r.metrics = run_evaluate(c, r.final_graph, m.sources, r.merged.report.lineage, &r.expansion, &r.consistency,
                                 r.manifest);
    }
    // The evaluate stage timing lands after the report was built; refresh it.
    r.metrics.efficiency = evaluate::efficiency_report(r.manifest);
    return r;
}

std::vector<std::string> output_files() {
    return {"merged_graph.jsonl",    "merged_edges.tsv", "merge_report.jsonl", "candidates.jsonl",
            "expansion_manifest.json", "metrics.json",   "violations.tsv",     "removal_log.tsv",
            "run_manifest.json"};
}

nlohmann::json run_manifest_json(const evaluate::RunManifest& m, const std::string& config_hash, std::uint64_t seed) {
    nlohmann::json j{{"tool", "kgfuse"}, {"version", kVersion}, {"config_hash", config_hash}, {"seed", seed}};
    nlohmann::json stages = nlohmann::json::array();
    for (const char* s : {"ingest", "align", "expand", "evaluate"}) stages.push_back(s);
    j["stages"] = stages;
    if (m.instrumented) {
        nlohmann::json t = nlohmann::json::object();
        for (const auto& [name, secs] : m.stages) t[name] = secs;
        j["timings_seconds"] = t;
        j["peak_memory_bytes"] = m.peak_memory_bytes ? nlohmann::json(*m.peak_memory_bytes) : nlohmann::json(nullptr);
    } else {
        j["timings_seconds"] = "not measured";
    }
    return j;
}

void write_outputs(const PipelineResult& r, const PipelineConfig& c, const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw ConfigError("cannot create " + out_dir + ": " + ec.message());
    const fs::path dir(out_dir);
    const auto& h = r.config_hash;

    std::ostringstream graph, edges, report, cands, viol, removals;
    write_graph_jsonl(r.final_graph, graph, h);
    write_edge_tsv(r.final_graph, edges, h);
    align::write_merge_report_jsonl(r.merged.report, report, h);
    expand::write_candidate_log_jsonl(r.expansion, cands, h);
    viol << "# config_hash: " << h << '\n';
    evaluate::write_violations_tsv(r.consistency, viol);
    removals << "# config_hash: " << h << '\n' << "source\tkept_id\tremoved_id\tscore\n";
    for (const auto& s : r.sources)
        for (const auto& e : s.removals)
            removals << s.graph.name << '\t' << e.kept_id << '\t' << e.removed_id << '\t' << e.score << '\n';
    auto manifest = expand::expansion_manifest(r.expansion);
    manifest["config_hash"] = h;

    write_file(dir / "merged_graph.jsonl", graph.str());
    write_file(dir / "merged_edges.tsv", edges.str());
    write_file(dir / "merge_report.jsonl", report.str());
    write_file(dir / "candidates.jsonl", cands.str());
    write_file(dir / "expansion_manifest.json", manifest.dump(2) + "\n");
    write_file(dir / "metrics.json", evaluate::metric_report_to_json(r.metrics, h).dump(2) + "\n");
    write_file(dir / "violations.tsv", viol.str());
    write_file(dir / "removal_log.tsv", removals.str());
    write_file(dir / "run_manifest.json", run_manifest_json(r.manifest, h, c.seed).dump(2) + "\n");
}

}  // namespace kgfuse
