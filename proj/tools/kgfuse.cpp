// kgfuse command line: ingest, merge, expand, evaluate, train, rank, serve, export.

#include <CLI11.hpp>

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "kgfuse/config.hpp"
#include "kgfuse/errors.hpp"
#include "kgfuse/graph_io.hpp"
#include "kgfuse/linkpred.hpp"
#include "kgfuse/pipeline.hpp"
#include "kgfuse/review.hpp"
#include "kgfuse/review_server.hpp"

namespace fs = std::filesystem;
using namespace kgfuse;

namespace {

enum Exit { ok = 0, runtime = 1, usage = 2, config = 3, parse = 4, integrity = 5, missing_input = 6 };

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<double> tau;
    std::optional<double> sigma;
    std::optional<double> delta_p;
    std::string out = "out";
    bool deterministic = false;
};

void add_common(CLI::App* sc, Common& c) {
    sc->add_option("--config", c.config_path, "JSON config file (falls back to $KGFUSE_CONFIG)");
    sc->add_option("--seed", c.seed, "random seed");
    sc->add_option("--tau", c.tau, "alignment threshold");
    sc->add_option("--sigma", c.sigma, "Gaussian spread");
    sc->add_option("--delta-p", c.delta_p, "confidence decay per rejection");
    sc->add_option("--out", c.out, "output directory")->capture_default_str();
    sc->add_flag("--deterministic", c.deterministic, "offline embeddings and single-threaded training");
}

PipelineConfig resolve(const Common& c) {
    PipelineConfig cfg;
    auto path = resolve_config_path(c.config_path.empty() ? std::nullopt : std::optional(c.config_path));
    if (path) cfg = load_config(*path);
    if (c.seed) cfg.seed = *c.seed;
    if (c.tau) cfg.tau = *c.tau;
    if (c.sigma) cfg.sigma = *c.sigma;
    if (c.delta_p) cfg.delta_p = *c.delta_p;
    if (c.deterministic) {
        cfg.provider.kind = ProviderConfig::Kind::deterministic;
        cfg.train.threads = 1;
    }
    cfg.validate();
    return cfg;
}

void write_text(const fs::path& p, const std::string& body) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + p.string());
    out << body;
}

std::string fixed(double x, int digits = 4) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << x;
    return os.str();
}

std::vector<std::size_t> read_ranks(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingInputError("cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    const auto first = text.find_first_not_of(" \t\r\n");
    std::vector<std::size_t> ranks;
    if (first != std::string::npos && text[first] == '[') {
        try {
            ranks = nlohmann::json::parse(text).get<std::vector<std::size_t>>();
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("ranks file: ") + e.what());
        }
        return ranks;
    }
    std::istringstream is(text);
    std::string tok;
    std::size_t n = 0;
    while (is >> tok) {
        ++n;
        try {
            std::size_t used = 0;
            const auto v = std::stoull(tok, &used);
            if (used != tok.size()) throw std::invalid_argument(tok);
            ranks.push_back(v);
        } catch (const std::exception&) {
            throw ParseError("ranks file: '" + tok + "' is not a rank (token " + std::to_string(n) + ")");
        }
    }
    return ranks;
}

int cmd_ingest(const Common& c) {
    auto cfg = resolve(c);
    check_inputs(cfg);
    const auto hash = config_hash(cfg);
    auto provider = make_provider(cfg);
    auto sources = ingest_sources(cfg, *provider);
    fs::create_directories(c.out);
    nlohmann::json summary = nlohmann::json::array();
    for (const auto& s : sources) {
        save_graph_file(s.graph.graph, (fs::path(c.out) / (s.graph.name + ".jsonl")).string(), hash);
        summary.push_back({{"source", s.graph.name},
                           {"stats", stats_to_json(graph_stats(s.graph.graph))},
                           {"collapsed", s.removals.size()}});
    }
    std::cout << summary.dump(2) << '\n';
    return ok;
}

int cmd_merge(const Common& c) {
    auto cfg = resolve(c);
    check_inputs(cfg);
    const auto hash = config_hash(cfg);
    auto provider = make_provider(cfg);
    std::vector<align::SourceGraph> graphs;
    for (auto& s : ingest_sources(cfg, *provider)) graphs.push_back(std::move(s.graph));
    auto m = align_and_merge(cfg, std::move(graphs), *provider);
    fs::create_directories(c.out);
    save_graph_file(m.merged.graph, (fs::path(c.out) / "merged_graph.jsonl").string(), hash);
    std::ostringstream report;
    align::write_merge_report_jsonl(m.merged.report, report, hash);
    write_text(fs::path(c.out) / "merge_report.jsonl", report.str());
    std::cout << stats_to_json(graph_stats(m.merged.graph)).dump(2) << '\n';
    return ok;
}

int cmd_expand(const Common& c, const std::string& graph_path) {
    auto cfg = resolve(c);
    const auto hash = config_hash(cfg);
    auto provider = make_provider(cfg);
    KnowledgeGraph g;
    if (!graph_path.empty()) {
        if (!fs::exists(graph_path)) throw MissingInputError("cannot open " + graph_path);
        g = load_graph_file(graph_path);
    } else {
        check_inputs(cfg);
        std::vector<align::SourceGraph> graphs;
        for (auto& s : ingest_sources(cfg, *provider)) graphs.push_back(std::move(s.graph));
        g = align_and_merge(cfg, std::move(graphs), *provider).merged.graph;
    }
    auto state = run_expand(cfg, g, *provider);
    std::ostringstream cands;
    expand::write_candidate_log_jsonl(state, cands, hash);
    write_text(fs::path(c.out) / "candidates.jsonl", cands.str());
    auto manifest = expand::expansion_manifest(state);
    manifest["config_hash"] = hash;
    write_text(fs::path(c.out) / "expansion_manifest.json", manifest.dump(2) + "\n");
    save_graph_file(*state.graph, (fs::path(c.out) / "expanded_graph.jsonl").string(), hash);
    std::cout << manifest.dump(2) << '\n';
    return ok;
}

int cmd_evaluate(const Common& c) {
    auto cfg = resolve(c);
    auto r = run_pipeline(cfg);
    write_outputs(r, cfg, c.out);
    std::cout << evaluate::metric_report_to_json(r.metrics, r.config_hash).dump(2) << '\n';
    return ok;
}

struct TrainArgs {
    std::string dataset = "synthetic";
    std::string train, valid, test, graph;
    std::string model;
    std::optional<std::size_t> dim, epochs;
    bool raw = false;
};

linkpred::TripleDataset load_dataset(const TrainArgs& a, std::uint64_t seed) {
    if (!a.graph.empty()) {
        if (!fs::exists(a.graph)) throw MissingInputError("cannot open " + a.graph);
        return linkpred::TripleDataset::from_graph(load_graph_file(a.graph), 0.1, 0.1, seed);
    }
    if (!a.train.empty()) {
        for (const auto* p : {&a.train, &a.valid, &a.test})
            if (p->empty() || !fs::exists(*p)) throw MissingInputError("dataset split missing: " + *p);
        return linkpred::TripleDataset::from_tsv_files(a.train, a.valid, a.test);
    }
    if (a.dataset != "synthetic") throw ConfigError("unknown dataset '" + a.dataset + "'");
    return linkpred::TripleDataset::synthetic_pair_cycles(25, seed);
}

int cmd_train(const Common& c, const TrainArgs& a) {
    auto cfg = resolve(c);
    if (!a.model.empty()) cfg.train.model = a.model;
    if (a.dim) cfg.train.dim = *a.dim;
    if (a.epochs) cfg.train.epochs = *a.epochs;
    cfg.validate();
    const auto hash = config_hash(cfg);
    const auto ds = load_dataset(a, cfg.seed);
    const auto kind = linkpred::parse_model_kind(cfg.train.model);
    auto res = linkpred::train(ds, kind, train_config(cfg));
    const auto setting = a.raw ? linkpred::Setting::raw : linkpred::Setting::filtered;
    auto report = linkpred::evaluate_model(res.model, ds, ds.test.empty() ? ds.train : ds.test, setting);
    auto j = linkpred::ranking_report_to_json(report, kind);
    j["config_hash"] = hash;
    j["epoch_loss"] = res.epoch_loss;
    fs::create_directories(c.out);
    linkpred::save_model(res.model, (fs::path(c.out) / "model.json").string(), hash);
    write_text(fs::path(c.out) / "ranking_report.json", j.dump(2) + "\n");
    std::cout << to_string(kind) << " " << to_string(setting) << " MR " << fixed(report.mr) << " MRR "
              << fixed(report.mrr) << " Hits@1 " << fixed(report.hits[1]) << " Hits@3 " << fixed(report.hits[3])
              << " Hits@10 " << fixed(report.hits[10]) << '\n';
    return ok;
}

int cmd_rank(const Common& c, const std::string& ranks_path, const std::string& model_path, const TrainArgs& a) {
    linkpred::RankingReport report;
    std::string label = "ranks";
    if (!ranks_path.empty()) {
        report = linkpred::evaluate_ranking(read_ranks(ranks_path));
    } else if (!model_path.empty()) {
        auto cfg = resolve(c);
        if (!fs::exists(model_path)) throw MissingInputError("cannot open " + model_path);
        const auto m = linkpred::load_model(model_path);
        const auto ds = load_dataset(a, cfg.seed);
        if (m.num_entities != ds.entities.size() || m.num_relations != ds.relations.size())
            throw ConfigError("model does not match the dataset's entity/relation counts");
        report = linkpred::evaluate_model(m, ds, ds.test, a.raw ? linkpred::Setting::raw : linkpred::Setting::filtered);
        label = to_string(m.kind);
    } else {
        throw CLI::RequiredError("--ranks or --model");
    }
    std::cout << "MR " << fixed(report.mr) << "\nMRR " << fixed(report.mrr) << '\n';
    for (const auto& [k, v] : report.hits) std::cout << "Hits@" << k << ' ' << fixed(v) << '\n';
    for (const auto& [k, v] : report.p_at_k_literal) std::cout << "P@" << k << "_literal " << fixed(v) << '\n';
    (void)label;
    return ok;
}

review::ReviewServer* g_server = nullptr;
void on_signal(int) {
    if (g_server) g_server->stop();
}

int cmd_serve(const Common& c, const std::string& graph_path, const std::string& cand_path, const std::string& log_path,
              const std::string& static_dir, const std::string& host, int port) {
    auto cfg = resolve(c);
    expand::ExpansionState state;
    if (!graph_path.empty()) {
        if (!fs::exists(graph_path)) throw MissingInputError("cannot open " + graph_path);
        state = expand::ExpansionState::start(load_graph_file(graph_path), expansion_config(cfg));
        if (!cand_path.empty()) {
            std::ifstream in(cand_path);
            if (!in) throw MissingInputError("cannot open " + cand_path);
            state.candidates = expand::read_candidate_log_jsonl(in);
            for (const auto& cand : state.candidates) state.next_id = std::max(state.next_id, cand.id + 1);
        }
    } else {
        auto provider = make_provider(cfg);
        check_inputs(cfg);
        std::vector<align::SourceGraph> graphs;
        for (auto& s : ingest_sources(cfg, *provider)) graphs.push_back(std::move(s.graph));
        state = run_expand(cfg, align_and_merge(cfg, std::move(graphs), *provider).merged.graph, *provider);
    }
    std::unique_ptr<review::ReviewSession> session;
    std::optional<std::string> log;
    if (!log_path.empty()) log = log_path;
    if (log && fs::exists(*log)) {
        std::ifstream in(*log);
        session = review::ReviewSession::replay(state, cfg.delta_p, review::read_event_log(in), log);
    } else {
        session = std::make_unique<review::ReviewSession>(state, cfg.delta_p, log);
    }
    review::ServerOptions opts;
    opts.host = host;
    opts.port = port;
    if (!static_dir.empty()) opts.static_dir = static_dir;
    review::ReviewServer server(*session, opts);
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cerr << "serving on http://" << host << ":" << port << '\n';
    server.run();
    g_server = nullptr;
    return ok;
}

int cmd_export(const std::string& graph_path, const std::string& format, const std::string& out) {
    if (!fs::exists(graph_path)) throw MissingInputError("cannot open " + graph_path);
    const auto g = load_graph_file(graph_path);
    std::ostringstream body;
    if (format == "tsv")
        write_edge_tsv(g, body);
    else if (format == "jsonl")
        write_graph_jsonl(g, body);
    else if (format == "stats")
        body << stats_to_json(graph_stats(g)).dump(2) << '\n';
    else
        throw ConfigError("export format must be tsv, jsonl or stats");
    if (out.empty() || out == "-")
        std::cout << body.str();
    else
        write_text(out, body.str());
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"kgfuse: knowledge-graph fusion workbench"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    Common common;

    auto* ingest = app.add_subcommand("ingest", "parse and clean each configured source");
    auto* merge = app.add_subcommand("merge", "align sources and write the merged graph");
    auto* expand_cmd = app.add_subcommand("expand", "propose and integrate predicted edges");
    auto* evaluate_cmd = app.add_subcommand("evaluate", "run the full pipeline and write all reports");
    auto* train = app.add_subcommand("train", "train a link-prediction model");
    auto* rank = app.add_subcommand("rank", "ranking metrics from a ranks file or a trained model");
    auto* serve = app.add_subcommand("serve", "serve the candidate review API");
    auto* export_cmd = app.add_subcommand("export", "convert a graph file");
    for (auto* sc : {ingest, merge, expand_cmd, evaluate_cmd, train, rank, serve, export_cmd}) add_common(sc, common);

    std::string graph_path;
    expand_cmd->add_option("--graph", graph_path, "start from this graph instead of the configured sources");

    TrainArgs targs;
    for (auto* sc : {train, rank}) {
        sc->add_option("--dataset", targs.dataset, "built-in dataset (synthetic)");
        sc->add_option("--train", targs.train, "train split TSV");
        sc->add_option("--valid", targs.valid, "valid split TSV");
        sc->add_option("--test", targs.test, "test split TSV");
        sc->add_option("--graph", targs.graph, "split this graph file 80/10/10");
        sc->add_flag("--raw", targs.raw, "raw instead of filtered ranking");
    }
    train->add_option("--model", targs.model, "TransE, RotatE, DistMult or ComplEx");
    train->add_option("--dim", targs.dim, "embedding dimension");
    train->add_option("--epochs", targs.epochs, "training epochs");

    std::string ranks_path, model_path;
    rank->add_option("--ranks", ranks_path, "file with ranks (JSON array or whitespace separated)");
    rank->add_option("--model", model_path, "trained model file");

    std::string cand_path, log_path, static_dir, host = "127.0.0.1";
    int port = 8080;
    serve->add_option("--graph", graph_path, "graph file to review");
    serve->add_option("--candidates", cand_path, "candidate log to review");
    serve->add_option("--log", log_path, "verdict log; replayed on start, appended on every verdict");
    serve->add_option("--static", static_dir, "directory served at /");
    serve->add_option("--host", host)->capture_default_str();
    serve->add_option("--port", port)->capture_default_str();

    std::string format = "tsv", export_out;
    export_cmd->add_option("--graph", graph_path, "graph file")->required();
    export_cmd->add_option("--format", format, "tsv, jsonl or stats")->capture_default_str();
    export_cmd->add_option("--to", export_out, "destination file (stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? ok : usage;
    }

    try {
        if (*ingest) return cmd_ingest(common);
        if (*merge) return cmd_merge(common);
        if (*expand_cmd) return cmd_expand(common, graph_path);
        if (*evaluate_cmd) return cmd_evaluate(common);
        if (*train) return cmd_train(common, targs);
        if (*rank) return cmd_rank(common, ranks_path, model_path, targs);
        if (*serve) return cmd_serve(common, graph_path, cand_path, log_path, static_dir, host, port);
        if (*export_cmd) return cmd_export(graph_path, format, export_out);
    } catch (const CLI::RequiredError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return usage;
    } catch (const MissingInputError& e) {
        std::cerr << "missing input: " << e.what() << '\n';
        return missing_input;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return parse;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config;
    } catch (const IntegrityError& e) {
        std::cerr << "integrity error: " << e.what() << '\n';
        return integrity;
    } catch (const TypeConflictError& e) {
        std::cerr << "integrity error: " << e.what() << '\n';
        return integrity;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return runtime;
    }
    return usage;
}
