#include "kgfuse/config.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

#include "kgfuse/errors.hpp"
#include "kgfuse/remote_embed.hpp"
#include "kgfuse/tokenize.hpp"

namespace kgfuse {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [k, _] : j.items())
        if (!allowed.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
}

template <typename T>
void read(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("bad value for '") + key + "'");
    }
}

template <typename T>
void read_opt(const json& j, const char* key, std::optional<T>& out) {
    if (!j.contains(key) || j.at(key).is_null()) return;
    T v{};
    read(j, key, v);
    out = std::move(v);
}

template <typename T>
json opt(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

void in_unit(double x, const char* name) {
    if (!(x > 0.0 && x <= 1.0)) throw ConfigError(std::string(name) + " must lie in (0, 1]");
}

std::string rebase(const std::filesystem::path& dir, const std::string& p) {
    if (p.empty()) return p;
    std::filesystem::path q(p);
    return q.is_absolute() ? p : (dir / q).lexically_normal().string();
}

std::map<std::string, std::string> read_alias_tsv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open alias file " + path);
    std::map<std::string, std::string> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw ParseError("alias file needs two tab-separated columns", lineno);
        if (lineno == 1 && line.substr(0, tab) == "alias") continue;
        out[line.substr(0, tab)] = line.substr(tab + 1);
    }
    return out;
}

}  // namespace

void PipelineConfig::validate() const {
    in_unit(tau, "tau");
    in_unit(tau_rel, "tau_rel");
    in_unit(tau_accept, "tau_accept");
    if (noise_threshold && !(*noise_threshold > 0.0)) throw ConfigError("noise_threshold must be positive");
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("sigma must be positive");
    if (!(delta_p >= 0.0) || !std::isfinite(delta_p)) throw ConfigError("delta_p must be >= 0");
    if (mode != "review" && mode != "auto_accept") throw ConfigError("mode must be review or auto_accept");
    if (provider.kind == ProviderConfig::Kind::remote && provider.endpoint.empty())
        throw ConfigError("remote provider needs an endpoint");
    if (provider.dim == 0) throw ConfigError("provider dim must be positive");
    std::set<std::string> names;
    for (const auto& s : sources) {
        if (s.name.empty()) throw ConfigError("source without a name");
        if (!names.insert(s.name).second) throw ConfigError("duplicate source name '" + s.name + "'");
        if (s.path.empty()) throw ConfigError("source '" + s.name + "' has no path");
    }
    linkpred::parse_model_kind(train.model);
    if (train.optimizer != "sgd" && train.optimizer != "adagrad") throw ConfigError("optimizer must be sgd or adagrad");
    if (train.norm != 1 && train.norm != 2) throw ConfigError("train.norm must be 1 or 2");
    if (train.dim == 0 || train.batch_size == 0 || train.negatives == 0 || train.threads == 0)
        throw ConfigError("train dim, batch_size, negatives and threads must be positive");
    if (!(train.learning_rate > 0.0) || !std::isfinite(train.learning_rate))
        throw ConfigError("train.learning_rate must be positive");
    if (!(train.margin >= 0.0) || !std::isfinite(train.margin)) throw ConfigError("train.margin must be >= 0");
    if (pair_cap == 0) throw ConfigError("pair_cap must be positive");
}

json config_to_json(const PipelineConfig& c) {
    json sources = json::array();
    for (const auto& s : c.sources)
        sources.push_back({{"name", s.name},
                           {"format", ingest::to_string(s.format)},
                           {"path", s.path},
                           {"default_node_type", s.default_node_type ? json(s.default_node_type->str()) : json(nullptr)}});
    const auto& p = c.provider;
    json provider{{"kind", p.kind == ProviderConfig::Kind::remote ? "remote" : "deterministic"},
                  {"dim", p.dim},
                  {"aliases", p.aliases},
                  {"alias_file", opt(p.alias_file)},
                  {"endpoint", p.endpoint},
                  {"auth_header_name", p.auth_header_name},
                  {"auth_header_env", p.auth_header_env}};
    const auto& t = c.train;
    json train{{"model", t.model},
               {"dim", t.dim},
               {"epochs", t.epochs},
               {"batch_size", t.batch_size},
               {"learning_rate", t.learning_rate},
               {"margin", t.margin},
               {"negatives", t.negatives},
               {"norm", t.norm},
               {"optimizer", t.optimizer},
               {"threads", t.threads}};
    return {{"sources", sources},
            {"tau", c.tau},
            {"tau_rel", c.tau_rel},
            {"noise_threshold", opt(c.noise_threshold)},
            {"sigma", c.sigma},
            {"inverted_gaussian", c.inverted_gaussian},
            {"delta_p", c.delta_p},
            {"tau_accept", c.tau_accept},
            {"max_iterations", c.max_iterations},
            {"mode", c.mode},
            {"pair_cap", c.pair_cap},
            {"provider", provider},
            {"seed", c.seed},
            {"drop_unresolved", c.drop_unresolved},
            {"type_mappings", opt(c.type_mappings)},
            {"relation_table", opt(c.relation_table)},
            {"constraints", opt(c.constraints)},
            {"gold_alignments", opt(c.gold_alignments)},
            {"gold_edges", opt(c.gold_edges)},
            {"instrument", c.instrument},
            {"train", train}};
}

PipelineConfig config_from_json(const json& j) {
    check_keys(j,
               {"sources", "tau", "tau_rel", "noise_threshold", "sigma", "inverted_gaussian", "delta_p", "tau_accept",
                "max_iterations", "mode", "pair_cap", "provider", "seed", "drop_unresolved", "type_mappings",
                "relation_table", "constraints", "gold_alignments", "gold_edges", "instrument", "train"},
               "config");
    PipelineConfig c;
    if (j.contains("sources")) {
        if (!j["sources"].is_array()) throw ConfigError("sources must be an array");
        for (const auto& s : j["sources"]) {
            check_keys(s, {"name", "format", "path", "default_node_type"}, "source");
            ingest::SourceSpec spec;
            read(s, "name", spec.name);
            read(s, "path", spec.path);
            std::string fmt = "edge_tsv";
            read(s, "format", fmt);
            try {
                spec.format = ingest::parse_source_format(fmt);
            } catch (const Error& e) {
                throw ConfigError(e.what());
            }
            std::optional<std::string> dt;
            read_opt(s, "default_node_type", dt);
            if (dt) spec.default_node_type = NodeType{*dt};
            c.sources.push_back(std::move(spec));
        }
    }
    read(j, "tau", c.tau);
    read(j, "tau_rel", c.tau_rel);
    read_opt(j, "noise_threshold", c.noise_threshold);
    read(j, "sigma", c.sigma);
    read(j, "inverted_gaussian", c.inverted_gaussian);
    read(j, "delta_p", c.delta_p);
    read(j, "tau_accept", c.tau_accept);
    read(j, "max_iterations", c.max_iterations);
    read(j, "mode", c.mode);
    read(j, "pair_cap", c.pair_cap);
    read(j, "seed", c.seed);
    read(j, "drop_unresolved", c.drop_unresolved);
    read_opt(j, "type_mappings", c.type_mappings);
    read_opt(j, "relation_table", c.relation_table);
    read_opt(j, "constraints", c.constraints);
    read_opt(j, "gold_alignments", c.gold_alignments);
    read_opt(j, "gold_edges", c.gold_edges);
    read(j, "instrument", c.instrument);
    if (j.contains("provider")) {
        const auto& p = j["provider"];
        check_keys(p, {"kind", "dim", "aliases", "alias_file", "endpoint", "auth_header_name", "auth_header_env"},
                   "provider");
        std::string kind = "deterministic";
        read(p, "kind", kind);
        if (kind == "remote")
            c.provider.kind = ProviderConfig::Kind::remote;
        else if (kind != "deterministic")
            throw ConfigError("provider kind must be deterministic or remote");
        read(p, "dim", c.provider.dim);
        read(p, "aliases", c.provider.aliases);
        read_opt(p, "alias_file", c.provider.alias_file);
        read(p, "endpoint", c.provider.endpoint);
        read(p, "auth_header_name", c.provider.auth_header_name);
        read(p, "auth_header_env", c.provider.auth_header_env);
    }
    if (j.contains("train")) {
        const auto& t = j["train"];
        check_keys(t, {"model", "dim", "epochs", "batch_size", "learning_rate", "margin", "negatives", "norm",
                       "optimizer", "threads"},
                   "train");
        read(t, "model", c.train.model);
        read(t, "dim", c.train.dim);
        read(t, "epochs", c.train.epochs);
        read(t, "batch_size", c.train.batch_size);
        read(t, "learning_rate", c.train.learning_rate);
        read(t, "margin", c.train.margin);
        read(t, "negatives", c.train.negatives);
        read(t, "norm", c.train.norm);
        read(t, "optimizer", c.train.optimizer);
        read(t, "threads", c.train.threads);
    }
    c.validate();
    return c;
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path + " is not valid JSON: " + e.what());
    }
    auto c = config_from_json(j);
    const auto dir = std::filesystem::path(path).parent_path();
    for (auto& s : c.sources) s.path = rebase(dir, s.path);
    for (auto* p : {&c.type_mappings, &c.relation_table, &c.constraints, &c.gold_alignments, &c.gold_edges,
                    &c.provider.alias_file})
        if (*p) **p = rebase(dir, **p);
    return c;
}

void save_config(const PipelineConfig& c, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    out << config_to_json(c).dump(2) << '\n';
}

std::optional<std::string> resolve_config_path(const std::optional<std::string>& explicit_path) {
    if (explicit_path && !explicit_path->empty()) return explicit_path;
    if (const char* env = std::getenv("KGFUSE_CONFIG"); env && *env) return std::string(env);
    return std::nullopt;
}

std::string config_hash(const PipelineConfig& c) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(embed::fnv1a64(config_to_json(c).dump())));
    return buf;
}

std::unique_ptr<embed::EmbeddingProvider> make_provider(const PipelineConfig& c) {
    const auto& p = c.provider;
    if (p.kind == ProviderConfig::Kind::remote) {
        embed::RemoteConfig rc;
        rc.endpoint = p.endpoint;
        rc.auth_header_name = p.auth_header_name;
        if (!p.auth_header_env.empty())
            if (const char* v = std::getenv(p.auth_header_env.c_str())) rc.auth_header_value = v;
        return std::make_unique<embed::RemoteProvider>(rc, p.dim);
    }
    auto aliases = p.aliases;
    if (p.alias_file)
        for (auto& [k, v] : read_alias_tsv(*p.alias_file)) aliases.emplace(k, v);
    return std::make_unique<embed::DeterministicProvider>(c.seed, p.dim, aliases);
}

expand::ExpansionConfig expansion_config(const PipelineConfig& c) {
    expand::ExpansionConfig e;
    e.tau_accept = c.tau_accept;
    e.delta_p = c.delta_p;
    e.max_iterations = c.max_iterations;
    e.mode = c.mode == "auto_accept" ? expand::IntegrationMode::auto_accept : expand::IntegrationMode::review;
    return e;
}

linkpred::TrainConfig train_config(const PipelineConfig& c) {
    linkpred::TrainConfig t;
    t.dim = c.train.dim;
    t.epochs = c.train.epochs;
    t.batch_size = c.train.batch_size;
    t.learning_rate = c.train.learning_rate;
    t.margin = c.train.margin;
    t.negatives = c.train.negatives;
    t.norm = c.train.norm;
    t.seed = c.seed;
    t.optimizer = c.train.optimizer == "sgd" ? linkpred::Optimizer::sgd : linkpred::Optimizer::adagrad;
    t.threads = c.train.threads;
    return t;
}

}  // namespace kgfuse
