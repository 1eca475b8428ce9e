#include "kgfuse/review.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <tuple>

#include "kgfuse/errors.hpp"

namespace kgfuse::review {

namespace {

std::size_t parse_count(const std::string& key, const std::string& v) {
    std::size_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size() || v.empty())
        throw InvalidRequestError(key + " must be a non-negative integer");
    return out;
}

}  // namespace

CandidateQuery CandidateQuery::parse(const std::map<std::string, std::string>& params) {
    CandidateQuery q;
    for (const auto& [k, v] : params) {
        if (k == "status") {
            if (v.empty()) continue;
            try {
                q.status = expand::parse_status(v);
            } catch (const ParseError&) {
                throw InvalidRequestError("status must be one of pending, accepted, rejected, removed");
            }
        } else if (k == "relation") {
            if (v.empty()) continue;
            auto r = taxonomy::canonical_relation(v);
            q.relation = r ? *r : RelationType{v};
        } else if (k == "min_p") {
            if (v.empty()) continue;
            char* end = nullptr;
            const double x = std::strtod(v.c_str(), &end);
            if (end != v.c_str() + v.size() || !std::isfinite(x) || x < 0.0 || x > 1.0)
                throw InvalidRequestError("min_p must be a number in [0, 1]");
            q.min_p = x;
        } else if (k == "page") {
            q.page = parse_count(k, v);
            if (q.page == 0) throw InvalidRequestError("page starts at 1");
        } else if (k == "page_size") {
            q.page_size = parse_count(k, v);
            if (q.page_size == 0 || q.page_size > kMaxPageSize)
                throw InvalidRequestError("page_size must be between 1 and " + std::to_string(kMaxPageSize));
        }
    }
    return q;
}

nlohmann::json event_to_json(const LogEvent& e) {
    nlohmann::json j{{"kind", e.kind == LogEvent::Kind::step ? "step" : "verdict"},
                     {"version", e.version},
                     {"timestamp", e.timestamp_ms}};
    if (e.kind == LogEvent::Kind::verdict) {
        j["candidate"] = e.candidate;
        j["verdict"] = expand::to_string(e.verdict);
        j["reviewer"] = e.reviewer;
        j["delta_p"] = e.delta_p;
    }
    return j;
}

LogEvent event_from_json(const nlohmann::json& j) {
    try {
        LogEvent e;
        const auto kind = j.at("kind").get<std::string>();
        if (kind == "step")
            e.kind = LogEvent::Kind::step;
        else if (kind != "verdict")
            throw ParseError("unknown event kind '" + kind + "'");
        e.version = j.at("version").get<std::uint64_t>();
        e.timestamp_ms = j.value("timestamp", std::int64_t{0});
        if (e.kind == LogEvent::Kind::verdict) {
            e.candidate = j.at("candidate").get<expand::CandidateId>();
            e.verdict = expand::parse_verdict(j.at("verdict").get<std::string>());
            e.reviewer = j.value("reviewer", "");
            e.delta_p = j.at("delta_p").get<double>();
        }
        return e;
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError(std::string("bad event record: ") + ex.what());
    }
}

std::vector<LogEvent> read_event_log(std::istream& in) {
    std::vector<LogEvent> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(event_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(e.what(), lineno);
        } catch (const ParseError& e) {
            throw ParseError(e.what(), lineno);
        }
    }
    return out;
}

ReviewSession::ReviewSession(expand::ExpansionState initial, double delta_p, std::optional<std::string> log_path)
    : delta_p_(delta_p),
      log_path_(std::move(log_path)),
      state_(std::make_shared<const expand::ExpansionState>(std::move(initial))) {
    if (!(delta_p >= 0.0) || !std::isfinite(delta_p)) throw ConfigError("delta_p must be >= 0");
}

std::unique_ptr<ReviewSession> ReviewSession::replay(expand::ExpansionState initial, double delta_p,
                                                     const std::vector<LogEvent>& events,
                                                     std::optional<std::string> log_path) {
    auto s = std::make_unique<ReviewSession>(std::move(initial), delta_p);
    for (const auto& e : events) {
        auto next = *s->state_;
        if (e.kind == LogEvent::Kind::step)
            next = expand::expand_step(std::move(next));
        else
            next = expand::apply_feedback(std::move(next), e.candidate, e.verdict, e.delta_p, e.timestamp_ms);
        if (e.version != s->version_ + 1)
            throw IntegrityError("event log skips from version " + std::to_string(s->version_) + " to " +
                                 std::to_string(e.version));
        s->state_ = std::make_shared<const expand::ExpansionState>(std::move(next));
        s->version_ = e.version;
        s->events_.push_back(e);
    }
    s->log_path_ = std::move(log_path);
    return s;
}

void ReviewSession::publish(expand::ExpansionState next, LogEvent e) {
    e.version = version_ + 1;
    if (log_path_) {
        std::ofstream out(*log_path_, std::ios::app);
        if (!out) throw ConfigError("cannot append to " + *log_path_);
        out << event_to_json(e).dump() << '\n';
        out.flush();
        if (!out) throw ConfigError("write failed on " + *log_path_);
    }
    state_ = std::make_shared<const expand::ExpansionState>(std::move(next));
    version_ = e.version;
    events_.push_back(std::move(e));
}

VerdictResult ReviewSession::submit_verdict(expand::CandidateId id, expand::Verdict verdict,
                                            const std::string& reviewer, std::uint64_t read_version) {
    std::lock_guard lock(mu_);
    if (read_version != version_) throw VersionConflictError(read_version, version_);
    const auto ts = expand::now_ms();
    auto next = expand::apply_feedback(*state_, id, verdict, delta_p_, ts);
    LogEvent e{LogEvent::Kind::verdict, id, verdict, reviewer, delta_p_, ts, 0};
    publish(std::move(next), std::move(e));
    return {state_->candidate(id), version_};
}

std::uint64_t ReviewSession::step() {
    std::lock_guard lock(mu_);
    auto next = expand::expand_step(*state_);
    LogEvent e;
    e.kind = LogEvent::Kind::step;
    e.timestamp_ms = expand::now_ms();
    publish(std::move(next), std::move(e));
    return version_;
}

std::uint64_t ReviewSession::version() const {
    std::lock_guard lock(mu_);
    return version_;
}

std::shared_ptr<const expand::ExpansionState> ReviewSession::state() const {
    std::lock_guard lock(mu_);
    return state_;
}

std::vector<LogEvent> ReviewSession::events() const {
    std::lock_guard lock(mu_);
    return events_;
}

NodeContext ReviewSession::context_of(const KnowledgeGraph& g, const std::string& id) const {
    const Node* n = g.find_node(id);
    if (!n) throw LookupError("unknown node '" + id + "'");
    NodeContext c{n->id, n->label, n->type.str(), 0, {}};
    std::vector<NeighborSummary> all;
    for (const Triple* t : g.out_edges(id)) {
        const Node& o = g.node(t->tail);
        all.push_back({o.id, o.label, o.type.str(), t->relation.str(), true});
    }
    for (const Triple* t : g.in_edges(id)) {
        const Node& o = g.node(t->head);
        all.push_back({o.id, o.label, o.type.str(), t->relation.str(), false});
    }
    c.degree = all.size();
    std::sort(all.begin(), all.end(), [](const NeighborSummary& a, const NeighborSummary& b) {
        return std::tie(a.id, a.relation, a.outgoing) < std::tie(b.id, b.relation, b.outgoing);
    });
    if (all.size() > kNeighborLimit) all.resize(kNeighborLimit);
    c.neighbors = std::move(all);
    return c;
}

CandidatePage ReviewSession::list_candidates(const CandidateQuery& q) const {
    std::shared_ptr<const expand::ExpansionState> st;
    CandidatePage page;
    {
        std::lock_guard lock(mu_);
        st = state_;
        page.version = version_;
    }
    if (q.page == 0 || q.page_size == 0 || q.page_size > CandidateQuery::kMaxPageSize)
        throw InvalidRequestError("invalid paging");
    std::vector<const expand::CandidateEdge*> hits;
    for (const auto& c : st->candidates) {
        if (q.status && c.status != *q.status) continue;
        if (q.relation && c.triple.relation != *q.relation) continue;
        if (q.min_p && c.probability < *q.min_p) continue;
        hits.push_back(&c);
    }
    std::sort(hits.begin(), hits.end(), [](const auto* a, const auto* b) {
        if (a->probability != b->probability) return a->probability > b->probability;
        return a->id < b->id;
    });
    page.total = hits.size();
    page.page = q.page;
    page.page_size = q.page_size;
    const std::size_t begin = (q.page - 1) * q.page_size;
    for (std::size_t i = begin; i < hits.size() && i < begin + q.page_size; ++i) {
        const auto& c = *hits[i];
        page.items.push_back({c, context_of(*st->graph, c.triple.head), context_of(*st->graph, c.triple.tail)});
    }
    return page;
}

SessionStats ReviewSession::get_stats() const {
    std::shared_ptr<const expand::ExpansionState> st;
    SessionStats s;
    {
        std::lock_guard lock(mu_);
        st = state_;
        s.version = version_;
    }
    s.graph = graph_stats(*st->graph);
    s.iteration = st->iteration;
    s.candidates = st->status_counts();
    return s;
}

NodeContext ReviewSession::node_context(const std::string& id) const { return context_of(*state()->graph, id); }

nlohmann::json node_context_to_json(const NodeContext& c) {
    nlohmann::json nb = nlohmann::json::array();
    for (const auto& n : c.neighbors)
        nb.push_back({{"id", n.id},
                      {"label", n.label},
                      {"type", n.type},
                      {"relation", n.relation},
                      {"direction", n.outgoing ? "out" : "in"}});
    return {{"id", c.id}, {"label", c.label}, {"type", c.type}, {"degree", c.degree}, {"neighbors", nb}};
}

nlohmann::json page_to_json(const CandidatePage& p) {
    nlohmann::json items = nlohmann::json::array();
    for (const auto& v : p.items) {
        auto j = expand::candidate_to_json(v.candidate);
        j.erase("kind");
        j["head"] = node_context_to_json(v.head);
        j["tail"] = node_context_to_json(v.tail);
        items.push_back(std::move(j));
    }
    return {{"items", items},
            {"total", p.total},
            {"page", p.page},
            {"page_size", p.page_size},
            {"version", p.version}};
}

nlohmann::json stats_to_json(const SessionStats& s) {
    nlohmann::json counts = nlohmann::json::object();
    for (const auto& [st, n] : s.candidates) counts[expand::to_string(st)] = n;
    return {{"nodes", s.graph.nodes},
            {"edges", s.graph.edges},
            {"node_types", s.graph.node_types},
            {"relation_types", s.graph.relation_types},
            {"iteration", s.iteration},
            {"candidates", counts},
            {"version", s.version}};
}

}  // namespace kgfuse::review
