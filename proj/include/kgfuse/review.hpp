#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kgfuse/expand.hpp"

namespace kgfuse::review {

struct CandidateQuery {
    std::optional<expand::CandidateStatus> status;
    std::optional<RelationType> relation;
    std::optional<double> min_p;
    std::size_t page = 1;  // 1-based
    std::size_t page_size = 50;

    static constexpr std::size_t kMaxPageSize = 200;

    // Throws InvalidRequestError on bad values. Keys: status, relation,
    // min_p, page, page_size; missing keys keep defaults.
    static CandidateQuery parse(const std::map<std::string, std::string>& params);
};

struct NeighborSummary {
    std::string id;
    std::string label;
    std::string type;
    std::string relation;
    bool outgoing = true;
};

struct NodeContext {
    std::string id;
    std::string label;
    std::string type;
    std::size_t degree = 0;
    std::vector<NeighborSummary> neighbors;  // first kNeighborLimit by id
};

struct CandidateView {
    expand::CandidateEdge candidate;
    NodeContext head;
    NodeContext tail;
};

struct CandidatePage {
    std::vector<CandidateView> items;
    std::size_t total = 0;  // matches before paging
    std::size_t page = 1;
    std::size_t page_size = 0;
    std::uint64_t version = 0;
};

struct SessionStats {
    GraphStats graph;
    std::size_t iteration = 0;
    std::map<expand::CandidateStatus, std::size_t> candidates;
    std::uint64_t version = 0;
};

// One entry of the append-only log: a verdict or an expansion step.
struct LogEvent {
    enum class Kind { verdict, step };
    Kind kind = Kind::verdict;
    expand::CandidateId candidate = 0;
    expand::Verdict verdict = expand::Verdict::reject;
    std::string reviewer;
    double delta_p = 0.0;
    std::int64_t timestamp_ms = 0;
    std::uint64_t version = 0;  // session version after the event

    friend bool operator==(const LogEvent&, const LogEvent&) = default;
};

nlohmann::json event_to_json(const LogEvent& e);
LogEvent event_from_json(const nlohmann::json& j);
std::vector<LogEvent> read_event_log(std::istream& in);

struct VerdictResult {
    expand::CandidateEdge candidate;
    std::uint64_t version = 0;
};

// Serialises writes through one mutex and publishes immutable snapshots for
// readers. Every applied event bumps the version and is appended to the log.
class ReviewSession {
public:
    static constexpr std::size_t kNeighborLimit = 10;

    // `log_path`, when set, receives one JSON line per event.
    ReviewSession(expand::ExpansionState initial, double delta_p, std::optional<std::string> log_path = std::nullopt);

    // Rebuilds a session by applying `events` to `initial` in order.
    static std::unique_ptr<ReviewSession> replay(expand::ExpansionState initial, double delta_p,
                                                 const std::vector<LogEvent>& events,
                                                 std::optional<std::string> log_path = std::nullopt);

    CandidatePage list_candidates(const CandidateQuery& q) const;

    // Throws VersionConflictError when `read_version` is stale, LookupError
    // for an unknown id and StateError for a terminal candidate.
    VerdictResult submit_verdict(expand::CandidateId id, expand::Verdict verdict, const std::string& reviewer,
                                 std::uint64_t read_version);

    // Integrates accepted candidates (one expand step).
    std::uint64_t step();

    SessionStats get_stats() const;
    NodeContext node_context(const std::string& id) const;  // LookupError if absent

    std::uint64_t version() const;
    std::shared_ptr<const expand::ExpansionState> state() const;
    std::vector<LogEvent> events() const;
    double delta_p() const noexcept { return delta_p_; }

private:
    void publish(expand::ExpansionState next, LogEvent e);
    NodeContext context_of(const KnowledgeGraph& g, const std::string& id) const;

    const double delta_p_;
    std::optional<std::string> log_path_;
    mutable std::mutex mu_;
    std::shared_ptr<const expand::ExpansionState> state_;
    std::uint64_t version_ = 0;
    std::vector<LogEvent> events_;
};

nlohmann::json node_context_to_json(const NodeContext& c);
nlohmann::json page_to_json(const CandidatePage& p);
nlohmann::json stats_to_json(const SessionStats& s);

}  // namespace kgfuse::review
