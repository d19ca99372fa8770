#pragma once

#include "forensic/evaluation.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

namespace forensic {

// Service-level failure with a stable code and HTTP status.
class ServiceError : public std::runtime_error {
public:
    ServiceError(int status, std::string code, const std::string& message, std::string field = {})
        : std::runtime_error(message), status_(status), code_(std::move(code)), field_(std::move(field))
    {
    }
    int status() const { return status_; }
    const std::string& code() const { return code_; }
    const std::string& field() const { return field_; }

private:
    int status_;
    std::string code_;
    std::string field_;
};

struct SessionRequest {
    std::vector<std::string> initial_yes;
    std::vector<std::string> initial_no;
    std::optional<double> budget;
    std::optional<KnnParams> knn;
    std::optional<MctsConfig> mcts;
};

struct Session {
    std::string id;
    TechniqueSet initial_yes;
    TechniqueSet initial_no;
    Budget budget; // spent tracks the history
    KnnParams knn;
    MctsConfig mcts;
    std::vector<Outcome> history;
    std::string created_at;
    std::string updated_at;

    InvestigationState state() const;
    double cumulative_benefit(const Catalog& catalog) const;
    BenefitCurve curve(const Catalog& catalog) const;
};

enum class RecommendationStatus { ok, complete, budget_exhausted };

std::string_view to_string(RecommendationStatus s);

struct RankingEntry {
    TechniqueIndex technique = 0;
    double probability = 0.0;
    double value = 0.0;
    std::uint32_t visits = 0;
    bool affordable = false;

    friend bool operator==(const RankingEntry&, const RankingEntry&) = default;
};

struct Recommendation {
    RecommendationStatus status = RecommendationStatus::ok;
    std::size_t step = 0;
    std::uint64_t seed = 0;
    std::optional<double> budget_remaining;
    std::optional<TechniqueIndex> recommended;
    std::vector<RankingEntry> ranking;

    friend bool operator==(const Recommendation&, const Recommendation&) = default;
};

// Seed for the decision at `step` of session `id`.
std::uint64_t decision_seed(std::string_view session_id, std::size_t step);

// Ranks every available action from `state` with run_search seeded by `mcts.seed`.
Recommendation rank_actions(const InvestigationState& state, const Budget& budget, const Corpus& corpus,
                            const KnnParams& knn, const MctsConfig& mcts);

// rank_actions on the session's current state with the seed derived from (id, step).
Recommendation compute_recommendation(const Session& session, const Corpus& corpus);

struct SessionServiceOptions {
    std::optional<std::filesystem::path> data_dir; // no persistence when absent
    KnnParams knn;
    MctsConfig mcts;
};

class SessionService {
public:
    SessionService(std::shared_ptr<const Corpus> corpus, SessionServiceOptions options);

    const Corpus& corpus() const { return *corpus_; }
    const SessionServiceOptions& options() const { return options_; }
    const std::vector<std::string>& load_warnings() const { return load_warnings_; }

    Session create(const SessionRequest& request);
    Session get(const std::string& id) const;
    std::vector<std::string> list() const;
    Recommendation recommendation(const std::string& id);
    Session record_finding(const std::string& id, std::string_view technique, bool used);
    Recommendation preview(const std::string& id, std::string_view technique, bool used) const;
    Session undo_last(const std::string& id);

private:
    struct Entry {
        mutable std::mutex mutex;
        Session session;
        std::optional<Recommendation> cached;
    };

    std::shared_ptr<Entry> entry(const std::string& id) const;
    TechniqueIndex checked_technique(const Session& s, std::string_view technique) const;
    void append_event(const std::string& id, const std::string& line) const;
    void load_all();
    Session replay(const std::filesystem::path& file) const;
    std::string new_id();

    std::shared_ptr<const Corpus> corpus_;
    SessionServiceOptions options_;
    std::uint64_t catalog_fingerprint_ = 0;
    mutable std::shared_mutex sessions_mutex_;
    std::map<std::string, std::shared_ptr<Entry>> sessions_;
    std::vector<std::string> load_warnings_;
};

} // namespace forensic
