#include "forensic/session.hpp"

#include "forensic/error.hpp"
#include "forensic/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <ctime>
#include <fstream>
#include <random>

namespace forensic {

namespace {

using json = nlohmann::json;

std::string now_iso()
{
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

bool valid_id(std::string_view id)
{
    return !id.empty() && id.size() <= 64 &&
           std::all_of(id.begin(), id.end(), [](char c) { return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'); });
}

ServiceError not_found(const std::string& id)
{
    return ServiceError(404, "session_not_found", "no session with id '" + id + "'");
}

json knn_json(const KnnParams& k)
{
    return {{"beta1", k.beta1}, {"beta2", k.beta2}};
}

json mcts_json(const MctsConfig& c)
{
    return {{"iterations", c.iterations},
            {"depth", c.depth},
            {"exploration", c.exploration},
            {"prune_width", c.prune_width},
            {"gamma", c.gamma}};
}

std::uint64_t fingerprint(const Catalog& catalog)
{
    std::string all;
    for (const auto& t : catalog.techniques()) all += t.id + '\n';
    return fnv1a64(all);
}

} // namespace

InvestigationState Session::state() const
{
    InvestigationState s{initial_yes, initial_no, 0};
    for (const auto& o : history) s = apply_outcome(s, o);
    return s;
}

double Session::cumulative_benefit(const Catalog& catalog) const
{
    double b = 0.0;
    for (const auto& o : history) b += step_reward(catalog[o.technique], o.used);
    return b;
}

BenefitCurve Session::curve(const Catalog& catalog) const
{
    BenefitCurve c;
    double cost = 0.0;
    double benefit = 0.0;
    for (const auto& o : history) {
        cost += catalog[o.technique].cost;
        benefit += step_reward(catalog[o.technique], o.used);
        c.add(cost, benefit);
    }
    return c;
}

std::string_view to_string(RecommendationStatus s)
{
    switch (s) {
    case RecommendationStatus::ok: return "ok";
    case RecommendationStatus::complete: return "complete";
    case RecommendationStatus::budget_exhausted: return "budget_exhausted";
    }
    return "ok";
}

std::uint64_t decision_seed(std::string_view session_id, std::size_t step)
{
    return derive_seed(fnv1a64(session_id), step);
}

Recommendation rank_actions(const InvestigationState& state, const Budget& budget, const Corpus& corpus,
                            const KnnParams& knn, const MctsConfig& mcts)
{
    const Catalog& catalog = corpus.catalog();
    Recommendation rec;
    rec.step = state.step;
    rec.seed = mcts.seed;
    rec.budget_remaining = budget.remaining();

    const TechniqueSet avail = available_actions(state, catalog);
    if (avail.empty()) {
        rec.status = RecommendationStatus::complete;
        return rec;
    }
    bool any_affordable = false;
    avail.for_each([&](TechniqueIndex a) { any_affordable = any_affordable || budget.fits(catalog[a].cost); });
    if (!any_affordable) {
        rec.status = RecommendationStatus::budget_exhausted;
        return rec;
    }

    const SearchResult result = run_search(state, corpus, knn, mcts);
    rec.recommended = result.recommended;
    for (const auto& r : result.ranked)
        rec.ranking.push_back({r.action, r.probability, r.value, r.visits, budget.fits(catalog[r.action].cost)});
    return rec;
}

Recommendation compute_recommendation(const Session& session, const Corpus& corpus)
{
    const InvestigationState state = session.state();
    MctsConfig cfg = session.mcts;
    cfg.seed = decision_seed(session.id, state.step);
    return rank_actions(state, session.budget, corpus, session.knn, cfg);
}

SessionService::SessionService(std::shared_ptr<const Corpus> corpus, SessionServiceOptions options)
    : corpus_(std::move(corpus)), options_(std::move(options))
{
    if (!corpus_ || corpus_->empty()) throw PreconditionError("session service needs a non-empty corpus");
    options_.knn.validate();
    options_.mcts.validate();
    catalog_fingerprint_ = fingerprint(corpus_->catalog());
    if (options_.data_dir) {
        std::filesystem::create_directories(*options_.data_dir);
        load_all();
    }
}

std::string SessionService::new_id()
{
    static thread_local std::mt19937_64 gen{std::random_device{}()};
    for (;;) {
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(gen()));
        std::string id(buf);
        std::shared_lock lock(sessions_mutex_);
        if (!sessions_.count(id)) return id;
    }
}

std::shared_ptr<SessionService::Entry> SessionService::entry(const std::string& id) const
{
    std::shared_lock lock(sessions_mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw not_found(id);
    return it->second;
}

void SessionService::append_event(const std::string& id, const std::string& line) const
{
    if (!options_.data_dir) return;
    const auto path = *options_.data_dir / (id + ".jsonl");
    std::ofstream out(path, std::ios::app | std::ios::binary);
    out << line << '\n';
    out.flush();
    if (!out) throw std::runtime_error("failed to persist session event to " + path.string());
}

Session SessionService::create(const SessionRequest& request)
{
    const Catalog& catalog = corpus_->catalog();
    auto parse_set = [&](const std::vector<std::string>& ids, const char* field) {
        TechniqueSet s;
        for (const auto& id : ids) {
            auto idx = catalog.find(id);
            if (!idx) throw ServiceError(400, "unknown_technique", "unknown technique id '" + id + "'", field);
            s.insert(*idx);
        }
        return s;
    };

    Session s;
    s.initial_yes = parse_set(request.initial_yes, "initial_yes");
    s.initial_no = parse_set(request.initial_no, "initial_no");
    if (s.initial_yes.intersects(s.initial_no))
        throw ServiceError(400, "overlapping_sets", "initial_yes and initial_no must be disjoint", "initial_no");
    if (request.budget && !(std::isfinite(*request.budget) && *request.budget > 0.0))
        throw ServiceError(400, "invalid_budget", "budget must be a positive number or null", "budget");
    s.budget = Budget{request.budget, 0.0};
    s.knn = request.knn.value_or(options_.knn);
    s.mcts = request.mcts.value_or(options_.mcts);
    try {
        s.knn.validate();
    } catch (const PreconditionError& e) {
        throw ServiceError(400, "invalid_config", e.what(), "knn");
    }
    try {
        s.mcts.validate();
    } catch (const PreconditionError& e) {
        throw ServiceError(400, "invalid_config", e.what(), "mcts");
    }
    s.created_at = s.updated_at = now_iso();
    s.id = new_id();

    json ev{{"event", "created"},
            {"id", s.id},
            {"catalog_fingerprint", catalog_fingerprint_},
            {"initial_yes", catalog.ids_of(s.initial_yes)},
            {"initial_no", catalog.ids_of(s.initial_no)},
            {"budget", s.budget.limit ? json(*s.budget.limit) : json(nullptr)},
            {"knn", knn_json(s.knn)},
            {"mcts", mcts_json(s.mcts)},
            {"at", s.created_at}};
    append_event(s.id, ev.dump());

    auto e = std::make_shared<Entry>();
    e->session = s;
    std::unique_lock lock(sessions_mutex_);
    sessions_.emplace(s.id, std::move(e));
    return s;
}

Session SessionService::get(const std::string& id) const
{
    auto e = entry(id);
    std::lock_guard lock(e->mutex);
    return e->session;
}

std::vector<std::string> SessionService::list() const
{
    std::shared_lock lock(sessions_mutex_);
    std::vector<std::string> ids;
    for (const auto& [id, _] : sessions_) ids.push_back(id);
    return ids;
}

Recommendation SessionService::recommendation(const std::string& id)
{
    auto e = entry(id);
    Session snapshot;
    {
        std::lock_guard lock(e->mutex);
        if (e->cached) return *e->cached;
        snapshot = e->session;
    }
    Recommendation rec = compute_recommendation(snapshot, *corpus_);
    std::lock_guard lock(e->mutex);
    // A finding may have landed during the search; only cache if the state is unchanged.
    if (e->session.history == snapshot.history) e->cached = rec;
    return rec;
}

TechniqueIndex SessionService::checked_technique(const Session& s, std::string_view technique) const
{
    const Catalog& catalog = corpus_->catalog();
    auto idx = catalog.find(technique);
    if (!idx)
        throw ServiceError(400, "unknown_technique", "unknown technique id '" + std::string(technique) + "'",
                           "technique");
    const InvestigationState state = s.state();
    if (state.yes.contains(*idx) || state.no.contains(*idx))
        throw ServiceError(409, "already_investigated",
                           "technique " + std::string(technique) + " has already been investigated", "technique");
    if (!s.budget.fits(catalog[*idx].cost))
        throw ServiceError(409, "unaffordable", "technique " + std::string(technique) + " exceeds the remaining budget",
                           "technique");
    return *idx;
}

Session SessionService::record_finding(const std::string& id, std::string_view technique, bool used)
{
    auto e = entry(id);
    std::lock_guard lock(e->mutex);
    const TechniqueIndex a = checked_technique(e->session, technique);
    const std::string at = now_iso();
    json ev{{"event", "finding"}, {"technique", std::string(technique)}, {"used", used}, {"at", at}};
    append_event(id, ev.dump());
    e->session.history.push_back({a, used});
    e->session.budget.spent += corpus_->catalog()[a].cost;
    e->session.updated_at = at;
    e->cached.reset();
    return e->session;
}

Recommendation SessionService::preview(const std::string& id, std::string_view technique, bool used) const
{
    Session clone = get(id);
    const TechniqueIndex a = checked_technique(clone, technique);
    clone.history.push_back({a, used});
    clone.budget.spent += corpus_->catalog()[a].cost;
    return compute_recommendation(clone, *corpus_);
}

Session SessionService::undo_last(const std::string& id)
{
    auto e = entry(id);
    std::lock_guard lock(e->mutex);
    if (e->session.history.empty()) throw ServiceError(409, "nothing_to_undo", "session has no recorded findings");
    const std::string at = now_iso();
    append_event(id, json{{"event", "undo"}, {"at", at}}.dump());
    const Outcome last = e->session.history.back();
    e->session.history.pop_back();
    e->session.budget.spent -= corpus_->catalog()[last.technique].cost;
    e->session.updated_at = at;
    e->cached.reset();
    return e->session;
}

Session SessionService::replay(const std::filesystem::path& file) const
{
    const Catalog& catalog = corpus_->catalog();
    std::ifstream in(file, std::ios::binary);
    if (!in) throw ParseError(file.string(), 0, "cannot open session log");
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);)
        if (!line.empty()) lines.push_back(line);
    if (lines.empty()) throw ParseError(file.string(), 0, "empty session log");

    Session s;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        json ev;
        try {
            ev = json::parse(lines[i]);
        } catch (const json::parse_error&) {
            // A torn final line from an interrupted append is dropped.
            if (i + 1 == lines.size() && i > 0) break;
            throw ParseError(file.string(), i + 1, "malformed event");
        }
        const std::string kind = ev.value("event", "");
        if (i == 0) {
            if (kind != "created") throw ParseError(file.string(), 1, "first event must be 'created'");
            if (ev.at("catalog_fingerprint").get<std::uint64_t>() != catalog_fingerprint_)
                throw ValidationError(file.string() + ": session was created against a different catalog");
            s.id = ev.at("id").get<std::string>();
            s.initial_yes = catalog.parse_ids(ev.at("initial_yes").get<std::vector<std::string>>());
            s.initial_no = catalog.parse_ids(ev.at("initial_no").get<std::vector<std::string>>());
            if (!ev.at("budget").is_null()) s.budget.limit = ev.at("budget").get<double>();
            s.knn = {ev.at("knn").at("beta1").get<double>(), ev.at("knn").at("beta2").get<double>()};
            const auto& m = ev.at("mcts");
            s.mcts.iterations = m.at("iterations").get<std::size_t>();
            s.mcts.depth = m.at("depth").get<std::size_t>();
            s.mcts.exploration = m.at("exploration").get<double>();
            s.mcts.prune_width = m.at("prune_width").get<std::size_t>();
            s.mcts.gamma = m.at("gamma").get<double>();
            s.created_at = s.updated_at = ev.at("at").get<std::string>();
        } else if (kind == "finding") {
            const TechniqueIndex a = catalog.index_of(ev.at("technique").get<std::string>());
            s.history.push_back({a, ev.at("used").get<bool>()});
            s.budget.spent += catalog[a].cost;
            s.updated_at = ev.at("at").get<std::string>();
        } else if (kind == "undo") {
            if (s.history.empty()) throw ParseError(file.string(), i + 1, "undo with empty history");
            s.budget.spent -= catalog[s.history.back().technique].cost;
            s.history.pop_back();
            s.updated_at = ev.at("at").get<std::string>();
        } else {
            throw ParseError(file.string(), i + 1, "unknown event '" + kind + "'");
        }
    }
    (void)s.state(); // throws on an inconsistent history
    return s;
}

void SessionService::load_all()
{
    for (const auto& de : std::filesystem::directory_iterator(*options_.data_dir)) {
        if (!de.is_regular_file() || de.path().extension() != ".jsonl") continue;
        const std::string stem = de.path().stem().string();
        if (!valid_id(stem)) continue;
        try {
            auto e = std::make_shared<Entry>();
            e->session = replay(de.path());
            if (e->session.id != stem) throw ValidationError("session id does not match file name");
            sessions_.emplace(stem, std::move(e));
        } catch (const std::exception& ex) {
            load_warnings_.push_back(de.path().string() + ": " + ex.what());
        }
    }
}

} // namespace forensic
