#include "forensic/http_api.hpp"

#include "forensic/error.hpp"

#include <httplib.h>
#include <json.hpp>

#include <cmath>

namespace forensic {

namespace {

using json = nlohmann::ordered_json;

ApiResponse respond(int status, const json& body)
{
    return {status, body.dump()};
}

ApiResponse error_response(int status, std::string_view code, std::string_view message, std::string_view field = {})
{
    json j{{"code", code}, {"message", message}};
    if (!field.empty()) j["field"] = field;
    return respond(status, j);
}

ServiceError bad_field(const std::string& field, const std::string& message)
{
    return ServiceError(400, "invalid_request", message, field);
}

std::vector<std::string_view> split_path(std::string_view path)
{
    std::vector<std::string_view> parts;
    while (!path.empty()) {
        const auto slash = path.find('/');
        auto part = path.substr(0, slash);
        if (!part.empty()) parts.push_back(part);
        if (slash == std::string_view::npos) break;
        path.remove_prefix(slash + 1);
    }
    return parts;
}

json parse_body(std::string_view body)
{
    if (body.empty()) return json::object();
    json j;
    try {
        j = json::parse(body);
    } catch (const json::parse_error& e) {
        throw ServiceError(400, "invalid_json", std::string("request body is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ServiceError(400, "invalid_json", "request body must be a JSON object");
    return j;
}

std::vector<std::string> string_list(const json& body, const std::string& field)
{
    if (!body.contains(field) || body[field].is_null()) return {};
    const auto& v = body[field];
    if (!v.is_array()) throw bad_field(field, field + " must be an array of technique ids");
    std::vector<std::string> out;
    for (const auto& e : v) {
        if (!e.is_string()) throw bad_field(field, field + " must be an array of technique ids");
        out.push_back(e.get<std::string>());
    }
    return out;
}

double number_field(const json& obj, const std::string& key, const std::string& field, double fallback)
{
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number()) throw bad_field(field, field + " must be a number");
    return obj[key].get<double>();
}

std::size_t count_field(const json& obj, const std::string& key, const std::string& field, std::size_t fallback)
{
    if (!obj.contains(key)) return fallback;
    const auto& v = obj[key];
    if (!v.is_number_integer() || v.get<long long>() < 0) throw bad_field(field, field + " must be a non-negative integer");
    return v.get<std::size_t>();
}

SessionRequest parse_session_request(const json& body, const SessionServiceOptions& defaults)
{
    SessionRequest req;
    req.initial_yes = string_list(body, "initial_yes");
    req.initial_no = string_list(body, "initial_no");
    if (body.contains("budget") && !body["budget"].is_null()) {
        if (!body["budget"].is_number()) throw bad_field("budget", "budget must be a number or null");
        req.budget = body["budget"].get<double>();
    }
    if (body.contains("knn") && !body["knn"].is_null()) {
        const auto& k = body["knn"];
        if (!k.is_object()) throw bad_field("knn", "knn must be an object");
        req.knn = KnnParams{number_field(k, "beta1", "knn.beta1", defaults.knn.beta1),
                            number_field(k, "beta2", "knn.beta2", defaults.knn.beta2)};
    }
    if (body.contains("mcts") && !body["mcts"].is_null()) {
        const auto& m = body["mcts"];
        if (!m.is_object()) throw bad_field("mcts", "mcts must be an object");
        MctsConfig c = defaults.mcts;
        c.iterations = count_field(m, "iterations", "mcts.iterations", c.iterations);
        c.depth = count_field(m, "depth", "mcts.depth", c.depth);
        c.exploration = number_field(m, "exploration", "mcts.exploration", c.exploration);
        c.prune_width = count_field(m, "prune_width", "mcts.prune_width", c.prune_width);
        c.gamma = number_field(m, "gamma", "mcts.gamma", c.gamma);
        req.mcts = c;
    }
    return req;
}

std::pair<std::string, bool> parse_finding(const json& body)
{
    if (!body.contains("technique") || !body["technique"].is_string())
        throw bad_field("technique", "technique must be a technique id string");
    if (!body.contains("used") || !body["used"].is_boolean()) throw bad_field("used", "used must be a boolean");
    return {body["technique"].get<std::string>(), body["used"].get<bool>()};
}

json nullable(const std::optional<double>& v)
{
    return v ? json(*v) : json(nullptr);
}

json technique_json(const Technique& t)
{
    return {{"id", t.id}, {"name", t.name}, {"benefit", t.benefit}, {"cost", t.cost}};
}

std::string_view session_status(const Session& s, const Catalog& catalog)
{
    const TechniqueSet avail = available_actions(s.state(), catalog);
    if (avail.empty()) return "complete";
    bool affordable = false;
    avail.for_each([&](TechniqueIndex a) { affordable = affordable || s.budget.fits(catalog[a].cost); });
    return affordable ? "active" : "budget_exhausted";
}

json summary_json(const Session& s, const Catalog& catalog, bool with_history)
{
    const InvestigationState st = s.state();
    json j{{"id", s.id},
           {"status", session_status(s, catalog)},
           {"step", st.step},
           {"initial_yes", catalog.ids_of(s.initial_yes)},
           {"initial_no", catalog.ids_of(s.initial_no)},
           {"yes", catalog.ids_of(st.yes)},
           {"no", catalog.ids_of(st.no)},
           {"budget", {{"limit", nullable(s.budget.limit)}, {"spent", s.budget.spent}, {"remaining", nullable(s.budget.remaining())}}},
           {"cumulative_benefit", s.cumulative_benefit(catalog)},
           {"knn", {{"beta1", s.knn.beta1}, {"beta2", s.knn.beta2}}},
           {"mcts",
            {{"iterations", s.mcts.iterations},
             {"depth", s.mcts.depth},
             {"exploration", s.mcts.exploration},
             {"prune_width", s.mcts.prune_width},
             {"gamma", s.mcts.gamma}}},
           {"created_at", s.created_at},
           {"updated_at", s.updated_at}};
    if (with_history) {
        json h = json::array();
        double cost = 0.0, benefit = 0.0;
        for (const auto& o : s.history) {
            const Technique& t = catalog[o.technique];
            cost += t.cost;
            benefit += step_reward(t, o.used);
            h.push_back({{"technique", t.id},
                         {"used", o.used},
                         {"cost", t.cost},
                         {"benefit", step_reward(t, o.used)},
                         {"cumulative_cost", cost},
                         {"cumulative_benefit", benefit}});
        }
        j["history"] = std::move(h);
    }
    return j;
}

json recommendation_json(const std::string& session_id, const Recommendation& r, const Catalog& catalog)
{
    json ranking = json::array();
    for (const auto& e : r.ranking) {
        const Technique& t = catalog[e.technique];
        ranking.push_back({{"technique", t.id},
                           {"name", t.name},
                           {"probability", e.probability},
                           {"benefit", t.benefit},
                           {"cost", t.cost},
                           {"value", e.value},
                           {"visits", e.visits},
                           {"affordable", e.affordable}});
    }
    std::string message;
    if (r.status == RecommendationStatus::complete) message = "investigation complete";
    if (r.status == RecommendationStatus::budget_exhausted) message = "remaining budget covers no remaining technique";
    json j{{"session_id", session_id},
           {"status", to_string(r.status)},
           {"step", r.step},
           {"seed", std::to_string(r.seed)},
           {"budget_remaining", nullable(r.budget_remaining)},
           {"recommended", r.recommended ? json(catalog[*r.recommended].id) : json(nullptr)},
           {"ranking", std::move(ranking)}};
    if (!message.empty()) j["message"] = message;
    return j;
}

json curve_json(const Session& s, const Catalog& catalog)
{
    json bps = json::array();
    for (const auto& [c, b] : s.curve(catalog).breakpoints) bps.push_back({{"cost", c}, {"benefit", b}});
    return {{"session_id", s.id}, {"breakpoints", std::move(bps)}};
}

ApiResponse route(SessionService& svc, std::string_view method, std::string_view path, std::string_view body)
{
    const Catalog& catalog = svc.corpus().catalog();
    const auto parts = split_path(path);
    if (parts.empty() || parts[0] != "api") return error_response(404, "not_found", "no such route");
    const auto method_not_allowed = [&] { return error_response(405, "method_not_allowed", "method not allowed"); };

    if (parts.size() == 2 && parts[1] == "catalog") {
        if (method != "GET") return method_not_allowed();
        json list = json::array();
        for (const auto& t : catalog.techniques()) list.push_back(technique_json(t));
        return respond(200, json{{"techniques", std::move(list)}, {"total_cost", catalog.total_cost()}});
    }
    if (parts.size() < 2 || parts[1] != "sessions") return error_response(404, "not_found", "no such route");

    if (parts.size() == 2) {
        if (method == "POST") {
            const Session s = svc.create(parse_session_request(parse_body(body), svc.options()));
            return respond(201, summary_json(s, catalog, true));
        }
        if (method == "GET") return respond(200, json{{"sessions", svc.list()}});
        return method_not_allowed();
    }

    const std::string id(parts[2]);
    if (parts.size() == 3) {
        if (method != "GET") return method_not_allowed();
        return respond(200, summary_json(svc.get(id), catalog, true));
    }
    const std::string_view sub = parts[3];
    if (parts.size() == 4 && sub == "recommendation") {
        if (method != "GET") return method_not_allowed();
        return respond(200, recommendation_json(id, svc.recommendation(id), catalog));
    }
    if (parts.size() == 4 && sub == "findings") {
        if (method != "POST") return method_not_allowed();
        const auto [technique, used] = parse_finding(parse_body(body));
        return respond(200, summary_json(svc.record_finding(id, technique, used), catalog, true));
    }
    if (parts.size() == 5 && sub == "findings" && parts[4] == "last") {
        if (method != "DELETE") return method_not_allowed();
        return respond(200, summary_json(svc.undo_last(id), catalog, true));
    }
    if (parts.size() == 4 && sub == "preview") {
        if (method != "POST") return method_not_allowed();
        const auto [technique, used] = parse_finding(parse_body(body));
        return respond(200, recommendation_json(id, svc.preview(id, technique, used), catalog));
    }
    if (parts.size() == 4 && sub == "curve") {
        if (method != "GET") return method_not_allowed();
        return respond(200, curve_json(svc.get(id), catalog));
    }
    return error_response(404, "not_found", "no such route");
}

} // namespace

std::string recommendation_payload(const std::string& session_id, const Recommendation& rec, const Catalog& catalog)
{
    return recommendation_json(session_id, rec, catalog).dump(2);
}

ApiResponse handle_api_request(SessionService& service, std::string_view method, std::string_view path,
                               std::string_view body)
{
    try {
        return route(service, method, path, body);
    } catch (const ServiceError& e) {
        return error_response(e.status(), e.code(), e.what(), e.field());
    } catch (const std::exception& e) {
        return error_response(500, "internal_error", e.what());
    }
}

struct ApiServer::Impl {
    explicit Impl(SessionService& s) : service(s) {}
    SessionService& service;
    httplib::Server server;
};

ApiServer::ApiServer(SessionService& service, const std::string& static_dir)
    : impl_(std::make_unique<Impl>(service))
{
    auto forward = [this](const httplib::Request& req, httplib::Response& res) {
        const ApiResponse r = handle_api_request(impl_->service, req.method, req.path, req.body);
        res.status = r.status;
        res.set_content(r.body, "application/json; charset=utf-8");
    };
    impl_->server.Get(R"(/api/.*)", forward);
    impl_->server.Post(R"(/api/.*)", forward);
    impl_->server.Delete(R"(/api/.*)", forward);
    impl_->server.Put(R"(/api/.*)", forward);
    if (!static_dir.empty() && !impl_->server.set_mount_point("/", static_dir))
        throw PreconditionError("static directory '" + static_dir + "' does not exist");
}

ApiServer::~ApiServer() = default;

int ApiServer::bind(const std::string& host, int port)
{
    int bound = port;
    if (port == 0)
        bound = impl_->server.bind_to_any_port(host);
    else if (!impl_->server.bind_to_port(host, port))
        bound = -1;
    if (bound < 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
    return bound;
}

void ApiServer::listen()
{
    impl_->server.listen_after_bind();
}

void ApiServer::stop()
{
    impl_->server.stop();
}

} // namespace forensic
