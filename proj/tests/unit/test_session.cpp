#include "forensic/http_api.hpp"
#include "forensic/session.hpp"

#include "synthetic.hpp"

#include <doctest.h>
#include <httplib.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <thread>

using namespace forensic;
using nlohmann::json;

namespace {

std::filesystem::path temp_dir(const std::string& name)
{
    auto p = std::filesystem::temp_directory_path() / ("forensic_session_test_" + name + "_" +
                                                       std::to_string(std::random_device{}()));
    std::filesystem::remove_all(p);
    return p;
}

std::shared_ptr<const Corpus> sample_corpus()
{
    Rng rng(3);
    std::vector<Technique> ts;
    for (std::size_t i = 0; i < 6; ++i)
        ts.push_back({testing::technique_id(i), "Technique " + std::to_string(i + 1), 2.0 + i, 1.0 + (i % 3)});
    return std::make_shared<const Corpus>(testing::random_corpus(rng, Catalog(ts), 20, 0.45));
}

SessionServiceOptions fast_options(std::optional<std::filesystem::path> dir = std::nullopt)
{
    SessionServiceOptions o;
    o.data_dir = std::move(dir);
    o.knn = {4, 0.5};
    o.mcts.iterations = 300;
    return o;
}

struct Api {
    SessionService& svc;
    std::pair<int, json> call(std::string_view method, std::string_view path, const json& body = nullptr)
    {
        const auto r = handle_api_request(svc, method, path, body.is_null() ? "" : body.dump());
        return {r.status, json::parse(r.body)};
    }
};

} // namespace

TEST_CASE("create validates initial sets")
{
    SessionService svc(sample_corpus(), fast_options());
    const Session fresh = svc.create({});
    CHECK(fresh.state().investigated().empty());
    CHECK(fresh.budget.spent == 0);

    try {
        svc.create({{"T1"}, {"T1"}, std::nullopt, std::nullopt, std::nullopt});
        FAIL("expected overlap error");
    } catch (const ServiceError& e) {
        CHECK(e.status() == 400);
        CHECK(e.code() == "overlapping_sets");
        CHECK(e.field() == "initial_no");
    }
    CHECK_THROWS_AS(svc.create({{"T99"}, {}, std::nullopt, std::nullopt, std::nullopt}), ServiceError);
    CHECK_THROWS_AS(svc.create({{}, {}, -1.0, std::nullopt, std::nullopt}), ServiceError);
}

TEST_CASE("initial findings are never recommended and carry no cost")
{
    SessionService svc(sample_corpus(), fast_options());
    const Session s = svc.create({{"T1"}, {}, 20.0, std::nullopt, std::nullopt});
    const auto rec = svc.recommendation(s.id);
    CHECK(rec.status == RecommendationStatus::ok);
    CHECK(rec.ranking.size() == 5);
    for (const auto& e : rec.ranking) CHECK(e.technique != 0);
    CHECK(*rec.budget_remaining == 20.0);
}

TEST_CASE("recommendation matches run_search with the derived seed and is cached")
{
    auto corpus = sample_corpus();
    SessionService svc(corpus, fast_options());
    const Session s = svc.create({{"T2"}, {}, std::nullopt, std::nullopt, std::nullopt});
    const auto first = svc.recommendation(s.id);
    CHECK(first == svc.recommendation(s.id));
    MctsConfig cfg = s.mcts;
    cfg.seed = decision_seed(s.id, 0);
    const auto direct = run_search(s.state(), *corpus, s.knn, cfg);
    CHECK(*first.recommended == direct.recommended);
    CHECK(first.ranking.front().technique == direct.recommended);
}

TEST_CASE("findings update benefit and spent, and conflicts are rejected")
{
    auto corpus = sample_corpus();
    const Catalog& cat = corpus->catalog();
    SessionService svc(corpus, fast_options());
    const Session s = svc.create({{"T1"}, {}, 10.0, std::nullopt, std::nullopt});
    const Session a = svc.record_finding(s.id, "T2", true);
    CHECK(a.budget.spent == cat[1].cost);
    CHECK(a.cumulative_benefit(cat) == cat[1].benefit);
    const Session b = svc.record_finding(s.id, "T3", false);
    CHECK(b.budget.spent == cat[1].cost + cat[2].cost);
    CHECK(b.cumulative_benefit(cat) == cat[1].benefit);
    try {
        svc.record_finding(s.id, "T2", false);
        FAIL("expected conflict");
    } catch (const ServiceError& e) {
        CHECK(e.status() == 409);
        CHECK(e.code() == "already_investigated");
    }
    CHECK_THROWS_AS(svc.record_finding("ffff", "T4", true), ServiceError);
}

TEST_CASE("budget exhaustion and completion are explicit")
{
    auto corpus = sample_corpus();
    SessionService svc(corpus, fast_options());
    // Cheapest technique costs 1; a budget of 1 allows exactly one cost-1 step.
    const Session s = svc.create({{}, {}, 1.0, std::nullopt, std::nullopt});
    svc.record_finding(s.id, "T1", true);
    const auto rec = svc.recommendation(s.id);
    CHECK(rec.status == RecommendationStatus::budget_exhausted);
    CHECK(rec.ranking.empty());
    try {
        svc.record_finding(s.id, "T4", true);
        FAIL("expected unaffordable");
    } catch (const ServiceError& e) {
        CHECK(e.code() == "unaffordable");
    }

    const Session done = svc.create({{"T1", "T2", "T3", "T4", "T5"}, {}, std::nullopt, std::nullopt, std::nullopt});
    const auto last = svc.recommendation(done.id);
    REQUIRE(last.ranking.size() == 1);
    CHECK(last.ranking[0].technique == 5);
    CHECK(svc.preview(done.id, "T6", true).status == RecommendationStatus::complete);
}

TEST_CASE("preview has no side effects and matches the recorded outcome")
{
    const auto dir = temp_dir("preview");
    auto corpus = sample_corpus();
    SessionService svc(corpus, fast_options(dir));
    const Session s = svc.create({{"T1"}, {}, std::nullopt, std::nullopt, std::nullopt});
    const auto log_size = std::filesystem::file_size(dir / (s.id + ".jsonl"));
    const auto if_used = svc.preview(s.id, "T3", true);
    const auto if_unused = svc.preview(s.id, "T3", false);
    CHECK(if_used.step == 1);
    CHECK(if_unused.step == 1);
    CHECK(svc.get(s.id).history.empty());
    CHECK(std::filesystem::file_size(dir / (s.id + ".jsonl")) == log_size);
    svc.record_finding(s.id, "T3", true);
    CHECK(svc.recommendation(s.id) == if_used);
    std::filesystem::remove_all(dir);
}

TEST_CASE("sessions replay after restart to the same next recommendation")
{
    const auto dir = temp_dir("replay");
    auto corpus = sample_corpus();
    std::string id;
    Recommendation before;
    {
        SessionService svc(corpus, fast_options(dir));
        id = svc.create({{"T2"}, {"T5"}, 30.0, std::nullopt, std::nullopt}).id;
        svc.record_finding(id, "T1", false);
        svc.record_finding(id, "T4", true);
        svc.record_finding(id, "T6", true);
        svc.undo_last(id);
        before = svc.recommendation(id);
    }
    // A torn trailing line from an interrupted write is ignored.
    {
        std::ofstream f(dir / (id + ".jsonl"), std::ios::app);
        f << "{\"event\":\"find";
    }
    SessionService again(corpus, fast_options(dir));
    CHECK(again.load_warnings().empty());
    const Session s = again.get(id);
    CHECK(s.history.size() == 2);
    CHECK(s.budget.spent == corpus->catalog()[0].cost + corpus->catalog()[3].cost);
    CHECK(again.recommendation(id) == before);

    // A log written against another catalog is skipped with a warning.
    SessionService other(std::make_shared<const Corpus>(testing::four_incident_corpus()), fast_options(dir));
    CHECK(other.list().empty());
    CHECK_FALSE(other.load_warnings().empty());
    std::filesystem::remove_all(dir);
}

TEST_CASE("concurrent findings on one session are serialized")
{
    SessionService svc(sample_corpus(), fast_options());
    const Session s = svc.create({});
    std::atomic<int> ok{0}, conflict{0};
    std::vector<std::thread> threads;
    for (int i = 0; i < 8; ++i)
        threads.emplace_back([&] {
            try {
                svc.record_finding(s.id, "T2", true);
                ++ok;
            } catch (const ServiceError&) {
                ++conflict;
            }
        });
    for (auto& t : threads) t.join();
    CHECK(ok == 1);
    CHECK(conflict == 7);
}

TEST_CASE("HTTP API routes")
{
    auto corpus = sample_corpus();
    SessionService svc(corpus, fast_options());
    Api api{svc};

    auto [cs, catalog] = api.call("GET", "/api/catalog");
    CHECK(cs == 200);
    CHECK(catalog["techniques"].size() == 6);
    CHECK(catalog["techniques"][0]["cost"] == 1.0);

    auto [st, created] = api.call("POST", "/api/sessions", {{"initial_yes", {"T1"}}, {"budget", 12}, {"mcts", {{"iterations", 200}}}});
    REQUIRE(st == 201);
    const std::string id = created["id"];
    CHECK(created["mcts"]["iterations"] == 200);
    CHECK(created["budget"]["limit"] == 12.0);
    const std::string base = "/api/sessions/" + id;

    auto [rs, rec] = api.call("GET", base + "/recommendation");
    CHECK(rs == 200);
    CHECK(rec["status"] == "ok");
    CHECK(rec["ranking"].size() == 5);
    CHECK(rec["recommended"] == rec["ranking"][0]["technique"]);
    for (const auto& e : rec["ranking"]) {
        CHECK(e.contains("probability"));
        CHECK(e.contains("visits"));
        CHECK(e.contains("affordable"));
    }
    CHECK(api.call("GET", base + "/recommendation").second == rec);

    auto [ps, preview] = api.call("POST", base + "/preview", {{"technique", "T2"}, {"used", true}});
    CHECK(ps == 200);
    CHECK(preview["step"] == 1);
    CHECK(api.call("GET", base).second["history"].empty());

    auto [fs, after] = api.call("POST", base + "/findings", {{"technique", "T2"}, {"used", true}});
    CHECK(fs == 200);
    CHECK(after["cumulative_benefit"] == corpus->catalog()[1].benefit);
    CHECK(after["history"].size() == 1);

    auto [curve_status, curve] = api.call("GET", base + "/curve");
    CHECK(curve_status == 200);
    REQUIRE(curve["breakpoints"].size() == 2);
    CHECK(curve["breakpoints"][1]["cost"] == corpus->catalog()[1].cost);
    CHECK(curve["breakpoints"][1]["benefit"] == corpus->catalog()[1].benefit);

    auto [conflict_status, conflict] = api.call("POST", base + "/findings", {{"technique", "T2"}, {"used", false}});
    CHECK(conflict_status == 409);
    CHECK(conflict["code"] == "already_investigated");
    CHECK(conflict["field"] == "technique");

    CHECK(api.call("POST", "/api/sessions", {{"initial_yes", {"T1"}}, {"initial_no", {"T1"}}}).second["field"] ==
          "initial_no");
    CHECK(api.call("POST", "/api/sessions", {{"budget", "lots"}}).first == 400);
    CHECK(api.call("POST", base + "/findings", {{"technique", "T3"}}).second["field"] == "used");
    CHECK(handle_api_request(svc, "POST", "/api/sessions", "{oops").status == 400);
    CHECK(api.call("GET", "/api/sessions/0123/recommendation").first == 404);
    CHECK(api.call("GET", "/api/nothing").first == 404);
    CHECK(api.call("PUT", base).first == 405);

    auto [us, undone] = api.call("DELETE", base + "/findings/last");
    CHECK(us == 200);
    CHECK(undone["history"].empty());
    CHECK(api.call("DELETE", base + "/findings/last").first == 409);
}

TEST_CASE("HTTP server end to end")
{
    auto corpus = sample_corpus();
    SessionService svc(corpus, fast_options());
    ApiServer server(svc);
    const int port = server.bind("127.0.0.1", 0);
    std::thread t([&] { server.listen(); });

    httplib::Client client("127.0.0.1", port);
    auto created = client.Post("/api/sessions", R"({"initial_yes":["T3"]})", "application/json");
    REQUIRE(created);
    CHECK(created->status == 201);
    const std::string id = json::parse(created->body)["id"];
    auto rec = client.Get("/api/sessions/" + id + "/recommendation");
    REQUIRE(rec);
    CHECK(rec->status == 200);
    CHECK(json::parse(rec->body)["ranking"].size() == 5);

    server.stop();
    t.join();
}
