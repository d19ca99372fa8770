#include "forensic/cli.hpp"

#include "forensic/error.hpp"
#include "forensic/http_api.hpp"
#include "forensic/tuner.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <charconv>
#include <cmath>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace forensic {

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::optional<double> parse_budget(const std::string& text, const std::string& flag)
{
    if (text == "none") return std::nullopt;
    double v = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (text.empty() || ec != std::errc{} || ptr != last || !std::isfinite(v) || v <= 0.0)
        throw UsageError(flag + " must be a positive number or 'none', got '" + text + "'");
    return v;
}

// "lo:hi:step"
std::array<double, 3> parse_range(const std::string& text, const std::string& flag)
{
    std::array<double, 3> out{};
    std::string_view rest = text;
    for (std::size_t i = 0; i < 3; ++i) {
        const auto colon = rest.find(':');
        if ((i < 2) == (colon == std::string_view::npos))
            throw UsageError(flag + " must look like lo:hi:step, got '" + text + "'");
        const auto part = rest.substr(0, colon);
        auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), out[i]);
        if (part.empty() || ec != std::errc{} || ptr != part.data() + part.size())
            throw UsageError(flag + " must look like lo:hi:step, got '" + text + "'");
        if (colon != std::string_view::npos) rest.remove_prefix(colon + 1);
    }
    return out;
}

std::vector<std::string> split_ids(const std::string& text)
{
    std::vector<std::string> out;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');)
        if (!item.empty()) out.push_back(item);
    return out;
}

std::ofstream open_output(const std::string& path)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) throw UsageError("cannot open '" + path + "' for writing");
    return f;
}

struct CorpusFlags {
    std::string catalog;
    std::string incidents;

    void add(CLI::App* app)
    {
        app->add_option("--catalog", catalog, "Technique catalog CSV (id,name,benefit,cost)")->required();
        app->add_option("--incidents", incidents, "Incident CSV (incident_id,technique_ids)")->required();
    }
    Corpus load() const { return load_corpus_files(catalog, incidents); }
};

struct KnnFlags {
    double beta1 = 1.0;
    double beta2 = 0.0;
    std::string preset;

    void add(CLI::App* app)
    {
        app->add_option("--beta1", beta1, "k-NN intercept (k = floor(beta1 + beta2 * t))");
        app->add_option("--beta2", beta2, "k-NN slope per investigation step");
        app->add_option("--knn-preset", preset, "Use the reference beta values for v6.3, v10.1 or v11.3 at this budget");
    }
    KnnParams resolve(std::optional<double> budget) const
    {
        if (!preset.empty()) {
            auto p = reference_knn_params(preset, budget);
            if (!p) throw UsageError("--knn-preset has no reference values for '" + preset + "' at this budget");
            return *p;
        }
        KnnParams p{beta1, beta2};
        try {
            p.validate();
        } catch (const PreconditionError& e) {
            throw UsageError(std::string("--beta1/--beta2: ") + e.what());
        }
        return p;
    }
};

struct MctsFlags {
    MctsConfig config;

    void add(CLI::App* app)
    {
        app->add_option("--iterations", config.iterations, "Search iterations per decision");
        app->add_option("--depth", config.depth, "Rollout depth");
        app->add_option("--exploration", config.exploration, "UCT exploration constant");
        app->add_option("--prune-width", config.prune_width, "Candidate actions kept per state");
        app->add_option("--gamma", config.gamma, "Discount factor");
    }
    MctsConfig resolve() const
    {
        try {
            config.validate();
        } catch (const PreconditionError& e) {
            throw UsageError(std::string("MCTS flags: ") + e.what());
        }
        return config;
    }
};

void print_stats(std::ostream& out, const Corpus& corpus, bool per_technique)
{
    const CorpusStats st = corpus_stats(corpus);
    const Catalog& catalog = corpus.catalog();
    out << "techniques: " << catalog.size() << '\n'
        << "incidents: " << st.incident_count << '\n'
        << "techniques per incident: mean " << format_number(st.mean_techniques) << ", min " << st.min_techniques
        << ", max " << st.max_techniques << '\n'
        << "total cost: " << format_number(catalog.total_cost()) << '\n'
        << "total benefit: " << format_number(catalog.total_benefit()) << '\n';
    if (!per_technique) return;
    out << "\nid,name,benefit,cost,incidents\n";
    for (std::size_t i = 0; i < catalog.size(); ++i) {
        const auto& t = catalog[i];
        out << t.id << ',' << t.name << ',' << format_number(t.benefit) << ',' << format_number(t.cost) << ','
            << st.frequency[i] << '\n';
    }
}

std::atomic<ApiServer*> g_server{nullptr};

extern "C" void stop_server(int)
{
    if (auto* s = g_server.load()) s->stop();
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Forensic investigation planner"};
    app.require_subcommand(1);
    std::uint64_t seed = 0;
    std::size_t jobs = default_jobs();
    std::function<int()> action;

    // validate
    CorpusFlags validate_corpus;
    auto* validate = app.add_subcommand("validate", "Check a catalog and incident corpus and print summary stats");
    validate_corpus.add(validate);
    validate->callback([&] {
        action = [&] {
            print_stats(out, validate_corpus.load(), false);
            out << "ok\n";
            return kExitOk;
        };
    });

    // stats
    CorpusFlags stats_corpus;
    auto* stats = app.add_subcommand("stats", "Print corpus statistics including per-technique frequency");
    stats_corpus.add(stats);
    stats->callback([&] {
        action = [&] {
            print_stats(out, stats_corpus.load(), true);
            return kExitOk;
        };
    });

    // ingest-stix
    std::string stix_catalog, stix_bundle, stix_out;
    auto* ingest = app.add_subcommand("ingest-stix", "Build an incident CSV from a STIX 2 ATT&CK bundle");
    ingest->add_option("--catalog", stix_catalog, "Technique catalog CSV")->required();
    ingest->add_option("--bundle", stix_bundle, "STIX 2 bundle JSON")->required();
    ingest->add_option("--out", stix_out, "Incident CSV to write")->required();
    ingest->callback([&] {
        action = [&] {
            std::ifstream cf(stix_catalog);
            if (!cf) throw ParseError(stix_catalog, 0, "cannot open file");
            const Catalog catalog = parse_catalog(cf, stix_catalog);
            std::ifstream bf(stix_bundle, std::ios::binary);
            if (!bf) throw ParseError(stix_bundle, 0, "cannot open file");
            const StixIngestResult r = ingest_stix(bf, catalog);
            for (const auto& w : r.warnings) err << "warning: " << w << '\n';
            auto f = open_output(stix_out);
            write_incidents(f, r.corpus);
            out << "references: " << r.references_seen << "\nincidents written: " << r.corpus.size() << '\n';
            return kExitOk;
        };
    });

    // recommend
    CorpusFlags rec_corpus;
    KnnFlags rec_knn;
    MctsFlags rec_mcts;
    std::string rec_yes, rec_no, rec_budget = "none";
    double rec_spent = 0.0;
    std::size_t rec_step = 0;
    auto* recommend = app.add_subcommand("recommend", "Rank the next techniques for one investigation state (JSON)");
    rec_corpus.add(recommend);
    rec_knn.add(recommend);
    rec_mcts.add(recommend);
    recommend->add_option("--yes", rec_yes, "Comma-separated technique ids known to be used");
    recommend->add_option("--no", rec_no, "Comma-separated technique ids known not to be used");
    recommend->add_option("--budget", rec_budget, "Total budget, or 'none'");
    recommend->add_option("--spent", rec_spent, "Budget already spent");
    recommend->add_option("--step", rec_step, "Investigation step t for the k schedule");
    recommend->add_option("--seed", seed, "Random seed");
    recommend->callback([&] {
        action = [&] {
            const auto limit = parse_budget(rec_budget, "--budget");
            if (!(rec_spent >= 0.0)) throw UsageError("--spent must be non-negative");
            const Corpus corpus = rec_corpus.load();
            const Catalog& catalog = corpus.catalog();
            InvestigationState state;
            state.yes = catalog.parse_ids(split_ids(rec_yes));
            state.no = catalog.parse_ids(split_ids(rec_no));
            state.step = rec_step;
            if (state.yes.intersects(state.no)) throw UsageError("--yes and --no must be disjoint");
            MctsConfig cfg = rec_mcts.resolve();
            cfg.seed = seed;
            const Recommendation r =
                rank_actions(state, Budget{limit, rec_spent}, corpus, rec_knn.resolve(limit), cfg);
            out << recommendation_payload("", r, catalog) << '\n';
            return kExitOk;
        };
    });

    // evaluate
    CorpusFlags eval_corpus;
    KnnFlags eval_knn;
    MctsFlags eval_mcts;
    std::vector<std::string> eval_policies;
    std::string eval_budget, eval_out, eval_episodes;
    std::size_t eval_repeats = 1;
    auto* evaluate = app.add_subcommand("evaluate", "Leave-one-out evaluation of one or more policies");
    eval_corpus.add(evaluate);
    eval_knn.add(evaluate);
    eval_mcts.add(evaluate);
    evaluate->add_option("--policy", eval_policies, "mcts, static, disclose-approx or greedy (repeatable)")
        ->required();
    evaluate->add_option("--budget", eval_budget, "Budget G, or 'none'")->required();
    evaluate->add_option("--out", eval_out, "Report CSV to write")->required();
    evaluate->add_option("--episodes-out", eval_episodes, "Per-episode JSONL log to write");
    evaluate->add_option("--repeats", eval_repeats, "Initial-technique draws per incident");
    evaluate->add_option("--seed", seed, "Master seed");
    evaluate->add_option("--jobs", jobs, "Parallel episodes");
    evaluate->callback([&] {
        action = [&] {
            const auto limit = parse_budget(eval_budget, "--budget");
            if (eval_repeats == 0) throw UsageError("--repeats must be at least 1");
            if (jobs == 0) throw UsageError("--jobs must be at least 1");
            const Corpus corpus = eval_corpus.load();
            const KnnParams knn = eval_knn.resolve(limit);
            const MctsConfig mcts = eval_mcts.resolve();
            std::vector<EvaluationReport> reports;
            for (const auto& name : eval_policies) {
                std::unique_ptr<Policy> policy;
                try {
                    policy = make_policy(name, knn, mcts);
                } catch (const PreconditionError& e) {
                    throw UsageError(std::string("--policy: ") + e.what());
                }
                EvaluationOptions opt{Budget{limit, 0.0}, seed, jobs, eval_repeats};
                reports.push_back(run_leave_one_out(corpus, *policy, opt));
                out << display_label(name) << " mean AUCBE: " << format_number(reports.back().mean_aucbe) << '\n';
            }
            std::vector<const EvaluationReport*> ptrs;
            for (const auto& r : reports) ptrs.push_back(&r);
            auto f = open_output(eval_out);
            write_report_csv(f, ptrs);
            if (!eval_episodes.empty()) {
                auto ef = open_output(eval_episodes);
                for (const auto& r : reports) write_episode_log(ef, r, corpus.catalog());
            }
            return kExitOk;
        };
    });

    // tune-knn
    CorpusFlags tk_corpus;
    std::string tk_budget, tk_out, tk_b1 = "1:130:1", tk_b2 = "0:6:0.1";
    auto* tune_knn = app.add_subcommand("tune-knn", "Grid search over beta1 and beta2 with the greedy policy");
    tk_corpus.add(tune_knn);
    tune_knn->add_option("--budget", tk_budget, "Budget G, or 'none'")->required();
    tune_knn->add_option("--out", tk_out, "Heatmap CSV to write")->required();
    tune_knn->add_option("--beta1-range", tk_b1, "lo:hi:step");
    tune_knn->add_option("--beta2-range", tk_b2, "lo:hi:step");
    tune_knn->add_option("--seed", seed, "Master seed");
    tune_knn->add_option("--jobs", jobs, "Parallel grid cells");
    tune_knn->callback([&] {
        action = [&] {
            const auto limit = parse_budget(tk_budget, "--budget");
            const auto r1 = parse_range(tk_b1, "--beta1-range");
            const auto r2 = parse_range(tk_b2, "--beta2-range");
            GridSpec grid;
            try {
                grid = GridSpec::ranges(r1[0], r1[1], r1[2], r2[0], r2[1], r2[2]);
            } catch (const PreconditionError& e) {
                throw UsageError(std::string("--beta1-range/--beta2-range: ") + e.what());
            }
            if (jobs == 0) throw UsageError("--jobs must be at least 1");
            const Corpus corpus = tk_corpus.load();
            const KnnGridResult r = grid_search_knn(corpus, Budget{limit, 0.0}, grid, seed, jobs);
            auto f = open_output(tk_out);
            write_heatmap_csv(f, r);
            out << "best beta1: " << format_number(r.best_beta1) << "\nbest beta2: " << format_number(r.best_beta2)
                << "\nmean AUCBE: " << format_number(r.best_score) << '\n';
            return kExitOk;
        };
    });

    // tune-mcts
    CorpusFlags tm_corpus;
    KnnFlags tm_knn;
    MctsSearchSpace tm_space;
    std::string tm_budget, tm_out;
    std::size_t tm_trials = 20;
    auto* tune_mcts = app.add_subcommand("tune-mcts", "Random search over the MCTS constants");
    tm_corpus.add(tune_mcts);
    tm_knn.add(tune_mcts);
    tune_mcts->add_option("--budget", tm_budget, "Budget G, or 'none'")->required();
    tune_mcts->add_option("--out", tm_out, "Trial CSV to write")->required();
    tune_mcts->add_option("--trials", tm_trials, "Number of random configurations");
    tune_mcts->add_option("--min-iterations", tm_space.iterations.min);
    tune_mcts->add_option("--max-iterations", tm_space.iterations.max);
    tune_mcts->add_option("--min-depth", tm_space.depth.min);
    tune_mcts->add_option("--max-depth", tm_space.depth.max);
    tune_mcts->add_option("--min-exploration", tm_space.exploration.min);
    tune_mcts->add_option("--max-exploration", tm_space.exploration.max);
    tune_mcts->add_option("--min-prune-width", tm_space.prune_width.min);
    tune_mcts->add_option("--max-prune-width", tm_space.prune_width.max);
    tune_mcts->add_option("--min-gamma", tm_space.gamma.min);
    tune_mcts->add_option("--max-gamma", tm_space.gamma.max);
    tune_mcts->add_option("--seed", seed, "Master seed");
    tune_mcts->add_option("--jobs", jobs, "Parallel episodes");
    tune_mcts->callback([&] {
        action = [&] {
            const auto limit = parse_budget(tm_budget, "--budget");
            try {
                tm_space.validate();
            } catch (const PreconditionError& e) {
                throw UsageError(std::string("search space flags: ") + e.what());
            }
            if (tm_trials == 0) throw UsageError("--trials must be at least 1");
            if (jobs == 0) throw UsageError("--jobs must be at least 1");
            const Corpus corpus = tm_corpus.load();
            const MctsTuneResult r =
                random_search_mcts(corpus, Budget{limit, 0.0}, tm_knn.resolve(limit), tm_trials, tm_space, seed, jobs);
            auto f = open_output(tm_out);
            f << "trial,iterations,depth,exploration,prune_width,gamma,mean_aucbe\n";
            for (std::size_t i = 0; i < r.trials.size(); ++i) {
                const auto& c = r.trials[i].config;
                f << i << ',' << c.iterations << ',' << c.depth << ',' << format_number(c.exploration) << ','
                  << c.prune_width << ',' << format_number(c.gamma) << ',' << format_number(r.trials[i].score) << '\n';
            }
            out << "best: iterations " << r.best.iterations << ", depth " << r.best.depth << ", exploration "
                << format_number(r.best.exploration) << ", prune width " << r.best.prune_width << ", gamma "
                << format_number(r.best.gamma) << "\nmean AUCBE: " << format_number(r.best_score) << '\n';
            return kExitOk;
        };
    });

    // serve
    CorpusFlags serve_corpus;
    KnnFlags serve_knn;
    MctsFlags serve_mcts;
    std::string serve_addr = "127.0.0.1:8080", serve_data_dir, serve_static;
    auto* serve = app.add_subcommand("serve", "Run the HTTP session service");
    serve_corpus.add(serve);
    serve_knn.add(serve);
    serve_mcts.add(serve);
    serve->add_option("--addr", serve_addr, "host:port to listen on");
    serve->add_option("--data-dir", serve_data_dir, "Session log directory (default $FORENSIC_PLANNER_DATA_DIR)");
    serve->add_option("--static-dir", serve_static, "Directory of static UI assets to serve at /");
    serve->callback([&] {
        action = [&] {
            const auto colon = serve_addr.rfind(':');
            int port = -1;
            if (colon != std::string::npos) {
                const auto p = std::string_view(serve_addr).substr(colon + 1);
                auto [ptr, ec] = std::from_chars(p.data(), p.data() + p.size(), port);
                if (ec != std::errc{} || ptr != p.data() + p.size()) port = -1;
            }
            if (port < 0 || port > 65535) throw UsageError("--addr must look like host:port, got '" + serve_addr + "'");
            const std::string host = serve_addr.substr(0, colon);
            std::string data_dir = serve_data_dir;
            if (data_dir.empty()) {
                if (const char* env = std::getenv("FORENSIC_PLANNER_DATA_DIR")) data_dir = env;
            }
            if (data_dir.empty()) throw UsageError("--data-dir is required when FORENSIC_PLANNER_DATA_DIR is unset");

            SessionServiceOptions opt;
            opt.data_dir = data_dir;
            opt.knn = serve_knn.resolve(std::nullopt);
            opt.mcts = serve_mcts.resolve();
            SessionService service(std::make_shared<const Corpus>(serve_corpus.load()), opt);
            for (const auto& w : service.load_warnings()) err << "warning: " << w << '\n';
            ApiServer server(service, serve_static);
            const int bound = server.bind(host, port);
            out << "listening on http://" << host << ':' << bound << " (" << service.list().size()
                << " sessions loaded)" << std::endl;
            g_server = &server;
            std::signal(SIGINT, stop_server);
            std::signal(SIGTERM, stop_server);
            server.listen();
            g_server = nullptr;
            return kExitOk;
        };
    });

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUserError;
    }
    return action ? action() : kExitUserError;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    try {
        return dispatch(args, out, err);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUserError;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUserError;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUserError;
    } catch (const PreconditionError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUserError;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kExitInternalError;
    }
}

} // namespace forensic
