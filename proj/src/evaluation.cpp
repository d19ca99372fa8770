#include "forensic/evaluation.hpp"

#include "forensic/baselines.hpp"
#include "forensic/error.hpp"
#include "forensic/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

namespace forensic {

void BenefitCurve::add(double cost, double benefit)
{
    if (!breakpoints.empty() && breakpoints.back().first == cost)
        breakpoints.back().second = benefit;
    else
        breakpoints.emplace_back(cost, benefit);
}

double BenefitCurve::at(double cost) const
{
    // Last breakpoint with x <= cost.
    auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), cost,
                               [](double c, const auto& bp) { return c < bp.first; });
    if (it == breakpoints.begin()) return 0.0;
    return std::prev(it)->second;
}

double aucbe(const BenefitCurve& curve, double limit)
{
    if (!(limit > 0.0)) throw PreconditionError("AUCBE limit must be positive");
    const auto& bp = curve.breakpoints;
    double area = 0.0;
    for (std::size_t i = 0; i < bp.size(); ++i) {
        const double x0 = bp[i].first;
        if (x0 >= limit) break;
        const double x1 = (i + 1 < bp.size()) ? std::min(bp[i + 1].first, limit) : limit;
        area += bp[i].second * (x1 - x0);
    }
    return area;
}

std::string_view to_string(TerminalReason r)
{
    return r == TerminalReason::budget ? "budget" : "exhausted";
}

BenefitCurve EpisodeRecord::curve() const
{
    BenefitCurve c;
    for (const auto& s : steps) c.add(s.cumulative_cost, s.cumulative_benefit);
    return c;
}

EpisodeRecord simulate_episode(const Incident& incident, const Corpus& corpus, const Policy& policy,
                               const Budget& budget, std::uint64_t seed)
{
    if (incident.used.empty()) throw PreconditionError("incident " + incident.id + " uses no techniques");
    if (corpus.find(incident.id))
        throw PreconditionError("leakage: held-out incident " + incident.id + " is present in the prior corpus");

    const Catalog& catalog = corpus.catalog();
    EpisodeRecord rec;
    rec.incident_id = incident.id;
    rec.seed = seed;

    Rng rng(seed);
    const auto used = incident.used.to_indices();
    rec.initial_technique = used[uniform_index(rng, used.size())];

    InvestigationState state;
    state.yes.insert(rec.initial_technique);
    Budget spent{budget.limit, 0.0};
    DecisionContext ctx;
    ctx.last_found = rec.initial_technique;
    double benefit = 0.0;

    while (true) {
        if (available_actions(state, catalog).empty()) {
            rec.reason = TerminalReason::exhausted;
            break;
        }
        ctx.seed = derive_seed(seed, state.step + 1);
        const auto choice = policy.recommend(state, corpus, spent, ctx);
        if (!choice) {
            rec.reason = TerminalReason::exhausted;
            break;
        }
        if (state.yes.contains(*choice) || state.no.contains(*choice))
            throw std::logic_error("policy " + std::string(policy.name()) + " recommended an investigated technique");
        const Technique& t = catalog[*choice];
        if (!spent.fits(t.cost)) {
            rec.reason = TerminalReason::budget;
            break;
        }
        const bool was_used = incident.used.contains(*choice);
        spent.spent += t.cost;
        benefit += step_reward(t, was_used);
        state = apply_outcome(state, {*choice, was_used});
        if (was_used) ctx.last_found = *choice;
        rec.steps.push_back({*choice, was_used, spent.spent, benefit});
    }
    return rec;
}

double quantile(std::vector<double> values, double q)
{
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const double h = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::size_t default_jobs()
{
    const auto n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : n;
}

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn)
{
    jobs = std::max<std::size_t>(1, std::min(jobs, n));
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    {
        std::vector<std::jthread> workers;
        workers.reserve(jobs);
        for (std::size_t w = 0; w < jobs; ++w) {
            workers.emplace_back([&] {
                for (std::size_t i = next++; i < n && !failed; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        std::lock_guard lock(error_mutex);
                        if (!error) error = std::current_exception();
                        failed = true;
                    }
                }
            });
        }
    }
    if (error) std::rethrow_exception(error);
}

EvaluationReport run_leave_one_out(const Corpus& corpus, const Policy& policy, const EvaluationOptions& options)
{
    if (corpus.size() < 2) throw PreconditionError("leave-one-out needs at least 2 incidents");
    if (options.budget.limit && !(*options.budget.limit > 0.0)) throw PreconditionError("budget must be positive");
    const std::size_t repeats = std::max<std::size_t>(1, options.repeats);

    EvaluationReport report;
    report.policy = std::string(policy.name());
    report.budget_limit = options.budget.limit;
    report.aucbe_limit = options.budget.limit ? *options.budget.limit : corpus.catalog().total_cost();

    const std::size_t n = corpus.size();
    report.episodes.resize(n * repeats);
    parallel_for(n * repeats, options.jobs, [&](std::size_t job) {
        const std::size_t i = job / repeats;
        const Corpus prior = corpus.without(i);
        if (prior.size() + 1 != corpus.size()) throw std::logic_error("leave-one-out split lost incidents");
        const std::uint64_t seed = derive_seed(options.master_seed, job);
        report.episodes[job] = simulate_episode(corpus[i], prior, policy, Budget{options.budget.limit, 0.0}, seed);
    });

    std::vector<BenefitCurve> curves;
    curves.reserve(report.episodes.size());
    double max_cost = 0.0;
    for (const auto& ep : report.episodes) {
        curves.push_back(ep.curve());
        report.episode_aucbe.push_back(aucbe(curves.back(), report.aucbe_limit));
        max_cost = std::max(max_cost, ep.total_cost());
    }
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t r = 0; r < repeats; ++r) s += report.episode_aucbe[i * repeats + r];
        report.incident_aucbe.push_back(s / static_cast<double>(repeats));
    }
    double total = 0.0;
    for (double v : report.incident_aucbe) total += v;
    report.mean_aucbe = total / static_cast<double>(n);

    const double grid_end = options.budget.limit ? std::floor(*options.budget.limit) : std::ceil(max_cost);
    for (double x = 0.0; x <= grid_end; x += 1.0) {
        std::vector<double> column;
        column.reserve(curves.size());
        double sum = 0.0;
        for (const auto& c : curves) {
            column.push_back(c.at(x));
            sum += column.back();
        }
        report.grid.push_back(x);
        report.mean_curve.push_back(sum / static_cast<double>(curves.size()));
        report.q25_curve.push_back(quantile(column, 0.25));
        report.q75_curve.push_back(quantile(std::move(column), 0.75));
    }
    return report;
}

std::unique_ptr<Policy> make_policy(std::string_view name, const KnnParams& knn, const MctsConfig& mcts)
{
    if (name == "mcts") return std::make_unique<MctsPolicy>(knn, mcts);
    if (name == "static") return std::make_unique<StaticPolicy>();
    if (name == "disclose-approx") return std::make_unique<DiscloseApproxPolicy>();
    if (name == "greedy") return std::make_unique<GreedyPolicy>(knn);
    throw PreconditionError("unknown policy '" + std::string(name) + "' (expected mcts, static, disclose-approx, greedy)");
}

std::string display_label(std::string_view policy)
{
    if (policy == "mcts") return "MCTS";
    if (policy == "static") return "Static";
    if (policy == "disclose-approx") return "DISCLOSE_approx";
    if (policy == "greedy") return "Greedy";
    return std::string(policy);
}

void write_report_csv(std::ostream& out, const std::vector<const EvaluationReport*>& reports)
{
    std::size_t rows = 0;
    out << "Budget";
    for (const auto* r : reports) {
        const std::string label = display_label(r->policy);
        const std::string g = format_number(r->budget_limit ? *r->budget_limit : std::round(r->aucbe_limit));
        const std::string benefit_key = r->budget_limit ? g : std::string("withoutBudget");
        out << ',' << label << "_Benefit_" << benefit_key << ',' << label << '_' << g << "_0.25," << label << '_' << g
            << "_0.75";
        rows = std::max(rows, r->grid.size());
    }
    out << '\n';
    for (std::size_t row = 0; row < rows; ++row) {
        out << row;
        for (const auto* r : reports) {
            // Curves are flat past their last grid point.
            const std::size_t i = std::min(row, r->grid.size() - 1);
            out << ',' << format_number(r->mean_curve[i]) << ',' << format_number(r->q25_curve[i]) << ','
                << format_number(r->q75_curve[i]);
        }
        out << '\n';
    }
}

void write_episode_log(std::ostream& out, const EvaluationReport& report, const Catalog& catalog)
{
    for (std::size_t e = 0; e < report.episodes.size(); ++e) {
        const auto& ep = report.episodes[e];
        nlohmann::ordered_json j;
        j["incident_id"] = ep.incident_id;
        j["seed"] = ep.seed;
        j["policy"] = report.policy;
        j["initial_technique"] = catalog[ep.initial_technique].id;
        auto steps = nlohmann::ordered_json::array();
        for (const auto& s : ep.steps) {
            nlohmann::ordered_json js;
            js["technique"] = catalog[s.technique].id;
            js["used"] = s.used;
            js["cumulative_cost"] = s.cumulative_cost;
            js["cumulative_benefit"] = s.cumulative_benefit;
            steps.push_back(std::move(js));
        }
        j["steps"] = std::move(steps);
        j["terminal_reason"] = to_string(ep.reason);
        j["aucbe"] = report.episode_aucbe[e];
        out << j.dump() << '\n';
    }
}

} // namespace forensic
