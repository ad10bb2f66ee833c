// spa: headless runs, comparisons, sweeps, parser evaluation, validation and
// the live server.

#include "spa/metrics.hpp"
#include "spa/server.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace spa;

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

Scenario scenario_or_throw(const std::string& name, std::uint64_t seed) {
    auto s = build_scenario(name, seed);
    if (!s) throw UsageError("unknown scenario '" + name + "' (expected one of: antipodal, evacuation, museum, tradeshow)");
    return std::move(*s);
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << text;
}

std::string cell(std::optional<double> v, int digits) {
    if (!v) return "unsolved";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f", digits, *v);
    return buf;
}

std::string paired_table(const Comparison& c, bool timings) {
    std::ostringstream out;
    char line[256];
    std::snprintf(line, sizeof line, "%-12s %8s %8s\n", "", "NL-I", "no NL-I");
    out << line;
    auto row = [&](const char* label, const std::string& a, const std::string& b) {
        std::snprintf(line, sizeof line, "%-12s %8s %8s\n", label, a.c_str(), b.c_str());
        out << line;
    };
    const auto& a = c.with_nli;
    const auto& b = c.without_nli;
    row("agents", std::to_string(a.agents), std::to_string(b.agents));
    row("desires", std::to_string(a.desires), std::to_string(b.desires));
    row("solution_s", cell(a.solution_time, 1), cell(b.solution_time, 1));
    row("replans", std::to_string(a.replans), std::to_string(b.replans));
    row("statements", std::to_string(a.statements), std::to_string(b.statements));
    row("questions", std::to_string(a.questions), std::to_string(b.questions));
    row("answered", std::to_string(a.questions_answered), std::to_string(b.questions_answered));
    row("overheard", std::to_string(a.facts_overheard), std::to_string(b.facts_overheard));
    row("parser_fail", std::to_string(a.parser_failures), std::to_string(b.parser_failures));
    if (timings) {
        row("plan_s", cell(a.planning_time, 6), cell(b.planning_time, 6));
        row("replan_s", cell(a.replan_time, 9), cell(b.replan_time, 9));
    }
    if (a.solution_time && b.solution_time && *a.solution_time > 0) {
        std::snprintf(line, sizeof line, "without/with solution time: %.3f\n", *b.solution_time / *a.solution_time);
        out << line;
    }
    return out.str();
}

std::vector<std::size_t> parse_points(const std::string& text) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            const long long v = std::stoll(item, &used);
            if (used != item.size() || v <= 0) throw std::invalid_argument(item);
            out.push_back(std::size_t(v));
        } catch (const std::exception&) {
            throw UsageError("bad point '" + item + "' in --points");
        }
    }
    if (out.size() < 3) throw UsageError("--points needs at least three values");
    return out;
}

Server* g_server = nullptr;

void on_signal(int) {
    if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sense-Plan-Ask multi-agent simulator"};
    app.require_subcommand(1);

    std::uint64_t seed = 0;
    std::uint64_t max_ticks = 0;
    std::string out_path;
    bool timings = false;
    bool csv = false;

    // run
    std::string scene;
    bool no_nli = false;
    bool require_solved = false;
    std::string trace_path;
    auto* run = app.add_subcommand("run", "Run one scenario and print its report");
    run->add_option("scenario", scene, "antipodal | evacuation | museum | tradeshow")->required();
    run->add_flag("--no-nli", no_nli, "Disable natural-language interaction");
    run->add_option("--seed", seed, "Random seed")->capture_default_str();
    run->add_option("--max-ticks", max_ticks, "Tick limit (0: scenario default)");
    run->add_option("--out", out_path, "Write the report here instead of stdout");
    run->add_option("--trace", trace_path, "Write planner trace records (JSON lines)");
    run->add_flag("--timings", timings, "Include wall-clock planning times");
    run->add_flag("--csv", csv, "CSV instead of JSON");
    run->add_flag("--require-solved", require_solved, "Exit 1 when the run does not solve");

    // compare
    auto* cmp = app.add_subcommand("compare", "Run a scenario with and without NL-I");
    cmp->add_option("scenario", scene)->required();
    cmp->add_option("--seed", seed)->capture_default_str();
    cmp->add_option("--max-ticks", max_ticks);
    cmp->add_option("--out", out_path, "Also write the paired JSON report here");
    cmp->add_flag("--timings", timings);
    cmp->add_flag("--csv", csv, "Print CSV rows instead of the table");
    cmp->add_flag("--require-solved", require_solved);

    // sweep
    std::string axis = "agents";
    std::string points;
    int reps = 5;
    auto* sweep = app.add_subcommand("sweep", "Planning time against agent count or domain size");
    sweep->add_option("--axis", axis)->check(CLI::IsMember({"agents", "domain"}))->capture_default_str();
    sweep->add_option("--points", points, "Comma-separated x values (default 5,10,20,40 or 25,50,100,200)");
    sweep->add_option("--seed", seed)->capture_default_str();
    sweep->add_option("--reps", reps, "Repetitions per point; the fastest is kept")->capture_default_str();
    sweep->add_option("--out", out_path, "Write the JSON table here");

    // nlu-eval
    std::string domain_arg, lexicon_arg;
    bool verbose = false;
    auto* nlu = app.add_subcommand("nlu-eval", "Train on half of the generated corpus, score the other half");
    nlu->add_option("domain", domain_arg, "Scenario name or domain spec file")->required();
    nlu->add_option("lexicon", lexicon_arg, "Lexicon file (default: the domain's own)");
    nlu->add_option("--seed", seed)->capture_default_str();
    nlu->add_flag("--verbose", verbose, "List misparsed sentences");

    // validate
    std::string spec_path;
    auto* val = app.add_subcommand("validate", "Check a domain spec and its lexicon");
    val->add_option("spec", spec_path)->required();
    val->add_option("--lexicon", lexicon_arg, "Lexicon file (default: the domain spec's \"lexicon\" entry)");

    // serve
    ServerOptions sopt;
    auto* serve = app.add_subcommand("serve", "Serve a live scenario over WebSocket");
    serve->add_option("scenario", scene)->required();
    serve->add_option("--port", sopt.port)->capture_default_str();
    serve->add_option("--host", sopt.host)->capture_default_str();
    serve->add_option("--seed", seed)->capture_default_str();
    serve->add_option("--speed", sopt.speed, "Simulated seconds per wall second")->capture_default_str();
    serve->add_option("--snapshot-hz", sopt.snapshot_hz)->capture_default_str();
    serve->add_option("--avatars", sopt.avatar_slots, "Avatar slots")->capture_default_str();
    serve->add_flag("--no-nli", no_nli);

    // export
    std::string out_dir = data_dir();
    auto* exp = app.add_subcommand("export", "Write scenario domain specs as JSON");
    exp->add_option("scenario", scene, "Scenario name or 'all'")->required();
    exp->add_option("--seed", seed)->capture_default_str();
    exp->add_option("--out-dir", out_dir)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*run) {
            const Scenario sc = scenario_or_throw(scene, seed);
            std::vector<json> trace;
            const auto report = run_benchmark(sc, {!no_nli, max_ticks, !trace_path.empty()},
                                              trace_path.empty() ? nullptr : &trace);
            if (!trace_path.empty()) {
                std::string lines;
                for (const auto& r : trace) lines += r.dump() + "\n";
                write_text(trace_path, lines);
            }
            write_text(out_path, csv ? csv_header() + "\n" + csv_row(report, timings) + "\n"
                                     : report.to_json(timings).dump(2) + "\n");
            if (require_solved && !report.solved) {
                std::cerr << "spa: " << scene << " did not solve within the tick limit\n";
                return kFailure;
            }
            return kOk;
        }
        if (*cmp) {
            const Scenario sc = scenario_or_throw(scene, seed);
            const Comparison c = compare(sc, max_ticks);
            if (csv) std::cout << csv_header() << "\n" << csv_row(c.with_nli, timings) << "\n"
                               << csv_row(c.without_nli, timings) << "\n";
            else std::cout << scene << " (seed " << seed << ")\n" << paired_table(c, timings);
            if (!out_path.empty()) {
                json j = c.to_json(timings);
                j["scene"] = scene;
                j["seed"] = seed;
                write_text(out_path, j.dump(2) + "\n");
            }
            if (require_solved && !(c.with_nli.solved && c.without_nli.solved)) {
                std::cerr << "spa: a condition did not solve within the tick limit\n";
                return kFailure;
            }
            return kOk;
        }
        if (*sweep) {
            const SweepAxis ax = axis == "agents" ? SweepAxis::Agents : SweepAxis::Domain;
            const auto xs = points.empty() ? (ax == SweepAxis::Agents ? std::vector<std::size_t>{5, 10, 20, 40}
                                                                       : std::vector<std::size_t>{25, 50, 100, 200})
                                           : parse_points(points);
            const auto table = run_scaling_sweep(ax, xs, seed, reps);
            std::vector<double> x, y;
            json rows = json::array();
            std::printf("%8s %18s %18s\n", axis == "agents" ? "agents" : "atoms", "initial_plan_s", "mean_replan_s");
            for (const auto& p : table) {
                std::printf("%8zu %18.6f %18.9f\n", p.x, p.initial_plan_time, p.mean_replan_time);
                x.push_back(double(p.x));
                y.push_back(p.initial_plan_time);
                rows.push_back({{"x", p.x},
                                {"initial_plan_time", p.initial_plan_time},
                                {"initial_plan_mean", p.initial_plan_mean},
                                {"mean_replan_time", p.mean_replan_time}});
            }
            const double r2 = linear_fit_r2(x, y);
            std::printf("linear fit R^2: %.4f\n", r2);
            for (std::size_t i = 1; i < table.size(); ++i)
                std::printf("ratio %zu/%zu: %.2f\n", table[i].x, table[i - 1].x,
                            table[i - 1].initial_plan_time > 0 ? table[i].initial_plan_time / table[i - 1].initial_plan_time
                                                               : 0.0);
            if (!out_path.empty())
                write_text(out_path, json{{"axis", axis}, {"seed", seed}, {"points", rows}, {"r2", r2}}.dump(2) + "\n");
            return kOk;
        }
        if (*nlu) {
            std::shared_ptr<const DomainSpec> spec;
            Lexicon lexicon;
            if (auto sc = build_scenario(domain_arg, seed)) {
                spec = sc->spec;
                lexicon = *sc->lexicon;
            } else if (fs::exists(domain_arg)) {
                spec = std::make_shared<DomainSpec>(load_domain_spec(domain_arg));
                if (lexicon_arg.empty() && !spec->lexicon_path.empty())
                    lexicon_arg = (fs::path(domain_arg).parent_path() / spec->lexicon_path).string();
                if (lexicon_arg.empty()) throw UsageError("no lexicon given and the domain spec names none");
            } else {
                throw UsageError("unknown scenario or missing file '" + domain_arg + "'");
            }
            if (!lexicon_arg.empty()) lexicon = load_lexicon(lexicon_arg);
            TrainingOptions opt;
            for (const auto& a : spec->agents) opt.exempt_entities.push_back(spec->entity(a.entity).id);
            lexicon.validate(*spec, opt.exempt_entities);
            const auto corpus = generate_training_data(lexicon, *spec, seed, opt);
            const auto [train, held_out] = split_corpus(corpus, seed);
            const Parser parser(lexicon, train);
            const auto ev = evaluate(parser, held_out);
            std::printf("corpus %zu, held out %zu\nintent accuracy %.4f\nentity exact match %.4f\n", corpus.size(),
                        held_out.size(), ev.intent_accuracy(), ev.nle_accuracy());
            if (verbose)
                for (const auto& f : ev.failures) std::printf("  %s\n", f.c_str());
            return kOk;
        }
        if (*val) {
            DomainSpec spec;
            try {
                spec = load_domain_spec(spec_path);
            } catch (const SpecError& e) {
                std::cerr << "spa: " << spec_path;
                if (e.line()) std::cerr << ":" << e.line() << ":" << e.column();
                std::cerr << ": " << e.what() << "\n";
                return kFailure;
            }
            if (lexicon_arg.empty() && !spec.lexicon_path.empty())
                lexicon_arg = (fs::path(spec_path).parent_path() / spec.lexicon_path).string();
            std::size_t agents = spec.agents.size();
            if (!lexicon_arg.empty()) {
                std::vector<std::string> exempt;
                for (const auto& a : spec.agents) exempt.push_back(spec.entity(a.entity).id);
                try {
                    load_lexicon(lexicon_arg).validate(spec, exempt);
                } catch (const std::exception& e) {
                    std::cerr << "spa: " << lexicon_arg << ": " << e.what() << "\n";
                    return kFailure;
                }
            }
            std::printf("%s: ok (%zu entities, %zu predicates, %zu actions, %zu agents%s)\n", spec_path.c_str(),
                        spec.entities.size(), spec.predicates.size(), spec.actions.size(), agents,
                        lexicon_arg.empty() ? ", no lexicon" : ", lexicon ok");
            return kOk;
        }
        if (*serve) {
            sopt.nli = !no_nli;
            const Scenario sc = with_avatars(scenario_or_throw(scene, seed), sopt.avatar_slots);
            Server server(sc, sopt);
            g_server = &server;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::cout << "serving " << scene << " on ws://" << sopt.host << ":" << server.port() << std::endl;
            server.run();
            g_server = nullptr;
            return kOk;
        }
        if (*exp) {
            std::vector<std::string> names = scene == "all" ? scenario_names() : std::vector<std::string>{scene};
            fs::create_directories(out_dir);
            for (const auto& name : names) {
                const Scenario sc = scenario_or_throw(name, seed);
                DomainSpec spec = *sc.spec;
                std::vector<std::string> exempt;
                for (const auto& a : spec.agents) exempt.push_back(spec.entity(a.entity).id);
                // Keep a hand-written lexicon that already covers the domain spec; a
                // base lexicon the builder extends gets a complete sibling.
                bool covered = false;
                const fs::path own = fs::path(out_dir) / (name + ".lexicon.json");
                if (fs::exists(own)) {
                    try {
                        load_lexicon(own.string()).validate(spec, exempt);
                        covered = true;
                    } catch (const std::exception&) {
                    }
                }
                spec.lexicon_path = fs::exists(own) && !covered ? name + ".full.lexicon.json" : name + ".lexicon.json";
                if (!covered) {
                    const fs::path lex = fs::path(out_dir) / spec.lexicon_path;
                    write_text(lex.string(), sc.lexicon->to_json().dump(2) + "\n");
                }
                const fs::path file = fs::path(out_dir) / (name + ".json");
                write_text(file.string(), serialize_domain_spec(spec) + "\n");
                std::cout << "wrote " << file.string() << "\n";
            }
            return kOk;
        }
    } catch (const UsageError& e) {
        std::cerr << "spa: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "spa: " << e.what() << "\n";
        return kFailure;
    }
    return kUsage;
}
