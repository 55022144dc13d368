#pragma once

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "driftcast/config.hpp"
#include "driftcast/fedd.hpp"
#include "driftcast/json_io.hpp"
#include "driftcast/metrics.hpp"
#include "driftcast/orchestrator.hpp"
#include "driftcast/series.hpp"
#include "driftcast/synthgen.hpp"

namespace driftcast::cli {

namespace fs = std::filesystem;
using json_io::json;

enum ExitCode : int { kOk = 0, kInputError = 2, kConfigError = 3, kSimulationError = 4, kMismatch = 5 };

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MismatchError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// static | periodic:N | drift
inline sim::BasePolicy parse_base_policy(std::string_view text) {
    if (text == "static") return sim::Static{};
    if (text == "drift") return sim::DriftBased{};
    if (text.starts_with("periodic:")) {
        const auto n = driftcast::detail::parse_number<std::size_t>(text.substr(9));
        if (!n || *n < 1) throw ConfigError(ConfigErrc::BadValue, "periodic period must be a positive integer");
        return sim::Periodic{*n};
    }
    throw ConfigError(ConfigErrc::BadValue, "unknown policy '" + std::string(text) + "'");
}

// Hybrid map file: `series_id = policy` lines; `*` sets the fallback.
inline sim::Hybrid load_hybrid_map(std::istream& in) {
    sim::Hybrid h;
    for (const auto& [id, policy] : config::parse_key_values(in)) {
        if (id == "*") h.fallback = parse_base_policy(policy);
        else h.assignment[id] = parse_base_policy(policy);
    }
    return h;
}

inline std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw InputError("cannot read '" + p.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw InputError("cannot write '" + p.string() + "'");
    out << content;
}

inline TimeSeries load_series(const std::string& bytes) {
    std::istringstream in(bytes);
    auto raw = parse_csv(in);
    if (raw.points.empty()) throw InputError("series has no data rows");
    return aggregate_hourly(raw);
}

inline std::string slug(std::string_view policy_name) {
    std::string s(policy_name);
    std::replace(s.begin(), s.end(), ':', '-');
    return s;
}

inline std::string manifest_line(const json_io::RunManifest& m) { return "# manifest=" + json_io::to_json(m).dump() + "\n"; }

inline std::string format_optional(const std::optional<double>& v) {
    if (!v) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", *v);
    return buf;
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads. The first exception is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
    jobs = std::max<std::size_t>(1, std::min(jobs, n));
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
        worker();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

struct GlobalOptions {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> config_path;
    std::vector<std::string> overrides;
    std::string out_dir = ".";
    std::size_t jobs = 1;
};

class App {
public:
    App(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

    int run(int argc, const char* const* argv) {
        CLI::App app{"Drift-aware capacity forecasting toolkit", "driftcast"};
        app.require_subcommand(1);
        app.add_option("--seed", g_.seed, "Seed for every random draw");
        app.add_option("--config", g_.config_path, "key = value configuration file");
        app.add_option("--set", g_.overrides, "Override one configuration key (key=value)");
        app.add_option("--out-dir", g_.out_dir, "Directory for output files");
        app.add_option("--jobs", g_.jobs, "Worker threads for multi-series runs")->check(CLI::PositiveNumber);

        auto* synth = app.add_subcommand("synth", "Generate a synthetic series");
        synth->add_option("--id", synth_id_, "Output name (file <id>.csv)");
        synth->add_option("--count", synth_count_, "Number of series; seeds seed..seed+count-1")->check(CLI::PositiveNumber);

        auto* detect = app.add_subcommand("detect", "Run the drift detector over series files");
        detect->add_option("series", inputs_, "Input CSV files")->required();

        auto* simulate = app.add_subcommand("simulate", "Replay series under retraining policies");
        simulate->add_option("series", inputs_, "Input CSV files")->required();
        simulate->add_option("--policy", policies_, "static | periodic:N | drift | hybrid:<map-file>")->required();

        auto* compare = app.add_subcommand("compare", "Compare a baseline trace with a drift-based trace");
        compare->add_option("baseline", compare_a_, "Baseline trace JSON")->required();
        compare->add_option("candidate", compare_b_, "Drift-based trace JSON")->required();

        try {
            app.parse(argc, argv);
        } catch (const CLI::CallForHelp&) {
            out_ << app.help();
            return kOk;
        } catch (const CLI::ParseError& e) {
            err_ << "error: " << e.what() << '\n';
            return kConfigError;
        }

        try {
            cfg_ = resolve_config();
            fs::create_directories(g_.out_dir);
            if (*synth) return cmd_synth();
            if (*detect) return cmd_detect();
            if (*simulate) return cmd_simulate();
            return cmd_compare();
        } catch (const ConfigError& e) {
            err_ << "config error: " << e.what() << '\n';
            return kConfigError;
        } catch (const ParseError& e) {
            err_ << "input error: " << e.what() << '\n';
            return kInputError;
        } catch (const InputError& e) {
            err_ << "input error: " << e.what() << '\n';
            return kInputError;
        } catch (const MismatchError& e) {
            err_ << "mismatch: " << e.what() << '\n';
            return kMismatch;
        } catch (const fs::filesystem_error& e) {
            err_ << "input error: " << e.what() << '\n';
            return kInputError;
        } catch (const std::exception& e) {
            err_ << "simulation error: " << e.what() << '\n';
            return kSimulationError;
        }
    }

private:
    config::ToolConfig resolve_config() {
        config::ToolConfig c;
        if (g_.config_path) c = config::load_file(*g_.config_path);
        for (const auto& kv : g_.overrides) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw ConfigError(ConfigErrc::Syntax, "--set expects key=value, got '" + kv + "'");
            config::apply(c, driftcast::detail::trim(std::string_view(kv).substr(0, eq)),
                          driftcast::detail::trim(std::string_view(kv).substr(eq + 1)));
        }
        if (g_.seed) c.seed = *g_.seed;
        config::validate(c);
        return c;
    }

    json_io::RunManifest manifest(std::string command) const {
        json_io::RunManifest m;
        m.command = std::move(command);
        m.config_path = g_.config_path;
        m.parameters = config::resolved(cfg_);
        m.seed = cfg_.seed;
        return m;
    }

    fs::path out_path(const std::string& name) const { return fs::path(g_.out_dir) / name; }

    int cmd_synth() {
        const std::string base = synth_id_.empty() ? "synthetic" : synth_id_;
        for (std::size_t i = 0; i < synth_count_; ++i) {
            auto gen = cfg_.generator;
            gen.seed = cfg_.seed + i;
            auto ts = synth::gen_seasonal_ar(gen);
            try {
                if (cfg_.drift) {
                    auto d = *cfg_.drift;
                    d.noise_sigma = gen.noise_sigma;
                    ts = synth::inject_drift(ts, d);
                }
                if (cfg_.missing) ts = synth::inject_missing(ts, *cfg_.missing, gen.seed);
            } catch (const std::invalid_argument& e) {
                throw ConfigError(ConfigErrc::BadValue, e.what());
            }
            const std::string id = synth_count_ == 1 ? base : base + "-" + std::to_string(i);
            auto m = manifest("synth");
            m.parameters["synth.id"] = id;
            m.parameters["synth.series_seed"] = std::to_string(gen.seed);
            std::ostringstream csv;
            csv << manifest_line(m);
            write_csv(csv, ts);
            write_file(out_path(id + ".csv"), csv.str());
            out_ << "wrote " << out_path(id + ".csv").string() << '\n';
        }
        return kOk;
    }

    struct Input {
        std::string id;
        std::string hash;
        TimeSeries series;
    };

    std::vector<Input> load_inputs() const {
        std::vector<Input> in;
        for (const auto& p : inputs_) {
            const auto bytes = read_file(p);
            in.push_back({fs::path(p).stem().string(), json_io::hex64(json_io::fnv1a(bytes)), load_series(bytes)});
        }
        return in;
    }

    int cmd_detect() {
        const auto inputs = load_inputs();
        std::vector<json> reports(inputs.size());
        parallel_for(inputs.size(), g_.jobs, [&](std::size_t i) {
            const auto c = compact(inputs[i].series);
            fedd::FeddDetector det(cfg_.sim.detector);
            json events = json::array();
            for (std::size_t k = 0; k < c.size(); ++k) {
                const auto outcome = det.observe(c.values[k]);
                if (const auto* d = std::get_if<fedd::Drift>(&outcome)) {
                    const std::size_t slot = c.origin_index[k];
                    events.push_back({{"sample_position", d->at_sample},
                                      {"slot_index", slot},
                                      {"timestamp", format_timestamp(inputs[i].series.timestamp(slot))},
                                      {"distance", d->distance},
                                      {"z", d->z},
                                      {"threshold", d->threshold}});
                }
            }
            reports[i] = {{"series_id", inputs[i].id},
                          {"slots", inputs[i].series.size()},
                          {"present_samples", c.size()},
                          {"events", std::move(events)},
                          {"detector", json_io::to_json(det)}};
        });
        for (std::size_t i = 0; i < inputs.size(); ++i) {
            auto m = manifest("detect");
            m.input_hashes[inputs[i].id] = inputs[i].hash;
            reports[i]["manifest"] = json_io::to_json(m);
            const auto path = out_path(inputs[i].id + ".detect.json");
            write_file(path, reports[i].dump(2) + "\n");
            out_ << inputs[i].id << ": " << reports[i]["events"].size() << " drift events -> " << path.string() << '\n';
        }
        return kOk;
    }

    int cmd_simulate() {
        struct Named {
            std::string flag;
            sim::RetrainPolicy policy;
        };
        std::vector<Named> policies;
        std::map<std::string, std::string> policy_inputs;
        for (const auto& p : policies_) {
            if (p.starts_with("hybrid:")) {
                const auto path = p.substr(7);
                const auto bytes = read_file(path);
                std::istringstream in(bytes);
                policies.push_back({p, load_hybrid_map(in)});
                policy_inputs["hybrid_map:" + fs::path(path).filename().string()] = json_io::hex64(json_io::fnv1a(bytes));
            } else {
                const auto base = parse_base_policy(p);
                policies.push_back({p, std::visit([](const auto& v) -> sim::RetrainPolicy { return v; }, base)});
            }
        }
        const auto inputs = load_inputs();

        std::vector<std::vector<sim::SimulationTrace>> traces(inputs.size());
        parallel_for(inputs.size(), g_.jobs, [&](std::size_t i) {
            auto scfg = cfg_.simulation();
            scfg.series_id = inputs[i].id;
            sim::ModelCache cache;
            sim::SimulationHooks hooks;
            hooks.cache = &cache;
            for (const auto& p : policies) traces[i].push_back(sim::run_simulation(inputs[i].series, p.policy, scfg, hooks));
        });

        std::string policy_list;
        for (const auto& p : policies) policy_list += (policy_list.empty() ? "" : ",") + p.flag;
        for (std::size_t i = 0; i < inputs.size(); ++i) {
            auto m = manifest("simulate");
            m.parameters["policies"] = policy_list;
            m.input_hashes = policy_inputs;
            m.input_hashes[inputs[i].id] = inputs[i].hash;
            const auto mline = manifest_line(m);

            std::ostringstream curves;
            curves << mline << "batch";
            for (const auto& p : policies) curves << ',' << slug(p.flag);
            curves << '\n';
            for (std::size_t b = 0; b < traces[i].front().batches.size(); ++b) {
                curves << b + 1;
                for (const auto& t : traces[i]) curves << ',' << format_optional(t.batches[b].mase);
                curves << '\n';
            }
            write_file(out_path(inputs[i].id + ".curves.csv"), curves.str());

            for (std::size_t k = 0; k < policies.size(); ++k) {
                const auto& t = traces[i][k];
                const std::string stem = inputs[i].id + "." + slug(policies[k].flag);
                auto j = json_io::to_json(t);
                j["manifest"] = json_io::to_json(m);
                write_file(out_path(stem + ".trace.json"), j.dump(2) + "\n");

                std::ostringstream batches;
                batches << mline << "batch,start,mase,retrained,drifts\n";
                for (const auto& b : t.batches) {
                    batches << b.batch_index << ',' << format_timestamp(inputs[i].series.timestamp(b.start_slot)) << ','
                            << format_optional(b.mase) << ',' << (b.retrained ? 1 : 0) << ',' << b.drift_events.size() << '\n';
                }
                write_file(out_path(stem + ".batches.csv"), batches.str());
                const auto mean = t.mean_mase();
                out_ << stem << ": retrains=" << t.retrain_count << " drifts=" << t.drift_count
                     << " mean_mase=" << (mean ? format_optional(mean) : "undefined") << '\n';
            }
        }
        return kOk;
    }

    static sim::SimulationTrace load_trace(const std::string& path) {
        const auto bytes = read_file(path);
        try {
            return json_io::trace_from_json(json::parse(bytes));
        } catch (const std::exception& e) {
            throw InputError("'" + path + "' is not a valid trace: " + e.what());
        }
    }

    int cmd_compare() {
        const auto a = load_trace(compare_a_);
        const auto b = load_trace(compare_b_);
        if (a.series_id != b.series_id) throw MismatchError("traces belong to different series");
        if (a.batches.size() != b.batches.size()) throw MismatchError("traces cover different numbers of batches");
        for (std::size_t i = 0; i < a.batches.size(); ++i) {
            if (a.batches[i].start_slot != b.batches[i].start_slot) throw MismatchError("traces cover different batch ranges");
        }
        const auto ma = a.mase_curve(), mb = b.mase_curve();
        metrics::ComparisonReport rep;
        try {
            rep = metrics::compare(ma, mb, a.retrain_count, b.retrain_count);
        } catch (const MetricError& e) {
            throw MismatchError(e.what());
        }

        auto m = manifest("compare");
        m.input_hashes["baseline"] = json_io::hex64(json_io::fnv1a(read_file(compare_a_)));
        m.input_hashes["candidate"] = json_io::hex64(json_io::fnv1a(read_file(compare_b_)));
        auto j = json_io::to_json(rep);
        j["series_id"] = a.series_id;
        j["baseline_policy"] = a.policy;
        j["candidate_policy"] = b.policy;
        j["manifest"] = json_io::to_json(m);
        const std::string stem = a.series_id + "." + slug(a.policy) + ".vs." + slug(b.policy);
        write_file(out_path(stem + ".compare.json"), j.dump(2) + "\n");

        const std::string row = a.series_id + ',' + format_optional(rep.mase_improvement_pct) + ',' +
                                format_optional(rep.retraining_savings_pct) + '\n';
        write_file(out_path(stem + ".compare.csv"),
                   manifest_line(m) + "series,mase_improvement_pct,retraining_savings_pct\n" + row);
        out_ << "series,mase_improvement_pct,retraining_savings_pct,wilcoxon_p\n"
             << row.substr(0, row.size() - 1) << ',' << (rep.wilcoxon ? format_optional(rep.wilcoxon->p_value) : "degenerate")
             << '\n';
        return kOk;
    }

    std::ostream& out_;
    std::ostream& err_;
    GlobalOptions g_;
    config::ToolConfig cfg_;
    std::string synth_id_;
    std::size_t synth_count_ = 1;
    std::vector<std::string> inputs_;
    std::vector<std::string> policies_;
    std::string compare_a_, compare_b_;
};

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    return App(out, err).run(argc, argv);
}

}  // namespace driftcast::cli
