// Acceptance suite: one PASS/FAIL line per criterion. `acceptance N` runs
// criterion N only; with no arguments every criterion runs.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "driftcast/json_io.hpp"
#include "driftcast/metrics.hpp"
#include "driftcast/orchestrator.hpp"
#include "driftcast/synthgen.hpp"
#include "driftcast/tsfeatures.hpp"

using namespace driftcast;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

Verdict metric_exactness() {
    const double m = metrics::mase(std::vector<double>{1, 3, 2, 4}, std::vector<double>{2, 2, 2, 2});
    const double s1 = metrics::retraining_savings(6, 3), s2 = metrics::retraining_savings(6, 2);
    const double imp = metrics::mase_improvement(1.5, 1.4);
    const bool ok = std::abs(m - 0.6) <= 1e-12 && std::abs(s1 - 50.0) <= 0.01 && std::abs(s2 - 66.67) <= 0.01 &&
                    std::abs(imp - 100.0 / 15.0) <= 1e-9;
    return {ok, fmt("mase=%.15g savings(6,3)=%.4f savings(6,2)=%.4f improvement(1.5,1.4)=%.4f", m, s1, s2, imp)};
}

Verdict feature_oracles() {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> g(0, 1);
    double worst_acf = 0, worst_pacf = 0;
    for (int s = 0; s < 100; ++s) {
        std::vector<double> x(500);
        double e = 0;
        for (auto& v : x) v = e = 0.6 * e + g(rng);
        const std::size_t L = 10;
        double mean = 0;
        for (double v : x) mean += v;
        mean /= 500.0;
        std::vector<double> r(L + 1);
        for (std::size_t k = 0; k <= L; ++k) {
            double num = 0;
            for (std::size_t t = k; t < x.size(); ++t) num += (x[t] - mean) * (x[t - k] - mean);
            r[k] = num;
        }
        for (std::size_t k = L + 1; k-- > 0;) r[k] /= r[0];
        const auto acf = features::acf(x, L);
        const auto pacf = features::pacf(x, L);
        for (std::size_t k = 1; k <= L; ++k) {
            worst_acf = std::max(worst_acf, std::abs(acf[k - 1] - r[k]));
            Eigen::MatrixXd R(k, k);
            Eigen::VectorXd rhs(k);
            for (std::size_t i = 0; i < k; ++i) {
                rhs(static_cast<Eigen::Index>(i)) = r[i + 1];
                for (std::size_t j = 0; j < k; ++j) R(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r[i > j ? i - j : j - i];
            }
            const Eigen::VectorXd phi = R.fullPivLu().solve(rhs);
            worst_pacf = std::max(worst_pacf, std::abs(pacf[k - 1] - phi(static_cast<Eigen::Index>(k - 1))));
        }
    }
    return {worst_acf <= 1e-12 && worst_pacf <= 1e-8, fmt("max |acf err|=%.3g max |pacf err|=%.3g", worst_acf, worst_pacf)};
}

double enumerate_p(const std::vector<double>& d) {
    const std::size_t m = d.size();
    std::vector<double> rank(m);
    for (std::size_t i = 0; i < m; ++i) {
        double less = 0, eq = 0;
        for (double v : d) less += std::abs(v) < std::abs(d[i]), eq += std::abs(v) == std::abs(d[i]);
        rank[i] = less + (eq + 1) / 2;
    }
    double total = 0, wp = 0;
    for (std::size_t i = 0; i < m; ++i) total += rank[i], wp += d[i] > 0 ? rank[i] : 0;
    const double w = std::min(wp, total - wp);
    std::size_t hits = 0;
    for (std::uint64_t mask = 0; mask < (1ULL << m); ++mask) {
        double s = 0;
        for (std::size_t i = 0; i < m; ++i) s += (mask >> i & 1) ? rank[i] : 0;
        hits += std::min(s, total - s) <= w + 1e-9;
    }
    return static_cast<double>(hits) / static_cast<double>(1ULL << m);
}

Verdict wilcoxon_correctness() {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> size(1, 10), val(-5, 5);
    double worst = 0;
    for (int c = 0; c < 200;) {
        std::vector<double> d(static_cast<std::size_t>(size(rng)));
        for (auto& v : d) {
            do v = val(rng);
            while (v == 0);
        }
        const auto r = metrics::wilcoxon_signed_rank(d, std::vector<double>(d.size(), 0.0));
        worst = std::max(worst, std::abs(r.p_value - enumerate_p(d)));
        ++c;
    }
    const std::vector<double> crit{-1, 2, -3, -4, 5, 6, 7, 8, 9, 10};
    const auto r = metrics::wilcoxon_signed_rank(crit, std::vector<double>(10, 0.0));
    return {worst <= 1e-12 && r.statistic == 8 && r.p_value <= 0.05,
            fmt("max |p - enumeration|=%.3g, m=10 W=%.0f p=%.4f", worst, r.statistic, r.p_value)};
}

Verdict detector_delay() {
    int hits = 0;
    std::string delays;
    for (int s = 0; s < 10; ++s) {
        synth::GeneratorConfig g;
        g.seed = 300 + static_cast<std::uint64_t>(s);
        auto ts = synth::inject_drift(synth::gen_seasonal_ar(g), {synth::DriftKind::Sudden, 3000, 5.0, g.noise_sigma});
        const auto c = compact(ts);
        fedd::FeddDetector det{fedd::DetectorConfig{}};
        long delay = -1;
        for (std::size_t k = 0; k < c.size(); ++k) {
            const auto o = det.observe(c.values[k]);
            if (const auto* d = std::get_if<fedd::Drift>(&o); d && d->at_sample >= 3000) {
                delay = static_cast<long>(d->at_sample - 3000);
                break;
            }
        }
        hits += delay >= 0 && delay <= 672;
        delays += (delays.empty() ? "" : ",") + std::to_string(delay);
    }
    return {hits >= 9, fmt("%d/10 within 672 samples; delays=[%s]", hits, delays.c_str())};
}

Verdict detector_false_alarms() {
    std::size_t worst = 0;
    std::string counts;
    for (int s = 0; s < 10; ++s) {
        synth::GeneratorConfig g;
        g.length_hours = 10000;
        g.seed = 400 + static_cast<std::uint64_t>(s);
        const auto c = compact(synth::gen_seasonal_ar(g));
        fedd::FeddDetector det{fedd::DetectorConfig{}};
        for (double v : c.values) det.observe(v);
        worst = std::max<std::size_t>(worst, det.drift_count());
        counts += (counts.empty() ? "" : ",") + std::to_string(det.drift_count());
    }
    return {worst <= 2, fmt("events per run=[%s]", counts.c_str())};
}

// Sixteen series: 0..11 carry one 5-sigma drift mid test stream (even sudden,
// odd gradual over a week), 12..15 are stationary.
struct FixtureSeries {
    std::string id;
    TimeSeries ts;
    std::optional<std::size_t> drift_at;
};

std::vector<FixtureSeries> end_to_end_fixture() {
    std::vector<FixtureSeries> out;
    for (int s = 0; s < 16; ++s) {
        synth::GeneratorConfig g;
        g.seed = 100 + static_cast<std::uint64_t>(s);
        FixtureSeries f{fmt("series-%02d", s), synth::gen_seasonal_ar(g), std::nullopt};
        if (s < 12) {
            synth::DriftSpec d;
            d.kind = s % 2 ? synth::DriftKind::Gradual : synth::DriftKind::Sudden;
            d.at_hour = 3972 + 24 * static_cast<std::size_t>(s % 6);
            d.magnitude = 5.0;
            d.noise_sigma = g.noise_sigma;
            d.ramp_hours = 168;
            f.ts = synth::inject_drift(f.ts, d);
            f.drift_at = d.at_hour;
        }
        out.push_back(std::move(f));
    }
    return out;
}

struct FixtureRun {
    sim::SimulationTrace periodic, drift, stat;
    std::vector<std::optional<std::size_t>> max_reads;
};

FixtureRun run_fixture(const FixtureSeries& f) {
    sim::SimulationConfig cfg;
    cfg.series_id = f.id;
    sim::ModelCache cache;
    FixtureRun r;
    sim::SimulationHooks h{&cache, &r.max_reads};
    r.periodic = sim::run_simulation(f.ts, sim::Periodic{4}, cfg, h);
    r.drift = sim::run_simulation(f.ts, sim::DriftBased{}, cfg, h);
    r.stat = sim::run_simulation(f.ts, sim::Static{}, cfg, h);
    return r;
}

Verdict end_to_end() {
    int savings_ok = 0, within = 0;
    std::string rows;
    for (const auto& f : end_to_end_fixture()) {
        const auto r = run_fixture(f);
        const auto rep = metrics::compare(r.periodic.mase_curve(), r.drift.mase_curve(), r.periodic.retrain_count, r.drift.retrain_count);
        const bool sav = rep.retraining_savings_pct && *rep.retraining_savings_pct >= 50.0;
        const bool near = std::abs(rep.mase_improvement_pct) <= 10.0;
        savings_ok += sav;
        within += near;
        rows += fmt("\n    %s retrains %zu/%zu savings=%.1f%% improvement=%+.1fpp", f.id.c_str(), r.periodic.retrain_count,
                    r.drift.retrain_count, rep.retraining_savings_pct.value_or(NAN), rep.mase_improvement_pct);
    }
    return {savings_ok == 16 && within >= 12,
            fmt("savings>=50%% on %d/16, |improvement|<=10pp on %d/16", savings_ok, within) + rows};
}

Verdict recurring_drift() {
    synth::GeneratorConfig g;
    g.seed = 500;
    synth::DriftSpec d;
    d.kind = synth::DriftKind::Recurring;
    d.at_hour = 4032;
    d.magnitude = 5.0;
    d.noise_sigma = g.noise_sigma;
    d.duration_hours = 336;
    const auto ts = synth::inject_drift(synth::gen_seasonal_ar(g), d);
    sim::SimulationConfig cfg;
    cfg.series_id = "recurring";
    sim::ModelCache cache;
    sim::SimulationHooks h{&cache};
    const auto per = sim::run_simulation(ts, sim::Periodic{4}, cfg, h);
    const auto dr = sim::run_simulation(ts, sim::DriftBased{}, cfg, h);
    sim::Hybrid hy;
    hy.assignment["recurring"] = sim::Periodic{4};
    const auto hyb = sim::run_simulation(ts, hy, cfg, h);
    const double mp = per.mean_mase().value_or(NAN), md = dr.mean_mase().value_or(NAN);
    const bool identical = hyb.mase_curve() == per.mase_curve();
    return {mp <= md && identical, fmt("periodic mean MASE=%.4f drift-based=%.4f (drifts %zu, retrains %zu), hybrid identical=%s", mp,
                                       md, dr.drift_count, dr.retrain_count, identical ? "yes" : "no")};
}

Verdict static_degradation() {
    int degraded = 0, drifted = 0;
    std::string rows;
    for (const auto& f : end_to_end_fixture()) {
        if (!f.drift_at) continue;
        ++drifted;
        sim::SimulationConfig cfg;
        cfg.series_id = f.id;
        const auto st = sim::run_simulation(f.ts, sim::Static{}, cfg);
        double pre = 0, post = 0;
        int np = 0, nq = 0;
        for (const auto& b : st.batches) {
            if (!b.mase) continue;
            if (b.start_slot + cfg.batch_hours <= *f.drift_at) pre += *b.mase, ++np;
            else if (b.start_slot >= *f.drift_at) post += *b.mase, ++nq;
        }
        pre /= np;
        post /= nq;
        degraded += post > pre;
        rows += fmt(" %.2f->%.2f", pre, post);
    }
    return {degraded >= 10, fmt("post-drift mean above pre-drift mean on %d/%d; pre->post:", degraded, drifted) + rows};
}

Verdict determinism_and_leakage() {
    std::size_t violations = 0, forecasts = 0;
    bool identical = true;
    for (const auto& f : end_to_end_fixture()) {
        const auto a = run_fixture(f);
        const auto b = run_fixture(f);
        for (const auto* pair : {&a, &b}) {
            const auto n = pair->stat.batches.size();
            for (std::size_t i = 0; i < pair->max_reads.size(); ++i) {
                const auto origin = pair->stat.batches[i % n].start_slot;
                ++forecasts;
                if (!pair->max_reads[i] || *pair->max_reads[i] >= origin) ++violations;
            }
        }
        for (const auto& [x, y] : {std::pair{&a.periodic, &b.periodic}, {&a.drift, &b.drift}, {&a.stat, &b.stat}}) {
            identical = identical && json_io::to_json(*x).dump() == json_io::to_json(*y).dump();
        }
    }
    return {identical && violations == 0,
            fmt("repeat traces byte-identical=%s, %zu of %zu forecasts read at or past their origin", identical ? "yes" : "no",
                violations, forecasts)};
}

Verdict storage_bound() {
    synth::GeneratorConfig g;
    g.length_hours = 10000;
    g.seed = 600;
    const auto c = compact(synth::gen_seasonal_ar(g));
    fedd::FeddDetector det{fedd::DetectorConfig{}};
    std::size_t at_1344 = 0;
    for (std::size_t k = 0; k < c.size(); ++k) {
        det.observe(c.values[k]);
        if (k + 1 == 1344) at_1344 = det.serialize().size();
    }
    const std::size_t at_end = det.serialize().size();
    return {at_1344 == at_end && at_end > 0, fmt("%zu bytes after 1344 observations, %zu after 10000", at_1344, at_end)};
}

const std::vector<std::pair<const char*, std::function<Verdict()>>> kCriteria{
    {"metric exactness", metric_exactness},
    {"feature oracle equivalence", feature_oracles},
    {"wilcoxon correctness", wilcoxon_correctness},
    {"detector delay", detector_delay},
    {"detector false alarms", detector_false_alarms},
    {"end-to-end policy comparison", end_to_end},
    {"recurring drift", recurring_drift},
    {"static degradation after drift", static_degradation},
    {"determinism and anti-leakage", determinism_and_leakage},
    {"detector storage bound", storage_bound},
};

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::size_t> which;
    if (argc > 1) {
        const long n = std::strtol(argv[1], nullptr, 10);
        if (n < 1 || n > static_cast<long>(kCriteria.size())) {
            std::fprintf(stderr, "usage: acceptance [1-%zu]\n", kCriteria.size());
            return 2;
        }
        which.push_back(static_cast<std::size_t>(n));
    } else {
        for (std::size_t i = 1; i <= kCriteria.size(); ++i) which.push_back(i);
    }
    int failures = 0;
    for (auto n : which) {
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = kCriteria[n - 1].second();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("criterion %2zu %s [%s] (%.1fs) %s\n", n, v.pass ? "PASS" : "FAIL", kCriteria[n - 1].first, secs, v.detail.c_str());
        std::fflush(stdout);
        failures += !v.pass;
    }
    return failures == 0 ? 0 : 1;
}
