// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "commands.hpp"
#include "run_config.hpp"

#include "usdl/dataio.hpp"
#include "usdl/distgen.hpp"
#include "usdl/metrics.hpp"
#include "usdl/multipath.hpp"
#include "usdl/nethead.hpp"

#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace usdl;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok && pass) detail = what;
        pass = pass && ok;
    }
};

const std::vector<double> kPanel{9.0, 8.5, 9.0, 8.0, 9.0, 8.5, 9.0};

std::string fmt(double v, int prec = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    return buf;
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("usdl_acceptance_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------

Outcome criterion1() {
    Outcome o;
    const double fused = fuse_rule(kPanel, FusionRule::diving(), 3.8);
    o.require(std::abs(fused - 100.70) <= 1e-9, "fuse_rule gave " + fmt(fused, 17));

    const auto scale = make_scale(0, 20, 21);
    MultiHeadParams m;
    for (std::size_t bin : {18u, 17u, 18u, 16u, 18u, 17u, 18u}) {
        auto h = HeadParams::zeros({4, 8, 4, 21});
        h.layer3.bias[bin] = 60.0;
        m.heads.push_back(h);
    }
    Rng rng(1);
    const auto f = oracle::random_features(rng, 10, 4);
    for (auto pooling : {Pooling::ScoreLevel, Pooling::FeatureLevel}) {
        const double end_to_end = infer_musdl(f, m, pooling, scale, FusionRule::diving(), 3.8);
        o.require(std::abs(end_to_end - 100.70) <= 1e-9, "infer_musdl gave " + fmt(end_to_end, 17));
    }
    o.detail = o.pass ? "fused 100.70 directly and through delta heads" : o.detail;
    return o;
}

Outcome criterion2() {
    Outcome o;
    const auto s1 = segment_indices(SegmentStrategy::Seg10S1, 103);
    const auto s2 = segment_indices(SegmentStrategy::Seg10S2, 103);
    o.require(s1 == std::vector<int>{0, 10, 20, 30, 40, 50, 60, 70, 80, 87}, "10-seg-s1 differs");
    o.require(s2 == std::vector<int>{0, 9, 19, 29, 38, 48, 58, 67, 77, 87}, "10-seg-s2 differs");
    if (o.pass) o.detail = "both 103-frame schedules match";
    return o;
}

Outcome criterion3() {
    Outcome o;
    Rng rng(3);
    int checked = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const double lo = rng.uniform(-100, 100);
        const double hi = lo + rng.uniform(0.5, 200);
        const auto scale = make_scale(lo, hi, 2 + rng.index(200));
        const double label = rng.uniform(lo, hi);
        const double width = (hi - lo) * rng.uniform(0.002, 0.5);
        const DistributionKind kind = static_cast<DistributionKind>(trial % 3);
        const DistributionSpec spec{kind, width};
        const auto d = target_distribution(scale, label, spec);
        double total = 0;
        bool nonneg = true;
        for (double p : d.probs()) {
            total += p;
            nonneg = nonneg && p >= 0.0;
        }
        o.require(std::abs(total - 1.0) <= 1e-9, "sum " + fmt(total, 17) + " at trial " + std::to_string(trial));
        o.require(nonneg, "negative mass at trial " + std::to_string(trial));
        if (kind != DistributionKind::ChiSquare) {
            const std::size_t got = argmax_bin(d.probs());
            const std::size_t want = scale.nearest_bin(label);
            const double gap =
                std::abs(std::abs(scale.center(got) - label) - std::abs(scale.center(want) - label));
            o.require(got == want || gap <= 1e-9 * (hi - lo),
                      "argmax " + std::to_string(got) + " vs nearest " + std::to_string(want));
        }
        ++checked;
    }
    if (o.pass) o.detail = std::to_string(checked) + " triples over gaussian, triangle, chi_square";
    return o;
}

Outcome criterion4() {
    Outcome o;
    Rng rng(4);
    const auto scale = make_scale(0, 5, 6);
    int instances = 0;
    double worst = 0;
    auto record = [&](const oracle::GradCheck& c, const std::string& what) {
        worst = std::max(worst, c.worst_excess);
        o.require(c.ok(), what + ": " + c.first_failure);
        ++instances;
    };
    for (int trial = 0; trial < 20; ++trial) {
        for (auto pooling : {Pooling::ScoreLevel, Pooling::FeatureLevel}) {
            const auto f = oracle::random_features(rng, 2, 4);
            {
                auto p = oracle::random_head(rng, {4, 5, 3, 6});
                const ScoreDistribution t(scale, oracle::random_probs(rng, 6, trial % 2 == 0));
                const auto g = backward_usdl(t, f, p, pooling);
                record(oracle::finite_difference_check(p.arrays(), std::as_const(g.grad).arrays(),
                                                       [&] { return loss_usdl(t, f, p, pooling); }),
                       "USDL KL");
            }
            {
                auto p = oracle::random_head(rng, {4, 5, 3, 1});
                const double label = rng.uniform(-3, 3);
                const auto g = backward_regression(label, f, p, pooling);
                record(oracle::finite_difference_check(p.arrays(), std::as_const(g.grad).arrays(),
                                                       [&] { return loss_regression(label, f, p, pooling); }),
                       "regression L2");
            }
            {
                MultiHeadParams m;
                for (int k = 0; k < 3; ++k) m.heads.push_back(oracle::random_head(rng, {4, 5, 3, 6}));
                std::vector<ScoreDistribution> t;
                for (int k = 0; k < 3; ++k) t.emplace_back(scale, oracle::random_probs(rng, 6));
                const auto g = multi_backward(t, f, m, pooling);
                record(oracle::finite_difference_check(m.arrays(), std::as_const(g.grad).arrays(),
                                                       [&] { return multi_loss(t, f, m, pooling); }),
                       "MUSDL sum");
            }
            {
                MultiHeadParams m;
                m.heads.push_back(oracle::random_head(rng, {4, 5, 3, 6}));
                m.dd_head = oracle::random_head(rng, {4, 5, 3, 1});
                const std::vector<ScoreDistribution> t{ScoreDistribution(scale, oracle::random_probs(rng, 6))};
                const double dd = rng.uniform(1.5, 4);
                const auto g = multi_backward(t, f, m, pooling, dd, 1.0);
                record(oracle::finite_difference_check(m.arrays(), std::as_const(g.grad).arrays(),
                                                       [&] { return multi_total_loss(t, f, m, pooling, dd, 1.0); }),
                       "DD branch");
            }
        }
    }
    if (o.pass) {
        o.detail = std::to_string(instances) + " instances (20 per loss and pooling), worst error/tolerance " +
                   fmt(worst, 3);
    }
    return o;
}

Outcome criterion5() {
    Outcome o;
    Rng rng(5);
    int tie_cases = 0, free_cases = 0;
    while (tie_cases < 500) {
        const std::size_t n = 3 + rng.index(48);
        std::vector<double> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = static_cast<double>(rng.index(8));
            b[i] = static_cast<double>(rng.index(8));
        }
        const auto ra = oracle::counting_ranks(a), rb = oracle::counting_ranks(b);
        if (std::all_of(ra.begin(), ra.end(), [&](double r) { return r == ra[0]; }) ||
            std::all_of(rb.begin(), rb.end(), [&](double r) { return r == rb[0]; }))
            continue;
        const double got = spearman(a, b), want = oracle::brute_spearman(a, b);
        o.require(std::abs(got - want) <= 1e-10, "tied case " + fmt(got, 17) + " vs " + fmt(want, 17));
        ++tie_cases;
    }
    for (; free_cases < 500; ++free_cases) {
        const std::size_t n = 3 + rng.index(48);
        std::vector<double> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) a[i] = b[i] = static_cast<double>(i);
        rng.shuffle(std::span<double>(a));
        rng.shuffle(std::span<double>(b));
        const double got = spearman(a, b), want = oracle::classic_spearman(a, b);
        o.require(std::abs(got - want) <= 1e-12, "tie-free case " + fmt(got, 17) + " vs " + fmt(want, 17));
    }
    const double hand = spearman(std::vector<double>{1, 2, 3, 5, 4}, std::vector<double>{1, 2, 3, 4, 5});
    o.require(hand == 0.9, "hand case gave " + fmt(hand, 17));
    if (o.pass) o.detail = "500 tied pairs, 500 tie-free pairs, hand case exactly 0.9";
    return o;
}

// Synthetic end-to-end runs shared by criteria 6 and 7.
struct SyntheticRuns {
    fs::path data;
    double usdl_rho = 0, musdl_rho = 0;
    double usdl_seconds = 0, musdl_seconds = 0;
};

cli::RunConfig synthetic_config(const fs::path& data, cli::Mode mode) {
    cli::RunConfig c;
    c.mode = mode;
    c.train.rng_seed = 11;
    c.train.pooling = Pooling::ScoreLevel;
    c.train.epochs = 100;
    c.train.learning_rate = 1e-3;
    c.paths = {data / "manifest.txt", data / "features.txt", data / "annotations.csv"};
    return c;
}

double train_and_score(const cli::RunConfig& c, const fs::path& out, double& seconds) {
    const auto start = std::chrono::steady_clock::now();
    cli::cmd_train(c, out);
    const auto report = cli::cmd_eval(c, out / cli::kCheckpointFile, out / "eval", cli::Split::Test);
    seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report.per_action_rho.at("all");
}

SyntheticRuns& synthetic_runs() {
    static SyntheticRuns runs = [] {
        SyntheticRuns r;
        const auto dir = scratch("synthetic");
        SynthConfig sc;
        sc.seed = 2024;
        sc.n_samples = 100;
        sc.feature_dim = 16;
        sc.n_segments = 10;
        sc.judge_count = 7;
        sc.rule = FusionRule::diving();
        sc.noise_std = 0.25;
        r.data = dir / "data";
        cli::cmd_synth(sc, 80, r.data);
        r.usdl_rho = train_and_score(synthetic_config(r.data, cli::Mode::USDL), dir / "usdl", r.usdl_seconds);
        r.musdl_rho = train_and_score(synthetic_config(r.data, cli::Mode::MUSDL), dir / "musdl", r.musdl_seconds);
        return r;
    }();
    return runs;
}

Outcome criterion6() {
    Outcome o;
    const auto& r = synthetic_runs();
    o.require(r.usdl_rho > 0.9, "held-out rho " + fmt(r.usdl_rho) + " <= 0.9");
    o.require(r.usdl_seconds < 120, "took " + fmt(r.usdl_seconds) + " s");
    if (o.pass) o.detail = "USDL held-out rho " + fmt(r.usdl_rho) + " in " + fmt(r.usdl_seconds, 3) + " s";
    return o;
}

Outcome criterion7() {
    Outcome o;
    const auto& r = synthetic_runs();
    o.require(r.musdl_rho > 0.9, "MUSDL held-out rho " + fmt(r.musdl_rho) + " <= 0.9");
    o.require(r.musdl_rho >= r.usdl_rho, "MUSDL rho " + fmt(r.musdl_rho) + " < USDL rho " + fmt(r.usdl_rho));
    o.require(r.musdl_seconds < 300, "took " + fmt(r.musdl_seconds) + " s");
    if (o.pass) {
        o.detail = "MUSDL held-out rho " + fmt(r.musdl_rho) + " >= USDL " + fmt(r.usdl_rho) + " in " +
                   fmt(r.musdl_seconds, 3) + " s";
    }
    return o;
}

Outcome criterion8() {
    Outcome o;
    SynthConfig sc;
    sc.seed = 8;
    sc.n_samples = 30;
    sc.feature_dim = 8;
    sc.n_segments = 4;
    sc.judge_count = 1;
    sc.rule = FusionRule::plain_sum();
    const auto records = synth_dataset(sc);
    const auto scale = make_scale(0, 20, 21);
    const auto spec = DistributionSpec::gaussian(1);

    std::vector<MusdlSample> multi;
    std::vector<UsdlSample> single;
    for (const auto& r : records) {
        multi.push_back({r.features, *r.judge_panel});
        single.push_back({r.features, target_distribution(scale, 2 * r.judge_panel->judge_scores[0], spec)});
    }
    TrainConfig cfg;
    cfg.rng_seed = 99;
    cfg.epochs = 10;
    cfg.hidden1 = 32;
    cfg.hidden2 = 16;
    for (auto pooling : {Pooling::ScoreLevel, Pooling::FeatureLevel}) {
        cfg.pooling = pooling;
        const auto a = train_musdl(multi, cfg, FusionRule::plain_sum(), scale, spec);
        const auto b = train_usdl(single, cfg);
        o.require(a.loss_history == b.loss_history, "loss histories differ");
        o.require(a.params.heads.size() == 1 && a.params.heads[0] == b.params, "parameters differ");
        for (const auto& r : records) {
            const double via_multi = infer_musdl(r.features, a.params, pooling, scale, FusionRule::plain_sum());
            const double via_single = decode_argmax(forward_usdl(r.features, b.params, pooling, scale)) / 2.0;
            o.require(via_multi == via_single, "inference differs for " + r.id);
        }
    }
    if (o.pass) o.detail = "K=1 plain-sum MUSDL equals USDL bitwise (history, weights, outputs; both poolings)";
    return o;
}

Outcome criterion9() {
    Outcome o;
    Rng rng(9);
    std::vector<double> p(200), t(200);
    double max_err = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        t[i] = rng.uniform(0, 100);
        p[i] = t[i] + 10 * rng.normal();
        max_err = std::max(max_err, std::abs(p[i] - t[i]));
    }
    auto alphas = default_alphas(100.0);
    alphas.push_back(std::max(max_err, alphas.back()));
    const auto curve = cs_curve(p, t, alphas);
    for (std::size_t i = 1; i < curve.size(); ++i)
        o.require(curve[i].percent >= curve[i - 1].percent, "CS curve decreases at " + fmt(curve[i].alpha));
    o.require(curve.back().percent == 100.0, "CS curve ends at " + fmt(curve.back().percent));

    for (double r : {-0.9, -0.3, 0.0, 0.4, 0.85})
        o.require(std::abs(fisher_z_average(std::vector<double>{r, r, r, r}) - r) <= 1e-15,
                  "fixed point fails at " + fmt(r));

    const double z = fisher_z_average(std::vector<double>{0.5, 0.9});
    o.require(std::abs(z - 0.7516) <= 1e-4, "fisher_z_average{0.5, 0.9} = " + fmt(z, 10) + ", expected 0.7516 +- 1e-4");
    if (o.pass) o.detail = "CS monotone to 100, Fisher-z fixed point, {0.5, 0.9} -> " + fmt(z, 10);
    return o;
}

Outcome criterion10() {
    Outcome o;
    const auto dir = scratch("determinism");
    SynthConfig sc;
    sc.seed = 10;
    sc.n_samples = 24;
    sc.feature_dim = 8;
    sc.n_segments = 4;
    cli::cmd_synth(sc, 18, dir / "data");
    const auto data = dir / "data";
    int files = 0;
    for (auto mode : {cli::Mode::Regression, cli::Mode::USDL, cli::Mode::USDL_DD, cli::Mode::MUSDL,
                      cli::Mode::MUSDL_Star}) {
        for (auto pooling : {Pooling::ScoreLevel, Pooling::FeatureLevel}) {
            cli::RunConfig c;
            c.mode = mode;
            c.train.rng_seed = 42;
            c.train.epochs = 5;
            c.train.hidden1 = 32;
            c.train.hidden2 = 16;
            c.train.pooling = pooling;
            c.paths = {data / "manifest.txt", data / "features.txt", data / "annotations.csv"};
            const std::string tag = cli::to_string(mode) + "_" + to_string(pooling);
            const auto cfg = dir / (tag + ".json");
            cli::save_run_config(c, cfg);
            for (const char* run : {"a", "b"}) {
                const auto out = dir / tag / run;
                std::ostringstream so, se;
                const std::vector<std::vector<std::string>> cmds{
                    {"train", "--config", cfg.string(), "--out", out.string()},
                    {"eval", "--config", cfg.string(), "--checkpoint", (out / cli::kCheckpointFile).string(), "--out",
                     (out / "eval").string()},
                    {"infer", "--config", cfg.string(), "--checkpoint", (out / cli::kCheckpointFile).string(), "--out",
                     (out / "infer").string()},
                    {"plot-data", "--report", (out / "eval").string(), "--out", (out / "plot").string()}};
                for (const auto& cmd : cmds) {
                    const int code = cli::run(cmd, so, se);
                    o.require(code == 0, tag + " " + cmd[0] + " exited " + std::to_string(code) + ": " + se.str());
                }
            }
            for (const auto& entry : fs::recursive_directory_iterator(dir / tag / "a")) {
                if (!entry.is_regular_file()) continue;
                const auto rel = fs::relative(entry.path(), dir / tag / "a");
                o.require(slurp(entry.path()) == slurp(dir / tag / "b" / rel), tag + " differs in " + rel.string());
                ++files;
            }
        }
    }
    if (o.pass) o.detail = std::to_string(files) + " output files byte-identical across repeated runs (5 modes x 2 poolings)";
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"fusion example 100.70", criterion1},  {"segment schedules", criterion2},
        {"distribution suite", criterion3},     {"gradient oracle", criterion4},
        {"spearman oracle", criterion5},        {"synthetic USDL", criterion6},
        {"synthetic MUSDL", criterion7},        {"K=1 parity", criterion8},
        {"CS curve and Fisher-z", criterion9},  {"determinism", criterion10},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        if (!o.pass) ++failed;
        std::printf("criterion %2zu %s: %s (%s)\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                    o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
