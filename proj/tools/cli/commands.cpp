#include "commands.hpp"

#include "usdl/checkpoint.hpp"
#include "usdl/error.hpp"
#include "usdl/textio.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace usdl::cli {

Split parse_split(const std::string& text) {
    if (text == "train") return Split::Train;
    if (text == "test") return Split::Test;
    if (text == "all") return Split::All;
    throw Error(ErrorCode::InvalidConfig, "unknown split '" + text + "' (train, test or all)");
}

namespace {

// Settings derived from a config and the dataset manifest it points at.
struct Resolved {
    RunConfig config;
    DatasetManifest manifest;
    FusionRule rule;
    ScoreScale final_scale;
    ScoreScale judge_scale;
    std::optional<ScoreScale> sum_scale;
};

bool is_judge_mode(Mode m) { return m == Mode::USDL_DD || m == Mode::MUSDL || m == Mode::MUSDL_Star; }

bool is_distribution_mode(Mode m) { return m != Mode::Regression; }

Resolved resolve(const RunConfig& config, const DatasetManifest& manifest) {
    Resolved r{config, manifest, config.fusion_rule.value_or(manifest.fusion_rule), config.final_scale.make(),
               config.judge_scale.make(), std::nullopt};
    if (config.mode == Mode::MUSDL_Star) r.rule.multiplier_source = MultiplierSource::PredictedDD;
    if (config.mode == Mode::MUSDL && r.rule.multiplier_source == MultiplierSource::PredictedDD) {
        throw Error(ErrorCode::InvalidConfig, "MUSDL cannot predict DD; use mode MUSDL_Star");
    }
    if (config.mode == Mode::USDL_DD && r.rule.multiplier_source == MultiplierSource::PredictedDD) {
        throw Error(ErrorCode::InvalidConfig, "USDL_DD multiplies by the ground-truth DD");
    }
    if (is_judge_mode(config.mode)) {
        if (manifest.judge_count == 0) {
            throw Error(ErrorCode::InvalidConfig, "mode " + to_string(config.mode) + " needs judge annotations, but dataset '" +
                                                      manifest.name + "' has no judge columns");
        }
        try {
            r.rule.validate(manifest.judge_count);
        } catch (const Error& e) {
            throw Error(ErrorCode::InvalidConfig, e.what());
        }
    }
    if (config.mode == Mode::USDL_DD) {
        if (config.sum_scale) {
            r.sum_scale = config.sum_scale->make();
        } else {
            // Half-point bins covering every trimmed sum.
            const std::size_t kept = r.rule.kept(manifest.judge_count);
            const double k = static_cast<double>(kept);
            r.sum_scale = make_scale(k * config.judge_scale.min / 2.0, k * config.judge_scale.max / 2.0,
                                     kept * (config.judge_scale.bins - 1) + 1);
        }
    }
    return r;
}

// Final scores are normalized onto [0, 100] and then mapped linearly onto the
// configured final scale (the identity for the default 0..100 scale).
double to_final_scale(const Resolved& r, double raw) {
    const double pct = normalize_final(raw, r.manifest.score_min, r.manifest.score_max);
    if (r.final_scale.min_score() == 0.0 && r.final_scale.max_score() == 100.0) return pct;
    return r.final_scale.min_score() + pct / 100.0 * (r.final_scale.max_score() - r.final_scale.min_score());
}

double from_final_scale(const Resolved& r, double value) {
    double pct = value;
    if (!(r.final_scale.min_score() == 0.0 && r.final_scale.max_score() == 100.0)) {
        pct = (value - r.final_scale.min_score()) / (r.final_scale.max_score() - r.final_scale.min_score()) * 100.0;
    }
    return denormalize_final(pct, r.manifest.score_min, r.manifest.score_max);
}

bool needs_ground_truth_dd(const Resolved& r) {
    return is_judge_mode(r.config.mode) && r.rule.multiplier_source == MultiplierSource::GroundTruthDD;
}

std::optional<double> record_dd(const SampleRecord& rec) {
    if (rec.judge_panel) return rec.judge_panel->difficulty_degree;
    return std::nullopt;
}

void check_records(const Resolved& r, const std::vector<SampleRecord>& records, bool training) {
    if (records.empty()) throw Error(ErrorCode::EmptyDataset, "the selected split has no records");
    std::vector<std::string> missing_panel, missing_dd;
    const bool dd_needed = needs_ground_truth_dd(r) || (training && r.config.mode == Mode::MUSDL_Star);
    for (const auto& rec : records) {
        if (is_judge_mode(r.config.mode) && (!rec.judge_panel || rec.judge_panel->size() != r.manifest.judge_count)) {
            missing_panel.push_back(rec.id);
        }
        if (dd_needed && !record_dd(rec)) missing_dd.push_back(rec.id);
    }
    auto list = [](const std::vector<std::string>& ids) {
        std::string s;
        for (std::size_t i = 0; i < ids.size() && i < 10; ++i) s += (i ? ", " : "") + ids[i];
        if (ids.size() > 10) s += ", ...";
        return s;
    };
    if (!missing_panel.empty()) {
        throw Error(ErrorCode::ValidationError,
                    "mode " + to_string(r.config.mode) + " needs judge scores; missing for " + list(missing_panel));
    }
    if (!missing_dd.empty()) throw Error(ErrorCode::MissingDD, "no difficulty degree for " + list(missing_dd));
}

ScoreDistribution final_target(const Resolved& r, const SampleRecord& rec) {
    return target_distribution(r.final_scale, to_final_scale(r, rec.final_score), r.config.distribution);
}

std::vector<ScoreDistribution> judge_targets_for(const Resolved& r, const SampleRecord& rec) {
    return judge_targets(sort_judges(*rec.judge_panel), r.judge_scale, r.config.judge_distribution);
}

Checkpoint train_checkpoint(const Resolved& r, const std::vector<SampleRecord>& records,
                            std::vector<double>& history) {
    Checkpoint ck{to_string(r.config.mode), r.config.train, r.rule, {}};
    const TrainConfig& tc = r.config.train;
    switch (r.config.mode) {
    case Mode::Regression: {
        std::vector<RegressionSample> data;
        for (const auto& rec : records) data.push_back({rec.features, to_final_scale(r, rec.final_score)});
        TrainResult res = train_regression(data, tc);
        ck.model.heads.push_back(std::move(res.params));
        history = std::move(res.loss_history);
        break;
    }
    case Mode::USDL:
    case Mode::USDL_DD: {
        std::vector<UsdlSample> data;
        for (const auto& rec : records) {
            data.push_back({rec.features, r.config.mode == Mode::USDL
                                              ? final_target(r, rec)
                                              : usdl_dd_target(*rec.judge_panel, r.rule, *r.sum_scale,
                                                               r.config.distribution)});
        }
        TrainResult res = train_usdl(data, tc);
        ck.model.heads.push_back(std::move(res.params));
        history = std::move(res.loss_history);
        break;
    }
    case Mode::MUSDL:
    case Mode::MUSDL_Star: {
        std::vector<MusdlSample> data;
        for (const auto& rec : records) data.push_back({rec.features, *rec.judge_panel});
        MultiTrainResult res = train_musdl(data, tc, r.rule, r.judge_scale, r.config.judge_distribution);
        ck.model = std::move(res.params);
        history = std::move(res.loss_history);
        break;
    }
    }
    return ck;
}

void check_checkpoint(const Resolved& r, const Checkpoint& ck) {
    if (ck.mode != to_string(r.config.mode)) {
        throw Error(ErrorCode::ModeMismatch, "checkpoint was trained in mode " + ck.mode + " but the config asks for " +
                                                 to_string(r.config.mode));
    }
    const std::size_t heads = ck.model.heads.size();
    const bool multi = r.config.mode == Mode::MUSDL || r.config.mode == Mode::MUSDL_Star;
    if (!multi && heads != 1) throw Error(ErrorCode::ShapeMismatch, "single-head mode with a multi-head checkpoint");
    if (multi && heads != r.manifest.judge_count) {
        throw Error(ErrorCode::InconsistentPanelSize, "checkpoint has " + std::to_string(heads) + " heads for " +
                                                          std::to_string(r.manifest.judge_count) + " judges");
    }
    if (r.config.mode == Mode::MUSDL_Star && !ck.model.dd_head) {
        throw Error(ErrorCode::MissingDDHead, "MUSDL_Star checkpoint has no DD head");
    }
}

// Checkpoint rule where it affects decoding, so eval matches training.
Resolved with_checkpoint_rule(Resolved r, const Checkpoint& ck) {
    if (is_judge_mode(r.config.mode)) r.rule = ck.rule;
    return r;
}

double predict(const Resolved& r, const Checkpoint& ck, const FeatureMatrix& features, std::optional<double> dd) {
    const Pooling pooling = ck.train.pooling;
    const HeadParams& head = ck.model.heads.front();
    switch (r.config.mode) {
    case Mode::Regression:
        return from_final_scale(r, forward_regression(features, head, pooling));
    case Mode::USDL:
        return from_final_scale(r, decode_argmax(forward_usdl(features, head, pooling, r.final_scale)));
    case Mode::USDL_DD: {
        double mult = 1.0;
        if (r.rule.multiplier_source == MultiplierSource::GroundTruthDD) {
            if (!dd) throw Error(ErrorCode::MissingDD, "USDL_DD needs the ground-truth difficulty degree");
            mult = *dd;
        }
        return decode_argmax(forward_usdl(features, head, pooling, *r.sum_scale)) * mult;
    }
    case Mode::MUSDL:
    case Mode::MUSDL_Star:
        return infer_musdl(features, ck.model, pooling, r.judge_scale, r.rule, dd);
    }
    return 0.0;
}

double sample_loss(const Resolved& r, const Checkpoint& ck, const SampleRecord& rec) {
    const Pooling pooling = ck.train.pooling;
    const HeadParams& head = ck.model.heads.front();
    switch (r.config.mode) {
    case Mode::Regression:
        return loss_regression(to_final_scale(r, rec.final_score), rec.features, head, pooling);
    case Mode::USDL:
        return loss_usdl(final_target(r, rec), rec.features, head, pooling);
    case Mode::USDL_DD:
        return loss_usdl(usdl_dd_target(*rec.judge_panel, r.rule, *r.sum_scale, r.config.distribution), rec.features,
                         head, pooling);
    case Mode::MUSDL:
    case Mode::MUSDL_Star:
        return multi_total_loss(judge_targets_for(r, rec), rec.features, ck.model, pooling,
                                r.config.mode == Mode::MUSDL_Star ? record_dd(rec) : std::nullopt,
                                ck.train.dd_weight);
    }
    return 0.0;
}

std::string loss_kind(Mode m) {
    switch (m) {
    case Mode::Regression: return "l2";
    case Mode::MUSDL_Star: return "kl+l2";
    default: return "kl";
    }
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    return out;
}

std::ifstream open_in(const fs::path& path, ErrorCode missing = ErrorCode::IoError) {
    std::ifstream in(path);
    if (!in) throw Error(missing, "cannot open " + path.string());
    return in;
}

void ensure_dir(const fs::path& dir) {
    if (dir.empty()) throw Error(ErrorCode::InvalidConfig, "no output directory given (--out or output_dir)");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
}

std::string num(double v) { return format_decimal(v, 17); }

Dataset load(const RunConfig& config) {
    return load_dataset(config.paths.manifest, config.paths.features, config.paths.annotations);
}

}  // namespace

// ---------------------------------------------------------------------------

void cmd_train(const RunConfig& config, const fs::path& out_dir) {
    config.validate();
    const Dataset ds = load(config);
    const Resolved r = resolve(config, ds.manifest);
    const std::vector<SampleRecord> records = ds.manifest.train_ids.empty() ? ds.records : ds.train();
    check_records(r, records, true);

    std::vector<double> history;
    const Checkpoint ck = train_checkpoint(r, records, history);

    ensure_dir(out_dir);
    save_checkpoint(ck, out_dir / kCheckpointFile);
    {
        auto log = open_out(out_dir / kTrainLogFile);
        log << "epoch\tloss_kind\tloss\n";
        for (std::size_t e = 0; e < history.size(); ++e) log << e + 1 << '\t' << loss_kind(config.mode) << '\t' << num(history[e]) << '\n';
    }
    save_run_config(config, out_dir / kConfigSnapshotFile);
}

EvalReport cmd_eval(const RunConfig& config, const fs::path& checkpoint, const fs::path& out_dir, Split split) {
    config.validate();
    const Dataset ds = load(config);
    const Checkpoint ck = load_checkpoint(checkpoint);
    Resolved r = resolve(config, ds.manifest);
    check_checkpoint(r, ck);
    r = with_checkpoint_rule(std::move(r), ck);

    std::vector<SampleRecord> records;
    switch (split) {
    case Split::Train: records = ds.train(); break;
    case Split::Test: records = ds.test(); break;
    case Split::All: records = ds.records; break;
    }
    check_records(r, records, false);

    std::vector<double> pred, truth;
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> groups;
    double loss_sum = 0.0;
    for (const auto& rec : records) {
        const double p = predict(r, ck, rec.features, record_dd(rec));
        pred.push_back(p);
        truth.push_back(rec.final_score);
        auto& g = groups[rec.action_class.value_or("all")];
        g.first.push_back(p);
        g.second.push_back(rec.final_score);
        loss_sum += sample_loss(r, ck, rec);
    }

    EvalReport report;
    report.sample_count = records.size();
    report.mean_loss = loss_sum / static_cast<double>(records.size());
    for (const auto& [action, series] : groups) {
        try {
            report.per_action_rho[action] = spearman(series.first, series.second);
        } catch (const Error& e) {
            warn("action '" + action + "' has no Spearman correlation: " + e.what());
        }
    }
    std::vector<double> rhos;
    for (const auto& [action, rho] : report.per_action_rho) rhos.push_back(rho);
    if (!rhos.empty()) report.fisher_z_average = fisher_z_average(rhos);
    report.cs_curve = cs_curve(pred, truth, default_alphas(ds.manifest.score_max - ds.manifest.score_min));

    ensure_dir(out_dir);
    {
        auto os = open_out(out_dir / kReportFile);
        write_report(os, report);
    }
    {
        auto os = open_out(out_dir / kPredictionsFile);
        os << "id\taction\tpredicted\ttruth\n";
        for (std::size_t i = 0; i < records.size(); ++i) {
            os << records[i].id << '\t' << records[i].action_class.value_or("all") << '\t' << num(pred[i]) << '\t'
               << num(truth[i]) << '\n';
        }
    }
    const fs::path segments = out_dir / kSegmentsFile;
    if (is_distribution_mode(config.mode) && ck.train.pooling == Pooling::ScoreLevel) {
        auto os = open_out(segments);
        os << "id\thead\tsegment\tprobs...\n";
        for (const auto& rec : records) {
            for (std::size_t k = 0; k < ck.model.heads.size(); ++k) {
                const auto rows = segment_distributions(rec.features, ck.model.heads[k]);
                for (std::size_t s = 0; s < rows.size(); ++s) {
                    os << rec.id << '\t' << k << '\t' << s;
                    for (double p : rows[s]) os << '\t' << num(p);
                    os << '\n';
                }
            }
        }
    } else {
        std::error_code ec;
        fs::remove(segments, ec);
    }
    return report;
}

void cmd_infer(const RunConfig& config, const fs::path& checkpoint, const fs::path& features_path,
               const fs::path& out_dir) {
    config.validate();
    DatasetManifest manifest;
    {
        auto in = open_in(config.paths.manifest);
        manifest = read_manifest(in);
    }
    const Checkpoint ck = load_checkpoint(checkpoint);
    Resolved r = resolve(config, manifest);
    check_checkpoint(r, ck);
    r = with_checkpoint_rule(std::move(r), ck);

    const auto features = load_features(features_path);
    if (features.empty()) throw Error(ErrorCode::EmptyDataset, features_path.string() + " has no samples");

    std::map<std::string, double> dds;
    const bool dd_needed = (r.config.mode == Mode::USDL_DD || r.config.mode == Mode::MUSDL) &&
                           r.rule.multiplier_source == MultiplierSource::GroundTruthDD;
    if (dd_needed) {
        std::ifstream in(config.paths.annotations);
        if (!in) throw Error(ErrorCode::MissingDD, "ground-truth DD fusion needs annotations at " + config.paths.annotations.string());
        for (const auto& row : read_annotations(in))
            if (row.judge_panel && row.judge_panel->difficulty_degree) dds[row.id] = *row.judge_panel->difficulty_degree;
    }

    std::vector<std::pair<std::string, double>> scores;
    for (const auto& [id, f] : features) {
        std::optional<double> dd;
        if (dd_needed) {
            auto it = dds.find(id);
            if (it == dds.end()) throw Error(ErrorCode::MissingDD, "no difficulty degree annotated for '" + id + "'");
            dd = it->second;
        }
        scores.emplace_back(id, predict(r, ck, f, dd));
    }

    ensure_dir(out_dir);
    auto os = open_out(out_dir / kScoresFile);
    os << "id\tfinal_score\n";
    for (const auto& [id, s] : scores) os << id << '\t' << num(s) << '\n';
}

void cmd_plot_data(const fs::path& report_dir, const fs::path& out_dir) {
    EvalReport report;
    {
        auto in = open_in(report_dir / kReportFile, ErrorCode::ReportMissing);
        report = read_report(in);
    }
    auto pred_in = open_in(report_dir / kPredictionsFile, ErrorCode::ReportMissing);

    ensure_dir(out_dir);
    {
        auto os = open_out(out_dir / kScatterFile);
        os << "id\ttruth\tpredicted\n";
        std::string line;
        std::getline(pred_in, line);
        std::size_t line_no = 1;
        while (std::getline(pred_in, line)) {
            ++line_no;
            if (trim(line).empty()) continue;
            const auto cells = split(line, '\t');
            if (cells.size() != 4) {
                throw Error(ErrorCode::ParseError, "predictions line " + std::to_string(line_no) + ": expected 4 columns");
            }
            const std::string ctx = "predictions line " + std::to_string(line_no);
            os << cells[0] << '\t' << num(parse_real(cells[3], ctx)) << '\t' << num(parse_real(cells[2], ctx)) << '\n';
        }
    }
    {
        auto os = open_out(out_dir / kCsCurveFile);
        os << "alpha\tpercent\n";
        for (const auto& p : report.cs_curve) os << num(p.alpha) << '\t' << num(p.percent) << '\n';
    }
    const fs::path seg_out = out_dir / kSegmentPlotFile;
    std::ifstream seg_in(report_dir / kSegmentsFile);
    if (!seg_in) {
        std::error_code ec;
        fs::remove(seg_out, ec);
        return;
    }
    auto os = open_out(seg_out);
    std::string line;
    std::getline(seg_in, line);
    os << "id\thead\tsegment\tbin\tprob\n";
    std::size_t line_no = 1;
    while (std::getline(seg_in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split(line, '\t');
        const std::string ctx = "segments line " + std::to_string(line_no);
        if (cells.size() < 4) throw Error(ErrorCode::ParseError, ctx + ": too few columns");
        for (std::size_t b = 3; b < cells.size(); ++b) {
            os << cells[0] << '\t' << cells[1] << '\t' << cells[2] << '\t' << b - 3 << '\t'
               << num(parse_real(cells[b], ctx)) << '\n';
        }
    }
}

void cmd_synth(const SynthConfig& config, std::size_t train_count, const fs::path& out_dir) {
    Dataset ds;
    ds.records = synth_dataset(config);
    ds.manifest = synth_manifest(config, ds.records, std::min(train_count, ds.records.size()));
    ensure_dir(out_dir);
    save_dataset(ds, out_dir / "manifest.txt", out_dir / "features.txt", out_dir / "annotations.csv");
}

int exit_code_for(const std::exception& e) {
    const auto* err = dynamic_cast<const Error*>(&e);
    if (!err) return 2;
    switch (err->code()) {
    case ErrorCode::IoError:
    case ErrorCode::ShapeMismatch:
    case ErrorCode::ScaleMismatch:
    case ErrorCode::LengthMismatch:
    case ErrorCode::DegenerateSeries:
        return 2;
    default:
        return 1;
    }
}

// ---------------------------------------------------------------------------
// Command line

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Score distribution learning for action quality assessment"};
    app.require_subcommand(1);

    std::string config_path, checkpoint_path, out_path;
    std::optional<std::uint64_t> seed;
    auto add_common = [&](CLI::App* sub, bool needs_checkpoint) {
        sub->add_option("--config", config_path, "Run configuration (JSON)")->required();
        if (needs_checkpoint) sub->add_option("--checkpoint", checkpoint_path, "Checkpoint file")->required();
        sub->add_option("--out", out_path, "Output directory (defaults to output_dir in the config)");
        sub->add_option("--seed", seed, "Override train.seed");
    };

    auto* train = app.add_subcommand("train", "Train a model on the training split");
    add_common(train, false);

    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
    add_common(eval, true);
    std::string split = "test";
    eval->add_option("--split", split, "train, test or all")->check(CLI::IsMember({"train", "test", "all"}));

    auto* infer = app.add_subcommand("infer", "Predict final scores for a features file");
    add_common(infer, true);
    std::string features_path;
    infer->add_option("--features", features_path, "Features file (defaults to paths.features)");

    auto* plot = app.add_subcommand("plot-data", "Emit plot-ready tables from an eval directory");
    std::string report_dir;
    plot->add_option("--report", report_dir, "Directory written by eval")->required();
    plot->add_option("--out", out_path, "Output directory")->required();

    auto* synth = app.add_subcommand("synth", "Generate a synthetic judged dataset");
    SynthConfig sc;
    std::size_t train_count = 80;
    std::string rule_name = "diving";
    synth->add_option("--out", out_path, "Output directory")->required();
    synth->add_option("--seed", sc.seed, "Generator seed")->required();
    synth->add_option("--samples", sc.n_samples, "Number of samples");
    synth->add_option("--dim", sc.feature_dim, "Feature dimension");
    synth->add_option("--segments", sc.n_segments, "Segments per sample");
    synth->add_option("--judges", sc.judge_count, "Judges per panel (0 for none)");
    synth->add_option("--noise", sc.noise_std, "Judge noise standard deviation");
    synth->add_option("--feature-noise", sc.feature_noise, "Per-segment feature noise");
    synth->add_option("--train", train_count, "Number of samples in the training split");
    synth->add_option("--rule", rule_name, "diving (drop 2/2, DD) or sum (plain sum)")
        ->check(CLI::IsMember({"diving", "sum"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        auto load_config = [&]() {
            RunConfig c = load_run_config(config_path);
            if (seed) c.train.rng_seed = *seed;
            return c;
        };
        auto out_dir = [&](const RunConfig& c) { return out_path.empty() ? c.output_dir : fs::path(out_path); };

        if (*train) {
            const RunConfig c = load_config();
            cmd_train(c, out_dir(c));
            out << "trained " << to_string(c.mode) << " -> " << (out_dir(c) / kCheckpointFile).string() << '\n';
        } else if (*eval) {
            const RunConfig c = load_config();
            const EvalReport rep = cmd_eval(c, checkpoint_path, out_dir(c), parse_split(split));
            out << "samples " << rep.sample_count << "  fisher_z_average " << format_decimal(rep.fisher_z_average, 6)
                << "  mean_loss " << format_decimal(rep.mean_loss, 6) << '\n';
        } else if (*infer) {
            const RunConfig c = load_config();
            cmd_infer(c, checkpoint_path, features_path.empty() ? c.paths.features : fs::path(features_path), out_dir(c));
            out << "wrote " << (out_dir(c) / kScoresFile).string() << '\n';
        } else if (*plot) {
            cmd_plot_data(report_dir, out_path);
            out << "wrote plot data to " << out_path << '\n';
        } else if (*synth) {
            sc.rule = rule_name == "diving" ? FusionRule::diving() : FusionRule::plain_sum();
            cmd_synth(sc, train_count, out_path);
            out << "wrote synthetic dataset to " << out_path << '\n';
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e);
    }
    return 0;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv;
    argv.push_back("usdl");
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace usdl::cli
