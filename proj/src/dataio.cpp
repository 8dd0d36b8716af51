#include "usdl/dataio.hpp"

#include "usdl/error.hpp"
#include "usdl/rng.hpp"
#include "usdl/textio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace usdl {

// ---------------------------------------------------------------------------
// Normalization

double normalize_final(double s, double s_min, double s_max) {
    if (!(s_min < s_max)) throw Error(ErrorCode::DegenerateRange, "normalization range has no width");
    if (!(s >= s_min && s <= s_max)) {
        std::ostringstream os;
        os << "score " << s << " outside [" << s_min << ", " << s_max << "]";
        throw Error(ErrorCode::OutOfRange, os.str());
    }
    return (s - s_min) / (s_max - s_min) * 100.0;
}

double denormalize_final(double normalized, double s_min, double s_max) {
    if (!(s_min < s_max)) throw Error(ErrorCode::DegenerateRange, "normalization range has no width");
    return s_min + normalized / 100.0 * (s_max - s_min);
}

int normalize_judge(double s) {
    const double doubled = 2.0 * s;
    const double rounded = std::round(doubled);
    if (!std::isfinite(doubled) || std::abs(doubled - rounded) > 1e-9) {
        std::ostringstream os;
        os << "judge score " << s << " is not on the half-point grid";
        throw Error(ErrorCode::NonHalfPointScore, os.str());
    }
    return static_cast<int>(rounded);
}

// ---------------------------------------------------------------------------
// Segment schedules

std::string to_string(SegmentStrategy strategy) {
    switch (strategy) {
    case SegmentStrategy::Seg6: return "6-seg";
    case SegmentStrategy::Seg10S1: return "10-seg-s1";
    case SegmentStrategy::Seg10S2: return "10-seg-s2";
    }
    return "10-seg-s1";
}

SegmentStrategy parse_segment_strategy(const std::string& text) {
    if (text == "6-seg") return SegmentStrategy::Seg6;
    if (text == "10-seg-s1") return SegmentStrategy::Seg10S1;
    if (text == "10-seg-s2") return SegmentStrategy::Seg10S2;
    throw Error(ErrorCode::InvalidConfig, "unknown segment strategy '" + text + "'");
}

std::vector<int> segment_indices(SegmentStrategy strategy, int video_len, int clip_len) {
    if (clip_len < 1) throw Error(ErrorCode::InvalidConfig, "clip length must be positive");
    if (video_len < clip_len) {
        throw Error(ErrorCode::VideoTooShort, "video of " + std::to_string(video_len) + " frames is shorter than one " +
                                                  std::to_string(clip_len) + "-frame clip");
    }
    const int last = video_len - clip_len;
    std::vector<int> starts;
    switch (strategy) {
    case SegmentStrategy::Seg6: {
        const int stride = std::min(clip_len, video_len / 6);
        for (int i = 0; i < 6; ++i) starts.push_back(std::min(i * stride, last));
        break;
    }
    case SegmentStrategy::Seg10S1: {
        const int stride = video_len / 10;
        for (int i = 0; i < 10; ++i) starts.push_back(std::min(i * stride, last));
        break;
    }
    case SegmentStrategy::Seg10S2:
        for (int i = 0; i < 10; ++i) starts.push_back(i * last / 9);
        break;
    }
    return starts;
}

// ---------------------------------------------------------------------------
// Manifest

void DatasetManifest::validate() const {
    if (!(score_min < score_max)) throw Error(ErrorCode::ValidationError, "manifest score_min must be < score_max");
    if (judge_count > 0) {
        fusion_rule.validate(judge_count);
        if (!(judge_range.min < judge_range.max) || !(judge_range.step > 0.0)) {
            throw Error(ErrorCode::ValidationError, "manifest judge range is empty or has no step");
        }
    }
    std::set<std::string> train(train_ids.begin(), train_ids.end());
    if (train.size() != train_ids.size()) throw Error(ErrorCode::ValidationError, "duplicate ids in train split");
    std::set<std::string> test(test_ids.begin(), test_ids.end());
    if (test.size() != test_ids.size()) throw Error(ErrorCode::ValidationError, "duplicate ids in test split");
    std::string shared;
    for (const auto& id : test_ids)
        if (train.count(id)) shared += (shared.empty() ? "" : ", ") + id;
    if (!shared.empty()) throw Error(ErrorCode::ValidationError, "ids in both splits: " + shared);
}

namespace {

std::string join(const std::vector<std::string>& items, const char* sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += sep;
        out += items[i];
    }
    return out;
}

std::vector<std::string> split_ids(const std::string& text) {
    std::vector<std::string> ids;
    if (trim(text).empty()) return ids;
    for (auto& id : split(text, ','))
        if (!id.empty()) ids.push_back(id);
    return ids;
}

}  // namespace

DatasetManifest read_manifest(std::istream& is) {
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const auto body = trim(line);
        if (body.empty() || body.front() == '#') continue;
        const auto eq = body.find('=');
        if (eq == std::string_view::npos) {
            throw Error(ErrorCode::ParseError, "manifest line " + std::to_string(line_no) + ": expected key = value");
        }
        const std::string key(trim(body.substr(0, eq)));
        if (!kv.emplace(key, std::string(trim(body.substr(eq + 1)))).second) {
            throw Error(ErrorCode::ParseError, "manifest line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
        }
    }

    auto take = [&](const std::string& key, const std::string& fallback = {}) -> std::string {
        auto it = kv.find(key);
        if (it == kv.end()) {
            if (fallback.empty()) throw Error(ErrorCode::ParseError, "manifest is missing '" + key + "'");
            return fallback;
        }
        std::string v = it->second;
        kv.erase(it);
        return v;
    };
    auto real = [&](const std::string& key, const std::string& fallback = {}) {
        return parse_real(take(key, fallback), "manifest " + key);
    };
    auto integer = [&](const std::string& key, const std::string& fallback = {}) {
        const long long v = parse_integer(take(key, fallback), "manifest " + key);
        if (v < 0) throw Error(ErrorCode::ParseError, "manifest " + key + " must be nonnegative");
        return v;
    };

    DatasetManifest m;
    m.name = take("name");
    m.score_min = real("score_min");
    m.score_max = real("score_max");
    m.judge_count = static_cast<std::size_t>(integer("judge_count", "0"));
    m.judge_range.min = real("judge_min", "0");
    m.judge_range.max = real("judge_max", "10");
    m.judge_range.step = real("judge_step", "0.5");
    m.fusion_rule.drop_low = static_cast<int>(integer("drop_low", "0"));
    m.fusion_rule.drop_high = static_cast<int>(integer("drop_high", "0"));
    m.fusion_rule.multiplier_source = parse_multiplier_source(take("multiplier", "none"));
    auto it = kv.find("train_ids");
    m.train_ids = it == kv.end() ? std::vector<std::string>{} : split_ids(it->second);
    kv.erase("train_ids");
    it = kv.find("test_ids");
    m.test_ids = it == kv.end() ? std::vector<std::string>{} : split_ids(it->second);
    kv.erase("test_ids");
    if (!kv.empty()) throw Error(ErrorCode::ParseError, "manifest has unknown key '" + kv.begin()->first + "'");
    m.validate();
    return m;
}

void write_manifest(std::ostream& os, const DatasetManifest& m) {
    os << "name = " << m.name << '\n';
    os << "score_min = " << format_decimal(m.score_min, 17) << '\n';
    os << "score_max = " << format_decimal(m.score_max, 17) << '\n';
    os << "judge_count = " << m.judge_count << '\n';
    os << "judge_min = " << format_decimal(m.judge_range.min, 17) << '\n';
    os << "judge_max = " << format_decimal(m.judge_range.max, 17) << '\n';
    os << "judge_step = " << format_decimal(m.judge_range.step, 17) << '\n';
    os << "drop_low = " << m.fusion_rule.drop_low << '\n';
    os << "drop_high = " << m.fusion_rule.drop_high << '\n';
    os << "multiplier = " << to_string(m.fusion_rule.multiplier_source) << '\n';
    os << "train_ids = " << join(m.train_ids, ",") << '\n';
    os << "test_ids = " << join(m.test_ids, ",") << '\n';
}

// ---------------------------------------------------------------------------
// Features

std::map<std::string, FeatureMatrix> read_features(std::istream& is) {
    std::map<std::string, FeatureMatrix> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const auto body = trim(line);
        if (body.empty() || body.front() == '#') continue;
        const std::string ctx = "features line " + std::to_string(line_no);
        const auto tok = split_whitespace(body);
        if (tok.size() < 3) throw Error(ErrorCode::ParseError, ctx + ": expected <id> <N> <D> values...");
        const long long n = parse_integer(tok[1], ctx + " N");
        const long long d = parse_integer(tok[2], ctx + " D");
        if (n < 1 || d < 1) throw Error(ErrorCode::ParseError, ctx + ": N and D must be positive");
        const std::size_t count = static_cast<std::size_t>(n) * static_cast<std::size_t>(d);
        if (tok.size() != 3 + count) {
            throw Error(ErrorCode::ParseError, ctx + ": expected " + std::to_string(count) + " values, found " +
                                                   std::to_string(tok.size() - 3));
        }
        std::vector<double> values(count);
        for (std::size_t i = 0; i < count; ++i) values[i] = parse_real(tok[3 + i], ctx);
        for (double v : values)
            if (!std::isfinite(v)) throw Error(ErrorCode::ValidationError, ctx + ": non-finite feature for '" + tok[0] + "'");
        if (out.count(tok[0])) throw Error(ErrorCode::ParseError, ctx + ": duplicate id '" + tok[0] + "'");
        out.emplace(tok[0], FeatureMatrix(static_cast<std::size_t>(n), static_cast<std::size_t>(d), std::move(values)));
    }
    return out;
}

void write_features(std::ostream& os, const std::vector<SampleRecord>& records) {
    os << "# id N D values (row-major, one row per segment)\n";
    for (const auto& r : records) {
        os << r.id << ' ' << r.features.num_segments() << ' ' << r.features.dim();
        for (double v : r.features.matrix().values()) os << ' ' << format_decimal(v, 17);
        os << '\n';
    }
}

// ---------------------------------------------------------------------------
// Annotations

std::vector<AnnotationRow> read_annotations(std::istream& is) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (header.empty() && std::getline(is, line)) {
        ++line_no;
        const auto body = trim(line);
        if (body.empty() || body.front() == '#') continue;
        header = split(body, ',');
    }
    if (header.empty()) return {};

    int id_col = -1, final_col = -1, dd_col = -1, action_col = -1;
    std::vector<int> judge_cols;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string& h = header[c];
        const int ci = static_cast<int>(c);
        if (h == "id") id_col = ci;
        else if (h == "final_score") final_col = ci;
        else if (h == "dd") dd_col = ci;
        else if (h == "action") action_col = ci;
        else if (h.rfind("judge_", 0) == 0) {
            const long long k = parse_integer(h.substr(6), "annotation header");
            if (k != static_cast<long long>(judge_cols.size()) + 1) {
                throw Error(ErrorCode::ParseError, "annotation header: judge columns must run judge_1..judge_K in order");
            }
            judge_cols.push_back(ci);
        } else {
            throw Error(ErrorCode::ParseError, "annotation header: unknown column '" + h + "'");
        }
    }
    if (id_col < 0 || final_col < 0) throw Error(ErrorCode::ParseError, "annotation header needs id and final_score");

    std::vector<AnnotationRow> rows;
    while (std::getline(is, line)) {
        ++line_no;
        const auto body = trim(line);
        if (body.empty() || body.front() == '#') continue;
        const std::string ctx = "annotations line " + std::to_string(line_no);
        const auto cells = split(body, ',');
        if (cells.size() != header.size()) {
            throw Error(ErrorCode::ParseError, ctx + ": expected " + std::to_string(header.size()) + " cells, found " +
                                                   std::to_string(cells.size()));
        }
        AnnotationRow row;
        row.id = cells[id_col];
        if (row.id.empty()) throw Error(ErrorCode::ParseError, ctx + ": empty id");
        row.final_score = parse_real(cells[final_col], ctx + " final_score");
        if (action_col >= 0 && !cells[action_col].empty()) row.action_class = cells[action_col];
        std::optional<double> dd;
        if (dd_col >= 0 && !cells[dd_col].empty()) dd = parse_real(cells[dd_col], ctx + " dd");
        if (!judge_cols.empty()) {
            JudgePanel panel;
            for (int c : judge_cols) panel.judge_scores.push_back(parse_real(cells[c], ctx + " " + header[c]));
            panel.difficulty_degree = dd;
            row.judge_panel = std::move(panel);
        } else if (dd) {
            row.judge_panel = JudgePanel{{}, dd};
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_annotations(std::ostream& os, const std::vector<SampleRecord>& records) {
    std::size_t judges = 0;
    bool any_action = false;
    for (const auto& r : records) {
        if (r.judge_panel) judges = std::max(judges, r.judge_panel->size());
        any_action = any_action || r.action_class.has_value();
    }
    os << "id,final_score,dd";
    if (any_action) os << ",action";
    for (std::size_t k = 1; k <= judges; ++k) os << ",judge_" << k;
    os << '\n';
    for (const auto& r : records) {
        os << r.id << ',' << format_decimal(r.final_score, 17) << ',';
        if (r.judge_panel && r.judge_panel->difficulty_degree) os << format_decimal(*r.judge_panel->difficulty_degree, 17);
        if (any_action) os << ',' << r.action_class.value_or("");
        for (std::size_t k = 0; k < judges; ++k) {
            os << ',';
            if (r.judge_panel && k < r.judge_panel->size()) os << format_decimal(r.judge_panel->judge_scores[k], 17);
        }
        os << '\n';
    }
}

// ---------------------------------------------------------------------------
// Dataset loading

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    return out;
}

bool on_grid(double v, const JudgeRange& range) {
    const double steps = (v - range.min) / range.step;
    return std::abs(steps - std::round(steps)) <= 1e-9;
}

}  // namespace

std::vector<SampleRecord> Dataset::subset(const std::vector<std::string>& ids) const {
    std::set<std::string> wanted(ids.begin(), ids.end());
    std::vector<SampleRecord> out;
    for (const auto& r : records)
        if (wanted.count(r.id)) out.push_back(r);
    return out;
}

std::map<std::string, FeatureMatrix> load_features(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_features(in);
}

Dataset load_dataset(const std::filesystem::path& manifest_path, const std::filesystem::path& features_path,
                     const std::filesystem::path& annotations_path) {
    Dataset ds;
    {
        auto in = open_input(manifest_path);
        ds.manifest = read_manifest(in);
    }
    std::vector<AnnotationRow> rows;
    {
        auto in = open_input(annotations_path);
        rows = read_annotations(in);
    }
    if (rows.empty()) throw Error(ErrorCode::EmptyDataset, annotations_path.string() + " has no records");
    auto features = load_features(features_path);

    const DatasetManifest& m = ds.manifest;
    std::vector<std::string> problems;
    std::set<std::string> seen;
    std::optional<std::size_t> dim;
    for (auto& row : rows) {
        if (!seen.insert(row.id).second) {
            problems.push_back(row.id + " (duplicate id)");
            continue;
        }
        auto f = features.find(row.id);
        if (f == features.end()) {
            problems.push_back(row.id + " (no features)");
            continue;
        }
        if (!dim) dim = f->second.dim();
        if (f->second.dim() != *dim) problems.push_back(row.id + " (feature dimension differs)");
        if (!(row.final_score >= m.score_min && row.final_score <= m.score_max)) {
            problems.push_back(row.id + " (final_score outside manifest range)");
        }
        if (m.judge_count > 0) {
            if (!row.judge_panel || row.judge_panel->size() != m.judge_count) {
                problems.push_back(row.id + " (expected " + std::to_string(m.judge_count) + " judge scores)");
            } else {
                for (double s : row.judge_panel->judge_scores) {
                    if (!(s >= m.judge_range.min && s <= m.judge_range.max) || !on_grid(s, m.judge_range)) {
                        problems.push_back(row.id + " (judge score off the judge grid)");
                        break;
                    }
                }
                if (row.judge_panel->difficulty_degree) {
                    const double dd = *row.judge_panel->difficulty_degree;
                    if (!(dd > 0.0)) problems.push_back(row.id + " (difficulty degree must be > 0)");
                    else {
                        const double fused = fuse_rule(row.judge_panel->judge_scores, m.fusion_rule, dd);
                        if (std::abs(fused - row.final_score) > 1e-6) {
                            std::ostringstream os;
                            os.precision(10);
                            os << "record " << row.id << ": fused panel score " << fused << " differs from final_score "
                               << row.final_score;
                            warn(os.str());
                        }
                    }
                }
            }
        }
        ds.records.push_back(SampleRecord{row.id, f->second, row.final_score, row.judge_panel, row.action_class});
    }
    for (const auto* split : {&m.train_ids, &m.test_ids})
        for (const auto& id : *split)
            if (!seen.count(id)) problems.push_back(id + " (listed in split but not annotated)");
    if (!problems.empty()) throw Error(ErrorCode::ValidationError, "invalid records: " + join(problems, "; "));

    std::sort(ds.records.begin(), ds.records.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    return ds;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& manifest_path,
                  const std::filesystem::path& features_path, const std::filesystem::path& annotations_path) {
    {
        auto out = open_output(manifest_path);
        write_manifest(out, dataset.manifest);
    }
    {
        auto out = open_output(features_path);
        write_features(out, dataset.records);
    }
    auto out = open_output(annotations_path);
    write_annotations(out, dataset.records);
}

// ---------------------------------------------------------------------------
// Synthetic data

void SynthConfig::validate() const {
    if (n_samples == 0 || feature_dim == 0 || n_segments == 0) {
        throw Error(ErrorCode::InvalidConfig, "synthetic sizes must be positive");
    }
    if (!(noise_std >= 0.0) || !(feature_noise >= 0.0)) throw Error(ErrorCode::InvalidConfig, "noise must be >= 0");
    if (!(judge_range.min < judge_range.max) || !(judge_range.step > 0.0)) {
        throw Error(ErrorCode::InvalidConfig, "judge range is empty or has no step");
    }
    if (judge_count > 0) {
        try {
            rule.validate(judge_count);
        } catch (const Error& e) {
            throw Error(ErrorCode::InvalidConfig, e.what());
        }
        if (rule.multiplier_source != MultiplierSource::None) {
            if (dd_set.empty()) throw Error(ErrorCode::InvalidConfig, "DD set is empty");
            for (double dd : dd_set)
                if (!(dd > 0.0)) throw Error(ErrorCode::InvalidConfig, "DD values must be > 0");
        }
    }
}

std::vector<SampleRecord> synth_dataset(const SynthConfig& config) {
    config.validate();
    Rng rng(config.seed);
    const JudgeRange& jr = config.judge_range;
    const double span = jr.max - jr.min;
    const bool uses_dd = config.judge_count > 0 && config.rule.multiplier_source != MultiplierSource::None;
    const double dd_lo = uses_dd ? *std::min_element(config.dd_set.begin(), config.dd_set.end()) : 1.0;
    const double dd_hi = uses_dd ? *std::max_element(config.dd_set.begin(), config.dd_set.end()) : 1.0;

    // Latent vector: quality, DD, one deviation per sorted judge.
    const std::size_t latent = 2 + config.judge_count;
    Matrix embedding(latent, config.feature_dim);
    for (double& w : embedding.values()) w = rng.uniform(-1.0, 1.0);

    const int width = std::max<int>(4, static_cast<int>(std::to_string(config.n_samples - 1).size()));
    std::vector<SampleRecord> records;
    records.reserve(config.n_samples);
    for (std::size_t s = 0; s < config.n_samples; ++s) {
        const double q = rng.uniform(jr.min, jr.max);
        std::vector<double> z(latent, 0.0);
        z[0] = (q - jr.min) / span;

        std::optional<JudgePanel> panel;
        double final_score = q;
        if (config.judge_count > 0) {
            JudgePanel p;
            for (std::size_t k = 0; k < config.judge_count; ++k) {
                const double raw = q + config.noise_std * rng.normal();
                const double snapped = jr.min + std::round((raw - jr.min) / jr.step) * jr.step;
                p.judge_scores.push_back(std::clamp(snapped, jr.min, jr.max));
            }
            double dd = 1.0;
            if (uses_dd) {
                dd = config.dd_set[rng.index(config.dd_set.size())];
                p.difficulty_degree = dd;
                z[1] = dd_hi > dd_lo ? (dd - dd_lo) / (dd_hi - dd_lo) : 0.0;
            }
            std::vector<double> sorted = p.judge_scores;
            std::sort(sorted.begin(), sorted.end());
            for (std::size_t k = 0; k < sorted.size(); ++k) z[2 + k] = (sorted[k] - q) / span;
            final_score = fuse_rule(p.judge_scores, config.rule, dd);
            panel = std::move(p);
        }

        Matrix seg(config.n_segments, config.feature_dim);
        for (std::size_t n = 0; n < config.n_segments; ++n) {
            auto row = seg.row(n);
            for (std::size_t d = 0; d < config.feature_dim; ++d) {
                double v = 0.0;
                for (std::size_t l = 0; l < latent; ++l) v += z[l] * embedding(l, d);
                row[d] = v + config.feature_noise * rng.normal();
            }
        }

        std::string id = std::to_string(s);
        id = "s" + std::string(static_cast<std::size_t>(width) - std::min<std::size_t>(id.size(), width), '0') + id;
        records.push_back(SampleRecord{std::move(id), FeatureMatrix(std::move(seg)), final_score, std::move(panel), {}});
    }
    return records;
}

DatasetManifest synth_manifest(const SynthConfig& config, const std::vector<SampleRecord>& records,
                               std::size_t train_count, const std::string& name) {
    DatasetManifest m;
    m.name = name;
    m.judge_count = config.judge_count;
    m.judge_range = config.judge_range;
    m.fusion_rule = config.rule;
    if (config.judge_count == 0) {
        m.score_min = config.judge_range.min;
        m.score_max = config.judge_range.max;
    } else {
        const double kept = static_cast<double>(config.rule.kept(config.judge_count));
        const bool uses_dd = config.rule.multiplier_source != MultiplierSource::None;
        const double dd_lo = uses_dd ? *std::min_element(config.dd_set.begin(), config.dd_set.end()) : 1.0;
        const double dd_hi = uses_dd ? *std::max_element(config.dd_set.begin(), config.dd_set.end()) : 1.0;
        const double lo = kept * config.judge_range.min;
        const double hi = kept * config.judge_range.max;
        m.score_min = std::min(lo * dd_lo, lo * dd_hi);
        m.score_max = std::max(hi * dd_lo, hi * dd_hi);
    }
    for (std::size_t i = 0; i < records.size(); ++i) (i < train_count ? m.train_ids : m.test_ids).push_back(records[i].id);
    m.validate();
    return m;
}

}  // namespace usdl
