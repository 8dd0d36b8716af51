#include "usdl/checkpoint.hpp"

#include "usdl/error.hpp"
#include "usdl/textio.hpp"

#include <fstream>
#include <istream>
#include <ostream>

namespace usdl {

namespace {

constexpr const char* kArrayNames[] = {"w1", "b1", "w2", "b2", "w3", "b3"};

void write_head(std::ostream& os, const std::string& label, const HeadParams& head) {
    const HeadShape s = head.shape();
    os << "head " << label << ' ' << s.input_dim << ' ' << s.hidden1 << ' ' << s.hidden2 << ' ' << s.output_dim << '\n';
    const auto arrays = head.arrays();
    for (std::size_t a = 0; a < arrays.size(); ++a) {
        os << kArrayNames[a];
        for (double v : arrays[a]) os << ' ' << format_exact(v);
        os << '\n';
    }
}

class LineReader {
public:
    explicit LineReader(std::istream& is) : is_(is) {}

    std::vector<std::string> next() {
        std::string line;
        while (std::getline(is_, line)) {
            ++line_no_;
            auto tok = split_whitespace(line);
            if (!tok.empty()) return tok;
        }
        fail("unexpected end of checkpoint");
    }

    std::vector<std::string> expect(const std::string& key, std::size_t values) {
        auto tok = next();
        if (tok[0] != key) fail("expected '" + key + "', found '" + tok[0] + "'");
        if (tok.size() != values + 1) fail("'" + key + "' expects " + std::to_string(values) + " values");
        return tok;
    }

    std::string context() const { return "checkpoint line " + std::to_string(line_no_); }

    [[noreturn]] void fail(const std::string& why) const { throw Error(ErrorCode::ParseError, context() + ": " + why); }

private:
    std::istream& is_;
    std::size_t line_no_ = 0;
};

std::size_t parse_size(LineReader& r, const std::string& text) {
    const long long v = parse_integer(text, r.context());
    if (v < 0) r.fail("negative size");
    return static_cast<std::size_t>(v);
}

HeadParams read_head(LineReader& r, const std::string& label) {
    auto tok = r.expect("head", 5);
    if (tok[1] != label) r.fail("expected head '" + label + "', found '" + tok[1] + "'");
    HeadShape shape{parse_size(r, tok[2]), parse_size(r, tok[3]), parse_size(r, tok[4]), parse_size(r, tok[5])};
    HeadParams head;
    try {
        head = HeadParams::zeros(shape);
    } catch (const Error& e) {
        r.fail(e.what());
    }
    auto arrays = head.arrays();
    for (std::size_t a = 0; a < arrays.size(); ++a) {
        auto values = r.expect(kArrayNames[a], arrays[a].size());
        for (std::size_t i = 0; i < arrays[a].size(); ++i) arrays[a][i] = parse_real(values[i + 1], r.context());
    }
    return head;
}

}  // namespace

void write_checkpoint(std::ostream& os, const Checkpoint& c) {
    c.model.validate();
    const TrainConfig& t = c.train;
    os << "usdl-checkpoint 1\n";
    os << "mode " << c.mode << '\n';
    os << "pooling " << to_string(t.pooling) << '\n';
    os << "learning_rate " << format_exact(t.learning_rate) << '\n';
    os << "beta1 " << format_exact(t.beta1) << '\n';
    os << "beta2 " << format_exact(t.beta2) << '\n';
    os << "epsilon " << format_exact(t.epsilon) << '\n';
    os << "epochs " << t.epochs << '\n';
    os << "batch_size " << t.batch_size << '\n';
    os << "rng_seed " << t.rng_seed << '\n';
    os << "hidden " << t.hidden1 << ' ' << t.hidden2 << '\n';
    os << "dd_weight " << format_exact(t.dd_weight) << '\n';
    os << "rule " << c.rule.drop_low << ' ' << c.rule.drop_high << ' ' << to_string(c.rule.multiplier_source) << '\n';
    os << "heads " << c.model.heads.size() << '\n';
    os << "dd_head " << (c.model.dd_head ? 1 : 0) << '\n';
    for (std::size_t k = 0; k < c.model.heads.size(); ++k) write_head(os, std::to_string(k), c.model.heads[k]);
    if (c.model.dd_head) write_head(os, "dd", *c.model.dd_head);
}

Checkpoint read_checkpoint(std::istream& is) {
    LineReader r(is);
    auto header = r.next();
    if (header.size() != 2 || header[0] != "usdl-checkpoint" || header[1] != "1") r.fail("not a usdl-checkpoint v1 file");

    Checkpoint c;
    c.mode = r.expect("mode", 1)[1];
    TrainConfig& t = c.train;
    try {
        t.pooling = parse_pooling(r.expect("pooling", 1)[1]);
    } catch (const Error& e) {
        r.fail(e.what());
    }
    t.learning_rate = parse_real(r.expect("learning_rate", 1)[1], r.context());
    t.beta1 = parse_real(r.expect("beta1", 1)[1], r.context());
    t.beta2 = parse_real(r.expect("beta2", 1)[1], r.context());
    t.epsilon = parse_real(r.expect("epsilon", 1)[1], r.context());
    t.epochs = static_cast<int>(parse_integer(r.expect("epochs", 1)[1], r.context()));
    t.batch_size = static_cast<int>(parse_integer(r.expect("batch_size", 1)[1], r.context()));
    {
        const auto tok = r.expect("rng_seed", 1);
        try {
            std::size_t used = 0;
            t.rng_seed = std::stoull(tok[1], &used);
            if (used != tok[1].size()) r.fail("bad rng_seed");
        } catch (const std::logic_error&) {
            r.fail("bad rng_seed");
        }
    }
    {
        const auto tok = r.expect("hidden", 2);
        t.hidden1 = parse_size(r, tok[1]);
        t.hidden2 = parse_size(r, tok[2]);
    }
    t.dd_weight = parse_real(r.expect("dd_weight", 1)[1], r.context());
    {
        const auto tok = r.expect("rule", 3);
        c.rule.drop_low = static_cast<int>(parse_integer(tok[1], r.context()));
        c.rule.drop_high = static_cast<int>(parse_integer(tok[2], r.context()));
        try {
            c.rule.multiplier_source = parse_multiplier_source(tok[3]);
        } catch (const Error& e) {
            r.fail(e.what());
        }
    }
    const std::size_t heads = parse_size(r, r.expect("heads", 1)[1]);
    const std::size_t has_dd = parse_size(r, r.expect("dd_head", 1)[1]);
    if (heads == 0) r.fail("checkpoint has no heads");
    if (has_dd > 1) r.fail("dd_head must be 0 or 1");
    for (std::size_t k = 0; k < heads; ++k) c.model.heads.push_back(read_head(r, std::to_string(k)));
    if (has_dd) c.model.dd_head = read_head(r, "dd");
    try {
        c.model.validate();
    } catch (const Error& e) {
        r.fail(e.what());
    }
    return c;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    write_checkpoint(out, checkpoint);
    if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open checkpoint " + path.string());
    return read_checkpoint(in);
}

}  // namespace usdl
