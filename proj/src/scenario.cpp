#include "mayer/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace mayer {

// ---------------------------------------------------------------------------
// FieldExpr: sums of  coef * prod{ x_i^k | sin(x_i) | cos(x_i) }
// ---------------------------------------------------------------------------

namespace {

struct Cursor {
    const std::string& s;
    std::size_t pos = 0;
    bool done() const { return pos >= s.size(); }
    char peek() const { return s[pos]; }
    void skip_ws() {
        while (!done() && std::isspace(unsigned(s[pos]))) ++pos;
    }
};

[[noreturn]] void expr_fail(const std::string& text, const std::string& why) {
    throw ModelInvalid("field expression '" + text + "': " + why);
}

} // namespace

double FieldExpr::factor_eval(const Factor& f, double v) {
    switch (f.kind) {
        case FactorKind::power: return std::pow(v, f.power);
        case FactorKind::sine: return std::sin(v);
        case FactorKind::cosine: return std::cos(v);
    }
    return 0.0;
}

double FieldExpr::factor_d1(const Factor& f, double v) {
    switch (f.kind) {
        case FactorKind::power:
            return f.power == 0 ? 0.0 : f.power * std::pow(v, f.power - 1);
        case FactorKind::sine: return std::cos(v);
        case FactorKind::cosine: return -std::sin(v);
    }
    return 0.0;
}

double FieldExpr::factor_d2(const Factor& f, double v) {
    switch (f.kind) {
        case FactorKind::power:
            return f.power < 2 ? 0.0
                               : double(f.power) * double(f.power - 1) *
                                     std::pow(v, f.power - 2);
        case FactorKind::sine: return -std::sin(v);
        case FactorKind::cosine: return -std::cos(v);
    }
    return 0.0;
}

FieldExpr FieldExpr::parse(const std::string& text) {
    FieldExpr out;
    Cursor c{text};
    c.skip_ws();
    if (c.done()) return out; // empty expression == 0

    double sign = 1.0;
    bool expect_term = true;
    bool pending_star = false;
    Term term;
    bool have_coef = false;

    auto flush = [&]() {
        if (!have_coef && term.factors.empty()) return;
        if (!have_coef) term.coef = sign;
        else term.coef *= sign;
        out.terms_.push_back(term);
        term = Term{};
        term.coef = 1.0;
        have_coef = false;
        sign = 1.0;
    };
    term.coef = 1.0;

    while (true) {
        c.skip_ws();
        if (c.done()) break;
        char ch = c.peek();
        if (ch == '*') {
            if (pending_star || expect_term)
                expr_fail(text, "misplaced '*'");
            pending_star = true;
            ++c.pos;
            continue;
        }
        if (ch == '+' || ch == '-') {
            if (pending_star) expr_fail(text, "dangling '*'");
            if (!expect_term) {
                flush();
                expect_term = true;
            }
            if (ch == '-') sign = -sign;
            ++c.pos;
            continue;
        }
        expect_term = false;
        pending_star = false;
        if (std::isdigit(unsigned(ch)) || ch == '.') {
            std::size_t used = 0;
            double v = std::stod(text.substr(c.pos), &used);
            c.pos += used;
            term.coef = (have_coef ? term.coef : 1.0) * v;
            have_coef = true;
            continue;
        }
        if (ch == 'x') {
            ++c.pos;
            std::size_t start = c.pos;
            while (!c.done() && std::isdigit(unsigned(c.peek()))) ++c.pos;
            if (start == c.pos) expr_fail(text, "expected index after 'x'");
            Factor f;
            f.kind = FactorKind::power;
            f.var = std::stoi(text.substr(start, c.pos - start));
            f.power = 1;
            if (!c.done() && c.peek() == '^') {
                ++c.pos;
                std::size_t p0 = c.pos;
                while (!c.done() && std::isdigit(unsigned(c.peek()))) ++c.pos;
                if (p0 == c.pos) expr_fail(text, "expected power after '^'");
                f.power = std::stoi(text.substr(p0, c.pos - p0));
            }
            term.factors.push_back(f);
            have_coef = have_coef || true;
            continue;
        }
        if (text.compare(c.pos, 4, "sin(") == 0 ||
            text.compare(c.pos, 4, "cos(") == 0) {
            Factor f;
            f.kind = text[c.pos] == 's' ? FactorKind::sine : FactorKind::cosine;
            c.pos += 4;
            if (c.done() || c.peek() != 'x') expr_fail(text, "expected x<i> inside sin/cos");
            ++c.pos;
            std::size_t start = c.pos;
            while (!c.done() && std::isdigit(unsigned(c.peek()))) ++c.pos;
            if (start == c.pos) expr_fail(text, "expected index after 'x'");
            f.var = std::stoi(text.substr(start, c.pos - start));
            if (c.done() || c.peek() != ')') expr_fail(text, "missing ')'");
            ++c.pos;
            term.factors.push_back(f);
            have_coef = have_coef || true;
            continue;
        }
        expr_fail(text, std::string("unexpected character '") + ch + "'");
    }
    if (pending_star) expr_fail(text, "dangling '*'");
    flush();
    return out;
}

int FieldExpr::max_var() const {
    int m = 0;
    for (const auto& t : terms_)
        for (const auto& f : t.factors) m = std::max(m, f.var);
    return m;
}

double FieldExpr::eval(const Vec& x) const {
    double sum = 0.0;
    for (const auto& t : terms_) {
        double v = t.coef;
        for (const auto& f : t.factors) v *= factor_eval(f, x(f.var - 1));
        sum += v;
    }
    return sum;
}

Vec FieldExpr::grad(const Vec& x) const {
    Vec g = Vec::Zero(x.size());
    for (const auto& t : terms_) {
        for (std::size_t j = 0; j < t.factors.size(); ++j) {
            double v = t.coef;
            for (std::size_t k = 0; k < t.factors.size(); ++k) {
                const auto& f = t.factors[k];
                v *= (k == j) ? factor_d1(f, x(f.var - 1))
                              : factor_eval(f, x(f.var - 1));
            }
            g(t.factors[j].var - 1) += v;
        }
    }
    return g;
}

Mat FieldExpr::hess(const Vec& x) const {
    Mat H = Mat::Zero(x.size(), x.size());
    for (const auto& t : terms_) {
        const auto& fs = t.factors;
        for (std::size_t j = 0; j < fs.size(); ++j) {
            for (std::size_t k = 0; k < fs.size(); ++k) {
                double v = t.coef;
                if (j == k) {
                    for (std::size_t l = 0; l < fs.size(); ++l)
                        v *= (l == j) ? factor_d2(fs[l], x(fs[l].var - 1))
                                      : factor_eval(fs[l], x(fs[l].var - 1));
                } else {
                    for (std::size_t l = 0; l < fs.size(); ++l) {
                        if (l == j) v *= factor_d1(fs[l], x(fs[l].var - 1));
                        else if (l == k) v *= factor_d1(fs[l], x(fs[l].var - 1));
                        else v *= factor_eval(fs[l], x(fs[l].var - 1));
                    }
                }
                H(fs[j].var - 1, fs[k].var - 1) += v;
            }
        }
    }
    return H;
}

// ---------------------------------------------------------------------------
// Scenario files: sections of key = value lines
// ---------------------------------------------------------------------------

namespace {

struct Entry {
    std::string value;
    int line = 0;
    mutable bool used = false;
};

struct KvFile {
    std::map<std::string, Entry> entries; // "section.key"

    bool has(const std::string& sk) const { return entries.count(sk) > 0; }

    const Entry& get(const std::string& sk) const {
        auto it = entries.find(sk);
        if (it == entries.end())
            throw ScenarioParseError(0, sk, "required key is missing");
        it->second.used = true;
        return it->second;
    }

    std::string get_string(const std::string& sk) const { return get(sk).value; }

    double get_double(const std::string& sk) const {
        const Entry& e = get(sk);
        try {
            std::size_t used = 0;
            double v = std::stod(e.value, &used);
            while (used < e.value.size() && std::isspace(unsigned(e.value[used])))
                ++used;
            if (used != e.value.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            throw ScenarioParseError(e.line, sk, "expected a real number, got '" +
                                                     e.value + "'");
        }
    }

    int get_int(const std::string& sk) const {
        const double v = get_double(sk);
        if (v != std::floor(v))
            throw ScenarioParseError(get(sk).line, sk, "expected an integer");
        return int(v);
    }

    bool get_bool(const std::string& sk) const {
        const Entry& e = get(sk);
        if (e.value == "true" || e.value == "1") return true;
        if (e.value == "false" || e.value == "0") return false;
        throw ScenarioParseError(e.line, sk, "expected true/false");
    }

    Vec get_vec(const std::string& sk) const {
        const Entry& e = get(sk);
        std::istringstream is(e.value);
        std::vector<double> vals;
        double v;
        while (is >> v) vals.push_back(v);
        if (!is.eof())
            throw ScenarioParseError(e.line, sk, "expected space-separated reals");
        if (vals.empty())
            throw ScenarioParseError(e.line, sk, "expected at least one value");
        Vec out(vals.size());
        for (std::size_t i = 0; i < vals.size(); ++i) out(int(i)) = vals[i];
        return out;
    }

    Mat get_mat(const std::string& sk) const {
        const Entry& e = get(sk);
        std::vector<std::vector<double>> rows;
        std::stringstream ss(e.value);
        std::string row;
        while (std::getline(ss, row, ';')) {
            std::istringstream is(row);
            std::vector<double> vals;
            double v;
            while (is >> v) vals.push_back(v);
            if (vals.empty())
                throw ScenarioParseError(e.line, sk, "empty matrix row");
            rows.push_back(vals);
        }
        if (rows.empty())
            throw ScenarioParseError(e.line, sk, "expected a matrix");
        Mat out(rows.size(), rows[0].size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != rows[0].size())
                throw ScenarioParseError(e.line, sk, "ragged matrix rows");
            for (std::size_t j = 0; j < rows[i].size(); ++j)
                out(int(i), int(j)) = rows[i][j];
        }
        return out;
    }
};

KvFile tokenize(const std::string& text) {
    KvFile kv;
    std::istringstream is(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        // strip comments and whitespace
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ScenarioParseError(lineno, line, "unterminated section header");
            section = line.substr(1, line.size() - 2);
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ScenarioParseError(lineno, line, "expected key = value");
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        auto trim = [](std::string& s) {
            auto a = s.find_first_not_of(" \t");
            auto b = s.find_last_not_of(" \t");
            s = a == std::string::npos ? "" : s.substr(a, b - a + 1);
        };
        trim(key);
        trim(value);
        if (key.empty())
            throw ScenarioParseError(lineno, line, "empty key");
        std::string sk = section.empty() ? key : section + "." + key;
        if (kv.entries.count(sk))
            throw ScenarioParseError(lineno, sk, "duplicate key");
        kv.entries[sk] = Entry{value, lineno, false};
    }
    return kv;
}

TerminalCost cost_from_expr(const FieldExpr& expr) {
    TerminalCost cost;
    cost.value = [expr](const Vec& x) { return expr.eval(x); };
    cost.grad = [expr](const Vec& x) { return expr.grad(x); };
    cost.hess = [expr](const Vec& x) { return expr.hess(x); };
    cost.regularity = CostRegularity::C2;
    return cost;
}

} // namespace

const std::vector<std::string>& known_check_names() {
    static const std::vector<std::string> names{
        "validate",       "first_order",      "subjet",
        "superjet",       "hessian_forward",  "hessian_backward",
        "comparison",     "regularity"};
    return names;
}

ScenarioFile parse_scenario_text(const std::string& text) {
    KvFile kv = tokenize(text);
    ScenarioFile out;

    out.scenario.label = kv.has("label") ? kv.get_string("label") : "scenario";

    const std::string family = kv.get_string("model.family");
    const int dim = kv.get_int("model.dim");
    if (family == "interval_box") {
        out.scenario.model =
            make_interval_box_model(dim, kv.get_double("model.radius"));
    } else if (family == "affine_control") {
        Mat g = kv.get_mat("model.g");
        if (int(g.rows()) != dim)
            throw ScenarioParseError(kv.get("model.g").line, "model.g",
                                     "g must have dim rows");
        const int m = int(g.cols());
        std::vector<FieldExpr> h(static_cast<std::size_t>(dim));
        for (int i = 0; i < dim; ++i) {
            const std::string key = "model.h" + std::to_string(i + 1);
            if (kv.has(key)) {
                try {
                    h[std::size_t(i)] = FieldExpr::parse(kv.get_string(key));
                } catch (const ModelInvalid& e) {
                    throw ScenarioParseError(kv.get(key).line, key, e.what());
                }
                if (h[std::size_t(i)].max_var() > dim)
                    throw ScenarioParseError(kv.get(key).line, key,
                                             "field references x beyond dim");
            }
        }
        auto h_field = [h, dim](const Vec& x) {
            Vec v(dim);
            for (int i = 0; i < dim; ++i) v(i) = h[std::size_t(i)].eval(x);
            return v;
        };
        AffineControlOptions opts;
        opts.g_constant = true;
        opts.h_jacobian = [h, dim](const Vec& x) {
            Mat J(dim, dim);
            for (int i = 0; i < dim; ++i) J.row(i) = h[std::size_t(i)].grad(x).transpose();
            return J;
        };
        opts.h_hessians = [h, dim](const Vec& x) {
            std::vector<Mat> out_h;
            for (int i = 0; i < dim; ++i) out_h.push_back(h[std::size_t(i)].hess(x));
            return out_h;
        };
        out.scenario.model = make_affine_control_model(
            h_field, [g](const Vec&) { return g; }, dim, m, opts);
    } else {
        throw ScenarioParseError(kv.get("model.family").line, "model.family",
                                 "unknown family '" + family + "'");
    }
    if (kv.has("model.growth_gamma"))
        out.scenario.model.growth_gamma = kv.get_double("model.growth_gamma");

    const std::string cost_type = kv.get_string("cost.type");
    if (cost_type == "quadratic") {
        Mat A = kv.get_mat("cost.A");
        Vec b = kv.has("cost.b") ? kv.get_vec("cost.b") : Vec(Vec::Zero(dim));
        double c = kv.has("cost.c") ? kv.get_double("cost.c") : 0.0;
        if (int(A.rows()) != dim || int(A.cols()) != dim)
            throw ScenarioParseError(kv.get("cost.A").line, "cost.A",
                                     "A must be dim x dim");
        if (int(b.size()) != dim)
            throw ScenarioParseError(kv.get("cost.b").line, "cost.b",
                                     "b must have dim entries");
        out.scenario.cost = make_quadratic_cost(A, b, c);
    } else if (cost_type == "polynomial") {
        const Entry& e = kv.get("cost.poly");
        FieldExpr expr;
        try {
            expr = FieldExpr::parse(e.value);
        } catch (const ModelInvalid& err) {
            throw ScenarioParseError(e.line, "cost.poly", err.what());
        }
        if (expr.max_var() > dim)
            throw ScenarioParseError(e.line, "cost.poly",
                                     "cost references x beyond dim");
        out.scenario.cost = cost_from_expr(expr);
    } else {
        throw ScenarioParseError(kv.get("cost.type").line, "cost.type",
                                 "unknown cost type '" + cost_type + "'");
    }
    if (kv.has("cost.semiconcave"))
        out.scenario.cost.semiconcave = kv.get_bool("cost.semiconcave");

    out.scenario.t0 = kv.get_double("horizon.t0");
    out.scenario.T = kv.get_double("horizon.T");
    if (!(out.scenario.T > out.scenario.t0))
        throw ScenarioParseError(kv.get("horizon.T").line, "horizon.T",
                                 "requires T > t0");

    out.scenario.x0 = kv.get_vec("initial.x0");
    if (int(out.scenario.x0.size()) != dim)
        throw ScenarioParseError(kv.get("initial.x0").line, "initial.x0",
                                 "x0 must have dim entries");

    out.grid.dim = dim;
    out.grid.t0 = out.scenario.t0;
    out.grid.T = out.scenario.T;
    Vec lower = kv.get_vec("grid.lower");
    Vec upper = kv.get_vec("grid.upper");
    auto expand = [dim](Vec v) {
        if (int(v.size()) == 1 && dim > 1) return Vec(Vec::Constant(dim, v(0)));
        return v;
    };
    out.grid.lower = expand(lower);
    out.grid.upper = expand(upper);
    if (int(out.grid.lower.size()) != dim || int(out.grid.upper.size()) != dim)
        throw ScenarioParseError(kv.get("grid.lower").line, "grid.lower",
                                 "corner must have dim entries");
    out.grid.points_per_axis = kv.get_int("grid.points_per_axis");
    out.grid.time_steps = kv.get_int("grid.time_steps");
    if (kv.has("grid.error_constant"))
        out.error_constant = kv.get_double("grid.error_constant");

    if (kv.has("oracle.velocity_samples"))
        out.velocity_samples = kv.get_int("oracle.velocity_samples");

    if (kv.has("verify.terminal_state")) {
        Vec z = kv.get_vec("verify.terminal_state");
        if (int(z.size()) != dim)
            throw ScenarioParseError(kv.get("verify.terminal_state").line,
                                     "verify.terminal_state",
                                     "must have dim entries");
        out.verify.terminal_state = z;
    }
    if (kv.has("verify.checks")) {
        const Entry& e = kv.get("verify.checks");
        std::istringstream is(e.value);
        std::string name;
        while (is >> name) {
            if (std::find(known_check_names().begin(), known_check_names().end(),
                          name) == known_check_names().end())
                throw ScenarioParseError(e.line, "verify.checks",
                                         "unknown check '" + name + "'");
            out.verify.checks.push_back(name);
        }
    }
    if (kv.has("verify.steps")) out.verify.steps = kv.get_int("verify.steps");
    if (kv.has("verify.sample_times"))
        out.verify.sample_times = kv.get_int("verify.sample_times");
    if (kv.has("verify.probe_radius_cells"))
        out.verify.probe_radius_cells = kv.get_double("verify.probe_radius_cells");
    if (kv.has("verify.subjet_R0")) out.verify.subjet_R0 = kv.get_mat("verify.subjet_R0");
    if (kv.has("verify.superjet_Q")) out.verify.superjet_Q = kv.get_mat("verify.superjet_Q");

    for (const auto& [sk, entry] : kv.entries) {
        if (!entry.used && sk != "label")
            throw ScenarioParseError(entry.line, sk, "unknown key");
    }

    out.scenario.check_valid();
    out.grid.check_valid();
    return out;
}

ScenarioFile load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open scenario file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    ScenarioFile f = parse_scenario_text(ss.str());
    if (f.scenario.label == "scenario") {
        // default label: file stem
        auto slash = path.find_last_of("/\\");
        std::string stem = slash == std::string::npos ? path : path.substr(slash + 1);
        auto dot = stem.find_last_of('.');
        if (dot != std::string::npos) stem = stem.substr(0, dot);
        f.scenario.label = stem;
    }
    return f;
}

} // namespace mayer
