#include "phmmw/plan7.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "phmmw/error.hpp"
#include "textutil.hpp"

namespace phmmw {

namespace {

constexpr double kStochasticTolerance = 1e-9;

ResidueVector normalized(ResidueVector v) {
    double sum = 0.0;
    for (double x : v) sum += x;
    if (!(sum > 0.0)) fail_input("InvalidParams", "distribution has zero mass");
    for (double& x : v) x /= sum;
    return v;
}

}  // namespace

ResidueVector default_background() {
    // Order ACDEFGHIKLMNPQRSTVWY.
    static const ResidueVector bg = normalized({0.0787945, 0.0151600, 0.0535222, 0.0668298, 0.0397062,
                                                0.0695071, 0.0229198, 0.0590092, 0.0594422, 0.0963728,
                                                0.0237718, 0.0414386, 0.0482904, 0.0395639, 0.0540978,
                                                0.0683364, 0.0540687, 0.0673417, 0.0114135, 0.0304133});
    return bg;
}

ResidueVector parse_background(std::string_view text) {
    ResidueVector bg{};
    std::array<bool, kAlphabetSize> seen{};
    for (auto line : detail::split_lines(text)) {
        line = detail::trim(line);
        if (line.empty() || line.front() == '#') continue;
        auto sep = line.find_first_of("= \t");
        if (sep == std::string_view::npos) fail_input("MalformedConfig", "bad background line '" + std::string(line) + "'");
        auto key = detail::trim(line.substr(0, sep));
        auto val = detail::trim(line.substr(sep + 1));
        while (!val.empty() && (val.front() == '=' || val.front() == ' ' || val.front() == '\t')) val.remove_prefix(1);
        auto aa = key.size() == 1 ? AminoAcid::from_char(key[0]) : std::nullopt;
        auto v = detail::parse_double(val);
        if (!aa || aa->is_unknown() || !v || !(*v > 0.0))
            fail_input("MalformedConfig", "bad background line '" + std::string(line) + "'");
        bg[aa->index()] = *v;
        seen[aa->index()] = true;
    }
    for (int a = 0; a < kAlphabetSize; ++a)
        if (!seen[a]) fail_input("MalformedConfig", std::string("background lacks residue ") + kResidues[a]);
    return normalized(bg);
}

void NullModel::validate() const {
    double sum = 0.0;
    for (double x : bg) {
        if (!(x > 0.0)) fail_input("InvalidParams", "null background must be positive");
        sum += x;
    }
    if (std::abs(sum - 1.0) > kStochasticTolerance) fail_input("InvalidParams", "null background must sum to 1");
    if (!(p1 > 0.0 && p1 < 1.0)) fail_input("InvalidParams", "null p1 must lie in (0,1)");
}

NullModel NullModel::for_length(std::size_t length) const {
    NullModel out = *this;
    out.p1 = static_cast<double>(length) / static_cast<double>(length + 1);
    if (length == 0) out.p1 = 0.5;
    return out;
}

void PseudocountConfig::validate() const {
    if (!(em_strength > 0.0) || !std::isfinite(em_strength)) fail_input("InvalidParams", "em_strength must be > 0");
    for (double x : bg)
        if (!(x > 0.0)) fail_input("InvalidParams", "background frequencies must be > 0");
    for (double a : alpha_tr)
        if (!(a > 0.0) || !std::isfinite(a)) fail_input("InvalidParams", "transition pseudocounts must be > 0");
}

PseudocountConfig PseudocountConfig::scaled(double factor) const {
    PseudocountConfig out = *this;
    out.em_strength *= factor;
    for (double& a : out.alpha_tr) a *= factor;
    return out;
}

PseudocountConfig parse_pseudocount_config(std::string_view text, const std::string& base_dir) {
    PseudocountConfig pc;
    std::size_t lineno = 0;
    for (auto line : detail::split_lines(text)) {
        ++lineno;
        line = detail::trim(line);
        if (line.empty() || line.front() == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string_view::npos)
            fail_input("MalformedConfig", "expected key=value at line " + std::to_string(lineno));
        auto key = detail::trim(line.substr(0, eq));
        auto val = detail::trim(line.substr(eq + 1));
        auto number = [&]() {
            auto v = detail::parse_double(val);
            if (!v) fail_input("MalformedConfig", "bad number for '" + std::string(key) + "' at line " + std::to_string(lineno));
            return *v;
        };
        if (key == "em_strength") {
            pc.em_strength = number();
        } else if (key == "alpha_tr") {
            pc.alpha_tr.fill(number());
        } else if (key == "scale_with_weights") {
            if (val != "true" && val != "false") fail_input("MalformedConfig", "scale_with_weights must be true|false");
            pc.scale_with_weights = val == "true";
        } else if (key == "background") {
            std::filesystem::path p{std::string(val)};
            if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
            pc.bg = parse_background(read_file(p.string()));
        } else {
            bool matched = false;
            for (int t = 0; t < kNumTransitions; ++t) {
                if (key == std::string("alpha_") + kTransitionNames[t]) {
                    pc.alpha_tr[t] = number();
                    matched = true;
                }
            }
            if (!matched) fail_input("MalformedConfig", "unknown key '" + std::string(key) + "'");
        }
    }
    pc.validate();
    return pc;
}

std::string Plan7Model::meta(std::string_view key) const {
    for (const auto& [k, v] : metadata)
        if (k == key) return v;
    return {};
}

void Plan7Model::set_meta(const std::string& key, std::string value) {
    for (auto& [k, v] : metadata) {
        if (k == key) {
            v = std::move(value);
            return;
        }
    }
    metadata.emplace_back(key, std::move(value));
}

bool transition_legal(std::size_t k, std::size_t num_nodes, Transition t) {
    switch (t) {
        case kMM:
        case kMI:
        case kIM:
        case kII: return true;
        case kMD: return k < num_nodes;
        case kDM: return k >= 1;
        case kDD: return k >= 1 && k < num_nodes;
        default: return false;
    }
}

namespace {

constexpr std::array<std::array<Transition, 3>, 3> kSourceGroups = {{
    {kMM, kMI, kMD},
    {kIM, kII, kNumTransitions},
    {kDM, kDD, kNumTransitions},
}};

void check_distribution(const double* p, std::size_t n, const std::string& what) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(p[i] >= 0.0) || !std::isfinite(p[i])) fail_input("MalformedModel", what + " has an invalid probability");
        sum += p[i];
    }
    if (std::abs(sum - 1.0) > kStochasticTolerance) fail_input("MalformedModel", what + " does not sum to 1");
}

}  // namespace

void Plan7Model::validate() const {
    const std::size_t k_max = length();
    if (k_max < 1) fail_input("MalformedModel", "model needs at least one node");
    if (match_columns.size() != k_max) fail_input("MalformedModel", "match column count differs from node count");
    null.validate();
    for (std::size_t k = 0; k <= k_max; ++k) {
        const auto& nd = nodes[k];
        const std::string tag = "node " + std::to_string(k);
        check_distribution(nd.match.data(), kAlphabetSize, tag + " match emission");
        check_distribution(nd.insert.data(), kAlphabetSize, tag + " insert emission");
        for (int t = 0; t < kNumTransitions; ++t)
            if (!transition_legal(k, k_max, static_cast<Transition>(t)) && nd.t[t] != 0.0)
                fail_input("MalformedModel", tag + " has an illegal transition " + kTransitionNames[t]);
        for (std::size_t g = 0; g < kSourceGroups.size(); ++g) {
            if (g == 2 && k == 0) continue;  // no D_0
            double sum = 0.0;
            for (auto t : kSourceGroups[g])
                if (t != kNumTransitions) {
                    if (!(nd.t[t] >= 0.0)) fail_input("MalformedModel", tag + " has a negative transition");
                    sum += nd.t[t];
                }
            if (std::abs(sum - 1.0) > kStochasticTolerance)
                fail_input("MalformedModel", tag + " transitions do not sum to 1");
        }
    }
    if (gumbel && !(gumbel->lambda > 0.0)) fail_input("MalformedModel", "gumbel lambda must be > 0");
}

std::vector<std::size_t> select_match_columns(const AnnotatedAlignment& aln, const WeightMatrix& s) {
    if (s.rows() != aln.num_sequences() || s.cols() != aln.num_columns())
        fail_input("DimensionMismatch", "weight matrix shape differs from alignment");
    std::vector<std::size_t> cols;
    for (std::size_t j = 0; j < aln.num_columns(); ++j) {
        double residue = 0.0;
        double total = 0.0;
        for (std::size_t i = 0; i < aln.num_sequences(); ++i) {
            total += s(i, j);
            if (aln.is_residue(i, j)) residue += s(i, j);
        }
        if (total > 0.0 && residue >= 0.5 * total) cols.push_back(j);
    }
    if (cols.empty()) fail_input("NoMatchColumns", "no column reaches 50% weighted occupancy");
    return cols;
}

ResidueVector weighted_emission_counts(const AnnotatedAlignment& aln, const WeightMatrix& s, std::size_t column) {
    ResidueVector c{};
    for (std::size_t i = 0; i < aln.num_sequences(); ++i) {
        const auto& cell = aln.cell(i, column);
        if (cell && !cell->is_unknown()) c[cell->index()] += s(i, column);
    }
    return c;
}

std::vector<PathState> training_path(const AnnotatedAlignment& aln, std::size_t row,
                                     const std::vector<std::size_t>& match_columns) {
    std::vector<PathState> path{{StateType::Begin, 0, std::nullopt}};
    std::size_t k = 0;
    std::size_t next_match = 0;
    for (std::size_t j = 0; j < aln.num_columns(); ++j) {
        const bool is_match = next_match < match_columns.size() && match_columns[next_match] == j;
        if (is_match) {
            ++next_match;
            ++k;
            path.push_back({aln.is_residue(row, j) ? StateType::Match : StateType::Delete, k, j});
        } else if (aln.is_residue(row, j)) {
            path.push_back({StateType::Insert, k, j});
        }
    }
    path.push_back({StateType::End, k, std::nullopt});

    // D_k I_k -> M_k (first inserted residue); I_k D_k+1 -> M_k+1 (last one).
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t p = 1; p + 2 < path.size(); ++p) {
            auto& a = path[p];
            auto& b = path[p + 1];
            if (a.type == StateType::Delete && b.type == StateType::Insert) {
                a = {StateType::Match, a.node, b.column};
                path.erase(path.begin() + static_cast<std::ptrdiff_t>(p + 1));
                changed = true;
                break;
            }
            if (a.type == StateType::Insert && b.type == StateType::Delete) {
                b = {StateType::Match, b.node, a.column};
                path.erase(path.begin() + static_cast<std::ptrdiff_t>(p));
                changed = true;
                break;
            }
        }
    }
    return path;
}

namespace {

bool is_delete(const PathState& st) { return st.type == StateType::Delete; }

Transition transition_between(const PathState& from, const PathState& to) {
    const bool from_match = from.type == StateType::Begin || from.type == StateType::Match;
    if (from_match) {
        if (to.type == StateType::Insert) return kMI;
        if (to.type == StateType::Delete) return kMD;
        return kMM;
    }
    if (from.type == StateType::Insert) return to.type == StateType::Insert ? kII : kIM;
    return to.type == StateType::Delete ? kDD : kDM;
}

}  // namespace

TransitionCounts weighted_transition_counts(const AnnotatedAlignment& aln, const WeightMatrix& s,
                                            const std::vector<std::size_t>& match_columns) {
    TransitionCounts counts(match_columns.size() + 1, TransitionVector{});
    for (std::size_t i = 0; i < aln.num_sequences(); ++i) {
        const auto path = training_path(aln, i, match_columns);
        for (std::size_t p = 0; p + 1 < path.size(); ++p) {
            const auto& k = path[p];
            const auto& l = path[p + 1];
            // Begin and End have no generating column and borrow the weight of
            // the state they are paired with.
            const double sk = k.column ? s(i, *k.column) : s(i, *l.column);
            const double sl = l.column ? s(i, *l.column) : sk;
            double f = 0.0;
            if (is_delete(k) && is_delete(l))
                f = 1.0;
            else if (is_delete(l))
                f = sk;
            else if (is_delete(k))
                f = sl;
            else
                f = (sk + sl) / 2.0;
            counts[k.node][transition_between(k, l)] += f;
        }
    }
    return counts;
}

ResidueVector estimate_emissions(const ResidueVector& counts, const PseudocountConfig& pc) {
    ResidueVector e{};
    double total = 0.0;
    for (int a = 0; a < kAlphabetSize; ++a) {
        e[a] = counts[a] + pc.em_strength * pc.bg[a];
        total += e[a];
    }
    for (double& x : e) x /= total;
    return e;
}

std::vector<TransitionVector> estimate_transitions(const TransitionCounts& counts, const PseudocountConfig& pc) {
    const std::size_t k_max = counts.size() - 1;
    std::vector<TransitionVector> out(counts.size(), TransitionVector{});
    for (std::size_t k = 0; k <= k_max; ++k) {
        for (const auto& group : kSourceGroups) {
            double total = 0.0;
            for (auto t : group)
                if (t != kNumTransitions && transition_legal(k, k_max, t)) total += counts[k][t] + pc.alpha_tr[t];
            if (total == 0.0) continue;
            for (auto t : group)
                if (t != kNumTransitions && transition_legal(k, k_max, t))
                    out[k][t] = (counts[k][t] + pc.alpha_tr[t]) / total;
        }
    }
    return out;
}

Plan7Model build_model(const AnnotatedAlignment& aln, const WeightMatrix& s, const PseudocountConfig& pc,
                       const NullModel& null, const BuildOptions& opts) {
    pc.validate();
    null.validate();
    const auto match_columns = select_match_columns(aln, s);
    for (double v : s.data())
        if (!std::isfinite(v) || v < 0.0) fail_input("InvalidWeight", "weights must be finite and non-negative");

    double scale = 1.0;
    if (pc.scale_with_weights) {
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t i = 0; i < aln.num_sequences(); ++i)
            for (std::size_t j = 0; j < aln.num_columns(); ++j)
                if (aln.is_residue(i, j)) {
                    sum += s(i, j);
                    ++n;
                }
        if (n > 0 && sum > 0.0) scale = sum / static_cast<double>(n);
    }
    const PseudocountConfig eff = scale == 1.0 ? pc : pc.scaled(scale);

    Plan7Model m;
    m.null = null;
    m.match_columns = match_columns;
    m.nodes.resize(match_columns.size() + 1);
    const ResidueVector bg = normalized(pc.bg);
    m.nodes[0].match = bg;
    for (std::size_t k = 0; k < m.nodes.size(); ++k) m.nodes[k].insert = bg;
    for (std::size_t k = 1; k < m.nodes.size(); ++k)
        m.nodes[k].match = estimate_emissions(weighted_emission_counts(aln, s, match_columns[k - 1]), eff);
    const auto trans = estimate_transitions(weighted_transition_counts(aln, s, match_columns), eff);
    for (std::size_t k = 0; k < m.nodes.size(); ++k) m.nodes[k].t = trans[k];

    std::string alpha;
    for (int t = 0; t < kNumTransitions; ++t) alpha += (t ? "," : "") + detail::format_shortest(pc.alpha_tr[t]);
    m.set_meta("scheme", opts.scheme);
    m.set_meta("seq_weighting", opts.seq_weighting);
    m.set_meta("nseq", std::to_string(aln.num_sequences()));
    m.set_meta("alignment_columns", std::to_string(aln.num_columns()));
    m.set_meta("match_rule", "weighted_occupancy>=0.5");
    m.set_meta("em_strength", detail::format_shortest(pc.em_strength));
    m.set_meta("alpha_tr", alpha);
    m.set_meta("pseudocount_scale", pc.scale_with_weights ? detail::format_g17(scale) : "off");
    m.set_meta("insert_emissions", "background");
    m.set_meta("path_repair", "promote_adjacent_insert");
    m.set_meta("boundary_state_weight", "partner_state");
    m.validate();
    return m;
}

// ---- serialization ----------------------------------------------------------

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {

constexpr std::string_view kMagic = "PHMMW 1";

template <std::size_t N>
void append_values(std::string& out, const char* tag, const std::array<double, N>& v) {
    out += tag;
    for (double x : v) out += ' ' + detail::format_g17(x);
    out += '\n';
}

std::string hex16(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace

std::string save_model(const Plan7Model& m) {
    std::string out(kMagic);
    out += '\n';
    for (const auto& [k, v] : m.metadata) out += "#" + k + " " + v + "\n";
    out += "LENG " + std::to_string(m.length()) + "\n";
    out += "ALPH " + std::string(kResidues) + "\n";
    out += "MATCHCOLS";
    for (auto c : m.match_columns) out += ' ' + std::to_string(c);
    out += '\n';
    out += "NULLP1 " + detail::format_g17(m.null.p1) + "\n";
    append_values(out, "NULLBG", m.null.bg);
    if (m.gumbel)
        out += "GUMBEL " + detail::format_g17(m.gumbel->mu) + " " + detail::format_g17(m.gumbel->lambda) + " " +
               std::to_string(m.gumbel->n_samples) + "\n";
    for (std::size_t k = 0; k < m.nodes.size(); ++k) {
        out += "NODE " + std::to_string(k) + "\n";
        append_values(out, "MAT", m.nodes[k].match);
        append_values(out, "INS", m.nodes[k].insert);
        append_values(out, "TRN", m.nodes[k].t);
    }
    out += "CHECKSUM " + hex16(fnv1a64(out)) + "\n";
    return out;
}

namespace {

class ModelReader {
public:
    explicit ModelReader(std::string_view body) : lines_(detail::split_lines(body)) {}

    bool done() const { return pos_ >= lines_.size(); }
    std::string_view peek() const { return lines_[pos_]; }

    std::vector<std::string_view> expect(std::string_view tag) {
        if (done()) malformed("unexpected end of file, expected " + std::string(tag));
        auto f = detail::split(lines_[pos_], ' ');
        if (f.empty() || f[0] != tag) malformed("expected '" + std::string(tag) + "' at line " + std::to_string(pos_ + 1));
        ++pos_;
        f.erase(f.begin());
        return f;
    }

    void skip() { ++pos_; }

    template <std::size_t N>
    std::array<double, N> values(std::string_view tag) {
        auto f = expect(tag);
        if (f.size() != N) malformed("wrong number of values for " + std::string(tag));
        std::array<double, N> out{};
        for (std::size_t i = 0; i < N; ++i) out[i] = number(f[i]);
        return out;
    }

    double number(std::string_view s) const {
        auto v = detail::parse_double(s);
        if (!v || !std::isfinite(*v)) malformed("bad number '" + std::string(s) + "'");
        return *v;
    }

    std::size_t integer(std::string_view s) const {
        auto v = detail::parse_uint(s);
        if (!v) malformed("bad integer '" + std::string(s) + "'");
        return static_cast<std::size_t>(*v);
    }

    [[noreturn]] static void malformed(const std::string& msg) { fail_input("MalformedModel", msg); }

private:
    std::vector<std::string_view> lines_;
    std::size_t pos_ = 0;
};

}  // namespace

Plan7Model load_model(std::string_view text) {
    const auto first_nl = text.find('\n');
    if (first_nl == std::string_view::npos) ModelReader::malformed("missing header");
    const auto header = text.substr(0, first_nl);
    if (header.substr(0, 6) != "PHMMW ") ModelReader::malformed("not a phmmw model file");
    if (header != kMagic) fail_input("UnsupportedVersion", "unsupported model version '" + std::string(header) + "'");

    const auto ck = text.rfind("CHECKSUM ");
    if (ck == std::string_view::npos || (ck > 0 && text[ck - 1] != '\n')) ModelReader::malformed("missing checksum line");
    auto ck_line = detail::trim(text.substr(ck + 9));
    if (!ck_line.empty() && ck_line.back() == '\n') ck_line.remove_suffix(1);
    ck_line = detail::trim(ck_line);
    const auto body = text.substr(0, ck);
    if (ck_line != hex16(fnv1a64(body)))
        fail_input("ChecksumMismatch", "model checksum " + std::string(ck_line) + " does not match contents");

    ModelReader r(body.substr(first_nl + 1));
    Plan7Model m;
    while (!r.done() && !r.peek().empty() && r.peek().front() == '#') {
        auto line = r.peek().substr(1);
        auto sp = line.find(' ');
        if (sp == std::string_view::npos) ModelReader::malformed("bad metadata line");
        m.metadata.emplace_back(std::string(line.substr(0, sp)), std::string(line.substr(sp + 1)));
        r.skip();
    }
    auto leng = r.expect("LENG");
    if (leng.size() != 1) ModelReader::malformed("bad LENG line");
    const std::size_t k_max = r.integer(leng[0]);
    if (k_max < 1 || k_max > 1000000) ModelReader::malformed("bad model length");
    auto alph = r.expect("ALPH");
    if (alph.size() != 1 || alph[0] != kResidues) ModelReader::malformed("unexpected alphabet");
    for (auto c : r.expect("MATCHCOLS")) m.match_columns.push_back(r.integer(c));
    m.null.p1 = r.values<1>("NULLP1")[0];
    m.null.bg = r.values<kAlphabetSize>("NULLBG");
    if (!r.done() && r.peek().substr(0, 7) == "GUMBEL ") {
        auto g = r.expect("GUMBEL");
        if (g.size() != 3) ModelReader::malformed("bad GUMBEL line");
        m.gumbel = GumbelParams{r.number(g[0]), r.number(g[1]), r.integer(g[2])};
    }
    m.nodes.resize(k_max + 1);
    for (std::size_t k = 0; k <= k_max; ++k) {
        auto nd = r.expect("NODE");
        if (nd.size() != 1 || r.integer(nd[0]) != k) ModelReader::malformed("node out of order");
        m.nodes[k].match = r.values<kAlphabetSize>("MAT");
        m.nodes[k].insert = r.values<kAlphabetSize>("INS");
        m.nodes[k].t = r.values<kNumTransitions>("TRN");
    }
    if (!r.done()) ModelReader::malformed("trailing content after last node");
    m.validate();
    return m;
}

}  // namespace phmmw
