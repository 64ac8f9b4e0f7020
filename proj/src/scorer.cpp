#include "phmmw/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "phmmw/error.hpp"
#include "phmmw/random.hpp"

namespace phmmw {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe_log(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

double log_sum(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double hi = std::max(a, b);
    return hi + std::log1p(std::exp(-std::abs(a - b)));
}

// Log-space copy of a model's parameters.
struct LogModel {
    std::size_t k_max = 0;
    std::vector<std::array<double, kAlphabetSize>> match;
    std::vector<std::array<double, kAlphabetSize>> insert;
    std::vector<TransitionVector> t;

    explicit LogModel(const Plan7Model& m) : k_max(m.length()) {
        match.resize(k_max + 1);
        insert.resize(k_max + 1);
        t.resize(k_max + 1);
        for (std::size_t k = 0; k <= k_max; ++k) {
            for (int a = 0; a < kAlphabetSize; ++a) {
                match[k][a] = safe_log(m.nodes[k].match[a]);
                insert[k][a] = safe_log(m.nodes[k].insert[a]);
            }
            for (int x = 0; x < kNumTransitions; ++x) t[k][x] = safe_log(m.nodes[k].t[x]);
        }
    }

    // X marginalizes over the alphabet, which sums to 1.
    double em_match(std::size_t k, AminoAcid a) const { return a.is_unknown() ? 0.0 : match[k][a.index()]; }
    double em_insert(std::size_t k, AminoAcid a) const { return a.is_unknown() ? 0.0 : insert[k][a.index()]; }
};

void check_sequence(const Plan7Model& m, const std::vector<AminoAcid>& seq) {
    if (seq.empty()) fail_input("EmptySequence", "cannot score an empty sequence");
    if (m.length() < 1) fail_input("MalformedModel", "model has no nodes");
}

struct Grid {
    std::size_t cols;
    std::vector<double> v;
    Grid(std::size_t rows, std::size_t c) : cols(c), v(rows * c, kNegInf) {}
    double& operator()(std::size_t k, std::size_t i) { return v[k * cols + i]; }
    double operator()(std::size_t k, std::size_t i) const { return v[k * cols + i]; }
};

enum Pred : std::uint8_t { kFromM, kFromD, kFromI, kFromNone };

}  // namespace

double null_log_prob(const std::vector<AminoAcid>& residues, const NullModel& null) {
    double lp = static_cast<double>(residues.size()) * std::log(null.p1) + std::log1p(-null.p1);
    for (auto a : residues)
        if (!a.is_unknown()) lp += std::log(null.bg[a.index()]);
    return lp;
}

Hit viterbi(const Plan7Model& m, const std::vector<AminoAcid>& seq, const NullModel& null) {
    check_sequence(m, seq);
    const LogModel lm(m);
    const std::size_t K = lm.k_max;
    const std::size_t L = seq.size();
    Grid vm(K + 1, L + 1), vi(K + 1, L + 1), vd(K + 1, L + 1);
    std::vector<Pred> pm((K + 1) * (L + 1), kFromNone), pi(pm), pd(pm);
    auto at = [&](std::size_t k, std::size_t i) { return k * (L + 1) + i; };

    vm(0, 0) = 0.0;  // B
    for (std::size_t i = 0; i <= L; ++i) {
        for (std::size_t k = 0; k <= K; ++k) {
            if (i > 0 && k > 0) {
                const auto& t = lm.t[k - 1];
                // Candidate order M, D, I with strict improvement keeps the
                // preference M > D > I on ties.
                double best = vm(k - 1, i - 1) + t[kMM];
                Pred from = kFromM;
                if (double c = vd(k - 1, i - 1) + t[kDM]; c > best) best = c, from = kFromD;
                if (double c = vi(k - 1, i - 1) + t[kIM]; c > best) best = c, from = kFromI;
                if (best != kNegInf) {
                    vm(k, i) = best + lm.em_match(k, seq[i - 1]);
                    pm[at(k, i)] = from;
                }
            }
            if (i > 0) {
                const auto& t = lm.t[k];
                double best = vm(k, i - 1) + t[kMI];
                Pred from = kFromM;
                if (double c = vi(k, i - 1) + t[kII]; c > best) best = c, from = kFromI;
                if (best != kNegInf) {
                    vi(k, i) = best + lm.em_insert(k, seq[i - 1]);
                    pi[at(k, i)] = from;
                }
            }
            if (k > 0) {
                const auto& t = lm.t[k - 1];
                double best = vm(k - 1, i) + t[kMD];
                Pred from = kFromM;
                if (double c = vd(k - 1, i) + t[kDD]; c > best) best = c, from = kFromD;
                if (best != kNegInf) {
                    vd(k, i) = best;
                    pd[at(k, i)] = from;
                }
            }
        }
    }

    const auto& te = lm.t[K];
    double best = vm(K, L) + te[kMM];
    Pred state = kFromM;
    if (double c = vd(K, L) + te[kDM]; c > best) best = c, state = kFromD;
    if (double c = vi(K, L) + te[kIM]; c > best) best = c, state = kFromI;

    Hit hit;
    hit.bits = (best - null_log_prob(seq, null)) / std::numbers::ln2;
    if (best == kNegInf) return hit;

    std::vector<TraceStep> rev{{StateType::End, K, std::nullopt}};
    std::size_t k = K;
    std::size_t i = L;
    while (!(k == 0 && i == 0 && state == kFromM)) {
        Pred prev = kFromNone;
        switch (state) {
            case kFromM:
                rev.push_back({StateType::Match, k, i - 1});
                prev = pm[at(k, i)];
                --k;
                --i;
                break;
            case kFromI:
                rev.push_back({StateType::Insert, k, i - 1});
                prev = pi[at(k, i)];
                --i;
                break;
            case kFromD:
                rev.push_back({StateType::Delete, k, std::nullopt});
                prev = pd[at(k, i)];
                --k;
                break;
            case kFromNone: fail("InternalError", "broken viterbi traceback");
        }
        state = prev;
    }
    rev.push_back({StateType::Begin, 0, std::nullopt});
    hit.path.assign(rev.rbegin(), rev.rend());
    return hit;
}

double forward(const Plan7Model& m, const std::vector<AminoAcid>& seq, const NullModel& null) {
    check_sequence(m, seq);
    const LogModel lm(m);
    const std::size_t K = lm.k_max;
    const std::size_t L = seq.size();
    Grid fm(K + 1, L + 1), fi(K + 1, L + 1), fd(K + 1, L + 1);
    fm(0, 0) = 0.0;
    for (std::size_t i = 0; i <= L; ++i) {
        for (std::size_t k = 0; k <= K; ++k) {
            if (i > 0 && k > 0) {
                const auto& t = lm.t[k - 1];
                double s = log_sum(log_sum(fm(k - 1, i - 1) + t[kMM], fd(k - 1, i - 1) + t[kDM]),
                                   fi(k - 1, i - 1) + t[kIM]);
                if (s != kNegInf) fm(k, i) = s + lm.em_match(k, seq[i - 1]);
            }
            if (i > 0) {
                const auto& t = lm.t[k];
                double s = log_sum(fm(k, i - 1) + t[kMI], fi(k, i - 1) + t[kII]);
                if (s != kNegInf) fi(k, i) = s + lm.em_insert(k, seq[i - 1]);
            }
            if (k > 0) {
                const auto& t = lm.t[k - 1];
                fd(k, i) = log_sum(fm(k - 1, i) + t[kMD], fd(k - 1, i) + t[kDD]);
            }
        }
    }
    const auto& te = lm.t[K];
    const double total = log_sum(log_sum(fm(K, L) + te[kMM], fd(K, L) + te[kDM]), fi(K, L) + te[kIM]);
    return (total - null_log_prob(seq, null)) / std::numbers::ln2;
}

GumbelParams fit_gumbel(const std::vector<double>& scores) {
    const std::size_t n = scores.size();
    if (n < 2) fail_input("NonConvergence", "need at least two scores to fit a Gumbel");
    double mean = 0.0;
    for (double x : scores) mean += x;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double x : scores) var += (x - mean) * (x - mean);
    var /= static_cast<double>(n - 1);
    if (!(var > 0.0) || !std::isfinite(var))
        fail_input("NonConvergence", "scores have zero variance; Gumbel scale diverges");

    // Newton on the ML equation for lambda; scores are centred on the mean so
    // the exponentials stay in range.
    auto moments = [&](double lambda, double& m1, double& m2, double& z) {
        double s0 = 0.0, s1 = 0.0, s2 = 0.0;
        for (double x : scores) {
            const double c = x - mean;
            const double e = std::exp(-lambda * c);
            s0 += e;
            s1 += c * e;
            s2 += c * c * e;
        }
        m1 = s1 / s0;
        m2 = s2 / s0;
        z = s0;
    };
    double lambda = std::numbers::pi / std::sqrt(6.0 * var);
    bool converged = false;
    for (int iter = 0; iter < 200; ++iter) {
        double m1, m2, z;
        moments(lambda, m1, m2, z);
        // Centred form of 1/lambda - mean(x) + sum(x e)/sum(e).
        const double g = 1.0 / lambda + m1;
        const double dg = -1.0 / (lambda * lambda) - (m2 - m1 * m1);
        double next = lambda - g / dg;
        if (!(next > 0.0) || !std::isfinite(next)) next = lambda / 2.0;
        const double step = next - lambda;
        lambda = next;
        if (std::abs(step) < 1e-9) {
            converged = true;
            break;
        }
    }
    if (!converged || !std::isfinite(lambda) || !(lambda > 0.0))
        fail_input("NonConvergence", "Gumbel lambda did not converge in 200 iterations");
    double m1, m2, z;
    moments(lambda, m1, m2, z);
    const double mu = mean - std::log(z / static_cast<double>(n)) / lambda;
    return {mu, lambda, n};
}

GumbelParams calibrate(const Plan7Model& m, const NullModel& null, const CalibrationOptions& opts) {
    if (opts.samples < 100) fail_input("InvalidParams", "calibration needs at least 100 samples");
    const double k = static_cast<double>(m.length());
    const auto lo = static_cast<std::uint64_t>(std::max(1.0, std::ceil(opts.min_length_factor * k)));
    const auto hi = std::max(lo, static_cast<std::uint64_t>(std::floor(opts.max_length_factor * k)));
    Rng rng(opts.seed);
    std::vector<double> scores;
    scores.reserve(opts.samples);
    std::vector<AminoAcid> seq;
    for (std::size_t s = 0; s < opts.samples; ++s) {
        const auto len = rng.uniform_int(lo, hi);
        seq.clear();
        for (std::uint64_t p = 0; p < len; ++p) seq.push_back(AminoAcid::from_index(rng.residue(null.bg)));
        scores.push_back(viterbi(m, seq, null.for_length(seq.size())).bits);
    }
    return fit_gumbel(scores);
}

double evalue(double score, const GumbelParams& g, std::uint64_t db_size) {
    if (db_size == 0) fail_input("InvalidParams", "database size must be positive");
    const double y = std::exp(-g.lambda * (score - g.mu));
    const double e = static_cast<double>(db_size) * -std::expm1(-y);
    return std::max(e, std::numeric_limits<double>::min());
}

Hit score_sequence(const Plan7Model& m, const std::string& name, const std::vector<AminoAcid>& seq,
                   std::uint64_t db_size) {
    if (!m.gumbel) fail_input("NotCalibrated", "model '" + name + "' has no E-value calibration");
    Hit h = viterbi(m, seq, m.null.for_length(seq.size()));
    h.model = name;
    h.evalue = evalue(h.bits, *m.gumbel, db_size);
    return h;
}

void ModelLibrary::validate() const {
    if (members.empty()) fail_input("EmptyLibrary", "model library has no members");
    for (std::size_t a = 0; a < members.size(); ++a)
        for (std::size_t b = a + 1; b < members.size(); ++b)
            if (members[a].name == members[b].name) fail_input("DuplicateId", "duplicate library member '" + members[a].name + "'");
    if (policy.kind == PolicyKind::Vote && (policy.quorum < 1 || policy.quorum > members.size()))
        fail_input("InvalidParams", "vote quorum must lie in [1, member count]");
}

bool combine_verdict(const std::vector<double>& evalues, const CombinationPolicy& policy) {
    if (evalues.empty()) fail_input("EmptyLibrary", "no member e-values");
    if (policy.kind == PolicyKind::BestEvalue)
        return *std::min_element(evalues.begin(), evalues.end()) <= policy.threshold;
    std::size_t votes = 0;
    for (double e : evalues)
        if (e <= policy.threshold) ++votes;
    return votes >= policy.quorum;
}

LibraryResult score_library(const ModelLibrary& lib, const std::vector<AminoAcid>& seq, std::uint64_t db_size) {
    lib.validate();
    LibraryResult r;
    std::vector<double> es;
    r.combined_evalue = std::numeric_limits<double>::infinity();
    for (const auto& mem : lib.members) {
        r.hits.push_back(score_sequence(mem.model, mem.name, seq, db_size));
        const double e = *r.hits.back().evalue;
        es.push_back(e);
        if (e <= lib.policy.threshold) ++r.votes;
        if (e < r.combined_evalue) {
            r.combined_evalue = e;
            r.best_model = mem.name;
        }
    }
    r.verdict = combine_verdict(es, lib.policy);
    return r;
}

}  // namespace phmmw
