#include "phmmw/evalharness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <set>
#include <thread>

#include "phmmw/error.hpp"
#include "textutil.hpp"

namespace phmmw {

namespace fs = std::filesystem;

const char* scheme_key(Scheme s) {
    switch (s) {
        case Scheme::OneD: return "1d";
        case Scheme::TwoD: return "2d";
        case Scheme::Acc: return "acc";
        case Scheme::Ooi: return "ooi";
        case Scheme::ThreeD: return "3d";
    }
    return "?";
}

const char* scheme_model_name(Scheme s) {
    switch (s) {
        case Scheme::OneD: return "pHMM1D";
        case Scheme::TwoD: return "pHMM2D";
        case Scheme::Acc: return "pHMMAcc";
        case Scheme::Ooi: return "pHMMOi";
        case Scheme::ThreeD: return "pHMM3D";
    }
    return "?";
}

std::optional<Scheme> parse_scheme(std::string_view key) {
    for (auto s : kAllSchemes)
        if (key == scheme_key(s)) return s;
    return std::nullopt;
}

WeightMatrix structural_matrix(const AnnotatedAlignment& aln, Scheme s, const HcsParams& p) {
    switch (s) {
        case Scheme::OneD: return WeightMatrix(aln.num_sequences(), aln.num_columns(), WeightTag::Structural, 1.0);
        case Scheme::TwoD: return ss_weights(aln, p);
        case Scheme::Acc: return acc_weights(aln, p);
        case Scheme::Ooi: return ooi_weights(ensure_ooi(aln, p.ooi_radius), p);
        case Scheme::ThreeD: return hcs_weights(ensure_ooi(aln, p.ooi_radius), p);
    }
    fail("InternalError", "unknown scheme");
}

Plan7Model build_scheme_model(const AnnotatedAlignment& aln, Scheme s, const PseudocountConfig& pc,
                              const NullModel& null, const HcsParams& p) {
    const WeightMatrix w = default_weights(aln, SequenceScheme::Gsc);
    const WeightMatrix weights = s == Scheme::OneD ? w : combine(w, structural_matrix(aln, s, p));
    Plan7Model m = build_model(aln, weights, pc, null, {scheme_key(s), "gsc"});
    m.set_meta("model_name", scheme_model_name(s));
    switch (s) {
        case Scheme::TwoD: m.set_meta("structural_weights", "ss:L=1,H=2,C=4"); break;
        case Scheme::Acc: m.set_meta("structural_weights", "acc:buried=3,exposed=1"); break;
        case Scheme::Ooi:
            m.set_meta("structural_weights", "ooi:max(count,1),radius=" + detail::format_shortest(p.ooi_radius));
            break;
        case Scheme::ThreeD:
            m.set_meta("structural_weights", "hcs:dmin*Omax/di,radius=" + detail::format_shortest(p.ooi_radius));
            break;
        case Scheme::OneD: m.set_meta("structural_weights", "none"); break;
    }
    m.set_meta("gap_weight", detail::format_shortest(p.gap_weight));
    return m;
}

// ---- datasets -----------------------------------------------------------------

std::size_t SuperfamilyDataset::num_sequences() const {
    std::size_t n = 0;
    for (const auto& f : families) n += f.aln.num_sequences();
    return n;
}

std::vector<std::string> SuperfamilyDataset::eligibility_problems() const {
    std::vector<std::string> out;
    if (families.size() < 3)
        out.push_back(id + ": " + std::to_string(families.size()) + " families (need at least 3)");
    if (num_sequences() < 20)
        out.push_back(id + ": " + std::to_string(num_sequences()) + " sequences (need at least 20)");
    return out;
}

std::vector<SuperfamilyDataset> load_datasets(const std::string& dir) {
    if (!fs::is_directory(dir)) fail_input("FileNotFound", "dataset directory '" + dir + "' not found");
    std::vector<fs::path> sf_dirs;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_directory()) sf_dirs.push_back(e.path());
    std::sort(sf_dirs.begin(), sf_dirs.end());
    std::vector<SuperfamilyDataset> out;
    for (const auto& sfd : sf_dirs) {
        SuperfamilyDataset ds;
        ds.id = sfd.filename().string();
        std::vector<fs::path> fam_dirs;
        for (const auto& e : fs::directory_iterator(sfd))
            if (e.is_directory()) fam_dirs.push_back(e.path());
        std::sort(fam_dirs.begin(), fam_dirs.end());
        for (const auto& fd : fam_dirs) {
            auto aln = parse_alignment(read_file((fd / "aln.fasta").string()));
            const auto ann = fd / "ann.tsv";
            if (fs::exists(ann)) aln = parse_annotations(read_file(ann.string()), aln);
            if (!ds.families.empty() && aln.num_columns() != ds.families.front().aln.num_columns())
                fail_input("MalformedDataset", "family '" + fd.string() +
                                                   "' does not share the superfamily alignment's column count");
            ds.families.push_back({fd.filename().string(), std::move(aln)});
        }
        if (ds.families.empty()) fail_input("MalformedDataset", "superfamily '" + ds.id + "' has no families");
        out.push_back(std::move(ds));
    }
    if (out.empty()) fail_input("EmptyInput", "no superfamilies under '" + dir + "'");
    attach_negatives(out);
    return out;
}

void attach_negatives(std::vector<SuperfamilyDataset>& datasets) {
    for (auto& ds : datasets) {
        ds.negatives.clear();
        for (const auto& other : datasets) {
            if (&other == &ds) continue;
            for (const auto& f : other.families)
                for (std::size_t i = 0; i < f.aln.num_sequences(); ++i) ds.negatives.push_back(f.aln.ungapped(i));
        }
    }
}

std::vector<Split> split_lofo(const SuperfamilyDataset& ds) {
    auto problems = ds.eligibility_problems();
    if (!problems.empty()) fail_input("IneligibleDataset", problems.front());
    std::vector<Split> out;
    for (std::size_t h = 0; h < ds.families.size(); ++h) {
        Split s;
        s.held_out = ds.families[h].name;
        std::optional<AnnotatedAlignment> train;
        for (std::size_t f = 0; f < ds.families.size(); ++f) {
            if (f == h) continue;
            train = train ? train->stacked(ds.families[f].aln) : ds.families[f].aln;
        }
        std::vector<std::size_t> rows(train->num_sequences());
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
        s.train = train->select_rows(rows);  // drops columns that are all gaps
        const auto& held = ds.families[h].aln;
        for (std::size_t i = 0; i < held.num_sequences(); ++i) s.positives.push_back(held.ungapped(i));
        s.negatives = ds.negatives;
        out.push_back(std::move(s));
    }
    return out;
}

// ---- curves -------------------------------------------------------------------

std::vector<double> default_thresholds() {
    std::vector<double> t;
    for (int e = -50; e <= 1; ++e) t.push_back(*detail::parse_double("1e" + std::to_string(e)));
    return t;
}

std::vector<ConfusionRow> sweep(const std::vector<ScoredHit>& hits, const std::vector<double>& thresholds) {
    std::vector<ConfusionRow> out;
    out.reserve(thresholds.size());
    for (double tau : thresholds) {
        ConfusionRow row{tau};
        for (const auto& h : hits) {
            const bool accepted = h.evalue <= tau;
            if (h.positive)
                (accepted ? row.tp : row.fn)++;
            else
                (accepted ? row.fp : row.tn)++;
        }
        out.push_back(row);
    }
    return out;
}

namespace {

double ratio(std::size_t num, std::size_t den, double empty) {
    return den == 0 ? empty : static_cast<double>(num) / static_cast<double>(den);
}

std::vector<CurvePoint> dedup_sorted(std::vector<CurvePoint> pts) {
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

double trapezoid(const std::vector<CurvePoint>& pts) {
    double area = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) area += (pts[i].x - pts[i - 1].x) * (pts[i].y + pts[i - 1].y) / 2.0;
    return area;
}

CurvePoint roc_point(const ConfusionRow& r) { return {ratio(r.fp, r.fp + r.tn, 0.0), ratio(r.tp, r.tp + r.fn, 0.0)}; }
CurvePoint pr_point(const ConfusionRow& r) { return {ratio(r.tp, r.tp + r.fn, 0.0), ratio(r.tp, r.tp + r.fp, 1.0)}; }

}  // namespace

std::vector<CurvePoint> roc_points(const std::vector<ConfusionRow>& table) {
    std::vector<CurvePoint> pts;
    for (const auto& r : table) pts.push_back(roc_point(r));
    return dedup_sorted(std::move(pts));
}

std::vector<CurvePoint> pr_points(const std::vector<ConfusionRow>& table) {
    std::vector<CurvePoint> pts;
    for (const auto& r : table) pts.push_back(pr_point(r));
    return dedup_sorted(std::move(pts));
}

double auc(std::vector<CurvePoint> points) {
    points.push_back({0.0, 0.0});
    points.push_back({1.0, 1.0});
    return std::clamp(trapezoid(dedup_sorted(std::move(points))), 0.0, 1.0);
}

double pr_auc(std::vector<CurvePoint> points) { return std::clamp(trapezoid(dedup_sorted(std::move(points))), 0.0, 1.0); }

// ---- experiments --------------------------------------------------------------

namespace {

struct Unit {
    std::size_t dataset;
    std::size_t split;
};

struct UnitOutput {
    std::vector<SplitResult> results;
    std::vector<SplitFailure> failures;
};

std::uint64_t derive_seed(std::uint64_t seed, const std::string& tag) {
    return fnv1a64(std::to_string(seed) + "/" + tag);
}

UnitOutput run_unit(const SuperfamilyDataset& ds, const Split& split, const std::vector<std::string>& arms,
                    const CombinationPolicy& policy, const ExperimentConfig& cfg) {
    UnitOutput out;
    const bool want_lib = std::find(arms.begin(), arms.end(), "lib") != arms.end();
    std::vector<Scheme> schemes;
    for (auto s : kAllSchemes)
        if (want_lib || std::find(arms.begin(), arms.end(), scheme_key(s)) != arms.end()) schemes.push_back(s);

    std::vector<Sequence> tests = split.positives;
    tests.insert(tests.end(), split.negatives.begin(), split.negatives.end());
    const std::uint64_t db_size = tests.size();

    std::map<std::string, std::vector<double>> evalues;  // per scheme, test order
    std::map<std::string, std::string> errors;
    const NullModel null{cfg.pc.bg};
    for (auto s : schemes) {
        const std::string key = scheme_key(s);
        try {
            Plan7Model m = build_scheme_model(split.train, s, cfg.pc, null, cfg.hcs);
            CalibrationOptions cal = cfg.calibration;
            cal.seed = derive_seed(cfg.seed, ds.id + "/" + split.held_out + "/" + key);
            m.gumbel = calibrate(m, m.null, cal);
            auto& ev = evalues[key];
            for (const auto& t : tests) ev.push_back(*score_sequence(m, key, t.residues, db_size).evalue);
        } catch (const Error& e) {
            errors[key] = e.code() + ": " + e.what();
        }
    }

    auto emit = [&](const std::string& arm, const std::vector<double>& ev) {
        std::vector<ScoredHit> hits;
        for (std::size_t i = 0; i < tests.size(); ++i) hits.push_back({tests[i].id, i < split.positives.size(), ev[i]});
        SplitResult r;
        r.superfamily = ds.id;
        r.family = split.held_out;
        r.arm = arm;
        r.table = sweep(hits, cfg.thresholds);
        r.roc_auc = auc(roc_points(r.table));
        r.pr_auc = pr_auc(pr_points(r.table));
        r.positives = split.positives.size();
        r.negatives = split.negatives.size();
        out.results.push_back(std::move(r));
    };

    for (const auto& arm : arms) {
        if (arm == "lib") {
            std::string err;
            for (auto s : schemes)
                if (errors.count(scheme_key(s))) err = "member " + std::string(scheme_key(s)) + " failed";
            if (!err.empty()) {
                out.failures.push_back({ds.id, split.held_out, arm, err});
                continue;
            }
            std::vector<double> combined(tests.size());
            for (std::size_t i = 0; i < tests.size(); ++i) {
                std::vector<double> member;
                for (auto s : schemes) member.push_back(evalues[scheme_key(s)][i]);
                std::sort(member.begin(), member.end());
                const std::size_t rank = policy.kind == PolicyKind::Vote ? policy.quorum - 1 : 0;
                combined[i] = member[std::min(rank, member.size() - 1)];
            }
            emit(arm, combined);
        } else if (errors.count(arm)) {
            out.failures.push_back({ds.id, split.held_out, arm, errors[arm]});
        } else {
            emit(arm, evalues[arm]);
        }
    }
    return out;
}

}  // namespace

EvalReport run_experiment(const std::vector<SuperfamilyDataset>& datasets, const std::vector<std::string>& arms,
                          const CombinationPolicy& policy, const ExperimentConfig& config) {
    if (arms.empty()) fail_input("InvalidParams", "no schemes requested");
    std::set<std::string> seen;
    for (const auto& a : arms) {
        if (a != "lib" && !parse_scheme(a)) fail_input("InvalidParams", "unknown scheme '" + a + "'");
        if (!seen.insert(a).second) fail_input("InvalidParams", "scheme '" + a + "' requested twice");
    }
    if (policy.kind == PolicyKind::Vote && (policy.quorum < 1 || policy.quorum > 5))
        fail_input("InvalidParams", "vote quorum must lie in [1, 5]");

    EvalReport report;
    report.arms = arms;
    report.policy = policy.kind == PolicyKind::BestEvalue
                        ? "best"
                        : "vote(threshold=" + detail::format_shortest(policy.threshold) +
                              ",quorum=" + std::to_string(policy.quorum) + ")";
    report.seed = config.seed;
    report.thresholds = config.thresholds;

    std::vector<std::vector<Split>> splits(datasets.size());
    std::vector<Unit> units;
    for (std::size_t d = 0; d < datasets.size(); ++d) {
        auto problems = datasets[d].eligibility_problems();
        if (!problems.empty()) {
            report.ineligible.insert(report.ineligible.end(), problems.begin(), problems.end());
            continue;
        }
        splits[d] = split_lofo(datasets[d]);
        for (std::size_t s = 0; s < splits[d].size(); ++s) units.push_back({d, s});
    }

    std::vector<UnitOutput> outputs(units.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t u = next++; u < units.size(); u = next++) {
            const auto& unit = units[u];
            try {
                outputs[u] = run_unit(datasets[unit.dataset], splits[unit.dataset][unit.split], arms, policy, config);
            } catch (const std::exception& e) {
                for (const auto& a : arms)
                    outputs[u].failures.push_back(
                        {datasets[unit.dataset].id, splits[unit.dataset][unit.split].held_out, a, e.what()});
            }
        }
    };
    const unsigned jobs = std::max(1u, std::min<unsigned>(config.jobs, static_cast<unsigned>(units.size())));
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    for (auto& o : outputs) {
        std::move(o.results.begin(), o.results.end(), std::back_inserter(report.splits));
        std::move(o.failures.begin(), o.failures.end(), std::back_inserter(report.failures));
    }
    auto key = [](const auto& r) { return std::tie(r.superfamily, r.family, r.arm); };
    std::sort(report.splits.begin(), report.splits.end(), [&](const auto& a, const auto& b) { return key(a) < key(b); });
    std::sort(report.failures.begin(), report.failures.end(),
              [&](const auto& a, const auto& b) { return key(a) < key(b); });

    for (const auto& arm : arms) {
        ArmSummary sum;
        sum.arm = arm;
        std::map<std::string, std::vector<const SplitResult*>> by_sf;
        for (const auto& r : report.splits)
            if (r.arm == arm) by_sf[r.superfamily].push_back(&r);
        const std::size_t nt = config.thresholds.size();
        sum.pooled_table.resize(nt);
        for (std::size_t t = 0; t < nt; ++t) sum.pooled_table[t].threshold = config.thresholds[t];
        std::vector<CurvePoint> roc_acc(nt), pr_acc(nt);
        for (const auto& [sf, rows] : by_sf) {
            double roc = 0.0, pr = 0.0;
            std::vector<ConfusionRow> sf_table(nt);
            for (const auto* r : rows) {
                roc += r->roc_auc;
                pr += r->pr_auc;
                for (std::size_t t = 0; t < nt; ++t) {
                    for (auto* dst : {&sum.pooled_table[t], &sf_table[t]}) {
                        dst->tp += r->table[t].tp;
                        dst->fp += r->table[t].fp;
                        dst->tn += r->table[t].tn;
                        dst->fn += r->table[t].fn;
                    }
                }
            }
            sum.superfamily_roc_auc[sf] = roc / static_cast<double>(rows.size());
            sum.superfamily_pr_auc[sf] = pr / static_cast<double>(rows.size());
            for (std::size_t t = 0; t < nt; ++t) {
                const auto rp = roc_point(sf_table[t]);
                const auto pp = pr_point(sf_table[t]);
                roc_acc[t].x += rp.x;
                roc_acc[t].y += rp.y;
                pr_acc[t].x += pp.x;
                pr_acc[t].y += pp.y;
            }
        }
        if (!by_sf.empty()) {
            const double n = static_cast<double>(by_sf.size());
            for (const auto& [sf, v] : sum.superfamily_roc_auc) sum.macro_roc_auc += v / n;
            for (const auto& [sf, v] : sum.superfamily_pr_auc) sum.macro_pr_auc += v / n;
            for (std::size_t t = 0; t < nt; ++t) {
                sum.macro_roc.push_back({roc_acc[t].x / n, roc_acc[t].y / n});
                sum.macro_pr.push_back({pr_acc[t].x / n, pr_acc[t].y / n});
            }
            sum.pooled_roc_auc = auc(roc_points(sum.pooled_table));
            sum.pooled_pr_auc = pr_auc(pr_points(sum.pooled_table));
        }
        report.summary[arm] = std::move(sum);
    }

    for (std::size_t a = 0; a < arms.size(); ++a) {
        for (std::size_t b = a + 1; b < arms.size(); ++b) {
            PairTest pt{arms[a], arms[b], std::nullopt, "ok"};
            std::vector<double> xa, xb;
            const auto& sa = report.summary[arms[a]].superfamily_roc_auc;
            const auto& sb = report.summary[arms[b]].superfamily_roc_auc;
            for (const auto& [sf, v] : sa) {
                auto it = sb.find(sf);
                if (it == sb.end()) continue;
                xa.push_back(v);
                xb.push_back(it->second);
            }
            if (xa.size() < 2) {
                pt.status = "too_few_units";
            } else {
                try {
                    pt.result = paired_t_test(xa, xb);
                } catch (const Error& e) {
                    pt.status = e.code() == "ZeroVariance" ? "zero_variance" : e.code();
                }
            }
            report.ttests.push_back(std::move(pt));
        }
    }
    return report;
}

namespace {

std::string num(double v) { return detail::format_shortest(v); }

void append_row(std::string& out, std::initializer_list<std::string> fields) {
    bool first = true;
    for (const auto& f : fields) {
        if (!first) out += ',';
        out += f;
        first = false;
    }
    out += '\n';
}

}  // namespace

void write_report(const EvalReport& report, const std::string& dir, const std::string& provenance) {
    fs::create_directories(dir);
    const std::string head = "# " + provenance + " policy=" + report.policy + "\n";

    std::string curves = head;
    append_row(curves, {"aggregation", "superfamily", "family", "scheme", "threshold", "tp", "fp", "tn", "fn", "fpr",
                        "tpr", "recall", "precision"});
    for (const auto& r : report.splits) {
        for (const auto& row : r.table) {
            const auto rp = roc_point(row);
            const auto pp = pr_point(row);
            append_row(curves, {"split", r.superfamily, r.family, r.arm, num(row.threshold), std::to_string(row.tp),
                                std::to_string(row.fp), std::to_string(row.tn), std::to_string(row.fn), num(rp.x),
                                num(rp.y), num(pp.x), num(pp.y)});
        }
    }
    for (const auto& arm : report.arms) {
        const auto& s = report.summary.at(arm);
        for (std::size_t t = 0; t < s.pooled_table.size(); ++t) {
            const auto& row = s.pooled_table[t];
            const auto rp = roc_point(row);
            const auto pp = pr_point(row);
            append_row(curves, {"pooled", "*", "*", arm, num(row.threshold), std::to_string(row.tp),
                                std::to_string(row.fp), std::to_string(row.tn), std::to_string(row.fn), num(rp.x),
                                num(rp.y), num(pp.x), num(pp.y)});
        }
        for (std::size_t t = 0; t < s.macro_roc.size(); ++t) {
            append_row(curves, {"macro", "*", "*", arm, num(report.thresholds[t]), "", "", "", "", num(s.macro_roc[t].x),
                                num(s.macro_roc[t].y), num(s.macro_pr[t].x), num(s.macro_pr[t].y)});
        }
    }
    write_file((fs::path(dir) / "curves.csv").string(), curves);

    std::string aucs = head;
    append_row(aucs, {"aggregation", "superfamily", "family", "scheme", "roc_auc", "pr_auc", "positives", "negatives", "note"});
    for (const auto& r : report.splits)
        append_row(aucs, {"split", r.superfamily, r.family, r.arm, num(r.roc_auc), num(r.pr_auc),
                          std::to_string(r.positives), std::to_string(r.negatives), ""});
    for (const auto& arm : report.arms) {
        const auto& s = report.summary.at(arm);
        for (const auto& [sf, v] : s.superfamily_roc_auc)
            append_row(aucs, {"superfamily", sf, "*", arm, num(v), num(s.superfamily_pr_auc.at(sf)), "", "", "mean over splits"});
        append_row(aucs, {"pooled", "*", "*", arm, num(s.pooled_roc_auc), num(s.pooled_pr_auc), "", "", "summed confusion tables"});
        append_row(aucs, {"macro", "*", "*", arm, num(s.macro_roc_auc), num(s.macro_pr_auc), "", "", "mean over superfamilies"});
    }
    for (const auto& f : report.failures) {
        std::string err = f.error;
        std::replace(err.begin(), err.end(), ',', ';');
        std::replace(err.begin(), err.end(), '\n', ' ');
        append_row(aucs, {"failed", f.superfamily, f.family, f.arm, "", "", "", "", err});
    }
    write_file((fs::path(dir) / "auc.csv").string(), aucs);

    std::string tt = head;
    tt += "# pairing unit: per-superfamily mean ROC AUC over leave-one-family-out splits; two-tailed\n";
    append_row(tt, {"scheme_a", "scheme_b", "n", "mean_difference", "t", "p", "status"});
    for (const auto& p : report.ttests) {
        if (p.result)
            append_row(tt, {p.arm_a, p.arm_b, std::to_string(p.result->n), num(p.result->mean_difference),
                            num(p.result->t), num(p.result->p), p.status});
        else
            append_row(tt, {p.arm_a, p.arm_b, "", "", "", "", p.status});
    }
    write_file((fs::path(dir) / "ttest.csv").string(), tt);
}

}  // namespace phmmw
