#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "phmmw/evalharness.hpp"
#include "phmmw/synthgen.hpp"
#include "test_util.hpp"

using namespace phmmw;
namespace fs = std::filesystem;

namespace {

std::vector<SuperfamilyDataset> tiny_benchmark(std::uint64_t seed) {
    SynthSpec spec;
    spec.seed = seed;
    spec.superfamilies = 3;
    spec.families = 3;
    spec.sequences = 7;
    spec.length = 10;
    std::vector<SuperfamilyDataset> out;
    for (auto& sf : generate(spec)) out.push_back(std::move(sf.dataset));
    return out;
}

ExperimentConfig fast_config() {
    ExperimentConfig cfg;
    cfg.calibration.samples = 150;
    return cfg;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("scheme names") {
    CHECK(std::string(scheme_key(Scheme::Ooi)) == "ooi");
    CHECK(std::string(scheme_model_name(Scheme::OneD)) == "pHMM1D");
    CHECK(std::string(scheme_model_name(Scheme::TwoD)) == "pHMM2D");
    CHECK(std::string(scheme_model_name(Scheme::Acc)) == "pHMMAcc");
    CHECK(std::string(scheme_model_name(Scheme::Ooi)) == "pHMMOi");
    CHECK(std::string(scheme_model_name(Scheme::ThreeD)) == "pHMM3D");
    CHECK(parse_scheme("3d") == Scheme::ThreeD);
    CHECK_FALSE(parse_scheme("4d"));
}

TEST_CASE("default thresholds") {
    auto t = default_thresholds();
    REQUIRE(t.size() == 52);
    CHECK(t.front() == 1e-50);
    CHECK(t[50] == 1.0);
    CHECK(t.back() == 10.0);
}

TEST_CASE("sweep builds confusion tables") {
    std::vector<ScoredHit> hits{{"p1", true, 1e-10}, {"p2", true, 0.5}, {"n1", false, 1e-3}, {"n2", false, 5.0}};
    auto t = sweep(hits, {1e-20, 1e-5, 1e-2, 1.0, 10.0});
    CHECK(t[0] == ConfusionRow{1e-20, 0, 0, 2, 2});
    CHECK(t[1] == ConfusionRow{1e-5, 1, 0, 2, 1});
    CHECK(t[2] == ConfusionRow{1e-2, 1, 1, 1, 1});
    CHECK(t[3] == ConfusionRow{1.0, 2, 1, 1, 0});
    CHECK(t[4] == ConfusionRow{10.0, 2, 2, 0, 0});
    for (const auto& r : t) CHECK(r.tp + r.fn + r.fp + r.tn == hits.size());

    auto roc = roc_points(t);
    CHECK(roc.front() == CurvePoint{0.0, 0.0});
    CHECK(roc.back() == CurvePoint{1.0, 1.0});
    // (0,0) (0,.5) (.5,.5) (.5,1) (1,1): area = .5*.5 + .5*1 = .75
    CHECK(auc(roc) == doctest::Approx(0.75));

    auto pr = pr_points(t);
    CHECK(pr.front() == CurvePoint{0.0, 1.0});  // nothing predicted
    CHECK(pr_auc(pr) > 0.0);
}

TEST_CASE("AUC of reference curves") {
    CHECK(auc({}) == 0.5);
    CHECK(auc({{0.25, 0.25}, {0.5, 0.5}, {0.75, 0.75}}) == 0.5);
    CHECK(auc({{0.0, 1.0}}) == 1.0);
    CHECK(auc({{1.0, 0.0}}) == 0.0);  // anchored: (0,0) (1,0) (1,1)
    CHECK(pr_auc({{0.0, 1.0}, {1.0, 1.0}}) == 1.0);
    CHECK(pr_auc({{0.5, 0.5}}) == 0.0);
}

TEST_CASE("eligibility and leave-one-family-out splits") {
    auto data = tiny_benchmark(3);
    auto& ds = data[0];
    CHECK(ds.eligibility_problems().empty());
    CHECK(ds.num_sequences() == 21);
    auto splits = split_lofo(ds);
    REQUIRE(splits.size() == 3);
    for (std::size_t h = 0; h < 3; ++h) {
        CHECK(splits[h].held_out == ds.families[h].name);
        CHECK(splits[h].train.num_sequences() == 14);
        CHECK(splits[h].positives.size() == 7);
        CHECK(splits[h].negatives.size() == 42);
        for (const auto& p : splits[h].positives) CHECK_FALSE(splits[h].train.find(p.id));
    }
    SuperfamilyDataset small = ds;
    small.families.pop_back();
    CHECK(small.eligibility_problems().size() == 2);
    CHECK_ERROR_CODE(split_lofo(small), "IneligibleDataset");
}

TEST_CASE("datasets round-trip through the directory layout") {
    SynthSpec spec;
    spec.superfamilies = 2;
    spec.sequences = 7;
    auto gen = generate(spec);
    auto dir = fs::temp_directory_path() / "phmmw_eval_roundtrip";
    fs::remove_all(dir);
    write_datasets(gen, dir.string());
    auto back = load_datasets(dir.string());
    REQUIRE(back.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(back[i].id == gen[i].dataset.id);
        REQUIRE(back[i].families.size() == gen[i].dataset.families.size());
        for (std::size_t f = 0; f < back[i].families.size(); ++f)
            CHECK(back[i].families[f].aln == gen[i].dataset.families[f].aln);
        CHECK(back[i].negatives == gen[i].dataset.negatives);
    }
    CHECK_ERROR_CODE(load_datasets((dir / "missing").string()), "FileNotFound");

    // A family with a different column count is rejected.
    write_file((dir / gen[0].dataset.id / "fam0" / "aln.fasta").string(), ">x\nACD\n");
    fs::remove(dir / gen[0].dataset.id / "fam0" / "ann.tsv");
    CHECK_ERROR_CODE(load_datasets(dir.string()), "MalformedDataset");
}

TEST_CASE("structural matrices per scheme") {
    auto data = tiny_benchmark(4);
    const auto& aln = data[0].families[0].aln;
    auto ones = structural_matrix(aln, Scheme::OneD);
    for (double v : ones.data()) CHECK(v == 1.0);
    auto ss = structural_matrix(aln, Scheme::TwoD);
    for (double v : ss.data()) CHECK((v == 1.0 || v == 4.0));
    auto m = build_scheme_model(aln, Scheme::ThreeD, {}, {});
    CHECK(m.meta("model_name") == "pHMM3D");
    CHECK(m.meta("scheme") == "3d");
    auto base = build_scheme_model(aln, Scheme::OneD, {}, {});
    CHECK(base.meta("model_name") == "pHMM1D");
}

TEST_CASE("experiment summary structure") {
    auto data = tiny_benchmark(5);
    auto cfg = fast_config();
    auto rep = run_experiment(data, {"1d", "2d", "lib"}, {}, cfg);
    CHECK(rep.failures.empty());
    CHECK(rep.ineligible.empty());
    CHECK(rep.splits.size() == 3 * 3 * 3);
    for (std::size_t i = 1; i < rep.splits.size(); ++i)
        CHECK(std::tie(rep.splits[i - 1].superfamily, rep.splits[i - 1].family, rep.splits[i - 1].arm) <
              std::tie(rep.splits[i].superfamily, rep.splits[i].family, rep.splits[i].arm));
    const auto& s = rep.arm("1d");
    CHECK(s.superfamily_roc_auc.size() == 3);
    double mean = 0.0;
    for (const auto& [sf, v] : s.superfamily_roc_auc) mean += v / 3.0;
    CHECK(s.macro_roc_auc == doctest::Approx(mean));
    CHECK(s.macro_roc.size() == 52);
    std::size_t total = 0;
    for (const auto& r : rep.splits)
        if (r.arm == "1d") total += r.table.back().tp + r.table.back().fn;
    CHECK(s.pooled_table.back().tp + s.pooled_table.back().fn == total);
    REQUIRE(rep.ttests.size() == 3);
    CHECK(rep.ttests[0].arm_a == "1d");
    CHECK(rep.ttests[0].arm_b == "2d");

    CHECK_ERROR_CODE(run_experiment(data, {"1d", "1d"}, {}, cfg), "InvalidParams");
    CHECK_ERROR_CODE(run_experiment(data, {"9d"}, {}, cfg), "InvalidParams");
    CHECK_ERROR_CODE(run_experiment(data, {}, {}, cfg), "InvalidParams");
}

TEST_CASE("vote arm uses the quorum-th smallest member e-value") {
    auto data = tiny_benchmark(6);
    auto cfg = fast_config();
    CombinationPolicy best;
    CombinationPolicy vote{PolicyKind::Vote, 1.0, 5};
    auto all = run_experiment(data, {"1d", "2d", "acc", "ooi", "3d", "lib"}, best, cfg);
    auto strict = run_experiment(data, {"lib"}, vote, cfg);
    // With quorum 5 the library e-value is the largest member e-value, so a
    // library hit at any threshold is a hit for every member.
    for (const auto& r : strict.splits) {
        for (const auto& m : all.splits) {
            if (m.superfamily != r.superfamily || m.family != r.family || m.arm == "lib") continue;
            for (std::size_t t = 0; t < r.table.size(); ++t) {
                CHECK(r.table[t].tp <= m.table[t].tp);
                CHECK(r.table[t].fp <= m.table[t].fp);
            }
        }
    }
    // Under best, the library hits whatever any member hits.
    for (const auto& r : all.splits) {
        if (r.arm != "lib") continue;
        for (const auto& m : all.splits) {
            if (m.superfamily != r.superfamily || m.family != r.family) continue;
            for (std::size_t t = 0; t < r.table.size(); ++t) CHECK(r.table[t].tp >= m.table[t].tp);
        }
    }
}

TEST_CASE("reports are identical across job counts and runs") {
    auto data = tiny_benchmark(7);
    auto cfg = fast_config();
    auto dir = fs::temp_directory_path() / "phmmw_eval_jobs";
    fs::remove_all(dir);
    write_report(run_experiment(data, {"1d", "ooi"}, {}, cfg), (dir / "a").string(), "prov");
    cfg.jobs = 3;
    write_report(run_experiment(data, {"1d", "ooi"}, {}, cfg), (dir / "b").string(), "prov");
    for (const char* f : {"curves.csv", "auc.csv", "ttest.csv"}) {
        const auto a = slurp(dir / "a" / f);
        CHECK(a == slurp(dir / "b" / f));
        CHECK(a.rfind("# prov policy=best\n", 0) == 0);
    }
    const auto curves = slurp(dir / "a" / "curves.csv");
    CHECK(curves.find("aggregation,superfamily,family,scheme,threshold,tp,fp,tn,fn,fpr,tpr,recall,precision\n") !=
          std::string::npos);
    CHECK(curves.find("\nmacro,*,*,ooi,") != std::string::npos);
    CHECK(slurp(dir / "a" / "ttest.csv").find("scheme_a,scheme_b,n,mean_difference,t,p,status\n") != std::string::npos);
}

TEST_CASE("ineligible superfamilies are skipped and reported") {
    auto data = tiny_benchmark(8);
    data[1].families.resize(2);
    auto rep = run_experiment(data, {"1d"}, {}, fast_config());
    CHECK(rep.ineligible.size() == 2);
    CHECK(rep.arm("1d").superfamily_roc_auc.size() == 2);
}
