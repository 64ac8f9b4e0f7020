#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "phmmw/cli.hpp"
#include "phmmw/plan7.hpp"
#include "phmmw/synthgen.hpp"

using namespace phmmw;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "phmmw");
    std::vector<const char*> argv;
    for (auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

// A fresh directory holding one synthetic benchmark.
struct Workspace {
    fs::path dir;
    explicit Workspace(const std::string& name) : dir(fs::temp_directory_path() / name) {
        fs::remove_all(dir);
        fs::create_directories(dir);
        SynthSpec spec;
        spec.superfamilies = 3;
        spec.sequences = 7;
        spec.length = 12;
        write_datasets(generate(spec), (dir / "data").string());
    }
    std::string p(const std::string& rel) const { return (dir / rel).string(); }
    std::string aln() const { return p("data/sf0/fam0/aln.fasta"); }
    std::string ann() const { return p("data/sf0/fam0/ann.tsv"); }
};

}  // namespace

TEST_CASE("usage errors exit 1") {
    auto r = run({"build", "--bogus"});
    CHECK(r.code == 1);
    CHECK(r.err.find("UsageError") != std::string::npos);
    CHECK(r.err.find("--aln") != std::string::npos);  // usage text
    CHECK(run({}).code == 1);
    CHECK(run({"frobnicate"}).code == 1);
    CHECK(run({"--help"}).code == 0);
}

TEST_CASE("input errors exit 1 with a code") {
    auto r = run({"build", "--aln", "/nonexistent.fa", "--out", "/tmp/x.phmmw"});
    CHECK(r.code == 1);
    CHECK(r.err.rfind("FileNotFound: ", 0) == 0);
}

TEST_CASE("weights subcommand") {
    Workspace w("phmmw_cli_weights");
    auto r = run({"weights", "--aln", w.aln(), "--ann", w.ann(), "--scheme", "ss"});
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("# phmmw ", 0) == 0);
    CHECK(r.out.find("seed=") != std::string::npos);
    CHECK(r.out.find("#seq_id\tc0") != std::string::npos);
    CHECK(r.out.find("\t4") != std::string::npos);
    CHECK(run({"weights", "--aln", w.aln(), "--scheme", "gsc"}).code == 0);
    CHECK(run({"weights", "--aln", w.aln(), "--ann", w.ann(), "--scheme", "hcs", "--combine"}).code == 0);
    auto bad = run({"weights", "--aln", w.aln(), "--scheme", "ss"});
    CHECK(bad.code == 1);
    CHECK(bad.err.rfind("MissingAnnotation: ", 0) == 0);
    CHECK(run({"weights", "--aln", w.aln(), "--scheme", "nope"}).code == 1);
}

TEST_CASE("build twice is byte-identical, then score") {
    Workspace w("phmmw_cli_build");
    for (const char* scheme : {"1d", "2d", "3d"}) {
        auto a = run({"build", "--aln", w.aln(), "--ann", w.ann(), "--scheme", scheme, "--out", w.p("a.phmmw"),
                      "--samples", "200"});
        REQUIRE(a.code == 0);
        auto b = run({"build", "--aln", w.aln(), "--ann", w.ann(), "--scheme", scheme, "--out", w.p("b.phmmw"),
                      "--samples", "200"});
        REQUIRE(b.code == 0);
        CHECK(read_file(w.p("a.phmmw")) == read_file(w.p("b.phmmw")));
    }
    auto model = load_model(read_file(w.p("a.phmmw")));
    CHECK(model.gumbel);
    CHECK(model.meta("provenance").find("seed=42") != std::string::npos);
    CHECK(model.meta("model_name") == "pHMM3D");

    auto s = run({"score", "--model", w.p("a.phmmw"), "--seqs", w.aln(), "--db-size", "100"});
    REQUIRE(s.code == 0);
    std::istringstream lines(s.out);
    std::string line;
    std::getline(lines, line);
    CHECK(line.rfind("# phmmw ", 0) == 0);
    std::getline(lines, line);
    CHECK(line == "seq_id\tmodel\tbits\tevalue\tverdict");
    int rows = 0;
    while (std::getline(lines, line)) {
        ++rows;
        CHECK(line.find("\ta\t") != std::string::npos);
    }
    CHECK(rows == 7);
}

TEST_CASE("uncalibrated models cannot produce e-values until calibrated") {
    Workspace w("phmmw_cli_calibrate");
    REQUIRE(run({"build", "--aln", w.aln(), "--out", w.p("m.phmmw"), "--no-calibrate"}).code == 0);
    auto s = run({"score", "--model", w.p("m.phmmw"), "--seqs", w.aln()});
    CHECK(s.code == 1);
    CHECK(s.err.rfind("NotCalibrated: ", 0) == 0);
    CHECK(run({"calibrate", "--model", w.p("m.phmmw"), "--out", w.p("m.phmmw")}).code == 1);
    REQUIRE(run({"calibrate", "--model", w.p("m.phmmw"), "--out", w.p("c.phmmw"), "--samples", "200"}).code == 0);
    CHECK(run({"score", "--model", w.p("c.phmmw"), "--seqs", w.aln()}).code == 0);
}

TEST_CASE("library build and scoring") {
    Workspace w("phmmw_cli_lib");
    auto b = run({"build", "--aln", w.aln(), "--ann", w.ann(), "--scheme", "lib", "--out", w.p("lib"), "--samples",
                  "150"});
    REQUIRE(b.code == 0);
    for (const char* f : {"pHMM1D.phmmw", "pHMM2D.phmmw", "pHMMAcc.phmmw", "pHMMOi.phmmw", "pHMM3D.phmmw",
                          "library.manifest"})
        CHECK(fs::exists(w.dir / "lib" / f));
    auto s = run({"score", "--library", w.p("lib"), "--seqs", w.p("data/sf0/fam1/aln.fasta"), "--policy", "vote",
                  "--quorum", "3", "--threshold", "0.01"});
    REQUIRE(s.code == 0);
    CHECK(s.out.find("\tpHMMOi\t") != std::string::npos);
    CHECK(s.out.find("\tlibrary:vote\t") != std::string::npos);
    CHECK(run({"score", "--library", w.p("lib"), "--seqs", w.aln(), "--policy", "vote", "--quorum", "9"}).code == 1);
    CHECK(run({"score", "--library", w.p("lib"), "--model", w.p("lib/pHMM1D.phmmw"), "--seqs", w.aln()}).code == 1);
}

TEST_CASE("PHMMW_BG overrides the background") {
    Workspace w("phmmw_cli_bg");
    std::string bg;
    for (int a = 0; a < kAlphabetSize; ++a) bg += std::string(1, kResidues[a]) + " 1\n";
    write_file(w.p("bg.txt"), bg);
    ::setenv("PHMMW_BG", w.p("bg.txt").c_str(), 1);
    auto r = run({"build", "--aln", w.aln(), "--out", w.p("u.phmmw"), "--no-calibrate"});
    ::unsetenv("PHMMW_BG");
    REQUIRE(r.code == 0);
    auto m = load_model(read_file(w.p("u.phmmw")));
    for (double x : m.null.bg) CHECK(x == doctest::Approx(0.05));
    ::setenv("PHMMW_BG", w.p("missing.txt").c_str(), 1);
    CHECK(run({"build", "--aln", w.aln(), "--out", w.p("u.phmmw"), "--no-calibrate"}).code == 1);
    ::unsetenv("PHMMW_BG");
}

TEST_CASE("synth and eval") {
    Workspace w("phmmw_cli_eval");
    write_file(w.p("spec.txt"), "superfamilies=3\nsequences=7\nlength=10\n");
    REQUIRE(run({"synth", "--spec", w.p("spec.txt"), "--out", w.p("syn")}).code == 0);
    CHECK(fs::exists(w.dir / "syn" / "sf2" / "fam2" / "ann.tsv"));
    CHECK(read_file(w.p("syn/synth.txt")).find("core_columns.sf0=") != std::string::npos);
    auto e1 = run({"eval", "--data", w.p("syn"), "--schemes", "1d,ooi,lib", "--out", w.p("r1"), "--samples", "150"});
    REQUIRE(e1.code == 0);
    auto e2 = run({"eval", "--data", w.p("syn"), "--schemes", "1d,ooi,lib", "--out", w.p("r2"), "--samples", "150",
                   "--jobs", "2"});
    REQUIRE(e2.code == 0);
    for (const char* f : {"curves.csv", "auc.csv", "ttest.csv"})
        CHECK(read_file(w.p(std::string("r1/") + f)) == read_file(w.p(std::string("r2/") + f)));
    CHECK(run({"eval", "--data", w.p("syn"), "--schemes", "1d,5d", "--out", w.p("r3")}).code == 1);
    CHECK(run({"synth", "--spec", w.p("nope.txt"), "--out", w.p("x")}).code == 1);
}
