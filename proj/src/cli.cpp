#include "phmmw/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "phmmw/error.hpp"
#include "phmmw/evalharness.hpp"
#include "phmmw/synthgen.hpp"
#include "textutil.hpp"

namespace phmmw {

namespace {

namespace fs = std::filesystem;

constexpr const char* kManifestName = "library.manifest";
constexpr const char* kManifestMagic = "PHMMW_LIBRARY 1";

std::string hex16(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string describe(const PseudocountConfig& pc) {
    std::string s = "em_strength=" + detail::format_shortest(pc.em_strength) + ";alpha_tr=";
    for (double a : pc.alpha_tr) s += detail::format_shortest(a) + ",";
    s += ";scale_with_weights=" + std::string(pc.scale_with_weights ? "true" : "false") + ";bg=";
    for (double b : pc.bg) s += detail::format_shortest(b) + ",";
    return s;
}

std::string describe(const HcsParams& p) {
    return "ooi_radius=" + detail::format_shortest(p.ooi_radius) + ";gap_weight=" + detail::format_shortest(p.gap_weight);
}

/// One line, no trailing newline: "phmmw <version> <command> config=<hash> seed=<seed>".
std::string provenance(const std::string& command, const std::string& config, std::uint64_t seed) {
    return "phmmw " + std::string(kVersion) + " " + command + " config=" + hex16(fnv1a64(config)) +
           " seed=" + std::to_string(seed);
}

struct PcOptions {
    std::string pc_config;

    PseudocountConfig load() const {
        PseudocountConfig pc;
        if (!pc_config.empty())
            pc = parse_pseudocount_config(read_file(pc_config), fs::path(pc_config).parent_path().string());
        if (const char* env = std::getenv("PHMMW_BG"); env && *env) pc.bg = parse_background(read_file(env));
        pc.validate();
        return pc;
    }
};

NullModel null_for(const PseudocountConfig& pc) {
    NullModel n;
    n.bg = pc.bg;
    return n;
}

void require_file(const std::string& path, const char* what) {
    if (!fs::is_regular_file(path)) fail_input("FileNotFound", std::string(what) + " '" + path + "' not found");
}

void require_distinct(const std::string& in, const std::string& out) {
    std::error_code ec;
    if (fs::exists(out) && fs::equivalent(in, out, ec))
        fail_input("InvalidArgument", "output '" + out + "' would overwrite input '" + in + "'");
}

AnnotatedAlignment load_alignment(const std::string& aln, const std::string& ann) {
    require_file(aln, "alignment");
    auto a = parse_alignment(read_file(aln));
    if (!ann.empty()) {
        require_file(ann, "annotation file");
        a = parse_annotations(read_file(ann), a);
    }
    return a;
}

CombinationPolicy make_policy(const std::string& name, double threshold, std::size_t quorum) {
    CombinationPolicy p;
    if (name == "best") p.kind = PolicyKind::BestEvalue;
    else if (name == "vote") p.kind = PolicyKind::Vote;
    else fail_input("InvalidArgument", "unknown policy '" + name + "' (expected best or vote)");
    if (!(threshold > 0.0)) fail_input("InvalidArgument", "threshold must be positive");
    p.threshold = threshold;
    p.quorum = quorum;
    return p;
}

std::string with_model_provenance(Plan7Model m, const std::string& prov) {
    m.set_meta("provenance", prov);
    return save_model(m);
}

// ---- subcommands --------------------------------------------------------------

struct WeightsArgs {
    std::string aln, ann, scheme = "gsc", out;
    bool combine = false;
    HcsParams hcs;
};

void cmd_weights(const WeightsArgs& a, std::ostream& out) {
    a.hcs.validate();
    auto aln = load_alignment(a.aln, a.ann);
    const bool sequence_level = a.scheme == "gsc" || a.scheme == "uniform";
    WeightMatrix w;
    if (sequence_level) {
        w = default_weights(aln, a.scheme == "gsc" ? SequenceScheme::Gsc : SequenceScheme::Uniform);
    } else {
        Scheme s;
        if (a.scheme == "ss") s = Scheme::TwoD;
        else if (a.scheme == "acc") s = Scheme::Acc;
        else if (a.scheme == "ooi") s = Scheme::Ooi;
        else if (a.scheme == "hcs") s = Scheme::ThreeD;
        else fail_input("InvalidArgument", "unknown weight scheme '" + a.scheme + "'");
        w = structural_matrix(aln, s, a.hcs);
        if (a.combine) w = combine(default_weights(aln, SequenceScheme::Gsc), w);
    }
    const std::string config = "weights;scheme=" + a.scheme + ";combine=" + (a.combine ? "1" : "0") + ";" +
                               describe(a.hcs) + ";input=" + hex16(fnv1a64(format_alignment(aln) + format_annotations(aln)));
    std::string text = "# " + provenance("weights", config, 0) + "\n# scheme=" + a.scheme +
                       " tag=" + to_string(w.tag()) + "\n" + format_weights(w, aln);
    if (a.out.empty()) out << text;
    else write_file(a.out, text);
}

struct BuildArgs {
    std::string aln, ann, scheme = "1d", out;
    PcOptions pc;
    HcsParams hcs;
    CalibrationOptions cal;
    bool no_calibrate = false;
};

Plan7Model build_one(const AnnotatedAlignment& aln, Scheme s, const BuildArgs& a, const PseudocountConfig& pc,
                     const std::string& prov) {
    auto m = build_scheme_model(aln, s, pc, null_for(pc), a.hcs);
    if (!a.no_calibrate) {
        CalibrationOptions cal = a.cal;
        cal.seed = fnv1a64(std::to_string(a.cal.seed) + "/" + scheme_key(s));
        m.gumbel = calibrate(m, m.null, cal);
        m.set_meta("calibration_seed", std::to_string(a.cal.seed));
    }
    m.set_meta("provenance", prov);
    return m;
}

void cmd_build(const BuildArgs& a) {
    a.hcs.validate();
    const auto pc = a.pc.load();
    auto aln = load_alignment(a.aln, a.ann);
    const std::string config = "build;scheme=" + a.scheme + ";" + describe(pc) + ";" + describe(a.hcs) +
                               ";samples=" + std::to_string(a.cal.samples) +
                               ";calibrate=" + (a.no_calibrate ? "0" : "1");
    const std::string prov = provenance("build", config, a.cal.seed);
    if (a.scheme == "lib") {
        fs::create_directories(a.out);
        std::string manifest = "# " + prov + "\n" + kManifestMagic + "\n";
        for (auto s : kAllSchemes) {
            const std::string file = std::string(scheme_model_name(s)) + ".phmmw";
            write_file((fs::path(a.out) / file).string(), save_model(build_one(aln, s, a, pc, prov)));
            manifest += "member " + std::string(scheme_model_name(s)) + " " + file + "\n";
        }
        write_file((fs::path(a.out) / kManifestName).string(), manifest);
        return;
    }
    auto s = parse_scheme(a.scheme);
    if (!s) fail_input("InvalidArgument", "unknown scheme '" + a.scheme + "' (expected 1d, 2d, acc, ooi, 3d or lib)");
    write_file(a.out, save_model(build_one(aln, *s, a, pc, prov)));
}

struct CalibrateArgs {
    std::string model, out;
    CalibrationOptions cal;
};

void cmd_calibrate(const CalibrateArgs& a) {
    require_file(a.model, "model");
    require_distinct(a.model, a.out);
    auto m = load_model(read_file(a.model));
    m.gumbel = calibrate(m, m.null, a.cal);
    m.set_meta("calibration_seed", std::to_string(a.cal.seed));
    const std::string config = "calibrate;model=" + hex16(fnv1a64(save_model(m))) +
                               ";samples=" + std::to_string(a.cal.samples);
    write_file(a.out, with_model_provenance(std::move(m), provenance("calibrate", config, a.cal.seed)));
}

ModelLibrary load_library(const std::string& dir) {
    const auto manifest = fs::path(dir) / kManifestName;
    require_file(manifest.string(), "library manifest");
    ModelLibrary lib;
    bool magic = false;
    const std::string text = read_file(manifest.string());
    for (auto line : detail::split_lines(text)) {
        line = detail::trim(line);
        if (line.empty() || line.front() == '#') continue;
        if (!magic) {
            if (line != kManifestMagic) fail_input("MalformedManifest", "missing '" + std::string(kManifestMagic) + "' line");
            magic = true;
            continue;
        }
        auto f = detail::split(line, ' ');
        if (f.size() != 3 || f[0] != "member") fail_input("MalformedManifest", "bad line '" + std::string(line) + "'");
        const auto path = (fs::path(dir) / std::string(f[2])).string();
        require_file(path, "library member");
        lib.members.push_back({std::string(f[1]), load_model(read_file(path))});
    }
    if (!magic) fail_input("MalformedManifest", "empty manifest");
    return lib;
}

struct ScoreArgs {
    std::string model, library, seqs, policy = "best", out;
    std::uint64_t db_size = 0;
    double threshold = 1.0;
    std::size_t quorum = 1;
};

void cmd_score(const ScoreArgs& a, std::ostream& out) {
    if (a.model.empty() == a.library.empty()) fail_input("InvalidArgument", "give exactly one of --model and --library");
    require_file(a.seqs, "sequence file");
    const auto seqs = parse_sequences(read_file(a.seqs));
    const std::uint64_t db = a.db_size ? a.db_size : seqs.size();
    ModelLibrary lib;
    lib.policy = make_policy(a.policy, a.threshold, a.quorum);
    std::string inputs;
    if (!a.model.empty()) {
        require_file(a.model, "model");
        const auto text = read_file(a.model);
        lib.members.push_back({fs::path(a.model).stem().string(), load_model(text)});
        inputs = text;
    } else {
        lib = [&] {
            auto l = load_library(a.library);
            l.policy = lib.policy;
            return l;
        }();
        for (const auto& m : lib.members) inputs += save_model(m.model);
    }
    lib.validate();
    const std::string config = "score;policy=" + a.policy + ";threshold=" + detail::format_shortest(a.threshold) +
                               ";quorum=" + std::to_string(a.quorum) + ";db_size=" + std::to_string(db) +
                               ";models=" + hex16(fnv1a64(inputs));
    std::ostringstream os;
    os << "# " << provenance("score", config, 0) << "\n";
    os << "seq_id\tmodel\tbits\tevalue\tverdict\n";
    auto verdict = [](bool v) { return v ? "hit" : "miss"; };
    for (const auto& seq : seqs) {
        const auto r = score_library(lib, seq.residues, db);
        for (std::size_t i = 0; i < r.hits.size(); ++i) {
            const auto& h = r.hits[i];
            os << seq.id << '\t' << lib.members[i].name << '\t' << detail::format_fixed(h.bits, 4) << '\t'
               << detail::format_sci(*h.evalue, 6) << '\t' << verdict(*h.evalue <= a.threshold) << '\n';
        }
        if (lib.members.size() > 1) {
            double best_bits = 0.0;
            for (std::size_t i = 0; i < r.hits.size(); ++i)
                if (lib.members[i].name == r.best_model) best_bits = r.hits[i].bits;
            os << seq.id << "\tlibrary:" << a.policy << '\t' << detail::format_fixed(best_bits, 4) << '\t'
               << detail::format_sci(r.combined_evalue, 6) << '\t' << verdict(r.verdict) << '\n';
        }
    }
    if (a.out.empty()) out << os.str();
    else write_file(a.out, os.str());
}

struct EvalArgs {
    std::string data, schemes = "1d,2d,acc,ooi,3d,lib", policy = "best", out;
    double threshold = 1.0;
    std::size_t quorum = 1;
    PcOptions pc;
    ExperimentConfig cfg;
};

void cmd_eval(EvalArgs a, std::ostream& err) {
    a.cfg.pc = a.pc.load();
    a.cfg.hcs.validate();
    if (a.cfg.jobs == 0) fail_input("InvalidArgument", "--jobs must be at least 1");
    std::vector<std::string> arms;
    for (auto k : detail::split(a.schemes, ',')) {
        k = detail::trim(k);
        if (k != "lib" && !parse_scheme(k)) fail_input("InvalidArgument", "unknown scheme '" + std::string(k) + "'");
        arms.emplace_back(k);
    }
    if (arms.empty()) fail_input("InvalidArgument", "no schemes given");
    const auto policy = make_policy(a.policy, a.threshold, a.quorum);
    const auto data = load_datasets(a.data);
    a.cfg.calibration.seed = a.cfg.seed;
    std::string input;
    for (const auto& ds : data)
        for (const auto& f : ds.families) input += f.name + format_alignment(f.aln) + format_annotations(f.aln);
    const std::string config = "eval;schemes=" + a.schemes + ";policy=" + a.policy + ";threshold=" +
                               detail::format_shortest(a.threshold) + ";quorum=" + std::to_string(a.quorum) + ";" +
                               describe(a.cfg.pc) + ";" + describe(a.cfg.hcs) +
                               ";samples=" + std::to_string(a.cfg.calibration.samples) +
                               ";data=" + hex16(fnv1a64(input));
    const auto report = run_experiment(data, arms, policy, a.cfg);
    for (const auto& s : report.ineligible) err << "warning: skipped " << s << "\n";
    for (const auto& f : report.failures)
        err << "warning: split " << f.superfamily << "/" << f.family << " arm " << f.arm << " failed: " << f.error << "\n";
    fs::create_directories(a.out);
    write_report(report, a.out, provenance("eval", config, a.cfg.seed));
}

struct SynthArgs {
    std::string spec, out;
    std::optional<std::uint64_t> seed;
};

void cmd_synth(const SynthArgs& a) {
    SynthSpec spec;
    if (!a.spec.empty()) {
        require_file(a.spec, "synth spec");
        spec = parse_synth_spec(read_file(a.spec));
    }
    if (a.seed) spec.seed = *a.seed;
    spec.validate();
    const auto data = generate(spec);
    fs::create_directories(a.out);
    write_datasets(data, a.out);
    std::string summary = "# " + provenance("synth", format_synth_spec(spec), spec.seed) + "\n" + format_synth_spec(spec);
    for (const auto& sf : data) {
        summary += "core_columns." + sf.dataset.id + "=";
        for (std::size_t i = 0; i < sf.core_columns.size(); ++i)
            summary += (i ? "," : "") + std::to_string(sf.core_columns[i]);
        summary += "\n";
    }
    write_file((fs::path(a.out) / "synth.txt").string(), summary);
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"phmmw: structure-weighted profile HMMs", "phmmw"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    WeightsArgs wa;
    auto* weights = app.add_subcommand("weights", "Emit a training weight matrix as TSV");
    weights->add_option("--aln", wa.aln, "Aligned FASTA")->required();
    weights->add_option("--ann", wa.ann, "Residue annotation TSV");
    weights->add_option("--scheme", wa.scheme, "gsc|uniform|ss|acc|ooi|hcs")->capture_default_str();
    weights->add_flag("--combine", wa.combine, "Multiply structural weights by the GSC weights");
    weights->add_option("--ooi-radius", wa.hcs.ooi_radius, "Ooi neighbour radius in Angstrom")->capture_default_str();
    weights->add_option("--gap-weight", wa.hcs.gap_weight, "Weight of gap cells")->capture_default_str();
    weights->add_option("--out", wa.out, "Output file (default stdout)");

    BuildArgs ba;
    auto* build = app.add_subcommand("build", "Train a model, or a five-model library with --scheme lib");
    build->add_option("--aln", ba.aln, "Aligned FASTA")->required();
    build->add_option("--ann", ba.ann, "Residue annotation TSV");
    build->add_option("--scheme", ba.scheme, "1d|2d|acc|ooi|3d|lib")->capture_default_str();
    build->add_option("--out", ba.out, "Model file, or directory for lib")->required();
    build->add_option("--pc-config", ba.pc.pc_config, "Pseudocount key=value config");
    build->add_option("--ooi-radius", ba.hcs.ooi_radius, "Ooi neighbour radius in Angstrom")->capture_default_str();
    build->add_option("--gap-weight", ba.hcs.gap_weight, "Weight of gap cells")->capture_default_str();
    build->add_option("--samples", ba.cal.samples, "Calibration samples")->capture_default_str();
    build->add_option("--seed", ba.cal.seed, "Calibration seed")->capture_default_str();
    build->add_flag("--no-calibrate", ba.no_calibrate, "Skip E-value calibration");

    CalibrateArgs ca;
    auto* cal = app.add_subcommand("calibrate", "Fit E-value parameters for an existing model");
    cal->add_option("--model", ca.model, "Model file")->required();
    cal->add_option("--out", ca.out, "Output model file")->required();
    cal->add_option("--samples", ca.cal.samples, "Calibration samples")->capture_default_str();
    cal->add_option("--seed", ca.cal.seed, "Calibration seed")->capture_default_str();

    ScoreArgs sa;
    auto* score = app.add_subcommand("score", "Score sequences against a model or a library");
    score->add_option("--model", sa.model, "Model file");
    score->add_option("--library", sa.library, "Library directory");
    score->add_option("--seqs", sa.seqs, "FASTA of query sequences")->required();
    score->add_option("--db-size", sa.db_size, "Database size for E-values (default: number of queries)");
    score->add_option("--policy", sa.policy, "best|vote")->capture_default_str();
    score->add_option("--threshold", sa.threshold, "E-value acceptance threshold")->capture_default_str();
    score->add_option("--quorum", sa.quorum, "Votes needed under the vote policy")->capture_default_str();
    score->add_option("--out", sa.out, "Output file (default stdout)");

    EvalArgs ea;
    auto* eval = app.add_subcommand("eval", "Leave-one-family-out evaluation");
    eval->add_option("--data", ea.data, "Dataset directory")->required();
    eval->add_option("--schemes", ea.schemes, "Comma-separated arms")->capture_default_str();
    eval->add_option("--policy", ea.policy, "best|vote for the lib arm")->capture_default_str();
    eval->add_option("--threshold", ea.threshold, "Vote acceptance threshold")->capture_default_str();
    eval->add_option("--quorum", ea.quorum, "Votes needed under the vote policy")->capture_default_str();
    eval->add_option("--out", ea.out, "Report directory")->required();
    eval->add_option("--pc-config", ea.pc.pc_config, "Pseudocount key=value config");
    eval->add_option("--ooi-radius", ea.cfg.hcs.ooi_radius, "Ooi neighbour radius in Angstrom")->capture_default_str();
    eval->add_option("--samples", ea.cfg.calibration.samples, "Calibration samples per model")->capture_default_str();
    eval->add_option("--jobs", ea.cfg.jobs, "Worker threads")->capture_default_str();
    eval->add_option("--seed", ea.cfg.seed, "Experiment seed")->capture_default_str();

    SynthArgs ya;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic benchmark");
    synth->add_option("--spec", ya.spec, "key=value generator spec");
    synth->add_option("--out", ya.out, "Output directory")->required();
    synth->add_option("--seed", ya.seed, "Override the spec seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForVersion&) {
        out << kVersion << "\n";
        return 0;
    } catch (const CLI::Success&) {
        const auto subs = app.get_subcommands();
        out << (subs.empty() ? app.help() : subs.front()->help());
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "UsageError: " << e.what() << "\n";
        const auto subs = app.get_subcommands();
        err << (subs.empty() ? app.help() : subs.front()->help());
        return 1;
    }

    try {
        if (*weights) cmd_weights(wa, out);
        else if (*build) cmd_build(ba);
        else if (*cal) cmd_calibrate(ca);
        else if (*score) cmd_score(sa, out);
        else if (*eval) cmd_eval(ea, err);
        else if (*synth) cmd_synth(ya);
    } catch (const InputError& e) {
        err << e.code() << ": " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        err << e.code() << ": " << e.what() << "\n";
        return 2;
    } catch (const fs::filesystem_error& e) {
        err << "IoError: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "InternalError: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

}  // namespace phmmw
