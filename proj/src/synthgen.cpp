#include "phmmw/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "phmmw/error.hpp"
#include "phmmw/random.hpp"
#include "textutil.hpp"

namespace phmmw {

namespace {

constexpr double kLatticeSpacing = 3.8;  // typical consecutive C-alpha distance
constexpr double kJitter = 0.5;          // per axis, so |jitter| < 0.87 A
constexpr double kLoopOrigin = 100.0;
constexpr double kLoopColumnSpacing = 16.0;
constexpr double kLoopSequenceSpacing = 12.0;

Point3 jittered(Rng& rng, double x, double y, double z) {
    const double dx = (rng.uniform() * 2.0 - 1.0) * kJitter;
    const double dy = (rng.uniform() * 2.0 - 1.0) * kJitter;
    const double dz = (rng.uniform() * 2.0 - 1.0) * kJitter;
    return {x + dx, y + dy, z + dz};
}

std::string padded(const char* prefix, std::size_t i, std::size_t count) {
    const std::size_t width = std::to_string(count > 0 ? count - 1 : 0).size();
    std::string s = std::to_string(i);
    return prefix + std::string(width - std::min(width, s.size()), '0') + s;
}

}  // namespace

void SynthSpec::validate() const {
    auto bad = [](const std::string& msg) { fail_input("InvalidSpec", msg); };
    if (superfamilies < 1) bad("need at least one superfamily");
    if (families < 1 || sequences < 1) bad("need at least one family and one sequence per family");
    if (length < 2) bad("length must be at least 2");
    for (double r : {core_fraction, core_rate, noise_rate})
        if (!(r > 0.0 && r <= 1.0)) bad("rates and core fraction must lie in (0, 1]");
    if (!(gap_rate >= 0.0 && gap_rate < 1.0)) bad("gap_rate must lie in [0, 1)");
    if (!(core_rate > noise_rate)) bad("core_rate must exceed noise_rate");
    const auto ncore = static_cast<std::size_t>(std::llround(core_fraction * static_cast<double>(length)));
    if (ncore < 2 || ncore >= length) bad("core fraction must give at least 2 core and 1 non-core column");
}

SynthSpec parse_synth_spec(std::string_view text) {
    SynthSpec s;
    std::size_t lineno = 0;
    for (auto line : detail::split_lines(text)) {
        ++lineno;
        line = detail::trim(line);
        if (line.empty() || line.front() == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string_view::npos) fail_input("InvalidSpec", "expected key=value at line " + std::to_string(lineno));
        auto key = detail::trim(line.substr(0, eq));
        auto val = detail::trim(line.substr(eq + 1));
        auto integer = [&]() {
            auto v = detail::parse_uint(val);
            if (!v) fail_input("InvalidSpec", "bad integer for '" + std::string(key) + "'");
            return *v;
        };
        auto real = [&]() {
            auto v = detail::parse_double(val);
            if (!v) fail_input("InvalidSpec", "bad number for '" + std::string(key) + "'");
            return *v;
        };
        if (key == "seed") s.seed = integer();
        else if (key == "superfamilies") s.superfamilies = integer();
        else if (key == "families") s.families = integer();
        else if (key == "sequences") s.sequences = integer();
        else if (key == "length") s.length = integer();
        else if (key == "core_fraction") s.core_fraction = real();
        else if (key == "core_rate") s.core_rate = real();
        else if (key == "noise_rate") s.noise_rate = real();
        else if (key == "gap_rate") s.gap_rate = real();
        else fail_input("InvalidSpec", "unknown key '" + std::string(key) + "'");
    }
    s.validate();
    return s;
}

std::string format_synth_spec(const SynthSpec& s) {
    std::string out;
    out += "seed=" + std::to_string(s.seed) + "\n";
    out += "superfamilies=" + std::to_string(s.superfamilies) + "\n";
    out += "families=" + std::to_string(s.families) + "\n";
    out += "sequences=" + std::to_string(s.sequences) + "\n";
    out += "length=" + std::to_string(s.length) + "\n";
    out += "core_fraction=" + detail::format_shortest(s.core_fraction) + "\n";
    out += "core_rate=" + detail::format_shortest(s.core_rate) + "\n";
    out += "noise_rate=" + detail::format_shortest(s.noise_rate) + "\n";
    out += "gap_rate=" + detail::format_shortest(s.gap_rate) + "\n";
    return out;
}

std::vector<SynthSuperfamily> generate(const SynthSpec& spec) {
    spec.validate();
    const auto bg = default_background();
    const std::size_t len = spec.length;
    const auto ncore = static_cast<std::size_t>(std::llround(spec.core_fraction * static_cast<double>(len)));

    std::vector<SynthSuperfamily> out;
    for (std::size_t sf = 0; sf < spec.superfamilies; ++sf) {
        SynthSuperfamily result;
        result.dataset.id = padded("sf", sf, spec.superfamilies);
        Rng rng(fnv1a64("synth/" + std::to_string(spec.seed) + "/" + std::to_string(sf)));

        std::vector<int> templ(len);
        for (auto& r : templ) r = rng.residue(bg);
        std::vector<std::size_t> order(len);
        for (std::size_t j = 0; j < len; ++j) order[j] = j;
        for (std::size_t j = 0; j < ncore; ++j) std::swap(order[j], order[rng.uniform_int(j, len - 1)]);
        result.core_columns.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(ncore));
        std::sort(result.core_columns.begin(), result.core_columns.end());
        std::vector<int> core_rank(len, -1);
        for (std::size_t c = 0; c < ncore; ++c) core_rank[result.core_columns[c]] = static_cast<int>(c);

        std::size_t global_row = 0;
        for (std::size_t f = 0; f < spec.families; ++f) {
            const std::string fam = padded("fam", f, spec.families);
            std::vector<int> fam_templ(len);
            for (auto& r : fam_templ) r = rng.residue(bg);

            std::vector<AlignedSequence> rows;
            std::vector<std::vector<std::optional<ResidueAnnotation>>> ann;
            for (std::size_t q = 0; q < spec.sequences; ++q, ++global_row) {
                AlignedSequence row{result.dataset.id + "_" + fam + "_" + padded("s", q, spec.sequences), {}};
                std::vector<std::optional<ResidueAnnotation>> row_ann(len);
                for (std::size_t j = 0; j < len; ++j) {
                    const int c = core_rank[j];
                    if (c >= 0) {
                        const int aa = rng.bernoulli(spec.core_rate) ? templ[j] : rng.residue(bg);
                        row.cells.emplace_back(AminoAcid::from_index(aa));
                        const auto uc = static_cast<std::size_t>(c);
                        ResidueAnnotation a;
                        a.ss = SecondaryStructure::Sheet;
                        a.accessible = false;
                        a.calpha = jittered(rng, kLatticeSpacing * static_cast<double>(uc % 3),
                                            kLatticeSpacing * static_cast<double>((uc / 3) % 3),
                                            kLatticeSpacing * static_cast<double>(uc / 9));
                        row_ann[j] = a;
                    } else if (rng.bernoulli(spec.gap_rate)) {
                        row.cells.emplace_back(std::nullopt);
                    } else {
                        const int aa = rng.bernoulli(spec.noise_rate) ? fam_templ[j] : rng.residue(bg);
                        row.cells.emplace_back(AminoAcid::from_index(aa));
                        ResidueAnnotation a;
                        a.ss = SecondaryStructure::Loop;
                        a.accessible = true;
                        a.calpha = jittered(rng, kLoopOrigin + kLoopColumnSpacing * static_cast<double>(j),
                                            kLoopSequenceSpacing * static_cast<double>(global_row), 0.0);
                        row_ann[j] = a;
                    }
                }
                rows.push_back(std::move(row));
                ann.push_back(std::move(row_ann));
            }
            AnnotatedAlignment aln(std::move(rows));
            for (std::size_t i = 0; i < ann.size(); ++i)
                for (std::size_t j = 0; j < len; ++j)
                    if (ann[i][j]) aln.set_annotation(i, j, *ann[i][j]);
            result.dataset.families.push_back({fam, compute_ooi(aln, kDefaultOoiRadius)});
        }
        out.push_back(std::move(result));
    }

    std::vector<SuperfamilyDataset> datasets;
    for (auto& r : out) datasets.push_back(std::move(r.dataset));
    attach_negatives(datasets);
    for (std::size_t i = 0; i < out.size(); ++i) out[i].dataset = std::move(datasets[i]);
    return out;
}

void write_datasets(const std::vector<SynthSuperfamily>& data, const std::string& dir) {
    namespace fs = std::filesystem;
    for (const auto& sf : data) {
        for (const auto& fam : sf.dataset.families) {
            const fs::path d = fs::path(dir) / sf.dataset.id / fam.name;
            fs::create_directories(d);
            write_file((d / "aln.fasta").string(), format_alignment(fam.aln));
            write_file((d / "ann.tsv").string(), format_annotations(fam.aln));
        }
    }
}

}  // namespace phmmw
