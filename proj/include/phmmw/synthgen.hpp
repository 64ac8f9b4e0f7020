#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "phmmw/evalharness.hpp"

namespace phmmw {

/// Parameters of the planted-core generator.
///
/// Each superfamily has a template sequence and a set of core columns. Core
/// columns keep the template residue with probability `core_rate` in every
/// sequence. Each family draws its own template for the non-core columns, and
/// its sequences keep that residue with probability `noise_rate`. Mutations
/// draw from the background composition. Non-core residues are deleted with
/// probability `gap_rate`.
///
/// Annotations: core residues are Sheet, buried, with C-alphas within 2 A of
/// a per-column point of a compact lattice; non-core residues are Loop,
/// exposed, spread out at least 10 A apart from each other.
struct SynthSpec {
    std::uint64_t seed = 1;
    std::size_t superfamilies = 5;
    std::size_t families = 3;
    std::size_t sequences = 8;  // per family
    std::size_t length = 8;
    double core_fraction = 0.4;
    double core_rate = 0.95;
    double noise_rate = 0.4;
    double gap_rate = 0.05;

    void validate() const;
};

/// key=value lines with the field names above.
SynthSpec parse_synth_spec(std::string_view text);
std::string format_synth_spec(const SynthSpec& spec);

struct SynthSuperfamily {
    SuperfamilyDataset dataset;
    std::vector<std::size_t> core_columns;
};

/// Deterministic in spec.seed. Ooi values are filled from the coordinates.
std::vector<SynthSuperfamily> generate(const SynthSpec& spec);

/// Writes DIR/<superfamily>/<family>/{aln.fasta, ann.tsv}.
void write_datasets(const std::vector<SynthSuperfamily>& data, const std::string& dir);

}  // namespace phmmw
