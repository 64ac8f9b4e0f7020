#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "phmmw/plan7.hpp"
#include "phmmw/seqdata.hpp"

namespace phmmw {

/// One state of a decoded path. `residue` is the 0-based sequence position
/// emitted by M/I states.
struct TraceStep {
    StateType type;
    std::size_t node;
    std::optional<std::size_t> residue;
    friend bool operator==(const TraceStep&, const TraceStep&) = default;
};

struct Hit {
    std::string model;
    double bits = 0.0;
    std::optional<double> evalue;
    std::vector<TraceStep> path;  // Viterbi only
};

/// Natural-log probability of `residues` under the null model (geometric
/// length with extension p1, background composition; X contributes 1).
double null_log_prob(const std::vector<AminoAcid>& residues, const NullModel& null);

/// Best global path score in bits, log2 P(seq, path | m) - log2 P(seq | null).
/// Ties prefer M over D over I.
Hit viterbi(const Plan7Model& m, const std::vector<AminoAcid>& seq, const NullModel& null);

/// Summed-path log-odds score in bits.
double forward(const Plan7Model& m, const std::vector<AminoAcid>& seq, const NullModel& null);

struct CalibrationOptions {
    std::size_t samples = 1000;
    std::uint64_t seed = 42;
    double min_length_factor = 0.8;
    double max_length_factor = 1.2;
};

/// Maximum-likelihood Gumbel fit. Throws NonConvergence for degenerate input.
GumbelParams fit_gumbel(const std::vector<double>& scores);

/// Scores `samples` random background sequences (lengths uniform in
/// [0.8 K, 1.2 K]) with viterbi and fits a Gumbel to them.
GumbelParams calibrate(const Plan7Model& m, const NullModel& null, const CalibrationOptions& opts = {});

/// db_size * P(S >= score) under the fitted Gumbel.
double evalue(double score, const GumbelParams& g, std::uint64_t db_size);

/// Viterbi + E-value with the model's own null model and p1 = L/(L+1).
Hit score_sequence(const Plan7Model& m, const std::string& name, const std::vector<AminoAcid>& seq,
                   std::uint64_t db_size);

enum class PolicyKind { BestEvalue, Vote };

struct CombinationPolicy {
    PolicyKind kind = PolicyKind::BestEvalue;
    double threshold = 1.0;  // E-value acceptance threshold
    std::size_t quorum = 1;  // Vote only
};

struct LibraryMember {
    std::string name;
    Plan7Model model;
};

struct ModelLibrary {
    std::vector<LibraryMember> members;
    CombinationPolicy policy;

    void validate() const;
};

struct LibraryResult {
    std::vector<Hit> hits;  // member order
    double combined_evalue = 0.0;
    std::string best_model;
    std::size_t votes = 0;
    bool verdict = false;
};

LibraryResult score_library(const ModelLibrary& lib, const std::vector<AminoAcid>& seq, std::uint64_t db_size);

/// Accept/reject under `policy` given member e-values.
bool combine_verdict(const std::vector<double>& evalues, const CombinationPolicy& policy);

}  // namespace phmmw
