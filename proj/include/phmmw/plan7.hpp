#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "phmmw/alphabet.hpp"
#include "phmmw/seqdata.hpp"
#include "phmmw/seqweights.hpp"

namespace phmmw {

/// Transition slots of a node, in file order.
enum Transition : int { kMM = 0, kMI, kMD, kIM, kII, kDM, kDD, kNumTransitions };

inline constexpr std::array<const char*, kNumTransitions> kTransitionNames = {"MM", "MI", "MD", "IM", "II", "DM", "DD"};

using TransitionVector = std::array<double, kNumTransitions>;

/// Background composition used for pseudocounts, insert emissions and the
/// null model (Swiss-Prot-like amino-acid frequencies).
ResidueVector default_background();

/// Reads 20 "<letter> <freq>" lines (or key=value) and normalizes.
ResidueVector parse_background(std::string_view text);

struct NullModel {
    ResidueVector bg = default_background();
    double p1 = 350.0 / 351.0;  // geometric length extension

    void validate() const;
    /// Copy with p1 = L / (L + 1).
    NullModel for_length(std::size_t length) const;
    friend bool operator==(const NullModel&, const NullModel&) = default;
};

/// Single Dirichlet prior: alpha(sigma) = em_strength * bg(sigma) for match
/// emissions and alpha_tr[t] per transition. With scale_with_weights the
/// pseudocounts are multiplied by the mean training weight over residue cells,
/// so they keep their strength relative to counts whatever the weight scale.
struct PseudocountConfig {
    double em_strength = 9.0;
    ResidueVector bg = default_background();
    TransitionVector alpha_tr = {1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0};
    bool scale_with_weights = true;

    void validate() const;
    PseudocountConfig scaled(double factor) const;
};

/// key=value config text: em_strength, alpha_MM .. alpha_DD, alpha_tr (all
/// seven), scale_with_weights, background (path to a background file).
PseudocountConfig parse_pseudocount_config(std::string_view text, const std::string& base_dir = ".");

struct GumbelParams {
    double mu = 0.0;
    double lambda = 1.0;
    std::size_t n_samples = 0;
    friend bool operator==(const GumbelParams&, const GumbelParams&) = default;
};

/// Node k (1..K) owns match state M_k, insert state I_k and delete state D_k.
/// Node 0 is the begin node: its "match" state is B, it has an insert state
/// I_0 and no delete state. Transitions of node k lead into node k + 1, and
/// node K leads into E.
struct Plan7Node {
    ResidueVector match{};   // unused for node 0 (set to background)
    ResidueVector insert{};
    TransitionVector t{};
    friend bool operator==(const Plan7Node&, const Plan7Node&) = default;
};

using Metadata = std::vector<std::pair<std::string, std::string>>;

struct Plan7Model {
    std::vector<Plan7Node> nodes;          // K + 1 entries
    std::vector<std::size_t> match_columns;  // alignment column of each match state
    NullModel null;
    std::optional<GumbelParams> gumbel;
    Metadata metadata;

    std::size_t length() const { return nodes.empty() ? 0 : nodes.size() - 1; }
    std::string meta(std::string_view key) const;
    void set_meta(const std::string& key, std::string value);

    /// Throws MalformedModel if a stochastic constraint is broken.
    void validate() const;

    friend bool operator==(const Plan7Model&, const Plan7Model&) = default;
};

/// Whether transition t exists out of node k of a K-node model.
bool transition_legal(std::size_t k, std::size_t num_nodes, Transition t);

// ---- training ---------------------------------------------------------------

/// Column j is a match column iff the weighted residue occupancy is >= 0.5.
std::vector<std::size_t> select_match_columns(const AnnotatedAlignment& aln, const WeightMatrix& s);

/// c(sigma) = sum of s(i,j) over rows with residue sigma at column j. X adds 0.
ResidueVector weighted_emission_counts(const AnnotatedAlignment& aln, const WeightMatrix& s, std::size_t column);

enum class StateType { Begin, Match, Insert, Delete, End };

/// One step of a training path. `column` is the alignment column that
/// generated the state (none for Begin/End).
struct PathState {
    StateType type;
    std::size_t node;
    std::optional<std::size_t> column;
    friend bool operator==(const PathState&, const PathState&) = default;
};

/// Plan7 state path implied by row i. A delete state adjacent to an insert
/// run is repaired by letting the neighbouring inserted residue occupy the
/// deleted match state, so I->D and D->I never appear.
std::vector<PathState> training_path(const AnnotatedAlignment& aln, std::size_t row,
                                     const std::vector<std::size_t>& match_columns);

using TransitionCounts = std::vector<TransitionVector>;  // K + 1 nodes

TransitionCounts weighted_transition_counts(const AnnotatedAlignment& aln, const WeightMatrix& s,
                                            const std::vector<std::size_t>& match_columns);

/// (c + alpha) / sum(c + alpha) with alpha(sigma) = em_strength * bg(sigma).
ResidueVector estimate_emissions(const ResidueVector& counts, const PseudocountConfig& pc);

/// Per node, normalized within each source state's legal successors.
std::vector<TransitionVector> estimate_transitions(const TransitionCounts& counts, const PseudocountConfig& pc);

struct BuildOptions {
    std::string scheme = "1d";
    std::string seq_weighting = "gsc";
};

Plan7Model build_model(const AnnotatedAlignment& aln, const WeightMatrix& s, const PseudocountConfig& pc,
                       const NullModel& null, const BuildOptions& opts = {});

// ---- serialization ----------------------------------------------------------

std::string save_model(const Plan7Model& m);
Plan7Model load_model(std::string_view text);

std::uint64_t fnv1a64(std::string_view data);

}  // namespace phmmw
