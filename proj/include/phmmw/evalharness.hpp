#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "phmmw/plan7.hpp"
#include "phmmw/scorer.hpp"
#include "phmmw/seqdata.hpp"
#include "phmmw/stats.hpp"
#include "phmmw/structweights.hpp"

namespace phmmw {

// ---- model schemes ------------------------------------------------------------

enum class Scheme { OneD, TwoD, Acc, Ooi, ThreeD };

inline constexpr Scheme kAllSchemes[] = {Scheme::OneD, Scheme::TwoD, Scheme::Acc, Scheme::Ooi, Scheme::ThreeD};

/// "1d" / "2d" / "acc" / "ooi" / "3d".
const char* scheme_key(Scheme s);
/// pHMM1D / pHMM2D / pHMMAcc / pHMMOi / pHMM3D.
const char* scheme_model_name(Scheme s);
std::optional<Scheme> parse_scheme(std::string_view key);

/// Structural matrix Ms for a scheme; all ones for 1d. Ooi values are
/// computed from C-alpha coordinates when any residue lacks one.
WeightMatrix structural_matrix(const AnnotatedAlignment& aln, Scheme s, const HcsParams& p = {});

/// Trains the scheme's model: W (GSC) combined with Ms, then build_model.
Plan7Model build_scheme_model(const AnnotatedAlignment& aln, Scheme s, const PseudocountConfig& pc,
                              const NullModel& null, const HcsParams& p = {});

// ---- datasets -----------------------------------------------------------------

struct Family {
    std::string name;
    AnnotatedAlignment aln;
};

/// Families of one superfamily share a common column space (rows of one
/// superfamily-wide alignment), so any subset of them stacks into a training
/// alignment.
struct SuperfamilyDataset {
    std::string id;
    std::vector<Family> families;
    std::vector<Sequence> negatives;

    std::size_t num_sequences() const;
    /// Empty when the dataset has >= 3 families and >= 20 sequences.
    std::vector<std::string> eligibility_problems() const;
};

/// Reads DIR/<superfamily>/<family>/{aln.fasta, ann.tsv}, sorted by name, and
/// fills each superfamily's negatives with every sequence of the others.
std::vector<SuperfamilyDataset> load_datasets(const std::string& dir);

/// Sets each dataset's negatives to the ungapped sequences of all the others.
void attach_negatives(std::vector<SuperfamilyDataset>& datasets);

struct Split {
    std::string held_out;
    AnnotatedAlignment train;
    std::vector<Sequence> positives;
    std::vector<Sequence> negatives;
};

/// Leave-one-family-out: one split per family.
std::vector<Split> split_lofo(const SuperfamilyDataset& ds);

// ---- curves -------------------------------------------------------------------

struct ScoredHit {
    std::string id;
    bool positive = false;
    double evalue = 0.0;
};

struct ConfusionRow {
    double threshold = 0.0;
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    friend bool operator==(const ConfusionRow&, const ConfusionRow&) = default;
};

/// 52 thresholds, 1e-50, 1e-49, ..., 1e1.
std::vector<double> default_thresholds();

/// Predicted positive iff evalue <= threshold.
std::vector<ConfusionRow> sweep(const std::vector<ScoredHit>& hits, const std::vector<double>& thresholds);

struct CurvePoint {
    double x = 0.0;
    double y = 0.0;
    friend auto operator<=>(const CurvePoint&, const CurvePoint&) = default;
};

/// (FPR, TPR), deduplicated and sorted.
std::vector<CurvePoint> roc_points(const std::vector<ConfusionRow>& table);
/// (recall, precision), precision 1 when nothing is predicted; deduplicated and sorted.
std::vector<CurvePoint> pr_points(const std::vector<ConfusionRow>& table);

/// Trapezoidal area of a ROC curve after anchoring it at (0,0) and (1,1).
double auc(std::vector<CurvePoint> points);
/// Trapezoidal area under (recall, precision) points, no anchoring.
double pr_auc(std::vector<CurvePoint> points);

// ---- experiments --------------------------------------------------------------

struct ExperimentConfig {
    PseudocountConfig pc;
    HcsParams hcs;
    CalibrationOptions calibration;
    std::vector<double> thresholds = default_thresholds();
    std::uint64_t seed = 42;
    unsigned jobs = 1;
};

struct SplitResult {
    std::string superfamily;
    std::string family;
    std::string arm;
    std::vector<ConfusionRow> table;
    double roc_auc = 0.0;
    double pr_auc = 0.0;
    std::size_t positives = 0;
    std::size_t negatives = 0;
};

struct SplitFailure {
    std::string superfamily;
    std::string family;
    std::string arm;
    std::string error;
};

struct ArmSummary {
    std::string arm;
    double macro_roc_auc = 0.0;  // mean over superfamilies of mean split AUC
    double macro_pr_auc = 0.0;
    double pooled_roc_auc = 0.0;
    double pooled_pr_auc = 0.0;
    std::vector<ConfusionRow> pooled_table;
    std::vector<CurvePoint> macro_roc;  // per threshold, mean over superfamilies
    std::vector<CurvePoint> macro_pr;
    std::map<std::string, double> superfamily_roc_auc;
    std::map<std::string, double> superfamily_pr_auc;
};

struct PairTest {
    std::string arm_a;
    std::string arm_b;
    std::optional<TTestResult> result;  // nullopt when ZeroVariance or too few units
    std::string status;
};

struct EvalReport {
    std::vector<std::string> arms;  // in request order
    std::string policy;
    std::uint64_t seed = 0;
    std::vector<double> thresholds;
    std::vector<SplitResult> splits;  // sorted by (superfamily, family, arm)
    std::vector<SplitFailure> failures;
    std::map<std::string, ArmSummary> summary;
    std::vector<PairTest> ttests;
    std::vector<std::string> ineligible;

    const ArmSummary& arm(const std::string& key) const { return summary.at(key); }
};

/// Arms are scheme keys plus "lib" (all five schemes, combined under
/// `policy`). Library e-value per sequence: the minimum member e-value under
/// BestEvalue, the quorum-th smallest under Vote.
EvalReport run_experiment(const std::vector<SuperfamilyDataset>& datasets, const std::vector<std::string>& arms,
                          const CombinationPolicy& policy, const ExperimentConfig& config);

/// Writes curves.csv, auc.csv and ttest.csv; every file starts with
/// `provenance` as a comment line.
void write_report(const EvalReport& report, const std::string& dir, const std::string& provenance);

}  // namespace phmmw
