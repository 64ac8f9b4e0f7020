#pragma once

#include "phmmw/seqdata.hpp"
#include "phmmw/seqweights.hpp"

namespace phmmw {

inline constexpr double kDefaultOoiRadius = 14.0;

/// Shared knobs for the structural weight builders.
struct HcsParams {
    double ooi_radius = kDefaultOoiRadius;  // Angstrom
    double gap_weight = 1.0;                // weight assigned to every gap cell

    void validate() const;
};

/// Loop 1, Helix 2, Sheet 4.
double ss_weight(SecondaryStructure ss);
/// 3 for buried residues, 1 for exposed ones.
double acc_weight(bool accessible);

WeightMatrix ss_weights(const AnnotatedAlignment& aln, const HcsParams& p = {});
WeightMatrix acc_weights(const AnnotatedAlignment& aln, const HcsParams& p = {});

/// Fills the ooi field of every residue with the number of other residues of
/// the same sequence whose C-alpha lies within `radius` (inclusive).
AnnotatedAlignment compute_ooi(const AnnotatedAlignment& aln, double radius = kDefaultOoiRadius);

/// compute_ooi only if some residue lacks an ooi value.
AnnotatedAlignment ensure_ooi(const AnnotatedAlignment& aln, double radius = kDefaultOoiRadius);

/// max(ooi, 1) per residue.
WeightMatrix ooi_weights(const AnnotatedAlignment& aln, const HcsParams& p = {});

double euclid(const Point3& a, const Point3& b);

/// Homologous-core weights: residues whose C-alpha sits close to the other
/// residues of its column get weights near the sequence's maximal Ooi number.
///
///   di(i,j) = mean_{k != i, residue at (k,j)} |ca(i,j) - ca(k,j)|
///   m(i,j)  = d_min * Omax(i) / di(i,j)
///
/// d_min is the smallest positive di in the whole alignment and Omax(i) the
/// largest Ooi number of sequence i (floored at 1). Coincident points (di = 0)
/// get Omax(i); residues alone in their column and gaps get gap_weight.
WeightMatrix hcs_weights(const AnnotatedAlignment& aln, const HcsParams& p = {});

/// Element-wise product W o Ms, tagged Combined.
WeightMatrix combine(const WeightMatrix& w, const WeightMatrix& m);

}  // namespace phmmw
