#include "phmmw/structweights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "phmmw/error.hpp"

namespace phmmw {

namespace {

[[noreturn]] void missing(const AnnotatedAlignment& aln, std::size_t i, std::size_t j, const char* field) {
    fail_input("MissingAnnotation", "sequence '" + aln.sequence(i).id + "' column " + std::to_string(j) +
                                        " lacks field '" + field + "'");
}

// Runs `per_residue(i, j, annotation)` for every residue cell, gap cells get
// the gap weight.
template <typename F>
WeightMatrix build_local(const AnnotatedAlignment& aln, const HcsParams& p, F&& per_residue) {
    p.validate();
    WeightMatrix m(aln.num_sequences(), aln.num_columns(), WeightTag::Structural, p.gap_weight);
    for (std::size_t i = 0; i < aln.num_sequences(); ++i)
        for (std::size_t j = 0; j < aln.num_columns(); ++j)
            if (aln.is_residue(i, j)) m(i, j) = per_residue(i, j, aln.annotation(i, j));
    return m;
}

}  // namespace

void HcsParams::validate() const {
    if (!(ooi_radius > 0.0) || !std::isfinite(ooi_radius)) fail_input("InvalidParams", "ooi radius must be > 0");
    if (!(gap_weight > 0.0) || !std::isfinite(gap_weight)) fail_input("InvalidParams", "gap weight must be > 0");
}

double ss_weight(SecondaryStructure ss) {
    switch (ss) {
        case SecondaryStructure::Loop: return 1.0;
        case SecondaryStructure::Helix: return 2.0;
        case SecondaryStructure::Sheet: return 4.0;
    }
    return 1.0;
}

double acc_weight(bool accessible) { return accessible ? 1.0 : 3.0; }

WeightMatrix ss_weights(const AnnotatedAlignment& aln, const HcsParams& p) {
    return build_local(aln, p, [&](std::size_t i, std::size_t j, const std::optional<ResidueAnnotation>& a) {
        if (!a || !a->ss) missing(aln, i, j, "ss");
        return ss_weight(*a->ss);
    });
}

WeightMatrix acc_weights(const AnnotatedAlignment& aln, const HcsParams& p) {
    return build_local(aln, p, [&](std::size_t i, std::size_t j, const std::optional<ResidueAnnotation>& a) {
        if (!a || !a->accessible) missing(aln, i, j, "acc");
        return acc_weight(*a->accessible);
    });
}

WeightMatrix ooi_weights(const AnnotatedAlignment& aln, const HcsParams& p) {
    return build_local(aln, p, [&](std::size_t i, std::size_t j, const std::optional<ResidueAnnotation>& a) {
        if (!a || !a->ooi) missing(aln, i, j, "ooi");
        return static_cast<double>(std::max(*a->ooi, 1));
    });
}

double euclid(const Point3& a, const Point3& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    const double dz = a.z - b.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

AnnotatedAlignment compute_ooi(const AnnotatedAlignment& aln, double radius) {
    if (!(radius > 0.0)) fail_input("InvalidParams", "ooi radius must be > 0");
    AnnotatedAlignment out = aln;
    for (std::size_t i = 0; i < aln.num_sequences(); ++i) {
        std::vector<std::size_t> cols;
        std::vector<Point3> pts;
        for (std::size_t j = 0; j < aln.num_columns(); ++j) {
            if (!aln.is_residue(i, j)) continue;
            const auto& a = aln.annotation(i, j);
            if (!a || !a->calpha) missing(aln, i, j, "calpha");
            cols.push_back(j);
            pts.push_back(*a->calpha);
        }
        for (std::size_t r = 0; r < pts.size(); ++r) {
            int count = 0;
            for (std::size_t q = 0; q < pts.size(); ++q)
                if (q != r && euclid(pts[r], pts[q]) <= radius) ++count;
            auto a = *aln.annotation(i, cols[r]);
            a.ooi = count;
            out.set_annotation(i, cols[r], a);
        }
    }
    return out;
}

AnnotatedAlignment ensure_ooi(const AnnotatedAlignment& aln, double radius) {
    for (std::size_t i = 0; i < aln.num_sequences(); ++i)
        for (std::size_t j = 0; j < aln.num_columns(); ++j)
            if (aln.is_residue(i, j) && !(aln.annotation(i, j) && aln.annotation(i, j)->ooi))
                return compute_ooi(aln, radius);
    return aln;
}

WeightMatrix hcs_weights(const AnnotatedAlignment& aln, const HcsParams& p) {
    p.validate();
    const auto n = aln.num_sequences();
    const auto len = aln.num_columns();

    std::vector<double> omax(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < len; ++j) {
            if (!aln.is_residue(i, j)) continue;
            const auto& a = aln.annotation(i, j);
            if (!a || !a->calpha) missing(aln, i, j, "calpha");
            if (!a->ooi) missing(aln, i, j, "ooi");
            omax[i] = std::max(omax[i], static_cast<double>(*a->ooi));
        }
    }

    // di per cell; NaN marks "no other residue in the column".
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> di(n * len, nan);
    bool any_shared = false;
    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < len; ++j) {
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < n; ++i)
            if (aln.is_residue(i, j)) rows.push_back(i);
        if (rows.size() < 2) continue;
        any_shared = true;
        for (auto i : rows) {
            double sum = 0.0;
            for (auto k : rows)
                if (k != i) sum += euclid(*aln.annotation(i, j)->calpha, *aln.annotation(k, j)->calpha);
            const double mean = sum / static_cast<double>(rows.size() - 1);
            di[i * len + j] = mean;
            if (mean > 0.0) dmin = std::min(dmin, mean);
        }
    }
    if (!any_shared) fail_input("DegenerateAlignment", "no column holds two or more residues");

    WeightMatrix m(n, len, WeightTag::Structural, p.gap_weight);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < len; ++j) {
            const double d = di[i * len + j];
            if (!aln.is_residue(i, j) || std::isnan(d)) continue;
            m(i, j) = d > 0.0 ? dmin * omax[i] / d : omax[i];
        }
    }
    return m;
}

WeightMatrix combine(const WeightMatrix& w, const WeightMatrix& m) {
    if (w.rows() != m.rows() || w.cols() != m.cols())
        fail_input("DimensionMismatch", "weight matrices differ in shape");
    WeightMatrix out(w.rows(), w.cols(), WeightTag::Combined);
    for (std::size_t i = 0; i < w.rows(); ++i)
        for (std::size_t j = 0; j < w.cols(); ++j) out(i, j) = w(i, j) * m(i, j);
    return out;
}

}  // namespace phmmw
