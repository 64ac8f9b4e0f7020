#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "phmmw/seqdata.hpp"

namespace phmmw {

enum class WeightTag { Default, Structural, Combined };

const char* to_string(WeightTag tag);

/// Dense N x L matrix of non-negative finite per-residue training weights.
class WeightMatrix {
public:
    WeightMatrix() = default;
    WeightMatrix(std::size_t rows, std::size_t cols, WeightTag tag, double fill = 0.0);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    WeightTag tag() const { return tag_; }

    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }

    const std::vector<double>& data() const { return data_; }

    /// Returns a copy with every entry multiplied by `factor`.
    WeightMatrix scaled(double factor) const;

    friend bool operator==(const WeightMatrix&, const WeightMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    WeightTag tag_ = WeightTag::Default;
    std::vector<double> data_;
};

/// N x N row-major symmetric matrix.
struct DistanceMatrix {
    std::size_t n = 0;
    std::vector<double> d;
    double operator()(std::size_t i, std::size_t k) const { return d[i * n + k]; }
    double& operator()(std::size_t i, std::size_t k) { return d[i * n + k]; }
};

/// Rooted binary tree. Nodes 0..N-1 are leaves (sequence indices); internal
/// nodes follow in creation order and the root is the last node.
struct GuideTree {
    struct Node {
        int left = -1;
        int right = -1;
        int parent = -1;
        double branch = 0.0;  // length of the edge to the parent
        double height = 0.0;
    };
    std::size_t num_leaves = 0;
    std::vector<Node> nodes;

    std::size_t root() const { return nodes.size() - 1; }
    bool is_leaf(std::size_t v) const { return v < num_leaves; }
    /// Leaves below v, left subtree first.
    std::vector<std::size_t> leaves_under(std::size_t v) const;
};

/// Fractional-identity distance: 1 - matches / (columns where both rows have
/// residues); 1 when no such column exists.
DistanceMatrix pairwise_distances(const AnnotatedAlignment& aln);

/// Average-linkage agglomeration. Ties go to the lowest (i, k) pair of active
/// cluster ids.
GuideTree upgma(const DistanceMatrix& dist);

/// Gerstein-Sonnhammer-Chothia weights, normalized to mean 1.
std::vector<double> gsc_weights(const GuideTree& tree);

/// Row i of the result is constant v[i]; tagged Default.
WeightMatrix broadcast(const std::vector<double>& v, std::size_t length);

enum class SequenceScheme { Gsc, Uniform };

/// Default per-sequence weights for the alignment (W).
WeightMatrix default_weights(const AnnotatedAlignment& aln, SequenceScheme scheme = SequenceScheme::Gsc);

std::string format_weights(const WeightMatrix& m, const AnnotatedAlignment& aln);

}  // namespace phmmw
