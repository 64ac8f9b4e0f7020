#include "phmmw/seqweights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "phmmw/error.hpp"
#include "textutil.hpp"

namespace phmmw {

const char* to_string(WeightTag tag) {
    switch (tag) {
        case WeightTag::Default: return "Default";
        case WeightTag::Structural: return "Structural";
        case WeightTag::Combined: return "Combined";
    }
    return "?";
}

WeightMatrix::WeightMatrix(std::size_t rows, std::size_t cols, WeightTag tag, double fill)
    : rows_(rows), cols_(cols), tag_(tag), data_(rows * cols, fill) {}

WeightMatrix WeightMatrix::scaled(double factor) const {
    WeightMatrix out = *this;
    for (auto& v : out.data_) v *= factor;
    return out;
}

std::vector<std::size_t> GuideTree::leaves_under(std::size_t v) const {
    std::vector<std::size_t> out;
    std::vector<std::size_t> stack{v};
    while (!stack.empty()) {
        auto u = stack.back();
        stack.pop_back();
        if (is_leaf(u)) {
            out.push_back(u);
        } else {
            stack.push_back(static_cast<std::size_t>(nodes[u].right));
            stack.push_back(static_cast<std::size_t>(nodes[u].left));
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

DistanceMatrix pairwise_distances(const AnnotatedAlignment& aln) {
    const auto n = aln.num_sequences();
    DistanceMatrix dm{n, std::vector<double>(n * n, 0.0)};
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = i + 1; k < n; ++k) {
            std::size_t shared = 0;
            std::size_t same = 0;
            for (std::size_t j = 0; j < aln.num_columns(); ++j) {
                const auto& a = aln.cell(i, j);
                const auto& b = aln.cell(k, j);
                if (!a || !b) continue;
                ++shared;
                if (*a == *b) ++same;
            }
            const double d = shared == 0 ? 1.0 : 1.0 - static_cast<double>(same) / static_cast<double>(shared);
            dm(i, k) = dm(k, i) = d;
        }
    }
    return dm;
}

GuideTree upgma(const DistanceMatrix& dist) {
    const std::size_t n = dist.n;
    GuideTree tree;
    tree.num_leaves = n;
    tree.nodes.resize(n);
    if (n <= 1) return tree;

    // Cluster distances indexed by node id; grows as internal nodes are added.
    const std::size_t total = 2 * n - 1;
    std::vector<double> d(total * total, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k) d[i * total + k] = dist(i, k);
    std::vector<std::size_t> size(total, 1);
    std::vector<std::size_t> active(n);
    for (std::size_t i = 0; i < n; ++i) active[i] = i;

    while (active.size() > 1) {
        std::size_t bi = 0, bk = 1;
        double best = std::numeric_limits<double>::infinity();
        // active is kept sorted, so the first strict minimum is the lowest pair.
        for (std::size_t a = 0; a < active.size(); ++a) {
            for (std::size_t b = a + 1; b < active.size(); ++b) {
                const double v = d[active[a] * total + active[b]];
                if (v < best) {
                    best = v;
                    bi = a;
                    bk = b;
                }
            }
        }
        const std::size_t ci = active[bi];
        const std::size_t ck = active[bk];
        const std::size_t node = tree.nodes.size();
        GuideTree::Node u;
        u.left = static_cast<int>(ci);
        u.right = static_cast<int>(ck);
        u.height = std::max({best / 2.0, tree.nodes[ci].height, tree.nodes[ck].height});
        tree.nodes.push_back(u);
        for (auto c : {ci, ck}) {
            tree.nodes[c].parent = static_cast<int>(node);
            tree.nodes[c].branch = tree.nodes[node].height - tree.nodes[c].height;
        }
        size[node] = size[ci] + size[ck];
        for (auto other : active) {
            if (other == ci || other == ck) continue;
            const double v = (static_cast<double>(size[ci]) * d[ci * total + other] +
                              static_cast<double>(size[ck]) * d[ck * total + other]) /
                             static_cast<double>(size[node]);
            d[node * total + other] = d[other * total + node] = v;
        }
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(bk));
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(bi));
        active.push_back(node);
    }
    return tree;
}

std::vector<double> gsc_weights(const GuideTree& tree) {
    const std::size_t n = tree.num_leaves;
    if (n == 0) return {};
    std::vector<double> w(n, 0.0);
    for (std::size_t leaf = 0; leaf < n; ++leaf) w[leaf] = tree.nodes[leaf].branch;

    // Children precede parents in node order, so this walks leaves-to-root and
    // each edge is shared out according to the weights accumulated beneath it.
    for (std::size_t v = n; v < tree.nodes.size(); ++v) {
        const double len = tree.nodes[v].branch;
        if (len == 0.0) continue;
        const auto below = tree.leaves_under(v);
        double sum = 0.0;
        for (auto l : below) sum += w[l];
        for (auto l : below)
            w[l] += sum > 0.0 ? len * w[l] / sum : len / static_cast<double>(below.size());
    }

    double total = 0.0;
    for (double x : w) total += x;
    if (!(total > 0.0)) return std::vector<double>(n, 1.0);
    const double scale = static_cast<double>(n) / total;
    for (double& x : w) x *= scale;
    return w;
}

WeightMatrix broadcast(const std::vector<double>& v, std::size_t length) {
    WeightMatrix m(v.size(), length, WeightTag::Default);
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i]) || v[i] < 0.0) fail_input("InvalidWeight", "weights must be finite and non-negative");
        for (std::size_t j = 0; j < length; ++j) m(i, j) = v[i];
    }
    return m;
}

WeightMatrix default_weights(const AnnotatedAlignment& aln, SequenceScheme scheme) {
    if (scheme == SequenceScheme::Uniform) return broadcast(std::vector<double>(aln.num_sequences(), 1.0), aln.num_columns());
    return broadcast(gsc_weights(upgma(pairwise_distances(aln))), aln.num_columns());
}

std::string format_weights(const WeightMatrix& m, const AnnotatedAlignment& aln) {
    std::string out = "#seq_id";
    for (std::size_t j = 0; j < m.cols(); ++j) out += "\tc" + std::to_string(j);
    out += '\n';
    for (std::size_t i = 0; i < m.rows(); ++i) {
        out += aln.sequence(i).id;
        for (std::size_t j = 0; j < m.cols(); ++j) out += '\t' + detail::format_g17(m(i, j));
        out += '\n';
    }
    return out;
}

}  // namespace phmmw
