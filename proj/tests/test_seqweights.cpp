#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "phmmw/seqweights.hpp"
#include "test_util.hpp"

using namespace phmmw;

namespace {

GuideTree three_leaf_tree() {
    // ((0:0.05, 1:0.05):0.1, 2:0.4)
    GuideTree t;
    t.num_leaves = 3;
    t.nodes.resize(5);
    t.nodes[0] = {-1, -1, 3, 0.05, 0.0};
    t.nodes[1] = {-1, -1, 3, 0.05, 0.0};
    t.nodes[2] = {-1, -1, 4, 0.4, 0.0};
    t.nodes[3] = {0, 1, 4, 0.1, 0.05};
    t.nodes[4] = {3, 2, -1, 0.0, 0.4};
    return t;
}

DistanceMatrix matrix(std::size_t n, std::initializer_list<double> upper) {
    DistanceMatrix d{n, std::vector<double>(n * n, 0.0)};
    auto it = upper.begin();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = i + 1; k < n; ++k) d(i, k) = d(k, i) = *it++;
    return d;
}

}  // namespace

TEST_CASE("GSC on a hand-traced three-leaf tree") {
    // Leaves start with their own branch: 0.05, 0.05, 0.4. The internal edge
    // (0.1) is split in proportion 0.05 : 0.05, giving 0.1, 0.1, 0.4, which
    // normalizes to mean 1 as 0.5, 0.5, 2.0.
    auto w = gsc_weights(three_leaf_tree());
    REQUIRE(w.size() == 3);
    CHECK(w[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(w[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(w[2] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("UPGMA joins the closest pair and averages distances") {
    auto t = upgma(matrix(3, {0.1, 0.5, 0.5}));
    REQUIRE(t.nodes.size() == 5);
    CHECK(t.nodes[3].left == 0);
    CHECK(t.nodes[3].right == 1);
    CHECK(t.nodes[3].height == doctest::Approx(0.05));
    CHECK(t.nodes[4].height == doctest::Approx(0.25));
    CHECK(t.nodes[2].branch == doctest::Approx(0.25));
    CHECK(t.nodes[3].branch == doctest::Approx(0.2));
    CHECK(t.root() == 4);
    CHECK(t.leaves_under(4) == std::vector<std::size_t>{0, 1, 2});

    // 0.05, 0.05, 0.25 then the 0.2 edge split evenly: 0.15, 0.15, 0.25.
    auto w = gsc_weights(t);
    CHECK(w[0] == doctest::Approx(0.15 / (0.55 / 3)));
    CHECK(w[2] == doctest::Approx(0.25 / (0.55 / 3)));
}

TEST_CASE("UPGMA breaks ties on the lowest node pair") {
    auto t = upgma(matrix(4, {0.3, 0.3, 0.3, 0.3, 0.3, 0.3}));
    CHECK(t.nodes[4].left == 0);
    CHECK(t.nodes[4].right == 1);
    CHECK(t.nodes[5].left == 2);
    CHECK(t.nodes[5].right == 3);
}

TEST_CASE("identical sequences get uniform weights") {
    auto aln = parse_alignment(">a\nACD\n>b\nACD\n>c\nACD\n");
    auto w = default_weights(aln);
    for (double v : w.data()) CHECK(v == 1.0);
    CHECK(w.tag() == WeightTag::Default);
}

TEST_CASE("pairwise distances count shared residue columns only") {
    auto aln = parse_alignment(">a\nAC-D\n>b\nAD-D\n>c\n--EE\n");
    auto d = pairwise_distances(aln);
    CHECK(d(0, 1) == doctest::Approx(1.0 / 3.0));
    CHECK(d(0, 2) == doctest::Approx(1.0));  // only column 3 shared, D vs E
    CHECK(d(1, 0) == d(0, 1));
}

TEST_CASE("GSC properties on random alignments") {
    std::mt19937_64 g(7);
    for (int rep = 0; rep < 30; ++rep) {
        auto aln = oracle::random_alignment(g, 2 + rep % 6, 5 + rep % 7, 0.1);
        auto w = default_weights(aln);
        double sum = 0.0;
        for (std::size_t i = 0; i < w.rows(); ++i) {
            CHECK(w(i, 0) >= 0.0);
            sum += w(i, 0);
            for (std::size_t j = 1; j < w.cols(); ++j) CHECK(w(i, j) == w(i, 0));
        }
        CHECK(sum / static_cast<double>(w.rows()) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("duplicated sequences share weight") {
    auto aln = parse_alignment(">a\nACDEF\n>b\nACDEF\n>c\nKLMNP\n");
    auto w = default_weights(aln);
    CHECK(w(0, 0) == doctest::Approx(w(1, 0)));
    CHECK(w(2, 0) > w(0, 0));
}

TEST_CASE("broadcast validates and uniform scheme is all ones") {
    CHECK_ERROR_CODE(broadcast({1.0, -1.0}, 3), "InvalidWeight");
    CHECK_ERROR_CODE(broadcast({std::nan("")}, 3), "InvalidWeight");
    auto aln = parse_alignment(">a\nAC\n>b\nKL\n");
    auto u = default_weights(aln, SequenceScheme::Uniform);
    for (double v : u.data()) CHECK(v == 1.0);
    auto text = format_weights(u, aln);
    CHECK(text.rfind("#seq_id\tc0\tc1\n", 0) == 0);
    CHECK(text.find("a\t1\t1\n") != std::string::npos);
}
