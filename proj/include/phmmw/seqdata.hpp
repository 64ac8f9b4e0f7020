#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "phmmw/alphabet.hpp"

namespace phmmw {

enum class SecondaryStructure { Loop, Helix, Sheet };

struct Point3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    friend bool operator==(const Point3&, const Point3&) = default;
};

/// Per-residue structural facts. Every field may be absent independently.
struct ResidueAnnotation {
    std::optional<SecondaryStructure> ss;
    std::optional<bool> accessible;
    std::optional<int> ooi;
    std::optional<Point3> calpha;
    friend bool operator==(const ResidueAnnotation&, const ResidueAnnotation&) = default;
};

/// An alignment cell: a residue, or nullopt for a gap.
using Cell = std::optional<AminoAcid>;

struct AlignedSequence {
    std::string id;
    std::vector<Cell> cells;
    friend bool operator==(const AlignedSequence&, const AlignedSequence&) = default;
};

/// Unaligned sequence, used for scoring.
struct Sequence {
    std::string id;
    std::vector<AminoAcid> residues;
    friend bool operator==(const Sequence&, const Sequence&) = default;
};

struct ColumnEntry {
    std::size_t seq;
    Cell cell;
    std::optional<ResidueAnnotation> annotation;
};

/// N aligned sequences of common length L plus an optional annotation per
/// residue cell. Gap cells never carry an annotation.
class AnnotatedAlignment {
public:
    AnnotatedAlignment() = default;
    explicit AnnotatedAlignment(std::vector<AlignedSequence> sequences);

    std::size_t num_sequences() const { return sequences_.size(); }
    std::size_t num_columns() const { return sequences_.empty() ? 0 : sequences_.front().cells.size(); }

    const std::vector<AlignedSequence>& sequences() const { return sequences_; }
    const AlignedSequence& sequence(std::size_t i) const { return sequences_.at(i); }
    std::optional<std::size_t> find(std::string_view id) const;

    const Cell& cell(std::size_t i, std::size_t j) const { return sequences_[i].cells[j]; }
    bool is_residue(std::size_t i, std::size_t j) const { return sequences_[i].cells[j].has_value(); }

    const std::optional<ResidueAnnotation>& annotation(std::size_t i, std::size_t j) const {
        return annotations_[i][j];
    }
    /// Throws AnnotationOnGap if (i, j) is a gap.
    void set_annotation(std::size_t i, std::size_t j, ResidueAnnotation a);

    /// Entries for column j in sequence order. Throws IndexOutOfRange.
    std::vector<ColumnEntry> column(std::size_t j) const;

    /// New alignment holding the given rows (in the given order) with their
    /// annotations. Columns that become all-gap are dropped.
    AnnotatedAlignment select_rows(const std::vector<std::size_t>& rows) const;

    /// Rows of `other` appended below this alignment. Column counts must agree.
    AnnotatedAlignment stacked(const AnnotatedAlignment& other) const;

    Sequence ungapped(std::size_t i) const;

    friend bool operator==(const AnnotatedAlignment&, const AnnotatedAlignment&) = default;

private:
    std::vector<AlignedSequence> sequences_;
    std::vector<std::vector<std::optional<ResidueAnnotation>>> annotations_;
};

AnnotatedAlignment parse_alignment(std::string_view text);
AnnotatedAlignment parse_annotations(std::string_view text, const AnnotatedAlignment& aln);

/// Unaligned FASTA; gap characters are stripped.
std::vector<Sequence> parse_sequences(std::string_view text);

std::string format_alignment(const AnnotatedAlignment& aln);
/// One TSV row per annotated cell, in (sequence, column) order.
std::string format_annotations(const AnnotatedAlignment& aln);
std::string format_sequences(const std::vector<Sequence>& seqs);

char ss_letter(SecondaryStructure ss);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace phmmw
