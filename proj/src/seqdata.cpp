#include "phmmw/seqdata.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "phmmw/error.hpp"
#include "textutil.hpp"

namespace phmmw {

AnnotatedAlignment::AnnotatedAlignment(std::vector<AlignedSequence> sequences)
    : sequences_(std::move(sequences)) {
    if (sequences_.empty()) fail_input("EmptyInput", "alignment has no sequences");
    const std::size_t len = sequences_.front().cells.size();
    if (len == 0) fail_input("EmptyInput", "alignment has zero columns");
    std::set<std::string> seen;
    for (const auto& s : sequences_) {
        if (s.cells.size() != len)
            fail_input("RaggedAlignment", "sequence '" + s.id + "' has " + std::to_string(s.cells.size()) +
                                              " columns, expected " + std::to_string(len));
        if (s.id.empty()) fail_input("MalformedRecord", "empty sequence id");
        if (!seen.insert(s.id).second) fail_input("DuplicateId", "duplicate sequence id '" + s.id + "'");
    }
    annotations_.assign(sequences_.size(), std::vector<std::optional<ResidueAnnotation>>(len));
}

std::optional<std::size_t> AnnotatedAlignment::find(std::string_view id) const {
    for (std::size_t i = 0; i < sequences_.size(); ++i)
        if (sequences_[i].id == id) return i;
    return std::nullopt;
}

void AnnotatedAlignment::set_annotation(std::size_t i, std::size_t j, ResidueAnnotation a) {
    if (i >= num_sequences() || j >= num_columns())
        fail_input("IndexOutOfRange", "cell (" + std::to_string(i) + "," + std::to_string(j) + ") out of range");
    if (!is_residue(i, j))
        fail_input("AnnotationOnGap", "sequence '" + sequences_[i].id + "' has a gap at column " + std::to_string(j));
    if (a.calpha && !(std::isfinite(a.calpha->x) && std::isfinite(a.calpha->y) && std::isfinite(a.calpha->z)))
        fail_input("MalformedRow", "non-finite coordinate");
    if (a.ooi && *a.ooi < 0) fail_input("MalformedRow", "negative ooi");
    annotations_[i][j] = a;
}

std::vector<ColumnEntry> AnnotatedAlignment::column(std::size_t j) const {
    if (j >= num_columns())
        fail_input("IndexOutOfRange", "column " + std::to_string(j) + " >= " + std::to_string(num_columns()));
    std::vector<ColumnEntry> out;
    out.reserve(num_sequences());
    for (std::size_t i = 0; i < num_sequences(); ++i) out.push_back({i, cell(i, j), annotation(i, j)});
    return out;
}

AnnotatedAlignment AnnotatedAlignment::select_rows(const std::vector<std::size_t>& rows) const {
    std::vector<std::size_t> keep_cols;
    for (std::size_t j = 0; j < num_columns(); ++j) {
        for (auto r : rows) {
            if (is_residue(r, j)) {
                keep_cols.push_back(j);
                break;
            }
        }
    }
    std::vector<AlignedSequence> seqs;
    for (auto r : rows) {
        AlignedSequence s{sequences_.at(r).id, {}};
        for (auto j : keep_cols) s.cells.push_back(cell(r, j));
        seqs.push_back(std::move(s));
    }
    AnnotatedAlignment out(std::move(seqs));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t c = 0; c < keep_cols.size(); ++c)
            out.annotations_[i][c] = annotations_[rows[i]][keep_cols[c]];
    return out;
}

AnnotatedAlignment AnnotatedAlignment::stacked(const AnnotatedAlignment& other) const {
    if (other.num_columns() != num_columns())
        fail_input("DimensionMismatch", "cannot stack alignments with " + std::to_string(num_columns()) + " and " +
                                            std::to_string(other.num_columns()) + " columns");
    auto seqs = sequences_;
    seqs.insert(seqs.end(), other.sequences_.begin(), other.sequences_.end());
    AnnotatedAlignment out(std::move(seqs));
    std::copy(annotations_.begin(), annotations_.end(), out.annotations_.begin());
    std::copy(other.annotations_.begin(), other.annotations_.end(),
              out.annotations_.begin() + static_cast<std::ptrdiff_t>(annotations_.size()));
    return out;
}

Sequence AnnotatedAlignment::ungapped(std::size_t i) const {
    Sequence s{sequences_.at(i).id, {}};
    for (const auto& c : sequences_[i].cells)
        if (c) s.residues.push_back(*c);
    return s;
}

namespace {

struct FastaRecord {
    std::string id;
    std::string body;
    std::size_t line;
};

std::vector<FastaRecord> read_fasta_records(std::string_view text) {
    std::vector<FastaRecord> records;
    std::size_t lineno = 0;
    for (auto line : detail::split_lines(text)) {
        ++lineno;
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '>') {
            auto header = detail::trim(line.substr(1));
            auto ws = header.find_first_of(" \t");
            records.push_back({std::string(header.substr(0, ws)), {}, lineno});
            if (records.back().id.empty())
                fail_input("MalformedRecord", "empty FASTA header at line " + std::to_string(lineno));
            continue;
        }
        if (records.empty())
            fail_input("MalformedRecord", "sequence data before first header at line " + std::to_string(lineno));
        for (char c : line)
            if (c != ' ' && c != '\t') records.back().body.push_back(c);
    }
    if (records.empty()) fail_input("EmptyInput", "no FASTA records");
    return records;
}

[[noreturn]] void illegal(char c, const FastaRecord& r) {
    std::string shown = std::isprint(static_cast<unsigned char>(c)) ? std::string(1, c) : "\\x" + std::to_string(int(c));
    fail_input("IllegalCharacter", "illegal character '" + shown + "' in sequence '" + r.id + "'");
}

}  // namespace

AnnotatedAlignment parse_alignment(std::string_view text) {
    std::vector<AlignedSequence> seqs;
    for (const auto& r : read_fasta_records(text)) {
        AlignedSequence s{r.id, {}};
        s.cells.reserve(r.body.size());
        for (char c : r.body) {
            if (c == '-' || c == '.') {
                s.cells.emplace_back(std::nullopt);
            } else if (auto aa = AminoAcid::from_char(c)) {
                s.cells.emplace_back(*aa);
            } else {
                illegal(c, r);
            }
        }
        seqs.push_back(std::move(s));
    }
    return AnnotatedAlignment(std::move(seqs));
}

std::vector<Sequence> parse_sequences(std::string_view text) {
    std::vector<Sequence> out;
    std::set<std::string> seen;
    for (const auto& r : read_fasta_records(text)) {
        Sequence s{r.id, {}};
        for (char c : r.body) {
            if (c == '-' || c == '.') continue;
            auto aa = AminoAcid::from_char(c);
            if (!aa) illegal(c, r);
            s.residues.push_back(*aa);
        }
        if (!seen.insert(s.id).second) fail_input("DuplicateId", "duplicate sequence id '" + s.id + "'");
        out.push_back(std::move(s));
    }
    return out;
}

namespace {

template <typename T>
std::optional<T> parse_field(std::string_view field, auto&& convert, std::size_t lineno, const char* what) {
    if (field == "-") return std::nullopt;
    auto v = convert(field);
    if (!v) fail_input("MalformedRow", std::string("bad ") + what + " '" + std::string(field) + "' at line " +
                                           std::to_string(lineno));
    return v;
}

}  // namespace

AnnotatedAlignment parse_annotations(std::string_view text, const AnnotatedAlignment& aln) {
    AnnotatedAlignment out = aln;
    std::size_t lineno = 0;
    for (auto line : detail::split_lines(text)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (detail::trim(line).empty() || line.front() == '#') continue;
        auto f = detail::split(line, '\t');
        if (f.size() != 8)
            fail_input("MalformedRow", "expected 8 tab-separated fields, got " + std::to_string(f.size()) +
                                           " at line " + std::to_string(lineno));
        auto row = aln.find(f[0]);
        if (!row) fail_input("UnknownSequenceId", "unknown sequence id '" + std::string(f[0]) + "' at line " +
                                                      std::to_string(lineno));
        auto col = detail::parse_uint(f[1]);
        if (!col) fail_input("MalformedRow", "bad column index at line " + std::to_string(lineno));
        if (*col >= aln.num_columns())
            fail_input("IndexOutOfRange", "column " + std::to_string(*col) + " out of range at line " +
                                              std::to_string(lineno));

        ResidueAnnotation a;
        a.ss = parse_field<SecondaryStructure>(
            f[2],
            [](std::string_view s) -> std::optional<SecondaryStructure> {
                if (s == "L") return SecondaryStructure::Loop;
                if (s == "H") return SecondaryStructure::Helix;
                if (s == "C") return SecondaryStructure::Sheet;
                return std::nullopt;
            },
            lineno, "ss");
        a.accessible = parse_field<bool>(
            f[3],
            [](std::string_view s) -> std::optional<bool> {
                if (s == "0") return false;
                if (s == "1") return true;
                return std::nullopt;
            },
            lineno, "acc");
        a.ooi = parse_field<int>(
            f[4],
            [](std::string_view s) -> std::optional<int> {
                auto v = detail::parse_uint(s);
                if (!v || *v > 1000000) return std::nullopt;
                return static_cast<int>(*v);
            },
            lineno, "ooi");
        auto coord = [&](std::string_view s) { return parse_field<double>(s, detail::parse_double, lineno, "coordinate"); };
        auto x = coord(f[5]);
        auto y = coord(f[6]);
        auto z = coord(f[7]);
        if (x.has_value() != y.has_value() || y.has_value() != z.has_value())
            fail_input("MalformedRow", "coordinates must be all present or all absent at line " + std::to_string(lineno));
        if (x) a.calpha = Point3{*x, *y, *z};

        if (!aln.is_residue(*row, *col))
            fail_input("AnnotationOnGap", "sequence '" + std::string(f[0]) + "' has a gap at column " +
                                              std::to_string(*col) + " (line " + std::to_string(lineno) + ")");
        out.set_annotation(*row, *col, a);
    }
    return out;
}

char ss_letter(SecondaryStructure ss) {
    switch (ss) {
        case SecondaryStructure::Loop: return 'L';
        case SecondaryStructure::Helix: return 'H';
        case SecondaryStructure::Sheet: return 'C';
    }
    return '-';
}

std::string format_alignment(const AnnotatedAlignment& aln) {
    std::string out;
    for (const auto& s : aln.sequences()) {
        out += '>';
        out += s.id;
        out += '\n';
        for (const auto& c : s.cells) out += c ? c->letter() : '-';
        out += '\n';
    }
    return out;
}

std::string format_sequences(const std::vector<Sequence>& seqs) {
    std::string out;
    for (const auto& s : seqs) {
        out += '>' + s.id + '\n';
        for (auto aa : s.residues) out += aa.letter();
        out += '\n';
    }
    return out;
}

std::string format_annotations(const AnnotatedAlignment& aln) {
    std::string out = "#seq_id\tcolumn_index\tss\tacc\tooi\tx\ty\tz\n";
    for (std::size_t i = 0; i < aln.num_sequences(); ++i) {
        for (std::size_t j = 0; j < aln.num_columns(); ++j) {
            const auto& a = aln.annotation(i, j);
            if (!a) continue;
            out += aln.sequence(i).id;
            out += '\t' + std::to_string(j);
            out += '\t';
            out += a->ss ? ss_letter(*a->ss) : '-';
            out += '\t';
            out += a->accessible ? (*a->accessible ? '1' : '0') : '-';
            out += '\t' + (a->ooi ? std::to_string(*a->ooi) : std::string("-"));
            if (a->calpha) {
                out += '\t' + detail::format_shortest(a->calpha->x);
                out += '\t' + detail::format_shortest(a->calpha->y);
                out += '\t' + detail::format_shortest(a->calpha->z);
            } else {
                out += "\t-\t-\t-";
            }
            out += '\n';
        }
    }
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail_input("FileNotFound", "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, std::string_view contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail_input("FileNotWritable", "cannot write '" + path + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) fail_input("FileNotWritable", "write failed for '" + path + "'");
}

}  // namespace phmmw
