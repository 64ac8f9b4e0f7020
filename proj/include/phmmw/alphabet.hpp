#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace phmmw {

inline constexpr int kAlphabetSize = 20;
inline constexpr std::string_view kResidues = "ACDEFGHIKLMNPQRSTVWY";

/// One-letter amino-acid code. Index 0..19 are the standard residues in
/// kResidues order; index 20 is X (unknown), which never indexes an emission
/// vector.
class AminoAcid {
public:
    static constexpr std::uint8_t kUnknown = 20;

    constexpr AminoAcid() = default;

    static constexpr std::optional<AminoAcid> from_char(char c) {
        if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
        if (c == 'X') return AminoAcid(kUnknown);
        for (std::size_t i = 0; i < kResidues.size(); ++i)
            if (kResidues[i] == c) return AminoAcid(static_cast<std::uint8_t>(i));
        return std::nullopt;
    }

    static constexpr AminoAcid from_index(int i) { return AminoAcid(static_cast<std::uint8_t>(i)); }

    constexpr bool is_unknown() const { return index_ == kUnknown; }
    constexpr int index() const { return index_; }
    constexpr char letter() const { return is_unknown() ? 'X' : kResidues[index_]; }

    friend constexpr bool operator==(AminoAcid, AminoAcid) = default;

private:
    constexpr explicit AminoAcid(std::uint8_t i) : index_(i) {}
    std::uint8_t index_ = kUnknown;
};

using ResidueVector = std::array<double, kAlphabetSize>;

}  // namespace phmmw
