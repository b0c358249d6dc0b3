#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

namespace assertctl {

// Canonical ordinal order doubles as the tie-break order everywhere.
enum class AssertionLabel : std::uint8_t {
  Positive = 0,
  Negated = 1,
  Possible = 2,
  Hypothetical = 3,
  Historical = 4,
  Family = 5,
};

inline constexpr std::size_t kLabelCount = 6;

inline constexpr std::array<AssertionLabel, kLabelCount> kAllLabels = {
    AssertionLabel::Positive,     AssertionLabel::Negated,    AssertionLabel::Possible,
    AssertionLabel::Hypothetical, AssertionLabel::Historical, AssertionLabel::Family,
};

constexpr std::size_t ordinal(AssertionLabel label) noexcept {
  return static_cast<std::size_t>(label);
}

AssertionLabel label_from_ordinal(std::size_t ordinal);

// Lowercase canonical form: "positive", "negated", ...
std::string_view to_string(AssertionLabel label) noexcept;

/// Parses a label name, trimmed and case-insensitive. The i2b2 names
/// "present" and "absent" are accepted for Positive and Negated.
/// Throws Error(UnknownLabel) otherwise, including for "conditional".
AssertionLabel parse_label(std::string_view text);

class LabelSet {
 public:
  constexpr LabelSet() = default;
  constexpr LabelSet(std::initializer_list<AssertionLabel> labels) {
    for (auto l : labels) insert(l);
  }

  constexpr void insert(AssertionLabel label) noexcept { bits_ |= mask(label); }
  constexpr bool contains(AssertionLabel label) const noexcept { return (bits_ & mask(label)) != 0; }
  constexpr std::size_t size() const noexcept {
    std::size_t n = 0;
    for (auto l : kAllLabels) n += contains(l) ? 1 : 0;
    return n;
  }
  constexpr bool is_subset_of(const LabelSet& other) const noexcept {
    return (bits_ & ~other.bits_) == 0;
  }
  std::vector<AssertionLabel> to_vector() const;

  friend constexpr bool operator==(const LabelSet&, const LabelSet&) = default;

 private:
  static constexpr std::uint8_t mask(AssertionLabel l) noexcept {
    return static_cast<std::uint8_t>(1u << ordinal(l));
  }
  std::uint8_t bits_ = 0;
};

// "i2b2" has no Historical label; "sleep" and "all" carry all six.
LabelSet label_set(std::string_view dataset);

}  // namespace assertctl
