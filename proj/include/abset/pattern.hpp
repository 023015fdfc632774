#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace abset {

/// Tri-state labeling of the N messages during the threshold search.
/// Free and fixed-unsaturated messages together form the unsaturated set;
/// fixed-saturated messages form its complement.
enum class MsgLabel : std::uint8_t { Free, FixedUnsat, FixedSat };

struct SaturationPattern {
  std::vector<MsgLabel> labels;

  static SaturationPattern all_free(int n) {
    return SaturationPattern{std::vector<MsgLabel>(static_cast<size_t>(n), MsgLabel::Free)};
  }

  int size() const { return static_cast<int>(labels.size()); }

  std::vector<int> unsat_indices() const {
    std::vector<int> out;
    for (int i = 0; i < size(); ++i)
      if (labels[static_cast<size_t>(i)] != MsgLabel::FixedSat) out.push_back(i);
    return out;
  }

  std::vector<int> sat_indices() const {
    std::vector<int> out;
    for (int i = 0; i < size(); ++i)
      if (labels[static_cast<size_t>(i)] == MsgLabel::FixedSat) out.push_back(i);
    return out;
  }

  /// '1' for saturated messages, '0' for unsaturated ones.
  std::string bitstring() const {
    std::string s(static_cast<size_t>(size()), '0');
    for (int i = 0; i < size(); ++i)
      if (labels[static_cast<size_t>(i)] == MsgLabel::FixedSat) s[static_cast<size_t>(i)] = '1';
    return s;
  }
};

}  // namespace abset
