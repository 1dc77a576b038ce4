#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "attribforge/errors.hpp"

namespace attribforge {

// Binary feature-subset genome: bit j selects feature j. Construction and
// the GA operators guarantee at least one bit set.
struct Mask {
  std::vector<std::uint8_t> bits;

  Mask() = default;
  explicit Mask(std::size_t d, bool all_on = false)
      : bits(d, all_on ? std::uint8_t{1} : std::uint8_t{0}) {}

  std::size_t size() const { return bits.size(); }

  std::size_t count() const {
    std::size_t n = 0;
    for (const auto b : bits) n += b != 0;
    return n;
  }

  std::vector<std::size_t> selected() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < bits.size(); ++i)
      if (bits[i]) out.push_back(i);
    return out;
  }

  std::string to_string() const {
    std::string s(bits.size(), '0');
    for (std::size_t i = 0; i < bits.size(); ++i)
      if (bits[i]) s[i] = '1';
    return s;
  }

  static Mask from_string(const std::string& s) {
    Mask m(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '1') m.bits[i] = 1;
      else if (s[i] != '0') throw DataError("mask string must be 0s and 1s");
    }
    return m;
  }

  bool operator==(const Mask& other) const { return bits == other.bits; }
};

}  // namespace attribforge
