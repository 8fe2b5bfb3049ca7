#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace editopt {

// Supported heavy-atom elements. The declaration order is the enumeration
// order used everywhere an element is iterated (edit enumeration, tables).
enum class Element : std::uint8_t { B, C, N, O, F, P, S, Cl, Br, I };

inline constexpr std::array<Element, 10> kElements = {
    Element::B, Element::C,  Element::N,  Element::O,  Element::F,
    Element::P, Element::S,  Element::Cl, Element::Br, Element::I};

inline constexpr int kElementCount = static_cast<int>(kElements.size());

constexpr int element_index(Element e) { return static_cast<int>(e); }

constexpr std::string_view symbol(Element e) {
  constexpr std::array<std::string_view, 10> table = {"B", "C", "N",  "O",  "F",
                                                      "P", "S", "Cl", "Br", "I"};
  return table[element_index(e)];
}

// Single fixed valence per element; neutral molecules only.
constexpr int valence_cap(Element e) {
  constexpr std::array<int, 10> table = {3, 4, 3, 2, 1, 3, 2, 1, 1, 1};
  return table[element_index(e)];
}

// Standard atomic weights (IUPAC abridged, g/mol).
constexpr double atomic_weight(Element e) {
  constexpr std::array<double, 10> table = {10.81,  12.011, 14.007, 15.999, 18.998,
                                            30.974, 32.06,  35.45,  79.904, 126.904};
  return table[element_index(e)];
}

inline constexpr double kHydrogenWeight = 1.008;

inline std::optional<Element> element_from_symbol(std::string_view s) {
  for (Element e : kElements) {
    if (symbol(e) == s) return e;
  }
  return std::nullopt;
}

}  // namespace editopt
