#pragma once

#include <string>

#include "cascadeprune/cascade.hpp"

namespace cascadeprune {

// Line-oriented text format, version 1:
//   CASCADEPRUNE 1
//   window W H
//   gamma G
//   node K T B          (K = node index, T = term count, B = threshold)
//   haar KIND X Y W H theta P alpha
//   hog X Y W H p1 ... p36 theta P alpha
// Reals carry 17 significant digits, so parse(serialize(c)) == c exactly.
std::string serialize_cascade(const Cascade& cascade);
Cascade parse_cascade(const std::string& text);

void save_cascade(const Cascade& cascade, const std::string& path);
Cascade load_cascade(const std::string& path);

}  // namespace cascadeprune
