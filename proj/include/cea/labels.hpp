#pragma once

#include "cea/image.hpp"

namespace cea {

/// Class label in {1, ..., C}.
struct ClassLabel {
  int value = 1;

  constexpr int index() const { return value - 1; }
  static constexpr ClassLabel from_index(int index) { return ClassLabel{index + 1}; }

  friend constexpr bool operator==(ClassLabel, ClassLabel) = default;
};

struct LabeledImage {
  ImageTensor image;
  ClassLabel label;
};

}  // namespace cea
