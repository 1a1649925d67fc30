#pragma once

#include <vector>

#include "ppgad/types.hpp"

namespace ppgad::augment {

// Pretext class labels. The numeric values are the training targets.
enum class TransformClass : int {
  TimeReversal = 1,
  AmplitudeReversal = 2,
  TimeAmplitudeReversal = 3,
  Original = 4,
};

inline constexpr int kNumClasses = 4;

// Zero-based class index used by the classifier head.
inline int class_index(TransformClass c) { return static_cast<int>(c) - 1; }
TransformClass class_from_label(int label);

struct LabeledWindow {
  Window window;
  TransformClass label = TransformClass::Original;
};

Window time_reverse(const Window& w);
Window amplitude_reverse(const Window& w);
// Time reversal followed by amplitude reversal.
Window time_amplitude_reverse(const Window& w);

// Emits the four variants of every input window, adjacent and in label
// order 4, 1, 2, 3 (original first).
std::vector<LabeledWindow> build_pretext_dataset(const std::vector<Window>& windows);

}  // namespace ppgad::augment
