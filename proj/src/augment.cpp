#include "ppgad/augment.hpp"

#include <algorithm>
#include <string>

#include "ppgad/error.hpp"

namespace ppgad::augment {

TransformClass class_from_label(int label) {
  if (label < 1 || label > kNumClasses) {
    throw ContractViolation("transform label out of range: " + std::to_string(label));
  }
  return static_cast<TransformClass>(label);
}

Window time_reverse(const Window& w) {
  Window out = w;
  std::reverse(out.values.begin(), out.values.end());
  return out;
}

Window amplitude_reverse(const Window& w) {
  Window out = w;
  for (double& v : out.values) v = -v;
  return out;
}

Window time_amplitude_reverse(const Window& w) { return amplitude_reverse(time_reverse(w)); }

std::vector<LabeledWindow> build_pretext_dataset(const std::vector<Window>& windows) {
  if (windows.empty()) throw ContractViolation("build_pretext_dataset: no windows");
  std::vector<LabeledWindow> out;
  out.reserve(4 * windows.size());
  for (const Window& w : windows) {
    out.push_back({w, TransformClass::Original});
    out.push_back({time_reverse(w), TransformClass::TimeReversal});
    out.push_back({amplitude_reverse(w), TransformClass::AmplitudeReversal});
    out.push_back({time_amplitude_reverse(w), TransformClass::TimeAmplitudeReversal});
  }
  return out;
}

}  // namespace ppgad::augment
