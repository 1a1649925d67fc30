#include "ppgad/types.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "ppgad/error.hpp"

namespace ppgad {

Activity Activity::other(std::string label) {
  Activity a(ActivityKind::Other);
  a.label_ = std::move(label);
  return a;
}

Activity Activity::parse(std::string_view text) {
  if (text.empty()) throw ConfigError("activity label is empty");
  std::string lower;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      throw ConfigError("activity label contains whitespace: '" + std::string(text) + "'");
    }
    lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (lower == "sitting") return Activity(ActivityKind::Sitting);
  if (lower == "walking") return Activity(ActivityKind::Walking);
  return other(std::string(text));
}

std::string Activity::name() const {
  switch (kind_) {
    case ActivityKind::Sitting:
      return "Sitting";
    case ActivityKind::Walking:
      return "Walking";
    case ActivityKind::Other:
      break;
  }
  return label_;
}

void TimeSeries::validate() const {
  if (!(fs > 0.0) || !std::isfinite(fs)) {
    throw ConfigError("time series '" + subject_id + "': sampling rate must be positive");
  }
  if (samples.empty()) {
    throw DegenerateInputError("time series '" + subject_id + "' is empty");
  }
  const auto bad = std::find_if(samples.begin(), samples.end(),
                                [](double v) { return !std::isfinite(v); });
  if (bad != samples.end()) {
    throw DegenerateInputError("time series '" + subject_id + "' has a non-finite sample at index " +
                               std::to_string(bad - samples.begin()));
  }
}

}  // namespace ppgad
