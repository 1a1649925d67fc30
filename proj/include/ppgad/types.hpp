#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace ppgad {

enum class ActivityKind { Sitting, Walking, Other };

// Activity label attached to a recording. Sitting and Walking are the two
// activities the evaluation protocols use; anything else is kept verbatim.
class Activity {
 public:
  Activity() = default;
  Activity(ActivityKind kind) : kind_(kind) {}  // NOLINT(implicit)

  static Activity other(std::string label);
  // Case-insensitive "sitting"/"walking"; any other non-empty token becomes
  // Other(token). Throws ConfigError on an empty or whitespace-bearing token.
  static Activity parse(std::string_view text);

  ActivityKind kind() const { return kind_; }
  std::string name() const;

  friend bool operator==(const Activity& a, const Activity& b) {
    return a.kind_ == b.kind_ && a.label_ == b.label_;
  }
  friend bool operator<(const Activity& a, const Activity& b) {
    return a.name() < b.name();
  }

 private:
  ActivityKind kind_ = ActivityKind::Sitting;
  std::string label_;
};

// A single-channel PPG recording.
struct TimeSeries {
  std::vector<double> samples;
  double fs = 0.0;  // Hz
  std::string subject_id;
  Activity activity;
  std::string record;  // source file, for provenance

  // Throws DegenerateInputError / ConfigError when the invariants
  // (nonempty, fs > 0, finite samples) do not hold.
  void validate() const;
};

// A fixed-length segment cut from a TimeSeries, plus its provenance.
struct Window {
  std::vector<double> values;
  std::string source_subject;
  Activity source_activity;
  std::string source_record;
  std::size_t offset = 0;  // first sample index in the source recording
  std::size_t index = 0;   // ordinal of this window within its recording
  double start_time_s = 0.0;
};

}  // namespace ppgad
