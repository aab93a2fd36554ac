#pragma once

#include <chrono>
#include <cstdint>
#include <stdexcept>

namespace infill {

enum class OverlapMode { Maximize, Minimize, Neutral };

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SolverConfig {
  double alpha = 0.5;            // 1 = edge cost only, 0 = turn cost only
  std::int64_t delta = 64;       // max leaf cell area before forced subdivision
  std::int64_t max_area = 120;   // max total area of a joined run of cells
  OverlapMode overlap_mode = OverlapMode::Neutral;
  int exact_threshold = 12;      // below: brute-force oracle instead of the heuristic
  std::chrono::milliseconds relaxed_time_limit{30000};
  std::chrono::milliseconds full_time_limit{120000};
  bool alternate_corners = false;  // flip Hilbert entry/exit on odd layers
  int worker_count = 0;            // 0 = hardware concurrency
  double overlap_max_weight = 0.5;
  double overlap_min_weight = 1.5;

  void validate() const {
    if (alpha < 0.0 || alpha > 1.0) throw ConfigError("alpha must be in [0,1]");
    if (delta < 1) throw ConfigError("delta must be >= 1");
    if (max_area < delta) throw ConfigError("max area must be >= delta");
    if (exact_threshold < 1) throw ConfigError("exact threshold must be >= 1");
    if (overlap_max_weight <= 0 || overlap_min_weight <= 0) {
      throw ConfigError("overlap weights must be positive");
    }
  }
};

}  // namespace infill
