#include "cmas/tensor.hpp"

#include <cmath>
#include <string>

#include "cmas/error.hpp"

namespace cmas {

bool Pose3DSequence::all_finite() const {
  for (double c : coords) {
    if (!std::isfinite(c)) return false;
  }
  return true;
}

void Pose2DSequence::validate() const {
  const std::size_t n = static_cast<std::size_t>(frames) * joints;
  if (frames <= 0 || joints <= 0 || coords.size() != n * 2) {
    fail(Errc::shape, "2D sequence: coordinate buffer does not match " +
                          std::to_string(frames) + "x" +
                          std::to_string(joints) + "x2");
  }
  if (!confidence.empty() && confidence.size() != n) {
    fail(Errc::shape, "2D sequence: confidence buffer has wrong size");
  }
  if (!mask.empty() && mask.size() != n) {
    fail(Errc::shape, "2D sequence: mask buffer has wrong size");
  }
  for (double c : confidence) {
    if (!(c >= 0.0 && c <= 1.0)) {
      fail(Errc::domain, "2D sequence: confidence outside [0,1]");
    }
  }
  for (int l = 0; l < frames; ++l) {
    for (int j = 0; j < joints; ++j) {
      if (!observed(l, j)) continue;
      const auto p = at(l, j);
      if (!std::isfinite(p.x()) || !std::isfinite(p.y())) {
        fail(Errc::domain, "2D sequence: non-finite observed coordinate at frame " +
                               std::to_string(l) + ", joint " +
                               std::to_string(j));
      }
    }
  }
}

}  // namespace cmas
