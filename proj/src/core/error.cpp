#include "cmas/error.hpp"

namespace cmas {

const char* errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::shape:
      return "shape error";
    case Errc::domain:
      return "domain error";
    case Errc::projection:
      return "projection error";
    case Errc::numerical:
      return "numerical error";
    case Errc::config:
      return "configuration error";
    case Errc::io:
      return "io error";
  }
  return "error";
}

}  // namespace cmas
