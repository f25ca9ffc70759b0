#include "jsi/error.hpp"

namespace jsi {

const char* errc_name(Errc c) noexcept {
    switch (c) {
    case Errc::invalid_input: return "invalid-input";
    case Errc::degenerate_input: return "degenerate-input";
    case Errc::domain: return "domain";
    case Errc::coverage: return "coverage";
    case Errc::query: return "query";
    case Errc::alignment: return "alignment";
    case Errc::config: return "config";
    case Errc::estimation: return "estimation";
    case Errc::calibration: return "calibration";
    case Errc::insufficient_data: return "insufficient-data";
    }
    return "unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

}  // namespace jsi
