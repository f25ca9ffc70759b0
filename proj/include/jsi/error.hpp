#pragma once

#include <stdexcept>
#include <string>

namespace jsi {

enum class Errc {
    invalid_input,
    degenerate_input,
    domain,
    coverage,
    query,
    alignment,
    config,
    estimation,
    calibration,
    insufficient_data,
};

const char* errc_name(Errc c) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what);
    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace jsi
