#include "ranklab/errors.hpp"

namespace ranklab {

namespace {

std::string locate(const std::string& what, std::optional<std::size_t> path,
                   std::optional<std::size_t> time_index) {
    std::string out = what;
    if (path) out += " (path " + std::to_string(*path);
    if (time_index) out += std::string(path ? ", " : " (") + "time index " + std::to_string(*time_index);
    if (path || time_index) out += ")";
    return out;
}

}  // namespace

NumericError::NumericError(const std::string& what, std::optional<std::size_t> path,
                           std::optional<std::size_t> time_index)
    : std::runtime_error(locate(what, path, time_index)),
      message_(what),
      path_(path),
      time_index_(time_index) {}

NumericError NumericError::on_path(std::size_t path) const {
    return NumericError(message_, path, time_index_);
}

}  // namespace ranklab
