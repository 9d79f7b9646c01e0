#pragma once

#include <stdexcept>
#include <string>

namespace isoflow {

// Every library failure carries one of these codes.  The CLI maps
// precondition-class codes to exit 2, verification failures to exit 1 and
// anything unexpected to exit 3.
enum class Errc {
    not_closed,
    not_regular,
    not_transverse,
    degenerate_triple_point,
    inconsistent_topology,
    combinatorics_mismatch,
    offset_too_large,
    graph_exits_tube,
    width_too_large,
    tube_degenerate,
    step_failure,
    left_domain,
    shrink_factor_not_found,
    bump_infeasible,
    linear_part_not_rotation,
    not_a_graph,
    slope_too_large,
    double_point_escaped,
    graphness_lost,
    not_well_defined,
    subdivision_exhausted,
    precondition_failure,
    io_failure,
    internal_error,
};

const char* errc_name(Errc c);

class IsoflowError : public std::runtime_error {
public:
    IsoflowError(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
    Errc code() const { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) {
    throw IsoflowError(code, what);
}

inline void require(bool ok, Errc code, const std::string& what) {
    if (!ok) fail(code, what);
}

} // namespace isoflow
