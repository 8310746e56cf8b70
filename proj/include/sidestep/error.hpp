#ifndef SIDESTEP_ERROR_HPP
#define SIDESTEP_ERROR_HPP

#include <stdexcept>
#include <string>

namespace sidestep {

enum class errc {
    invalid_parameter,
    window_too_short,
    empty_tail,
    duplicate_base,
    base_not_in_set,
    degree_overflow,
    dimension_mismatch,
    unpaired_nonreal,
    non_symmetric,
    out_of_range,
    probability_exceeds_one,
    multiset_mismatch,
    ill_conditioned,
};

inline const char* to_string(errc e) noexcept
{
    switch (e) {
    case errc::invalid_parameter: return "invalid parameter";
    case errc::window_too_short: return "window too short";
    case errc::empty_tail: return "empty tail window";
    case errc::duplicate_base: return "duplicate base";
    case errc::base_not_in_set: return "base not in set";
    case errc::degree_overflow: return "polynomial degree overflow";
    case errc::dimension_mismatch: return "dimension mismatch";
    case errc::unpaired_nonreal: return "unpaired nonreal eigenvalue";
    case errc::non_symmetric: return "matrix not symmetric";
    case errc::out_of_range: return "value out of range";
    case errc::probability_exceeds_one: return "probability exceeds one";
    case errc::multiset_mismatch: return "multiset difference failed";
    case errc::ill_conditioned: return "ill-conditioned system";
    }
    return "unknown error";
}

/// Every failure raised by the library carries one of the codes above so that
/// callers (the CLI in particular) can map it to an exit status.
class error : public std::runtime_error {
public:
    error(errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
    {
    }

    errc code() const noexcept { return code_; }

private:
    errc code_;
};

} // namespace sidestep

#endif // SIDESTEP_ERROR_HPP
