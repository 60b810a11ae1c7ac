#ifndef DJM_PRECISION_HPP
#define DJM_PRECISION_HPP

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ios>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <boost/multiprecision/mpfr.hpp>

namespace djm
{

/// Working real type: MPFR-backed, run-time precision, expression templates off.
using real = boost::multiprecision::number<boost::multiprecision::mpfr_float_backend<0>,
                                           boost::multiprecision::et_off>;

inline constexpr unsigned default_digits = 100;
inline constexpr unsigned minimum_digits = 30;

/// Decimal working precision and the coefficient-pruning threshold used by
/// canonicalization. Construct through make_precision() so the invariants hold.
struct precision_config {
    unsigned digits = default_digits;
    real prune_threshold;

    /// 10^(exponent) at the current working precision.
    static real pow10(long exponent)
    {
        return boost::multiprecision::pow(real(10), exponent);
    }
};

inline precision_config make_precision(unsigned digits, std::optional<real> prune = std::nullopt)
{
    if (digits < minimum_digits) {
        throw std::invalid_argument("precision: digits must be >= " + std::to_string(minimum_digits));
    }
    real::default_precision(digits);
    precision_config cfg;
    cfg.digits = digits;
    cfg.prune_threshold = prune ? *prune : precision_config::pow10(5 - static_cast<long>(digits));
    // prune_threshold < 10^(-digits/2)
    if (!(cfg.prune_threshold < precision_config::pow10(-static_cast<long>(digits) / 2))) {
        throw std::invalid_argument("precision: prune threshold must be below 10^(-digits/2)");
    }
    return cfg;
}

namespace detail
{
inline precision_config &current_config_storage()
{
    static precision_config cfg = [] {
        real::default_precision(default_digits);
        precision_config c;
        c.digits = default_digits;
        c.prune_threshold = precision_config::pow10(5 - static_cast<long>(default_digits));
        return c;
    }();
    return cfg;
}
// Installs the default before any namespace-scope real in an including
// translation unit is constructed; MPFR would otherwise start at 20 digits.
inline const bool precision_installed = (current_config_storage(), true);
} // namespace detail

/// The process-wide working precision. MPFR's default precision is global, so
/// switch it only while no other thread is computing.
inline const precision_config &current_precision()
{
    return detail::current_config_storage();
}

/// RAII switch of the process-wide working precision.
class precision_scope
{
public:
    explicit precision_scope(const precision_config &cfg) : saved_(current_precision())
    {
        install(cfg);
    }
    explicit precision_scope(unsigned digits) : precision_scope(make_precision(digits)) {}
    ~precision_scope()
    {
        install(saved_);
    }
    precision_scope(const precision_scope &) = delete;
    precision_scope &operator=(const precision_scope &) = delete;

private:
    static void install(const precision_config &cfg)
    {
        real::default_precision(cfg.digits);
        auto &slot = detail::current_config_storage();
        slot.digits = cfg.digits;
        slot.prune_threshold = real(cfg.prune_threshold);
    }

    precision_config saved_;
};

/// Digits from DJM_DIGITS when set and valid, otherwise the fallback.
inline unsigned digits_from_environment(unsigned fallback = default_digits)
{
    const char *env = std::getenv("DJM_DIGITS");
    if (env == nullptr || *env == '\0') {
        return fallback;
    }
    char *end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < static_cast<long>(minimum_digits)) {
        throw std::invalid_argument(std::string("DJM_DIGITS: invalid value '") + env + "'");
    }
    return static_cast<unsigned>(v);
}

/// Parses a decimal literal at the current working precision (no double round trip).
inline real parse_real(std::string_view text)
{
    std::string s(text);
    const auto first = s.find_first_not_of(" \t");
    const auto last = s.find_last_not_of(" \t");
    if (first == std::string::npos) {
        throw std::invalid_argument("empty number");
    }
    s = s.substr(first, last - first + 1);
    try {
        return real(s);
    } catch (const std::exception &) {
        throw std::invalid_argument("not a number: '" + s + "'");
    }
}

/// Scientific rendering with `significant` digits (0 = every digit held at
/// the current precision).
inline std::string format_sci(const real &v, std::streamsize significant = 0)
{
    if (significant == 1 && v == 0) {
        return "0e+00";
    }
    if (significant != 1 || !boost::multiprecision::isfinite(v)) {
        // Boost counts digits after the point, and 0 means all of them.
        return v.str(significant > 1 ? significant - 1 : 0, std::ios_base::scientific);
    }
    long e = boost::multiprecision::floor(boost::multiprecision::log10(boost::multiprecision::abs(v))).convert_to<long>();
    real m = boost::multiprecision::round(v / boost::multiprecision::pow(real(10), e));
    if (boost::multiprecision::abs(m) >= 10) {
        m /= 10;
        ++e;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%de%+03ld", m.convert_to<int>(), e);
    return buf;
}

/// Fewest significant digits that parse back to exactly v.
inline std::string format_shortest(const real &v)
{
    if (v == 0) {
        return "0e+00";
    }
    const auto limit = static_cast<std::streamsize>(current_precision().digits) + 5;
    for (std::streamsize n = 1; n < limit; ++n) {
        std::string s = format_sci(v, n);
        if (real(s) == v) {
            return s;
        }
    }
    return v.str(0, std::ios_base::scientific);
}

} // namespace djm

#endif
