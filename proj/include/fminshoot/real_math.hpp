// Math dispatch for templated working precision. The standard library has no
// __float128 overloads on this toolchain, so quad precision routes through
// libquadmath; every other Real goes through std.

#pragma once

#include <cmath>

#if defined(__SIZEOF_FLOAT128__) && defined(__GNUC__) && !defined(FMINSHOOT_NO_FLOAT128)
#define FMINSHOOT_HAVE_FLOAT128 1
#include <quadmath.h>
#endif

namespace fminshoot {
namespace detail {

template <class T> T fm_cos(T x) { return std::cos(x); }
template <class T> T fm_sin(T x) { return std::sin(x); }
template <class T> T fm_exp(T x) { return std::exp(x); }
template <class T> T fm_sqrt(T x) { return std::sqrt(x); }
template <class T> T fm_abs(T x) { return std::abs(x); }
template <class T> T fm_pow(T x, T y) { return std::pow(x, y); }
template <class T> bool fm_isfinite(T x) { return std::isfinite(x); }

#ifdef FMINSHOOT_HAVE_FLOAT128
inline __float128 fm_cos(__float128 x) { return cosq(x); }
inline __float128 fm_sin(__float128 x) { return sinq(x); }
inline __float128 fm_exp(__float128 x) { return expq(x); }
inline __float128 fm_sqrt(__float128 x) { return sqrtq(x); }
inline __float128 fm_abs(__float128 x) { return fabsq(x); }
inline __float128 fm_pow(__float128 x, __float128 y) { return powq(x, y); }
inline bool fm_isfinite(__float128 x) { return finiteq(x) != 0; }
#endif

}  // namespace detail
}  // namespace fminshoot
