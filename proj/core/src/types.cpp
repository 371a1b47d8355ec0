#include "curvlab/types.hpp"

#include <cmath>

#include "curvlab/error.hpp"

namespace curvlab {

GeneralizedEigen generalized_eigen(const Mat2& a, const Mat2& b) {
  // Reduce to a symmetric standard problem through the Cholesky factor of b.
  const double l11 = std::sqrt(b(0, 0));
  const double l21 = b(1, 0) / l11;
  const double l22sq = b(1, 1) - l21 * l21;
  if (!(b(0, 0) > 0.0) || !(l22sq > 0.0)) {
    throw Error(ErrorCode::kNotSpd, "generalized_eigen: second matrix is not positive definite");
  }
  const double l22 = std::sqrt(l22sq);
  Mat2 linv;
  linv << 1.0 / l11, 0.0, -l21 / (l11 * l22), 1.0 / l22;
  const Mat2 sym = 0.5 * (a + a.transpose());
  const Mat2 m = linv * sym * linv.transpose();

  const double mean = 0.5 * (m(0, 0) + m(1, 1));
  const double half_diff = 0.5 * (m(0, 0) - m(1, 1));
  const double r = std::hypot(half_diff, m(0, 1));
  const double lmin = mean - r;
  const double lmax = mean + r;

  Vec2 e(1.0, 0.0);
  if (r > 1e-14 * (std::abs(mean) + 1.0)) {
    const Vec2 c1(m(0, 1), lmin - m(0, 0));
    const Vec2 c2(lmin - m(1, 1), m(0, 1));
    e = c1.squaredNorm() >= c2.squaredNorm() ? c1 : c2;
    e.normalize();
  }
  Vec2 v = linv.transpose() * e;
  v /= std::sqrt(v.dot(b * v));
  return {lmin, lmax, v};
}

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kUnknownIdentifier: return "unknown_identifier";
    case ErrorCode::kArity: return "arity";
    case ErrorCode::kDomain: return "domain";
    case ErrorCode::kPeriodicity: return "periodicity";
    case ErrorCode::kNotSpd: return "not_spd";
    case ErrorCode::kKernelExceedsChart: return "kernel_exceeds_chart";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kUnsupported: return "unsupported";
    case ErrorCode::kNoConvergence: return "no_convergence";
    case ErrorCode::kNonInvertible: return "non_invertible";
    case ErrorCode::kInfeasible: return "infeasible";
    case ErrorCode::kCapExceeded: return "cap_exceeded";
    case ErrorCode::kSupportMismatch: return "support_mismatch";
    case ErrorCode::kVerification: return "verification";
    case ErrorCode::kSchema: return "schema";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

}  // namespace curvlab
