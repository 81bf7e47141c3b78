#pragma once

namespace qdlab::tol {

// Single table of default thresholds. Tests and the harness read from here.
inline constexpr double kDrop = 1e-14;           // sparse entries below this are purged
inline constexpr double kIdentity = 1e-10;       // operator identities, commutators
inline constexpr double kProportional = 1e-9;    // X ~ c P scalar fits
inline constexpr double kHermitian = 1e-10;      // relative to ||h||
inline constexpr double kEigResidual = 1e-8;     // ||H psi - E psi||
inline constexpr double kGap = 1e-8;             // spectral cut
inline constexpr double kProjector = 1e-9;       // Pi^2 = Pi = Pi^dagger
inline constexpr double kSlope = 0.5;            // log-log slope margin
inline constexpr double kNoncommuting = 1e-6;    // lower bound for claim-3 pairs
inline constexpr double kExact = 1e-12;          // D-representation identities

}  // namespace qdlab::tol
