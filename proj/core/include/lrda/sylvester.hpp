#pragma once

#include "lrda/low_rank.hpp"

namespace lrda {

/// Dense direct solve of the Sylvester equation A X + X B = C.
///
/// B is reduced to real Schur form; the transformed system is solved column
/// by column through shifted solves with A, reusing the factorisation while
/// consecutive shifts repeat. Throws when a shifted system is singular
/// (spectra of A and -B intersect) or when the problem exceeds desk scale.
Matrix solve_sylvester(const Matrix& a, const Matrix& b, const Matrix& c);

inline constexpr Index kSylvesterGuard = 4'000'000;  // rows(A) * rows(B)

}  // namespace lrda
