// Licensed under the Apache License, Version 2.0 (the "License"); you
// may not use this file except in compliance with the License.  You
// may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied.  See the License for the specific language governing
// permissions and limitations under the License.

#pragma once

#include "symforge/matrix.hpp"

namespace symforge {

// S = (A - A^T) / 2. Exactly antisymmetric by construction.
Matrix antisymmetrize(const Matrix& a);

// Adjoint of antisymmetrize: dA = (dS - dS^T) / 2.
Matrix antisymmetrize_adjoint(const Matrix& s_adjoint);

// Matrix exponential by scaling-and-squaring: squarings chosen so that
// ||S||_1 / 2^s <= 0.5, then a 12-term Taylor polynomial. Accurate to
// ~1e-14 at these norms; for antisymmetric S the result is orthogonal.
Matrix mat_exp(const Matrix& s);

// Reverse-mode derivative of mat_exp: given dLoss/dExp(S), returns
// dLoss/dS by running the same scaling-and-squaring recursion backwards.
Matrix mat_exp_adjoint(const Matrix& s, const Matrix& g_adjoint);

struct SymEig {
  Vector eigenvalues;   // descending
  Matrix eigenvectors;  // column i pairs with eigenvalues[i]
  int sweeps = 0;
};

// Cyclic Jacobi for symmetric matrices (input is symmetrized defensively).
// Off-diagonal tolerance 1e-12 relative, hard cap of 100 sweeps.
SymEig sym_eig(const Matrix& c);

// Centered d x d block (or centered d-subvector). Requires size - d even.
Matrix central_crop(const Matrix& m, int64_t d);
Vector central_crop(const Vector& v, int64_t d);

// Adjoint of central_crop: zero-pad back to the larger size.
Vector embed_center(const Vector& v, int64_t big);
Matrix embed_center(const Matrix& m, int64_t big);

}  // namespace symforge
