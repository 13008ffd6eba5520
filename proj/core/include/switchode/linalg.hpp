// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 the switchode authors
#pragma once

#include <Eigen/Core>

namespace switchode {

// Matrix exponential by scaling-and-squaring with a Padé(13,13) core.
// Relative accuracy ~1e-13 for the small dense matrices used here (n <= 16).
Eigen::MatrixXd expm(const Eigen::MatrixXd& a);

// Largest real part over the spectrum (dense QR eigensolver).
double spectral_abscissa(const Eigen::MatrixXd& a);

// Modulus of the real part of the second-slowest eigenvalue of a CTMC
// generator (its spectral gap): min |Re lambda| over eigenvalues away from 0.
double spectral_gap(const Eigen::MatrixXd& generator);

// Least-squares solve, usable on singular systems.
Eigen::VectorXd solve_lstsq(const Eigen::MatrixXd& a, const Eigen::VectorXd& b);

// Strong connectivity of the directed graph on strictly positive
// off-diagonal entries.
bool strongly_connected_positive(const Eigen::MatrixXd& m);

}  // namespace switchode
