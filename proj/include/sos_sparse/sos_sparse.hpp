#pragma once

#include "sos_sparse/error.hpp"
#include "sos_sparse/poly/gaussian_moments.hpp"
#include "sos_sparse/poly/monomial.hpp"
#include "sos_sparse/poly/orthogonal.hpp"
#include "sos_sparse/poly/polynomial.hpp"
#include "sos_sparse/poly/symmetric_tensor.hpp"
#include "sos_sparse/sos/certificate.hpp"
#include "sos_sparse/sos/constraint_system.hpp"
#include "sos_sparse/sos/pseudo_expectation.hpp"
#include "sos_sparse/sos/relaxation.hpp"
#include "sos_sparse/sos/sdp_problem.hpp"
#include "sos_sparse/sos/sdpa.hpp"
#include "sos_sparse/sos/solver.hpp"
#include "sos_sparse/programs/k_sparse.hpp"
#include "sos_sparse/programs/programs.hpp"
#include "sos_sparse/programs/quantifier_elimination.hpp"
#include "sos_sparse/data/dataset.hpp"
#include "sos_sparse/data/diagnostics.hpp"
#include "sos_sparse/data/generate.hpp"
#include "sos_sparse/data/io.hpp"
#include "sos_sparse/estimators/estimators.hpp"
#include "sos_sparse/hardness/hardness.hpp"
