#pragma once

#include "psm/solvers/analytic.hpp"
#include "psm/solvers/diagnostics.hpp"
#include "psm/solvers/flow.hpp"
#include "psm/solvers/lbfgs.hpp"
#include "psm/solvers/newton.hpp"
#include "psm/solvers/report.hpp"
