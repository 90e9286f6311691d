#ifndef GNMPPI_GNMPPI_HPP
#define GNMPPI_GNMPPI_HPP

#include "gnmppi/core.hpp"
#include "gnmppi/ggn.hpp"
#include "gnmppi/jacobian.hpp"
#include "gnmppi/mppi.hpp"
#include "gnmppi/problem.hpp"
#include "gnmppi/problems.hpp"
#include "gnmppi/sampling.hpp"
#include "gnmppi/solvers.hpp"
#include "gnmppi/trace.hpp"

#endif  // GNMPPI_GNMPPI_HPP
