#pragma once

#include "gridloss/covariance.hpp"
#include "gridloss/errors.hpp"
#include "gridloss/graph.hpp"
#include "gridloss/loss.hpp"
#include "gridloss/montecarlo.hpp"
#include "gridloss/optimize.hpp"
#include "gridloss/placement.hpp"
