#pragma once

#include "hsrecon/data_io.hpp"
#include "hsrecon/errors.hpp"
#include "hsrecon/forward_model.hpp"
#include "hsrecon/lrsp.hpp"
#include "hsrecon/metrics.hpp"
#include "hsrecon/solver.hpp"
#include "hsrecon/svt.hpp"
#include "hsrecon/transform.hpp"
#include "hsrecon/types.hpp"
