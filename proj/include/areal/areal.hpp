#pragma once

#include "areal/aim.hpp"
#include "areal/error.hpp"
#include "areal/errors.hpp"
#include "areal/experiment.hpp"
#include "areal/field.hpp"
#include "areal/grid.hpp"
#include "areal/intersection.hpp"
#include "areal/interpolate.hpp"
#include "areal/io.hpp"
#include "areal/regression.hpp"
#include "areal/rng.hpp"
#include "areal/svg.hpp"
