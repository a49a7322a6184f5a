#pragma once

#include "bayesdens/error.hpp"
#include "bayesdens/estimator.hpp"
#include "bayesdens/evaluation.hpp"
#include "bayesdens/fit.hpp"
#include "bayesdens/io.hpp"
#include "bayesdens/jacobi.hpp"
#include "bayesdens/mcse.hpp"
#include "bayesdens/model.hpp"
#include "bayesdens/nuts.hpp"
#include "bayesdens/preprocessing.hpp"
#include "bayesdens/rng.hpp"
#include "bayesdens/slice.hpp"
#include "bayesdens/splines.hpp"
