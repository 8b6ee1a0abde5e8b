#pragma once

// Simulator and verification harness for particle exchange between two
// correlated, locally-thermal subsystems on small Hilbert spaces.

#include "corrflow/dynamics.hpp"
#include "corrflow/errors.hpp"
#include "corrflow/flow.hpp"
#include "corrflow/fockspace.hpp"
#include "corrflow/io.hpp"
#include "corrflow/matrix.hpp"
#include "corrflow/runner.hpp"
#include "corrflow/scenario.hpp"
#include "corrflow/search.hpp"
#include "corrflow/states.hpp"
