#pragma once

#include "wallsim/error.hpp"
#include "wallsim/potential.hpp"
#include "wallsim/regime.hpp"
#include "wallsim/transport.hpp"
#include "wallsim/discrete_energy.hpp"
#include "wallsim/dynamics.hpp"
#include "wallsim/continuum.hpp"
#include "wallsim/harness.hpp"
#include "wallsim/csv_io.hpp"
