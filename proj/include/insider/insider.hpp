#pragma once

#include "adjoint.hpp"
#include "control.hpp"
#include "csv.hpp"
#include "donsker.hpp"
#include "equilibria.hpp"
#include "errors.hpp"
#include "foc.hpp"
#include "grid.hpp"
#include "hamiltonian.hpp"
#include "information.hpp"
#include "models.hpp"
#include "parallel.hpp"
#include "regression.hpp"
#include "rng.hpp"
#include "sde.hpp"
#include "simulate.hpp"
#include "verification.hpp"
