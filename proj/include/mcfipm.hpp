#pragma once

#include "mcfipm/active_set.hpp"
#include "mcfipm/amg.hpp"
#include "mcfipm/bench.hpp"
#include "mcfipm/diagnostics.hpp"
#include "mcfipm/dimacs.hpp"
#include "mcfipm/errors.hpp"
#include "mcfipm/generators.hpp"
#include "mcfipm/ipm.hpp"
#include "mcfipm/krylov.hpp"
#include "mcfipm/network.hpp"
#include "mcfipm/oracle.hpp"
#include "mcfipm/schur.hpp"
#include "mcfipm/sparse.hpp"
