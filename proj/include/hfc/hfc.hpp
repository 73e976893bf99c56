#pragma once

// Everything except the probe suites and report I/O.

#include "hfc/error.hpp"
#include "hfc/linalg.hpp"
#include "hfc/krylov.hpp"
#include "hfc/quadrature.hpp"
#include "hfc/matcalc.hpp"
#include "hfc/symbols.hpp"
#include "hfc/symbol_io.hpp"
#include "hfc/torus.hpp"
#include "hfc/field_io.hpp"
#include "hfc/hodge.hpp"
#include "hfc/quadest.hpp"
#include "hfc/dacorr.hpp"
