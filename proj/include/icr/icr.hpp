#pragma once

#include "icr/types.hpp"
#include "icr/model.hpp"
#include "icr/subproblem.hpp"
#include "icr/refinement.hpp"
#include "icr/oracle.hpp"
#include "icr/synth.hpp"
#include "icr/diagnostics.hpp"
