#pragma once

#include "phasespace/distributions.hpp"
#include "phasespace/energy_bounds.hpp"
#include "phasespace/errors.hpp"
#include "phasespace/gardner_restack.hpp"
#include "phasespace/matrix_core.hpp"
#include "phasespace/verify.hpp"
#include "phasespace/williamson.hpp"
