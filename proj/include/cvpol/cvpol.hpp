#pragma once

#include "cvpol/gaussian_state.hpp"
#include "cvpol/stokes.hpp"
#include "cvpol/criteria.hpp"
#include "cvpol/experiment.hpp"
#include "cvpol/config.hpp"
#include "cvpol/spectrum.hpp"
#include "cvpol/validation.hpp"
